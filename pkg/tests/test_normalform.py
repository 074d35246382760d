"""Amplitude-equation coefficients: pinned values, closed-vs-direct routes,
and the constant-delay reduction as an external cross-check."""

import numpy as np
import pytest

import refvals as RV
from sddhopf import (Direction, ResonanceViolation,
                     analyze_normal_form, classify_direction, critical_c,
                     critical_frame, find_equilibrium, hes1_params,
                     kappa3_quadratic, normal_form, normal_form_constant_delay,
                     quadratic_coeffs, quadratic_coeffs_closed_form,
                     quadratic_coeffs_direct, solve_hopf)


def test_frame_solves_the_eigenproblem(frame):
    w, e = frame.omega, frame.eps0
    A = 1j * w * np.eye(2) - e * frame.M - e * frame.N * np.exp(-1j * w)
    assert np.linalg.norm(A @ frame.theta) < 1e-10
    assert np.linalg.norm(A.conj().T @ frame.d) < 1e-10
    # adjoint normalization
    assert frame.d.conj() @ frame.theta == pytest.approx(1.0, abs=1e-12)


def test_frame_matches_pinned_values(frame):
    assert frame.theta[0] == 1.0
    assert frame.theta[1] == pytest.approx(RV.THETA2, rel=1e-12)
    assert frame.d[0] == pytest.approx(RV.D1, rel=1e-12)
    assert frame.d[1] == pytest.approx(RV.D2, rel=1e-10)


@pytest.mark.parametrize("c", [0.0, 0.01])
def test_second_order_coefficients_match_pinned(eq, hopf, frame, c):
    qc = quadratic_coeffs(eq, hopf, frame, c)
    a1, a2 = RV.A_COEFF[c]
    b1, b2 = RV.B_COEFF[c]
    assert qc.a1 == pytest.approx(a1, rel=1e-11)
    assert qc.a2 == pytest.approx(a2, rel=1e-11)
    assert qc.b1 == pytest.approx(b1, rel=1e-11)
    assert qc.b2 == pytest.approx(b2, rel=1e-11)


def test_direct_and_closed_routes_agree_on_random_sets():
    rng = np.random.default_rng(20260817)
    checked = 0
    draws = 0
    while checked < 100 and draws < 400:
        draws += 1
        mu_m = 10.0 ** rng.uniform(-2.3, -0.6)
        mu_p = 10.0 ** rng.uniform(-2.3, -0.6)
        p = hes1_params(c=rng.uniform(0.0, 0.3), eps=1.0,
                        mu_m=mu_m, mu_p=mu_p,
                        alpha_m=rng.uniform(5.0, 100.0),
                        alpha_p=rng.uniform(1.0, 30.0),
                        ybar=rng.uniform(300.0, 5000.0),
                        h=float(rng.choice([3, 5, 7])))
        try:
            eq = find_equilibrium(p)
            hp = solve_hopf(mu_m, mu_p, eq.f1 * eq.g1)
            fr = critical_frame(eq, hp)
            qd = quadratic_coeffs_direct(eq, hp, fr, p.c)
            qc = quadratic_coeffs_closed_form(eq, hp, fr, p.c)
        except Exception:
            continue
        da = np.array([qd.a1, qd.a2, qd.b1, qd.b2])
        ca = np.array([qc.a1, qc.a2, qc.b1, qc.b2])
        rel = np.max(np.abs(da - ca)) / np.max(np.abs(da))
        assert rel < 1e-8, "set %d: rel %.3e" % (draws, rel)
        checked += 1
    assert checked == 100, "only %d of %d draws were usable" % (checked, draws)


@pytest.mark.parametrize("c", [0.0, 0.01, 0.05])
def test_cubic_coefficient_matches_pinned(eq, hopf, frame, c):
    qc = quadratic_coeffs(eq, hopf, frame, c)
    nf = normal_form(eq, hopf, frame, qc, c=c)
    assert nf.kappa1 == pytest.approx(RV.KAPPA1, rel=1e-12)
    assert nf.kappa3 == pytest.approx(RV.KAPPA3[c], rel=1e-10)


def test_cubic_coefficient_is_quadratic_in_c(eq, hopf, frame):
    poly = kappa3_quadratic(eq, hopf, frame)
    # exact three-point fit of the pinned values, highest degree first
    cs = sorted(RV.KAPPA3)
    vals = [RV.KAPPA3[c] for c in cs]
    re_fit = np.polyfit(cs, [v.real for v in vals], 2)
    im_fit = np.polyfit(cs, [v.imag for v in vals], 2)
    assert np.allclose(poly.re_coeffs, re_fit, rtol=1e-8)
    assert np.allclose(poly.im_coeffs, im_fit, rtol=1e-8)
    # a fourth point must sit on the same parabola if the dependence
    # really is quadratic
    c4 = 0.03
    qc4 = quadratic_coeffs(eq, hopf, frame, c4)
    k4 = normal_form(eq, hopf, frame, qc4, c=c4).kappa3
    assert np.polyval(poly.re_coeffs, c4) == pytest.approx(k4.real, rel=1e-10)
    assert np.polyval(poly.im_coeffs, c4) == pytest.approx(k4.imag, rel=1e-10)


def test_critical_c_matches_pinned(eq, hopf, frame):
    c0 = critical_c(eq, hopf, frame)
    assert c0 == pytest.approx(RV.C0, rel=1e-10)
    qc = quadratic_coeffs(eq, hopf, frame, c0)
    k3 = normal_form(eq, hopf, frame, qc, c=c0).kappa3
    assert abs(k3.real) < 1e-12


def test_direction_classification():
    assert classify_direction(-1e-3 + 1j) is Direction.SUPERCRITICAL
    assert classify_direction(+1e-3 - 1j) is Direction.SUBCRITICAL
    assert classify_direction(1e-20 - 0.004j) is Direction.DEGENERATE


@pytest.mark.parametrize("c,expected", [
    (0.01, Direction.SUPERCRITICAL),
    (0.025, Direction.SUBCRITICAL),
])
def test_report_direction_flips_across_critical_c(c, expected):
    rep = analyze_normal_form(hes1_params(c=c, eps=6.0))
    assert rep.direction is expected
    assert rep.c == c
    assert rep.c0 == pytest.approx(RV.C0, rel=1e-10)
    assert rep.kappa1 == pytest.approx(RV.KAPPA1, rel=1e-12)


def test_constant_delay_reduction_matches_general_pipeline(eq, hopf, frame):
    qc = quadratic_coeffs(eq, hopf, frame, 0.0)
    general = normal_form(eq, hopf, frame, qc, c=0.0)
    k1_red, k3_red = normal_form_constant_delay(eq, hopf, frame, qc)
    assert k1_red == pytest.approx(general.kappa1, rel=1e-10)
    assert k3_red == pytest.approx(general.kappa3, rel=1e-10)
    with pytest.raises(ValueError):
        normal_form_constant_delay(eq, hopf, frame,
                                   quadratic_coeffs(eq, hopf, frame, 0.01))


def test_near_resonant_double_frequency_is_refused(eq, hopf, frame):
    # the standard set is far from resonance; force the guard by raising
    # its threshold above |h(2 i omega)|
    with pytest.raises(ResonanceViolation, match="2 i omega"):
        quadratic_coeffs(eq, hopf, frame, 0.0, resonance_tol=1.0)
