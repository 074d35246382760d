"""Linear stability of the unit-delay system.

The characteristic function is

    h(lam) = (lam + eps mu_m)(lam + eps mu_p) - eps^2 p e^{-2 lam}

with coupling product p = f'(xi*) g'(r*). For p < -mu_m mu_p a purely
imaginary root i*beta crosses the axis at a unique smallest eps0, with
beta in (0, pi/2); beyond it the crossing repeats at eps_k with
frequency beta + k*pi. The closed form for eps0 comes from eliminating
the trigonometric terms, and is cross-checked here against a direct
two-equation solve.
"""

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import HypothesisViolated, NoConvergence, NoRoot, UnhandledRegime
from .model import Equilibrium


@dataclass(frozen=True)
class CharParams:
    mu_m: float
    mu_p: float
    p: float
    eps: float

    def __post_init__(self):
        if self.mu_m <= 0 or self.mu_p <= 0:
            raise ValueError("decay rates must be positive")
        if self.eps <= 0:
            raise ValueError("eps must be positive")

    @classmethod
    def from_equilibrium(cls, eq: Equilibrium, mu_m, mu_p, eps):
        return cls(mu_m=mu_m, mu_p=mu_p, p=eq.p, eps=eps)


def char_eval(lam, cp: CharParams):
    lam = complex(lam)
    return ((lam + cp.eps * cp.mu_m) * (lam + cp.eps * cp.mu_p)
            - cp.eps ** 2 * cp.p * cmath.exp(-2 * lam))


def char_dlam(lam, cp: CharParams):
    """d/d(lam) of the characteristic function."""
    lam = complex(lam)
    return ((lam + cp.eps * cp.mu_p) + (lam + cp.eps * cp.mu_m)
            + 2 * cp.eps ** 2 * cp.p * cmath.exp(-2 * lam))


def characteristic_root_near(cp: CharParams, lam0, maxiter=80):
    """Newton iteration from lam0; used for root continuation in eps."""
    lam = complex(lam0)
    for _ in range(maxiter):
        step = char_eval(lam, cp) / char_dlam(lam, cp)
        lam -= step
        if abs(step) <= 1e-16 * max(1.0, abs(lam)):
            return lam
    raise NoConvergence("characteristic root iteration stalled at %r" % (lam,))


def _beta_equation_residual(beta, cp: CharParams):
    # cot form: beta^2 - eps^2 mu_m mu_p - eps (mu_m+mu_p) beta cot(2 beta)
    return (beta * beta - cp.eps ** 2 * cp.mu_m * cp.mu_p
            - cp.eps * (cp.mu_m + cp.mu_p) * beta * math.cos(2 * beta) / math.sin(2 * beta))


def solve_beta(cp: CharParams) -> float:
    """Unique beta in (0, pi/2) with beta^2 - eps^2 mu_m mu_p
    = eps (mu_m + mu_p) beta cot(2 beta).

    Solved on the sign-definite form multiplied through by sin(2 beta),
    which removes the cot singularities at both interval ends.
    """
    e, s = cp.eps, cp.mu_m + cp.mu_p
    mm = cp.mu_m * cp.mu_p

    def G(b):
        return (b * b - e * e * mm) * math.sin(2 * b) - e * s * b * math.cos(2 * b)

    lo, hi = 1e-12, math.pi / 2 - 1e-12
    glo, ghi = G(lo), G(hi)
    if glo == 0.0:
        beta = lo
    elif glo * ghi > 0:
        raise NoRoot("no sign change of the beta equation on (0, pi/2)")
    else:
        beta = brentq(G, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)

    res = _beta_equation_residual(beta, cp)
    scale = max(1.0, beta * beta + e * e * mm + abs(e * s * beta))
    if abs(res) > 1e-12 * scale:
        # one safeguard Newton pass on the cot form
        for _ in range(5):
            d = 2 * beta - e * s * (math.cos(2 * beta) / math.sin(2 * beta)
                                    - 2 * beta / math.sin(2 * beta) ** 2)
            beta -= _beta_equation_residual(beta, cp) / d
        res = _beta_equation_residual(beta, cp)
        if abs(res) > 1e-12 * scale:
            raise NoConvergence("beta residual %.3e above tolerance" % res)
    return beta


@dataclass(frozen=True)
class HopfPoint:
    mu_m: float
    mu_p: float
    p: float
    eps0: float
    omega: float          # beta(eps0), the eta-time crossing frequency
    l: float              # quadratic-root quantity of the closed form
    dalpha_deps: float    # transversality value at eps0

    def eps_k(self, k: int) -> float:
        """k-th critical delay scale; eps_0 is the Hopf point itself."""
        if k < 0:
            raise ValueError("k must be nonnegative")
        return self.eps0 * (self.omega + k * math.pi) / self.omega

    def critical_values(self, count: int):
        for k in range(count):
            yield self.eps_k(k)

    def char_params(self, eps=None) -> CharParams:
        return CharParams(self.mu_m, self.mu_p, self.p,
                          self.eps0 if eps is None else eps)


def transversality(eps0, beta, mu_m, mu_p) -> float:
    """d(Re lambda)/d(eps) of the crossing root pair at eps0.

    Always positive in the crossing regime, so roots move rightward in eps.
    """
    num = (2 * beta ** 2 / eps0) * (eps0 ** 2 * (mu_m ** 2 + mu_p ** 2) + 2 * beta ** 2)
    den = ((eps0 * (mu_m + mu_p) + 2 * eps0 ** 2 * mu_m * mu_p - 2 * beta ** 2) ** 2
           + (2 * beta + 2 * beta * eps0 * (mu_m + mu_p)) ** 2)
    return num / den


def _validate_hopf(hp: HopfPoint):
    cp = hp.char_params()
    beta, e = hp.omega, hp.eps0
    res1 = _beta_equation_residual(beta, cp)
    res2 = (hp.mu_m + hp.mu_p) * beta + e * hp.p * math.sin(2 * beta)
    scale = max(1.0, beta * beta, abs(e * hp.p))
    if abs(res1) > 1e-9 * scale or abs(res2) > 1e-9 * scale:
        raise NoConvergence("Hopf-point residuals %.3e, %.3e above tolerance"
                            % (res1, res2))
    if abs(e - math.sqrt(hp.l) * beta) > 1e-9 * e:
        raise NoConvergence("closed-form consistency eps0 = sqrt(l) beta failed")
    root = char_eval(1j * beta, cp)
    if abs(root) > 1e-8 * scale:
        raise NoConvergence("i*omega is not a characteristic root: |h| = %.3e" % abs(root))


def solve_hopf(mu_m, mu_p, p) -> HopfPoint:
    """Closed-form Hopf point for the coupling product p < -mu_m mu_p.

    l is the positive root of the eliminated system; the crossing pair is
    +-i beta with tan(2 beta) = sqrt(l)(mu_m+mu_p) / (1 - l mu_m mu_p) on
    the branch with sin(2 beta) > 0, and eps0 = sqrt(l) beta.
    """
    if mu_m <= 0 or mu_p <= 0:
        raise ValueError("decay rates must be positive")
    if mu_m * mu_p >= -p:
        raise HypothesisViolated(
            "mu_m mu_p >= -p (p = %g): no imaginary crossing exists" % p)
    l = ((mu_m ** 2 + mu_p ** 2 + math.sqrt((mu_m ** 2 - mu_p ** 2) ** 2 + 4 * p * p))
         / (2 * (p * p - (mu_m * mu_p) ** 2)))
    # sin(2 beta) > 0 is forced by the sign condition, so atan2 with a
    # positive first argument lands on the right branch
    beta = 0.5 * math.atan2(math.sqrt(l) * (mu_m + mu_p), 1 - l * mu_m * mu_p)
    eps0 = math.sqrt(l) * beta
    hp = HopfPoint(mu_m=mu_m, mu_p=mu_p, p=p, eps0=eps0, omega=beta, l=l,
                   dalpha_deps=transversality(eps0, beta, mu_m, mu_p))
    _validate_hopf(hp)
    return hp


def solve_hopf_direct(mu_m, mu_p, p, eps_hi=1e4) -> HopfPoint:
    """Independent route: solve the two defining equations directly.

    beta(eps) comes from solve_beta for each eps; the Hopf condition is a
    root in eps of S(eps) = (mu_m+mu_p) beta(eps) + eps p sin(2 beta(eps)).
    Used as the cross-check for the closed form.
    """
    if mu_m * mu_p >= -p:
        raise HypothesisViolated(
            "mu_m mu_p >= -p (p = %g): no imaginary crossing exists" % p)

    def S(eps):
        b = solve_beta(CharParams(mu_m, mu_p, p, eps))
        return (mu_m + mu_p) * b + eps * p * math.sin(2 * b)

    lo = 1e-8
    hi = 1.0
    while S(hi) > 0:
        hi *= 4.0
        if hi > eps_hi:
            raise NoRoot("no Hopf crossing found below eps = %g" % eps_hi)
    eps0 = brentq(S, lo, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)
    beta = solve_beta(CharParams(mu_m, mu_p, p, eps0))
    l = (eps0 / beta) ** 2
    hp = HopfPoint(mu_m=mu_m, mu_p=mu_p, p=p, eps0=eps0, omega=beta, l=l,
                   dalpha_deps=transversality(eps0, beta, mu_m, mu_p))
    _validate_hopf(hp)
    return hp


class StabilityKind(str, Enum):
    STABLE_FOR_ALL_EPS = "stable_for_all_eps"
    STABLE_BELOW_EPS0 = "stable_below_eps0"
    UNSTABLE = "unstable"


@dataclass(frozen=True)
class StabilityClassification:
    kind: StabilityKind
    eps0: Optional[float] = None
    hopf: Optional[HopfPoint] = None


def classify_stability(eq: Equilibrium, mu_m, mu_p, eps) -> StabilityClassification:
    """Delay-independent stability, stability below eps0, or instability.

    The repressor regime has p <= 0. Positive p is outside the analyzed
    family and raises UnhandledRegime instead of guessing.
    """
    p = eq.p
    if p > 0:
        raise UnhandledRegime("coupling product p = %g > 0 is not classified" % p)
    if mu_m * mu_p >= -p:
        return StabilityClassification(kind=StabilityKind.STABLE_FOR_ALL_EPS)
    hp = solve_hopf(mu_m, mu_p, p)
    if eps < hp.eps0:
        return StabilityClassification(kind=StabilityKind.STABLE_BELOW_EPS0,
                                       eps0=hp.eps0, hopf=hp)
    return StabilityClassification(kind=StabilityKind.UNSTABLE,
                                   eps0=hp.eps0, hopf=hp)


def winding_count(cp: CharParams, re_range=(0.0, 1.0),
                  im_range=(-math.pi / 2, math.pi / 2),
                  n0=4096, max_doublings=6) -> int:
    """Argument-principle root count of char_eval inside a rectangle.

    Trapezoid sampling of the boundary phase, with the point count doubled
    until two consecutive estimates agree on the same integer.
    """
    re0, re1 = re_range
    im0, im1 = im_range

    def boundary(n):
        seg = np.linspace(0.0, 1.0, n, endpoint=False)
        bottom = re0 + (re1 - re0) * seg + 1j * im0
        right = re1 + 1j * (im0 + (im1 - im0) * seg)
        top = re1 - (re1 - re0) * seg + 1j * im1
        left = re0 + 1j * (im1 - (im1 - im0) * seg)
        return np.concatenate([bottom, right, top, left])

    prev = None
    n = n0
    for _ in range(max_doublings):
        pts = boundary(n)
        vals = np.array([char_eval(z, cp) for z in pts])
        if np.min(np.abs(vals)) < 1e-12 * np.max(np.abs(vals)):
            raise NoConvergence("characteristic value vanishes on the contour")
        ratios = np.angle(np.roll(vals, -1) / vals)
        winding = float(np.sum(ratios) / (2 * math.pi))
        rounded = int(round(winding))
        if abs(winding - rounded) < 0.01 and prev == rounded:
            return rounded
        prev = rounded
        n *= 2
    raise NoConvergence("winding count did not stabilize")
