"""Time-domain integration of the delayed systems.

Method of steps with an explicit Dormand-Prince 5(4) pair and a quartic
dense-output interpolant. Delay lookups always go through the dense
history, never raw sample points; for the state-dependent system every
stage solves its own threshold equation tau = eps + c (x(t) - x(t-tau)).
Steps are capped so no delayed argument lands beyond the dense frontier,
and the first few generations of the initial discontinuity get a step-size
cap near their predicted images rather than exact tracking (the error
control absorbs the residue).
"""

import bisect
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
from scipy.optimize import brentq

from .errors import (DenominatorBreach, HistoryTooShort, IncompatibleData,
                     InsufficientCycles, NoBracket, NoConvergence,
                     SlopeBoundWarning)
from .model import (Equilibrium, ModelParams, rhs_constant_delay, rhs_original,
                    rhs_transformed)

# Dormand-Prince 5(4) tableau with the Shampine quartic interpolant.
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = (
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
)
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920,
               17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608,
     -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933,
     87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304,
     -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408,
     701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883,
     -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY, _MIN_FACTOR, _MAX_FACTOR = 0.9, 0.2, 10.0

STATUS_COMPLETED = "completed"
STATUS_B2 = "b2_violation"
STATUS_BREACH = "denominator_breach"
STATUS_NONFINITE = "nonfinite"
STATUS_STALLED = "stalled"


class _BeyondFrontier(Exception):
    """Internal: a delayed argument fell past the dense-output frontier."""


class _Abort(Exception):
    """Internal: terminate the run with a status instead of raising."""

    def __init__(self, status, t, detail):
        super().__init__(detail)
        self.status = status
        self.t = t
        self.detail = detail


# -- histories ----------------------------------------------------------------

@dataclass(frozen=True)
class InitialHistory:
    """C^1 initial data on [t0 - span, t0], constant-extended further back."""

    value: Callable[[float], np.ndarray]
    derivative: Optional[Callable[[float], np.ndarray]]
    t0: float
    span: float


def constant_history(state, t0=0.0, span=1.0) -> InitialHistory:
    state = np.asarray(state, dtype=float)
    return InitialHistory(value=lambda s: state.copy(),
                          derivative=lambda s: np.zeros_like(state),
                          t0=t0, span=span)


def bump_history(base_state, kick, span, t0=0.0) -> InitialHistory:
    """base + kick * sin^2(pi (s - t0)/span) on [t0 - span, t0].

    The bump and its slope vanish at both ends, so the data starts exactly
    at base with zero derivative: compatible with tau0 = eps by
    construction, while delayed lookups see the perturbation.
    """
    base = np.asarray(base_state, dtype=float)
    kick = np.asarray(kick, dtype=float)
    w = float(span)

    def value(s):
        s = max(s, t0 - w)
        phase = math.pi * (s - t0) / w
        return base + kick * math.sin(phase) ** 2

    def derivative(s):
        if s < t0 - w:
            return np.zeros_like(base)
        phase = math.pi * (s - t0) / w
        return kick * (math.pi / w) * math.sin(2 * phase)

    return InitialHistory(value=value, derivative=derivative, t0=t0, span=w)


class History:
    """Dense solution history: initial data plus accepted-step interpolants."""

    def __init__(self, initial: InitialHistory):
        self.initial = initial
        self.t0 = initial.t0
        self.frontier = initial.t0
        self._ends: List[float] = []
        self._segs: List[tuple] = []     # (t_old, h, y_old, Q)
        probe = np.array([initial.value(initial.t0 - initial.span * k / 64)[0]
                          for k in range(65)])
        self.x_min = float(np.min(probe))
        self.x_max = float(np.max(probe))

    def append(self, t_old, h, y_old, K):
        Q = K.T @ _P
        self._segs.append((t_old, h, y_old.copy(), Q))
        self._ends.append(t_old + h)
        self.frontier = t_old + h
        y_new = self.eval(self.frontier)
        self.x_min = min(self.x_min, float(y_new[0]))
        self.x_max = max(self.x_max, float(y_new[0]))

    def x_span(self) -> float:
        return self.x_max - self.x_min

    def eval(self, t: float) -> np.ndarray:
        if t > self.frontier + 1e-10 * max(1.0, abs(self.frontier)):
            raise _BeyondFrontier(t)
        if t <= self.t0 or not self._segs:
            return np.asarray(self.initial.value(min(t, self.t0)), dtype=float)
        i = bisect.bisect_left(self._ends, t)
        if i >= len(self._segs):
            i = len(self._segs) - 1
        t_old, h, y_old, Q = self._segs[i]
        x = (t - t_old) / h
        poly = Q[:, 3]
        for j in (2, 1, 0):
            poly = Q[:, j] + x * poly
        return y_old + h * x * poly


# -- threshold-delay solve ------------------------------------------------------

def solve_delay(t, x_now, history: History, params: ModelParams,
                tau_prev=None, events=None) -> float:
    """Solve tau = eps + c (x_now - x(t - tau)) to |residual| <= 1e-12 max(eps, tau).

    Damped fixed-point iteration seeded at the previous stage's tau, with a
    bracketed scalar solve as fallback. The contraction constant is
    c |x'| over the delay interval; when it reaches 1 the root may not be
    unique, which is reported as a SlopeBoundWarning, not an error.
    """
    eps, c = params.eps, params.c
    if c == 0.0:
        return eps

    def x_at(s):
        return float(history.eval(s)[0])

    def g(tau):
        return tau - eps - c * (x_now - x_at(t - tau))

    tau = float(tau_prev) if tau_prev and tau_prev > 0 else eps
    converged = False
    damp = 1.0
    prev_abs = math.inf
    for _ in range(60):
        gv = g(tau)
        if abs(gv) <= 1e-13 * max(eps, tau):
            converged = True
            break
        if abs(gv) >= prev_abs:
            damp = 0.5          # iteration not contracting; damp it
        prev_abs = abs(gv)
        new = tau - damp * gv
        if new <= 0:
            new = 0.5 * tau
        tau = new

    if not converged:
        lo = max(1e-12 * eps, t - history.frontier)
        hi = 10.0 * (eps + c * history.x_span())
        hi = min(hi, t - (history.t0 - history.initial.span) + 10 * eps)
        try:
            glo, ghi = g(max(lo, 1e-12 * eps)), g(hi)
        except _BeyondFrontier:
            raise
        if glo * ghi > 0:
            raise NoBracket("no sign change of the threshold equation on "
                            "(%.3g, %.3g] at t = %.6g" % (lo, hi, t))
        tau = brentq(g, max(lo, 1e-12 * eps), hi, xtol=1e-15, rtol=8.9e-16)
        if abs(g(tau)) > 1e-12 * max(eps, tau):
            raise NoConvergence("threshold residual %.3e at t = %.6g"
                                % (g(tau), t))

    # uniqueness bound: c |x'| < 1 near the solution
    delta = 1e-6 * max(eps, tau)
    try:
        slope = (x_at(t - tau + delta) - x_at(t - tau - delta)) / (2 * delta)
        if c * abs(slope) >= 1.0:
            warnings.warn("c|x'| = %.3f >= 1 at t = %.6g; threshold root "
                          "may be non-unique" % (c * abs(slope), t),
                          SlopeBoundWarning)
            if events is not None:
                events.append({"t": t, "kind": "slope_bound",
                               "detail": float(c * abs(slope))})
    except _BeyondFrontier:
        pass
    return tau


# -- compatibility -------------------------------------------------------------

@dataclass(frozen=True)
class CompatibilityReport:
    """Residuals of the three conditions tying initial data to the model:
    both state equations at t0- and the threshold equation for tau0."""

    residual_x: float
    residual_y: float
    residual_tau: float
    tol: float

    @property
    def passed(self) -> bool:
        return (abs(self.residual_x) <= self.tol
                and abs(self.residual_y) <= self.tol
                and abs(self.residual_tau) <= self.tol)


def check_compatibility(history: InitialHistory, tau0, params: ModelParams,
                        tol=1e-8) -> CompatibilityReport:
    if tau0 > history.span:
        raise HistoryTooShort("tau0 = %g exceeds the covered span %g"
                              % (tau0, history.span))
    t0 = history.t0
    now = np.asarray(history.value(t0), dtype=float)
    back = np.asarray(history.value(t0 - tau0), dtype=float)
    if history.derivative is not None:
        slope = np.asarray(history.derivative(t0), dtype=float)
    else:
        h = 1e-6 * max(tau0, 1.0)
        slope = (3 * np.asarray(history.value(t0), float)
                 - 4 * np.asarray(history.value(t0 - h), float)
                 + np.asarray(history.value(t0 - 2 * h), float)) / (2 * h)
    (dx, dy), _ = rhs_original(now, back, tau0, params)
    scale = max(1.0, abs(dx), abs(dy), params.eps)
    return CompatibilityReport(
        residual_x=(slope[0] - dx) / scale,
        residual_y=(slope[1] - dy) / scale,
        residual_tau=(tau0 - params.eps - params.c * (now[0] - back[0])) / max(1.0, params.eps),
        tol=tol)


# -- trajectories ---------------------------------------------------------------

@dataclass
class Trajectory:
    kind: str                  # "original" | "transformed" | "constant_delay"
    t: np.ndarray
    states: np.ndarray         # shape (n, 2)
    delay: np.ndarray          # tau(t) or k(eta)
    status: str
    events: List[dict]
    monitors: dict
    history: History
    t_final: float

    @property
    def columns(self):
        return ("t", "x", "y", "tau") if self.kind == "original" else ("eta", "r", "xi", "k")


def _error_norm(err, y_old, y_new, rtol, atol):
    scale = atol + rtol * np.maximum(np.abs(y_old), np.abs(y_new))
    return float(np.sqrt(np.mean((err / scale) ** 2)))


class _StepDriver:
    """Shared embedded-pair loop; the two systems plug in their stage RHS.

    fixed_h disables error control (every step accepted at that size,
    still capped by the frontier rules); used for order studies.
    """

    def __init__(self, eval_stage, t0, y0, t_end, rtol, atol, h0, max_steps,
                 fixed_h=None):
        self.eval_stage = eval_stage      # (t, y) -> (f, delay_value)
        self.t = t0
        self.y = np.asarray(y0, dtype=float)
        self.t_end = t_end
        self.rtol, self.atol = rtol, atol
        self.h = fixed_h if fixed_h else h0
        self.max_steps = max_steps
        self.fixed_h = fixed_h

    def run(self, history: History, cap_h, on_accept):
        f_now, delay_now = self.eval_stage(self.t, self.y)
        if not np.all(np.isfinite(f_now)):
            raise _Abort(STATUS_NONFINITE, self.t, "nonfinite initial slope")
        K = np.empty((7, 2))
        steps = 0
        while self.t < self.t_end - 1e-12 * max(1.0, abs(self.t_end)):
            if steps >= self.max_steps:
                raise NoConvergence("step budget exhausted at t = %.6g" % self.t)
            h = min(self.h, self.t_end - self.t)
            h = cap_h(self.t, h, delay_now)
            accepted = False
            while not accepted:
                steps += 1
                if h <= 1e-12 * max(1.0, abs(self.t)):
                    # forced singularity in the feedback, typically the
                    # repression pole swept by non-positive initial data
                    raise _Abort(STATUS_STALLED, self.t,
                                 "step size underflow at t = %.6g" % self.t)
                try:
                    K[0] = f_now
                    for i in range(1, 6):
                        t_s = self.t + _C[i] * h
                        y_s = self.y + h * (_A[i] @ K[:i])
                        K[i], _ = self.eval_stage(t_s, y_s)
                    y_new = self.y + h * (_B @ K[:6])
                    t_new = self.t + h
                    f_new, delay_new = self.eval_stage(t_new, y_new)
                    K[6] = f_new
                except _BeyondFrontier:
                    h *= 0.5
                    continue
                if not (np.all(np.isfinite(K)) and np.all(np.isfinite(y_new))):
                    raise _Abort(STATUS_NONFINITE, self.t,
                                 "state or slope became nonfinite")
                err = 0.0 if self.fixed_h else \
                    _error_norm(h * (_E @ K), self.y, y_new, self.rtol, self.atol)
                if err <= 1.0:
                    accepted = True
                    factor = _MAX_FACTOR if err == 0.0 else \
                        min(_MAX_FACTOR, _SAFETY * err ** -0.2)
                    history.append(self.t, h, self.y, K)
                    on_accept(self.t, h, self.y, y_new, K, delay_new)
                    self.t, self.y, f_now, delay_now = t_new, y_new, f_new, delay_new
                    self.h = self.fixed_h if self.fixed_h else h * factor
                else:
                    h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)
        return self.t


def _sample(history: History, sample_times, t_reached):
    ts = np.asarray(sample_times, dtype=float)
    ts = ts[ts <= t_reached + 1e-10 * max(1.0, abs(t_reached))]
    states = np.array([history.eval(t) for t in ts]) if len(ts) else np.empty((0, 2))
    return ts, states


def integrate_sdd(history: InitialHistory, tau0, params: ModelParams, t_end,
                  rtol=1e-8, atol=1e-9, sample_times=None, force=False,
                  compat_tol=1e-8, max_steps=2_000_000, fixed_h=None) -> Trajectory:
    """Integrate the original threshold-delay system from C^1 initial data.

    Every stage solves its own threshold equation against the dense
    history. x' >= 1/c at any stage ends the run with status b2_violation
    (the delay law degenerates there); positivity and slope monitors are
    recorded per accepted step.
    """
    report = check_compatibility(history, tau0, params, tol=compat_tol)
    if not report.passed and not force:
        raise IncompatibleData("compatibility residuals (%.2e, %.2e, %.2e) "
                               "exceed %g" % (report.residual_x, report.residual_y,
                                              report.residual_tau, compat_tol))
    hist = History(history)
    events: List[dict] = []
    f_map = params.nonlinearity.f
    dx_bound = min(1.0 / params.c if params.c > 0 else math.inf,
                   f_map.value(0.0) if f_map.value(0.0) > 0 else math.inf)
    monitors = {"min_x": math.inf, "min_y": math.inf, "min_tau": math.inf,
                "max_dx": -math.inf, "dx_bound": dx_bound,
                "max_threshold_residual": 0.0}
    tau_hint = [tau0]

    def eval_stage(t, y):
        tau = solve_delay(t, y[0], hist, params, tau_prev=tau_hint[0],
                          events=events)
        tau_hint[0] = tau
        delayed = hist.eval(t - tau)
        try:
            (dx, dy), resid = rhs_original(y, delayed, tau, params)
        except OverflowError:
            raise _Abort(STATUS_NONFINITE, t, "feedback overflow")
        if params.c > 0 and dx >= 1.0 / params.c:
            raise _Abort(STATUS_B2, t, "x' = %.4g >= 1/c" % dx)
        monitors["max_threshold_residual"] = max(
            monitors["max_threshold_residual"], abs(resid))
        return np.array([dx, dy]), tau

    # image of the initial discontinuity point and its first generations
    pending = [[history.t0, 0]]

    def cap_h(t, h, tau_now):
        h = min(h, 0.85 * tau_now)
        while pending and t - tau_now >= pending[0][0] - 1e-12:
            b, gen = pending.pop(0)
            if gen < 3:
                pending.append([t, gen + 1])
        if pending:
            image = pending[0][0] + tau_now
            if t < image < t + h:
                h = max(image - t, 1e-3 * tau_now)
        return h

    positive = [True]

    def on_accept(t_old, h, y_old, y_new, K, tau_new):
        monitors["min_x"] = min(monitors["min_x"], float(y_new[0]))
        monitors["min_y"] = min(monitors["min_y"], float(y_new[1]))
        monitors["min_tau"] = min(monitors["min_tau"], float(tau_new))
        monitors["max_dx"] = max(monitors["max_dx"], float(np.max(K[:, 0])))
        now_positive = y_new[0] > 0 and y_new[1] > 0
        if positive[0] and not now_positive:
            events.append({"t": t_old + h, "kind": "positivity",
                           "detail": (float(y_new[0]), float(y_new[1]))})
        positive[0] = now_positive

    y0 = np.asarray(history.value(history.t0), dtype=float)
    driver = _StepDriver(eval_stage, history.t0, y0, t_end, rtol, atol,
                         h0=min(0.1 * tau0, t_end - history.t0),
                         max_steps=max_steps, fixed_h=fixed_h)
    status = STATUS_COMPLETED
    try:
        t_reached = driver.run(hist, cap_h, on_accept)
    except _Abort as stop:
        status = stop.status
        t_reached = hist.frontier
        events.append({"t": stop.t, "kind": status, "detail": stop.detail})

    if sample_times is None:
        sample_times = np.linspace(history.t0, t_reached, 513)
    ts, states = _sample(hist, sample_times, t_reached)
    taus = np.array([solve_delay(t, s[0], hist, params, tau_prev=tau_hint[0])
                     for t, s in zip(ts, states)]) if len(ts) else np.empty(0)
    return Trajectory(kind="original", t=ts, states=states, delay=taus,
                      status=status, events=events, monitors=monitors,
                      history=hist, t_final=t_reached)


def integrate_transformed(history: InitialHistory, params: ModelParams, eta_end,
                          constant_delay=False, rtol=1e-8, atol=1e-9,
                          sample_times=None, raise_on_breach=True,
                          max_steps=2_000_000, fixed_h=None) -> Trajectory:
    """Integrate the unit-delay system (or its c = 0 reduction).

    Initial data covers [t0 - 1, t0]. The first three unit breakpoints are
    hit exactly. A denominator breach either raises (default) or ends the
    run with a status, so basin scans can keep the partial trajectory.
    """
    if history.span < 1.0 - 1e-12:
        raise HistoryTooShort("transformed system needs one delay unit of data")
    hist = History(history)
    events: List[dict] = []
    monitors = {"min_r": math.inf, "min_xi": math.inf, "min_denominator": math.inf}
    rhs = rhs_constant_delay if constant_delay else rhs_transformed

    def eval_stage(t, y):
        delayed = hist.eval(t - 1.0)
        try:
            dr, dxi, k = rhs(y, delayed, params)
        except OverflowError:
            raise _Abort(STATUS_NONFINITE, t, "feedback overflow")
        except DenominatorBreach as exc:
            if raise_on_breach:
                raise
            raise _Abort(STATUS_BREACH, t, str(exc))
        return np.array([dr, dxi]), k

    t0 = history.t0
    breakpoints = [t0 + 1.0, t0 + 2.0, t0 + 3.0]

    def cap_h(t, h, _delay):
        h = min(h, 1.0)
        while breakpoints and t >= breakpoints[0] - 1e-9:
            breakpoints.pop(0)
        if breakpoints and t + h > breakpoints[0]:
            h = breakpoints[0] - t
        return h

    positive = [True]

    def on_accept(t_old, h, y_old, y_new, K, k_new):
        monitors["min_r"] = min(monitors["min_r"], float(y_new[0]))
        monitors["min_xi"] = min(monitors["min_xi"], float(y_new[1]))
        if not constant_delay and params.c > 0:
            try:
                back = hist.eval(t_old + h - 1.0)
                drive = -params.mu_m * y_new[0] + params.nonlinearity.f.value(back[1])
                monitors["min_denominator"] = min(monitors["min_denominator"],
                                                  1.0 - params.c * drive)
            except OverflowError:
                pass
        now_positive = y_new[0] > 0 and y_new[1] > 0
        if positive[0] and not now_positive:
            events.append({"t": t_old + h, "kind": "positivity",
                           "detail": (float(y_new[0]), float(y_new[1]))})
        positive[0] = now_positive

    y0 = np.asarray(history.value(t0), dtype=float)
    driver = _StepDriver(eval_stage, t0, y0, eta_end, rtol, atol,
                         h0=min(0.1, eta_end - t0), max_steps=max_steps,
                         fixed_h=fixed_h)
    status = STATUS_COMPLETED
    try:
        t_reached = driver.run(hist, cap_h, on_accept)
    except _Abort as stop:
        status = stop.status
        t_reached = hist.frontier
        events.append({"t": stop.t, "kind": status, "detail": stop.detail})

    if sample_times is None:
        sample_times = np.linspace(t0, t_reached, 513)
    ts, states = _sample(hist, sample_times, t_reached)
    if len(ts):
        delayed_r = np.array([hist.eval(t - 1.0)[0] for t in ts])
        ks = params.eps + params.c * (states[:, 0] - delayed_r) \
            if not constant_delay else np.full(len(ts), params.eps)
    else:
        ks = np.empty(0)
    return Trajectory(kind="transformed" if not constant_delay else "constant_delay",
                      t=ts, states=states, delay=ks, status=status,
                      events=events, monitors=monitors, history=hist,
                      t_final=t_reached)


# -- oscillation measurement -----------------------------------------------------

@dataclass(frozen=True)
class OscillationSummary:
    amplitude: float
    period: float
    decay_rate: float     # positive = contracting toward the mean
    n_extrema: int
    mean: float


def _refine_extremum(t, v, i):
    """Parabola through three samples around a discrete extremum."""
    if i == 0 or i == len(v) - 1:
        return t[i], v[i]
    denom = (v[i - 1] - 2 * v[i] + v[i + 1])
    if denom == 0:
        return t[i], v[i]
    delta = 0.5 * (v[i - 1] - v[i + 1]) / denom
    delta = max(-1.0, min(1.0, delta))
    dt = t[i + 1] - t[i]
    return t[i] + delta * dt, v[i] - 0.25 * (v[i - 1] - v[i + 1]) * delta


def measure_oscillation(traj: Trajectory, component=0,
                        transient_fraction=0.5) -> OscillationSummary:
    """Amplitude, period, and decay rate of one state component.

    Works on the sampled trajectory: the tail past the transient cutoff is
    centered on its mean; the period comes from interpolated upward zero
    crossings, the decay rate from a log-linear fit through the extremum
    magnitudes (positive slope of -log means contraction).
    """
    t, v = traj.t, traj.states[:, component]
    if len(t) < 8:
        raise InsufficientCycles("trajectory has too few samples")
    cut = t[0] + transient_fraction * (t[-1] - t[0])
    sel = t >= cut
    t, v = t[sel], v[sel]
    dev = v - np.mean(v)
    if np.max(np.abs(dev)) <= 1e-9 * max(1.0, abs(np.mean(v))):
        raise InsufficientCycles("deviation below the measurement floor")

    d = np.diff(dev)
    idx = np.where(d[:-1] * d[1:] < 0)[0] + 1
    if len(idx) < 3:
        raise InsufficientCycles("%d extrema after transient cutoff" % len(idx))
    refined = [_refine_extremum(t, dev, i) for i in idx]
    pt = np.array([r[0] for r in refined])
    pv = np.array([r[1] for r in refined])

    up = np.where((dev[:-1] < 0) & (dev[1:] >= 0))[0]
    if len(up) >= 2:
        cross = t[up] - dev[up] * (t[up + 1] - t[up]) / (dev[up + 1] - dev[up])
        period = float(np.mean(np.diff(cross)))
    else:
        period = 2.0 * float(np.mean(np.diff(pt)))

    window = pv[-6:] if len(pv) >= 6 else pv
    amplitude = 0.5 * float(np.max(window) - np.min(window))

    mags = np.abs(pv)
    usable = mags > 1e-300
    if np.count_nonzero(usable) >= 3:
        slope = np.polyfit(pt[usable], np.log(mags[usable]), 1)[0]
        decay = -float(slope)
    else:
        decay = math.inf
    return OscillationSummary(amplitude=amplitude, period=period,
                              decay_rate=decay, n_extrema=len(idx),
                              mean=float(np.mean(v)))


# -- regime classification helpers ------------------------------------------------

def _tail_mean_deviation(traj: Trajectory, ref, component=0, window=0.25):
    t = traj.t
    if len(t) == 0:
        return math.inf
    cut = t[-1] - window * (t[-1] - t[0])
    sel = t >= cut
    return float(np.mean(np.abs(traj.states[sel, component] - ref[component])))


def run_perturbed(params: ModelParams, eq: Equilibrium, kick_scale,
                  eta_end=400.0, rtol=1e-7, atol=1e-8, n_samples=2048) -> Trajectory:
    """Transformed-system run from an equilibrium bump of relative size
    kick_scale (negative values kick toward and past zero)."""
    kick = kick_scale * eq.state
    hist = bump_history(eq.state, kick, span=1.0)
    return integrate_transformed(hist, params, eta_end, rtol=rtol, atol=atol,
                                 sample_times=np.linspace(0.0, eta_end, n_samples),
                                 raise_on_breach=False)


def classify_run(traj: Trajectory, eq: Equilibrium, kick_scale) -> str:
    """'decaying' | 'oscillating' | 'growing' | 'escaped' for one run."""
    if traj.status != STATUS_COMPLETED:
        return "escaped"
    kick_size = abs(kick_scale) * eq.state[0]
    tail = _tail_mean_deviation(traj, eq.state)
    if tail > max(kick_size, 0.5 * eq.state[0]):
        return "escaped"
    try:
        osc = measure_oscillation(traj)
    except InsufficientCycles:
        return "decaying" if tail < 0.1 * kick_size else "escaped"
    rate_floor = 0.005 / max(osc.period, 1e-9)   # half a percent per cycle
    if osc.decay_rate > rate_floor:
        return "decaying"
    if osc.decay_rate < -rate_floor:
        return "growing"
    return "oscillating"


def classify_dynamics(params: ModelParams, eq: Equilibrium,
                      small_kick=0.05, probe_scales=(0.25, 0.5, 1.0),
                      eta_end=400.0, rtol=1e-7) -> str:
    """Cell label: 'stable' | 'metastable' | 'oscillating' | 'unstable'.

    A small same-side kick probes the local regime. The basin probe kicks
    toward the positivity edge (scale 1 grazes zero); escape inside that
    ladder means the basin boundary sits within physically admissible
    perturbations, marking a locally stable cell metastable and a locally
    oscillating one unstable.
    """
    small = classify_run(run_perturbed(params, eq, small_kick, eta_end, rtol),
                         eq, small_kick)
    basin_ok = True
    for scale in probe_scales:
        label = classify_run(run_perturbed(params, eq, -scale,
                                           min(eta_end, 300.0), rtol),
                             eq, -scale)
        if label == "escaped":
            basin_ok = False
            break
    if small == "decaying":
        return "stable" if basin_ok else "metastable"
    return "oscillating" if basin_ok else "unstable"


def escape_sweep(params: ModelParams, eq: Equilibrium, start_scale=0.1,
                 factor=2.0, max_steps=14, eta_end=300.0, rtol=1e-7):
    """Double a negative-side kick until the run escapes the basin.

    Returns (threshold_scale_or_None, records); each record is
    (scale, classification).
    """
    records = []
    scale = start_scale
    for _ in range(max_steps):
        label = classify_run(run_perturbed(params, eq, -scale, eta_end, rtol),
                             eq, -scale)
        records.append((scale, label))
        if label == "escaped":
            return scale, records
        scale *= factor
    return None, records
