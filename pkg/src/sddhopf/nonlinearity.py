"""Scalar feedback nonlinearities with closed-form derivatives.

Each map bundles its value with the first three derivatives; the
normal-form stage needs third derivatives, and finite differencing
those is too noisy, so closed forms are required and cross-checked
against high-order difference stencils of the value map.
"""

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class CallableMap:
    """A scalar map with user-supplied derivative callbacks."""

    value: Callable[[float], float]
    d1: Callable[[float], float]
    d2: Callable[[float], float]
    d3: Callable[[float], float]


class LinearMap:
    """g(x) = slope * x."""

    def __init__(self, slope: float):
        self.slope = float(slope)

    def value(self, x):
        return self.slope * x

    def d1(self, x):
        return self.slope if np.isscalar(x) else np.full_like(np.asarray(x, float), self.slope)

    def d2(self, x):
        return 0.0 if np.isscalar(x) else np.zeros_like(np.asarray(x, float))

    def d3(self, x):
        return 0.0 if np.isscalar(x) else np.zeros_like(np.asarray(x, float))


class ZeroMap(LinearMap):
    def __init__(self):
        super().__init__(0.0)


class HillRepressor:
    """Decreasing Hill feedback alpha_m / (1 + (y/ybar)**h).

    Strictly decreasing on y > 0 with values in (0, alpha_m]. For integer
    h the formula extends to negative arguments (odd h has a pole where
    the denominator vanishes, at y = -ybar for h = 5); for non-integer h
    only y >= 0 is usable.
    """

    def __init__(self, alpha_m: float, ybar: float, h: float):
        if ybar <= 0:
            raise ValueError("ybar must be positive")
        if h <= 0:
            raise ValueError("Hill exponent must be positive")
        self.alpha_m = float(alpha_m)
        self.ybar = float(ybar)
        self.h = float(h)

    def _powers(self, y):
        # s = (y/ybar)^h and its y-derivatives
        n, yb = self.h, self.ybar
        s = (y / yb) ** n
        sp = n * y ** (n - 1) / yb ** n
        spp = n * (n - 1) * y ** (n - 2) / yb ** n
        sppp = n * (n - 1) * (n - 2) * y ** (n - 3) / yb ** n
        return s, sp, spp, sppp

    def value(self, y):
        return self.alpha_m / (1.0 + (y / self.ybar) ** self.h)

    def d1(self, y):
        s, sp, _, _ = self._powers(y)
        return -self.alpha_m * sp / (1 + s) ** 2

    def d2(self, y):
        s, sp, spp, _ = self._powers(y)
        return self.alpha_m * (2 * sp ** 2 / (1 + s) ** 3 - spp / (1 + s) ** 2)

    def d3(self, y):
        s, sp, spp, sppp = self._powers(y)
        return self.alpha_m * (-6 * sp ** 3 / (1 + s) ** 4
                               + 6 * sp * spp / (1 + s) ** 3
                               - sppp / (1 + s) ** 2)


@dataclass(frozen=True)
class NonlinearitySpec:
    """The two feedback maps of the model: f drives the x-equation from
    delayed y, g drives the y-equation from delayed x."""

    f: object
    g: object


def hes1_nonlinearity(alpha_m=35.0, ybar=1200.0, h=5.0, alpha_p=10.0) -> NonlinearitySpec:
    """Hill repression onto x, linear production onto y."""
    return NonlinearitySpec(f=HillRepressor(alpha_m, ybar, h), g=LinearMap(alpha_p))


# -- derivative self-check ----------------------------------------------------

def _stencil_d1(v, x, h):
    return (v(x - 2 * h) - 8 * v(x - h) + 8 * v(x + h) - v(x + 2 * h)) / (12 * h)


def _stencil_d2(v, x, h):
    return (-v(x - 2 * h) + 16 * v(x - h) - 30 * v(x)
            + 16 * v(x + h) - v(x + 2 * h)) / (12 * h * h)


def _stencil_d3(v, x, h):
    return (v(x - 3 * h) - 8 * v(x - 2 * h) + 13 * v(x - h)
            - 13 * v(x + h) + 8 * v(x + 2 * h) - v(x + 3 * h)) / (8 * h ** 3)


def validate_derivatives(m, points, step_scale=2e-3):
    """Compare d1..d3 callbacks against 4th-order central differences of
    the value map. Returns {1: err, 2: err, 3: err} with the worst
    relative mismatch per order (identically-zero derivatives are
    compared on an absolute floor tied to the value scale)."""
    worst = {1: 0.0, 2: 0.0, 3: 0.0}
    for x in np.atleast_1d(np.asarray(points, dtype=float)):
        h = step_scale * max(1.0, abs(x))
        vscale = max(1.0, abs(m.value(x)))
        for order, stencil, deriv in ((1, _stencil_d1, m.d1),
                                      (2, _stencil_d2, m.d2),
                                      (3, _stencil_d3, m.d3)):
            fd = stencil(m.value, x, h)
            exact = deriv(x)
            # floor keeps zero derivatives (e.g. linear g) from dividing by 0
            denom = max(abs(exact), 1e-9 * vscale / h ** order)
            worst[order] = max(worst[order], abs(fd - exact) / denom)
    return worst


def derivatives_consistent(m, points, rtol=1e-6, step_scale=2e-3) -> bool:
    errs = validate_derivatives(m, points, step_scale=step_scale)
    return all(e <= rtol for e in errs.values())
