"""Optimization curves in the complex plane.

A curve is a continuous map t -> gamma(t).  The pole-placement driver only
ships vertical lines gamma(t) = delta + j t; a generic parametric curve is
provided for custom target regions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from scipy.optimize import minimize_scalar


@dataclass(frozen=True)
class VerticalLine:
    """gamma(t) = delta + j t, the curve used for stabilization."""

    delta: float
    continuous: bool = True

    is_vertical = True
    # sigma_max(G(conj(s))) == sigma_max(G(s)) for real systems, so samples
    # at -t are redundant with samples at +t.
    conjugate_symmetric = True

    def point(self, t) -> complex:
        return complex(self.delta, t)

    def distance(self, s) -> float:
        return abs(float(np.real(s)) - self.delta)

    def project(self, s) -> float:
        """Curve parameter of the closest point to ``s``."""
        return float(np.imag(s))

    def side(self, s) -> float:
        """Sign of Re(s) - delta; poles must not change it while tuning."""
        return float(np.sign(float(np.real(s)) - self.delta))


@dataclass(frozen=True)
class ParametricCurve:
    """Generic continuous curve given by an explicit map on [t_min, t_max].

    Distances and projections use a dense parameter grid refined by a local
    bounded minimization, accurate to roughly the grid resolution.
    """

    fn: Callable[[float], complex]
    t_min: float
    t_max: float
    n_grid: int = 10001
    continuous: bool = True

    is_vertical = False
    conjugate_symmetric = False

    def point(self, t) -> complex:
        return complex(self.fn(float(t)))

    def _grid(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_grid)

    def _refine(self, s, t0) -> float:
        h = (self.t_max - self.t_min) / (self.n_grid - 1)
        lo = max(self.t_min, t0 - 2 * h)
        hi = min(self.t_max, t0 + 2 * h)
        res = minimize_scalar(
            lambda t: abs(self.point(t) - s), bounds=(lo, hi), method="bounded"
        )
        return float(res.x)

    def project(self, s) -> float:
        ts = self._grid()
        vals = np.abs(np.array([self.point(t) for t in ts]) - s)
        return self._refine(s, ts[int(np.argmin(vals))])

    def distance(self, s) -> float:
        return abs(self.point(self.project(s)) - s)

    def side(self, s):
        raise NotImplementedError(
            "side-of-curve is only defined for vertical lines"
        )


Curve = Union[VerticalLine, ParametricCurve]


def curve_distance(s, curve: Curve) -> float:
    """min_t |s - gamma(t)|; exact |Re(s) - delta| for vertical lines."""
    return curve.distance(s)
