"""Modified Gompertz growth curve: evaluation and analytic properties.

The curve is

    od(t) = n0 + d * exp(-exp(1 + mu * e * (lam - t) / d))

with amplitude ``d`` (OD600), maximum specific growth rate ``mu``
(OD600/h, the slope at the inflection point) and lag time ``lam`` (h,
the intercept of the inflection tangent with the od = n0 baseline).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "GompertzParams",
    "GrowthPoint",
    "gompertz_eval",
    "gompertz_curve",
    "inflection_time",
]

# Amplitudes below this are numerically singular (0/0 in the exponent).
MIN_AMPLITUDE = 1e-9

# exp(-exp(x)) underflows to exactly 0.0 long before x reaches 700, so
# clipping the inner exponent here changes no representable result while
# avoiding overflow in the outer exp.
_INNER_CLIP = 700.0


@dataclass(frozen=True)
class GompertzParams:
    """One growth curve: amplitude ``d`` (OD600), max specific growth
    rate ``mu`` (OD600/h), lag time ``lam`` (h)."""

    d: float
    mu: float
    lam: float

    def __post_init__(self):
        for name in ("d", "mu", "lam"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ValueError(f"{name} must be a finite number, got {value!r}")
        if self.d <= MIN_AMPLITUDE:
            raise ValueError(f"amplitude d must exceed {MIN_AMPLITUDE}, got {self.d}")
        if self.mu <= 0.0:
            raise ValueError(f"growth rate mu must be positive, got {self.mu}")
        if self.lam < 0.0:
            raise ValueError(f"lag time lam must be non-negative, got {self.lam}")


@dataclass(frozen=True)
class GrowthPoint:
    """A single observation: time ``t`` (h) and optical density ``od``."""

    t: float
    od: float

    def __post_init__(self):
        if not math.isfinite(self.t) or self.t < 0.0:
            raise ValueError(f"t must be finite and non-negative, got {self.t!r}")
        if not math.isfinite(self.od) or self.od < 0.0:
            raise ValueError(f"od must be finite and non-negative, got {self.od!r}")


def _od_array(times: np.ndarray, n0: float, d: float, mu: float, lam: float) -> np.ndarray:
    """Vectorised curve evaluation used by the curve, likelihood and twin code."""
    inner = 1.0 + mu * math.e * (lam - times) / d
    return n0 + d * np.exp(-np.exp(np.minimum(inner, _INNER_CLIP)))


def gompertz_eval(t: float, n0: float, params: GompertzParams) -> float:
    """Optical density at time ``t`` for a culture starting at ``n0``.

    Negative ``t`` is permitted (the curve is analytic); the result lies
    in (n0, n0 + d) up to floating-point underflow at the asymptotes.
    """
    if not math.isfinite(t):
        raise ValueError(f"t must be finite, got {t!r}")
    if not math.isfinite(n0) or n0 < 0.0:
        raise ValueError(f"n0 must be finite and non-negative, got {n0!r}")
    inner = 1.0 + params.mu * math.e * (params.lam - t) / params.d
    return n0 + params.d * math.exp(-math.exp(min(inner, _INNER_CLIP)))


def gompertz_curve(
    times: Sequence[float], n0: float, params: GompertzParams
) -> list[GrowthPoint]:
    """Evaluate the curve on a strictly increasing time grid.

    Returns one GrowthPoint per time; od is non-decreasing along the grid.
    """
    times = np.asarray(times, dtype=float)
    if times.size == 0:
        return []
    if times.ndim != 1:
        raise ValueError("times must be a one-dimensional sequence")
    if not np.all(np.isfinite(times)):
        raise ValueError("times must be finite")
    if np.any(np.diff(times) <= 0.0):
        raise ValueError("times must be strictly increasing")
    if not math.isfinite(n0) or n0 < 0.0:
        raise ValueError(f"n0 must be finite and non-negative, got {n0!r}")
    ods = _od_array(times, n0, params.d, params.mu, params.lam)
    return [GrowthPoint(float(t), float(od)) for t, od in zip(times, ods)]


def inflection_time(params: GompertzParams) -> float:
    """Time of maximal slope: lam + d / (mu * e).

    At this t the inner exponent is zero and the slope equals mu.
    """
    return params.lam + params.d / (params.mu * math.e)
