"""One-dimensional piecewise-linear calibration curves."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from monofair.data import MONOTONICITY
from monofair.errors import NumericError


@dataclass(frozen=True, eq=False)
class CalibratorCurve:
    """Piecewise-linear function through ``(keys[i], values[i])``.

    Outside ``[keys[0], keys[-1]]`` the curve is clamped to the end values.
    The monotonicity tag is trusted by :meth:`eval`; training enforces it and
    :func:`check_monotone` measures it.
    """

    keys: np.ndarray
    values: np.ndarray
    monotonicity: str = "none"

    def __post_init__(self):
        keys = np.array(self.keys, dtype=float)
        values = np.array(self.values, dtype=float)
        if keys.ndim != 1 or keys.size < 1 or keys.shape != values.shape:
            raise ValueError("keys and values must be equal-length 1-d vectors")
        if np.any(np.diff(keys) <= 0):
            raise ValueError("keys must be strictly increasing")
        if self.monotonicity not in MONOTONICITY:
            raise ValueError(f"unknown monotonicity {self.monotonicity!r}")
        keys.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "keys", keys)
        object.__setattr__(self, "values", values)

    def __eq__(self, other):
        return (isinstance(other, CalibratorCurve)
                and self.monotonicity == other.monotonicity
                and np.array_equal(self.keys, other.keys)
                and np.array_equal(self.values, other.values))

    def __len__(self):
        return self.keys.size

    def with_values(self, values) -> "CalibratorCurve":
        return CalibratorCurve(self.keys, values, self.monotonicity)

    def eval(self, x: float) -> float:
        return eval_curve(self, x)

    def __call__(self, x):
        return eval_many(self, x)


def interpolation_weights(keys: np.ndarray, x):
    """Vectorised bracketing: returns ``(lo, hi, w_hi)`` index/weight arrays.

    ``eval = values[lo] + w_hi * (values[hi] - values[lo])``. Points below the
    first key and exact-key hits get ``w_hi == 0``; points at or above the
    last key get ``w_hi == 1``.
    """
    x = np.asarray(x, dtype=float)
    if np.isnan(x).any():
        raise NumericError("cannot evaluate a calibrator at NaN")
    last = keys.size - 1
    if last == 0:
        zeros = np.zeros(x.shape, dtype=np.int64)
        return zeros, zeros, np.zeros(x.shape)
    hi = np.clip(np.searchsorted(keys, x, side="right"), 1, last)
    lo = hi - 1
    xc = np.clip(x, keys[0], keys[-1])
    w_hi = (xc - keys[lo]) / (keys[hi] - keys[lo])
    return lo, hi, w_hi


def eval_many(curve: CalibratorCurve, x) -> np.ndarray:
    lo, hi, w = interpolation_weights(curve.keys, x)
    return _lerp(curve.values[lo], curve.values[hi], w)


def _lerp(a, b, t):
    # Clipping to the segment's range keeps evaluation exactly monotone in x
    # across segment boundaries despite rounding in a + t * (b - a).
    out = np.clip(a + t * (b - a), np.minimum(a, b), np.maximum(a, b))
    return np.where(t >= 1.0, b, out)


def eval_curve(curve: CalibratorCurve, x: float) -> float:
    if isinstance(x, float) and math.isnan(x):
        raise NumericError("cannot evaluate a calibrator at NaN")
    keys, values = curve.keys, curve.values
    if x <= keys[0]:
        return float(values[0])
    if x >= keys[-1]:
        return float(values[-1])
    i = int(np.searchsorted(keys, x, side="right")) - 1
    if x == keys[i]:
        return float(values[i])
    t = (x - keys[i]) / (keys[i + 1] - keys[i])
    return float(_lerp(values[i], values[i + 1], t))


def grad_values(curve: CalibratorCurve, x: float) -> dict:
    """Partial derivatives of ``eval(curve, x)`` with respect to ``values``.

    Returned as ``{keypoint index: weight}``; the weights sum to one.
    """
    if isinstance(x, float) and math.isnan(x):
        raise NumericError("cannot evaluate a calibrator at NaN")
    keys = curve.keys
    last = keys.size - 1
    if x <= keys[0]:
        return {0: 1.0}
    if x >= keys[-1]:
        return {last: 1.0}
    i = int(np.searchsorted(keys, x, side="right")) - 1
    if x == keys[i]:
        return {i: 1.0}
    t = float((x - keys[i]) / (keys[i + 1] - keys[i]))
    return {i: 1.0 - t, i + 1: t}


def check_monotone(curve: CalibratorCurve) -> float:
    """Largest step against the curve's monotonicity tag (0 if satisfied)."""
    if curve.monotonicity == "none" or curve.values.size < 2:
        return 0.0
    steps = np.diff(curve.values)
    if curve.monotonicity == "decreasing":
        steps = -steps
    return float(max(0.0, -steps.min()))
