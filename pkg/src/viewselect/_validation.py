"""Small input validation helpers shared by the public functions."""

import math

import numpy as np

#: Upper limit on the angular error bound (the small-angle bound needs 1 - 4*alpha > 0).
ALPHA_MAX = 0.25


def check_alpha(alpha, name="alpha"):
    alpha = float(alpha)
    if not (0.0 < alpha < ALPHA_MAX):
        raise ValueError(f"{name} must lie in (0, {ALPHA_MAX}), got {alpha!r}")
    return alpha


def check_positive(value, name):
    value = float(value)
    if not (math.isfinite(value) and value > 0.0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    return value


def check_fraction(value, name, upper=1.0):
    value = float(value)
    if not (0.0 <= value < upper):
        raise ValueError(f"{name} must lie in [0, {upper}), got {value!r}")
    return value


def as_point(p, dim=None, name="point"):
    arr = np.asarray(p, dtype=float).reshape(-1)
    if dim is not None and arr.shape != (dim,):
        raise ValueError(f"{name} must have {dim} coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite coordinates")
    return arr
