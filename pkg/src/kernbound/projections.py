import math

import numpy as np

from .errors import InputError
from .options import Family


def project_simplex(v: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """
    Euclidean projection onto {w >= 0, sum w = radius}.

    Sort-based: threshold v at the Lagrange multiplier found from the
    cumulative sums of the decreasingly sorted entries.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InputError(f"Expected a non-empty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError("Cannot project a vector with non-finite entries")
    if np.all(v >= 0.0) and v.sum() == radius:
        return v.copy()
    n = v.size
    u = np.sort(v)[::-1]
    cssv = np.cumsum(u)
    last = np.nonzero(u * np.arange(1, n + 1) > (cssv - radius))[0][-1]
    theta = (cssv[last] - radius) / (last + 1)
    w = np.clip(v - theta, 0.0, None)
    return w * (radius / math.fsum(w))


def project_sphere(v: np.ndarray) -> np.ndarray:
    """Clamp to the nonnegative orthant, then normalise; the zero vector maps to uniform weights."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InputError(f"Expected a non-empty vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError("Cannot project a vector with non-finite entries")
    w = np.clip(v, 0.0, None)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        return np.full(v.size, 1.0 / math.sqrt(v.size))
    return w / norm


def project(v: np.ndarray, tag: Family) -> np.ndarray:
    if tag is Family.L1:
        return project_simplex(v)
    if tag is Family.L2:
        return project_sphere(v)
    raise InputError(f"No weight projection for family {tag.value}")
