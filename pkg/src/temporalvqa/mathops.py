"""Small dense-math helpers shared by every model."""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, InvalidRangeError, InvalidThresholdError, ZeroNormError
from .rng import Rng

ZERO_NORM_FLOOR = 1e-12


def uniform_init(rows: int, cols: int, lo: float, hi: float, rng: Rng) -> np.ndarray:
    """Fresh (rows, cols) float64 matrix with i.i.d. entries uniform on [lo, hi]."""
    if rows <= 0 or cols <= 0:
        raise DimensionError(f"matrix dims must be positive, got {rows}x{cols}")
    if not lo < hi:
        raise InvalidRangeError(f"init bounds must satisfy lo < hi, got [{lo}, {hi}]")
    return rng.uniform(lo, hi, (rows, cols))


def l2_normalize(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm <= ZERO_NORM_FLOOR:
        raise ZeroNormError(f"cannot normalize vector with norm {norm:.3e}")
    return v / norm


def clip_elementwise(g: np.ndarray, c: float) -> np.ndarray:
    """Clamp every entry to [-c, +c]."""
    if c <= 0:
        raise InvalidThresholdError(f"clip threshold must be positive, got {c}")
    return np.clip(g, -c, c)


def assert_finite(a: np.ndarray, what: str = "array") -> np.ndarray:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} contains non-finite entries")
    return a
