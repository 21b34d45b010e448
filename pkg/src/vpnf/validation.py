"""Input validation helpers for the public estimator surface."""

from __future__ import annotations

import numpy as np

from .errors import ConfigurationError


def check_positions(X) -> np.ndarray:
    """Validate measurement positions: finite float array of shape (N, 3)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 3:
        raise ConfigurationError(f"positions must have shape (N, 3), got {X.shape}")
    if len(X) == 0:
        raise ConfigurationError("positions are empty")
    if not np.all(np.isfinite(X)):
        raise ConfigurationError("positions contain non-finite values")
    return X


def check_rirs(y, n_positions: int | None = None) -> np.ndarray:
    """Validate impulse responses: finite array of shape (N, 4, L)."""
    y = np.asarray(y)
    if y.ndim != 3 or y.shape[1] != 4:
        raise ConfigurationError(f"rirs must have shape (N, 4, L), got {y.shape}")
    if n_positions is not None and len(y) != n_positions:
        raise ConfigurationError(
            f"got {len(y)} impulse responses for {n_positions} positions")
    if y.shape[2] < 1:
        raise ConfigurationError("rirs must contain at least one time sample")
    if not np.all(np.isfinite(y)):
        raise ConfigurationError("rirs contain non-finite values")
    return np.asarray(y, dtype=np.float64)


def check_space_time(X) -> np.ndarray:
    """Validate space-time query points: finite array of shape (M, 4)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 4:
        raise ConfigurationError(
            f"space-time points must have shape (M, 4) as (x, y, z, t), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ConfigurationError("space-time points contain non-finite values")
    return X
