"""Acoustic constants and residual operators.

Conventions: the W channel is the sound pressure, the (X, Y, Z) channels are
proportional to particle velocity via u = -v / (rho0 * c0).  All residuals are
stateless functions of already-computed derivative panels and broadcast over
leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

DEFAULT_DENSITY = 1.2
DEFAULT_SOUND_SPEED = 343.0


@dataclass(frozen=True)
class Medium:
    """Propagation medium: air density (kg/m^3) and sound speed (m/s)."""

    rho0: float = DEFAULT_DENSITY
    c0: float = DEFAULT_SOUND_SPEED

    def __post_init__(self):
        for name in ("rho0", "c0"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ConfigurationError(f"{name} must be strictly positive and finite")


def velocity_from_foa(v: np.ndarray, medium: Medium) -> np.ndarray:
    """Particle velocity from the first-order channels: u = -v / (rho0 c0)."""
    return -np.asarray(v, dtype=np.float64) / (medium.rho0 * medium.c0)


def foa_from_velocity(u: np.ndarray, medium: Medium) -> np.ndarray:
    """Inverse of :func:`velocity_from_foa`."""
    return -np.asarray(u, dtype=np.float64) * (medium.rho0 * medium.c0)


def momentum_residual(grad_w: np.ndarray, dv_dt: np.ndarray, medium: Medium) -> np.ndarray:
    """grad(w) - (1/c0) dv/dt; zero iff the linearized momentum balance holds."""
    return np.asarray(grad_w, dtype=np.float64) - np.asarray(dv_dt, dtype=np.float64) / medium.c0


def continuity_residual(div_v: np.ndarray, dw_dt: np.ndarray, medium: Medium) -> np.ndarray:
    """div(v) - (1/c0) dw/dt, the mass-conservation balance in FOA variables.

    This is the continuity equation with u and p replaced by the FOA channels
    and rescaled by -c0, which puts it on the same footing as
    :func:`momentum_residual`.
    """
    return np.asarray(div_v, dtype=np.float64) - np.asarray(dw_dt, dtype=np.float64) / medium.c0


def wave_residual(laplacian: np.ndarray, d2_dt2: np.ndarray, medium: Medium) -> np.ndarray:
    """laplacian(psi) - (1/c0^2) d^2(psi)/dt^2 for the scalar potential."""
    return np.asarray(laplacian, dtype=np.float64) - np.asarray(d2_dt2, dtype=np.float64) / medium.c0**2
