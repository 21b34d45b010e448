"""Closed-form plane-wave sound fields for fixtures and sanity checks.

A traveling plane wave with wavevector k and angular frequency c0 |k| has the
scalar potential psi(r, t) = sin(k . r - c0 |k| t), which gives

    w(r, t) = -|k| cos(k . r - c0 |k| t)
    v(r, t) =   k  cos(k . r - c0 |k| t)

These satisfy the momentum, continuity and wave balances exactly, so they
serve as ground truth with a known-perfect reconstruction.
"""

from __future__ import annotations

import numpy as np

from .fields import HEAD_DANF, HEAD_VPNF, FieldModel, NormalizationRecord
from .network import ModifiedMLP
from .physics import Medium
from .roomsim import FoaDataset, GridSpec


def plane_wave_foa(r: np.ndarray, t: np.ndarray, k_vec, medium: Medium):
    """FOA samples (w, v) of the plane wave at positions r and times t."""
    k_vec = np.asarray(k_vec, dtype=np.float64)
    k_mag = np.linalg.norm(k_vec)
    phase = np.asarray(r, dtype=np.float64) @ k_vec - medium.c0 * k_mag * np.asarray(t)
    cos = np.cos(phase)
    return -k_mag * cos, k_vec[None, :] * cos[:, None]


def plane_wave_dataset(
    k_vec,
    origin=(0.0, 0.0, 0.0),
    grid: GridSpec | None = None,
    fs: float = 4000.0,
    duration: float = 0.05,
    medium: Medium | None = None,
) -> FoaDataset:
    """Analytic FOA dataset on a measurement grid (float64, no room)."""
    grid = grid or GridSpec(spacing=0.25)
    medium = medium or Medium()
    positions = grid.positions(origin)
    n_samples = int(round(fs * duration))
    times = np.arange(n_samples) / fs
    flat_r = np.repeat(positions, n_samples, axis=0)
    flat_t = np.tile(times, len(positions))
    w, v = plane_wave_foa(flat_r, flat_t, k_vec, medium)
    rirs = np.concatenate([w[:, None], v], axis=1).reshape(
        len(positions), n_samples, 4).transpose(0, 2, 1)
    return FoaDataset(fs=fs, positions=positions, rirs=rirs.copy(),
                      medium=medium, grid=grid)


def plane_wave_model(k_vec, norm: NormalizationRecord, medium: Medium | None = None) -> FieldModel:
    """Exact potential-head model computing psi = sin(k . r - c0 |k| t).

    The phase is affine in the network coordinates, so a single sine unit
    represents it exactly: an oracle for losses and predictions.
    """
    medium = medium or Medium()
    k_vec = np.asarray(k_vec, dtype=np.float64)
    k_mag = np.linalg.norm(k_vec)
    net = ModifiedMLP.initialize(out_dim=1, width=1, depth=1, omega0=1.0, seed=0)
    net.params.values[:] = 0.0
    # k . r - c0|k| t is affine in (xi, tau): coefficients k/s and -c0|k|/(time_scale s).
    s = norm.input_scale
    tau_coef = -medium.c0 * k_mag / (norm.time_scale * s)
    net.params.view("input.weight")[:] = np.concatenate([k_vec / s, [tau_coef]])[None, :]
    net.params.view("input.bias")[:] = [float(k_vec @ np.asarray(norm.center))]
    net.params.view("head.weight")[:] = [[1.0]]
    return FieldModel(net=net, head=HEAD_VPNF, norm=norm, medium=medium)


def plane_wave_danf_model(k_vec, norm: NormalizationRecord, medium: Medium | None = None) -> FieldModel:
    """Direct-head model emitting the exact plane-wave (w, v) channels.

    cos(phase) = sin(phase + pi/2) makes one sine unit enough; the head mixes
    it into the four channels with weights (-|k|, k).
    """
    medium = medium or Medium()
    k_vec = np.asarray(k_vec, dtype=np.float64)
    k_mag = np.linalg.norm(k_vec)
    net = ModifiedMLP.initialize(out_dim=4, width=1, depth=1, omega0=1.0, seed=0)
    net.params.values[:] = 0.0
    s = norm.input_scale
    tau_coef = -medium.c0 * k_mag / (norm.time_scale * s)
    net.params.view("input.weight")[:] = np.concatenate([k_vec / s, [tau_coef]])[None, :]
    net.params.view("input.bias")[:] = [float(k_vec @ np.asarray(norm.center)) + np.pi / 2]
    net.params.view("head.weight")[:] = np.concatenate([[-k_mag], k_vec])[:, None]
    return FieldModel(net=net, head=HEAD_DANF, norm=norm, medium=medium)
