"""Reconstruction metrics: normalized MSE in dB and Pearson correlation.

Both metrics treat each evaluation position's impulse response as one time
vector.  NMSE pools squared errors over positions before the ratio; PCC is
computed per position after removing the time mean and then averaged.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import MetricError

NMSE_CLAMP_DB = -120.0

CHANNELS = ("W", "X", "Y", "Z")


def nmse_db(reference: np.ndarray, predicted: np.ndarray) -> float:
    """10 log10 of summed squared error over summed reference energy.

    Inputs have shape (N, L).  Clamped below at -120 dB so a perfect
    reconstruction stays finite.
    """
    reference = np.asarray(reference, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if reference.shape != predicted.shape:
        raise MetricError(f"shape mismatch {reference.shape} vs {predicted.shape}")
    energy = float(np.sum(reference**2))
    if energy == 0.0:
        raise MetricError("reference signal is identically zero")
    err = float(np.sum((predicted - reference) ** 2))
    if err == 0.0:
        return NMSE_CLAMP_DB
    return max(10.0 * np.log10(err / energy), NMSE_CLAMP_DB)


def pcc(reference: np.ndarray, predicted: np.ndarray) -> float:
    """Position-averaged Pearson correlation of mean-removed time signals.

    Positions where either signal is constant contribute 0 and are reported
    through a warning.
    """
    reference = np.asarray(reference, dtype=np.float64)
    predicted = np.asarray(predicted, dtype=np.float64)
    if reference.shape != predicted.shape:
        raise MetricError(f"shape mismatch {reference.shape} vs {predicted.shape}")
    rc = reference - reference.mean(axis=1, keepdims=True)
    pc = predicted - predicted.mean(axis=1, keepdims=True)
    num = np.sum(rc * pc, axis=1)
    den = np.linalg.norm(rc, axis=1) * np.linalg.norm(pc, axis=1)
    degenerate = den == 0.0
    n_degenerate = int(np.count_nonzero(degenerate))
    if n_degenerate:
        warnings.warn(f"{n_degenerate} constant-signal positions contribute PCC 0",
                      RuntimeWarning, stacklevel=2)
    corr = np.zeros(len(reference))
    ok = ~degenerate
    corr[ok] = num[ok] / den[ok]
    return float(corr.mean())


@dataclass
class Report:
    """Per-channel reconstruction quality for one model on one split."""

    nmse_w_db: float
    nmse_xyz_db: float
    pcc_w: float
    pcc_xyz: float
    nmse_channels: tuple[float, float, float, float]
    pcc_channels: tuple[float, float, float, float]
    n_train: int
    n_eval: int
    mode: str
    seed: int = 0
    model: str = ""
    meta: dict = field(default_factory=dict)

    ROW_FIELDS = (
        "model", "mode", "n_train", "n_eval", "seed",
        "nmse_w_db", "nmse_xyz_db", "pcc_w", "pcc_xyz",
        "nmse_x_db", "nmse_y_db", "nmse_z_db", "pcc_x", "pcc_y", "pcc_z",
    )

    def to_row(self) -> dict:
        row = {
            "model": self.model,
            "mode": self.mode,
            "n_train": self.n_train,
            "n_eval": self.n_eval,
            "seed": self.seed,
            "nmse_w_db": self.nmse_w_db,
            "nmse_xyz_db": self.nmse_xyz_db,
            "pcc_w": self.pcc_w,
            "pcc_xyz": self.pcc_xyz,
        }
        for i, ch in enumerate(("x", "y", "z")):
            row[f"nmse_{ch}_db"] = self.nmse_channels[1 + i]
            row[f"pcc_{ch}"] = self.pcc_channels[1 + i]
        return row

    @classmethod
    def from_row(cls, row: dict) -> "Report":
        nm = (float(row["nmse_w_db"]), float(row["nmse_x_db"]),
              float(row["nmse_y_db"]), float(row["nmse_z_db"]))
        pc = (float(row["pcc_w"]), float(row["pcc_x"]),
              float(row["pcc_y"]), float(row["pcc_z"]))
        return cls(
            nmse_w_db=float(row["nmse_w_db"]),
            nmse_xyz_db=float(row["nmse_xyz_db"]),
            pcc_w=float(row["pcc_w"]),
            pcc_xyz=float(row["pcc_xyz"]),
            nmse_channels=nm,
            pcc_channels=pc,
            n_train=int(row["n_train"]),
            n_eval=int(row["n_eval"]),
            mode=row["mode"],
            seed=int(row["seed"]),
            model=row["model"],
        )


def evaluate(model, dataset, split, model_name: str = "") -> Report:
    """Predict every evaluation position and score all four channels.

    ``model`` needs a ``predict_rirs(positions, fs, n_samples)`` method.
    """
    positions = dataset.positions[split.eval_idx]
    reference = np.asarray(dataset.rirs[split.eval_idx], dtype=np.float64)
    predicted = model.predict_rirs(positions, dataset.fs, dataset.n_samples)
    nmse_channels = tuple(
        nmse_db(reference[:, ch, :], predicted[:, ch, :]) for ch in range(4))
    pcc_channels = tuple(
        pcc(reference[:, ch, :], predicted[:, ch, :]) for ch in range(4))
    return Report(
        nmse_w_db=nmse_channels[0],
        nmse_xyz_db=float(np.mean(nmse_channels[1:])),
        pcc_w=pcc_channels[0],
        pcc_xyz=float(np.mean(pcc_channels[1:])),
        nmse_channels=nmse_channels,
        pcc_channels=pcc_channels,
        n_train=len(split.train_idx),
        n_eval=len(split.eval_idx),
        mode=split.mode,
        seed=getattr(model, "seed", 0),
        model=model_name,
    )
