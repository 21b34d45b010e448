"""Loss construction, collocation sampling, and the optimization loop.

Model flavors come from one head/penalty grid: ``danf`` fits the four FOA
channels directly, ``pidanf`` adds momentum+continuity penalties at
collocation points, ``vpnf``/``vpnf-plus`` fit the derivatives of a scalar
potential (data term only), and ``vpnf-wave`` adds a wave-equation penalty on
the potential.

Every iteration draws a fresh set of time indices, evaluates the l1 data
term over all training positions at those times, optionally draws fresh
Latin-hypercube collocation points for the penalty, combines terms with
learnable log-parametrized weights, and takes one Adam step under cosine
learning-rate annealing.  Validation W-channel NMSE is recorded periodically
together with a single-precision parameter snapshot; the best snapshot wins.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics
from .errors import ConfigurationError, TrainingDivergedError
from .fields import (
    HEAD_DANF,
    HEAD_VPNF,
    HEAD_VPNF_PLUS,
    POTENTIAL_HEADS,
    FieldModel,
    NormalizationRecord,
)
from .jets import hess_comp
from .network import ParamStore

PENALTY_NONE = "none"
PENALTY_WAVE = "wave"
PENALTY_MOMENTUM_CONTINUITY = "momentum_continuity"

#: Named model flavors: name -> (head, penalty).
MODEL_PRESETS = {
    "danf": (HEAD_DANF, PENALTY_NONE),
    "pidanf": (HEAD_DANF, PENALTY_MOMENTUM_CONTINUITY),
    "vpnf": (HEAD_VPNF, PENALTY_NONE),
    "vpnf-wave": (HEAD_VPNF, PENALTY_WAVE),
    "vpnf-plus": (HEAD_VPNF_PLUS, PENALTY_NONE),
}

_CHUNK_POINTS = 2048

LOG_COLUMNS = (
    "iteration", "loss_data", "loss_wave", "loss_momentum", "loss_continuity",
    "eps_data", "eps_wave", "eps_momentum", "eps_continuity",
    "lr", "wall_ms", "val_nmse_w_db",
)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run."""

    head: str = HEAD_VPNF
    penalty: str = PENALTY_NONE
    depth: int = 3
    width: int = 512
    omega0: float = 30.0
    iterations: int = 100_000
    lr0: float = 1e-4
    lr_min: float = 1e-6
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    times_per_batch: int = 250
    collocation_count: int = 25_000
    collocation_per_iteration: int | None = None
    eps_data_init: float = 1.0
    eps_penalty_init: float = 0.1
    seed: int = 0
    validation_interval: int = 500

    def __post_init__(self):
        if self.head not in (HEAD_DANF, HEAD_VPNF, HEAD_VPNF_PLUS):
            raise ConfigurationError(f"unknown head {self.head!r}")
        if self.penalty not in (PENALTY_NONE, PENALTY_WAVE, PENALTY_MOMENTUM_CONTINUITY):
            raise ConfigurationError(f"unknown penalty {self.penalty!r}")
        if self.penalty == PENALTY_WAVE and self.head not in POTENTIAL_HEADS:
            raise ConfigurationError("wave penalty requires a potential head")
        if self.penalty == PENALTY_MOMENTUM_CONTINUITY and self.head != HEAD_DANF:
            raise ConfigurationError("momentum+continuity penalties apply to the danf head")
        for name in ("depth", "width", "iterations", "times_per_batch",
                     "collocation_count", "validation_interval"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be positive")
        if self.lr_min > self.lr0:
            raise ConfigurationError("lr_min must not exceed lr0")
        if self.eps_data_init <= 0 or self.eps_penalty_init <= 0:
            raise ConfigurationError("adaptive weight initials must be positive")

    @classmethod
    def for_model(cls, name: str, **overrides) -> "TrainConfig":
        if name not in MODEL_PRESETS:
            raise ConfigurationError(
                f"unknown model {name!r}; choose from {sorted(MODEL_PRESETS)}")
        head, penalty = MODEL_PRESETS[name]
        return cls(head=head, penalty=penalty, **overrides)


@dataclass
class Split:
    """Disjoint train/validation/evaluation position indices."""

    train_idx: np.ndarray
    val_idx: np.ndarray
    eval_idx: np.ndarray
    mode: str
    seed: int = 0

    def __post_init__(self):
        self.train_idx = np.asarray(self.train_idx, dtype=np.int64)
        self.val_idx = np.asarray(self.val_idx, dtype=np.int64)
        self.eval_idx = np.asarray(self.eval_idx, dtype=np.int64)
        all_idx = np.concatenate([self.train_idx, self.val_idx, self.eval_idx])
        if len(np.unique(all_idx)) != len(all_idx):
            raise ConfigurationError("split subsets must be pairwise disjoint")

    def save(self, path) -> None:
        blob = {
            "mode": self.mode,
            "seed": self.seed,
            "train": self.train_idx.tolist(),
            "val": self.val_idx.tolist(),
            "eval": self.eval_idx.tolist(),
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(blob, fh, sort_keys=True, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "Split":
        with open(path, encoding="utf-8") as fh:
            blob = json.load(fh)
        return cls(train_idx=blob["train"], val_idx=blob["val"],
                   eval_idx=blob["eval"], mode=blob["mode"], seed=blob["seed"])


def make_split(dataset, mode: str, n_train: int, seed: int, n_val: int = 50) -> Split:
    """Random disjoint split; ``surface`` mode draws train/val from the cube
    surface while evaluation still covers the complement of the whole grid."""
    n = dataset.n_positions
    if mode == "volume":
        pool = np.arange(n)
    elif mode == "surface":
        pool = dataset.surface_indices()
    else:
        raise ConfigurationError(f"unknown split mode {mode!r}")
    if n_train < 1 or n_val < 0:
        raise ConfigurationError("n_train must be >= 1 and n_val >= 0")
    if n_train + n_val > len(pool):
        raise ConfigurationError(
            f"pool of {len(pool)} positions cannot supply {n_train}+{n_val} samples")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(pool)
    train = np.sort(perm[:n_train])
    val = np.sort(perm[n_train : n_train + n_val])
    chosen = np.zeros(n, dtype=bool)
    chosen[train] = True
    chosen[val] = True
    return Split(train_idx=train, val_idx=val, eval_idx=np.flatnonzero(~chosen),
                 mode=mode, seed=seed)


def lhs_sample(n: int, lo, hi, seed_or_rng) -> np.ndarray:
    """Latin hypercube draw: per dimension exactly one point per stratum."""
    if n < 1:
        raise ConfigurationError("sample count must be >= 1")
    lo = np.asarray(lo, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    rng = (seed_or_rng if isinstance(seed_or_rng, np.random.Generator)
           else np.random.default_rng(seed_or_rng))
    dim = len(lo)
    out = np.empty((n, dim))
    for d in range(dim):
        strata = rng.permutation(n)
        out[:, d] = lo[d] + (strata + rng.uniform(size=n)) / n * (hi[d] - lo[d])
    return out


# -- losses -------------------------------------------------------------------


def _data_batch(dataset, split, time_idx):
    time_idx = np.asarray(time_idx, dtype=np.int64)
    if time_idx.size == 0 or len(split.train_idx) == 0:
        raise ConfigurationError("data loss needs a non-empty batch")
    if np.any(time_idx < 0) or np.any(time_idx >= dataset.n_samples):
        raise ConfigurationError("sampled time indices out of range")
    r = dataset.positions[split.train_idx]
    t = time_idx / dataset.fs
    targets = np.asarray(dataset.rirs[split.train_idx][:, :, time_idx], dtype=np.float64)
    d, n_t = len(r), len(time_idx)
    flat_r = np.repeat(r, n_t, axis=0)
    flat_t = np.tile(t, d)
    flat_targets = targets.transpose(0, 2, 1).reshape(d * n_t, 4)
    return flat_r, flat_t, flat_targets


def data_loss(model: FieldModel, dataset, split, time_idx, with_grad: bool = False):
    """Mean l1 mismatch of (w, v) against measurements at sampled times.

    Potential heads predict w from the potential's time derivative and v from
    its spatial gradient; the direct head uses its four outputs.  Returns the
    scalar loss, or ``(loss, flat_param_grad)`` with ``with_grad``.
    """
    flat_r, flat_t, targets = _data_batch(dataset, split, time_idx)
    points_net = model.norm.to_network(flat_r, flat_t)
    n = len(targets)
    s = model.norm.input_scale
    # (1/c0) d/dt in network coordinates; equals s when time maps to c0 t.
    wf = model.norm.time_scale * s / model.medium.c0
    loss_sum = 0.0
    grad = np.zeros(len(model.net.params)) if with_grad else None
    for a in range(0, n, _CHUNK_POINTS):
        b = min(a + _CHUNK_POINTS, n)
        pts, tg = points_net[a:b], targets[a:b]
        if model.head in POTENTIAL_HEADS:
            if with_grad:
                psi, ctx = model.potential_jets_network(pts, order=1, keep_ctx=True)
            else:
                psi = model.potential_jets_network(pts, order=1)
            err_w = wf * psi[:, 4, 0] - tg[:, 0]
            err_v = s * psi[:, 1:4, 0] - tg[:, 1:4]
            loss_sum += np.abs(err_w).sum() + np.abs(err_v).sum()
            if with_grad:
                bar = np.zeros_like(psi)
                bar[:, 4, 0] = np.sign(err_w) * (wf / n)
                bar[:, 1:4, 0] = np.sign(err_v) * (s / n)
                model.potential_backward(ctx, bar, grad=grad)
        else:
            if with_grad:
                out, ctx = model.net.forward_jets(pts, order=0, keep_ctx=True)
            else:
                out = model.net.forward_jets(pts, order=0)
            err = out[:, 0, :] - tg
            loss_sum += np.abs(err).sum()
            if with_grad:
                bar = np.sign(err)[:, None, :] / n
                model.net.backward_params(ctx, bar, grad=grad)
    loss = loss_sum / n
    return (loss, grad) if with_grad else loss


_H_XX, _H_YY, _H_ZZ, _H_TT = (hess_comp(0, 0), hess_comp(1, 1),
                              hess_comp(2, 2), hess_comp(3, 3))


def wave_loss(model: FieldModel, points_rt: np.ndarray, with_grad: bool = False):
    """Mean |wave residual| of the potential over collocation points (x,y,z,t)."""
    points_rt = np.asarray(points_rt, dtype=np.float64)
    points_net = model.norm.to_network(points_rt[:, :3], points_rt[:, 3])
    n = len(points_net)
    s2 = model.norm.input_scale**2
    tf2 = (model.norm.time_scale * model.norm.input_scale / model.medium.c0) ** 2
    loss_sum = 0.0
    grad = np.zeros(len(model.net.params)) if with_grad else None
    for a in range(0, n, _CHUNK_POINTS):
        pts = points_net[a : a + _CHUNK_POINTS]
        if with_grad:
            psi, ctx = model.potential_jets_network(pts, order=2, keep_ctx=True)
        else:
            psi = model.potential_jets_network(pts, order=2)
        resid = (s2 * (psi[:, _H_XX, 0] + psi[:, _H_YY, 0] + psi[:, _H_ZZ, 0])
                 - tf2 * psi[:, _H_TT, 0])
        loss_sum += np.abs(resid).sum()
        if with_grad:
            sgn = np.sign(resid) / n
            bar = np.zeros_like(psi)
            for comp in (_H_XX, _H_YY, _H_ZZ):
                bar[:, comp, 0] = sgn * s2
            bar[:, _H_TT, 0] = -sgn * tf2
            model.potential_backward(ctx, bar, grad=grad)
    loss = loss_sum / n
    return (loss, grad) if with_grad else loss


def pidanf_penalties(model: FieldModel, points_rt: np.ndarray,
                     weights=(1.0, 1.0), with_grad: bool = False):
    """Mean l1 momentum and continuity residuals of a direct-head model.

    With ``with_grad`` returns ``(momentum, continuity), grad`` where the
    gradient is of ``weights[0] * momentum + weights[1] * continuity``.
    """
    if model.head != HEAD_DANF:
        raise ConfigurationError("physics penalties on network outputs need the danf head")
    points_rt = np.asarray(points_rt, dtype=np.float64)
    points_net = model.norm.to_network(points_rt[:, :3], points_rt[:, 3])
    n = len(points_net)
    s = model.norm.input_scale
    tf = model.norm.time_scale * s / model.medium.c0
    mom_sum = 0.0
    cont_sum = 0.0
    grad = np.zeros(len(model.net.params)) if with_grad else None
    w_mom, w_cont = weights
    for a in range(0, n, _CHUNK_POINTS):
        pts = points_net[a : a + _CHUNK_POINTS]
        if with_grad:
            out, ctx = model.net.forward_jets(pts, order=1, keep_ctx=True)
        else:
            out = model.net.forward_jets(pts, order=1)
        # momentum: grad w - (1/c0) dv/dt; continuity: div v - (1/c0) dw/dt,
        # expressed through network-coordinate derivatives of the channels.
        mom = s * out[:, 1:4, 0] - tf * out[:, 4, 1:4]
        cont = s * (out[:, 1, 1] + out[:, 2, 2] + out[:, 3, 3]) - tf * out[:, 4, 0]
        mom_sum += np.abs(mom).sum()
        cont_sum += np.abs(cont).sum()
        if with_grad:
            bar = np.zeros_like(out)
            sgn_m = np.sign(mom) * (w_mom / n)
            bar[:, 1:4, 0] += sgn_m * s
            bar[:, 4, 1:4] -= sgn_m * tf
            sgn_c = np.sign(cont) * (w_cont / n)
            for i in range(3):
                bar[:, 1 + i, 1 + i] += sgn_c * s
            bar[:, 4, 0] -= sgn_c * tf
            model.net.backward_params(ctx, bar, grad=grad)
    losses = (mom_sum / n, cont_sum / n)
    return (losses, grad) if with_grad else losses


def adaptive_total(losses, log_eps) -> float:
    """Uncertainty-weighted sum: sum L_i / (2 eps_i^2) + log prod eps_i."""
    losses = np.asarray(losses, dtype=np.float64)
    log_eps = np.asarray(log_eps, dtype=np.float64)
    if losses.shape != log_eps.shape:
        raise ConfigurationError("one adaptive weight per loss term required")
    return float(np.sum(losses * np.exp(-2.0 * log_eps) / 2.0) + np.sum(log_eps))


def adaptive_weight_grads(losses, log_eps) -> np.ndarray:
    """d(adaptive_total)/d(log eps_i); zero where eps_i^2 equals the loss."""
    losses = np.asarray(losses, dtype=np.float64)
    log_eps = np.asarray(log_eps, dtype=np.float64)
    return -losses * np.exp(-2.0 * log_eps) + 1.0


# -- optimization loop --------------------------------------------------------


def cosine_lr(iteration: int, config: TrainConfig) -> float:
    """Cosine annealing from lr0 (first iteration) to lr_min (last)."""
    horizon = max(config.iterations - 1, 1)
    frac = min(iteration, horizon) / horizon
    return config.lr_min + 0.5 * (config.lr0 - config.lr_min) * (1.0 + np.cos(np.pi * frac))


@dataclass
class CheckpointRecord:
    iteration: int
    val_nmse_w_db: float
    params_f32: np.ndarray


@dataclass
class TrainResult:
    model: FieldModel
    history: list[CheckpointRecord]
    log_rows: list[dict]
    config: TrainConfig

    def best_model(self) -> FieldModel:
        return select_checkpoint(self.model, self.history)


def best_checkpoint_index(scores) -> int:
    """Index of the smallest validation score; ties go to the earliest."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ConfigurationError("empty checkpoint history")
    return int(np.argmin(scores))


def select_checkpoint(model: FieldModel, history) -> FieldModel:
    """Model with the parameters of the best-validation checkpoint."""
    best = history[best_checkpoint_index([rec.val_nmse_w_db for rec in history])]
    params = ParamStore(model.net.params.manifest,
                        np.asarray(best.params_f32, dtype=np.float64),
                        model.net.params.omega0)
    return model.with_params(params)


def make_model(dataset, config: TrainConfig) -> FieldModel:
    """Fresh model normalized to the dataset's measurement region."""
    lo, hi = dataset.domain_bounds()
    norm = NormalizationRecord.from_domain(lo, hi, dataset.medium.c0)
    return FieldModel.create(
        config.head, norm, width=config.width, depth=config.depth,
        omega0=config.omega0, medium=dataset.medium, seed=config.seed)


def validation_wnmse(model: FieldModel, dataset, split) -> float:
    """W-channel NMSE (dB) over the validation positions."""
    positions = dataset.positions[split.val_idx]
    reference = np.asarray(dataset.rirs[split.val_idx, 0, :], dtype=np.float64)
    predicted = model.predict_rirs(positions, dataset.fs, dataset.n_samples)[:, 0, :]
    return metrics.nmse_db(reference, predicted)


def _blank_row():
    return {col: "" for col in LOG_COLUMNS}


def write_train_log(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=LOG_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)


def train(model: FieldModel, dataset, split, config: TrainConfig,
          log_path=None) -> TrainResult:
    """Run the optimization loop; mutates ``model``'s parameters in place.

    Returns the checkpoint history (validation snapshots) and per-iteration
    log rows.  Raises :class:`TrainingDivergedError` with a state dump if the
    loss becomes non-finite.
    """
    if model.head != config.head:
        raise ConfigurationError(
            f"model head {model.head!r} does not match config head {config.head!r}")
    if len(split.val_idx) == 0:
        raise ConfigurationError("training needs a non-empty validation split")
    n_samples = dataset.n_samples
    if config.times_per_batch > n_samples:
        raise ConfigurationError("times_per_batch exceeds the number of time samples")
    lo, hi = dataset.domain_bounds()
    bounds_lo = np.append(lo, 0.0)
    bounds_hi = np.append(hi, dataset.duration)

    rng_batch = np.random.default_rng([config.seed, 1])
    rng_colloc = np.random.default_rng([config.seed, 2])

    theta = model.net.params.values
    if config.penalty == PENALTY_NONE:
        log_eps = np.empty(0)
    elif config.penalty == PENALTY_WAVE:
        log_eps = np.log([config.eps_data_init, config.eps_penalty_init])
    else:
        log_eps = np.log([config.eps_data_init,
                          config.eps_penalty_init, config.eps_penalty_init])
    n_colloc = min(config.collocation_per_iteration or config.collocation_count,
                   config.collocation_count)

    adam_m = np.zeros(len(theta) + len(log_eps))
    adam_v = np.zeros_like(adam_m)

    history: list[CheckpointRecord] = []
    log_rows: list[dict] = []
    log_fh = None
    writer = None
    if log_path is not None:
        log_fh = open(log_path, "a", encoding="utf-8", newline="")
        writer = csv.DictWriter(log_fh, fieldnames=LOG_COLUMNS)
        if log_fh.tell() == 0:
            writer.writeheader()

    try:
        for it in range(config.iterations):
            t_start = time.perf_counter()
            lr = cosine_lr(it, config)
            time_idx = np.sort(rng_batch.choice(n_samples, size=config.times_per_batch,
                                                replace=False))
            row = _blank_row()
            row["iteration"] = it + 1
            row["lr"] = lr

            if config.penalty == PENALTY_NONE:
                loss_data, grad = data_loss(model, dataset, split, time_idx, with_grad=True)
                total = loss_data
                s_grad = np.empty(0)
            elif config.penalty == PENALTY_WAVE:
                loss_data, g_data = data_loss(model, dataset, split, time_idx, with_grad=True)
                colloc = lhs_sample(n_colloc, bounds_lo, bounds_hi, rng_colloc)
                loss_wave, g_wave = wave_loss(model, colloc, with_grad=True)
                weights = np.exp(-2.0 * log_eps) / 2.0
                grad = weights[0] * g_data + weights[1] * g_wave
                losses = np.array([loss_data, loss_wave])
                total = adaptive_total(losses, log_eps)
                s_grad = adaptive_weight_grads(losses, log_eps)
                row["loss_wave"] = loss_wave
                row["eps_data"], row["eps_wave"] = np.exp(log_eps)
            else:
                loss_data, g_data = data_loss(model, dataset, split, time_idx, with_grad=True)
                colloc = lhs_sample(n_colloc, bounds_lo, bounds_hi, rng_colloc)
                weights = np.exp(-2.0 * log_eps) / 2.0
                (loss_mom, loss_cont), g_pen = pidanf_penalties(
                    model, colloc, weights=(weights[1], weights[2]), with_grad=True)
                grad = weights[0] * g_data + g_pen
                losses = np.array([loss_data, loss_mom, loss_cont])
                total = adaptive_total(losses, log_eps)
                s_grad = adaptive_weight_grads(losses, log_eps)
                row["loss_momentum"] = loss_mom
                row["loss_continuity"] = loss_cont
                row["eps_data"], row["eps_momentum"], row["eps_continuity"] = np.exp(log_eps)

            if not np.isfinite(total):
                raise TrainingDivergedError(
                    f"non-finite loss at iteration {it + 1}",
                    state={
                        "iteration": it + 1,
                        "loss_data": float(loss_data),
                        "total": float(total),
                        "lr": lr,
                        "log_eps": log_eps.tolist(),
                        "max_abs_param": float(np.max(np.abs(theta))),
                    },
                )

            # Adam step over network parameters and adaptive weights jointly.
            full_grad = np.concatenate([grad, s_grad])
            t = it + 1
            adam_m = config.beta1 * adam_m + (1 - config.beta1) * full_grad
            adam_v = config.beta2 * adam_v + (1 - config.beta2) * full_grad**2
            m_hat = adam_m / (1 - config.beta1**t)
            v_hat = adam_v / (1 - config.beta2**t)
            step = lr * m_hat / (np.sqrt(v_hat) + config.adam_eps)
            theta -= step[: len(theta)]
            if len(log_eps):
                log_eps = log_eps - step[len(theta):]
                if not np.all(np.isfinite(log_eps)):
                    raise TrainingDivergedError(
                        f"adaptive weights diverged at iteration {it + 1}",
                        state={"iteration": it + 1, "log_eps": log_eps.tolist()},
                    )

            row["loss_data"] = loss_data
            if (it + 1) % config.validation_interval == 0 or it + 1 == config.iterations:
                val = validation_wnmse(model, dataset, split)
                history.append(CheckpointRecord(
                    iteration=it + 1,
                    val_nmse_w_db=val,
                    params_f32=theta.astype(np.float32),
                ))
                row["val_nmse_w_db"] = val
            row["wall_ms"] = (time.perf_counter() - t_start) * 1e3
            log_rows.append(row)
            if writer is not None:
                writer.writerow(row)
    finally:
        if log_fh is not None:
            log_fh.close()

    return TrainResult(model=model, history=history, log_rows=log_rows, config=config)
