"""Scikit-learn style estimator facade over the neural field models.

The estimator trains on sparse measurements -- ``X`` holds microphone
positions in meters, ``y`` the measured four-channel impulse responses --
and predicts dense FOA RIRs at arbitrary positions.  It follows the sklearn
parameter conventions (``get_params``/``set_params``/``clone`` work), with
the one deviation that ``y`` is three-dimensional.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import ConfigurationError
from .metrics import nmse_db
from .physics import Medium
from .roomsim import FoaDataset
from .training import Split, TrainConfig, make_model, make_split, train
from .validation import check_positions, check_rirs, check_space_time


class FoaRirInterpolator(BaseEstimator):
    """Interpolates four-channel room impulse responses between microphones.

    Parameters
    ----------
    model : str
        One of ``danf``, ``pidanf``, ``vpnf``, ``vpnf-wave``, ``vpnf-plus``.
        The ``vpnf`` family derives the channels from a scalar potential and
        therefore satisfies the momentum balance exactly.
    fs : float
        Sample rate of the impulse responses in ``y``.
    n_validation : int
        Measurements held out (seeded, random) for checkpoint selection.

    The remaining parameters mirror the training configuration; see
    :class:`vpnf.training.TrainConfig`.
    """

    def __init__(
        self,
        model: str = "vpnf",
        fs: float = 8000.0,
        width: int = 128,
        depth: int = 3,
        omega0: float = 30.0,
        iterations: int = 2000,
        lr0: float = 1e-4,
        lr_min: float = 1e-6,
        times_per_batch: int = 25,
        collocation_count: int = 2000,
        collocation_per_iteration: int | None = None,
        n_validation: int = 50,
        validation_interval: int = 500,
        seed: int = 0,
    ):
        self.model = model
        self.fs = fs
        self.width = width
        self.depth = depth
        self.omega0 = omega0
        self.iterations = iterations
        self.lr0 = lr0
        self.lr_min = lr_min
        self.times_per_batch = times_per_batch
        self.collocation_count = collocation_count
        self.collocation_per_iteration = collocation_per_iteration
        self.n_validation = n_validation
        self.validation_interval = validation_interval
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        return TrainConfig.for_model(
            self.model,
            width=self.width,
            depth=self.depth,
            omega0=self.omega0,
            iterations=self.iterations,
            lr0=self.lr0,
            lr_min=self.lr_min,
            times_per_batch=self.times_per_batch,
            collocation_count=self.collocation_count,
            collocation_per_iteration=self.collocation_per_iteration,
            seed=self.seed,
            validation_interval=self.validation_interval,
        )

    def fit(self, X, y):
        """Train on positions X (N, 3) and impulse responses y (N, 4, L)."""
        X = check_positions(X)
        y = check_rirs(y, n_positions=len(X))
        if self.n_validation < 1:
            raise ConfigurationError("n_validation must be at least 1")
        if len(X) - self.n_validation < 1:
            raise ConfigurationError(
                f"{len(X)} measurements cannot spare {self.n_validation} for validation")
        config = self._train_config()
        dataset = FoaDataset(fs=self.fs, positions=X, rirs=y, medium=Medium())
        split = make_split(dataset, "volume", n_train=len(X) - self.n_validation,
                           seed=self.seed, n_val=self.n_validation)
        field = make_model(dataset, config)
        result = train(field, dataset, split, config)
        self.field_ = result.best_model()
        self.history_ = result.history
        self.log_rows_ = result.log_rows
        self.n_samples_ = dataset.n_samples
        self.n_features_in_ = 3
        return self

    def _check_fitted(self):
        if not hasattr(self, "field_"):
            raise NotFittedError("this estimator is not fitted yet; call fit first")

    def predict(self, X) -> np.ndarray:
        """Dense impulse responses (M, 4, L) at new positions X (M, 3)."""
        self._check_fitted()
        X = check_positions(X)
        return self.field_.predict_rirs(X, self.fs, self.n_samples_)

    def predict_at(self, X) -> np.ndarray:
        """Instantaneous FOA samples (M, 4) at space-time points X (M, 4)."""
        self._check_fitted()
        X = check_space_time(X)
        pred = self.field_.predict_foa(X[:, :3], X[:, 3])
        return np.concatenate([pred.w[:, None], pred.v], axis=1)

    def score(self, X, y) -> float:
        """Negative W-channel NMSE in dB (higher is better)."""
        self._check_fitted()
        X = check_positions(X)
        y = check_rirs(y, n_positions=len(X))
        predicted = self.predict(X)
        return -nmse_db(y[:, 0, :], predicted[:, 0, :])
