"""Shared fixtures: an analytic plane-wave dataset and one trained model.

The plane wave spans about two wavelengths across the 1 m measurement cube
and is exactly representable by a sine network, so training against it has a
known-perfect optimum.  The trained run is session-scoped because several
tests (convergence, checkpoint selection, physics-by-construction) read
different aspects of the same run.
"""

import numpy as np
import pytest

from vpnf.analytic import plane_wave_dataset
from vpnf.physics import Medium
from vpnf.roomsim import GridSpec
from vpnf.training import TrainConfig, make_model, make_split, train

PLANE_WAVE_K = 4.0 * np.pi / 3.0 * np.array([2.0, 1.0, 2.0])  # |k| = 4 pi


@pytest.fixture(scope="session")
def pw_data():
    dataset = plane_wave_dataset(
        PLANE_WAVE_K, origin=(0.0, 0.0, 0.0), grid=GridSpec(spacing=0.25),
        fs=4000.0, duration=0.05, medium=Medium())
    split = make_split(dataset, "volume", n_train=75, seed=0, n_val=20)
    return dataset, split


@pytest.fixture(scope="session")
def pw_trained(pw_data):
    dataset, split = pw_data
    config = TrainConfig(
        head="vpnf", width=64, depth=2, iterations=2000,
        lr0=1e-3, lr_min=1e-5, times_per_batch=8,
        seed=7, validation_interval=250)
    model = make_model(dataset, config)
    result = train(model, dataset, split, config)
    return result
