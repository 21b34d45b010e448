"""Metric definitions, clamps, invariances, and the evaluation report."""

import numpy as np
import pytest

from vpnf.errors import MetricError
from vpnf.metrics import NMSE_CLAMP_DB, Report, evaluate, nmse_db, pcc
from vpnf.physics import Medium
from vpnf.roomsim import GridSpec, build_dataset, sample_room
from vpnf.training import make_split


@pytest.fixture(scope="module")
def signals():
    rng = np.random.default_rng(0)
    return rng.normal(size=(6, 32))


class TestNmse:
    def test_perfect_prediction_clamps(self, signals):
        assert nmse_db(signals, signals.copy()) == NMSE_CLAMP_DB

    def test_zero_prediction_is_zero_db(self, signals):
        assert nmse_db(signals, np.zeros_like(signals)) == pytest.approx(0.0, abs=1e-12)

    def test_doubled_prediction_is_zero_db(self, signals):
        assert nmse_db(signals, 2.0 * signals) == pytest.approx(0.0, abs=1e-12)

    def test_zero_reference_rejected(self, signals):
        with pytest.raises(MetricError):
            nmse_db(np.zeros_like(signals), signals)

    def test_scale_invariance(self, signals):
        pred = signals + np.random.default_rng(1).normal(size=signals.shape)
        base = nmse_db(signals, pred)
        for alpha in (0.25, -3.0, 1e6):
            assert nmse_db(alpha * signals, alpha * pred) == pytest.approx(base, abs=1e-12)


class TestPcc:
    def test_identity(self, signals):
        assert pcc(signals, signals.copy()) == pytest.approx(1.0, abs=1e-12)

    def test_negation(self, signals):
        assert pcc(signals, -signals) == pytest.approx(-1.0, abs=1e-12)

    def test_offset_invariance(self, signals):
        assert pcc(signals, signals + 5.0) == pytest.approx(1.0, abs=1e-12)

    def test_affine_invariance(self, signals):
        pred = signals + np.random.default_rng(2).normal(size=signals.shape)
        base = pcc(signals, pred)
        assert pcc(signals, 3.0 * pred + 1.0) == pytest.approx(base, abs=1e-12)

    def test_degenerate_position_contributes_zero(self, signals):
        pred = signals.copy()
        pred[0, :] = 7.0  # constant row
        with pytest.warns(RuntimeWarning):
            value = pcc(signals, pred)
        expected = (len(signals) - 1) / len(signals)
        assert value == pytest.approx(expected, abs=1e-12)

    def test_bounds(self):
        rng = np.random.default_rng(3)
        value = pcc(rng.normal(size=(20, 16)), rng.normal(size=(20, 16)))
        assert -1.0 <= value <= 1.0


class _ReplayModel:
    """Oracle predictor that replays the dataset it was built from."""

    def __init__(self, dataset):
        self.dataset = dataset

    def predict_rirs(self, positions, fs, n_samples):
        idx = [int(np.argmin(np.linalg.norm(self.dataset.positions - p, axis=1)))
               for p in positions]
        return np.asarray(self.dataset.rirs[idx], dtype=np.float64)


class _ZeroModel:
    def predict_rirs(self, positions, fs, n_samples):
        return np.zeros((len(positions), 4, n_samples))


@pytest.fixture(scope="module")
def tiny_dataset():
    room = sample_room(11)
    return build_dataset(room, grid=GridSpec(spacing=0.25), fs=2000.0, duration=0.02)


class TestEvaluate:
    def test_replay_oracle_is_perfect(self, tiny_dataset):
        split = make_split(tiny_dataset, "volume", n_train=40, seed=0, n_val=10)
        report = evaluate(_ReplayModel(tiny_dataset), tiny_dataset, split)
        assert report.nmse_w_db == NMSE_CLAMP_DB
        assert report.nmse_xyz_db == NMSE_CLAMP_DB
        assert report.pcc_w == pytest.approx(1.0, abs=1e-12)
        assert report.pcc_xyz == pytest.approx(1.0, abs=1e-12)

    def test_zero_model_is_zero_db(self, tiny_dataset):
        split = make_split(tiny_dataset, "volume", n_train=40, seed=0, n_val=10)
        report = evaluate(_ZeroModel(), tiny_dataset, split)
        for ch in range(4):
            assert report.nmse_channels[ch] == pytest.approx(0.0, abs=1e-9)

    def test_eval_count_complement(self, tiny_dataset):
        split = make_split(tiny_dataset, "volume", n_train=40, seed=1, n_val=10)
        report = evaluate(_ZeroModel(), tiny_dataset, split)
        assert report.n_eval == tiny_dataset.n_positions - 50
        assert report.n_train == 40

    def test_report_row_round_trip(self, tiny_dataset):
        split = make_split(tiny_dataset, "volume", n_train=40, seed=0, n_val=10)
        report = evaluate(_ZeroModel(), tiny_dataset, split, model_name="zero")
        back = Report.from_row(report.to_row())
        assert back.model == "zero"
        assert back.nmse_w_db == pytest.approx(report.nmse_w_db)
        assert back.pcc_xyz == pytest.approx(report.pcc_xyz)
