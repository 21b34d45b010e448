"""Jet algebra against trivial identities and finite-difference oracles."""

import numpy as np
import pytest

from vpnf import jets
from vpnf.errors import ConfigurationError

from _oracles import fd_gradient, fd_hessian, rel_error


def jet_of(fn, points, h=1e-4):
    """Finite-difference jet (B, 15, 1) of a scalar field fn(x: (4,)) -> float."""
    out = np.zeros((len(points), 15, 1))
    for b, x in enumerate(points):
        out[b, 0, 0] = fn(x)
        out[b, 1:5, 0] = fd_gradient(fn, x, h)
        hess = fd_hessian(fn, x, h)
        for m, (i, j) in enumerate(jets.HESS_PAIRS):
            out[b, 5 + m, 0] = hess[i, j]
    return out


class TestSeedJets:
    def test_identity_gradient(self):
        pts = np.array([[0.1, -0.2, 0.3, 0.9]])
        x = jets.seed_input_jets(pts)
        assert x.shape == (1, 15, 4)
        np.testing.assert_array_equal(x[0, 0], pts[0])
        np.testing.assert_array_equal(x[0, 1:5], np.eye(4))
        assert np.all(x[0, 5:] == 0)

    def test_orders(self):
        pts = np.zeros((3, 4))
        assert jets.seed_input_jets(pts, order=0).shape == (3, 1, 4)
        assert jets.seed_input_jets(pts, order=1).shape == (3, 5, 4)

    def test_bad_shape(self):
        with pytest.raises(ConfigurationError):
            jets.seed_input_jets(np.zeros((3, 3)))


class TestSineJet:
    def test_zero_point_unit_gradient(self):
        # a = {value 0, grad e1, hess 0}: sin keeps the gradient, zero hess.
        a = np.zeros((1, 15, 1))
        a[0, 1, 0] = 1.0
        y = jets.sine_jet(a, 1.0)
        assert y[0, 0, 0] == 0.0
        np.testing.assert_array_equal(y[0, 1:5, 0], [1.0, 0, 0, 0])
        # hess_xx = -sin(0) * 1 = 0
        assert np.all(y[0, 5:, 0] == 0.0)

    def test_stationary_input(self):
        a = np.zeros((1, 15, 1))
        a[0, 0, 0] = np.pi / 2
        y = jets.sine_jet(a, 1.0)
        assert y[0, 0, 0] == pytest.approx(1.0, abs=1e-15)
        assert np.all(y[0, 1:, 0] == 0.0)

    def test_finite_difference_match(self):
        rng = np.random.default_rng(7)
        w = rng.normal(size=4)
        b = rng.normal()
        omega0 = 30.0

        def pre(x):
            return float(w @ x + b)

        pts = rng.uniform(-1, 1, size=(6, 4))
        x = jets.seed_input_jets(pts)
        a = jets.linear_jet(x, w[None, :], np.array([b]))
        y = jets.sine_jet(a, omega0)
        oracle = jet_of(lambda q: np.sin(omega0 * pre(q)), pts)
        assert rel_error(y, oracle) <= 1e-6


class TestLinearJet:
    def test_identity(self):
        rng = np.random.default_rng(0)
        a = rng.normal(size=(2, 15, 3))
        y = jets.linear_jet(a, np.eye(3), np.zeros(3))
        np.testing.assert_allclose(y, a, atol=0)

    def test_zero_weight_bias_only(self):
        a = np.random.default_rng(1).normal(size=(2, 15, 3))
        y = jets.linear_jet(a, np.zeros((2, 3)), np.array([5.0, -1.0]))
        np.testing.assert_array_equal(y[:, 0, :], [[5.0, -1.0]] * 2)
        assert np.all(y[:, 1:, :] == 0)

    def test_shape_mismatch(self):
        with pytest.raises(ConfigurationError):
            jets.linear_jet(np.zeros((1, 15, 3)), np.zeros((2, 4)), np.zeros(2))

    def test_composed_with_sine_fd(self):
        rng = np.random.default_rng(3)
        w1 = rng.normal(size=(3, 4))
        b1 = rng.normal(size=3)
        w2 = rng.normal(size=(1, 3))
        b2 = rng.normal(size=1)

        def f(x):
            return float((w2 @ np.sin(w1 @ x + b1) + b2)[0])

        pts = rng.uniform(-1, 1, size=(5, 4))
        x = jets.seed_input_jets(pts)
        y = jets.linear_jet(jets.sine_jet(jets.linear_jet(x, w1, b1), 1.0), w2, b2)
        assert rel_error(y, jet_of(f, pts)) <= 1e-6


class TestJetMul:
    def test_product_rule_fd(self):
        rng = np.random.default_rng(11)
        wp = rng.normal(size=4)
        wq = rng.normal(size=4)

        def f(x):
            return np.sin(wp @ x) * np.sin(wq @ x)

        pts = rng.uniform(-1, 1, size=(4, 4))
        x = jets.seed_input_jets(pts)
        p = jets.sine_jet(jets.linear_jet(x, wp[None, :], np.zeros(1)), 1.0)
        q = jets.sine_jet(jets.linear_jet(x, wq[None, :], np.zeros(1)), 1.0)
        assert rel_error(jets.jet_mul(p, q), jet_of(f, pts)) <= 1e-6

    def test_constant_factor(self):
        rng = np.random.default_rng(2)
        p = rng.normal(size=(3, 15, 2))
        const = np.zeros_like(p)
        const[:, 0, :] = 2.0
        np.testing.assert_allclose(jets.jet_mul(p, const), 2.0 * p, atol=0)


class TestAdjoints:
    """Hand-written op adjoints vs finite differences through random probes."""

    @staticmethod
    def _check_adjoint(forward, backward, a_shape, seed, tol=1e-7):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=a_shape)
        ybar = rng.normal(size=forward(a).shape)

        def scalar(inp):
            return float(np.sum(forward(inp) * ybar))

        abar = backward(ybar, a)
        fd = np.zeros_like(a)
        h = 1e-6
        it = np.nditer(a, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            ap = a.copy(); ap[idx] += h
            am = a.copy(); am[idx] -= h
            fd[idx] = (scalar(ap) - scalar(am)) / (2 * h)
            it.iternext()
        assert rel_error(abar, fd) <= tol

    def test_sine_adjoint(self):
        omega0 = 3.0

        def fwd(a):
            return jets.sine_jet(a, omega0)

        def bwd(ybar, a):
            _, cache = jets.sine_jet(a, omega0, with_cache=True)
            return jets.sine_jet_backward(ybar, a, cache, omega0)

        self._check_adjoint(fwd, bwd, (2, 15, 3), seed=5, tol=1e-6)

    def test_linear_adjoint_input(self):
        rng = np.random.default_rng(9)
        w = rng.normal(size=(3, 2))

        def fwd(a):
            return jets.linear_jet(a, w, np.zeros(3))

        def bwd(ybar, a):
            return jets.linear_jet_backward(ybar, a, w, np.zeros_like(w), np.zeros(3))

        self._check_adjoint(fwd, bwd, (2, 15, 2), seed=10)

    def test_mul_adjoint(self):
        rng = np.random.default_rng(13)
        q = rng.normal(size=(2, 15, 3))

        def fwd(p):
            return jets.jet_mul(p, q)

        def bwd(rbar, p):
            return jets.jet_mul_backward(rbar, p, q)[0]

        self._check_adjoint(fwd, bwd, (2, 15, 3), seed=14)


class TestScaleJetDerivs:
    def test_chain_factors(self):
        rng = np.random.default_rng(4)
        jet = rng.normal(size=(1, 15, 2))
        f = np.array([2.0, 3.0, 4.0, 5.0])
        out = jets.scale_jet_derivs(jet, f)
        np.testing.assert_array_equal(out[:, 0], jet[:, 0])
        for i in range(4):
            np.testing.assert_allclose(out[:, 1 + i], f[i] * jet[:, 1 + i], atol=0)
        for m, (i, j) in enumerate(jets.HESS_PAIRS):
            np.testing.assert_allclose(out[:, 5 + m], f[i] * f[j] * jet[:, 5 + m], atol=0)
