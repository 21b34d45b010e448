"""Second-order jet arithmetic over batches of 4-dimensional inputs.

A *jet* bundles a network quantity with its derivatives with respect to the
4 network inputs (x, y, z, tau).  A batch of jets for ``n`` units is a single
float64 array of shape ``(B, K, n)`` whose component axis holds:

* component ``0``            -- the value,
* components ``1..4``        -- the gradient (order >= 1),
* components ``5..14``       -- the 10 unique Hessian entries (order == 2),
  in the fixed pair order of :data:`HESS_PAIRS`.

Storing only the upper triangle makes the Hessian symmetric by construction.
Every operation here comes with a hand-written adjoint so that scalar losses
built from any jet component can be differentiated with respect to network
parameters (the adjoints propagate third-order mixed information exactly).
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import ConfigurationError

IN_DIM = 4

#: Unique (row, column) Hessian pairs, row-major upper triangle.
HESS_PAIRS: tuple[tuple[int, int], ...] = (
    (0, 0), (0, 1), (0, 2), (0, 3),
    (1, 1), (1, 2), (1, 3),
    (2, 2), (2, 3),
    (3, 3),
)

_HI = np.array([p[0] for p in HESS_PAIRS])
_HJ = np.array([p[1] for p in HESS_PAIRS])

#: Component index of the value.
VAL = 0
#: Component indices of the four gradient entries (d/dx, d/dy, d/dz, d/dtau).
GRAD = (1, 2, 3, 4)
#: Offset of the first Hessian component.
HESS0 = 5


def hess_comp(i: int, j: int) -> int:
    """Component index of Hessian entry (i, j); order of i, j is irrelevant."""
    i, j = min(i, j), max(i, j)
    return HESS0 + HESS_PAIRS.index((i, j))


def ncomp(order: int) -> int:
    """Number of jet components carried at derivative order 0, 1 or 2."""
    if order == 0:
        return 1
    if order == 1:
        return 1 + IN_DIM
    if order == 2:
        return 1 + IN_DIM + len(HESS_PAIRS)
    raise ConfigurationError(f"jet order must be 0, 1 or 2, got {order}")


def seed_input_jets(points: np.ndarray, order: int = 2) -> np.ndarray:
    """Build input jets for a batch of points.

    Values are the coordinates themselves and the gradient block is the
    identity, so downstream jets hold derivatives with respect to these raw
    inputs.  ``points`` has shape (B, 4).
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != IN_DIM:
        raise ConfigurationError(f"points must have shape (B, {IN_DIM}), got {points.shape}")
    b = points.shape[0]
    jets = np.zeros((b, ncomp(order), IN_DIM))
    jets[:, VAL, :] = points
    if order >= 1:
        for i in range(IN_DIM):
            jets[:, 1 + i, i] = 1.0
    return jets


def linear_jet(x: np.ndarray, weight: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Affine map on jets: value W x + b, derivatives W-transformed only."""
    if x.shape[-1] != weight.shape[1]:
        raise ConfigurationError(
            f"jet width {x.shape[-1]} does not match weight columns {weight.shape[1]}"
        )
    y = x @ weight.T
    y[:, VAL, :] += bias
    return y


def linear_jet_backward(
    ybar: np.ndarray,
    x: np.ndarray,
    weight: np.ndarray,
    weight_grad: np.ndarray,
    bias_grad: np.ndarray,
) -> np.ndarray:
    """Adjoint of :func:`linear_jet`; accumulates into the parameter grads."""
    n_out = weight.shape[0]
    weight_grad += ybar.reshape(-1, n_out).T @ x.reshape(-1, x.shape[-1])
    bias_grad += ybar[:, VAL, :].sum(axis=0)
    return ybar @ weight


def _sine_jet_numpy(a: np.ndarray, omega0: float):
    k = a.shape[1]
    s = np.sin(omega0 * a[:, VAL, :])
    c = np.cos(omega0 * a[:, VAL, :])
    y = np.empty_like(a)
    y[:, VAL, :] = s
    if k > 1:
        wc = omega0 * c
        y[:, 1:HESS0, :] = wc[:, None, :] * a[:, 1:HESS0, :]
        if k > HESS0:
            ag = a[:, 1:HESS0, :]
            pair = ag[:, _HI, :] * ag[:, _HJ, :]
            y[:, HESS0:, :] = wc[:, None, :] * a[:, HESS0:, :] - (omega0 * omega0 * s)[:, None, :] * pair
    return y, s, c


def sine_jet(a: np.ndarray, omega0: float, with_cache: bool = False):
    """Elementwise sin(omega0 * a) propagated through value/grad/Hessian.

    Returns the output jets, plus ``(sin, cos)`` of the scaled value when
    ``with_cache`` is set (the backward pass reuses them).
    """
    if _kernels.AVAILABLE:
        y, s, c = _kernels.sine_fwd(np.ascontiguousarray(a), omega0, _HI, _HJ)
    else:
        y, s, c = _sine_jet_numpy(a, omega0)
    if with_cache:
        return y, (s, c)
    return y


def _sine_jet_backward_numpy(ybar, a, s, c, omega0):
    k = a.shape[1]
    w2s = omega0 * omega0 * s
    abar = np.empty_like(ybar)
    abar[:, VAL, :] = (omega0 * c) * ybar[:, VAL, :]
    if k > 1:
        ag = a[:, 1:HESS0, :]
        abar[:, VAL, :] -= w2s * (ag * ybar[:, 1:HESS0, :]).sum(axis=1)
        abar[:, 1:HESS0, :] = (omega0 * c)[:, None, :] * ybar[:, 1:HESS0, :]
        if k > HESS0:
            ah = a[:, HESS0:, :]
            hbar = ybar[:, HESS0:, :]
            pair = ag[:, _HI, :] * ag[:, _HJ, :]
            abar[:, VAL, :] -= (w2s * (ah * hbar).sum(axis=1)
                                + (omega0 ** 3 * c) * (pair * hbar).sum(axis=1))
            for m, (i, j) in enumerate(HESS_PAIRS):
                abar[:, 1 + i, :] -= w2s * ag[:, j, :] * hbar[:, m, :]
                abar[:, 1 + j, :] -= w2s * ag[:, i, :] * hbar[:, m, :]
            abar[:, HESS0:, :] = (omega0 * c)[:, None, :] * hbar
    return abar


def sine_jet_backward(ybar: np.ndarray, a: np.ndarray, cache, omega0: float) -> np.ndarray:
    """Adjoint of :func:`sine_jet` with respect to the input jet."""
    s, c = cache
    if _kernels.AVAILABLE:
        return _kernels.sine_bwd(np.ascontiguousarray(ybar), np.ascontiguousarray(a),
                                 s, c, omega0, _HI, _HJ)
    return _sine_jet_backward_numpy(ybar, a, s, c, omega0)


def _jet_mul_numpy(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    k = p.shape[1]
    r = np.empty_like(p)
    p0 = p[:, VAL, :]
    q0 = q[:, VAL, :]
    r[:, VAL, :] = p0 * q0
    if k > 1:
        r[:, 1:HESS0, :] = p[:, 1:HESS0, :] * q0[:, None, :] + p0[:, None, :] * q[:, 1:HESS0, :]
        if k > HESS0:
            pg = p[:, 1:HESS0, :]
            qg = q[:, 1:HESS0, :]
            r[:, HESS0:, :] = (
                p[:, HESS0:, :] * q0[:, None, :]
                + p0[:, None, :] * q[:, HESS0:, :]
                + pg[:, _HI, :] * qg[:, _HJ, :]
                + pg[:, _HJ, :] * qg[:, _HI, :]
            )
    return r


def jet_mul(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Elementwise product of two jet batches (Leibniz rule on all components)."""
    if p.shape != q.shape:
        raise ConfigurationError(f"jet shapes {p.shape} and {q.shape} do not match")
    if _kernels.AVAILABLE:
        return _kernels.mul_fwd(np.ascontiguousarray(p), np.ascontiguousarray(q), _HI, _HJ)
    return _jet_mul_numpy(p, q)


def _jet_mul_backward_one_numpy(rbar: np.ndarray, other: np.ndarray) -> np.ndarray:
    k = rbar.shape[1]
    bar = np.empty_like(rbar)
    o0 = other[:, VAL, :]
    bar[:, VAL, :] = rbar[:, VAL, :] * o0
    if k > 1:
        og = other[:, 1:HESS0, :]
        bar[:, VAL, :] += (rbar[:, 1:HESS0, :] * og).sum(axis=1)
        bar[:, 1:HESS0, :] = rbar[:, 1:HESS0, :] * o0[:, None, :]
        if k > HESS0:
            hbar = rbar[:, HESS0:, :]
            bar[:, VAL, :] += (hbar * other[:, HESS0:, :]).sum(axis=1)
            for m, (i, j) in enumerate(HESS_PAIRS):
                bar[:, 1 + i, :] += hbar[:, m, :] * og[:, j, :]
                bar[:, 1 + j, :] += hbar[:, m, :] * og[:, i, :]
            bar[:, HESS0:, :] = hbar * o0[:, None, :]
    return bar


def jet_mul_backward(rbar: np.ndarray, p: np.ndarray, q: np.ndarray):
    """Adjoints of :func:`jet_mul` with respect to both factors."""
    if _kernels.AVAILABLE:
        rbar = np.ascontiguousarray(rbar)
        return (_kernels.mul_bwd_one(rbar, np.ascontiguousarray(q), _HI, _HJ),
                _kernels.mul_bwd_one(rbar, np.ascontiguousarray(p), _HI, _HJ))
    return _jet_mul_backward_one_numpy(rbar, q), _jet_mul_backward_one_numpy(rbar, p)


def scale_jet_derivs(jet: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """Rescale derivative components for a per-axis change of input variables.

    ``factors[i]`` is d(old input_i)/d(new input_i); gradients scale linearly
    and Hessian entries by the product of their two axis factors.  Values are
    untouched.  Returns a new array.
    """
    factors = np.asarray(factors, dtype=np.float64)
    out = jet.copy()
    k = jet.shape[1]
    if k > 1:
        out[:, 1:HESS0, :] *= factors[None, :, None]
        if k > HESS0:
            out[:, HESS0:, :] *= (factors[_HI] * factors[_HJ])[None, :, None]
    return out
