"""Model heads mapping the coordinate network to FOA quantities.

Three heads share one network core:

* ``danf``       -- the network emits the four FOA channels directly;
* ``vpnf``       -- the network emits a scalar potential whose time
  derivative gives W and whose spatial gradient gives (X, Y, Z), so the
  linearized momentum balance holds identically;
* ``vpnf_plus``  -- like ``vpnf`` but the potential is the inner product of
  the (normalized) space-time coordinates with a 4-channel network output.

Positions are in meters and times in seconds everywhere on the public
surface; network coordinates (centered, scaled, with time mapped to distance)
are an internal detail recorded in :class:`NormalizationRecord`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import jets
from .errors import ConfigurationError
from .network import ModifiedMLP, ParamStore
from .physics import Medium

HEAD_DANF = "danf"
HEAD_VPNF = "vpnf"
HEAD_VPNF_PLUS = "vpnf_plus"

HEAD_OUT_DIM = {HEAD_DANF: 4, HEAD_VPNF: 1, HEAD_VPNF_PLUS: 4}

#: Heads whose FOA output derives from a scalar potential.
POTENTIAL_HEADS = (HEAD_VPNF, HEAD_VPNF_PLUS)

_MIN_HALF_EXTENT = 1e-3


@dataclass(frozen=True)
class NormalizationRecord:
    """Affine map between physical (r, t) and O(1) network coordinates.

    Space is centered and scaled by one common factor; time is first converted
    to distance with ``time_scale`` (the sound speed) and then scaled by the
    same factor, which keeps the wave operator isotropic in network units.
    """

    center: tuple[float, float, float]
    spatial_half_extent: float
    time_scale: float
    input_scale: float

    @classmethod
    def from_domain(cls, lo, hi, c0: float) -> "NormalizationRecord":
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        center = (lo + hi) / 2.0
        half = float(max(np.max((hi - lo) / 2.0), _MIN_HALF_EXTENT))
        return cls(tuple(center), half, float(c0), 1.0 / half)

    def to_network(self, r: np.ndarray, t: np.ndarray) -> np.ndarray:
        """(B, 3) positions and (B,) times to (B, 4) network points."""
        r = np.atleast_2d(np.asarray(r, dtype=np.float64))
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        pts = np.empty((len(r), 4))
        pts[:, :3] = (r - np.asarray(self.center)) * self.input_scale
        pts[:, 3] = t * self.time_scale * self.input_scale
        return pts

    def from_network(self, pts: np.ndarray):
        r = pts[:, :3] / self.input_scale + np.asarray(self.center)
        t = pts[:, 3] / (self.time_scale * self.input_scale)
        return r, t

    def deriv_factors(self) -> np.ndarray:
        """Chain factors turning network-coordinate jets into physical ones.

        Entry i is d(network input_i)/d(physical input_i); the physical inputs
        are (x, y, z, t) in meters and seconds.
        """
        s = self.input_scale
        return np.array([s, s, s, self.time_scale * s])


@dataclass
class FoaPrediction:
    """Predicted FOA samples plus optional derivative panels."""

    w: np.ndarray
    v: np.ndarray
    grad_w: np.ndarray | None = None
    dv_dt: np.ndarray | None = None
    div_v: np.ndarray | None = None
    dw_dt: np.ndarray | None = None


def multiplier_jets(points_net: np.ndarray, order: int) -> np.ndarray:
    """Jets of the inner-product factor [tau; x; y; z] in network coordinates."""
    b = len(points_net)
    mu = np.zeros((b, jets.ncomp(order), 4))
    mu[:, jets.VAL, 0] = points_net[:, 3]
    mu[:, jets.VAL, 1:4] = points_net[:, 0:3]
    if order >= 1:
        mu[:, 1 + 3, 0] = 1.0
        for i in range(3):
            mu[:, 1 + i, 1 + i] = 1.0
    return mu


@dataclass
class FieldModel:
    """A trained or untrained field: network + head + units + medium."""

    net: ModifiedMLP
    head: str
    norm: NormalizationRecord
    medium: Medium = field(default_factory=Medium)
    seed: int = 0

    def __post_init__(self):
        if self.head not in HEAD_OUT_DIM:
            raise ConfigurationError(f"unknown head {self.head!r}")
        if self.net.config.out_dim != HEAD_OUT_DIM[self.head]:
            raise ConfigurationError(
                f"head {self.head!r} needs {HEAD_OUT_DIM[self.head]} output channels, "
                f"network has {self.net.config.out_dim}"
            )

    @classmethod
    def create(
        cls,
        head: str,
        norm: NormalizationRecord,
        width: int = 512,
        depth: int = 3,
        omega0: float = 30.0,
        medium: Medium | None = None,
        seed: int = 0,
    ) -> "FieldModel":
        if head not in HEAD_OUT_DIM:
            raise ConfigurationError(f"unknown head {head!r}")
        net = ModifiedMLP.initialize(
            HEAD_OUT_DIM[head], width=width, depth=depth, omega0=omega0, seed=seed)
        return cls(net=net, head=head, norm=norm,
                   medium=medium or Medium(), seed=seed)

    def with_params(self, params: ParamStore) -> "FieldModel":
        return replace(self, net=self.net.with_params(params))

    # -- network-coordinate plumbing (used by the training losses) ----------

    def potential_jets_network(self, points_net: np.ndarray, order: int = 2, keep_ctx: bool = False):
        """Scalar-potential jets w.r.t. network coordinates (potential heads)."""
        if self.head not in POTENTIAL_HEADS:
            raise ConfigurationError(f"head {self.head!r} has no scalar potential")
        if self.head == HEAD_VPNF:
            if keep_ctx:
                out, net_ctx = self.net.forward_jets(points_net, order=order, keep_ctx=True)
                return out, {"net": net_ctx}
            return self.net.forward_jets(points_net, order=order)
        mu = multiplier_jets(points_net, order)
        if keep_ctx:
            out, net_ctx = self.net.forward_jets(points_net, order=order, keep_ctx=True)
            psi = jets.jet_mul(mu, out).sum(axis=2, keepdims=True)
            return psi, {"net": net_ctx, "mu": mu, "out": out}
        out = self.net.forward_jets(points_net, order=order)
        return jets.jet_mul(mu, out).sum(axis=2, keepdims=True)

    def potential_backward(self, ctx: dict, psi_bar: np.ndarray, grad: np.ndarray | None = None) -> np.ndarray:
        """Parameter gradient from an adjoint on the potential jets."""
        if self.head == HEAD_VPNF:
            return self.net.backward_params(ctx["net"], psi_bar, grad=grad)
        prod_bar = np.broadcast_to(psi_bar, ctx["out"].shape)
        _, out_bar = jets.jet_mul_backward(prod_bar, ctx["mu"], ctx["out"])
        return self.net.backward_params(ctx["net"], out_bar, grad=grad)

    # -- physical-unit interface ---------------------------------------------

    def eval_potential(self, r: np.ndarray, t: np.ndarray, order: int = 2) -> np.ndarray:
        """Potential jets (B, K, 1) with derivatives per meter and per second."""
        pts = self.norm.to_network(r, t)
        psi = self.potential_jets_network(pts, order=order)
        return jets.scale_jet_derivs(psi, self.norm.deriv_factors())

    def predict_foa(self, r: np.ndarray, t: np.ndarray, panels: bool = False) -> FoaPrediction:
        """FOA samples at (r, t); with ``panels`` also the derivative panels
        needed for the physics residuals."""
        c0 = self.medium.c0
        order = 2 if panels else 1
        if self.head in POTENTIAL_HEADS:
            psi = self.eval_potential(r, t, order=order)[:, :, 0]
            pred = FoaPrediction(w=psi[:, 4] / c0, v=psi[:, 1:4].copy())
            if panels:
                h = lambda i, j: psi[:, jets.hess_comp(i, j)]
                cross = np.stack([h(0, 3), h(1, 3), h(2, 3)], axis=1)
                pred.grad_w = cross / c0
                pred.dv_dt = cross.copy()
                pred.div_v = h(0, 0) + h(1, 1) + h(2, 2)
                pred.dw_dt = h(3, 3) / c0
            return pred
        pts = self.norm.to_network(r, t)
        out = self.net.forward_jets(pts, order=1 if panels else 0)
        out = jets.scale_jet_derivs(out, self.norm.deriv_factors())
        pred = FoaPrediction(w=out[:, 0, 0].copy(), v=out[:, 0, 1:4].copy())
        if panels:
            pred.grad_w = out[:, 1:4, 0].copy()
            pred.dv_dt = out[:, 4, 1:4].copy()
            pred.div_v = out[:, 1, 1] + out[:, 2, 2] + out[:, 3, 3]
            pred.dw_dt = out[:, 4, 0].copy()
        return pred

    def predict_rirs(self, positions: np.ndarray, fs: float, n_samples: int,
                     chunk: int = 16384) -> np.ndarray:
        """Dense (N, 4, L) impulse responses at the given positions."""
        positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
        n = len(positions)
        times = np.arange(n_samples) / fs
        flat = np.empty((n * n_samples, 4))
        flat_r = np.repeat(positions, n_samples, axis=0)
        flat_t = np.tile(times, n)
        for start in range(0, n * n_samples, chunk):
            sl = slice(start, min(start + chunk, n * n_samples))
            pred = self.predict_foa(flat_r[sl], flat_t[sl])
            flat[sl] = np.concatenate([pred.w[:, None], pred.v], axis=1)
        return flat.reshape(n, n_samples, 4).transpose(0, 2, 1).copy()
