"""Gated sine-activated coordinate network with exact jet propagation.

The network maps a 4-vector input (x, y, z, tau) to ``out_dim`` channels
through a gated MLP: two sine encoder branches U and V are computed from the
input, and every hidden state is mixed as ``H_{k+1} = (1 - Z_k) * U + Z_k * V``
with a sine gate ``Z_k``.  All layers use sin(omega0 * (W h + b)).

Parameters live in a single flat float64 vector described by a manifest of
(role, rows, cols) records, which keeps serialization, optimizer updates and
gradient accumulation trivially aligned.  The forward pass propagates jets
(value, gradient, Hessian) and the backward pass accumulates d(loss)/d(params)
for losses built from any jet component.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .errors import ConfigurationError

ROLE_INPUT = "input"
ROLE_HIDDEN = "hidden{k}"
ROLE_ENCODER_U = "encoder_u"
ROLE_ENCODER_V = "encoder_v"
ROLE_HEAD = "head"


@dataclass(frozen=True)
class LayerRecord:
    """One parameter tensor inside the flat vector; cols == 0 marks a vector."""

    role: str
    rows: int
    cols: int
    offset: int

    @property
    def size(self) -> int:
        return self.rows * max(self.cols, 1)

    @property
    def shape(self) -> tuple:
        return (self.rows,) if self.cols == 0 else (self.rows, self.cols)


class ParamStore:
    """Flat float64 parameter vector plus its layer manifest."""

    def __init__(self, manifest: list[LayerRecord], values: np.ndarray, omega0: float):
        values = np.ascontiguousarray(values, dtype=np.float64)
        expected = sum(r.size for r in manifest)
        if values.ndim != 1 or len(values) != expected:
            raise ConfigurationError(
                f"manifest describes {expected} scalars but got {values.shape}"
            )
        self.manifest = list(manifest)
        self.values = values
        self.omega0 = float(omega0)
        self._by_role = {r.role: r for r in self.manifest}
        if len(self._by_role) != len(self.manifest):
            raise ConfigurationError("duplicate roles in manifest")

    def __len__(self) -> int:
        return len(self.values)

    def record(self, role: str) -> LayerRecord:
        try:
            return self._by_role[role]
        except KeyError:
            raise ConfigurationError(f"no parameter with role {role!r}") from None

    def view(self, role: str, flat: np.ndarray | None = None) -> np.ndarray:
        """Reshaped view of one tensor inside ``flat`` (default: own values)."""
        rec = self.record(role)
        base = self.values if flat is None else flat
        return base[rec.offset : rec.offset + rec.size].reshape(rec.shape)

    def copy(self) -> "ParamStore":
        return ParamStore(self.manifest, self.values.copy(), self.omega0)


def _build_manifest(in_dim: int, width: int, depth: int, out_dim: int) -> list[LayerRecord]:
    records = []
    offset = 0

    def add(role: str, rows: int, cols: int) -> None:
        nonlocal offset
        records.append(LayerRecord(role, rows, cols, offset))
        offset += rows * max(cols, 1)

    add(f"{ROLE_INPUT}.weight", width, in_dim)
    add(f"{ROLE_INPUT}.bias", width, 0)
    for k in range(2, depth + 1):
        add(f"hidden{k}.weight", width, width)
        add(f"hidden{k}.bias", width, 0)
    add(f"{ROLE_ENCODER_U}.weight", width, in_dim)
    add(f"{ROLE_ENCODER_U}.bias", width, 0)
    add(f"{ROLE_ENCODER_V}.weight", width, in_dim)
    add(f"{ROLE_ENCODER_V}.bias", width, 0)
    add(f"{ROLE_HEAD}.weight", out_dim, width)
    add(f"{ROLE_HEAD}.bias", out_dim, 0)
    return records


@dataclass(frozen=True)
class MlpConfig:
    out_dim: int
    width: int = 512
    depth: int = 3
    omega0: float = 30.0
    in_dim: int = jets.IN_DIM

    def __post_init__(self):
        if self.depth < 1 or self.width < 1 or self.out_dim < 1:
            raise ConfigurationError("depth, width and out_dim must be positive")
        if self.omega0 <= 0:
            raise ConfigurationError("omega0 must be positive")


class ModifiedMLP:
    """Gated sine MLP evaluating jets and parameter gradients."""

    def __init__(self, config: MlpConfig, params: ParamStore):
        expected = _build_manifest(config.in_dim, config.width, config.depth, config.out_dim)
        if [(r.role, r.rows, r.cols) for r in expected] != [
            (r.role, r.rows, r.cols) for r in params.manifest
        ]:
            raise ConfigurationError("parameter manifest does not match network config")
        self.config = config
        self.params = params

    @classmethod
    def initialize(
        cls,
        out_dim: int,
        width: int = 512,
        depth: int = 3,
        omega0: float = 30.0,
        seed: int = 0,
    ) -> "ModifiedMLP":
        """Sine-network initialization: first-layer weights uniform in
        (-1/in_dim, 1/in_dim), deeper weights uniform in
        (-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0)."""
        config = MlpConfig(out_dim=out_dim, width=width, depth=depth, omega0=omega0)
        manifest = _build_manifest(config.in_dim, width, depth, out_dim)
        values = np.zeros(sum(r.size for r in manifest))
        store = ParamStore(manifest, values, omega0)
        rng = np.random.default_rng(seed)
        first = {f"{ROLE_INPUT}.weight", f"{ROLE_ENCODER_U}.weight", f"{ROLE_ENCODER_V}.weight"}
        for rec in manifest:
            v = store.view(rec.role)
            if rec.cols == 0:
                fan_in = config.in_dim if rec.role.split(".")[0] in (
                    ROLE_INPUT, ROLE_ENCODER_U, ROLE_ENCODER_V) else width
                bound = 1.0 / np.sqrt(fan_in)
                v[...] = rng.uniform(-bound, bound, size=rec.shape)
            elif rec.role in first:
                bound = 1.0 / rec.cols
                v[...] = rng.uniform(-bound, bound, size=rec.shape)
            else:
                bound = np.sqrt(6.0 / rec.cols) / omega0
                v[...] = rng.uniform(-bound, bound, size=rec.shape)
        return cls(config, store)

    def with_params(self, params: ParamStore) -> "ModifiedMLP":
        return ModifiedMLP(self.config, params)

    # -- forward ------------------------------------------------------------

    def forward_jets(self, points: np.ndarray, order: int = 2, keep_ctx: bool = False):
        """Evaluate jets of all output channels at a batch of points.

        Returns an array of shape (B, ncomp(order), out_dim); with
        ``keep_ctx`` also returns the saved intermediates needed by
        :meth:`backward_params`.
        """
        cfg = self.config
        w0 = self.params.omega0
        p = self.params.view
        x = jets.seed_input_jets(points, order)

        pre_u = jets.linear_jet(x, p("encoder_u.weight"), p("encoder_u.bias"))
        enc_u, cache_u = jets.sine_jet(pre_u, w0, with_cache=True)
        pre_v = jets.linear_jet(x, p("encoder_v.weight"), p("encoder_v.bias"))
        enc_v, cache_v = jets.sine_jet(pre_v, w0, with_cache=True)
        diff = enc_v - enc_u

        pre = jets.linear_jet(x, p("input.weight"), p("input.bias"))
        h, cache_h = jets.sine_jet(pre, w0, with_cache=True)

        gates = []
        hidden_in = pre
        hidden_cache = cache_h
        for k in range(2, cfg.depth + 1):
            pre_k = jets.linear_jet(h, p(f"hidden{k}.weight"), p(f"hidden{k}.bias"))
            z, cache_k = jets.sine_jet(pre_k, w0, with_cache=True)
            gates.append((h, pre_k, cache_k, z))
            h = enc_u + jets.jet_mul(z, diff)

        out = jets.linear_jet(h, p("head.weight"), p("head.bias"))
        if not keep_ctx:
            return out
        ctx = {
            "x": x,
            "pre_u": pre_u, "cache_u": cache_u, "enc_u": enc_u,
            "pre_v": pre_v, "cache_v": cache_v,
            "diff": diff,
            "pre1": hidden_in, "cache1": hidden_cache,
            "gates": gates,
            "h_last": h,
        }
        return out, ctx

    # -- backward -----------------------------------------------------------

    def backward_params(self, ctx: dict, out_bar: np.ndarray, grad: np.ndarray | None = None) -> np.ndarray:
        """Accumulate d(loss)/d(params) given the loss adjoint of the output jets.

        ``out_bar`` must have the shape of the forward output.  Returns the
        flat gradient vector aligned with the parameter store.
        """
        cfg = self.config
        w0 = self.params.omega0
        p = self.params.view
        if grad is None:
            grad = np.zeros(len(self.params))
        g = lambda role: self.params.view(role, grad)

        hbar = jets.linear_jet_backward(
            out_bar, ctx["h_last"], p("head.weight"), g("head.weight"), g("head.bias"))

        ubar = None
        dbar_sum = None
        for k in range(cfg.depth, 1, -1):
            h_prev, pre_k, cache_k, z = ctx["gates"][k - 2]
            # h = enc_u + z * diff
            zbar, dbar = jets.jet_mul_backward(hbar, z, ctx["diff"])
            ubar = hbar.copy() if ubar is None else ubar + hbar
            dbar_sum = dbar if dbar_sum is None else dbar_sum + dbar
            pre_bar = jets.sine_jet_backward(zbar, pre_k, cache_k, w0)
            hbar = jets.linear_jet_backward(
                pre_bar, h_prev, p(f"hidden{k}.weight"), g(f"hidden{k}.weight"), g(f"hidden{k}.bias"))

        pre_bar = jets.sine_jet_backward(hbar, ctx["pre1"], ctx["cache1"], w0)
        xbar = jets.linear_jet_backward(
            pre_bar, ctx["x"], p("input.weight"), g("input.weight"), g("input.bias"))

        if ubar is not None:
            # diff = enc_v - enc_u feeds every gate; enc_u also enters directly.
            vbar = dbar_sum
            ubar_total = ubar - dbar_sum
            pre_u_bar = jets.sine_jet_backward(ubar_total, ctx["pre_u"], ctx["cache_u"], w0)
            xbar += jets.linear_jet_backward(
                pre_u_bar, ctx["x"], p("encoder_u.weight"), g("encoder_u.weight"), g("encoder_u.bias"))
            pre_v_bar = jets.sine_jet_backward(vbar, ctx["pre_v"], ctx["cache_v"], w0)
            xbar += jets.linear_jet_backward(
                pre_v_bar, ctx["x"], p("encoder_v.weight"), g("encoder_v.weight"), g("encoder_v.bias"))
        return grad


def loss_param_grad(net: ModifiedMLP, points: np.ndarray, loss_fn, order: int = 2):
    """Gradient of a scalar loss of the output jets with respect to all params.

    ``loss_fn`` maps the output jet array to ``(loss, jet_adjoint)``.
    Returns ``(loss, flat_gradient)``.
    """
    out, ctx = net.forward_jets(points, order=order, keep_ctx=True)
    loss, out_bar = loss_fn(out)
    return loss, net.backward_params(ctx, out_bar)
