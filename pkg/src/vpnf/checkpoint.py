"""Binary checkpoint format for field models.

Layout (all integers little-endian):

    bytes 0..3   magic ``VPNF``
    u32          format version (currently 1)
    u32          number of layer records
    per record:  u32 role length, role utf-8 bytes, u32 rows, u32 cols
                 (cols == 0 marks a bias vector of length rows)
    f32 block    parameters in manifest order (single precision on disk,
                 promoted to float64 in memory)
    u32          metadata length
    metadata     canonical JSON: omega0, depth, width, head, normalization
                 record, medium, RNG seed

Canonical JSON (sorted keys, no whitespace) makes load -> save byte-identical.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from .errors import ConfigurationError
from .fields import HEAD_OUT_DIM, FieldModel, NormalizationRecord
from .network import LayerRecord, MlpConfig, ModifiedMLP, ParamStore
from .physics import Medium

MAGIC = b"VPNF"
VERSION = 1


def _meta_dict(model: FieldModel) -> dict:
    cfg = model.net.config
    return {
        "omega0": model.net.params.omega0,
        "depth": cfg.depth,
        "width": cfg.width,
        "out_dim": cfg.out_dim,
        "head": model.head,
        "multiplier": "normalized",
        "normalization": {
            "center": list(model.norm.center),
            "spatial_half_extent": model.norm.spatial_half_extent,
            "time_scale": model.norm.time_scale,
            "input_scale": model.norm.input_scale,
        },
        "medium": {"rho0": model.medium.rho0, "c0": model.medium.c0},
        "seed": model.seed,
    }


def save_model(model: FieldModel, path) -> None:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    manifest = model.net.params.manifest
    buf.write(struct.pack("<I", len(manifest)))
    for rec in manifest:
        role = rec.role.encode("utf-8")
        buf.write(struct.pack("<I", len(role)))
        buf.write(role)
        buf.write(struct.pack("<II", rec.rows, rec.cols))
    buf.write(model.net.params.values.astype("<f4").tobytes())
    meta = json.dumps(_meta_dict(model), sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf.write(struct.pack("<I", len(meta)))
    buf.write(meta)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_model(path) -> FieldModel:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != MAGIC:
        raise ConfigurationError(f"{path}: not a checkpoint file (bad magic)")
    off = 4
    (version,) = struct.unpack_from("<I", data, off); off += 4
    if version != VERSION:
        raise ConfigurationError(f"{path}: unsupported checkpoint version {version}")
    (n_rec,) = struct.unpack_from("<I", data, off); off += 4
    manifest = []
    offset = 0
    for _ in range(n_rec):
        (role_len,) = struct.unpack_from("<I", data, off); off += 4
        role = data[off : off + role_len].decode("utf-8"); off += role_len
        rows, cols = struct.unpack_from("<II", data, off); off += 8
        manifest.append(LayerRecord(role, rows, cols, offset))
        offset += rows * max(cols, 1)
    values = np.frombuffer(data, dtype="<f4", count=offset, offset=off).astype(np.float64)
    off += 4 * offset
    (meta_len,) = struct.unpack_from("<I", data, off); off += 4
    meta = json.loads(data[off : off + meta_len].decode("utf-8"))

    head = meta["head"]
    if head not in HEAD_OUT_DIM:
        raise ConfigurationError(f"{path}: unknown head {head!r}")
    params = ParamStore(manifest, values, float(meta["omega0"]))
    config = MlpConfig(
        out_dim=int(meta["out_dim"]),
        width=int(meta["width"]),
        depth=int(meta["depth"]),
        omega0=float(meta["omega0"]),
    )
    norm_d = meta["normalization"]
    norm = NormalizationRecord(
        center=tuple(norm_d["center"]),
        spatial_half_extent=norm_d["spatial_half_extent"],
        time_scale=norm_d["time_scale"],
        input_scale=norm_d["input_scale"],
    )
    medium = Medium(rho0=meta["medium"]["rho0"], c0=meta["medium"]["c0"])
    return FieldModel(
        net=ModifiedMLP(config, params),
        head=head,
        norm=norm,
        medium=medium,
        seed=int(meta["seed"]),
    )
