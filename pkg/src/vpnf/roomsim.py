"""Shoebox image-source simulator producing ground-truth FOA impulse responses.

A rectangular room with walls at the coordinate planes reflects a point
source into a lattice of image sources.  Each image contributes an
inverse-distance spherical pulse; the four FOA channels encode it far-field
as W = p and (X, Y, Z) = p * n_hat with n_hat the unit vector from receiver
to image (SN3D convention, consistent with u = -v / (rho0 c0) for outgoing
waves).  The near-field velocity term is deliberately omitted; amplitudes use
per-wall reflection coefficients sqrt(1 - absorption), frequency-independent.

Pulses are placed with a 64-tap Hann-windowed sinc normalized to unit tap sum
(exact Kronecker delta for integer sample delays).

Simulated data therefore satisfies the momentum balance only up to the
far-field approximation; that error is a property of the renderer, not of the
models evaluated against it.
"""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, SimulationError
from .physics import Medium

WALL_BUFFER = 0.5
TARGET_CUBE_SIZE = 1.0
ABSORPTION_RANGE = (0.1, 0.9)
FRAC_DELAY_TAPS = 64
MAX_PLACEMENT_ATTEMPTS = 10_000

FOAD_MAGIC = b"FOAD"
FOAD_VERSION = 1


@dataclass(frozen=True)
class RoomSpec:
    """Shoebox room with a target measurement cube and one point source.

    ``wall_absorption`` holds six energy absorption coefficients in the order
    (x=0, x=Lx, y=0, y=Ly, z=0, z=Lz).
    """

    dims: tuple[float, float, float]
    wall_absorption: tuple[float, ...]
    source_pos: tuple[float, float, float]
    cube_origin: tuple[float, float, float]
    seed: int = 0
    cube_size: float = TARGET_CUBE_SIZE

    def __post_init__(self):
        dims = np.asarray(self.dims, dtype=np.float64)
        src = np.asarray(self.source_pos, dtype=np.float64)
        org = np.asarray(self.cube_origin, dtype=np.float64)
        if len(self.wall_absorption) != 6:
            raise ConfigurationError("wall_absorption needs 6 coefficients")
        alpha = np.asarray(self.wall_absorption, dtype=np.float64)
        if np.any(alpha <= 0) or np.any(alpha > 1):
            raise ConfigurationError("wall absorption must lie in (0, 1]")
        if np.any(src < WALL_BUFFER) or np.any(src > dims - WALL_BUFFER):
            raise ConfigurationError("source violates the wall buffer")
        if np.any(org < WALL_BUFFER) or np.any(org + self.cube_size > dims - WALL_BUFFER):
            raise ConfigurationError("target cube violates the wall buffer")
        if np.all((src >= org) & (src <= org + self.cube_size)):
            raise ConfigurationError("source must lie outside the target cube")

    @property
    def cube_center(self) -> np.ndarray:
        return np.asarray(self.cube_origin) + self.cube_size / 2.0

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "wall_absorption": list(self.wall_absorption),
            "source_pos": list(self.source_pos),
            "cube_origin": list(self.cube_origin),
            "seed": self.seed,
            "cube_size": self.cube_size,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RoomSpec":
        return cls(
            dims=tuple(d["dims"]),
            wall_absorption=tuple(d["wall_absorption"]),
            source_pos=tuple(d["source_pos"]),
            cube_origin=tuple(d["cube_origin"]),
            seed=int(d["seed"]),
            cube_size=float(d.get("cube_size", TARGET_CUBE_SIZE)),
        )


def sample_room(seed: int) -> RoomSpec:
    """Draw a random room; deterministic per seed.

    Floor dimensions are uniform in [5, 8) m, height in [2.5, 4.5) m,
    per-wall absorption uniform in [0.1, 0.9].  Source and cube are placed by
    rejection inside the 0.5 m buffered interior with the source outside the
    cube.
    """
    rng = np.random.default_rng(seed)
    dims = np.array([*rng.uniform(5.0, 8.0, size=2), rng.uniform(2.5, 4.5)])
    alpha = rng.uniform(*ABSORPTION_RANGE, size=6)
    lo = np.full(3, WALL_BUFFER)
    for _ in range(MAX_PLACEMENT_ATTEMPTS):
        origin = rng.uniform(lo, dims - WALL_BUFFER - TARGET_CUBE_SIZE)
        source = rng.uniform(lo, dims - WALL_BUFFER)
        if np.all((source >= origin) & (source <= origin + TARGET_CUBE_SIZE)):
            continue
        return RoomSpec(
            dims=tuple(dims),
            wall_absorption=tuple(alpha),
            source_pos=tuple(source),
            cube_origin=tuple(origin),
            seed=seed,
        )
    raise ConfigurationError("could not place source and cube inside the room")


def _axis_images(source: float, length: float, center: float, reach: float):
    """Image coordinates along one axis with per-wall reflection counts.

    Walls sit at 0 and ``length``; returns (coords, lo_counts, hi_counts) for
    every image with |coord - center| <= reach.
    """
    coords, lo_counts, hi_counts = [], [], []
    n_min = int(np.floor((center - reach) / (2 * length))) - 1
    n_max = int(np.ceil((center + reach) / (2 * length))) + 1
    for n in range(n_min, n_max + 1):
        x = source + 2 * n * length
        if abs(x - center) <= reach:
            coords.append(x)
            lo_counts.append(abs(n))
            hi_counts.append(abs(n))
        x = -source + 2 * n * length
        if abs(x - center) <= reach:
            coords.append(x)
            if n >= 1:
                lo_counts.append(n - 1)
                hi_counts.append(n)
            else:
                lo_counts.append(abs(n) + 1)
                hi_counts.append(abs(n))
    return np.asarray(coords), np.asarray(lo_counts), np.asarray(hi_counts)


def image_sources(room: RoomSpec, horizon: float, medium: Medium):
    """Image positions and amplitudes reaching the target cube within ``horizon``.

    The direct source is always included; reflected images are kept when
    their distance to the cube center is at most c0 * horizon plus the cube
    half-diagonal.  Images with zero amplitude (fully absorbing walls) are
    dropped.  Returns ``(positions (M, 3), amplitudes (M,))`` with the direct
    source first.
    """
    if horizon <= 0:
        raise ConfigurationError("horizon must be positive")
    center = room.cube_center
    reach = medium.c0 * horizon + np.sqrt(3.0) / 2.0 * room.cube_size
    reflection = np.sqrt(1.0 - np.asarray(room.wall_absorption, dtype=np.float64))

    per_axis = []
    for axis in range(3):
        coords, lo, hi = _axis_images(
            room.source_pos[axis], room.dims[axis], center[axis], reach)
        amp = reflection[2 * axis] ** lo * reflection[2 * axis + 1] ** hi
        per_axis.append((coords, amp))

    (cx, ax_), (cy, ay), (cz, az) = per_axis
    gx, gy, gz = np.meshgrid(cx, cy, cz, indexing="ij")
    positions = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
    amps = (ax_[:, None, None] * ay[None, :, None] * az[None, None, :]).reshape(-1)

    direct = np.asarray(room.source_pos, dtype=np.float64)
    dist = np.linalg.norm(positions - center, axis=1)
    is_direct = np.all(positions == direct, axis=1)
    keep = (dist <= reach) & (amps > 0.0) & ~is_direct
    return (
        np.vstack([direct[None, :], positions[keep]]),
        np.concatenate([[1.0], amps[keep]]),
    )


def fractional_delay_taps(delays: np.ndarray, n_taps: int = FRAC_DELAY_TAPS):
    """Hann-windowed sinc interpolation taps for fractional sample delays.

    Returns integer sample indices (M, n_taps) and tap weights normalized to
    unit sum; an integer delay yields an exact unit impulse.
    """
    delays = np.atleast_1d(np.asarray(delays, dtype=np.float64))
    half = n_taps // 2
    n0 = np.floor(delays).astype(np.int64) - half + 1
    idx = n0[:, None] + np.arange(n_taps)[None, :]
    x = idx - delays[:, None]
    window = 0.5 * (1.0 + np.cos(np.pi * x / half))
    window[np.abs(x) >= half] = 0.0
    taps = np.sinc(x) * window
    taps /= taps.sum(axis=1, keepdims=True)
    return idx, taps


def render_foa_rir(
    receiver: np.ndarray,
    image_pos: np.ndarray,
    image_amp: np.ndarray,
    fs: float,
    n_samples: int,
    medium: Medium,
) -> np.ndarray:
    """FOA impulse response (4, n_samples) at one receiver.

    Each image adds amp / (4 pi d) at delay d / c0; the (X, Y, Z) channels
    scale the same pulse by the receiver-to-image unit vector.
    """
    receiver = np.asarray(receiver, dtype=np.float64)
    delta = np.asarray(image_pos, dtype=np.float64) - receiver
    dist = np.linalg.norm(delta, axis=1)
    if np.any(dist < 1e-9):
        raise SimulationError("receiver coincides with an image source")
    n_hat = delta / dist[:, None]
    gain = np.asarray(image_amp, dtype=np.float64) / (4.0 * np.pi * dist)
    idx, taps = fractional_delay_taps(fs * dist / medium.c0)

    pulses = gain[:, None] * taps
    valid = (idx >= 0) & (idx < n_samples)
    flat_idx = idx[valid]
    out = np.empty((4, n_samples))
    out[0] = np.bincount(flat_idx, weights=pulses[valid], minlength=n_samples)
    for ch in range(3):
        weighted = n_hat[:, ch : ch + 1] * pulses
        out[1 + ch] = np.bincount(flat_idx, weights=weighted[valid], minlength=n_samples)
    return out


@dataclass(frozen=True)
class GridSpec:
    """Regular Cartesian grid filling the target cube (z index fastest)."""

    cube_size: float = TARGET_CUBE_SIZE
    spacing: float = 0.05

    def __post_init__(self):
        n = self.cube_size / self.spacing
        if abs(n - round(n)) > 1e-9:
            raise ConfigurationError("grid spacing must divide the cube size")

    @property
    def n_per_axis(self) -> int:
        return int(round(self.cube_size / self.spacing)) + 1

    @property
    def n_points(self) -> int:
        return self.n_per_axis**3

    def positions(self, origin) -> np.ndarray:
        ax = np.arange(self.n_per_axis) * self.spacing
        gx, gy, gz = np.meshgrid(ax, ax, ax, indexing="ij")
        return np.asarray(origin, dtype=np.float64) + np.stack(
            [gx, gy, gz], axis=-1).reshape(-1, 3)

    def surface_mask(self) -> np.ndarray:
        n = self.n_per_axis
        ii, jj, kk = np.meshgrid(np.arange(n), np.arange(n), np.arange(n), indexing="ij")
        edge = (ii == 0) | (ii == n - 1) | (jj == 0) | (jj == n - 1) | (kk == 0) | (kk == n - 1)
        return edge.reshape(-1)

    def to_dict(self) -> dict:
        return {"cube_size": self.cube_size, "spacing": self.spacing}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(cube_size=float(d["cube_size"]), spacing=float(d["spacing"]))


@dataclass
class FoaDataset:
    """Gridded four-channel impulse responses with their physical context.

    ``rirs`` has shape (N, 4, L) in channel order (W, X, Y, Z); simulated
    datasets hold float32 (the storage precision), synthetic fixtures may
    keep float64 in memory.  Positions are float64 meters.
    """

    fs: float
    positions: np.ndarray
    rirs: np.ndarray
    medium: Medium = field(default_factory=Medium)
    room: RoomSpec | None = None
    grid: GridSpec | None = None

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=np.float64)
        rir_dtype = np.float64 if np.asarray(self.rirs).dtype == np.float64 else np.float32
        self.rirs = np.ascontiguousarray(self.rirs, dtype=rir_dtype)
        if self.rirs.ndim != 3 or self.rirs.shape[1] != 4:
            raise ConfigurationError("rirs must have shape (N, 4, L)")
        if len(self.positions) != len(self.rirs):
            raise ConfigurationError("positions and rirs disagree on N")
        if not np.all(np.isfinite(self.rirs)):
            raise ConfigurationError("rirs contain non-finite samples")

    @property
    def n_positions(self) -> int:
        return len(self.positions)

    @property
    def n_samples(self) -> int:
        return self.rirs.shape[2]

    @property
    def duration(self) -> float:
        return self.n_samples / self.fs

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.fs

    def domain_bounds(self):
        """Axis-aligned bounds of the measurement region."""
        return self.positions.min(axis=0), self.positions.max(axis=0)

    def surface_indices(self) -> np.ndarray:
        if self.grid is not None:
            return np.flatnonzero(self.grid.surface_mask())
        lo, hi = self.domain_bounds()
        on_edge = (np.abs(self.positions - lo) < 1e-9) | (np.abs(self.positions - hi) < 1e-9)
        return np.flatnonzero(np.any(on_edge, axis=1))

    # -- persistence ---------------------------------------------------------

    def save(self, path) -> None:
        header = {
            "fs": self.fs,
            "n_samples": self.n_samples,
            "n_positions": self.n_positions,
            "duration": self.duration,
            "medium": {"rho0": self.medium.rho0, "c0": self.medium.c0},
            "room": self.room.to_dict() if self.room else None,
            "grid": self.grid.to_dict() if self.grid else None,
            "seed": self.room.seed if self.room else 0,
        }
        blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        buf = io.BytesIO()
        buf.write(FOAD_MAGIC)
        buf.write(struct.pack("<I", FOAD_VERSION))
        buf.write(struct.pack("<I", len(blob)))
        buf.write(blob)
        buf.write(self.rirs.astype("<f4").tobytes())
        buf.write(self.positions.astype("<f8").tobytes())
        with open(path, "wb") as fh:
            fh.write(buf.getvalue())

    @classmethod
    def load(cls, path) -> "FoaDataset":
        with open(path, "rb") as fh:
            data = fh.read()
        if data[:4] != FOAD_MAGIC:
            raise ConfigurationError(f"{path}: not a dataset file (bad magic)")
        off = 4
        (version,) = struct.unpack_from("<I", data, off); off += 4
        if version != FOAD_VERSION:
            raise ConfigurationError(f"{path}: unsupported dataset version {version}")
        (hlen,) = struct.unpack_from("<I", data, off); off += 4
        header = json.loads(data[off : off + hlen].decode("utf-8")); off += hlen
        n = int(header["n_positions"])
        L = int(header["n_samples"])
        rirs = np.frombuffer(data, dtype="<f4", count=n * 4 * L, offset=off).reshape(n, 4, L)
        off += 4 * n * 4 * L
        positions = np.frombuffer(data, dtype="<f8", count=n * 3, offset=off).reshape(n, 3)
        return cls(
            fs=float(header["fs"]),
            positions=positions.copy(),
            rirs=rirs.copy(),
            medium=Medium(**header["medium"]),
            room=RoomSpec.from_dict(header["room"]) if header["room"] else None,
            grid=GridSpec.from_dict(header["grid"]) if header["grid"] else None,
        )


def build_dataset(
    room: RoomSpec,
    grid: GridSpec | None = None,
    fs: float = 8000.0,
    duration: float = 0.1,
    medium: Medium | None = None,
) -> FoaDataset:
    """Render the full measurement grid of a room; deterministic per room."""
    grid = grid or GridSpec()
    medium = medium or Medium()
    n_samples = int(round(fs * duration))
    if n_samples < 1:
        raise ConfigurationError("duration too short for the sample rate")
    positions = grid.positions(room.cube_origin)
    img_pos, img_amp = image_sources(room, horizon=duration, medium=medium)
    rirs = np.empty((len(positions), 4, n_samples), dtype=np.float32)
    for i, receiver in enumerate(positions):
        rirs[i] = render_foa_rir(receiver, img_pos, img_amp, fs, n_samples, medium)
    return FoaDataset(fs=fs, positions=positions, rirs=rirs,
                      medium=medium, room=room, grid=grid)
