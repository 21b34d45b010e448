"""Simulator: geometry sampling, image enumeration, rendering, persistence."""

import numpy as np
import pytest

from vpnf.errors import ConfigurationError, SimulationError
from vpnf.physics import Medium
from vpnf.roomsim import (
    FoaDataset,
    GridSpec,
    RoomSpec,
    _axis_images,
    build_dataset,
    fractional_delay_taps,
    image_sources,
    render_foa_rir,
    sample_room,
)

MEDIUM = Medium()


def free_field_room(source=(4.0, 1.0, 1.5), origin=(1.0, 1.0, 1.0)):
    """Fully absorbing walls: only the direct path survives."""
    return RoomSpec(dims=(6.0, 6.0, 4.0), wall_absorption=(1.0,) * 6,
                    source_pos=source, cube_origin=origin)


class TestRoomSpec:
    def test_buffer_violation(self):
        with pytest.raises(ConfigurationError):
            RoomSpec(dims=(6.0, 6.0, 3.0), wall_absorption=(0.5,) * 6,
                     source_pos=(0.1, 3.0, 1.5), cube_origin=(2.0, 2.0, 1.0))

    def test_source_inside_cube_rejected(self):
        with pytest.raises(ConfigurationError):
            RoomSpec(dims=(6.0, 6.0, 3.0), wall_absorption=(0.5,) * 6,
                     source_pos=(2.5, 2.5, 1.5), cube_origin=(2.0, 2.0, 1.0))

    def test_dict_round_trip(self):
        room = sample_room(5)
        assert RoomSpec.from_dict(room.to_dict()) == room


class TestSampleRoom:
    def test_deterministic(self):
        a, b = sample_room(42), sample_room(42)
        assert a == b

    def test_thousand_rooms_satisfy_invariants(self):
        for seed in range(1000):
            room = sample_room(seed)  # __post_init__ enforces the invariants
            dims = np.asarray(room.dims)
            assert np.all(dims[:2] >= 5.0) and np.all(dims[:2] < 8.0)
            assert 2.5 <= dims[2] < 4.5
            assert np.all(np.asarray(room.wall_absorption) >= 0.1)
            assert np.all(np.asarray(room.wall_absorption) <= 0.9)

    def test_smallest_room_feasible(self):
        # Slack per horizontal axis: 5 - 2*0.5 - 1.0 = 3.0 m.
        dims = np.array([5.0, 5.0, 2.5])
        hi = dims - 0.5 - 1.0
        assert np.all(hi - 0.5 > 0)
        RoomSpec(dims=tuple(dims), wall_absorption=(0.5,) * 6,
                 source_pos=(0.6, 0.6, 0.6), cube_origin=(2.0, 2.0, 0.8))


def brute_force_axis_mirrors(source, length, max_order=20):
    """BFS mirror enumeration along one axis, deduplicated by position."""
    found = {round(source, 9): (0, 0)}
    frontier = [(source, 0, 0)]
    for _ in range(max_order):
        nxt = []
        for x, lo, hi in frontier:
            for (xm, lom, him) in ((-x, lo + 1, hi), (2 * length - x, lo, hi + 1)):
                key = round(xm, 9)
                if key not in found:
                    found[key] = (lom, him)
                    nxt.append((xm, lom, him))
        frontier = nxt
    return found


class TestAxisImages:
    def test_corridor_against_brute_force(self):
        source, length = 2.3, 6.0
        center, reach = 3.0, 100.0
        coords, lo, hi = _axis_images(source, length, center, reach)
        oracle = brute_force_axis_mirrors(source, length)
        assert len(coords) == len(set(np.round(coords, 9)))
        for x, nlo, nhi in zip(coords, lo, hi):
            assert oracle[round(float(x), 9)] == (nlo, nhi)

    def test_coordinates_form(self):
        source, length = 1.1, 5.0
        coords, _, _ = _axis_images(source, length, center=0.0, reach=40.0)
        shifted = (np.abs(coords) - source) % (2 * length)
        ok = np.minimum(shifted, 2 * length - shifted)
        # every coordinate is +-source + 2 n length
        assert np.all((ok < 1e-9) | (np.abs(ok - 2 * source % (2 * length)) < 1e-9))


class TestImageSources:
    def test_full_absorption_leaves_direct(self):
        room = free_field_room()
        pos, amp = image_sources(room, horizon=0.1, medium=MEDIUM)
        assert pos.shape == (1, 3)
        np.testing.assert_array_equal(pos[0], room.source_pos)
        assert amp[0] == 1.0

    def test_tiny_horizon_leaves_direct(self):
        room = RoomSpec(dims=(6.0, 6.0, 4.0), wall_absorption=(0.3,) * 6,
                        source_pos=(4.5, 1.0, 1.5), cube_origin=(1.0, 1.0, 1.0))
        pos, _ = image_sources(room, horizon=1e-6, medium=MEDIUM)
        assert len(pos) == 1
        np.testing.assert_array_equal(pos[0], room.source_pos)

    def test_amplitudes_decrease_with_reflections(self):
        room = sample_room(3)
        pos, amp = image_sources(room, horizon=0.05, medium=MEDIUM)
        assert np.all(amp > 0) and np.all(amp <= 1.0)
        assert len(pos) > 10

    def test_horizon_monotone(self):
        room = sample_room(4)
        n_short = len(image_sources(room, 0.02, MEDIUM)[0])
        n_long = len(image_sources(room, 0.05, MEDIUM)[0])
        assert n_short < n_long


class TestFractionalDelay:
    def test_integer_delay_is_unit_impulse(self):
        idx, taps = fractional_delay_taps(np.array([10.0]))
        peak = np.argmax(np.abs(taps[0]))
        assert idx[0, peak] == 10
        np.testing.assert_allclose(taps[0, peak], 1.0, atol=1e-12)
        others = np.delete(taps[0], peak)
        np.testing.assert_allclose(others, 0.0, atol=1e-12)

    def test_unit_tap_sum(self):
        delays = np.array([3.25, 17.5, 100.999])
        _, taps = fractional_delay_taps(delays)
        np.testing.assert_allclose(taps.sum(axis=1), 1.0, atol=1e-12)

    def test_peak_within_half_sample(self):
        delays = np.array([20.3, 33.7, 64.49])
        idx, taps = fractional_delay_taps(delays)
        for d, row_idx, row in zip(delays, idx, taps):
            peak = row_idx[np.argmax(np.abs(row))]
            assert abs(peak - d) <= 0.5


class TestRenderFoaRir:
    def test_green_function_amplitude(self):
        # Free field, 1 m, fs chosen so the delay lands on a sample:
        # the W peak is exactly 1/(4 pi d) = 1/(4 pi).
        fs = 25 * 343.0  # 1 m <-> exactly 25 samples
        room = free_field_room(source=(2.5, 1.2, 1.2), origin=(1.0, 1.0, 1.0))
        receiver = np.array([1.5, 1.2, 1.2])
        pos, amp = image_sources(room, 0.1, MEDIUM)
        rir = render_foa_rir(receiver, pos, amp, fs, 400, MEDIUM)
        peak = np.argmax(np.abs(rir[0]))
        assert peak == round(fs * 1.0 / 343.0) == 25
        np.testing.assert_allclose(rir[0, peak], 1.0 / (4 * np.pi), rtol=1e-12)

    def test_pulse_sum_amplitude_generic_distance(self):
        # Unit-DC taps: the summed pulse equals 1/(4 pi d) for any delay.
        fs = 8000.0
        room = free_field_room(source=(4.7, 1.3, 1.4), origin=(1.0, 1.0, 1.0))
        receiver = np.array([1.1, 1.7, 1.3])
        d = np.linalg.norm(np.asarray(room.source_pos) - receiver)
        pos, amp = image_sources(room, 0.1, MEDIUM)
        rir = render_foa_rir(receiver, pos, amp, fs, 800, MEDIUM)
        np.testing.assert_allclose(rir[0].sum(), 1.0 / (4 * np.pi * d), rtol=1e-9)

    def test_time_of_arrival_within_half_tap(self):
        fs = 8000.0
        room = free_field_room(source=(4.32, 1.21, 1.37), origin=(1.0, 1.0, 1.0))
        receiver = np.array([1.45, 1.62, 1.58])
        d = np.linalg.norm(np.asarray(room.source_pos) - receiver)
        pos, amp = image_sources(room, 0.1, MEDIUM)
        rir = render_foa_rir(receiver, pos, amp, fs, 800, MEDIUM)
        peak = np.argmax(np.abs(rir[0]))
        assert abs(peak - fs * d / 343.0) <= 0.5 + 1e-9

    def test_axis_aligned_doa(self):
        room = free_field_room(source=(4.0, 1.2, 1.2), origin=(1.0, 1.0, 1.0))
        receiver = np.array([1.2, 1.2, 1.2])  # source due +x
        pos, amp = image_sources(room, 0.1, MEDIUM)
        rir = render_foa_rir(receiver, pos, amp, 8000.0, 800, MEDIUM)
        scale = np.max(np.abs(rir[1]))
        np.testing.assert_allclose(rir[1], rir[0], atol=1e-12 * scale)
        assert np.max(np.abs(rir[2])) <= 1e-12 * scale
        assert np.max(np.abs(rir[3])) <= 1e-12 * scale

    def test_single_image_direction_identity(self):
        room = free_field_room(source=(4.0, 2.1, 2.4), origin=(1.0, 1.0, 1.0))
        receiver = np.array([1.3, 1.5, 1.1])
        pos, amp = image_sources(room, 0.1, MEDIUM)
        rir = render_foa_rir(receiver, pos, amp, 8000.0, 800, MEDIUM)
        n_hat = (pos[0] - receiver) / np.linalg.norm(pos[0] - receiver)
        live = np.abs(rir[0]) > 1e-6
        for ch in range(3):
            ratio = rir[1 + ch, live] / rir[0, live]
            np.testing.assert_allclose(ratio, n_hat[ch], atol=1e-9)

    def test_inverse_distance_energy_law(self):
        # 1% tolerance absorbs the windowed-sinc sidelobe leakage, which
        # depends on the fractional part of each delay.
        fs = 8000.0
        room = free_field_room(source=(5.0, 1.2, 1.2), origin=(1.0, 1.0, 1.0))
        pos, amp = image_sources(room, 0.1, MEDIUM)
        d1, d2 = 3.44, 2.58
        r1 = np.array([5.0 - d1, 1.2, 1.2])
        r2 = np.array([5.0 - d2, 1.2, 1.2])
        e1 = np.sum(render_foa_rir(r1, pos, amp, fs, 800, MEDIUM)[0] ** 2)
        e2 = np.sum(render_foa_rir(r2, pos, amp, fs, 800, MEDIUM)[0] ** 2)
        np.testing.assert_allclose(e2 / e1, (d1 / d2) ** 2, rtol=0.01)

    def test_receiver_on_image_errors(self):
        room = free_field_room()
        pos, amp = image_sources(room, 0.1, MEDIUM)
        with pytest.raises(SimulationError):
            render_foa_rir(np.asarray(room.source_pos), pos, amp, 8000.0, 800, MEDIUM)


class TestGrid:
    def test_default_grid_count(self):
        grid = GridSpec()
        assert grid.n_per_axis == 21
        assert grid.n_points == 9261
        assert len(grid.positions((0, 0, 0))) == 9261

    def test_surface_count(self):
        assert int(GridSpec().surface_mask().sum()) == 21**3 - 19**3 == 2402

    def test_spacing_must_divide(self):
        with pytest.raises(ConfigurationError):
            GridSpec(spacing=0.3)

    def test_positions_span_cube(self):
        grid = GridSpec(spacing=0.5)
        pos = grid.positions((1.0, 2.0, 3.0))
        np.testing.assert_array_equal(pos.min(axis=0), [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(pos.max(axis=0), [2.0, 3.0, 4.0])


class TestBuildDataset:
    def test_shapes_and_duration(self):
        room = sample_room(0)
        ds = build_dataset(room, grid=GridSpec(spacing=0.5), fs=8000.0, duration=0.01)
        assert ds.rirs.shape == (27, 4, 80)
        assert ds.n_samples == int(8000 * 0.01)
        assert np.all(np.isfinite(ds.rirs))

    def test_default_sample_count(self):
        assert int(round(8000.0 * 0.1)) == 800

    def test_deterministic(self):
        room = sample_room(1)
        a = build_dataset(room, grid=GridSpec(spacing=0.5), fs=4000.0, duration=0.01)
        b = build_dataset(room, grid=GridSpec(spacing=0.5), fs=4000.0, duration=0.01)
        np.testing.assert_array_equal(a.rirs, b.rirs)
        np.testing.assert_array_equal(a.positions, b.positions)

    def test_surface_indices(self):
        room = sample_room(2)
        ds = build_dataset(room, grid=GridSpec(spacing=0.25), fs=2000.0, duration=0.005)
        surf = ds.surface_indices()
        assert len(surf) == 5**3 - 3**3
        lo, hi = ds.domain_bounds()
        on_edge = np.any(
            (np.abs(ds.positions[surf] - lo) < 1e-12) | (np.abs(ds.positions[surf] - hi) < 1e-12),
            axis=1)
        assert np.all(on_edge)


class TestFoadFile:
    def test_bit_exact_round_trip(self, tmp_path):
        room = sample_room(7)
        ds = build_dataset(room, grid=GridSpec(spacing=0.5), fs=2000.0, duration=0.01)
        p1 = tmp_path / "a.foad"
        p2 = tmp_path / "b.foad"
        ds.save(p1)
        ds2 = FoaDataset.load(p1)
        ds2.save(p2)
        assert p1.read_bytes() == p2.read_bytes()
        np.testing.assert_array_equal(ds.rirs, ds2.rirs)
        np.testing.assert_array_equal(ds.positions, ds2.positions)
        assert ds2.room == room
        assert ds2.grid == ds.grid

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "junk.foad"
        p.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ConfigurationError):
            FoaDataset.load(p)
