import math

import numpy as np
import pytest

from spvkit.errors import DimensionError, GeometryError, ParameterError
from spvkit.phosphenes import (
    ElectrodeActivation,
    GridConfig,
    apply_dropout,
    build_grid,
    downsample,
    quantize,
    render,
)


def box_average_oracle(frame, rows, cols):
    """Brute-force box average over the floor-boundary partition."""
    h, w = frame.shape
    out = np.zeros((rows, cols))
    for i in range(rows):
        for j in range(cols):
            y0, y1 = i * h // rows, (i + 1) * h // rows
            x0, x1 = j * w // cols, (j + 1) * w // cols
            total = 0.0
            count = 0
            for y in range(y0, y1):
                for x in range(x0, x1):
                    total += frame[y, x]
                    count += 1
            out[i, j] = total / count
    return out


# ---------------------------------------------------------------- downsample


def test_downsample_constant_preserved():
    out = downsample(np.ones((100, 70)), 32, 32)
    assert out.shape == (32, 32)
    assert np.all(out == 1.0)


def test_downsample_half_split():
    frame = np.zeros((64, 64))
    frame[:, 32:] = 1.0
    out = downsample(frame, 32, 32)
    assert np.all(out[:, :16] == 0.0)
    assert np.all(out[:, 16:] == 1.0)


def test_downsample_yields_1024_cells():
    out = downsample(np.random.default_rng(3).random((50, 90)), 32, 32)
    assert out.size == 1024


def test_downsample_matches_oracle(rng):
    for _ in range(5):
        frame = rng.random((64, 64))
        got = downsample(frame, 32, 32)
        assert np.max(np.abs(got - box_average_oracle(frame, 32, 32))) <= 1e-6


def test_downsample_uneven_matches_oracle(rng):
    frame = rng.random((37, 53))
    got = downsample(frame, 7, 11)
    assert np.max(np.abs(got - box_average_oracle(frame, 7, 11))) <= 1e-6


def test_downsample_too_small_input():
    with pytest.raises(DimensionError):
        downsample(np.zeros((16, 64)), 32, 32)


# ------------------------------------------------------------------ quantize


def test_quantize_endpoints():
    act = quantize(np.array([[0.0, 1.0]]), 8)
    assert act.levels[0, 0] == 0
    assert act.levels[0, 1] == 7


def test_quantize_half_rounds_up():
    # 0.5 * 7 = 3.5, ties go up
    act = quantize(np.array([[0.5]]), 8)
    assert act.levels[0, 0] == 4


def test_quantize_enumerated_reconstruction_points():
    points = np.array([[k / 7 for k in range(8)]])
    act = quantize(points, 8)
    assert list(act.levels[0]) == list(range(8))


def test_quantize_monotone(rng):
    values = np.sort(rng.random(500))
    levels = quantize(values[None, :], 8).levels[0]
    assert np.all(np.diff(levels) >= 0)


def test_quantize_reconstruct_idempotent():
    act = ElectrodeActivation(levels=np.arange(8)[None, :], num_levels=8)
    again = quantize(act.reconstruct(), 8)
    assert np.array_equal(again.levels, act.levels)


def test_quantize_rejects_single_level():
    with pytest.raises(ParameterError):
        quantize(np.zeros((2, 2)), 1)


# ---------------------------------------------------------------- build_grid


def test_grid_32x32_geometry_oracle():
    grid = build_grid(32, 32, 512, 512)
    assert grid.count == 1024
    assert grid.centers.shape == (1024, 2)
    assert grid.pitch_x == 16.0
    # independent recomputation from the packing formula
    pitch_y = 16.0 * math.sqrt(3) / 2
    margin_y = (512 - 31 * pitch_y) / 2
    for r in (0, 1, 17, 31):
        for c in (0, 5, 31):
            x = 8.0 + 16.0 * c + (8.0 if r % 2 else 0.0)
            y = margin_y + r * pitch_y
            got = grid.centers[r * 32 + c]
            assert got[0] == pytest.approx(x, abs=1e-9)
            assert got[1] == pytest.approx(y, abs=1e-9)
    assert grid.alive.all()


def test_grid_odd_row_offset_is_half_pitch():
    grid = build_grid(32, 32, 512, 512)
    even = grid.centers[0]
    odd = grid.centers[32]
    assert odd[0] - even[0] == pytest.approx(grid.pitch_x / 2)


def test_grid_pitch_ratio_is_hexagonal():
    for rows, cols, w, h in ((32, 32, 512, 512), (16, 24, 384, 384), (8, 8, 64, 64)):
        grid = build_grid(rows, cols, w, h)
        dy = grid.centers[cols, 1] - grid.centers[0, 1]
        dx = grid.centers[1, 0] - grid.centers[0, 0]
        assert abs(dy / dx - math.sqrt(3) / 2) * dx <= 1.0  # within one pixel


def test_grid_degenerate_single_center():
    grid = build_grid(1, 1, 512, 512)
    assert grid.count == 1
    assert tuple(grid.centers[0]) == (256.0, 256.0)


def test_grid_canvas_too_small():
    with pytest.raises(GeometryError):
        build_grid(32, 32, 64, 64)  # pitch_x = 2 < 4


def test_grid_rejects_cutoff_below_two_sigma():
    with pytest.raises(GeometryError):
        build_grid(8, 8, 256, 256, sigma_ratio=3.2, cutoff_ratio=2.0)


# ------------------------------------------------------------------- dropout


def test_dropout_zero_rate_is_identity():
    grid = build_grid(8, 8, 128, 128)
    assert apply_dropout(grid, 0.0, 5) is grid


def test_dropout_count_1024():
    grid = build_grid(32, 32, 512, 512)
    dropped = apply_dropout(grid, 0.10, 11)
    assert int((~dropped.alive).sum()) == 102


def test_dropout_deterministic():
    grid = build_grid(32, 32, 512, 512)
    a = apply_dropout(grid, 0.10, 99)
    b = apply_dropout(grid, 0.10, 99)
    assert a.alive.tobytes() == b.alive.tobytes()
    c = apply_dropout(grid, 0.10, 100)
    assert a.alive.tobytes() != c.alive.tobytes()


def test_dropout_rate_validated():
    grid = build_grid(8, 8, 128, 128)
    with pytest.raises(ParameterError):
        apply_dropout(grid, 1.5, 0)


# -------------------------------------------------------------------- render


def full_activation(rows, cols, level=7, num_levels=8):
    return ElectrodeActivation(levels=np.full((rows, cols), level), num_levels=num_levels)


def test_render_all_zero_levels():
    grid = build_grid(8, 8, 128, 128)
    out = render(full_activation(8, 8, level=0), grid)
    assert out.shape == (128, 128)
    assert not out.any()


def test_render_single_phosphene_profile():
    grid = build_grid(1, 1, 64, 64)  # center (32, 32), sigma 16, cutoff 32
    out = render(full_activation(1, 1), grid)
    assert out[32, 32] == pytest.approx(1.0, abs=1e-12)
    assert out[32, 32 + 16] == pytest.approx(math.exp(-0.5), abs=1e-12)
    # direct evaluation at every pixel
    ys, xs = np.mgrid[0:64, 0:64]
    d2 = (xs - 32.0) ** 2 + (ys - 32.0) ** 2
    expected = np.exp(-d2 / (2 * 16.0**2))
    expected[d2 > 32.0**2] = 0.0
    assert np.max(np.abs(out - expected)) <= 1e-12


def test_render_beyond_cutoff_is_zero():
    grid = build_grid(1, 1, 64, 64)
    out = render(full_activation(1, 1), grid)
    assert out[32, 0] == pytest.approx(math.exp(-2.0), abs=1e-12)  # exactly at cutoff
    assert out[32 + 20, 32 + 26] == 0.0  # distance ~32.8 > cutoff
    assert out[0, 0] == 0.0  # corner is far outside the dot


def test_render_dimension_mismatch():
    grid = build_grid(8, 8, 128, 128)
    with pytest.raises(GeometryError):
        render(full_activation(4, 4), grid)


def test_render_monotone_in_levels(rng):
    grid = build_grid(8, 8, 128, 128)
    levels = rng.integers(0, 8, size=(8, 8))
    base = render(ElectrodeActivation(levels=levels, num_levels=8), grid)
    for cell in ((0, 0), (3, 4), (7, 7)):
        if levels[cell] == 7:
            continue
        raised = levels.copy()
        raised[cell] += 1
        higher = render(ElectrodeActivation(levels=raised, num_levels=8), grid)
        assert np.all(higher >= base)


def test_render_radial_symmetry():
    grid = build_grid(1, 1, 64, 64)
    out = render(full_activation(1, 1), grid)
    cx = cy = 32
    for dx, dy in ((1, 2), (5, 3), (10, 7)):
        vals = {
            out[cy + dy, cx + dx],
            out[cy - dy, cx + dx],
            out[cy + dx, cx + dy],
            out[cy - dx, cx - dy],
        }
        assert max(vals) - min(vals) <= 1e-12


def test_render_survivors_unchanged_by_dropout(rng):
    grid = build_grid(8, 8, 128, 128)
    dropped = apply_dropout(grid, 0.25, 3)
    act = ElectrodeActivation(levels=rng.integers(0, 8, size=(8, 8)), num_levels=8)
    full = render(act, grid)
    part = render(act, dropped)
    ys, xs = np.mgrid[0:128, 0:128]
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(float)

    def min_dist(centers):
        if len(centers) == 0:
            return np.full(pts.shape[0], np.inf)
        d2 = ((pts[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        return np.sqrt(d2.min(axis=1))

    alive_centers = dropped.centers[dropped.alive]
    dead_centers = dropped.centers[~dropped.alive]
    near_alive = min_dist(alive_centers) <= grid.dot_cutoff_radius
    far_from_dead = min_dist(dead_centers) > grid.dot_cutoff_radius
    mask = (near_alive & far_from_dead).reshape(128, 128)
    assert mask.any()
    assert np.array_equal(full[mask], part[mask])


# --------------------------------------------------------------- grid config


def test_grid_config_round_trip():
    config = GridConfig(rows=16, cols=24, canvas=384, dropout_rate=0.1, seed=42)
    parsed = GridConfig.from_text(config.to_text())
    assert parsed == config


def test_grid_config_parses_comments_and_errors():
    parsed = GridConfig.from_text("rows = 8\n# comment\ncols=8\ncanvas = 128\n")
    assert (parsed.rows, parsed.cols, parsed.canvas) == (8, 8, 128)
    with pytest.raises(ParameterError):
        GridConfig.from_text("rows = 8\nbogus_key = 3\n")


def test_grid_config_build_applies_dropout():
    grid = GridConfig(rows=32, cols=32, canvas=512, dropout_rate=0.10, seed=1).build()
    assert int((~grid.alive).sum()) == 102
