"""Phosphene model: electrode-grid downsampling, luminance quantization,
hexagonal grid geometry, Gaussian dot rendering and dropout.

The simulated display is a hexagonally packed array of grayscale dots.
Each dot has maximum intensity at its center and falls off as an
unnormalized Gaussian, truncated at a cutoff radius:

    value(x, y) = A * exp(-((x - mx)^2 + (y - my)^2) / (2 * sigma^2))

where A is the reconstructed luminance of the dot's electrode cell.
Overlapping dots compose by maximum, which keeps values in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import DimensionError, GeometryError, ParameterError
from .frames import validate_luma

__all__ = [
    "ElectrodeActivation",
    "PhospheneGrid",
    "GridConfig",
    "downsample",
    "quantize",
    "build_grid",
    "apply_dropout",
    "render",
]


@dataclass(frozen=True)
class ElectrodeActivation:
    """Quantized luminance levels for a rows x cols electrode array."""

    levels: np.ndarray  # (rows, cols) ints in [0, num_levels)
    num_levels: int

    def __post_init__(self):
        levels = np.asarray(self.levels)
        if levels.ndim != 2:
            raise DimensionError(f"levels must be 2-D, got shape {levels.shape}")
        if self.num_levels < 2:
            raise ParameterError(f"need at least 2 luminance levels, got {self.num_levels}")
        if levels.size and (levels.min() < 0 or levels.max() >= self.num_levels):
            raise ValueError(
                f"level indices must lie in [0, {self.num_levels}), "
                f"got range [{levels.min()}, {levels.max()}]"
            )
        levels.setflags(write=False)
        object.__setattr__(self, "levels", levels)

    @property
    def rows(self) -> int:
        return self.levels.shape[0]

    @property
    def cols(self) -> int:
        return self.levels.shape[1]

    def reconstruct(self) -> np.ndarray:
        """Map level indices back to luminance: level k -> k / (num_levels - 1)."""
        return self.levels.astype(np.float64) / (self.num_levels - 1)


@dataclass(frozen=True)
class PhospheneGrid:
    """Hexagonal dot-array geometry on an output canvas.

    Odd rows are shifted right by half the horizontal pitch and the
    vertical pitch is pitch_x * sqrt(3)/2, which puts all six neighbors
    of a dot at exactly pitch_x distance.
    """

    rows: int
    cols: int
    width: int
    height: int
    pitch_x: float
    dot_sigma: float
    dot_cutoff_radius: float
    centers: np.ndarray = field(repr=False)  # (rows*cols, 2) float, (x, y) row-major
    alive: np.ndarray = field(repr=False)  # (rows*cols,) bool

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=np.float64)
        alive = np.asarray(self.alive, dtype=bool)
        n = self.rows * self.cols
        if centers.shape != (n, 2):
            raise GeometryError(f"expected {n} centers, got shape {centers.shape}")
        if alive.shape != (n,):
            raise GeometryError(f"expected {n} alive flags, got shape {alive.shape}")
        if self.dot_cutoff_radius < 2.0 * self.dot_sigma - 1e-9:
            raise GeometryError(
                f"dot_cutoff_radius ({self.dot_cutoff_radius:.3f}) must be at least "
                f"2 * dot_sigma ({2 * self.dot_sigma:.3f}) so dots fade out before truncation"
            )
        centers.setflags(write=False)
        alive.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "alive", alive)

    @property
    def count(self) -> int:
        return self.rows * self.cols

    @cached_property
    def _stamps(self):
        """Per-phosphene (y-slice, x-slice, gaussian window) at unit amplitude."""
        r = self.dot_cutoff_radius
        two_sigma_sq = 2.0 * self.dot_sigma * self.dot_sigma
        stamps = []
        for cx, cy in self.centers:
            x0 = max(0, math.ceil(cx - r))
            x1 = min(self.width - 1, math.floor(cx + r))
            y0 = max(0, math.ceil(cy - r))
            y1 = min(self.height - 1, math.floor(cy + r))
            if x0 > x1 or y0 > y1:
                stamps.append(None)
                continue
            dx2 = (np.arange(x0, x1 + 1, dtype=np.float64) - cx) ** 2
            dy2 = (np.arange(y0, y1 + 1, dtype=np.float64) - cy) ** 2
            d2 = dy2[:, None] + dx2[None, :]
            g = np.exp(-d2 / two_sigma_sq)
            g[d2 > r * r] = 0.0
            stamps.append((slice(y0, y1 + 1), slice(x0, x1 + 1), g))
        return stamps


def downsample(frame: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Box-average a luma frame down to a rows x cols frame.

    The input is partitioned into rows x cols rectangles with boundaries
    floor(i * size / n); each output cell is the arithmetic mean of its box.
    """
    frame = validate_luma(frame)
    h, w = frame.shape
    if rows < 1 or cols < 1:
        raise ParameterError(f"target grid must be at least 1x1, got {rows}x{cols}")
    if h < rows or w < cols:
        raise DimensionError(f"input {w}x{h} is smaller than the {cols}x{rows} target grid")
    ys = (np.arange(rows + 1, dtype=np.int64) * h) // rows
    xs = (np.arange(cols + 1, dtype=np.int64) * w) // cols
    sums = np.add.reduceat(np.add.reduceat(frame, ys[:-1], axis=0), xs[:-1], axis=1)
    areas = np.diff(ys)[:, None] * np.diff(xs)[None, :]
    return np.clip(sums / areas, 0.0, 1.0)


def quantize(frame: np.ndarray, num_levels: int = 8) -> ElectrodeActivation:
    """Quantize luminance to level = round(v * (num_levels - 1)), half rounded up."""
    frame = validate_luma(frame)
    if num_levels < 2:
        raise ParameterError(f"need at least 2 luminance levels, got {num_levels}")
    levels = np.floor(frame * (num_levels - 1) + 0.5).astype(np.int64)
    np.clip(levels, 0, num_levels - 1, out=levels)
    return ElectrodeActivation(levels=levels, num_levels=num_levels)


def build_grid(
    rows: int,
    cols: int,
    width: int,
    height: int,
    *,
    sigma_ratio: float = 4.0,
    cutoff_ratio: float = 2.0,
) -> PhospheneGrid:
    """Lay out a rows x cols hexagonal dot array on a width x height canvas.

    pitch_x = width / cols, dot_sigma = pitch_x / sigma_ratio and
    dot_cutoff_radius = pitch_x / cutoff_ratio. With the defaults the
    cutoff equals 2 * sigma and horizontally adjacent dots just touch,
    so max-composition never clips. The dot block is centered on the
    canvas; all phosphenes start alive.
    """
    if rows < 1 or cols < 1:
        raise ParameterError(f"grid must be at least 1x1, got {rows}x{cols}")
    pitch_x = width / cols
    if pitch_x < 4.0:
        raise GeometryError(
            f"canvas width {width} gives pitch_x {pitch_x:.2f} < 4 pixels for {cols} columns"
        )
    pitch_y = pitch_x * math.sqrt(3.0) / 2.0
    extent_y = (rows - 1) * pitch_y
    if extent_y > height:
        raise GeometryError(
            f"canvas height {height} cannot fit {rows} rows at vertical pitch {pitch_y:.2f}"
        )
    margin_x = (width - (cols - 1) * pitch_x) / 2.0
    margin_y = (height - extent_y) / 2.0

    xs = margin_x + np.arange(cols, dtype=np.float64) * pitch_x
    centers = np.empty((rows * cols, 2), dtype=np.float64)
    for r in range(rows):
        row_xs = xs + (pitch_x / 2.0 if r % 2 else 0.0)
        sl = slice(r * cols, (r + 1) * cols)
        centers[sl, 0] = row_xs
        centers[sl, 1] = margin_y + r * pitch_y
    return PhospheneGrid(
        rows=rows,
        cols=cols,
        width=width,
        height=height,
        pitch_x=pitch_x,
        dot_sigma=pitch_x / sigma_ratio,
        dot_cutoff_radius=pitch_x / cutoff_ratio,
        centers=centers,
        alive=np.ones(rows * cols, dtype=bool),
    )


def apply_dropout(grid: PhospheneGrid, rate: float, seed: int) -> PhospheneGrid:
    """Turn off round(rate * N) phosphenes chosen without replacement.

    The draw is a seeded PCG64 generator, so the same (grid, rate, seed)
    always yields the same alive mask. The mask is meant to be fixed for
    the lifetime of a session or video (dead electrodes do not move).
    """
    if not 0.0 <= rate <= 1.0:
        raise ParameterError(f"dropout rate must lie in [0, 1], got {rate}")
    n = grid.count
    k = int(math.floor(rate * n + 0.5))
    if k == 0:
        return grid
    alive = grid.alive.copy()
    dead = np.random.default_rng(seed).choice(n, size=k, replace=False)
    alive[dead] = False
    return replace(grid, alive=alive)


def render(activation: ElectrodeActivation, grid: PhospheneGrid) -> np.ndarray:
    """Render an activation onto the grid's canvas as a luma frame.

    Each alive phosphene stamps A * exp(-d^2 / (2 sigma^2)) within its
    cutoff radius; overlaps take the maximum; dead phosphenes and pixels
    outside every dot stay 0.
    """
    if (activation.rows, activation.cols) != (grid.rows, grid.cols):
        raise GeometryError(
            f"activation {activation.rows}x{activation.cols} does not match "
            f"grid {grid.rows}x{grid.cols}"
        )
    amps = activation.reconstruct().ravel()
    out = np.zeros((grid.height, grid.width), dtype=np.float64)
    stamps = grid._stamps
    for i in np.flatnonzero(grid.alive & (amps > 0.0)):
        stamp = stamps[i]
        if stamp is None:
            continue
        sy, sx, g = stamp
        np.maximum(out[sy, sx], amps[i] * g, out=out[sy, sx])
    return out


# Plain-text key=value serialization of the grid parameters, shared by the
# CLI config file, the video manifest and the service request schema.

_CONFIG_KEYS = ("rows", "cols", "canvas", "sigma_ratio", "cutoff_ratio", "dropout_rate", "seed")


@dataclass(frozen=True)
class GridConfig:
    """Serializable parameter set from which a session grid is built."""

    rows: int = 32
    cols: int = 32
    canvas: int = 512
    sigma_ratio: float = 4.0
    cutoff_ratio: float = 2.0
    dropout_rate: float = 0.0
    seed: int = 0

    def build(self) -> PhospheneGrid:
        grid = build_grid(
            self.rows,
            self.cols,
            self.canvas,
            self.canvas,
            sigma_ratio=self.sigma_ratio,
            cutoff_ratio=self.cutoff_ratio,
        )
        if self.dropout_rate > 0.0:
            grid = apply_dropout(grid, self.dropout_rate, self.seed)
        return grid

    def to_text(self) -> str:
        return "".join(f"{key} = {getattr(self, key)}\n" for key in _CONFIG_KEYS)

    def to_dict(self) -> dict:
        return {key: getattr(self, key) for key in _CONFIG_KEYS}

    @classmethod
    def from_dict(cls, values: dict) -> "GridConfig":
        unknown = set(values) - set(_CONFIG_KEYS)
        if unknown:
            raise ParameterError(f"unknown grid config keys: {sorted(unknown)}")
        kwargs = {}
        for key in _CONFIG_KEYS:
            if key in values and values[key] is not None:
                caster = int if key in ("rows", "cols", "canvas", "seed") else float
                kwargs[key] = caster(values[key])
        return cls(**kwargs)

    @classmethod
    def from_text(cls, text: str) -> "GridConfig":
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, _, value = line.partition("=")
            values[key.strip()] = value.strip()
        return cls.from_dict(values)
