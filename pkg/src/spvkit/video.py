"""Frame-sequence processing: FOV cropping, per-frame phosphene rendering,
the 5-frame temporal median filter and sequence assembly at 20 Hz.

The median filter runs on the rendered phosphene frames. Its job is to
suppress frame-to-frame dot flicker, which only exists after rendering,
so the filter sits at the end of the per-frame pipeline.
"""

from __future__ import annotations

import json
import math
import os
import shutil
import tempfile
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import cv2
import numpy as np

from .errors import FovError, ParameterError, PipelineError, SequenceError
from .frames import promote_dir, to_uint8
from .phosphenes import GridConfig, PhospheneGrid, downsample, quantize, render
from .saliency import SaliencyOverlay, compose_om, compose_sie_om

__all__ = [
    "Method",
    "FrameSequence",
    "FovSpec",
    "crop_fov",
    "temporal_median",
    "process_sequence",
    "process_still",
    "load_frame_dir",
    "save_sequence",
    "read_manifest",
    "MANIFEST_NAME",
    "DEFAULT_FPS",
    "DEFAULT_MEDIAN_WINDOW",
]

DEFAULT_FPS = 20.0
DEFAULT_MEDIAN_WINDOW = 5
MANIFEST_NAME = "manifest.json"


class Method(str, Enum):
    """Scene representation fed to the phosphene stage."""

    DIRECT = "direct"  # raw luminance, no high-level processing
    OM = "om"  # object-mask silhouettes only
    SIE_OM = "sie-om"  # structural edges superimposed on object masks


@dataclass(frozen=True)
class FrameSequence:
    """Ordered stack of equally sized luma frames plus a frame rate."""

    frames: np.ndarray  # (count, height, width) float in [0, 1]
    fps: float = DEFAULT_FPS

    def __post_init__(self):
        frames = np.asarray(self.frames)
        if frames.dtype not in (np.float32, np.float64):
            frames = frames.astype(np.float64)
        if frames.ndim != 3 or frames.shape[0] < 1:
            raise SequenceError(f"frames must be a (count, h, w) stack, got shape {frames.shape}")
        if self.fps <= 0:
            raise SequenceError(f"fps must be positive, got {self.fps}")
        object.__setattr__(self, "frames", frames)

    def __len__(self) -> int:
        return self.frames.shape[0]


@dataclass(frozen=True)
class FovSpec:
    """Pinhole-model crop from a source to a narrower target field of view."""

    source_hfov: float
    target_hfov: float = 20.0

    def __post_init__(self):
        if not (0.0 < self.target_hfov <= self.source_hfov <= 180.0):
            raise FovError(
                f"need 0 < target ({self.target_hfov}) <= source ({self.source_hfov}) <= 180"
            )


def crop_fov(frame: np.ndarray, fov: FovSpec) -> np.ndarray:
    """Central crop reducing the horizontal FOV under a pinhole model.

    New width is round(W * tan(target/2) / tan(source/2)); the height is
    cropped by the same ratio so aspect is preserved.
    """
    frame = np.asarray(frame)
    if frame.ndim != 2:
        raise FovError(f"expected a 2-D frame, got shape {frame.shape}")
    ratio = math.tan(math.radians(fov.target_hfov) / 2.0) / math.tan(
        math.radians(fov.source_hfov) / 2.0
    )
    h, w = frame.shape
    wp = max(1, round(w * ratio))
    hp = max(1, round(h * ratio))
    x0 = (w - wp) // 2
    y0 = (h - hp) // 2
    return frame[y0 : y0 + hp, x0 : x0 + wp]


def _ce(a, b):
    """Compare-exchange for selection networks: (min, max)."""
    return np.minimum(a, b), np.maximum(a, b)


def _median3(p0, p1, p2):
    return np.maximum(np.minimum(p0, p1), np.minimum(np.maximum(p0, p1), p2))


def _median5(p0, p1, p2, p3, p4):
    # Branch-free median-of-5 selection network (7 compare-exchanges);
    # exact, dtype-preserving and much faster than a sort on full frames.
    p0, p1 = _ce(p0, p1)
    p3, p4 = _ce(p3, p4)
    p0, p3 = _ce(p0, p3)
    p1, p4 = _ce(p1, p4)
    p1, p2 = _ce(p1, p2)
    p2, p3 = _ce(p2, p3)
    p1, p2 = _ce(p1, p2)
    return p2


def temporal_median(seq: FrameSequence, window: int = DEFAULT_MEDIAN_WINDOW) -> FrameSequence:
    """Per-pixel median over a trailing window of frames.

    Output frame i is the median of input frames i .. i+window-1, so the
    first output corresponds to the window'th input frame and the result
    is window-1 frames shorter. The window is odd (median of an odd
    window needs no tie rule and never invents new values).
    """
    if window < 3 or window % 2 == 0:
        raise ParameterError(f"median window must be odd and at least 3, got {window}")
    count = len(seq)
    if count < window:
        raise SequenceError(f"sequence of {count} frames is shorter than window {window}")
    frames = seq.frames
    out = np.empty((count - window + 1,) + frames.shape[1:], dtype=frames.dtype)
    for i in range(out.shape[0]):
        if window == 5:
            out[i] = _median5(*(frames[i + k] for k in range(5)))
        elif window == 3:
            out[i] = _median3(*(frames[i + k] for k in range(3)))
        else:
            np.median(frames[i : i + window], axis=0, out=out[i])
    return FrameSequence(frames=out, fps=seq.fps)


def process_sequence(
    seq: FrameSequence,
    overlays: Sequence[SaliencyOverlay] | None,
    method: Method | str,
    grid: PhospheneGrid,
    *,
    levels: int = 8,
    window: int = DEFAULT_MEDIAN_WINDOW,
    fov: FovSpec | None = None,
) -> FrameSequence:
    """Run the full per-frame pipeline and the temporal median filter.

    Per frame: compose the representation for ``method`` (DIRECT uses the
    raw frame), optionally crop to the target FOV, box-average down to the
    electrode grid, quantize to ``levels`` and render on ``grid``. The
    same grid (and therefore the same dropout mask) is used for every
    frame. The median filter runs over the rendered frames last.
    """
    method = Method(method)
    count = len(seq)
    if method is not Method.DIRECT:
        if overlays is None or len(overlays) != count:
            have = 0 if overlays is None else len(overlays)
            raise PipelineError(
                f"method {method.value} needs one overlay per frame: "
                f"{count} frames but {have} overlays"
            )
    rendered = np.empty((count, grid.height, grid.width), dtype=np.float32)
    for t in range(count):
        if method is Method.DIRECT:
            composed = seq.frames[t]
        else:
            overlay = overlays[t]
            if (overlay.height, overlay.width) != seq.frames.shape[1:]:
                raise PipelineError(
                    f"frame {t}: overlay is {overlay.width}x{overlay.height}, "
                    f"frame is {seq.frames.shape[2]}x{seq.frames.shape[1]}"
                )
            composed = compose_om(overlay) if method is Method.OM else compose_sie_om(overlay)
        if fov is not None:
            composed = crop_fov(composed, fov)
        activation = quantize(downsample(composed, grid.rows, grid.cols), levels)
        rendered[t] = render(activation, grid)
    return temporal_median(FrameSequence(frames=rendered, fps=seq.fps), window)


def process_still(
    frame: np.ndarray,
    overlay: SaliencyOverlay | None,
    method: Method | str,
    grid: PhospheneGrid,
    *,
    levels: int = 8,
    fov: FovSpec | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Single-frame pipeline without the median stage.

    Returns (composed, rendered): the iconic representation that was fed
    to the phosphene stage and the final phosphene frame.
    """
    method = Method(method)
    if method is Method.DIRECT:
        composed = np.asarray(frame, dtype=np.float64)
    else:
        if overlay is None:
            raise PipelineError(f"method {method.value} needs an overlay")
        composed = compose_om(overlay) if method is Method.OM else compose_sie_om(overlay)
    if fov is not None:
        composed = crop_fov(composed, fov)
    activation = quantize(downsample(composed, grid.rows, grid.cols), levels)
    return composed, render(activation, grid)


def _frame_name(index: int) -> str:
    return f"frame_{index:06d}.png"


def load_frame_dir(path: str | os.PathLike, fps: float = DEFAULT_FPS) -> FrameSequence:
    """Load every PNG in a directory, sorted by filename, as one sequence."""
    path = os.fspath(path)
    names = sorted(n for n in os.listdir(path) if n.lower().endswith(".png"))
    if not names:
        raise SequenceError(f"no PNG frames found in {path}")
    stack = None
    for i, name in enumerate(names):
        raw = cv2.imread(os.path.join(path, name), cv2.IMREAD_GRAYSCALE)
        if raw is None:
            raise SequenceError(f"cannot read frame {name}")
        if stack is None:
            stack = np.empty((len(names),) + raw.shape, dtype=np.float32)
        if raw.shape != stack.shape[1:]:
            raise SequenceError(f"frame {name} is {raw.shape}, expected {stack.shape[1:]}")
        stack[i] = raw
    stack /= 255.0
    return FrameSequence(frames=stack, fps=fps)


def save_sequence(
    seq: FrameSequence,
    out_dir: str | os.PathLike,
    *,
    method: Method | str,
    grid_config: GridConfig,
    seed: int,
) -> dict:
    """Write numbered PNG frames plus a JSON manifest, promoted atomically.

    The whole output directory is built under a temp name next to the
    target and renamed into place only once every frame is on disk.
    """
    out_dir = os.fspath(out_dir)
    parent = os.path.dirname(os.path.abspath(out_dir)) or "."
    os.makedirs(parent, exist_ok=True)
    names = [_frame_name(i) for i in range(len(seq))]
    manifest = {
        "fps": seq.fps,
        "frame_count": len(seq),
        "method": Method(method).value,
        "grid": grid_config.to_dict(),
        "seed": seed,
        "frames": names,
    }
    tmp = tempfile.mkdtemp(prefix=".tmp-seq-", dir=parent)
    try:
        for name, frame in zip(names, seq.frames):
            cv2.imwrite(os.path.join(tmp, name), to_uint8(frame), [cv2.IMWRITE_PNG_COMPRESSION, 1])
        with open(os.path.join(tmp, MANIFEST_NAME), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1)
        promote_dir(tmp, out_dir)
    finally:
        if os.path.isdir(tmp):
            shutil.rmtree(tmp)
    return manifest


def read_manifest(seq_dir: str | os.PathLike) -> dict:
    with open(os.path.join(os.fspath(seq_dir), MANIFEST_NAME), "r", encoding="utf-8") as fh:
        return json.load(fh)
