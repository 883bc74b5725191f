"""Iconic scene representations composed from precomputed saliency artifacts.

Object-instance masks and structural-edge maps come from external
segmentation and room-layout models; this module only ingests their
outputs and composes two binary representations:

    OM      union of allow-listed object silhouettes
    SIE-OM  OM superimposed with the thresholded structural edge map

Overlay directory format (one JSON manifest per frame, named
``{frame_index:06d}.json`` next to its rasters):

    {
      "width": 640, "height": 480,
      "objects": [{"class": "bed", "score": 0.98, "mask_file": "000000_bed.png"}],
      "edge_file": "000000_edges.png",     // optional, 8-bit soft edge map
      "edge_threshold": 0.5                // optional
    }

Mask rasters are 0/255 PNGs; a pixel is inside the mask when its value
is >= 128. Raster paths are relative to the manifest.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import cv2
import numpy as np

from .errors import OverlayError, OverlayFormatError
from .frames import validate_luma

__all__ = [
    "OBJECT_CLASSES",
    "ROOM_TYPES",
    "LIKERT_LEVELS",
    "ObjectInstance",
    "EdgeMap",
    "SaliencyOverlay",
    "load_overlay",
    "compose_om",
    "compose_sie_om",
    "fallback_edges",
]

# The eight object classes subjects can mark and the four room types they
# choose between. These double as the canonical ids in catalogs, session
# records and score reports.
OBJECT_CLASSES = (
    "sink",
    "refrigerator",
    "oven_microwave",
    "table",
    "chair",
    "tv_laptop",
    "bed",
    "couch",
)

ROOM_TYPES = ("bedroom", "kitchen", "dining_room", "living_room")

LIKERT_LEVELS = ("DY", "PY", "M", "PN", "DN")

DEFAULT_EDGE_THRESHOLD = 0.5
DEFAULT_MIN_SCORE = 0.7


@dataclass(frozen=True)
class ObjectInstance:
    """One detected object: class label, binary mask and detection score."""

    class_label: str
    mask: np.ndarray  # (h, w) bool
    score: float


@dataclass(frozen=True)
class EdgeMap:
    """Soft edge-probability map in [0, 1] plus its drawing threshold."""

    values: np.ndarray
    threshold: float = DEFAULT_EDGE_THRESHOLD

    def binary(self) -> np.ndarray:
        return self.values >= self.threshold


@dataclass(frozen=True)
class SaliencyOverlay:
    """All saliency artifacts for one frame, at one shared resolution."""

    width: int
    height: int
    objects: tuple[ObjectInstance, ...]
    edges: EdgeMap | None = None
    frame_index: int = 0


def _manifest_path(mask_dir: str, frame_index: int) -> str:
    return os.path.join(os.fspath(mask_dir), f"{frame_index:06d}.json")


def _load_binary_mask(path: str, size: tuple[int, int]) -> np.ndarray:
    raster = cv2.imread(path, cv2.IMREAD_GRAYSCALE)
    if raster is None:
        raise OverlayFormatError(f"cannot read mask raster: {path}")
    if raster.shape != size:
        raise OverlayFormatError(
            f"mask raster {path} is {raster.shape[1]}x{raster.shape[0]}, "
            f"expected {size[1]}x{size[0]}"
        )
    return raster >= 128


def load_overlay(
    mask_dir: str | os.PathLike,
    frame_index: int,
    *,
    allowed_classes: tuple[str, ...] = OBJECT_CLASSES,
    min_score: float = DEFAULT_MIN_SCORE,
    expect_size: tuple[int, int] | None = None,
) -> SaliencyOverlay:
    """Load one frame's overlay from its manifest.

    Instances whose class is outside ``allowed_classes`` or whose score is
    below ``min_score`` are dropped silently. ``expect_size`` is (height,
    width) of the source frame; when given it is cross-checked against the
    manifest.
    """
    path = _manifest_path(mask_dir, frame_index)
    if not os.path.isfile(path):
        raise OverlayError(f"missing overlay manifest: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise OverlayFormatError(f"manifest {path} is not valid JSON: {exc}") from exc

    try:
        height = int(doc["height"])
        width = int(doc["width"])
        entries = doc.get("objects", [])
    except (KeyError, TypeError, ValueError) as exc:
        raise OverlayFormatError(f"manifest {path} is missing width/height: {exc}") from exc
    if expect_size is not None and (height, width) != tuple(expect_size):
        raise OverlayFormatError(
            f"manifest {path} declares {width}x{height}, "
            f"source frame is {expect_size[1]}x{expect_size[0]}"
        )

    base = os.path.dirname(path)
    instances = []
    for entry in entries:
        try:
            label = entry["class"]
            score = float(entry["score"])
            mask_file = entry["mask_file"]
        except (KeyError, TypeError, ValueError) as exc:
            raise OverlayFormatError(f"bad object entry in {path}: {entry!r}") from exc
        if label not in allowed_classes or score < min_score:
            continue
        mask = _load_binary_mask(os.path.join(base, mask_file), (height, width))
        instances.append(ObjectInstance(class_label=label, mask=mask, score=score))

    edges = None
    edge_file = doc.get("edge_file")
    if edge_file:
        raster = cv2.imread(os.path.join(base, edge_file), cv2.IMREAD_GRAYSCALE)
        if raster is None:
            raise OverlayFormatError(f"cannot read edge raster: {edge_file}")
        if raster.shape != (height, width):
            raise OverlayFormatError(
                f"edge raster {edge_file} is {raster.shape[1]}x{raster.shape[0]}, "
                f"expected {width}x{height}"
            )
        threshold = float(doc.get("edge_threshold", DEFAULT_EDGE_THRESHOLD))
        edges = EdgeMap(values=raster.astype(np.float64) / 255.0, threshold=threshold)

    return SaliencyOverlay(
        width=width,
        height=height,
        objects=tuple(instances),
        edges=edges,
        frame_index=frame_index,
    )


def compose_om(overlay: SaliencyOverlay) -> np.ndarray:
    """Union of object silhouettes as a binary luma frame; background is 0."""
    union = np.zeros((overlay.height, overlay.width), dtype=bool)
    for inst in overlay.objects:
        union |= inst.mask
    return union.astype(np.float64)


def compose_sie_om(overlay: SaliencyOverlay) -> np.ndarray:
    """OM superimposed with the thresholded structural edge map (pixelwise OR)."""
    if overlay.edges is None:
        raise OverlayError(f"frame {overlay.frame_index}: overlay has no edge map")
    union = np.zeros((overlay.height, overlay.width), dtype=bool)
    for inst in overlay.objects:
        union |= inst.mask
    union |= overlay.edges.binary()
    return union.astype(np.float64)


def fallback_edges(frame: np.ndarray, threshold: float = DEFAULT_EDGE_THRESHOLD) -> EdgeMap:
    """Gradient-magnitude substitute for a missing structural edge map.

    Central differences (one-sided at the borders), magnitude scaled by
    its maximum. This is a demo-mode stand-in, not a layout model.
    """
    frame = validate_luma(frame)
    gy, gx = np.gradient(frame)
    mag = np.hypot(gx, gy)
    peak = float(mag.max())
    if peak > 0.0:
        mag /= peak
    return EdgeMap(values=mag, threshold=threshold)
