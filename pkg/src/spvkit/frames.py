"""Luma frame conventions and grayscale PNG I/O.

A luma frame is a 2-D float array with values in [0, 1], indexed
``frame[y, x]``. Every raster that crosses a module boundary uses this
convention.
"""

from __future__ import annotations

import os
import shutil
import tempfile

import cv2
import numpy as np

from .errors import DimensionError

__all__ = [
    "validate_luma",
    "load_luma",
    "save_luma",
    "to_uint8",
    "promote_dir",
]


def validate_luma(frame: np.ndarray) -> np.ndarray:
    """Check the luma-frame contract and return the array as float64."""
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"luma frame must be a non-empty 2-D array, got shape {arr.shape}")
    if float(arr.min()) < 0.0 or float(arr.max()) > 1.0:
        raise ValueError(
            f"luma values must lie in [0, 1], got range [{arr.min():.4g}, {arr.max():.4g}]"
        )
    return arr


def load_luma(path: str | os.PathLike) -> np.ndarray:
    """Load a PNG (or any cv2-readable image) as a luma frame."""
    img = cv2.imread(os.fspath(path), cv2.IMREAD_GRAYSCALE)
    if img is None:
        raise FileNotFoundError(f"cannot read image: {path}")
    return img.astype(np.float64) / 255.0


def to_uint8(frame: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_luma(path: str | os.PathLike, frame: np.ndarray, *, compression: int = 3) -> None:
    """Write an 8-bit grayscale PNG atomically (temp file + rename)."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(suffix=".png", dir=directory)
    os.close(fd)
    try:
        ok = cv2.imwrite(tmp, to_uint8(frame), [cv2.IMWRITE_PNG_COMPRESSION, compression])
        if not ok:
            raise IOError(f"cv2 failed to write {path}")
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def promote_dir(tmp_dir: str, final_dir: str) -> None:
    """Atomically promote a fully-written temp directory to its final path."""
    final_dir = os.fspath(final_dir)
    if os.path.isdir(final_dir):
        shutil.rmtree(final_dir)
    os.replace(tmp_dir, final_dir)
