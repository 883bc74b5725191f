import json
import os

import numpy as np
import pytest

from spvkit.frames import save_luma


def write_overlay(
    mask_dir,
    frame_index,
    objects=(),
    edge=None,
    size=(64, 64),
    edge_threshold=0.5,
    extra=None,
):
    """Write one overlay manifest plus its rasters.

    ``objects`` is a list of (class_label, score, bool_mask); ``edge`` is a
    float map in [0, 1] or None.
    """
    os.makedirs(mask_dir, exist_ok=True)
    height, width = size
    entries = []
    for i, (label, score, mask) in enumerate(objects):
        name = f"{frame_index:06d}_{i}_{label}.png"
        save_luma(os.path.join(mask_dir, name), mask.astype(np.float64))
        entries.append({"class": label, "score": score, "mask_file": name})
    doc = {"width": width, "height": height, "objects": entries}
    if edge is not None:
        name = f"{frame_index:06d}_edges.png"
        save_luma(os.path.join(mask_dir, name), edge)
        doc["edge_file"] = name
        doc["edge_threshold"] = edge_threshold
    if extra:
        doc.update(extra)
    path = os.path.join(mask_dir, f"{frame_index:06d}.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    return path


def rect_mask(size, y0, y1, x0, x1):
    mask = np.zeros(size, dtype=bool)
    mask[y0:y1, x0:x1] = True
    return mask


def write_catalog(path, scenes, time_limit_s=30, media_root=None):
    doc = {"time_limit_s": time_limit_s, "scenes": scenes}
    if media_root is not None:
        doc["media_root"] = media_root
    os.makedirs(os.path.dirname(os.fspath(path)) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    return os.fspath(path)


def plan_only_scenes(n_scenes=4):
    """Catalog scenes with placeholder media paths (enough for planning)."""
    rooms = ["bedroom", "kitchen", "living_room", "dining_room"]
    objects = [["bed", "table"], ["sink", "refrigerator"], ["couch", "tv_laptop"], ["table", "chair"]]
    scenes = []
    for i in range(n_scenes):
        sid = f"scene{i:02d}"
        scenes.append(
            {
                "scene_id": sid,
                "room": rooms[i % 4],
                "objects": objects[i % 4],
                "images": [
                    {"view": "cent", "renderings": {"om": f"{sid}_om_c.png", "sie-om": f"{sid}_so_c.png"}}
                ],
                "videos": [
                    {"renderings": {"om": f"{sid}_om/manifest.json", "sie-om": f"{sid}_so/manifest.json"}}
                ],
            }
        )
    return scenes


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
