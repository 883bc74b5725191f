"""Recognition-study protocol: stimulus catalog, per-subject randomized
plans, timed trial records and append-only session state.

A session walks a subject through a shuffled list of trials. Each trial
shows one stimulus (a still image or a frame-sequence video, rendered
with one of the two iconic methods) and collects the objects the subject
marked, one room choice and one Likert confidence level, under a 30 s
limit. Responses that arrive late are kept but flagged.

Catalog file (JSON):

    {
      "time_limit_s": 30,
      "scenes": [
        {
          "scene_id": "scene01",
          "room": "kitchen",
          "objects": ["sink", "refrigerator"],
          "images": [
            {"view": "cent", "renderings": {"om": "p1.png", "sie-om": "p2.png"}},
            {"view": "rand", "renderings": {"om": "p3.png", "sie-om": "p4.png"}}
          ],
          "videos": [
            {"renderings": {"om": "v1/manifest.json", "sie-om": "v2/manifest.json"}}
          ]
        }
      ]
    }

Every stimulus entry must carry both method renderings; media paths are
relative to the catalog file. How many scenes, views and videos make up
a session is the experimenter's choice via the catalog.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import CatalogError, ProtocolError
from .saliency import LIKERT_LEVELS, OBJECT_CLASSES, ROOM_TYPES

__all__ = [
    "METHODS",
    "TrialSpec",
    "StimulusPlan",
    "TrialRecord",
    "SessionState",
    "SceneSpec",
    "StimulusCatalog",
    "load_catalog",
    "build_plan",
    "new_session",
    "submit_response",
    "session_header",
    "record_to_dict",
    "record_from_dict",
    "append_jsonl",
    "replay_session",
    "read_session_file",
]

METHODS = ("om", "sie-om")
DEFAULT_TIME_LIMIT_S = 30.0


@dataclass(frozen=True)
class TrialSpec:
    """One scheduled trial: a stimulus plus its (server-side) ground truth."""

    stimulus_id: str
    scene_id: str
    kind: str  # "image" | "video"
    method: str  # "om" | "sie-om"
    view: str | None  # "cent" | "rand" for images, None for videos
    media_path: str
    room: str
    objects: frozenset[str]


@dataclass(frozen=True)
class StimulusPlan:
    trials: tuple[TrialSpec, ...]
    time_limit_s: float
    seed: int


@dataclass(frozen=True)
class TrialRecord:
    """A subject's response to one trial."""

    trial_index: int
    stimulus_id: str
    method: str
    kind: str
    view: str | None
    objects_marked: frozenset[str]
    room_choice: str
    likert: str
    response_time_s: float
    late: bool = False


@dataclass(frozen=True)
class SessionState:
    """Session progress; records are append-only and indexed by cursor."""

    session_id: str
    subject_id: str
    plan: StimulusPlan
    records: tuple[TrialRecord, ...] = ()
    cursor: int = 0
    status: str = "pending"  # pending | running | done
    meta: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class SceneSpec:
    scene_id: str
    room: str
    objects: frozenset[str]
    images: tuple[dict, ...]  # {"view": str, "renderings": {method: path}}
    videos: tuple[dict, ...]  # {"renderings": {method: path}}


@dataclass(frozen=True)
class StimulusCatalog:
    scenes: tuple[SceneSpec, ...]
    time_limit_s: float
    media_root: str

    def stimuli(self) -> list[TrialSpec]:
        """Expand scenes into per-(stimulus, method) trials, catalog order."""
        trials = []
        for scene in self.scenes:
            for entry in scene.images:
                view = entry["view"]
                for method in METHODS:
                    trials.append(
                        TrialSpec(
                            stimulus_id=f"{scene.scene_id}/img-{view}",
                            scene_id=scene.scene_id,
                            kind="image",
                            method=method,
                            view=view,
                            media_path=entry["renderings"][method],
                            room=scene.room,
                            objects=scene.objects,
                        )
                    )
            for i, entry in enumerate(scene.videos):
                for method in METHODS:
                    trials.append(
                        TrialSpec(
                            stimulus_id=f"{scene.scene_id}/vid-{i}",
                            scene_id=scene.scene_id,
                            kind="video",
                            method=method,
                            view=None,
                            media_path=entry["renderings"][method],
                            room=scene.room,
                            objects=scene.objects,
                        )
                    )
        return trials

    def truth_map(self) -> dict[str, tuple[str, frozenset[str]]]:
        """stimulus_id -> (room, object set), for scoring."""
        return {t.stimulus_id: (t.room, t.objects) for t in self.stimuli()}

    def resolve_media(self, media_path: str) -> str:
        return os.path.normpath(os.path.join(self.media_root, media_path))


def _parse_entry(scene_id: str, kind: str, entry, index: int) -> dict:
    if not isinstance(entry, dict) or "renderings" not in entry:
        raise CatalogError(f"scene {scene_id}: malformed {kind} entry #{index}")
    renderings = entry["renderings"]
    missing = [m for m in METHODS if m not in renderings]
    if missing:
        raise CatalogError(
            f"scene {scene_id}: {kind} entry #{index} is missing renderings for {missing}"
        )
    if kind == "image":
        view = entry.get("view")
        if view not in ("cent", "rand"):
            raise CatalogError(f"scene {scene_id}: image entry #{index} needs view cent|rand")
        return {"view": view, "renderings": dict(renderings)}
    return {"renderings": dict(renderings)}


def load_catalog(path: str | os.PathLike) -> StimulusCatalog:
    path = os.fspath(path)
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise CatalogError(f"catalog not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise CatalogError(f"catalog {path} is not valid JSON: {exc}") from exc

    scenes = []
    seen = set()
    for raw in doc.get("scenes", []):
        try:
            scene_id = raw["scene_id"]
            room = raw["room"]
            objects = frozenset(raw["objects"])
        except (KeyError, TypeError) as exc:
            raise CatalogError(f"catalog {path}: malformed scene entry: {exc}") from exc
        if scene_id in seen:
            raise CatalogError(f"duplicate scene_id {scene_id!r}")
        seen.add(scene_id)
        if room not in ROOM_TYPES:
            raise CatalogError(f"scene {scene_id}: unknown room {room!r}")
        bad = objects - set(OBJECT_CLASSES)
        if bad:
            raise CatalogError(f"scene {scene_id}: unknown object classes {sorted(bad)}")
        images = tuple(
            _parse_entry(scene_id, "image", e, i) for i, e in enumerate(raw.get("images", []))
        )
        views = [e["view"] for e in images]
        if len(views) != len(set(views)):
            raise CatalogError(f"scene {scene_id}: duplicate image views")
        videos = tuple(
            _parse_entry(scene_id, "video", e, i) for i, e in enumerate(raw.get("videos", []))
        )
        scenes.append(
            SceneSpec(scene_id=scene_id, room=room, objects=objects, images=images, videos=videos)
        )
    if not scenes:
        raise CatalogError(f"catalog {path} lists no scenes")
    return StimulusCatalog(
        scenes=tuple(scenes),
        time_limit_s=float(doc.get("time_limit_s", DEFAULT_TIME_LIMIT_S)),
        media_root=os.path.normpath(
            os.path.join(os.path.dirname(os.path.abspath(path)), doc.get("media_root", "."))
        ),
    )


def build_plan(catalog: StimulusCatalog | str | os.PathLike, seed: int) -> StimulusPlan:
    """Shuffle the catalog's trials into a per-subject presentation order.

    The shuffle is a seeded permutation: the same catalog and seed always
    produce the same plan.
    """
    if not isinstance(catalog, StimulusCatalog):
        catalog = load_catalog(catalog)
    trials = catalog.stimuli()
    random.Random(seed).shuffle(trials)
    return StimulusPlan(trials=tuple(trials), time_limit_s=catalog.time_limit_s, seed=seed)


def new_session(
    session_id: str,
    subject_id: str,
    plan: StimulusPlan,
    meta: Mapping[str, str] | None = None,
) -> SessionState:
    return SessionState(
        session_id=session_id,
        subject_id=subject_id,
        plan=plan,
        meta=dict(meta or {}),
    )


def _validate_record(record: TrialRecord, trial: TrialSpec) -> None:
    if record.stimulus_id != trial.stimulus_id or record.method != trial.method:
        raise ProtocolError(
            f"record targets {record.stimulus_id}/{record.method}, "
            f"trial {record.trial_index} is {trial.stimulus_id}/{trial.method}"
        )
    if record.room_choice not in ROOM_TYPES:
        raise ProtocolError(f"unknown room choice {record.room_choice!r}")
    if record.likert not in LIKERT_LEVELS:
        raise ProtocolError(f"unknown likert level {record.likert!r}")
    bad = set(record.objects_marked) - set(OBJECT_CLASSES)
    if bad:
        raise ProtocolError(f"unknown object classes marked: {sorted(bad)}")
    if record.response_time_s < 0:
        raise ProtocolError(f"negative response time {record.response_time_s}")


def submit_response(session: SessionState, record: TrialRecord) -> SessionState:
    """Append a record for the trial at the cursor and advance.

    Out-of-order or repeated trial indices are protocol errors. A
    response time above the plan's limit does not reject the record; it
    is kept with its late flag set.
    """
    if session.status == "done":
        raise ProtocolError(f"session {session.session_id} is already done")
    if record.trial_index != session.cursor:
        raise ProtocolError(
            f"expected a record for trial {session.cursor}, got trial {record.trial_index}"
        )
    _validate_record(record, session.plan.trials[session.cursor])
    if record.response_time_s > session.plan.time_limit_s and not record.late:
        record = replace(record, late=True)
    records = session.records + (record,)
    cursor = session.cursor + 1
    status = "done" if cursor == len(session.plan.trials) else "running"
    return replace(session, records=records, cursor=cursor, status=status)


# JSON-lines persistence: a header line followed by one line per record.


def session_header(session: SessionState, catalog_path: str) -> dict:
    return {
        "type": "header",
        "session_id": session.session_id,
        "subject_id": session.subject_id,
        "seed": session.plan.seed,
        "time_limit_s": session.plan.time_limit_s,
        "trial_count": len(session.plan.trials),
        "catalog": os.path.abspath(catalog_path),
        "meta": dict(session.meta),
    }


def record_to_dict(record: TrialRecord) -> dict:
    return {
        "type": "trial",
        "trial_index": record.trial_index,
        "stimulus_id": record.stimulus_id,
        "method": record.method,
        "kind": record.kind,
        "view": record.view,
        "objects_marked": sorted(record.objects_marked),
        "room_choice": record.room_choice,
        "likert": record.likert,
        "response_time_s": record.response_time_s,
        "late": record.late,
    }


def record_from_dict(doc: Mapping) -> TrialRecord:
    return TrialRecord(
        trial_index=int(doc["trial_index"]),
        stimulus_id=doc["stimulus_id"],
        method=doc["method"],
        kind=doc["kind"],
        view=doc.get("view"),
        objects_marked=frozenset(doc.get("objects_marked", [])),
        room_choice=doc["room_choice"],
        likert=doc["likert"],
        response_time_s=float(doc["response_time_s"]),
        late=bool(doc.get("late", False)),
    )


def append_jsonl(path: str | os.PathLike, doc: Mapping) -> None:
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(doc, sort_keys=True) + "\n")


def read_session_file(path: str | os.PathLike) -> tuple[dict, list[TrialRecord]]:
    """Read one session's JSON-lines file into (header, records)."""
    header = None
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            doc = json.loads(line)
            if doc.get("type") == "header":
                header = doc
            elif doc.get("type") == "trial":
                records.append(record_from_dict(doc))
    if header is None:
        raise ProtocolError(f"session file {path} has no header line")
    return header, records


def replay_session(
    path: str | os.PathLike,
    catalog: StimulusCatalog | None = None,
) -> SessionState:
    """Rebuild a SessionState by replaying a session file through
    submit_response. The result is identical to the live session's final
    state (records are validated the same way on the way back in)."""
    header, records = read_session_file(path)
    if catalog is None:
        catalog = load_catalog(header["catalog"])
    plan = build_plan(catalog, header["seed"])
    session = new_session(header["session_id"], header["subject_id"], plan, header.get("meta"))
    for record in records:
        session = submit_response(session, record)
    return session
