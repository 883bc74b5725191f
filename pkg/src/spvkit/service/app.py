"""HTTP service wrapping the toolkit.

Processing endpoints (/render, /video, /score) operate on server-local
paths and return what they wrote. Study endpoints host timed recognition
sessions for the browser UI: descriptors sent to clients never contain
ground truth, the 30 s limit is enforced from server-side serve
timestamps, and every accepted record is appended to the session's
JSON-lines file before it is acknowledged.
"""

from __future__ import annotations

import glob as globlib
import hashlib
import json
import os
import random
import threading
import time
import uuid
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import cv2
import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import scoring, study
from ..errors import ParameterError, PipelineError, ProtocolError, SpvError
from ..frames import load_luma, save_luma
from ..phosphenes import GridConfig
from ..saliency import load_overlay
from ..study import SessionState, StimulusCatalog, TrialRecord
from ..video import (
    FovSpec,
    Method,
    load_frame_dir,
    process_sequence,
    process_still,
    save_sequence,
)
from . import schemas

__all__ = ["ServiceSettings", "create_app"]


@dataclass
class ServiceSettings:
    """Server-side configuration; study endpoints need a catalog."""

    catalog_path: Optional[str] = None
    results_dir: str = "sessions"
    study_seed: Optional[int] = None
    ui_dir: Optional[str] = None
    clock: Callable[[], float] = time.monotonic


def _grid_config(params: schemas.GridParams) -> tuple[GridConfig, int]:
    """Resolve the request's grid parameters, drawing a seed when omitted."""
    seed = params.seed if params.seed is not None else random.randrange(2**31)
    config = GridConfig(
        rows=params.rows,
        cols=params.cols,
        canvas=params.canvas,
        sigma_ratio=params.sigma_ratio,
        cutoff_ratio=params.cutoff_ratio,
        dropout_rate=params.dropout_rate,
        seed=seed,
    )
    return config, seed


def _fov(src: Optional[float], dst: float) -> Optional[FovSpec]:
    if src is None:
        return None
    return FovSpec(source_hfov=src, target_hfov=dst)


def _load_overlays(overlays_dir: Optional[str], count: int, method: Method):
    if method is Method.DIRECT:
        return None
    if not overlays_dir:
        raise PipelineError(f"method {method.value} needs --overlays with one manifest per frame")
    overlays = []
    for i in range(count):
        try:
            overlays.append(load_overlay(overlays_dir, i))
        except SpvError as exc:
            raise PipelineError(f"frame {i}: {exc}") from exc
    return overlays


def _debug_strip(original: np.ndarray, composed: np.ndarray, rendered: np.ndarray) -> np.ndarray:
    """Side-by-side original | composed | rendered, at the rendered height."""
    h = rendered.shape[0]

    def fit(frame: np.ndarray) -> np.ndarray:
        w = max(1, round(frame.shape[1] * h / frame.shape[0]))
        return cv2.resize(frame.astype(np.float64), (w, h), interpolation=cv2.INTER_NEAREST)

    return np.hstack([fit(original), fit(composed), rendered])


@dataclass
class _LiveSession:
    state: SessionState
    jsonl_path: str
    served_at: dict[int, float] = field(default_factory=dict)
    acks: dict[int, schemas.SubmitResponse] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)


class SessionStore:
    """All live sessions; one lock per session serializes its writes."""

    def __init__(self, catalog: StimulusCatalog, catalog_path: str, results_dir: str,
                 seed: Optional[int], clock: Callable[[], float]):
        self.catalog = catalog
        self.catalog_path = catalog_path
        self.results_dir = results_dir
        self.clock = clock
        self._seed_rng = random.Random(seed) if seed is not None else random.SystemRandom()
        self._sessions: dict[str, _LiveSession] = {}
        self._lock = threading.Lock()
        os.makedirs(results_dir, exist_ok=True)

    def create(self, req: schemas.CreateSessionRequest) -> schemas.CreateSessionResponse:
        seed = req.seed if req.seed is not None else self._seed_rng.randrange(2**31)
        plan = study.build_plan(self.catalog, seed)
        session_id = uuid.uuid4().hex[:12]
        state = study.new_session(session_id, req.subject_id, plan, req.meta)
        jsonl_path = os.path.join(self.results_dir, f"{session_id}.jsonl")
        study.append_jsonl(jsonl_path, study.session_header(state, self.catalog_path))
        with self._lock:
            self._sessions[session_id] = _LiveSession(state=state, jsonl_path=jsonl_path)
        return schemas.CreateSessionResponse(
            session_id=session_id,
            subject_id=req.subject_id,
            seed=seed,
            trial_count=len(plan.trials),
            time_limit_s=plan.time_limit_s,
            status=state.status,
        )

    def get(self, session_id: str) -> _LiveSession:
        with self._lock:
            live = self._sessions.get(session_id)
        if live is None:
            raise LookupError(f"unknown session {session_id}")
        return live

    def next_trial(self, session_id: str) -> schemas.NextTrialResponse:
        live = self.get(session_id)
        with live.lock:
            state = live.state
            if state.status == "done":
                return schemas.NextTrialResponse(done=True, status="done")
            cursor = state.cursor
            live.served_at.setdefault(cursor, self.clock())
            if state.status == "pending":
                live.state = state = replace(state, status="running")
            trial = state.plan.trials[cursor]
            limit = state.plan.time_limit_s
            remaining = max(0.0, limit - (self.clock() - live.served_at[cursor]))
            descriptor = schemas.TrialDescriptor(
                trial_index=cursor,
                kind=trial.kind,
                media_url=f"/study/sessions/{session_id}/trials/{cursor}/media",
                time_limit_s=limit,
                seconds_remaining=remaining,
            )
            return schemas.NextTrialResponse(done=False, status=state.status, trial=descriptor)

    def submit(self, session_id: str, req: schemas.SubmitRequest) -> schemas.SubmitResponse:
        live = self.get(session_id)
        with live.lock:
            state = live.state
            # Retries of the acknowledged trial are answered idempotently.
            prior = live.acks.get(req.trial_index)
            if prior is not None and req.trial_index == state.cursor - 1:
                stored = state.records[req.trial_index]
                if (
                    frozenset(req.objects_marked) == stored.objects_marked
                    and req.room_choice == stored.room_choice
                    and req.likert == stored.likert
                ):
                    return prior
                raise ProtocolError(
                    f"trial {req.trial_index} was already answered with different content"
                )
            served = live.served_at.get(req.trial_index)
            if served is None:
                raise ProtocolError(f"trial {req.trial_index} has not been served yet")
            elapsed = self.clock() - served
            trial = state.plan.trials[req.trial_index] if req.trial_index < len(state.plan.trials) else None
            if trial is None:
                raise ProtocolError(f"no trial {req.trial_index} in this session")
            record = TrialRecord(
                trial_index=req.trial_index,
                stimulus_id=trial.stimulus_id,
                method=trial.method,
                kind=trial.kind,
                view=trial.view,
                objects_marked=frozenset(req.objects_marked),
                room_choice=req.room_choice,
                likert=req.likert,
                response_time_s=elapsed,
            )
            live.state = study.submit_response(state, record)
            accepted = live.state.records[-1]
            study.append_jsonl(live.jsonl_path, study.record_to_dict(accepted))
            ack = schemas.SubmitResponse(
                trial_index=req.trial_index,
                late=accepted.late,
                cursor=live.state.cursor,
                status=live.state.status,
            )
            live.acks[req.trial_index] = ack
            return ack

    def status(self, session_id: str) -> schemas.SessionStatusResponse:
        live = self.get(session_id)
        with live.lock:
            state = live.state
            return schemas.SessionStatusResponse(
                session_id=state.session_id,
                subject_id=state.subject_id,
                status=state.status,
                cursor=state.cursor,
                trial_count=len(state.plan.trials),
            )

    def media_path(self, session_id: str, trial_index: int) -> tuple[str, str]:
        """Resolve (kind, absolute path) for a trial's media, safely."""
        live = self.get(session_id)
        trials = live.state.plan.trials
        if not 0 <= trial_index < len(trials):
            raise LookupError(f"no trial {trial_index} in this session")
        trial = trials[trial_index]
        path = self.catalog.resolve_media(trial.media_path)
        root = os.path.abspath(self.catalog.media_root)
        if os.path.commonpath([root, os.path.abspath(path)]) != root:
            raise LookupError(f"media path escapes the media root: {trial.media_path}")
        return trial.kind, path


def _write_text_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _score(req: schemas.ScoreRequest) -> schemas.ScoreResponse:
    paths = sorted(globlib.glob(req.sessions))
    catalog = study.load_catalog(req.catalog)
    truth = catalog.truth_map()
    rows = []
    n_sessions = 0
    for path in paths:
        header, records = study.read_session_file(path)
        meta = header.get("meta", {})
        if any(meta.get(k) != v for k, v in req.meta_filter.items()):
            continue
        n_sessions += 1
        rows.extend((header["subject_id"], record) for record in records)
    if not rows:
        raise ParameterError(f"no session records matched {req.sessions!r}")
    group_by = tuple(f.strip() for f in req.group_by.split(",") if f.strip())
    report = scoring.build_report(
        rows, truth, group_by=group_by, include_late=not req.exclude_late
    )
    report_dict = scoring.report_to_dict(report)
    table = scoring.format_text_table(report)
    files = []
    if req.out_dir:
        os.makedirs(req.out_dir, exist_ok=True)
        json_path = os.path.join(req.out_dir, "report.json")
        _write_text_atomic(json_path, json.dumps(report_dict, indent=1))
        files.append(json_path)
        txt_path = os.path.join(req.out_dir, "report.txt")
        _write_text_atomic(txt_path, table)
        files.append(txt_path)
        for group in report.groups:
            slug = "_".join(group.key).replace("/", "-") or "all"
            csv_path = os.path.join(req.out_dir, f"confusion_{slug}.csv")
            _write_text_atomic(csv_path, scoring.format_confusion_csv(group.rooms))
            files.append(csv_path)
    return schemas.ScoreResponse(
        report=report_dict, table=table, files=files, n_sessions=n_sessions
    )


def create_app(settings: ServiceSettings | None = None) -> FastAPI:
    settings = settings or ServiceSettings()
    app = FastAPI(title="spvkit", version="0.1.0")

    store: Optional[SessionStore] = None
    if settings.catalog_path:
        catalog = study.load_catalog(settings.catalog_path)
        store = SessionStore(
            catalog,
            settings.catalog_path,
            settings.results_dir,
            settings.study_seed,
            settings.clock,
        )

    @app.exception_handler(SpvError)
    async def spv_error(request: Request, exc: SpvError):
        status = 409 if isinstance(exc, ProtocolError) else 400
        return JSONResponse(status_code=status, content={"detail": str(exc)})

    @app.exception_handler(LookupError)
    async def lookup_error(request: Request, exc: LookupError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.exception_handler(FileNotFoundError)
    async def missing_file(request: Request, exc: FileNotFoundError):
        return JSONResponse(status_code=404, content={"detail": str(exc)})

    @app.get("/health")
    def health():
        return {"status": "ok", "study": store is not None}

    @app.post("/render", response_model=schemas.RenderResponse)
    def render_still(req: schemas.RenderRequest) -> schemas.RenderResponse:
        config, seed = _grid_config(req.grid)
        grid = config.build()
        frame = load_luma(req.image)
        method = Method(req.method)
        overlay = None
        if method is not Method.DIRECT:
            if not req.overlay_dir:
                raise PipelineError(f"method {method.value} needs an overlay directory")
            overlay = load_overlay(req.overlay_dir, req.frame_index, expect_size=frame.shape)
        composed, rendered = process_still(
            frame, overlay, method, grid, levels=req.levels, fov=_fov(req.fov_src, req.fov_dst)
        )
        save_luma(req.output, rendered)
        debug_output = None
        if req.debug:
            debug_output = req.output + ".debug.png"
            save_luma(debug_output, _debug_strip(frame, composed, rendered))
        with open(req.output, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        return schemas.RenderResponse(
            output=req.output, seed=seed, sha256=digest, debug_output=debug_output
        )

    @app.post("/video", response_model=schemas.VideoResponse)
    def render_video(req: schemas.VideoRequest) -> schemas.VideoResponse:
        t_start = time.perf_counter()
        config, seed = _grid_config(req.grid)
        grid = config.build()
        method = Method(req.method)
        seq = load_frame_dir(req.frames_dir, fps=req.fps)
        overlays = _load_overlays(req.overlays_dir, len(seq), method)
        t_proc = time.perf_counter()
        result = process_sequence(
            seq,
            overlays,
            method,
            grid,
            levels=req.levels,
            window=req.window,
            fov=_fov(req.fov_src, req.fov_dst),
        )
        processing_s = time.perf_counter() - t_proc
        save_sequence(result, req.out_dir, method=method, grid_config=config, seed=seed)
        elapsed = time.perf_counter() - t_start
        return schemas.VideoResponse(
            out_dir=req.out_dir,
            frame_count=len(result),
            fps=result.fps,
            seed=seed,
            elapsed_s=elapsed,
            processing_s=processing_s,
            processing_fps=len(seq) / processing_s if processing_s > 0 else float("inf"),
        )

    @app.post("/score", response_model=schemas.ScoreResponse)
    def score(req: schemas.ScoreRequest) -> schemas.ScoreResponse:
        return _score(req)

    def _store() -> SessionStore:
        if store is None:
            raise ProtocolError("study endpoints need the server started with a catalog")
        return store

    @app.post("/study/sessions", response_model=schemas.CreateSessionResponse)
    def create_session(req: schemas.CreateSessionRequest):
        return _store().create(req)

    @app.get("/study/sessions/{session_id}", response_model=schemas.SessionStatusResponse)
    def session_status(session_id: str):
        return _store().status(session_id)

    @app.get("/study/sessions/{session_id}/next", response_model=schemas.NextTrialResponse)
    def next_trial(session_id: str):
        return _store().next_trial(session_id)

    @app.post("/study/sessions/{session_id}/responses", response_model=schemas.SubmitResponse)
    def submit(session_id: str, req: schemas.SubmitRequest):
        return _store().submit(session_id, req)

    @app.get("/study/sessions/{session_id}/trials/{trial_index}/media")
    def trial_media(session_id: str, trial_index: int):
        kind, path = _store().media_path(session_id, trial_index)
        if kind == "image":
            return FileResponse(path, media_type="image/png")
        with open(path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        base = f"/study/sessions/{session_id}/trials/{trial_index}/frames"
        return schemas.VideoManifestResponse(
            fps=manifest["fps"],
            frame_count=manifest["frame_count"],
            frames=[f"{base}/{i}" for i in range(manifest["frame_count"])],
        )

    @app.get("/study/sessions/{session_id}/trials/{trial_index}/frames/{frame_index}")
    def trial_frame(session_id: str, trial_index: int, frame_index: int):
        kind, path = _store().media_path(session_id, trial_index)
        if kind != "video":
            raise LookupError(f"trial {trial_index} is not a video")
        with open(path, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
        frames = manifest["frames"]
        if not 0 <= frame_index < len(frames):
            raise LookupError(f"no frame {frame_index} in this sequence")
        return FileResponse(
            os.path.join(os.path.dirname(path), frames[frame_index]), media_type="image/png"
        )

    if settings.ui_dir and os.path.isdir(settings.ui_dir):
        app.mount("/ui", StaticFiles(directory=settings.ui_dir, html=True), name="ui")

    return app
