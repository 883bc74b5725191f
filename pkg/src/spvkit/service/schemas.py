"""Pydantic request/response models for the HTTP service.

TrialDescriptor is the blinding boundary: it is the only shape in which
stimuli reach clients and it carries no ground-truth fields.
"""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

from ..saliency import LIKERT_LEVELS, OBJECT_CLASSES, ROOM_TYPES


class GridParams(BaseModel):
    rows: int = 32
    cols: int = 32
    canvas: int = 512
    sigma_ratio: float = 4.0
    cutoff_ratio: float = 2.0
    dropout_rate: float = 0.0
    seed: Optional[int] = None  # drawn by the server when omitted


class RenderRequest(BaseModel):
    image: str
    output: str
    method: Literal["direct", "om", "sie-om"] = "direct"
    overlay_dir: Optional[str] = None
    frame_index: int = 0
    levels: int = 8
    grid: GridParams = Field(default_factory=GridParams)
    fov_src: Optional[float] = None
    fov_dst: float = 20.0
    debug: bool = False


class RenderResponse(BaseModel):
    output: str
    seed: int
    sha256: str
    debug_output: Optional[str] = None


class VideoRequest(BaseModel):
    frames_dir: str
    out_dir: str
    method: Literal["direct", "om", "sie-om"] = "direct"
    overlays_dir: Optional[str] = None
    levels: int = 8
    fps: float = 20.0
    window: int = 5
    grid: GridParams = Field(default_factory=GridParams)
    fov_src: Optional[float] = None
    fov_dst: float = 20.0


class VideoResponse(BaseModel):
    out_dir: str
    frame_count: int
    fps: float
    seed: int
    elapsed_s: float
    processing_s: float
    processing_fps: float


class ScoreRequest(BaseModel):
    sessions: str  # glob over session .jsonl files
    catalog: str
    group_by: str = "method,kind"
    out_dir: Optional[str] = None
    exclude_late: bool = False
    meta_filter: dict[str, str] = Field(default_factory=dict)


class ScoreResponse(BaseModel):
    report: dict
    table: str
    files: list[str]
    n_sessions: int


class CreateSessionRequest(BaseModel):
    subject_id: str
    seed: Optional[int] = None
    meta: dict[str, str] = Field(default_factory=dict)


class CreateSessionResponse(BaseModel):
    session_id: str
    subject_id: str
    seed: int
    trial_count: int
    time_limit_s: float
    status: str


class TrialForm(BaseModel):
    object_choices: list[str] = Field(default_factory=lambda: list(OBJECT_CLASSES))
    room_choices: list[str] = Field(default_factory=lambda: list(ROOM_TYPES))
    likert_choices: list[str] = Field(default_factory=lambda: list(LIKERT_LEVELS))


class TrialDescriptor(BaseModel):
    trial_index: int
    kind: Literal["image", "video"]
    media_url: str
    time_limit_s: float
    seconds_remaining: float
    form: TrialForm = Field(default_factory=TrialForm)


class NextTrialResponse(BaseModel):
    done: bool
    status: str
    trial: Optional[TrialDescriptor] = None


class SubmitRequest(BaseModel):
    trial_index: int
    objects_marked: list[str] = Field(default_factory=list)
    room_choice: str
    likert: str
    client_response_time_s: Optional[float] = None


class SubmitResponse(BaseModel):
    trial_index: int
    late: bool
    cursor: int
    status: str


class SessionStatusResponse(BaseModel):
    session_id: str
    subject_id: str
    status: str
    cursor: int
    trial_count: int


class VideoManifestResponse(BaseModel):
    kind: Literal["video"] = "video"
    fps: float
    frame_count: int
    frames: list[str]
