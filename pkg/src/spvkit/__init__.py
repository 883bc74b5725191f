"""spvkit: simulated prosthetic vision toolkit.

Converts indoor-scene images and videos plus precomputed saliency
artifacts (object-instance masks, structural-edge maps) into phosphene
renderings, and hosts a timed room/object recognition study with
scoring. The HTTP service in :mod:`spvkit.service` exposes everything;
the ``spvkit`` CLI is a thin client over it.
"""

from .errors import (
    CatalogError,
    ConsistencyError,
    DimensionError,
    FovError,
    GeometryError,
    InsufficientDataError,
    OverlayError,
    OverlayFormatError,
    ParameterError,
    PipelineError,
    ProtocolError,
    SequenceError,
    SpvError,
)
from .phosphenes import (
    ElectrodeActivation,
    GridConfig,
    PhospheneGrid,
    apply_dropout,
    build_grid,
    downsample,
    quantize,
    render,
)
from .saliency import (
    LIKERT_LEVELS,
    OBJECT_CLASSES,
    ROOM_TYPES,
    EdgeMap,
    ObjectInstance,
    SaliencyOverlay,
    compose_om,
    compose_sie_om,
    fallback_edges,
    load_overlay,
)
from .scoring import build_report, ci95, likert_distribution, score_objects, score_rooms
from .study import StimulusPlan, TrialRecord, build_plan, load_catalog, submit_response
from .video import FovSpec, FrameSequence, Method, crop_fov, process_sequence, temporal_median

__version__ = "0.1.0"
