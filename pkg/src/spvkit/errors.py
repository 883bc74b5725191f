"""Exception hierarchy shared across the toolkit."""


class SpvError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(SpvError):
    """A numeric parameter violates its precondition."""


class DimensionError(SpvError):
    """An image is too small or the wrong shape for the requested operation."""


class GeometryError(SpvError):
    """Phosphene grid geometry cannot be constructed or does not match."""


class FovError(SpvError):
    """Field-of-view crop request is invalid."""


class SequenceError(SpvError):
    """A frame sequence is too short or inconsistent."""


class PipelineError(SpvError):
    """Frame/overlay bookkeeping failed while processing a sequence."""


class OverlayError(SpvError):
    """Saliency overlay ingestion failed (missing manifest, missing edges)."""


class OverlayFormatError(OverlayError):
    """Overlay manifest or raster violates the documented format."""


class CatalogError(SpvError):
    """Stimulus catalog is missing entries or malformed."""


class ProtocolError(SpvError):
    """Study session received an out-of-order, duplicate or invalid submission."""


class ConsistencyError(SpvError):
    """Scoring input references unknown trials or stimuli."""


class InsufficientDataError(SpvError):
    """Not enough data points for the requested statistic."""
