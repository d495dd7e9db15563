"""Exception types shared across pipeline stages."""


class PipelineError(Exception):
    """Base class for every error this package raises on purpose."""


class ConfigError(PipelineError):
    """A configuration value violates its invariants."""


# -- visual backends -------------------------------------------------------

class BackendUnavailable(PipelineError):
    """An OCR/caption backend command or endpoint failed."""


class Timeout(PipelineError):
    """A backend or endpoint did not answer within the configured timeout."""


class UndecodableImage(PipelineError):
    """The input bytes are not a decodable image."""


class EmptyCaption(PipelineError):
    """The caption backend returned a blank string (misconfiguration)."""


# -- evidence retrieval ----------------------------------------------------

class QuotaExceeded(PipelineError):
    """The search engine rejected the request on quota grounds."""


class NetworkFailure(PipelineError):
    """A search request kept failing after the configured retries."""


class OfflineMiss(PipelineError):
    """offline_mode is on and the query is neither cached nor fixture-backed."""


class EmptyQuery(PipelineError):
    """Text search was asked to run on an empty query string."""


# -- teacher / model clients ------------------------------------------------

class EndpointFailure(PipelineError):
    """A completion endpoint failed after retries."""


class ClientUnavailable(PipelineError):
    """The completion endpoint is unreachable outright; aborts an eval run."""


class BudgetExhausted(PipelineError):
    """The configured request budget is spent."""


class EmptyCompletion(PipelineError):
    """The teacher returned an empty completion."""


class LabelConflict(PipelineError):
    """The teacher's own terminal sentence names a different label than the
    gold one; the record must be quarantined rather than rewritten."""


# -- dataset assembly / evaluation ------------------------------------------

class IdMismatch(PipelineError):
    """Instance and rationale post ids disagree."""


class EmptyInput(PipelineError):
    """An operation that needs at least one element got none."""


class LengthMismatch(PipelineError):
    """Parallel gold/prediction sequences have different lengths."""
