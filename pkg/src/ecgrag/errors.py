"""Exception hierarchy shared across the package.

Every operation that can fail raises a subclass of :class:`EcgRagError`, so
callers (and the CLI) can catch one base type and still report a precise
failure mode.
"""


class EcgRagError(Exception):
    """Base class for all errors raised by this package."""


# --- ingest ---------------------------------------------------------------

class MalformedFileError(EcgRagError):
    """File could not be parsed under the declared format."""


class NonFiniteSampleError(EcgRagError):
    """Signal contains NaN or Inf samples."""


class UnknownLeadError(EcgRagError):
    """Lead name is not one of the 12 canonical names or a known alias."""


class MissingLeadError(EcgRagError):
    """A canonical lead is absent and zero-fill was not requested."""


class DuplicateLeadError(EcgRagError):
    """The same canonical lead appears more than once."""


# --- dsp ------------------------------------------------------------------

class FrequencyOutOfRangeError(EcgRagError):
    """Requested filter frequency violates 0 < f < fs/2 (or low >= high)."""


class UnsupportedOrderError(EcgRagError):
    """Filter order not supported (must be even and >= 2)."""


class SignalTooShortError(EcgRagError):
    """Signal is too short for the requested operation."""


class SamplingRateError(EcgRagError):
    """Record is not at the sampling rate the operation requires."""


# --- ecg_bpe --------------------------------------------------------------

class EmptyCorpusError(EcgRagError):
    """BPE training corpus is empty."""


class SymbolOutOfRangeError(EcgRagError):
    """Symbol id is outside the quantizer alphabet."""


class UnknownTokenError(EcgRagError):
    """Token id is not in the vocabulary."""


# --- annindex -------------------------------------------------------------

class TooFewVectorsError(EcgRagError):
    """Fewer training vectors than requested coarse cells."""


class NotTrainedError(EcgRagError):
    """Index used before training."""


class DimensionMismatchError(EcgRagError):
    """Vector dimensionality differs from the index dimensionality."""


class DuplicateIdError(EcgRagError):
    """Id already present in the index or database."""


class BadParamsError(EcgRagError):
    """Search/query parameters outside their valid range."""


# --- ragdb ----------------------------------------------------------------

class EmptyInputError(EcgRagError):
    """Operation requires a non-empty input collection."""


class EmptyDatabaseError(EcgRagError):
    """Query against a database with no entries."""


# --- promptkit ------------------------------------------------------------

class NoReportsError(EcgRagError):
    """RAG enabled but no retrieved reports and fallback disabled."""


class PromptOverflowError(EcgRagError):
    """Prompt cannot fit max_len even after exhausting the truncation policy."""


class LengthMismatchError(EcgRagError):
    """Parallel sequences (labels / log-probs) differ in length."""


# --- genclient ------------------------------------------------------------

class TransportError(EcgRagError):
    """Endpoint unreachable after all retry attempts."""


class BadResponseError(EcgRagError):
    """Endpoint returned an unparseable or incomplete payload."""


class BackendOverflowError(EcgRagError):
    """Backend reported a context-window overflow."""
