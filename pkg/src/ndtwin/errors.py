"""Exception hierarchy shared across the toolkit.

Errors are grouped by the surface that raises them so callers (CLI,
service) can map them to exit codes / HTTP statuses without string
matching.
"""


class NdtError(Exception):
    """Base class for all toolkit errors."""


# --- input / ingestion ------------------------------------------------------

class FileUnreadable(NdtError):
    pass


class EmptyInput(NdtError):
    """No usable input (zero parseable lines, empty accepted set, ...)."""


class MissingInput(NdtError):
    """A required artifact (snapshot, checkpoint, ...) does not exist."""


class SchemaMismatch(NdtError):
    """Document is not of the expected measurement type."""


class MissingField(NdtError):
    pass


class UnusableRecord(NdtError):
    """Ping result cannot yield a measurement record (rcvd=0 or no avg)."""


class EmptyGroup(NdtError):
    pass


class MetaMismatch(NdtError):
    """Records and probe metadata disagree on probe_id."""


class NetworkError(NdtError):
    """Transport failure that survived the retry policy."""


class RateLimited(NdtError):
    """HTTP 429 surfaced after backoff exhaustion."""


class AuthRequired(NdtError):
    pass


# --- knowledge graph --------------------------------------------------------

class TooFewNodes(NdtError):
    pass


class MissingCoordinates(NdtError):
    pass


class VersionMismatch(NdtError):
    pass


class CorruptSnapshot(NdtError):
    pass


# --- features ---------------------------------------------------------------

class IncompleteNode(NdtError):
    """A node lacks one of the required feature fields."""


class NegativeInput(NdtError):
    pass


class OutOfRange(NdtError):
    pass


# --- numeric core / models --------------------------------------------------

class ShapeMismatch(NdtError):
    pass


class InvalidConfig(NdtError):
    pass


class StaleTape(NdtError):
    """Backward pass requested without a matching forward pass."""


class InsufficientNodes(NdtError):
    """Graph too small for the requested positional-encoding dimension."""


# --- training ---------------------------------------------------------------

class EmptyMask(NdtError):
    pass


class NonFiniteGradient(NdtError):
    pass


class DivergenceDetected(NdtError):
    """Training loss became non-finite.

    Carries the architecture name when raised from the pipeline.
    """

    def __init__(self, message, architecture=None):
        super().__init__(message)
        self.architecture = architecture


class TooFewEpochs(NdtError):
    pass


# --- evaluation -------------------------------------------------------------

class ZeroVariance(NdtError):
    pass


class EmptyLog(NdtError):
    pass


class FingerprintMismatch(NdtError):
    pass


# --- qoe --------------------------------------------------------------------

class InvalidProfile(NdtError):
    """Sensitivity weights are negative or do not sum to 1."""
