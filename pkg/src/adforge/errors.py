"""Exception types shared across the pipeline."""


class AdforgeError(Exception):
    """Base class for all errors raised by this package."""


class BackendUnavailable(AdforgeError):
    """A model backend could not be reached after the configured retries."""


class BackendProtocolViolation(AdforgeError):
    """A backend answered, but with a payload that violates the wire contract."""


class MockRuleMissing(AdforgeError):
    """A mock backend received a request no configured rule matches.

    This indicates a test or configuration bug, never a runtime fallback.
    """


class UnparseableModelOutput(AdforgeError):
    """Model text from which no usable JSON answer could be extracted."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class ProfileRejected(AdforgeError):
    """The profiling model judged the image not to match its category label."""


class TooFewFloorPixels(AdforgeError):
    """Not enough floor pixels to back-project a usable point cloud."""


class DegenerateGeometry(AdforgeError):
    """Plane fitting failed to find a consensus plane in the point cloud."""


class NoCompatiblePairs(AdforgeError):
    """Every candidate pair was rejected by the room or viewpoint filters."""

    def __init__(self, message: str, rejects=None):
        super().__init__(message)
        self.rejects = rejects or []


class LayoutParseError(AdforgeError):
    """Model layout text does not follow the two-line CSS-like grammar."""


class EmptyForeground(AdforgeError):
    """A cutout has an all-zero alpha channel (nothing to place)."""


class JudgeProtocolViolation(AdforgeError):
    """A judge answered with a score outside 1..5 or not an integer."""

    def __init__(self, message: str, raw: str = ""):
        super().__init__(message)
        self.raw = raw


class InvalidSpec(AdforgeError):
    """A batch spec failed validation."""


class UnknownCategory(AdforgeError):
    """A requested product category does not exist in the catalog."""


class UnknownGeneration(AdforgeError):
    """A generation id does not resolve to a stored record."""


class UnknownBatch(AdforgeError):
    """A batch id does not resolve to a stored batch."""


class InvalidImage(AdforgeError):
    """An image failed to decode or is below the minimum usable size."""
