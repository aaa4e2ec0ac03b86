"""Exception hierarchy. Everything raised on purpose derives from VqaError."""


class VqaError(Exception):
    """Base class for all library errors."""


class InvalidRangeError(VqaError, ValueError):
    """Interval bounds are not strictly ordered."""


class InvalidThresholdError(VqaError, ValueError):
    """A threshold that must be positive is not."""


class ZeroNormError(VqaError, ValueError):
    """Vector too close to zero to normalize or score."""


class DimensionError(VqaError, ValueError):
    """Array shapes are inconsistent with each other or with parameters."""


class CacheError(VqaError, ValueError):
    """A backward pass received a cache that does not match its forward."""


class EmptySequenceError(VqaError, ValueError):
    """A sequence operation received zero frames."""


class WindowError(VqaError, ValueError):
    """Clip too short to supply the requested input/target windows."""


class DatasetError(VqaError, ValueError):
    """Training dataset is empty or yields no valid windows."""


class ConfigError(VqaError, ValueError):
    """Invalid run or generator configuration."""


class SampleCountError(VqaError, ValueError):
    """Too few samples for the requested fit."""


class RankError(VqaError, ValueError):
    """Requested more components than the data supports."""


class UnknownPhraseError(VqaError, ValueError):
    """No token of the phrase appears in the embedding table."""


class PoolExhaustedError(VqaError, ValueError):
    """Not enough eligible distractors survive the filters."""


class IntegrityError(VqaError, ValueError):
    """Candidate list or split lists violate a structural constraint."""


class FormatError(VqaError, ValueError):
    """Malformed binary container (bad magic, truncation, zero dims)."""


class SchemaError(VqaError, ValueError):
    """Malformed text record (ragged embedding row, missing JSON field)."""
