"""Exception types shared across the library."""


class WaveregError(Exception):
    """Base class for all wavereg errors."""


class DimensionError(WaveregError, ValueError):
    """Input grid has an unusable shape (not square / not a power of two)."""


class LevelRangeError(WaveregError, ValueError):
    """A pyramid or reduction level is outside its valid range."""


class ContractError(WaveregError, ValueError):
    """Arguments violate a documented precondition (axis mismatch, bad factor)."""


class DegenerateInputError(WaveregError, ValueError):
    """Input carries no usable signal (all-zero planes, empty masks, ...)."""


class FormatError(WaveregError, ValueError):
    """Unsupported or malformed image file."""


class EstimationError(WaveregError, RuntimeError):
    """An estimation stage could not produce a finite result."""
