"""Exception types shared across the toolkit."""


class TcmNomaError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(TcmNomaError):
    """Invalid or inconsistent configuration input."""


class InvalidDimensions(ConfigError):
    """Mapping dimensions are impossible (e.g. more users than subcarrier subsets)."""


class InvalidPreset(ConfigError):
    """A preset mapping grid violates the required row/column weights."""


class IndexOutOfRange(TcmNomaError):
    pass


class SetTooSmall(TcmNomaError):
    """A signal set is too small for the requested operation."""


class TargetTooLarge(TcmNomaError):
    """Shaping target exceeds the available point count."""


class OddSize(TcmNomaError):
    """Bipartitioning needs an even number of points."""


class SizeNotPowerOfTwo(TcmNomaError):
    pass


class IncompleteTree(TcmNomaError):
    """Partition tree does not reach singleton leaves."""


class DuplicateInsert(TcmNomaError):
    pass


class MissingRemove(TcmNomaError):
    pass


class EmptyIndex(TcmNomaError):
    pass


class NonRealizable(ConfigError):
    """Feedback polynomial is not in the canonical realizable form."""


class DegreeTooHigh(ConfigError):
    """Parity polynomial degree exceeds the register count."""


class LengthMismatch(TcmNomaError):
    pass


class TooLarge(TcmNomaError):
    """Exhaustive enumeration would exceed the hypothesis guard."""


class StateSpaceTooLarge(TcmNomaError):
    """Joint state space exceeds the tractability guard."""


class DepthExceeded(Warning):
    """Bounded distance search ended without certifying its result.

    Reported (via warnings or result flags), never fatal.
    """
