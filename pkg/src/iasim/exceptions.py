"""Exception types shared across the simulator."""


class SimError(Exception):
    """Base class; the CLI maps any of these to a nonzero exit."""


class ValidationError(SimError):
    """A configuration value violates a model invariant."""


class ParseError(SimError):
    """Malformed config file; message carries line number and key."""


class InvalidKappaError(ValidationError):
    """Mixing-matrix weight outside [0, 1]."""


class HadamardUnavailableError(ValidationError):
    """Hadamard family requires the total dimension to be a power of two."""


class DimensionMismatchError(SimError):
    """Operands live in different spaces."""


class IllConditionedError(SimError):
    """Co-scheduled directions too collinear for ZF precoding."""


class NoNullSpaceError(SimError):
    """Stacked interference matrix leaves no interference-free direction."""


class ZeroDirectionError(SimError):
    """A decoder direction collapsed to the zero vector."""


class LTooLargeError(SimError):
    """More feedback directions requested than the equivalent channel has."""


class BudgetExceededError(SimError):
    """Exhaustive search would exceed the configured subset budget."""


class BinMismatchError(SimError):
    """Result files use incompatible SINR bin grids."""
