"""Exception hierarchy shared by all conclab modules.

The CLI maps these onto exit codes: validation-type errors exit with 2,
:class:`CapacityError` with 3 and :class:`InternalError` with 4.
"""


class ConclabError(Exception):
    """Base class for every error raised by conclab."""


class ParameterError(ConclabError, ValueError):
    """A scalar parameter is outside its admissible range."""


class DimensionError(ConclabError, ValueError):
    """Two objects that must share a size do not."""


class DataError(ConclabError, ValueError):
    """Input data (trajectories, weights) is malformed."""


class PreconditionError(ConclabError, ValueError):
    """An operation-specific precondition does not hold."""


class ModelError(ConclabError, ValueError):
    """A Markov chain model is unusable (not ergodic, degenerate contraction)."""


class CapacityError(ConclabError):
    """An enumeration would exceed its explicit size cap."""


class InternalError(ConclabError, RuntimeError):
    """A numerical routine failed or two independent routes disagree."""
