"""Exception hierarchy shared by all modules (and mapped to CLI exit codes)."""


class StableClusterError(Exception):
    """Base class for all errors raised by this package."""


class InstanceError(StableClusterError, ValueError):
    """Malformed instance data: bad shapes, non-finite values, asymmetric matrices."""


class PreconditionError(StableClusterError, ValueError):
    """A domain precondition was violated (k > n, empty member set, ...)."""


class BudgetExceededError(StableClusterError, RuntimeError):
    """An exhaustive computation would exceed its configured budget."""


class GeneratorError(StableClusterError, RuntimeError):
    """A generator could not produce an instance satisfying its post-checks."""
