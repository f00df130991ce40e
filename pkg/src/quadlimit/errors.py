"""Exception hierarchy.

Configuration problems map to CLI exit code 2, numerical guards to exit
code 3. Structural violations indicate a bug and are never swallowed.
"""


class QuadLimitError(Exception):
    """Base class for all package errors."""


class ConfigError(QuadLimitError, ValueError):
    """Invalid parameters or configuration."""


class NumericalGuardError(QuadLimitError):
    """A numerical or resource guard fired."""


class ConvergenceError(NumericalGuardError):
    """A series or iteration did not reach the requested tolerance."""


class CapExceededError(NumericalGuardError):
    """A sampled object exceeded its size cap."""


class CensoringError(NumericalGuardError):
    """Too many Monte Carlo replicas were censored by the horizon."""


class ResourceLimitError(NumericalGuardError):
    """Estimated memory or work exceeds the configured budget."""


class TableRangeError(QuadLimitError, IndexError):
    """A count table was queried outside its computed range."""


class StructureError(QuadLimitError):
    """A combinatorial invariant was violated."""


class HorizonExceededError(NumericalGuardError):
    """A simulated process failed to reach its target within the step budget."""
