"""Exception types shared across the package.

Everything derives from ValueError or RuntimeError so callers that do not
care about fine-grained kinds can catch the built-ins.  The CLI maps these
onto machine-readable error kinds and exit codes.
"""


class SingularDesignError(ValueError):
    """Design matrix is rank deficient where full rank is required."""


class PathTruncatedError(RuntimeError):
    """A solution path ended (step cap or rank limit) above the requested penalty."""


class NoValidStartError(RuntimeError):
    """Every random starting subset was degenerate; no fit could be seeded."""


class DegenerateSelectionError(ValueError):
    """Selection rule has no informative answer (e.g. all candidate columns constant)."""


class UndefinedMetricError(ValueError):
    """Metric denominator is empty, so the metric is undefined rather than zero."""


class UndefinedCorrelationError(ValueError):
    """Correlation screening target has zero variance."""


class FitError(RuntimeError):
    """A fitting procedure failed at runtime (distinct from invalid arguments)."""
