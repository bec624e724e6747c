"""Exception taxonomy shared across the package.

Callers that need to distinguish bad input from a well-posed problem that
degenerates numerically can catch :class:`ValidationError` / :class:`DomainError`
for the former and the remaining subclasses for the latter.  The command line
front end maps the two groups to distinct exit codes.
"""


class QdoeError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(QdoeError):
    """An argument fails a structural check (shape, symmetry, range, ...)."""


class DomainError(QdoeError):
    """A parameter vector lies outside its channel family's domain."""


class SingularStateError(QdoeError):
    """A quantum-information computation hit a rank-deficient state it cannot
    handle, e.g. a derivative with support outside the state's range."""


class SingularDesignError(QdoeError):
    """A measurement design is too degenerate for the requested quantity."""


class DegenerateModelError(QdoeError):
    """The statistical model carries no information along some direction."""


class NuisanceSingularError(QdoeError):
    """Nuisance-block inversion failed in a way that leaves the partial
    information matrix undefined."""


class EstimatorError(QdoeError):
    """An estimator was evaluated on data that does not determine it."""


class EfficiencyError(QdoeError):
    """An efficiency ratio was requested with an invalid reference value."""
