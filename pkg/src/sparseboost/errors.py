"""Exception types raised across the package.

Everything derives from :class:`SparseboostError`, so callers can catch one
base class at the CLI boundary.  Data and schema problems live under
:class:`SchemaError`; the remaining classes flag fitting or evaluation
failures.
"""


class SparseboostError(Exception):
    """Base class for all package errors."""


class SchemaError(SparseboostError):
    """Base class for schema or raw-data validation errors."""


class UnknownCategoryError(SchemaError):
    """A raw value is not among the declared categories of its variable."""


class MissingColumnError(SchemaError):
    """A schema variable (or the outcome) has no column in the raw table."""


class MissingValueError(SchemaError):
    """The raw table contains a missing value; imputation is out of scope."""


class NonBinaryOutcomeError(SchemaError):
    """The outcome column does not carry exactly the two declared categories."""


class DegenerateColumnError(SchemaError):
    """An encoded predictor column is constant, so centering zeroes it out."""


class UnattainableDfError(SparseboostError):
    """Requested effective degrees of freedom exceed the design block's rank."""


class NumericalFailureError(SparseboostError):
    """A linear solve or iterative method failed beyond recovery."""


class DegenerateOutcomeError(SparseboostError):
    """All outcome labels are identical, so the mean-link offset is infinite."""


class ColumnMismatchError(SparseboostError):
    """A design matrix does not match the one a fit was trained on."""


class TooFewObservationsError(SparseboostError):
    """Not enough rows per class to honour the requested split or folds."""


class DegenerateFoldError(SparseboostError):
    """A cross-validation fold's training part lost one outcome class."""


class SingleClassError(SparseboostError):
    """ROC evaluation needs at least one positive and one negative label."""


class UnknownLearnerError(SparseboostError):
    """A learner id was requested that the fit does not contain."""


class FingerprintMismatchError(SparseboostError):
    """A stored artifact was produced under a different schema."""
