"""Exception types raised across the toolkit."""


class NamingLabError(Exception):
    """Base class for all toolkit errors."""


class SchemaError(NamingLabError):
    """Document does not parse against its schema (missing keys, wrong types)."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class ConsistencyError(NamingLabError):
    """Document parses but violates a dataset/naming invariant.

    ``violations`` carries one entry per violation so callers can report
    every problem at once instead of failing on the first.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class NoPositiveEvidence(NamingLabError):
    """A record has no strictly positive contribution for the class."""


class UnknownClass(NamingLabError):
    """class_id is not declared in the test set's categories."""


class MismatchedKeys(NamingLabError):
    """Arguments refer to different (image, class) keys or classes."""


class EmptySignificantSet(NamingLabError):
    """The class has zero significant activations."""


class DuplicateAnnotator(NamingLabError):
    """Two namings in one comparison share an annotator_id."""


class EmptyNaming(NamingLabError):
    """The naming has no named activations."""


class BothEmpty(NamingLabError):
    """Both named sets are empty, so overlap is undefined."""


class UnsupportedD(NamingLabError):
    """D-family matching is implemented for D in {1, 2} only."""


class NoCommonActivations(NamingLabError):
    """The two namings share no named activations."""


class EmptyAfterNormalization(NamingLabError):
    """A concept name contained nothing but stopwords/separators."""


class ZeroTotalWeight(NamingLabError):
    """No intra-family edges, so a compatibility fraction is undefined."""


class InfeasibleConfig(NamingLabError):
    """Synthetic-data config cannot satisfy the significance constraint."""
