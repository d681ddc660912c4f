"""Exception types raised across the package.

Every error the library raises deliberately derives from AopfError so
callers (and the CLI) can catch one base class and report the concrete
name.
"""


class AopfError(Exception):
    """Base class for all errors raised by this package."""


class ShapeMismatchError(AopfError):
    """Operands have incompatible shapes."""


class DomainError(AopfError):
    """A numeric argument lies outside the mathematically valid domain."""


class IndexOutOfRangeError(AopfError):
    """A node or edge index refers outside [0, num_nodes)."""


class SelfLoopInputError(AopfError):
    """An input edge list contains a self-loop, which is not representable."""


class AsymmetricInputError(AopfError):
    """An edge set expected to be symmetric is not."""


class InvalidProbabilityError(AopfError):
    """A probability argument is outside its valid range."""


class EmptyMaskError(AopfError):
    """A node mask that must select at least one node is empty."""


class LabelOutOfRangeError(AopfError):
    """A class label lies outside [0, num_classes)."""


class NonScalarLossError(AopfError):
    """backward() was asked to differentiate a non-scalar tensor."""


class SchemaError(AopfError):
    """A dataset container file is missing, malformed, or mistyped."""


class ValidationError(AopfError):
    """Structurally well-formed data violates a semantic constraint."""


class TooFewNodesError(AopfError):
    """The dataset is too small for the requested fold layout."""


class ConfigError(AopfError):
    """A run configuration value is invalid or inconsistent."""
