"""Exception hierarchy shared across the package."""


class PolyRegError(Exception):
    """Base class for all package-specific errors."""


class UsageError(PolyRegError):
    """Malformed input: dimension mismatch, bad relation, bad arguments."""


class EmptySetError(PolyRegError):
    """Operation requires a nonempty polyhedron."""


class NotInSetError(PolyRegError):
    """A point expected to lie in a set does not."""


class MalformedRelationError(PolyRegError):
    """A face correspondence is not a bijection / not total."""


class SingularRelationError(PolyRegError):
    """Operation requires a non-singular complementarity relation."""


class NonUniqueError(PolyRegError):
    """A sampled point has zero or multiple solutions where one was required."""
