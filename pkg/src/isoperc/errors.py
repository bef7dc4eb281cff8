"""Exception types shared across the package."""


class IsopercError(Exception):
    """Base class for all package errors."""


class ValidationError(IsopercError, ValueError):
    """Bad arguments or violated preconditions."""


class EmptyWindowError(ValidationError):
    """A generator window contains no rhombi."""


class InvalidAngleError(ValidationError):
    """A rhombus angle outside (0, pi), or degenerate within tolerance."""


class InvalidDirectionsError(ValidationError):
    """Grid directions that are not usable (e.g. a parallel pair)."""


class DegenerateOffsetsError(ValidationError):
    """Multigrid offsets producing a triple line coincidence."""


class NotFlippableError(ValidationError):
    """Hexagon flip requested at a vertex that is not a flippable hexagon centre."""


class MissingTilingError(ValidationError):
    """Operation needs the source tiling but the graph carries none."""


class WrongModelError(ValidationError):
    """Weights of the wrong model family passed to an operation."""


class NotSolvableError(ValidationError):
    """Star-triangle operation on parameters with nonzero solvability residual."""


class GeometryError(ValidationError):
    """A measurement region does not fit inside the available patch."""


class TooLargeError(ValidationError):
    """Exact enumeration requested beyond the supported size."""


class OutOfRegimeError(ValidationError):
    """Parameters outside the regime an operation is specified for."""


class DomainError(ValidationError):
    """Data outside the domain of a numerical routine (e.g. log of zero)."""
