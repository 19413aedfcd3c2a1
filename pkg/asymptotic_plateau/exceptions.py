class PlateauError(Exception):
    """Base class of every error raised by the solver services."""


class DomainError(PlateauError, ValueError):
    """A point or parameter lies outside the domain of an operation."""


class BoundaryError(PlateauError, ValueError):
    """Ideal curves, arcs or bridges could not be built as requested."""


class DegenerateMeshError(PlateauError, ValueError):
    """Degenerate triangles or non-manifold connectivity."""


class GraphFailureError(PlateauError, RuntimeError):
    """A surface is not a normal graph over the reference surface."""


class NumericalFailure(PlateauError, RuntimeError):
    """An iterative or shooting procedure did not deliver a trustworthy answer."""


class ConstructionError(PlateauError, RuntimeError):
    """A construction stage cannot be planned with the available room."""


class SceneError(PlateauError, ValueError):
    """Scene file violates the schema; the message names the offending field."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"field '{field}': {message}")
