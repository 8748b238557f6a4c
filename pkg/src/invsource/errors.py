"""Exception types shared across the package."""


class InvalidParameter(ValueError):
    """A numeric or structural parameter is outside its admissible range."""


class DimensionMismatch(InvalidParameter):
    """Operands live in incompatible spaces (2D vs 3D, elastic vs EM, ...)."""


class EmptyRegion(ValueError):
    """A region restriction left no grid nodes to work with."""


class ZeroReference(ZeroDivisionError):
    """The reference field has zero norm, so a relative error is undefined."""
