"""Multi-frequency far-field source reconstruction by direct sampling."""
from . import geometry, sources, forward, indicators
from .errors import DimensionMismatch, EmptyRegion, InvalidParameter, ZeroReference

__version__ = "0.1.0"

__all__ = [
    "geometry", "sources", "forward", "indicators",
    "DimensionMismatch", "EmptyRegion", "InvalidParameter", "ZeroReference",
]
