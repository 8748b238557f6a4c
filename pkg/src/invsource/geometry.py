"""Observation directions, frequency grids and spatial sampling lattices.

All objects here are immutable; array attributes are flagged read-only so
they can be shared freely between workers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidParameter

__all__ = [
    "Direction2",
    "Direction3",
    "DirectionSet",
    "FrequencyGrid",
    "SamplingGrid",
    "theta_circle",
    "fibonacci_sphere",
    "frequency_grid",
    "cartesian_grid",
    "plane_slice",
]

# tolerance used when counting lattice nodes, so that 6/0.01 counts 601 nodes
_COUNT_EPS = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Direction2:
    ux: float
    uy: float

    def perp(self) -> "Direction2":
        """Rotate anticlockwise by a quarter turn."""
        return Direction2(-self.uy, self.ux)

    def as_array(self) -> np.ndarray:
        return np.array([self.ux, self.uy])


@dataclass(frozen=True)
class Direction3:
    ux: float
    uy: float
    uz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.ux, self.uy, self.uz])


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Ordered unit vectors with an equal-weight surface quadrature.

    Attributes
    ----------
    dimension : int
        2 (circle) or 3 (sphere).
    vectors : ndarray, shape (L, dimension)
        Unit vectors in construction order.
    quadrature_weight : float
        ``2*pi/L`` in 2D and ``4*pi/L`` in 3D.
    """

    dimension: int
    vectors: np.ndarray
    quadrature_weight: float

    def __post_init__(self):
        object.__setattr__(self, "vectors", _frozen(np.asarray(self.vectors, dtype=float)))

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def perp(self) -> np.ndarray:
        """Quarter-turn rotated vectors (2D only)."""
        if self.dimension != 2:
            raise InvalidParameter("perp is only defined for planar directions")
        return np.column_stack([-self.vectors[:, 1], self.vectors[:, 0]])

    @property
    def directions(self) -> list:
        cls = Direction2 if self.dimension == 2 else Direction3
        return [cls(*map(float, v)) for v in self.vectors]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DirectionSet):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.quadrature_weight == other.quadrature_weight
            and np.array_equal(self.vectors, other.vectors)
        )


def _check_count(L, name="L") -> int:
    if isinstance(L, bool) or int(L) != L or L < 1:
        raise InvalidParameter(f"{name} must be a positive integer, got {L!r}")
    return int(L)


def theta_circle(L: int) -> DirectionSet:
    """Equispaced directions ``(cos 2*pi*l/L, sin 2*pi*l/L)``, ``l = 0..L-1``."""
    L = _check_count(L)
    angle = 2.0 * np.pi * np.arange(L) / L
    vectors = np.column_stack([np.cos(angle), np.sin(angle)])
    # the cosines of exact quarter turns come out as 6e-17 otherwise
    vectors[np.abs(vectors) < 1e-15] = 0.0
    return DirectionSet(2, vectors, 2.0 * np.pi / L)


def fibonacci_sphere(L: int) -> DirectionSet:
    """Fibonacci lattice on the unit sphere, ``l = 1..L``.

    ``x3 = 1 - 2l/L`` and the azimuth is ``(sqrt(5) - 1)*pi*l``. The last
    point (``l = L``) is the south pole.
    """
    L = _check_count(L)
    l = np.arange(1, L + 1, dtype=float)
    x3 = 1.0 - 2.0 * l / L
    rho = np.sqrt(np.clip(1.0 - x3 * x3, 0.0, None))
    azimuth = (math.sqrt(5.0) - 1.0) * np.pi * l
    vectors = np.column_stack([rho * np.cos(azimuth), rho * np.sin(azimuth), x3])
    return DirectionSet(3, vectors, 4.0 * np.pi / L)


@dataclass(frozen=True)
class FrequencyGrid:
    """Frequencies ``m * delta`` for ``m = 1..count`` (no zero frequency).

    The same type carries circular frequencies (elastic data) and
    wavenumbers (electromagnetic data).
    """

    delta: float
    count: int

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise InvalidParameter(f"frequency step must be positive, got {self.delta!r}")
        _check_count(self.count, "count")

    @property
    def values(self) -> np.ndarray:
        return self.delta * np.arange(1, self.count + 1, dtype=float)

    @property
    def max(self) -> float:
        return self.count * self.delta


def frequency_grid(delta: float, count: int) -> FrequencyGrid:
    return FrequencyGrid(float(delta), _check_count(count, "count"))


@dataclass(frozen=True, eq=False)
class SamplingGrid:
    """Axis-aligned lattice ``lo + i*h`` inside a box, optionally a plane.

    Only bounds and spacing are stored. ``nodes()`` materialises coordinates
    in row-major order with the last free axis varying fastest.
    """

    lo: tuple
    hi: tuple
    h: float
    slice_axis: int | None = None
    slice_offset: float | None = None
    _axes: tuple = field(init=False, repr=False)

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi) or len(lo) not in (2, 3):
            raise InvalidParameter("bounds must be 2D or 3D and of equal length")
        if not (self.h > 0 and math.isfinite(self.h)):
            raise InvalidParameter(f"spacing must be positive, got {self.h!r}")
        if any(not (b > a) for a, b in zip(lo, hi)):
            raise InvalidParameter(f"degenerate bounds {lo} .. {hi}")
        if self.slice_axis is not None:
            if len(lo) != 3 or self.slice_axis not in (0, 1, 2):
                raise InvalidParameter("plane slices need a 3D box and axis in 0..2")
            off = float(self.slice_offset)
            if not (lo[self.slice_axis] <= off <= hi[self.slice_axis]):
                raise InvalidParameter(f"slice offset {off} outside bounds")
            object.__setattr__(self, "slice_offset", off)
        axes = []
        for i in self.free_axes:
            n = int(math.floor((hi[i] - lo[i]) / self.h + _COUNT_EPS)) + 1
            ax = np.minimum(lo[i] + self.h * np.arange(n), hi[i])
            axes.append(_frozen(ax))
        object.__setattr__(self, "_axes", tuple(axes))

    @property
    def dimension(self) -> int:
        return len(self.lo)

    @property
    def is_slice(self) -> bool:
        return self.slice_axis is not None

    @property
    def free_axes(self) -> tuple:
        return tuple(i for i in range(self.dimension) if i != self.slice_axis)

    @property
    def axes(self) -> tuple:
        """1D coordinate arrays of the free axes."""
        return self._axes

    @property
    def shape(self) -> tuple:
        return tuple(len(a) for a in self._axes)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h ** len(self._axes)

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``(n_nodes, dimension)``."""
        mesh = np.meshgrid(*self._axes, indexing="ij")
        out = np.empty((self.n_nodes, self.dimension))
        for j, i in enumerate(self.free_axes):
            out[:, i] = mesh[j].ravel()
        if self.is_slice:
            out[:, self.slice_axis] = self.slice_offset
        return out

    def describe(self) -> dict:
        d = {"lo": self.lo, "hi": self.hi, "h": self.h}
        if self.is_slice:
            d["slice"] = (self.slice_axis, self.slice_offset)
        return d

    def __eq__(self, other) -> bool:
        if not isinstance(other, SamplingGrid):
            return NotImplemented
        return self.describe() == other.describe()


def _bounds(bounds: Sequence) -> tuple:
    lo, hi = bounds
    return tuple(np.atleast_1d(np.asarray(lo, float))), tuple(np.atleast_1d(np.asarray(hi, float)))


def cartesian_grid(bounds, h: float) -> SamplingGrid:
    """Full lattice over ``bounds = (lo, hi)``.

    >>> cartesian_grid(([-3, -3], [3, 3]), 0.01).shape
    (601, 601)
    """
    lo, hi = _bounds(bounds)
    return SamplingGrid(lo, hi, float(h))


def plane_slice(bounds3, axis: int, offset: float, h: float) -> SamplingGrid:
    """Plane ``z[axis] = offset`` of a 3D box; ``axis`` is 0-based."""
    lo, hi = _bounds(bounds3)
    if len(lo) != 3:
        raise InvalidParameter("plane_slice needs 3D bounds")
    return SamplingGrid(lo, hi, float(h), int(axis), float(offset))
