"""Compactly supported vector sources with closed-form derivatives.

A :class:`SourceSpec` bundles a closed-form field, the support shape it is
cut off to, and (when known) the analytic divergence, rotated divergence
(2D) or curl (3D). Fields are evaluated on point arrays of shape
``(N, dimension)`` and return ``(N, n_components)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import InvalidParameter

__all__ = [
    "Disk", "Annulus", "Box", "Ball", "Union",
    "SourceSpec", "Derivative",
    "eval_source", "eval_derivative",
    "example_one", "example_two", "example_three", "example_four",
    "zero_source", "constant_source", "bump_source", "gradient_bump",
    "perp_gradient_bump", "curl_bump", "REGISTRY", "make_source",
]

FD_STEP = 1e-5


def _points(z, dimension: int) -> tuple[np.ndarray, bool]:
    z = np.asarray(z, dtype=float)
    single = z.ndim == 1
    z = np.atleast_2d(z)
    if z.shape[-1] != dimension:
        raise InvalidParameter(
            f"points have dimension {z.shape[-1]}, expected {dimension}"
        )
    return z, single


# --------------------------------------------------------------------------
# support shapes


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float
    dimension = 2

    def contains(self, z):
        return np.linalg.norm(z - np.asarray(self.center), axis=-1) <= self.radius

    def bounding_box(self):
        c = np.asarray(self.center, float)
        return c - self.radius, c + self.radius

    def boundary_distance(self, z):
        return np.abs(np.linalg.norm(z - np.asarray(self.center), axis=-1) - self.radius)


@dataclass(frozen=True)
class Ball(Disk):
    dimension = 3


@dataclass(frozen=True)
class Annulus:
    center: tuple
    r_in: float
    r_out: float
    dimension = 2

    def __post_init__(self):
        if not 0 <= self.r_in < self.r_out:
            raise InvalidParameter("annulus needs 0 <= r_in < r_out")

    def contains(self, z):
        r = np.linalg.norm(z - np.asarray(self.center), axis=-1)
        return (r >= self.r_in) & (r <= self.r_out)

    def bounding_box(self):
        c = np.asarray(self.center, float)
        return c - self.r_out, c + self.r_out

    def boundary_distance(self, z):
        r = np.linalg.norm(z - np.asarray(self.center), axis=-1)
        return np.minimum(np.abs(r - self.r_in), np.abs(r - self.r_out))


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if len(self.lo) != len(self.hi) or any(b <= a for a, b in zip(self.lo, self.hi)):
            raise InvalidParameter(f"degenerate box {self.lo} .. {self.hi}")

    @property
    def dimension(self):
        return len(self.lo)

    def contains(self, z):
        return np.all((z >= np.asarray(self.lo)) & (z <= np.asarray(self.hi)), axis=-1)

    def bounding_box(self):
        return np.asarray(self.lo, float), np.asarray(self.hi, float)

    def boundary_distance(self, z):
        lo, hi = self.bounding_box()
        inside = np.minimum(z - lo, hi - z)
        outside = np.maximum(np.maximum(lo - z, z - hi), 0.0)
        d_in = inside.min(axis=-1)
        return np.where(d_in >= 0, d_in, np.linalg.norm(outside, axis=-1))


@dataclass(frozen=True)
class Union:
    """Union of parts that overlap at most in a set of measure zero."""

    parts: tuple

    @property
    def dimension(self):
        return self.parts[0].dimension

    def contains(self, z):
        return np.any([p.contains(z) for p in self.parts], axis=0)

    def bounding_box(self):
        boxes = [p.bounding_box() for p in self.parts]
        return np.min([b[0] for b in boxes], axis=0), np.max([b[1] for b in boxes], axis=0)

    def boundary_distance(self, z):
        # faces shared between parts count as boundary; conservative for bands
        return np.min([p.boundary_distance(z) for p in self.parts], axis=0)


# --------------------------------------------------------------------------
# sources

Field = Callable[[np.ndarray], np.ndarray]


class Derivative(NamedTuple):
    value: np.ndarray
    approximate: bool


@dataclass(frozen=True, eq=False)
class SourceSpec:
    """Closed-form vector source restricted to ``support``.

    ``field`` is the formula valid on the support; evaluation zeroes it
    outside. ``div``, ``div_perp`` and ``curl`` are the analytic
    derivatives of ``field`` (same cut-off applies). ``charge`` is the
    scalar ``div J`` used by the charge-aware EM indicator.
    """

    name: str
    dimension: int
    n_components: int
    support: object
    field: Field
    div: Optional[Field] = None
    div_perp: Optional[Field] = None
    curl: Optional[Field] = None
    charge: Optional["SourceSpec"] = None
    params: tuple = ()

    def __call__(self, z):
        return eval_source(self, z)

    def bounding_box(self):
        return self.support.bounding_box()


def _cutoff(spec: SourceSpec, fn: Field, z: np.ndarray) -> np.ndarray:
    inside = spec.support.contains(z)
    out = None
    if inside.any():
        vals = np.asarray(fn(z[inside]))
        vals = vals.reshape(vals.shape[0], -1)
        out = np.zeros((z.shape[0], vals.shape[1]), dtype=vals.dtype)
        out[inside] = vals
    return out


def eval_source(spec: SourceSpec, z) -> np.ndarray:
    """Evaluate ``spec`` at one point ``(d,)`` or many ``(N, d)``."""
    pts, single = _points(z, spec.dimension)
    out = _cutoff(spec, spec.field, pts)
    if out is None:
        out = np.zeros((pts.shape[0], spec.n_components))
    return out[0] if single else out


_KINDS = {"div": 2, "div_perp": 2, "curl": 3}


def _fd_derivative(spec: SourceSpec, z: np.ndarray, kind: str) -> np.ndarray:
    d = spec.dimension
    jac = np.empty((z.shape[0], spec.n_components, d), dtype=complex)
    for j in range(d):
        step = np.zeros(d)
        step[j] = FD_STEP
        jac[:, :, j] = (eval_source(spec, z + step) - eval_source(spec, z - step)) / (2 * FD_STEP)
    if not np.iscomplexobj(eval_source(spec, z[:1])):
        jac = jac.real
    if kind == "div":
        return np.trace(jac, axis1=1, axis2=2)
    if kind == "div_perp":
        return -jac[:, 0, 1] + jac[:, 1, 0]
    return np.stack(
        [jac[:, 2, 1] - jac[:, 1, 2], jac[:, 0, 2] - jac[:, 2, 0], jac[:, 1, 0] - jac[:, 0, 1]],
        axis=-1,
    )


def eval_derivative(spec: SourceSpec, z, kind: str) -> Derivative:
    """Divergence, rotated divergence (2D) or curl (3D) of a source.

    Uses the stored closed form when there is one; otherwise a central
    difference with step ``1e-5`` and ``approximate=True``.
    """
    if kind not in _KINDS:
        raise InvalidParameter(f"unknown derivative kind {kind!r}")
    if kind in ("div_perp", "curl") and spec.dimension != _KINDS[kind]:
        raise InvalidParameter(f"{kind} is not defined for {spec.dimension}D sources")
    if spec.n_components != spec.dimension:
        raise InvalidParameter("derivatives need a vector source")
    pts, single = _points(z, spec.dimension)
    fn = getattr(spec, kind)
    if fn is not None:
        out = _cutoff(spec, fn, pts)
        width = 3 if kind == "curl" else 1
        if out is None:
            out = np.zeros((pts.shape[0], width))
        value = out if kind == "curl" else out[:, 0]
        approximate = False
    else:
        value = _fd_derivative(spec, pts, kind)
        approximate = True
    return Derivative(value[0] if single else value, approximate)


# --------------------------------------------------------------------------
# the four worked examples


def example_one(support=None) -> SourceSpec:
    """``S = (|z| + 5, exp(0.1|z|^2) + 4)`` on ``support`` (default: disk r=1.5)."""
    support = Disk((0.0, 0.0), 1.5) if support is None else support

    def field(z):
        r = np.linalg.norm(z, axis=-1)
        return np.column_stack([r + 5.0, np.exp(0.1 * r * r) + 4.0])

    def _unit(z):
        r = np.linalg.norm(z, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        # |z| has no gradient at the origin; the symmetric difference gives 0
        return np.where(r[:, None] > 0, z / safe[:, None], 0.0)

    def div(z):
        u = _unit(z)
        g = 0.2 * np.exp(0.1 * np.sum(z * z, axis=-1))
        return u[:, 0] + g * z[:, 1]

    def div_perp(z):
        u = _unit(z)
        g = 0.2 * np.exp(0.1 * np.sum(z * z, axis=-1))
        return -u[:, 1] + g * z[:, 0]

    return SourceSpec("example_one", 2, 2, support, field, div, div_perp,
                      params=(("support", support),))


_EX2_CENTERS = ((1.0, 1.0), (-1.0, -1.0))


def _ex2_parts(z):
    """Per-annulus radial profile and its gradient factor."""
    out = []
    for i, c in enumerate(_EX2_CENTERS):
        x = z - np.asarray(c)
        r2 = np.sum(x * x, axis=-1)
        inside = (r2 >= 0.16) & (r2 <= 1.0)
        q = 10.0 * r2 * r2 - 11.6 * r2 + 1.6
        # grad q(r)^2 = 2 q (40 r^2 - 23.2) x
        gfac = 2.0 * q * (40.0 * r2 - 23.2)
        out.append((x, np.where(inside, q * q, 0.0), np.where(inside, gfac, 0.0)))
    return out


def example_two() -> SourceSpec:
    """Two annular bumps; component i lives on the annulus around ``-(-1)^i (1, 1)``."""
    support = Union(tuple(Annulus(c, 0.4, 1.0) for c in _EX2_CENTERS))

    def field(z):
        (_, s1, _), (_, s2, _) = _ex2_parts(z)
        return np.column_stack([s1, s2])

    def div(z):
        (x1, _, g1), (x2, _, g2) = _ex2_parts(z)
        return g1 * x1[:, 0] + g2 * x2[:, 1]

    def div_perp(z):
        (x1, _, g1), (x2, _, g2) = _ex2_parts(z)
        return -g1 * x1[:, 1] + g2 * x2[:, 0]

    return SourceSpec("example_two", 2, 2, support, field, div, div_perp)


def example_three() -> SourceSpec:
    """``J = (4, 4, 4) + curl(|z|^2, exp|z|^2, 1)`` on two stacked boxes."""
    support = Union((
        Box((-0.5, -0.5, -0.5), (0.5, 0.5, 0.0)),
        Box((0.0, 0.0, 0.0), (0.5, 0.5, 0.5)),
    ))

    def field(z):
        e = np.exp(np.sum(z * z, axis=-1))
        x, y, w = z.T
        return np.column_stack([4.0 - 2.0 * w * e, 4.0 + 2.0 * w, 4.0 + 2.0 * x * e - 2.0 * y])

    def div(z):
        return np.zeros(z.shape[0])

    def curl(z):
        e = np.exp(np.sum(z * z, axis=-1))
        x, y, w = z.T
        return np.column_stack([4.0 * x * y * e - 4.0, -4.0 * e * (1.0 + x * x + w * w), 4.0 * y * w * e])

    return SourceSpec("example_three", 3, 3, support, field, div, None, curl)


def example_four() -> SourceSpec:
    """``J = (|z|^2 - 1/4)^2 (1, 1, 1)`` on the ball of radius 1/2."""
    support = Ball((0.0, 0.0, 0.0), 0.5)

    def field(z):
        s = np.sum(z * z, axis=-1) - 0.25
        return np.repeat((s * s)[:, None], 3, axis=1)

    def div(z):
        return 4.0 * (np.sum(z * z, axis=-1) - 0.25) * z.sum(axis=-1)

    def curl(z):
        s = 4.0 * (np.sum(z * z, axis=-1) - 0.25)
        x, y, w = z.T
        return np.column_stack([s * (y - w), s * (w - x), s * (x - y)])

    charge = SourceSpec("example_four.charge", 3, 1, support, div)
    return SourceSpec("example_four", 3, 3, support, field, div, None, curl, charge)


# --------------------------------------------------------------------------
# test primitives


def zero_source(dimension: int = 2) -> SourceSpec:
    shape = Disk((0.0, 0.0), 1.0) if dimension == 2 else Ball((0.0, 0.0, 0.0), 1.0)

    def zeros(z):
        return np.zeros((z.shape[0], dimension))

    def zero(z):
        return np.zeros(z.shape[0])

    curl = (lambda z: np.zeros((z.shape[0], 3))) if dimension == 3 else None
    return SourceSpec("zero", dimension, dimension, shape, zeros, zero,
                      zero if dimension == 2 else None, curl)


def constant_source(support, value) -> SourceSpec:
    """A constant vector on ``support``; all interior derivatives vanish."""
    value = np.asarray(value, dtype=float)
    d = support.dimension
    if value.shape != (d,):
        raise InvalidParameter(f"constant value must have {d} components")

    def field(z):
        return np.broadcast_to(value, (z.shape[0], d)).copy()

    def zero(z):
        return np.zeros(z.shape[0])

    return SourceSpec("constant", d, d, support, field, zero,
                      zero if d == 2 else None,
                      (lambda z: np.zeros((z.shape[0], 3))) if d == 3 else None,
                      params=(("value", tuple(value)),))


class _Bump:
    """``b(z) = (1 - |z - c|^2 / R^2)^p`` with gradient and Hessian."""

    def __init__(self, center, radius, power):
        if power < 2:
            raise InvalidParameter("bump power must be >= 2")
        self.c = np.asarray(center, float)
        self.R2 = float(radius) ** 2
        self.p = int(power)

    def parts(self, z):
        x = z - self.c
        t = np.clip(1.0 - np.sum(x * x, axis=-1) / self.R2, 0.0, None)
        return x, t

    def value(self, z):
        _, t = self.parts(z)
        return t ** self.p

    def grad(self, z):
        x, t = self.parts(z)
        return (-2.0 * self.p * t ** (self.p - 1) / self.R2)[:, None] * x

    def hessian(self, z):
        x, t = self.parts(z)
        d = x.shape[1]
        a = -2.0 * self.p * t ** (self.p - 1) / self.R2
        b = 4.0 * self.p * (self.p - 1) * t ** (self.p - 2) / self.R2 ** 2
        return a[:, None, None] * np.eye(d) + b[:, None, None] * x[:, :, None] * x[:, None, :]

    def laplacian(self, z):
        return np.trace(self.hessian(z), axis1=1, axis2=2)


def _round_shape(center, radius):
    return Disk(tuple(center), radius) if len(center) == 2 else Ball(tuple(center), radius)


def bump_source(center=(0.0, 0.0), radius=1.0, direction=None, power=4) -> SourceSpec:
    """``S = b(z) a`` for a fixed vector ``a`` (default all ones)."""
    d = len(center)
    bump = _Bump(center, radius, power)
    a = np.ones(d) if direction is None else np.asarray(direction, float)

    def field(z):
        return bump.value(z)[:, None] * a

    def div(z):
        return bump.grad(z) @ a

    def div_perp(z):
        g = bump.grad(z)
        return -a[0] * g[:, 1] + a[1] * g[:, 0]

    def curl(z):
        return np.cross(bump.grad(z), a)

    return SourceSpec("bump", d, d, _round_shape(center, radius), field, div,
                      div_perp if d == 2 else None, curl if d == 3 else None,
                      params=(("center", tuple(center)), ("radius", radius), ("power", power)))


def gradient_bump(center=(0.0, 0.0), radius=1.0, power=4) -> SourceSpec:
    """``S = grad b``: curl-free, ``div S = laplacian b``."""
    d = len(center)
    bump = _Bump(center, radius, power)
    curl = (lambda z: np.zeros((z.shape[0], 3))) if d == 3 else None
    div_perp = (lambda z: np.zeros(z.shape[0])) if d == 2 else None
    support = _round_shape(center, radius)
    charge = SourceSpec("gradient_bump.charge", 3, 1, support, bump.laplacian) if d == 3 else None
    return SourceSpec("gradient_bump", d, d, support, bump.grad, bump.laplacian, div_perp, curl, charge,
                      params=(("center", tuple(center)), ("radius", radius), ("power", power)))


def perp_gradient_bump(center=(0.0, 0.0), radius=1.0, power=4) -> SourceSpec:
    """``S = (-d2 b, d1 b)``: divergence-free, ``div_perp S = laplacian b``."""
    bump = _Bump(center, radius, power)

    def field(z):
        g = bump.grad(z)
        return np.column_stack([-g[:, 1], g[:, 0]])

    return SourceSpec("perp_gradient_bump", 2, 2, Disk(tuple(center), radius), field,
                      lambda z: np.zeros(z.shape[0]), bump.laplacian,
                      params=(("center", tuple(center)), ("radius", radius), ("power", power)))


def curl_bump(center=(0.0, 0.0, 0.0), radius=1.0, direction=(0.0, 0.0, 1.0), power=4) -> SourceSpec:
    """``S = curl(b a) = grad b x a``: divergence-free, curl ``= H a - a lap b``."""
    bump = _Bump(center, radius, power)
    a = np.asarray(direction, float)

    def field(z):
        return np.cross(bump.grad(z), a)

    def curl(z):
        return bump.hessian(z) @ a - bump.laplacian(z)[:, None] * a

    return SourceSpec("curl_bump", 3, 3, Ball(tuple(center), radius), field,
                      lambda z: np.zeros(z.shape[0]), None, curl,
                      params=(("center", tuple(center)), ("radius", radius), ("power", power)))


REGISTRY = {
    "example_one": example_one,
    "example_two": example_two,
    "example_three": example_three,
    "example_four": example_four,
    "zero": zero_source,
    "bump": bump_source,
    "gradient_bump": gradient_bump,
    "perp_gradient_bump": perp_gradient_bump,
    "curl_bump": curl_bump,
}


def make_source(name: str, **params) -> SourceSpec:
    """Build a registered source by name.

    ``example_one`` accepts ``radius`` for its default disk support.
    """
    if name not in REGISTRY:
        raise InvalidParameter(f"unknown source {name!r}; known: {sorted(REGISTRY)}")
    if name == "example_one" and "radius" in params:
        return example_one(Disk((0.0, 0.0), float(params.pop("radius"))))
    return REGISTRY[name](**params)
