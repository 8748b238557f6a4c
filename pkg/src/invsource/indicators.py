"""Discrete sampling indicators evaluated on lattices and plane slices.

Every indicator is a finite plane-wave sum

    I(z) = sum_q c_q exp(i xi_q . z),     xi_q = k_m xhat_l,

with coefficients built from far-field data. On an axis-aligned plane the
phase factorises, ``exp(i xi.z) = exp(i xi_a z_a) exp(i xi_b z_b)`` (times a
constant for the sliced axis), so the sum over ``q`` becomes one complex
matrix product per component. Chunks over ``q`` are fixed, which keeps
results bit-identical between runs.

Prefactors (``L`` directions, step ``d`` in frequency or wavenumber):

========  =====================================================  ===========
kind      coefficient of ``exp(i xi.z)``                          target
========  =====================================================  ===========
f2d       d/(2 pi L) w [u_p/(lam+2mu) at k_p ; u_s/mu at k_s]       S
p2d       i d/(2 pi L) w^2 (u_p.xhat)/(lam+2mu)^(3/2)              div S
s2d       i d/(2 pi L) w^2 (u_s.xhat_perp)/mu^(3/2)                div_perp S
f3d       d/(2 pi^2 L) w^2 [u_p/(lam+2mu)^(3/2) ; u_s/mu^(3/2)]    S
p3d       i d/(2 pi^2 L) w^3 (u_p.xhat)/(lam+2mu)^2                div S
s3d       i d/(2 pi^2 L) w^3 (u_s x xhat)/mu^2                     -curl S
E         -2i sqrt(eps) d/(pi L) k E                              J (div J=0)
H         2 sqrt(mu) d/(pi L) k^2 H                               curl J
rho       d/(2 pi^2 L) k (-i F[q](k xhat) xhat - 4 pi i sqrt(eps) E)  J
========  =====================================================  ===========

The 3D elastic and charge-aware rows come from the continuous integrals
with ``ds ~ 4 pi / L`` and a right-rectangle rule in frequency; the shear
parts are mapped onto the common frequency grid by ``w -> (k_p/k_s) w``.
For ``rho``, ``q = i w rho = div J`` is frequency independent, so
``w F[rho] = -i F[q]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, InvalidParameter
from .forward.farfield import ElasticParams, EMParams, FarFieldDataset, fourier_transform
from .geometry import SamplingGrid
from .sources import SourceSpec

__all__ = [
    "IndicatorField", "Terms", "ARITY",
    "indicator_terms", "evaluate", "evaluate_batch",
    "indicator_f_2d", "indicator_p_2d", "indicator_s_2d",
    "indicator_f_3d", "indicator_p_3d", "indicator_s_3d",
    "indicator_E", "indicator_H", "indicator_rho", "indicator",
]

ARITY = {"f2d": 2, "p2d": 1, "s2d": 1, "f3d": 3, "p3d": 1, "s3d": 3, "E": 3, "H": 3, "rho": 3}
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class IndicatorField:
    """Complex indicator values, shape ``grid.shape + (arity,)``."""

    grid: SamplingGrid
    values: np.ndarray
    kind: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        want = self.grid.shape + (ARITY[self.kind],)
        if self.values.shape != want:
            raise InvalidParameter(f"values shape {self.values.shape}, expected {want}")

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    @property
    def imag(self) -> np.ndarray:
        return self.values.imag

    @property
    def arity(self) -> int:
        return ARITY[self.kind]

    def flat(self) -> np.ndarray:
        """Values in node order, shape ``(n_nodes, arity)``."""
        return self.values.reshape(-1, self.arity)


@dataclass(frozen=True)
class Terms:
    kind: str
    xi: np.ndarray
    coeff: np.ndarray


# --------------------------------------------------------------------------
# evaluation engine


def _plane(xi, coeff, grid: SamplingGrid, out):
    fa, fb = grid.free_axes[:2]
    ga, gb = grid.axes[:2]
    if grid.is_slice:
        coeff = coeff * np.exp(1j * xi[:, grid.slice_axis] * grid.slice_offset)[:, None]
    for s in range(0, xi.shape[0], _CHUNK):
        A = np.exp(1j * np.multiply.outer(xi[s:s + _CHUNK, fa], ga))
        B = np.exp(1j * np.multiply.outer(xi[s:s + _CHUNK, fb], gb))
        for c in range(coeff.shape[1]):
            out[:, :, c] += (A * coeff[s:s + _CHUNK, c, None]).T @ B


def evaluate_batch(xi: np.ndarray, coeff: np.ndarray, grid: SamplingGrid,
                   allow_volume: bool = False) -> np.ndarray:
    """``sum_q coeff[q, b] exp(i xi_q . z)`` for every node and column ``b``.

    Returns ``grid.shape + (B,)``. The exponential tables are shared by all
    columns, which is how seed replicates are evaluated together.
    """
    if xi.shape[1] != grid.dimension:
        raise DimensionMismatch(f"data is {xi.shape[1]}D, grid is {grid.dimension}D")
    coeff = np.asarray(coeff, dtype=complex)
    out = np.zeros(grid.shape + (coeff.shape[1],), dtype=complex)
    if grid.dimension == 2 or grid.is_slice:
        _plane(xi, coeff, grid, out)
        return out
    if not allow_volume:
        raise InvalidParameter(
            "full 3D volume evaluation costs nodes x L x Lambda; pass allow_volume=True "
            "or use a plane slice"
        )
    for k, z3 in enumerate(grid.axes[2]):
        plane = SamplingGrid(grid.lo, grid.hi, grid.h, 2, float(z3))
        _plane(xi, coeff, plane, out[:, :, k])
    return out


def evaluate(terms: Terms, grid: SamplingGrid, provenance: Optional[dict] = None,
             allow_volume: bool = False) -> IndicatorField:
    values = evaluate_batch(terms.xi, terms.coeff, grid, allow_volume)
    return IndicatorField(grid, values, terms.kind, dict(provenance or {}))


# --------------------------------------------------------------------------
# coefficient builders


def _require(dataset: FarFieldDataset, kind: str):
    if kind in ("E", "H", "rho"):
        if dataset.family != "em":
            raise DimensionMismatch(f"indicator {kind} needs electromagnetic data, got {dataset.kind}")
    else:
        want = "elastic2d" if kind.endswith("2d") else "elastic3d"
        if dataset.kind != want:
            raise DimensionMismatch(f"indicator {kind} needs {want} data, got {dataset.kind}")


def _axes(dataset):
    X = dataset.directions.vectors[:, None, :]
    freq = dataset.frequencies.values[None, :, None]
    return X, freq, len(dataset.directions), dataset.frequencies.delta


def _flat(a):
    return a.reshape(-1, a.shape[-1])


def indicator_terms(dataset: FarFieldDataset, kind: str, rho: Optional[SourceSpec] = None) -> Terms:
    """Plane-wave directions and coefficients of indicator ``kind``."""
    if kind not in ARITY:
        raise InvalidParameter(f"unknown indicator {kind!r}")
    _require(dataset, kind)
    X, w, L, d = _axes(dataset)
    p = dataset.physics
    if dataset.family == "elastic":
        cp, cs = p.lam + 2.0 * p.mu, p.mu
        xi_p, xi_s = _flat(X * p.k_p(w)), _flat(X * p.k_s(w))
        u_p, u_s = dataset.blocks["p"], dataset.blocks["s"]
        if kind == "f2d":
            pre = d / (2.0 * np.pi * L)
            coeff = np.concatenate([_flat(pre * w * u_p / cp), _flat(pre * w * u_s / cs)])
            return Terms(kind, np.concatenate([xi_p, xi_s]), coeff)
        if kind == "f3d":
            pre = d / (2.0 * np.pi ** 2 * L)
            coeff = np.concatenate([_flat(pre * w ** 2 * u_p / cp ** 1.5),
                                    _flat(pre * w ** 2 * u_s / cs ** 1.5)])
            return Terms(kind, np.concatenate([xi_p, xi_s]), coeff)
        if kind == "p2d":
            pre = 1j * d / (2.0 * np.pi * L)
            c = pre * w ** 2 * np.sum(u_p * X, axis=-1, keepdims=True) / cp ** 1.5
            return Terms(kind, xi_p, _flat(c))
        if kind == "s2d":
            perp = np.stack([-X[..., 1], X[..., 0]], axis=-1)
            pre = 1j * d / (2.0 * np.pi * L)
            c = pre * w ** 2 * np.sum(u_s * perp, axis=-1, keepdims=True) / cs ** 1.5
            return Terms(kind, xi_s, _flat(c))
        if kind == "p3d":
            pre = 1j * d / (2.0 * np.pi ** 2 * L)
            c = pre * w ** 3 * np.sum(u_p * X, axis=-1, keepdims=True) / cp ** 2
            return Terms(kind, xi_p, _flat(c))
        # s3d
        pre = 1j * d / (2.0 * np.pi ** 2 * L)
        c = pre * w ** 3 * np.cross(u_s, np.broadcast_to(X, u_s.shape)) / cs ** 2
        return Terms(kind, xi_s, _flat(c))

    k = w
    xi = _flat(X * k)
    if kind == "E":
        pre = -2j * math.sqrt(p.epsilon) * d / (np.pi * L)
        return Terms(kind, xi, _flat(pre * k * dataset.blocks["E"]))
    if kind == "H":
        pre = 2.0 * math.sqrt(p.mu) * d / (np.pi * L)
        return Terms(kind, xi, _flat(pre * k ** 2 * dataset.blocks["H"]))
    # rho
    if rho is None:
        raise InvalidParameter("indicator_rho needs the charge term div J")
    if rho.dimension != 3 or rho.n_components != 1:
        raise InvalidParameter("charge term must be a scalar 3D field")
    Fq = fourier_transform(rho, xi, refine=1.0).reshape(X.shape[0], -1, 1)
    data = -1j * Fq * X - 4j * np.pi * math.sqrt(p.epsilon) * dataset.blocks["E"]
    pre = d / (2.0 * np.pi ** 2 * L)
    return Terms(kind, xi, _flat(pre * k * data))


def _provenance(dataset: FarFieldDataset) -> dict:
    prov = {"source": dataset.source_label, "L": len(dataset.directions),
            "Lambda": dataset.frequencies.count, "delta_freq": dataset.frequencies.delta,
            "noise": dataset.noise_level, "seed": dataset.seed}
    prov.update(dataset.physics.describe())
    return prov


def indicator(dataset: FarFieldDataset, kind: str, grid: SamplingGrid,
              rho: Optional[SourceSpec] = None, allow_volume: bool = False) -> IndicatorField:
    """Evaluate indicator ``kind`` (see module table) on ``grid``."""
    if kind in ("f3d", "p3d", "s3d", "E", "H", "rho") and grid.dimension != 3:
        raise DimensionMismatch(f"indicator {kind} needs a 3D grid or slice")
    terms = indicator_terms(dataset, kind, rho)
    return evaluate(terms, grid, _provenance(dataset), allow_volume)


def indicator_f_2d(dataset, grid):
    """Approximates the source from full elastic data."""
    return indicator(dataset, "f2d", grid)


def indicator_p_2d(dataset, grid):
    """Approximates ``div S`` from compressional data only."""
    return indicator(dataset, "p2d", grid)


def indicator_s_2d(dataset, grid):
    """Approximates ``div_perp S`` from shear data only."""
    return indicator(dataset, "s2d", grid)


def indicator_f_3d(dataset, grid, allow_volume=False):
    return indicator(dataset, "f3d", grid, allow_volume=allow_volume)


def indicator_p_3d(dataset, grid, allow_volume=False):
    return indicator(dataset, "p3d", grid, allow_volume=allow_volume)


def indicator_s_3d(dataset, grid, allow_volume=False):
    """Approximates ``-curl S``."""
    return indicator(dataset, "s3d", grid, allow_volume=allow_volume)


def indicator_E(dataset, grid, allow_volume=False):
    """Approximates a divergence-free current from electric data."""
    return indicator(dataset, "E", grid, allow_volume=allow_volume)


def indicator_H(dataset, grid, allow_volume=False):
    """Approximates ``curl J`` from magnetic data."""
    return indicator(dataset, "H", grid, allow_volume=allow_volume)


def indicator_rho(dataset, rho, grid, allow_volume=False):
    """Approximates ``J`` from electric data plus the known charge term.

    ``rho`` holds ``i w rho = div J`` (a scalar source), which does not
    depend on the frequency.
    """
    return indicator(dataset, "rho", grid, rho=rho, allow_volume=allow_volume)
