"""Multiplicative complex Gaussian noise, reproducible per record.

Each block ``t`` of record ``(l, m)`` is multiplied by
``1 + delta (N1 + i N2)`` with independent standard normals. The normals
are a pure function of ``(seed, l, m, t)``: the key is folded through the
SplitMix64 finaliser, two 53-bit uniforms are drawn from the resulting
stream and mapped by Box-Muller. Nothing depends on evaluation order, so
shared frequencies get identical noise when the grid is extended.
"""
from __future__ import annotations

import numpy as np

from ..errors import InvalidParameter
from .farfield import FarFieldDataset

__all__ = ["splitmix64", "normal_pairs", "noise_multipliers", "apply_noise"]

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def splitmix64(x: np.ndarray) -> np.ndarray:
    """SplitMix64 finaliser applied elementwise to ``x + golden``."""
    with np.errstate(over="ignore"):
        z = np.asarray(x, dtype=np.uint64) + _GOLDEN
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


def _unit(bits: np.ndarray) -> np.ndarray:
    # open interval (0, 1) so the logarithm below stays finite
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def normal_pairs(seed: int, l, m, t) -> tuple[np.ndarray, np.ndarray]:
    """Two independent standard normal arrays keyed by ``(seed, l, m, t)``."""
    if not 0 <= int(seed) <= _MASK64:
        raise InvalidParameter("seed must be an unsigned 64-bit integer")
    l, m, t = np.broadcast_arrays(*(np.asarray(v, dtype=np.uint64) for v in (l, m, t)))
    key = splitmix64(np.full(l.shape, int(seed), dtype=np.uint64))
    for part in (l, m, t):
        key = splitmix64(key ^ part)
    u1 = _unit(splitmix64(key ^ np.uint64(1)))
    u2 = _unit(splitmix64(key ^ np.uint64(2)))
    r = np.sqrt(-2.0 * np.log(u1))
    return r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)


def noise_multipliers(delta: float, seed: int, L: int, M: int, T: int) -> np.ndarray:
    """Complex factors of shape ``(L, M, T)``."""
    l, m, t = np.meshgrid(np.arange(L), np.arange(M), np.arange(T), indexing="ij")
    n1, n2 = normal_pairs(seed, l, m, t)
    return 1.0 + delta * (n1 + 1j * n2)


def apply_noise(dataset: FarFieldDataset, delta: float, seed: int) -> FarFieldDataset:
    """Return a perturbed copy; ``delta = 0`` only updates the metadata."""
    if not delta >= 0:
        raise InvalidParameter(f"noise level must be nonnegative, got {delta!r}")
    names = dataset.block_names
    L, M = len(dataset.directions), dataset.frequencies.count
    if delta == 0:
        blocks = dataset.blocks
    else:
        factors = noise_multipliers(delta, seed, L, M, len(names))
        blocks = {n: dataset.blocks[n] * factors[:, :, t, None] for t, n in enumerate(names)}
    return dataset.replace(blocks=blocks, noise_level=float(delta), seed=int(seed))
