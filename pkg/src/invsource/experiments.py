"""Seeded parameter sweeps: error tables for elastic runs, slice errors for EM runs."""
from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidParameter
from .forward import ElasticParams, EMParams, apply_noise, synthesize_dataset
from .geometry import SamplingGrid, cartesian_grid, fibonacci_sphere, frequency_grid, plane_slice, theta_circle
from .indicators import evaluate_batch, indicator, indicator_terms
from .metrics import MetricsReport, reference_values, relative_l2_error, component_errors, trend_report
from .sources import SourceSpec, example_two

__all__ = [
    "Profile", "PROFILES", "PROFILE_ENV", "get_profile",
    "TABLE1_L", "TABLE1_OMEGA", "TABLE1", "TABLE2_DOMEGA", "TABLE2_NOISE", "TABLE2",
    "CellResult", "elastic_cell", "table_one", "table_two", "table_trends",
    "SliceResult", "em_slice_errors", "format_table",
]

PROFILE_ENV = "INVSOURCE_PROFILE"


@dataclass(frozen=True)
class Profile:
    """Replicate count, grid spacing and per-table tolerances."""

    name: str
    n_seeds: int
    h: float
    tol_table1: float
    tol_table2: float


PROFILES = {
    "full": Profile("full", 10, 0.01, 0.02, 0.015),
    "ci": Profile("ci", 3, 0.02, 0.03, 0.03),
}


def get_profile(name: Optional[str] = None) -> Profile:
    name = name or os.environ.get(PROFILE_ENV, "full")
    if name not in PROFILES:
        raise InvalidParameter(f"unknown profile {name!r}; use one of {sorted(PROFILES)}")
    return PROFILES[name]


# target error tables, rows x columns
TABLE1_L = (51, 101, 151, 201)
TABLE1_OMEGA = (30, 40, 50)
TABLE1 = np.array([
    [0.1584, 0.1193, 0.0973, 0.0947],
    [0.1494, 0.1104, 0.0899, 0.0790],
    [0.1459, 0.1043, 0.0835, 0.0759],
])
TABLE2_DOMEGA = (0.5, 0.25, 0.125)
TABLE2_NOISE = (0.05, 0.10, 0.15, 0.20)
TABLE2 = np.array([
    [0.0511, 0.0656, 0.0830, 0.1060],
    [0.0455, 0.0527, 0.0659, 0.0806],
    [0.0439, 0.0483, 0.0553, 0.0617],
])


@dataclass(frozen=True)
class CellResult:
    L: int
    omega_max: float
    delta_omega: float
    noise: float
    errors: tuple

    @property
    def mean(self) -> float:
        return float(np.mean(self.errors))

    @property
    def std(self) -> float:
        return float(np.std(self.errors, ddof=1)) if len(self.errors) > 1 else 0.0

    def report(self) -> MetricsReport:
        params = {"L": self.L, "Lambda": int(round(self.omega_max / self.delta_omega)),
                  "delta_freq": self.delta_omega, "noise": self.noise, "omega_max": self.omega_max,
                  "seed": None}
        return MetricsReport(self.mean, params=params, e_F_std=self.std, n_seeds=len(self.errors),
                             real_part_only=True)


def _count(total: float, step: float) -> int:
    n = int(round(total / step))
    if abs(n * step - total) > 1e-9 * total:
        raise InvalidParameter(f"{total} is not a multiple of {step}")
    return n


def elastic_cell(L: int, omega_max: float, delta_omega: float, noise: float, seeds: Sequence[int],
                 h: float = 0.01, source: Optional[SourceSpec] = None, params=ElasticParams(),
                 bounds=((-3.0, -3.0), (3.0, 3.0)), real_part_only: bool = True) -> CellResult:
    """e_F of the full-data elastic indicator for each seed.

    Data are synthesized once; each seed perturbs them independently and
    all replicates share one batched evaluation.
    """
    source = example_two() if source is None else source
    grid = cartesian_grid(bounds, h)
    clean = synthesize_dataset(source, params, theta_circle(L), frequency_grid(delta_omega, _count(omega_max, delta_omega)))
    xi, cols = None, []
    for s in seeds:
        t = indicator_terms(apply_noise(clean, noise, s), "f2d")
        xi = t.xi
        cols.append(t.coeff)
    values = evaluate_batch(xi, np.concatenate(cols, axis=1), grid)
    ref = reference_values("f2d", source, grid)
    den = np.linalg.norm(ref)
    errors = []
    for i in range(len(seeds)):
        v = values[..., 2 * i:2 * i + 2]
        v = v.real if real_part_only else v
        errors.append(float(np.linalg.norm(v - ref) / den))
    return CellResult(L, float(omega_max), float(delta_omega), float(noise), tuple(errors))


def table_one(profile: Profile, seed0: int = 0, L_values=TABLE1_L, omega_values=TABLE1_OMEGA,
              progress=None) -> list:
    """Cells ``[row omega][col L]`` at 30% noise and step 0.5."""
    seeds = [seed0 + i for i in range(profile.n_seeds)]
    rows = []
    for w in omega_values:
        row = []
        for L in L_values:
            cell = elastic_cell(L, w, 0.5, 0.3, seeds, profile.h)
            if progress:
                progress(cell)
            row.append(cell)
        rows.append(row)
    return rows


def table_two(profile: Profile, seed0: int = 0, domega_values=TABLE2_DOMEGA, noise_values=TABLE2_NOISE,
              progress=None) -> list:
    """Cells ``[row step][col noise]`` with 51 directions and top frequency 40."""
    seeds = [seed0 + i for i in range(profile.n_seeds)]
    rows = []
    for dw in domega_values:
        row = []
        for nz in noise_values:
            cell = elastic_cell(51, 40.0, dw, nz, seeds, profile.h)
            if progress:
                progress(cell)
            row.append(cell)
        rows.append(row)
    return rows


def table_trends(cells: list, row_axis: str, col_axis: str) -> list:
    """Trend verdicts along every column (``row_axis``) and every row (``col_axis``)."""
    out = []
    for j in range(len(cells[0])):
        if len(cells) > 1:
            out.append((f"column {j}", trend_report([r[j].report() for r in cells], row_axis)))
    for i, row in enumerate(cells):
        if len(row) > 1:
            out.append((f"row {i}", trend_report([c.report() for c in row], col_axis)))
    return out


def format_table(cells: list, row_labels, col_labels, corner: str = "") -> str:
    lines = [",".join([corner] + [str(c) for c in col_labels])]
    for label, row in zip(row_labels, cells):
        lines.append(",".join([str(label)] + [f"{c.mean:.4f}" for c in row]))
    return "\n".join(lines)


# --------------------------------------------------------------------------
# electromagnetic slices


@dataclass(frozen=True)
class SliceResult:
    axis: int
    offset: float
    error: float
    components: tuple
    imag_ratio: float


def em_slice_errors(source: SourceSpec, kind: str, L: int, k_max: float, delta_k: float = 0.5,
                    noise: float = 0.1, seed: int = 0, slices=((0, -0.25), (0, 0.25), (1, -0.25),
                                                                 (1, 0.25), (2, -0.25), (2, 0.25)),
                    h: float = 0.01, bounds=((-1.0,) * 3, (1.0,) * 3), params=EMParams(),
                    dataset=None) -> list:
    """Relative L2 error of the real part of an EM indicator on each slice.

    Errors pool all three components over the slice; per-component values
    are reported alongside.
    """
    if dataset is None:
        clean = synthesize_dataset(source, params, fibonacci_sphere(L), frequency_grid(delta_k, _count(k_max, delta_k)))
        dataset = apply_noise(clean, noise, seed)
    out = []
    for axis, offset in slices:
        grid = plane_slice(bounds, axis, offset, h)
        rho = source.charge if kind == "rho" else None
        field_ = indicator(dataset, kind, grid, rho=rho)
        err = relative_l2_error(field_, source, real_part_only=True)
        comps = component_errors(field_, source, real_part_only=True)
        ratio = float(np.linalg.norm(field_.values.imag) / np.linalg.norm(field_.values.real))
        out.append(SliceResult(axis, offset, err, comps, ratio))
    return out
