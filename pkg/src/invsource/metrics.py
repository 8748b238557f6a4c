"""Reconstruction quality: relative L2 errors, threshold masks, trends."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence, Union as TypingUnion

import numpy as np

from .errors import EmptyRegion, InvalidParameter, ZeroReference
from .geometry import SamplingGrid
from .indicators import IndicatorField
from .sources import SourceSpec, eval_derivative

__all__ = [
    "ThresholdSpec", "MetricsReport", "TrendVerdict",
    "reference_values", "relative_l2_error", "component_errors", "threshold_diff",
    "region_restricted_sup", "imaginary_ratio", "support_localization",
    "make_report", "trend_report", "TREND_AXES",
]

Reference = TypingUnion[SourceSpec, IndicatorField, np.ndarray]

# which quantity each indicator kind approximates
_TARGET = {
    "f2d": "field", "f3d": "field", "E": "field", "rho": "field",
    "p2d": "div", "p3d": "div", "s2d": "div_perp", "s3d": "-curl", "H": "curl",
}


@dataclass(frozen=True)
class ThresholdSpec:
    epsilon: float

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise InvalidParameter(f"threshold must be positive, got {self.epsilon!r}")


@dataclass(frozen=True)
class MetricsReport:
    """One run's scores plus the parameters needed to place it in a sweep.

    ``params`` holds ``L``, ``Lambda``, ``delta_freq``, ``noise`` and
    ``seed``; ``e_F_std`` is the seed-replicate spread when ``e_F`` is a
    mean (0 for a single realization).
    """

    e_F: float
    e_F_components: tuple = ()
    sup_error_interior: float = float("nan")
    threshold_mask_fraction: float = float("nan")
    region: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    real_part_only: bool = False
    e_F_std: float = 0.0
    n_seeds: int = 1

    def as_row(self) -> dict:
        row = {k: v for k, v in asdict(self).items() if k not in ("params", "region", "e_F_components")}
        row.update({f"param.{k}": v for k, v in self.params.items()})
        row.update({f"region.{k}": v for k, v in self.region.items()})
        for i, e in enumerate(self.e_F_components):
            row[f"e_F.{i}"] = e
        return row


def _target_kind(kind: str) -> str:
    try:
        return _TARGET[kind]
    except KeyError:
        raise InvalidParameter(f"unknown indicator kind {kind!r}") from None


def reference_values(kind: str, spec: SourceSpec, grid: SamplingGrid) -> np.ndarray:
    """The quantity indicator ``kind`` approximates, on ``grid`` nodes.

    Shape ``grid.shape + (arity,)``.
    """
    target = _target_kind(kind)
    nodes = grid.nodes()
    if target == "field":
        vals = spec(nodes)
    elif target == "-curl":
        vals = -eval_derivative(spec, nodes, "curl").value
    else:
        vals = eval_derivative(spec, nodes, target).value
    vals = np.asarray(vals).reshape(grid.n_nodes, -1)
    return vals.reshape(grid.shape + (vals.shape[1],))


def _as_array(reference: Reference, field_: IndicatorField) -> np.ndarray:
    if isinstance(reference, SourceSpec):
        return reference_values(field_.kind, reference, field_.grid)
    if isinstance(reference, IndicatorField):
        if reference.grid != field_.grid:
            raise InvalidParameter("field and reference live on different grids")
        return reference.values
    ref = np.asarray(reference)
    if ref.shape != field_.values.shape:
        raise InvalidParameter(f"reference shape {ref.shape} != field shape {field_.values.shape}")
    return ref


def _region_mask(grid: SamplingGrid, support, exclude_band: float) -> Optional[np.ndarray]:
    if exclude_band < 0:
        raise InvalidParameter("exclude_band must be >= 0")
    if exclude_band == 0 or support is None:
        return None
    return (support.boundary_distance(grid.nodes()) > exclude_band).reshape(grid.shape)


def _support_of(reference, support):
    if support is None and isinstance(reference, SourceSpec):
        return reference.support
    return support


def _diff_and_ref(field_, reference, real_part_only, exclude_band, support):
    ref = _as_array(reference, field_)
    vals = field_.values.real if real_part_only else field_.values
    mask = _region_mask(field_.grid, _support_of(reference, support), exclude_band)
    diff, ref = vals - ref, ref
    if mask is not None:
        if not mask.any():
            raise EmptyRegion(f"no nodes farther than {exclude_band} from the boundary")
        diff, ref = diff[mask], ref[mask]
    return diff.reshape(-1, field_.arity), np.asarray(ref).reshape(-1, field_.arity)


def relative_l2_error(field_: IndicatorField, reference: Reference, grid: Optional[SamplingGrid] = None,
                      real_part_only: bool = False, exclude_band: float = 0.0, support=None) -> float:
    """``||I - ref|| / ||ref||`` with Riemann-sum norms over the grid.

    Vector fields are pooled into one norm. ``exclude_band`` drops nodes
    within that distance of the support boundary (``support`` defaults to
    the reference source's).

    Raises
    ------
    ZeroReference
        If the reference vanishes on every retained node.
    """
    if grid is not None and grid != field_.grid:
        raise InvalidParameter("grid does not match the field's grid")
    diff, ref = _diff_and_ref(field_, reference, real_part_only, exclude_band, support)
    vol = field_.grid.cell_volume
    den = math.sqrt(vol * float(np.sum(np.abs(ref) ** 2)))
    if den == 0.0:
        raise ZeroReference("reference has zero L2 norm on the region")
    return math.sqrt(vol * float(np.sum(np.abs(diff) ** 2))) / den


def component_errors(field_: IndicatorField, reference: Reference, real_part_only: bool = False,
                     exclude_band: float = 0.0, support=None) -> tuple:
    """Per-component relative errors; ``nan`` where a component's reference is zero."""
    diff, ref = _diff_and_ref(field_, reference, real_part_only, exclude_band, support)
    num = np.sqrt(np.sum(np.abs(diff) ** 2, axis=0))
    den = np.sqrt(np.sum(np.abs(ref) ** 2, axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        return tuple(float(v) for v in np.where(den > 0, num / den, np.nan))


def threshold_diff(field_: IndicatorField, reference: Reference, grid: Optional[SamplingGrid] = None,
                   spec: ThresholdSpec = ThresholdSpec(1.5), real_part_only: bool = False) -> np.ndarray:
    """1 where ``|(ref - I)_i(z)| > epsilon``, else 0, per component (int8)."""
    ref = _as_array(reference, field_)
    vals = field_.values.real if real_part_only else field_.values
    return (np.abs(ref - vals) > spec.epsilon).astype(np.int8)


def region_restricted_sup(field_: IndicatorField, reference: Reference, grid: Optional[SamplingGrid] = None,
                          exclude_band: float = 0.0, support=None, real_part_only: bool = False) -> float:
    """Largest pointwise error (vector norm) away from the support boundary.

    With ``exclude_band = 0`` every node counts.
    """
    ref = _as_array(reference, field_)
    vals = field_.values.real if real_part_only else field_.values
    err = np.linalg.norm(np.abs(vals - ref), axis=-1)
    support = _support_of(reference, support)
    if exclude_band < 0:
        raise InvalidParameter("exclude_band must be >= 0")
    if exclude_band > 0:
        if support is None:
            raise InvalidParameter("a band needs a support")
        keep = (support.boundary_distance(field_.grid.nodes()) > exclude_band).reshape(field_.grid.shape)
        if not keep.any():
            raise EmptyRegion(f"no nodes farther than {exclude_band} from the boundary")
        err = err[keep]
    return float(err.max())


def imaginary_ratio(field_: IndicatorField) -> float:
    """``||Im I|| / ||Re I||`` (the continuous indicators are real)."""
    re = np.linalg.norm(field_.values.real)
    return float(np.linalg.norm(field_.values.imag) / re) if re > 0 else float("inf")


def support_localization(field_: IndicatorField, support, dilation: float = 0.2) -> float:
    """Mean ``|I|`` outside ``support`` dilated by ``dilation`` over the mean inside."""
    nodes = field_.grid.nodes()
    mag = np.linalg.norm(np.abs(field_.flat()), axis=-1)
    inside = support.contains(nodes)
    far = ~inside & (support.boundary_distance(nodes) > dilation)
    if not inside.any() or not far.any():
        raise EmptyRegion("need nodes both inside the support and beyond the dilation")
    return float(mag[far].mean() / mag[inside].mean())


def make_report(field_: IndicatorField, reference: Reference, real_part_only: bool = False,
                threshold: Optional[ThresholdSpec] = None, exclude_band: float = 0.0,
                support=None) -> MetricsReport:
    """Score one field; parameters are copied from its provenance."""
    e = relative_l2_error(field_, reference, real_part_only=real_part_only)
    comps = component_errors(field_, reference, real_part_only)
    sup = float("nan")
    if exclude_band > 0 or support is not None or isinstance(reference, SourceSpec):
        try:
            sup = region_restricted_sup(field_, reference, exclude_band=exclude_band,
                                        support=support, real_part_only=real_part_only)
        except (EmptyRegion, InvalidParameter):
            pass
    frac = float("nan")
    if threshold is not None:
        frac = float(threshold_diff(field_, reference, spec=threshold, real_part_only=real_part_only).mean())
    prov = field_.provenance
    params = {k: prov.get(k) for k in ("L", "Lambda", "delta_freq", "noise", "seed")}
    region = dict(field_.grid.describe(), exclude_band=exclude_band)
    return MetricsReport(e, comps, sup, frac, region, params, real_part_only)


# --------------------------------------------------------------------------
# trends

# axis -> (params key, ascending?) such that quality should improve along the order
TREND_AXES = {
    "L": ("L", True),
    "omega_max": ("omega_max", True),
    "delta_omega": ("delta_freq", False),
    "delta": ("noise", False),
}


@dataclass(frozen=True)
class TrendVerdict:
    axis: str
    values: tuple
    errors: tuple
    monotone: bool
    violated: Optional[int] = None

    def __str__(self) -> str:
        if self.monotone:
            return f"{self.axis}: monotone-decreasing"
        return f"{self.axis}: violated({self.violated})"


def _param(report: MetricsReport, key: str):
    if key == "omega_max":
        L, d = report.params.get("Lambda"), report.params.get("delta_freq")
        if "omega_max" in report.params:
            return report.params["omega_max"]
        return None if L is None or d is None else L * d
    return report.params.get(key)


def trend_report(reports: Sequence[MetricsReport], axis: str, slack: Optional[float] = None) -> TrendVerdict:
    """Check that e_F does not grow as ``axis`` moves towards better data.

    Reports are sorted so that quality should improve (more directions,
    higher top frequency, finer frequency step, less noise). A step may
    rise by at most ``slack``, which defaults to the larger seed standard
    deviation of the two neighbours.
    """
    if axis not in TREND_AXES:
        raise InvalidParameter(f"unknown trend axis {axis!r}; use one of {sorted(TREND_AXES)}")
    if len(reports) < 2:
        raise InvalidParameter("a trend needs at least two reports")
    key, ascending = TREND_AXES[axis]
    others = [k for k in ("L", "omega_max", "delta_freq", "noise") if k != key]
    base = reports[0]
    for r in reports[1:]:
        for k in others:
            a, b = _param(base, k), _param(r, k)
            if a is not None and b is not None and not math.isclose(a, b, rel_tol=1e-12):
                raise InvalidParameter(f"reports differ in {k} ({a} vs {b}) off the {axis} axis")
    ordered = sorted(reports, key=lambda r: _param(r, key), reverse=not ascending)
    for i in range(1, len(ordered)):
        prev, cur = ordered[i - 1], ordered[i]
        allow = max(prev.e_F_std, cur.e_F_std) if slack is None else slack
        if cur.e_F > prev.e_F + allow:
            return TrendVerdict(axis, tuple(_param(r, key) for r in ordered),
                                tuple(r.e_F for r in ordered), False, i)
    return TrendVerdict(axis, tuple(_param(r, key) for r in ordered), tuple(r.e_F for r in ordered), True)
