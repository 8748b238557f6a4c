"""Run configuration and on-disk formats.

Config files are flat ``key = value`` text with dotted keys
(``physics.lambda = 1.0``); they are parsed with :mod:`configparser` after
prepending a section header. Dataset and field files start with
``# key: value`` lines whose values are JSON, followed by a CSV body with
17-significant-digit numbers, so reading back gives the same floats bit
for bit. All writes go to a temporary file that is renamed into place.
"""
from __future__ import annotations

import configparser
import csv
import io as _io
import json
import math
import os
import tempfile
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import DimensionMismatch, InvalidParameter
from .forward import ElasticParams, EMParams, FarFieldDataset
from .geometry import DirectionSet, FrequencyGrid, SamplingGrid, fibonacci_sphere, frequency_grid, theta_circle
from .indicators import ARITY, IndicatorField
from .sources import SourceSpec, make_source

__all__ = [
    "SCHEMA_DATASET", "SCHEMA_FIELD", "OUTPUT_DIR_ENV",
    "RunConfig", "default_config", "load_config", "parse_overrides", "output_dir",
    "write_dataset", "read_dataset", "write_field", "read_field",
    "write_pgm", "read_pgm", "write_scalar_grid", "read_scalar_grid",
    "append_report", "atomic_write_text", "read_header",
]

SCHEMA_DATASET = "invsource-dataset/1"
SCHEMA_FIELD = "invsource-field/1"
SCHEMA_GRID = "invsource-grid/1"
OUTPUT_DIR_ENV = "INVSOURCE_OUTPUT_DIR"
_FMT = "%.17g"

PROBLEMS = ("elastic2d", "elastic3d", "em3d")
_KINDS_FOR = {
    "elastic2d": ("f2d", "p2d", "s2d"),
    "elastic3d": ("f3d", "p3d", "s3d"),
    "em3d": ("E", "H", "rho"),
}


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to regenerate one run.

    ``slices`` is a tuple of ``(axis, offset)`` pairs with 0-based axes;
    only used for 3D problems. ``delta`` is the frequency step (circular
    frequency for elastic runs, wavenumber for EM runs).
    """

    problem: str = "elastic2d"
    source: str = "example_two"
    source_params: dict = field(default_factory=dict)
    lam: float = 1.0
    mu: float = 1.0
    epsilon: float = 1.0
    L: int = 51
    Lambda: int = 80
    delta: float = 0.5
    noise: float = 0.3
    seed: int = 0
    n_seeds: int = 10
    lo: tuple = (-3.0, -3.0)
    hi: tuple = (3.0, 3.0)
    h: float = 0.01
    slices: tuple = ()
    indicators: tuple = ("f2d",)
    output_dir: str = "out"
    real_part_only: bool = False
    exclude_band: float = 0.0
    threshold: float = 1.5
    allow_volume: bool = False

    # ---- derived objects

    @property
    def dimension(self) -> int:
        return 2 if self.problem == "elastic2d" else 3

    def physics(self):
        if self.problem == "em3d":
            return EMParams(self.epsilon, self.mu)
        return ElasticParams(self.lam, self.mu)

    def make_source(self) -> SourceSpec:
        return make_source(self.source, **dict(self.source_params))

    def directions(self) -> DirectionSet:
        return theta_circle(self.L) if self.dimension == 2 else fibonacci_sphere(self.L)

    def frequencies(self) -> FrequencyGrid:
        return frequency_grid(self.delta, self.Lambda)

    def grids(self) -> list:
        """The sampling grids to evaluate on: the full box in 2D, the slices in 3D."""
        if self.dimension == 2 or not self.slices:
            if self.dimension == 3 and not self.allow_volume:
                raise InvalidParameter("3D runs need grid.slices (or grid.allow_volume = true)")
            return [SamplingGrid(self.lo, self.hi, self.h)]
        return [SamplingGrid(self.lo, self.hi, self.h, int(a), float(o)) for a, o in self.slices]

    # ---- validation and flat form

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise InvalidParameter(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if len(self.lo) != self.dimension or len(self.hi) != self.dimension:
            raise DimensionMismatch(f"grid bounds must be {self.dimension}D for {self.problem}")
        bad = [k for k in self.indicators if k not in _KINDS_FOR[self.problem]]
        if bad:
            raise DimensionMismatch(f"indicators {bad} do not apply to {self.problem}")
        src = self.make_source()
        if src.dimension != self.dimension:
            raise DimensionMismatch(f"source {self.source} is {src.dimension}D, problem is {self.problem}")
        if self.noise < 0 or self.n_seeds < 1:
            raise InvalidParameter("noise must be >= 0 and n_seeds >= 1")
        self.physics()
        self.directions()
        self.frequencies()
        return self

    def to_flat(self) -> dict:
        d = {
            "problem": self.problem,
            "source.name": self.source,
            "physics.lambda": self.lam,
            "physics.mu": self.mu,
            "physics.epsilon": self.epsilon,
            "data.L": self.L,
            "data.Lambda": self.Lambda,
            "data.delta": self.delta,
            "data.noise": self.noise,
            "data.seed": self.seed,
            "data.n_seeds": self.n_seeds,
            "grid.lo": list(self.lo),
            "grid.hi": list(self.hi),
            "grid.h": self.h,
            "grid.slices": [list(s) for s in self.slices],
            "grid.allow_volume": self.allow_volume,
            "indicators": list(self.indicators),
            "output.dir": self.output_dir,
            "metrics.real_part_only": self.real_part_only,
            "metrics.exclude_band": self.exclude_band,
            "metrics.threshold": self.threshold,
        }
        for k, v in sorted(self.source_params.items()):
            d[f"source.{k}"] = v
        return d

    def snapshot(self) -> dict:
        return {f"config.{k}": v for k, v in self.to_flat().items()}


_ELASTIC_DEFAULTS = RunConfig()
_EM_DEFAULTS = RunConfig(
    problem="em3d", source="example_three", L=151, Lambda=80, delta=0.5, noise=0.1,
    lo=(-1.0, -1.0, -1.0), hi=(1.0, 1.0, 1.0), h=0.01,
    slices=tuple((a, o) for a in range(3) for o in (-0.25, 0.25)), indicators=("E",),
)


def default_config(problem: str = "elastic2d") -> RunConfig:
    """Defaults for ``problem``: unit Lame constants, step 0.5, 30% noise on
    ``[-3, 3]^2`` for elastic runs; 10% noise, step 0.5 on ``[-1, 1]^3`` for EM."""
    if problem == "em3d":
        return _EM_DEFAULTS
    if problem == "elastic3d":
        return replace(_ELASTIC_DEFAULTS, problem="elastic3d", source="bump",
                       source_params={"center": (0.0, 0.0, 0.0), "direction": (1.0, 0.0, 0.0)},
                       lo=(-1.5,) * 3, hi=(1.5,) * 3, slices=((2, 0.0),), indicators=("f3d",))
    if problem == "elastic2d":
        return _ELASTIC_DEFAULTS
    raise InvalidParameter(f"problem must be one of {PROBLEMS}, got {problem!r}")


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if "," in text:
        return [_parse_value(p) for p in text.split(",") if p.strip()]
    return text


def _as_tuple(v, n=None):
    if isinstance(v, (int, float)):
        v = [v] * (n or 1)
    return tuple(float(x) for x in v)


def _slices(v) -> tuple:
    """``[[axis, offset], ...]`` or ``"2:0.25, 0:-0.25"``."""
    if v in ("", None, []):
        return ()
    if isinstance(v, str):
        v = [part for part in v.split(",") if part.strip()]
    out = []
    for item in v:
        if isinstance(item, str):
            a, o = item.split(":")
            out.append((int(a), float(o)))
        else:
            out.append((int(item[0]), float(item[1])))
    return tuple(out)


def _listify(v) -> tuple:
    if isinstance(v, str):
        return tuple(p.strip() for p in v.split(",") if p.strip())
    if v is None:
        return ()
    return tuple(str(x) for x in v)


_SCALAR_KEYS = {
    "physics.lambda": ("lam", float), "physics.mu": ("mu", float), "physics.epsilon": ("epsilon", float),
    "data.L": ("L", int), "data.Lambda": ("Lambda", int), "data.delta": ("delta", float),
    "data.noise": ("noise", float), "data.seed": ("seed", int), "data.n_seeds": ("n_seeds", int),
    "grid.h": ("h", float), "output.dir": ("output_dir", str),
    "metrics.exclude_band": ("exclude_band", float), "metrics.threshold": ("threshold", float),
}
_BOOL_KEYS = {"metrics.real_part_only": "real_part_only", "grid.allow_volume": "allow_volume"}


def _to_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "false", "yes", "no", "on", "off", "1", "0"):
        return v.lower() in ("true", "yes", "on", "1")
    if v in (0, 1):
        return bool(v)
    raise InvalidParameter(f"expected a boolean, got {v!r}")


def config_from_flat(flat: dict, base: Optional[RunConfig] = None) -> RunConfig:
    """Apply dotted keys on top of ``base`` (or the defaults for ``problem``)."""
    flat = {k.strip(): v for k, v in flat.items()}
    if base is None:
        base = default_config(str(flat.get("problem", "elastic2d")))
    kw = {}
    params = dict(base.source_params)
    for key, raw in flat.items():
        v = _parse_value(raw) if isinstance(raw, str) else raw
        try:
            if key == "problem":
                kw["problem"] = str(v)
            elif key == "source.name":
                if str(v) != base.source:
                    params = {}
                kw["source"] = str(v)
            elif key.startswith("source."):
                params[key[len("source."):]] = tuple(v) if isinstance(v, list) else v
            elif key in _SCALAR_KEYS:
                name, typ = _SCALAR_KEYS[key]
                if typ is int and (isinstance(v, bool) or float(v) != int(float(v))):
                    raise ValueError
                kw[name] = typ(int(float(v)) if typ is int else v)
            elif key in _BOOL_KEYS:
                kw[_BOOL_KEYS[key]] = _to_bool(v)
            elif key in ("grid.lo", "grid.hi"):
                kw[key[5:]] = v
            elif key == "grid.slices":
                kw["slices"] = _slices(v)
            elif key == "indicators":
                kw["indicators"] = _listify(v)
            else:
                raise InvalidParameter(f"unknown config key {key!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidParameter):
                raise
            raise InvalidParameter(f"bad value for {key}: {raw!r}") from None
    cfg = replace(base, source_params=params, **{k: v for k, v in kw.items() if k not in ("lo", "hi")})
    dim = cfg.dimension
    lo = _as_tuple(kw.get("lo", cfg.lo), dim)
    hi = _as_tuple(kw.get("hi", cfg.hi), dim)
    if "problem" in kw and kw["problem"] != base.problem and "lo" not in kw:
        d = default_config(cfg.problem)
        lo, hi = d.lo, d.hi
    return replace(cfg, lo=lo, hi=hi)


def parse_overrides(items: Iterable[str]) -> dict:
    """``["data.L=101", ...]`` to a dict."""
    out = {}
    for item in items:
        if "=" not in item:
            raise InvalidParameter(f"override {item!r} is not key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def load_config(path=None, overrides: Optional[dict] = None) -> RunConfig:
    """Read a config file, then apply ``overrides`` (CLI ``--set`` values win)."""
    flat = {}
    if path is not None:
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
        parser.optionxform = str
        text = Path(path).read_text()
        parser.read_string("[run]\n" + text)
        flat.update(parser["run"])
    flat.update(overrides or {})
    return config_from_flat(flat).validate()


def output_dir(config: Optional[RunConfig] = None, explicit=None) -> Path:
    """Explicit path, else the environment override, else the config's directory."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env)
    return Path(config.output_dir if config is not None else "out")


# --------------------------------------------------------------------------
# low-level writing


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _atomic_write_bytes(path, data: bytes) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, float) and not math.isfinite(v):
        return repr(v)
    return v


def _header(items: dict) -> str:
    return "".join(f"# {k}: {json.dumps(_jsonable(v))}\n" for k, v in items.items())


def _body(columns: list, data: np.ndarray) -> str:
    buf = _io.StringIO()
    buf.write(",".join(columns) + "\n")
    if data.size:
        np.savetxt(buf, data, fmt=_FMT, delimiter=",")
    return buf.getvalue()


def read_header(path) -> tuple:
    """Header dict and the line number where the CSV column names are."""
    header, n = {}, 0
    with open(path) as fh:
        for n, line in enumerate(fh):
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            header[key.strip()] = json.loads(value)
    return header, n


def _complex(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    # assign parts separately: re + 1j*im would turn -0.0 into +0.0
    out = np.empty(re.shape, dtype=complex)
    out.real, out.imag = re, im
    return out


def _read_body(path, skip: int, ncols: int) -> tuple:
    with open(path) as fh:
        for _ in range(skip):
            fh.readline()
        columns = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", dtype=float, ndmin=2)
    if data.size == 0:
        data = data.reshape(0, ncols or len(columns))
    return columns, data


# --------------------------------------------------------------------------
# datasets


def write_dataset(path, dataset: FarFieldDataset, config: Optional[RunConfig] = None) -> Path:
    """One row per (direction, frequency) record."""
    d = dataset.directions.dimension
    L, M = len(dataset.directions), dataset.frequencies.count
    header = {
        "schema": SCHEMA_DATASET,
        "problem": dataset.kind,
        "physics": dataset.physics.describe(),
        "L": L,
        "Lambda": M,
        "delta": dataset.frequencies.delta,
        "quadrature_weight": dataset.directions.quadrature_weight,
        "noise": dataset.noise_level,
        "seed": dataset.seed,
        "source": dataset.source_label,
        "records": len(dataset),
    }
    if config is not None:
        header.update(config.snapshot())
    ll, mm = np.meshgrid(np.arange(L), np.arange(M), indexing="ij")
    cols = ["l", "m"] + [f"x{i + 1}" for i in range(d)] + ["freq"]
    parts = [ll.reshape(-1, 1), mm.reshape(-1, 1),
             np.repeat(dataset.directions.vectors, M, axis=0),
             np.tile(dataset.frequencies.values, L).reshape(-1, 1)]
    for name in dataset.block_names:
        b = dataset.blocks[name].reshape(-1, d)
        for i in range(d):
            cols += [f"{name}{i + 1}_re", f"{name}{i + 1}_im"]
            parts += [b[:, i:i + 1].real, b[:, i:i + 1].imag]
    return atomic_write_text(path, _header(header) + _body(cols, np.hstack(parts)))


def _physics_from(desc: dict):
    if desc.get("physics") == "em":
        return EMParams(desc["epsilon"], desc["mu"])
    return ElasticParams(desc["lambda"], desc["mu"])


def read_dataset(path) -> FarFieldDataset:
    header, skip = read_header(path)
    if header.get("schema") != SCHEMA_DATASET:
        raise InvalidParameter(f"{path}: not a dataset file (schema {header.get('schema')!r})")
    physics = _physics_from(header["physics"])
    L, M = int(header["L"]), int(header["Lambda"])
    d = 2 if header["problem"] == "elastic2d" else 3
    cols, data = _read_body(path, skip, 0)
    if data.shape[0] != L * M:
        raise InvalidParameter(f"{path}: expected {L * M} records, found {data.shape[0]}")
    idx = {c: i for i, c in enumerate(cols)}
    vectors = data[::M, [idx[f"x{i + 1}"] for i in range(d)]]
    directions = DirectionSet(d, vectors, float(header["quadrature_weight"]))
    names = ("E", "H") if header["problem"] == "em3d" else ("p", "s")
    blocks = {}
    for name in names:
        re = data[:, [idx[f"{name}{i + 1}_re"] for i in range(d)]]
        im = data[:, [idx[f"{name}{i + 1}_im"] for i in range(d)]]
        blocks[name] = _complex(re, im).reshape(L, M, d)
    meta = {k: v for k, v in header.items() if k.startswith("config.")}
    return FarFieldDataset(physics, directions, FrequencyGrid(float(header["delta"]), M), blocks,
                           float(header["noise"]), header["seed"], header["source"], meta)


# --------------------------------------------------------------------------
# indicator fields


def _grid_header(grid: SamplingGrid) -> dict:
    return {"grid.lo": list(grid.lo), "grid.hi": list(grid.hi), "grid.h": grid.h,
            "grid.slice_axis": grid.slice_axis, "grid.slice_offset": grid.slice_offset,
            "grid.shape": list(grid.shape)}


def _grid_from(header: dict) -> SamplingGrid:
    return SamplingGrid(tuple(header["grid.lo"]), tuple(header["grid.hi"]), float(header["grid.h"]),
                        header["grid.slice_axis"], header["grid.slice_offset"])


def write_field(path, field_: IndicatorField, config: Optional[RunConfig] = None) -> Path:
    """One row per node, in grid order; real and imaginary parts per component."""
    grid = field_.grid
    header = {"schema": SCHEMA_FIELD, "kind": field_.kind, "arity": field_.arity}
    header.update(_grid_header(grid))
    header.update({f"provenance.{k}": v for k, v in field_.provenance.items()})
    if config is not None:
        header.update(config.snapshot())
    cols = [f"z{i + 1}" for i in range(grid.dimension)]
    parts = [grid.nodes()]
    flat = field_.flat()
    for c in range(field_.arity):
        cols += [f"c{c}_re", f"c{c}_im"]
        parts += [flat[:, c:c + 1].real, flat[:, c:c + 1].imag]
    return atomic_write_text(path, _header(header) + _body(cols, np.hstack(parts)))


def read_field(path) -> IndicatorField:
    header, skip = read_header(path)
    if header.get("schema") != SCHEMA_FIELD:
        raise InvalidParameter(f"{path}: not a field file (schema {header.get('schema')!r})")
    grid = _grid_from(header)
    kind = header["kind"]
    arity = ARITY[kind]
    cols, data = _read_body(path, skip, 0)
    if data.shape[0] != grid.n_nodes:
        raise InvalidParameter(f"{path}: expected {grid.n_nodes} nodes, found {data.shape[0]}")
    idx = {c: i for i, c in enumerate(cols)}
    re = data[:, [idx[f"c{c}_re"] for c in range(arity)]]
    im = data[:, [idx[f"c{c}_im"] for c in range(arity)]]
    values = _complex(re, im).reshape(grid.shape + (arity,))
    prov = {k[len("provenance."):]: v for k, v in header.items() if k.startswith("provenance.")}
    prov.update({k: v for k, v in header.items() if k.startswith("config.")})
    return IndicatorField(grid, values, kind, prov)


# --------------------------------------------------------------------------
# plotted scalars: CSV grid and PGM raster


def write_scalar_grid(path, grid: SamplingGrid, values: np.ndarray, meta: Optional[dict] = None) -> Path:
    """The plotted scalar as CSV: rows follow the first free axis."""
    values = np.asarray(values, dtype=float)
    if values.shape != grid.shape:
        raise InvalidParameter(f"values shape {values.shape} != grid shape {grid.shape}")
    header = {"schema": SCHEMA_GRID}
    header.update(_grid_header(grid))
    header.update(meta or {})
    cols = [f"col{j}" for j in range(grid.shape[1])]
    return atomic_write_text(path, _header(header) + _body(cols, values))


def read_scalar_grid(path) -> tuple:
    header, skip = read_header(path)
    if header.get("schema") != SCHEMA_GRID:
        raise InvalidParameter(f"{path}: not a grid file")
    grid = _grid_from(header)
    _, data = _read_body(path, skip, grid.shape[1])
    return grid, data.reshape(grid.shape), header


def write_pgm(path, values: np.ndarray, vmin: Optional[float] = None, vmax: Optional[float] = None,
              meta: Optional[dict] = None) -> tuple:
    """16-bit binary PGM of a 2D array plus a ``.txt`` sidecar.

    ``values[i, j]`` is node ``(a_i, b_j)``; the image puts ``a`` along the
    columns and ``b`` upwards. Pixels are ``round(65535 (v - vmin)/(vmax - vmin))``
    clipped to range. A constant image (``vmax == vmin``) is all zeros and
    the sidecar says so.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise InvalidParameter("PGM output needs a 2D array")
    finite = values[np.isfinite(values)]
    lo = float(finite.min()) if vmin is None and finite.size else float(vmin if vmin is not None else 0.0)
    hi = float(finite.max()) if vmax is None and finite.size else float(vmax if vmax is not None else 0.0)
    degenerate = not hi > lo
    if degenerate:
        pix = np.zeros(values.shape)
    else:
        pix = np.clip(np.round((np.nan_to_num(values, nan=lo) - lo) / (hi - lo) * 65535.0), 0, 65535)
    image = pix.T[::-1].astype(">u2")
    rows, cols = image.shape
    data = f"P5\n{cols} {rows}\n65535\n".encode("ascii") + image.tobytes()
    path = _atomic_write_bytes(path, data)
    side = {"vmin": lo, "vmax": hi, "degenerate_range": degenerate,
            "mapping": "pixel = round(65535 * (value - vmin) / (vmax - vmin)), clipped; 0 if degenerate",
            "orientation": "columns follow the first axis, rows run from the largest second-axis value down",
            "width": cols, "height": rows}
    side.update(meta or {})
    sidecar = atomic_write_text(str(path) + ".txt", "".join(f"{k}: {json.dumps(_jsonable(v))}\n"
                                                              for k, v in side.items()))
    return path, sidecar


def read_pgm(path) -> np.ndarray:
    """Pixel array (rows, cols) of a 16-bit binary PGM."""
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos].decode("ascii"))
    pos += 1
    if tokens[0] != "P5":
        raise InvalidParameter(f"{path}: not a binary PGM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(raw[pos:], dtype=dtype, count=w * h).reshape(h, w)


# --------------------------------------------------------------------------
# report tables


def append_report(path, row: dict) -> Path:
    """Append ``row`` to a CSV table, widening the header when new columns appear."""
    path = Path(path)
    rows = []
    if path.exists():
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    rows.append({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    columns = []
    for r in rows:
        columns += [k for k in r if k not in columns]
    buf = _io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return atomic_write_text(path, buf.getvalue())
