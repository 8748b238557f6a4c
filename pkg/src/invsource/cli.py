"""Command-line driver: simulate, reconstruct, metrics, sweep, figure, tables.

Exit codes: 0 success, 2 bad configuration or arguments, 3 file-system
errors, 4 dimension or data-kind mismatches.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import io as fio
from .errors import DimensionMismatch, EmptyRegion, InvalidParameter, ZeroReference
from .experiments import (TABLE1, TABLE1_L, TABLE1_OMEGA, TABLE2, TABLE2_DOMEGA, TABLE2_NOISE,
                          elastic_cell, format_table, get_profile, table_one, table_two, table_trends)
from .forward import apply_noise, synthesize_dataset
from .indicators import indicator
from .metrics import ThresholdSpec, make_report
from .metrics import trend_report

log = logging.getLogger("invsource")

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_MISMATCH = 0, 2, 3, 4


def _config(args):
    overrides = fio.parse_overrides(args.set or [])
    return fio.load_config(args.config, overrides)


def _grid_tag(grid) -> str:
    if not grid.is_slice:
        return "full"
    return f"z{grid.slice_axis + 1}_{grid.slice_offset:+g}"


# --------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    cfg = _config(args)
    out = fio.output_dir(cfg, args.out)
    t0 = time.perf_counter()
    clean = synthesize_dataset(cfg.make_source(), cfg.physics(), cfg.directions(), cfg.frequencies())
    noisy = apply_noise(clean, cfg.noise, cfg.seed)
    p1 = fio.write_dataset(out / "dataset_clean.csv", clean, cfg)
    p2 = fio.write_dataset(out / "dataset_noisy.csv", noisy, cfg)
    print(f"records: {len(clean)}")
    print(f"wrote {p1} and {p2} in {time.perf_counter() - t0:.2f} s")
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    out = fio.output_dir(cfg, args.out)
    if not cfg.indicators:
        log.warning("no indicators requested; nothing to do")
        return EXIT_OK
    dataset = fio.read_dataset(args.dataset)
    if dataset.kind != cfg.problem:
        raise DimensionMismatch(f"dataset is {dataset.kind}, config problem is {cfg.problem}")
    source = cfg.make_source() if "rho" in cfg.indicators else None
    for kind in cfg.indicators:
        rho = None
        if kind == "rho":
            rho = source.charge
            if rho is None:
                raise InvalidParameter(f"source {cfg.source} has no charge term for the rho indicator")
        for grid in cfg.grids():
            t0 = time.perf_counter()
            f = indicator(dataset, kind, grid, rho=rho, allow_volume=cfg.allow_volume)
            path = fio.write_field(out / f"field_{kind}_{_grid_tag(grid)}.csv", f, cfg)
            print(f"{kind} on {grid.shape} nodes -> {path} ({time.perf_counter() - t0:.2f} s)")
    return EXIT_OK


def cmd_metrics(args) -> int:
    field_ = fio.read_field(args.field)
    if args.config is None and "config.source.name" not in field_.provenance and not args.set:
        raise InvalidParameter("no reference source: pass --config or use a field file with a config header")
    if args.config is None:
        flat = {k[len("config."):]: v for k, v in field_.provenance.items() if k.startswith("config.")}
        flat.update(fio.parse_overrides(args.set or []))
        cfg = fio.config_from_flat(flat).validate()
    else:
        cfg = _config(args)
    source = cfg.make_source()
    if source.dimension != field_.grid.dimension:
        raise DimensionMismatch("reference source and field grid dimensions differ")
    report = make_report(field_, source, real_part_only=cfg.real_part_only,
                         threshold=ThresholdSpec(cfg.threshold), exclude_band=cfg.exclude_band)
    row = {"field": str(args.field), "kind": field_.kind}
    row.update(report.as_row())
    path = Path(args.report) if args.report else fio.output_dir(cfg, args.out) / "metrics.csv"
    fio.append_report(path, row)
    print(f"e_F = {report.e_F:.6g} (real_part_only={cfg.real_part_only})")
    return EXIT_OK


_SWEEP_KEYS = ("L", "omega_max", "delta_omega", "delta")


def _parse_axis(text: str):
    name, _, values = text.partition("=")
    name = name.strip()
    if name not in _SWEEP_KEYS or not values.strip():
        raise InvalidParameter(f"axis must look like NAME=v1,v2 with NAME in {_SWEEP_KEYS}, got {text!r}")
    vals = [float(v) for v in values.split(",") if v.strip()]
    return name, [int(v) if name == "L" else v for v in vals]


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if cfg.problem != "elastic2d":
        raise InvalidParameter("sweeps are defined for elastic2d error tables")
    axes = [_parse_axis(a) for a in args.axis]
    if not 1 <= len(axes) <= 2:
        raise InvalidParameter("give one or two --axis options (rows, then columns)")
    if len(axes) == 1:
        axes.append((None, [None]))
    (rname, rvals), (cname, cvals) = axes
    seeds = [cfg.seed + i for i in range(cfg.n_seeds)]
    base = {"L": cfg.L, "omega_max": cfg.Lambda * cfg.delta, "delta_omega": cfg.delta, "delta": cfg.noise}
    source = cfg.make_source()
    cells = []
    for rv in rvals:
        row = []
        for cv in cvals:
            p = dict(base)
            p[rname] = rv
            if cname:
                p[cname] = cv
            cell = elastic_cell(p["L"], p["omega_max"], p["delta_omega"], p["delta"], seeds, cfg.h,
                                source, cfg.physics(), (cfg.lo, cfg.hi), cfg.real_part_only)
            print(f"{rname}={rv} {cname or ''}{'=' + str(cv) if cname else ''}: "
                  f"e_F = {cell.mean:.4f} +- {cell.std:.4f}")
            row.append(cell)
        cells.append(row)
    table = format_table(cells, rvals, cvals if cname else ["e_F"], f"{rname}\\{cname or ''}")
    lines = [table]
    if len(rvals) > 1:
        for j in range(len(cvals)):
            v = trend_report([r[j].report() for r in cells], rname)
            lines.append(f"# trend column {j}: {v}")
    if cname and len(cvals) > 1:
        for i, row in enumerate(cells):
            lines.append(f"# trend row {i}: {trend_report([c.report() for c in row], cname)}")
    out = fio.output_dir(cfg, args.out)
    header = "".join(f"# {k}: {v}\n" for k, v in cfg.snapshot().items())
    path = fio.atomic_write_text(out / "sweep.csv", header + "\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"wrote {path}")
    return EXIT_OK


_PARTS = {"real": np.real, "imag": np.imag, "abs": np.abs}


def cmd_figure(args) -> int:
    field_ = fio.read_field(args.field)
    if not 0 <= args.component < field_.arity:
        raise InvalidParameter(f"component must be in 0..{field_.arity - 1}, got {args.component}")
    scalar = _PARTS[args.part](field_.values[..., args.component])
    if args.threshold is not None:
        raise_if = args.config is None and "config.source.name" not in field_.provenance
        if raise_if:
            raise InvalidParameter("a threshold image needs a reference source")
        flat = {k[len("config."):]: v for k, v in field_.provenance.items() if k.startswith("config.")}
        cfg = fio.config_from_flat(flat) if args.config is None else _config(args)
        from .metrics import reference_values
        ref = reference_values(field_.kind, cfg.make_source(), field_.grid)[..., args.component]
        scalar = (np.abs(ref - scalar) > args.threshold).astype(float)
    src = Path(args.field)
    folder = Path(args.out) if args.out else src.parent
    folder.mkdir(parents=True, exist_ok=True)
    suffix = "_threshold" if args.threshold is not None else ""
    stem = folder / f"{src.stem}_c{args.component}_{args.part}{suffix}"
    meta = {"field": str(args.field), "component": args.component, "part": args.part,
            "threshold": args.threshold}
    meta.update({k: v for k, v in field_.provenance.items()})
    grid_path = fio.write_scalar_grid(str(stem) + ".csv", field_.grid, scalar, meta)
    pgm, side = fio.write_pgm(str(stem) + ".pgm", scalar, args.vmin, args.vmax, meta)
    print(f"wrote {grid_path}, {pgm}, {side}")
    return EXIT_OK


def cmd_tables(args) -> int:
    profile = get_profile(args.profile)
    out = fio.output_dir(None, args.out)
    which = ("1", "2") if args.which == "both" else (args.which,)
    status = EXIT_OK
    for w in which:
        t0 = time.perf_counter()
        if w == "1":
            cells = table_one(profile, args.seed)
            table = format_table(cells, TABLE1_OMEGA, TABLE1_L, "omega_max\\L")
            target, tol, trends = TABLE1, profile.tol_table1, table_trends(cells, "omega_max", "L")
        else:
            cells = table_two(profile, args.seed)
            table = format_table(cells, TABLE2_DOMEGA, TABLE2_NOISE, "delta_omega\\delta")
            target, tol, trends = TABLE2, profile.tol_table2, table_trends(cells, "delta_omega", "delta")
        means = np.array([[c.mean for c in row] for row in cells])
        worst = float(np.max(np.abs(means - target)))
        lines = [table, f"# profile: {profile.name} seeds={profile.n_seeds} h={profile.h} real_part_only=True",
                 f"# max |mean - target| = {worst:.4f} (tolerance {tol})"]
        lines += [f"# trend {name}: {v}" for name, v in trends]
        path = fio.atomic_write_text(out / f"table{w}.csv", "\n".join(lines) + "\n")
        print("\n".join(lines))
        print(f"wrote {path} in {time.perf_counter() - t0:.1f} s")
    return status


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="invsource", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", "-c", help="flat key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
        sp.add_argument("--out", "-o", help="output directory (beats $%s)" % fio.OUTPUT_DIR_ENV)
        return sp

    with_config(sub.add_parser("simulate", help="synthesize clean and noisy far-field data"))
    sp = with_config(sub.add_parser("reconstruct", help="evaluate indicators from a dataset file"))
    sp.add_argument("dataset")
    sp = with_config(sub.add_parser("metrics", help="score a field file against its reference"))
    sp.add_argument("field")
    sp.add_argument("--report", help="CSV table to append to (default OUT/metrics.csv)")
    sp = with_config(sub.add_parser("sweep", help="seed-averaged error table over one or two axes"))
    sp.add_argument("--axis", action="append", required=True, metavar="NAME=v1,v2,...")
    sp = sub.add_parser("figure", help="CSV grid and PGM raster of one field component")
    sp.add_argument("field")
    sp.add_argument("--component", type=int, default=0)
    sp.add_argument("--part", choices=sorted(_PARTS), default="real")
    sp.add_argument("--vmin", type=float)
    sp.add_argument("--vmax", type=float)
    sp.add_argument("--threshold", type=float, help="plot the |reference - field| > eps mask instead")
    sp.add_argument("--config", "-c")
    sp.add_argument("--set", action="append", metavar="KEY=VALUE")
    sp.add_argument("--out", "-o", help="output path stem")
    sp = sub.add_parser("tables", help="compute both error tables against their target values")
    sp.add_argument("--which", choices=("1", "2", "both"), default="both")
    sp.add_argument("--profile", choices=("full", "ci"), help="default: $INVSOURCE_PROFILE or full")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", "-o")
    return p


_COMMANDS = {
    "simulate": cmd_simulate, "reconstruct": cmd_reconstruct, "metrics": cmd_metrics,
    "sweep": cmd_sweep, "figure": cmd_figure, "tables": cmd_tables,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s: %(message)s")
    try:
        return _COMMANDS[args.command](args)
    except DimensionMismatch as exc:
        print(f"error: dimension mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except (InvalidParameter, EmptyRegion, ZeroReference) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
