"""
Planar elastic reconstructions
==============================

Builds the indicator images for the two planar test sources and writes
them as 16-bit PGM files (with a ``.txt`` sidecar holding the colour
range) into ``demos/output/elastic`` or the directory given as the first
argument.

Run with::

    python3 demos/plot_elastic_2d.py [outdir] [h]

The default spacing h = 0.02 keeps the run to a few minutes on one core.
"""
import sys
from pathlib import Path

from invsource import io as fio
from invsource import metrics as me
from invsource.forward import ElasticParams, apply_noise, synthesize_dataset
from invsource.geometry import cartesian_grid, frequency_grid, theta_circle
from invsource.indicators import indicator_f_2d, indicator_p_2d, indicator_s_2d
from invsource.sources import example_one, example_two

out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "output" / "elastic")
h = float(sys.argv[2]) if len(sys.argv) > 2 else 0.02
out.mkdir(parents=True, exist_ok=True)
params = ElasticParams()


def save(stem, values, vmin=None, vmax=None, **meta):
    pgm, _ = fio.write_pgm(out / f"{stem}.pgm", values, vmin, vmax, meta)
    print(f"  wrote {pgm.name}")


def data(source, L, omega_max, step=0.5, noise=0.3, seed=0):
    clean = synthesize_dataset(source, params, theta_circle(L), frequency_grid(step, int(round(omega_max / step))))
    return apply_noise(clean, noise, seed)


# %%
# First source: more directions
# -----------------------------
# Top frequency 40, 30% noise. The threshold image marks nodes where a
# component of the real part misses the source by more than 1.5.

one = example_one()
grid = cartesian_grid(((-2.0, -2.0), (2.0, 2.0)), h)
exact = me.reference_values("f2d", one, grid)
for c in range(2):
    save(f"ex1_exact_c{c + 1}", exact[..., c])
for L in (31, 51, 71):
    field = indicator_f_2d(data(one, L, 40.0), grid)
    mask = me.threshold_diff(field, one, real_part_only=True)
    for c in range(2):
        # share the exact solution's colour range so images are comparable
        save(f"ex1_L{L}_c{c + 1}", field.real[..., c], exact[..., c].min(), exact[..., c].max())
        save(f"ex1_L{L}_c{c + 1}_threshold", mask[..., c], 0, 1)
    print(f"L={L}: e_F={me.relative_l2_error(field, one, real_part_only=True):.4f}, "
          f"masked fraction {mask.mean():.4f}")

# %%
# First source: higher top frequency
# ----------------------------------
for w in (30, 40, 50):
    field = indicator_f_2d(data(one, 51, float(w)), grid)
    for c in range(2):
        save(f"ex1_w{w}_c{c + 1}", field.real[..., c], exact[..., c].min(), exact[..., c].max())
    print(f"omega_max={w}: e_F={me.relative_l2_error(field, one, real_part_only=True):.4f}")

# %%
# First source: compressional and shear parts
# -------------------------------------------
# These approximate div S and the perpendicular divergence.
ds = data(one, 51, 40.0)
for kind, fn in (("p", indicator_p_2d), ("s", indicator_s_2d)):
    field = fn(ds, grid)
    ref = me.reference_values(f"{kind}2d", one, grid)[..., 0]
    save(f"ex1_I{kind}_exact", ref)
    save(f"ex1_I{kind}", field.real[..., 0], ref.min(), ref.max())

# %%
# Second source
# -------------
two = example_two()
grid = cartesian_grid(((-3.0, -3.0), (3.0, 3.0)), h)
ds = data(two, 51, 40.0)
field = indicator_f_2d(ds, grid)
exact = me.reference_values("f2d", two, grid)
for c in range(2):
    save(f"ex2_exact_c{c + 1}", exact[..., c])
    save(f"ex2_If_c{c + 1}", field.real[..., c], exact[..., c].min(), exact[..., c].max())
for kind, fn in (("p", indicator_p_2d), ("s", indicator_s_2d)):
    f = fn(ds, grid)
    ref = me.reference_values(f"{kind}2d", two, grid)[..., 0]
    save(f"ex2_I{kind}_exact", ref)
    save(f"ex2_I{kind}", f.real[..., 0], ref.min(), ref.max())
print(f"second source: e_F={me.relative_l2_error(field, two, real_part_only=True):.4f}")
