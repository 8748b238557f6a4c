"""
Electromagnetic slices
======================

Reconstructs a current density and the curl of another from noisy
electric and magnetic far fields, and writes each component on
coordinate slices of the cube [-1, 1]^3 as PGM images.

Run with::

    python3 demos/plot_em_slices.py [outdir] [h]
"""
import sys
from pathlib import Path

from invsource import io as fio
from invsource import metrics as me
from invsource.forward import EMParams, apply_noise, synthesize_dataset
from invsource.geometry import fibonacci_sphere, frequency_grid, plane_slice
from invsource.indicators import indicator_E, indicator_H
from invsource.sources import example_four, example_three

out = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "output" / "em")
h = float(sys.argv[2]) if len(sys.argv) > 2 else 0.02
out.mkdir(parents=True, exist_ok=True)
cube = ((-1.0,) * 3, (1.0,) * 3)


def noisy(source, L, k_max, step=0.5, noise=0.1, seed=0):
    clean = synthesize_dataset(source, EMParams(), fibonacci_sphere(L), frequency_grid(step, int(round(k_max / step))))
    return apply_noise(clean, noise, seed)


def slices(source, field_fn, ds, kind, tag, planes):
    for axis, offset in planes:
        grid = plane_slice(cube, axis, offset, h)
        f = field_fn(ds, grid)
        ref = me.reference_values(kind, source, grid)
        err = me.relative_l2_error(f, source, real_part_only=True)
        for c in range(3):
            lo, hi = ref[..., c].min(), ref[..., c].max()
            name = f"{tag}_z{axis + 1}_{offset:+g}_c{c + 1}"
            fio.write_pgm(out / f"{name}.pgm", f.real[..., c], lo if hi > lo else None, hi if hi > lo else None)
            fio.write_pgm(out / f"{name}_exact.pgm", ref[..., c])
        print(f"{tag} z{axis + 1}={offset:+g}: e_F={err:.4f}")


# %%
# Current density from the electric field
# ---------------------------------------
# 151 directions, wavenumbers up to 40, 10% noise.
three = example_three()
quarter = [(a, o) for a in range(3) for o in (-0.25, 0.25)]
slices(three, indicator_E, noisy(three, 151, 40.0), "E", "ex3_L151_k40", quarter)

# %%
# Fewer directions and a lower top wavenumber, on one slice
for L, k in ((51, 40.0), (251, 40.0), (151, 20.0)):
    slices(three, indicator_E, noisy(three, L, k), "E", f"ex3_L{L}_k{k:g}", [(2, 0.25)])

# %%
# Curl of the current from the magnetic field
# -------------------------------------------
four = example_four()
slices(four, indicator_H, noisy(four, 151, 40.0), "H", "ex4_L151_k40", [(a, 0.0) for a in range(3)])
