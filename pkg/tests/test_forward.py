import math

import numpy as np
import pytest
from scipy.special import j1

from invsource.errors import DimensionMismatch, InvalidParameter
from invsource.forward import (
    ElasticParams, EMParams, apply_noise, elastic_far_field_2d, elastic_far_field_3d, em_far_fields,
    fourier_transform, noise_multipliers, synthesize_dataset,
)
from invsource.geometry import Direction2, fibonacci_sphere, frequency_grid, theta_circle
from invsource.sources import Ball, Disk, bump_source, constant_source, example_one, example_two, zero_source


def disk_transform(k, R=1.0):
    return 2 * np.pi * R * j1(k * R) / k


def ball_transform(k, R=1.0):
    return 4 * np.pi * (np.sin(k * R) - k * R * np.cos(k * R)) / k ** 3


def test_constant_disk_compressional_value():
    s = constant_source(Disk((0.0, 0.0), 1.0), (1.0, 0.0))
    u_p, u_s = elastic_far_field_2d(s, ElasticParams(), Direction2(1.0, 0.0), math.sqrt(3.0))
    np.testing.assert_allclose(u_p, [2 * np.pi * j1(1.0), 0.0], rtol=1e-9, atol=1e-12)
    assert abs(u_s @ np.array([1.0, 0.0])) == 0.0


def test_zero_source_fields():
    z2, z3 = zero_source(2), zero_source(3)
    for a in elastic_far_field_2d(z2, ElasticParams(), (0.6, 0.8), 2.0):
        assert np.all(a == 0)
    for a in elastic_far_field_3d(z3, ElasticParams(), (0.0, 0.6, 0.8), 2.0):
        assert np.all(a == 0)
    for a in em_far_fields(z3, EMParams(), (0.0, 0.0, 1.0), 3.0):
        assert np.all(a == 0)
    assert np.all(fourier_transform(z2, [1.0, 2.0]) == 0)


def test_invalid_frequencies():
    s = example_two()
    with pytest.raises(InvalidParameter):
        elastic_far_field_2d(s, ElasticParams(), (1.0, 0.0), 0.0)
    with pytest.raises(InvalidParameter):
        em_far_fields(bump_source((0.0, 0.0, 0.0)), EMParams(), (1.0, 0.0, 0.0), -1.0)
    with pytest.raises(DimensionMismatch):
        elastic_far_field_3d(s, ElasticParams(), (1.0, 0.0, 0.0), 1.0)


def test_physics_validation():
    with pytest.raises(InvalidParameter):
        ElasticParams(1.0, 0.0)
    with pytest.raises(InvalidParameter):
        ElasticParams(-3.0, 1.0)
    with pytest.raises(InvalidParameter):
        EMParams(0.0, 1.0)
    p = ElasticParams(2.0, 0.5)
    assert p.k_s(3.0) >= p.k_p(3.0)


def test_ball_electric_field():
    s = constant_source(Ball((0.0, 0.0, 0.0), 0.5), (0.0, 0.0, 1.0))
    E, H = em_far_fields(s, EMParams(), (1.0, 0.0, 0.0), 2.0)
    g = ball_transform(2.0, 0.5)
    assert g == pytest.approx(0.4731, abs=1e-4)
    np.testing.assert_allclose(E, [0, 0, 1j * 2.0 * g / (4 * np.pi)], atol=1e-12)
    assert E[2].imag == pytest.approx(0.0753, abs=1e-3)
    np.testing.assert_allclose(H, np.cross([1.0, 0.0, 0.0], E), atol=1e-14)


def test_disk_closed_form(rng):
    s = constant_source(Disk((0.0, 0.0), 1.0), (1.0, 1.0))
    k = rng.uniform(0.1, 50.0, 100)
    th = rng.uniform(0, 2 * np.pi, 100)
    xi = k[:, None] * np.column_stack([np.cos(th), np.sin(th)])
    got = fourier_transform(s, xi)[:, 0]
    np.testing.assert_allclose(got, disk_transform(k), rtol=1e-6, atol=0)


def test_ball_closed_form(rng):
    s = constant_source(Ball((0.0, 0.0, 0.0), 1.0), (1.0, 0.0, 0.0))
    v = rng.normal(size=(60, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    k = rng.uniform(0.1, 50.0, 60)
    got = fourier_transform(s, k[:, None] * v)[:, 0]
    np.testing.assert_allclose(got, ball_transform(k), rtol=1e-6, atol=0)


def test_zero_frequency_example_one():
    F = fourier_transform(example_one(), [0.0, 0.0])
    assert np.all(np.abs(F.imag) < 1e-12)
    assert np.all(F.real >= 4 * np.pi * 1.5 ** 2)


def test_lattice_oracle_agrees_and_converges():
    s = bump_source((0.1, -0.2), 0.9, (1.0, 0.5))
    xi = np.array([[3.0, -2.0], [10.0, 4.0]])
    ref = fourier_transform(s, xi)
    coarse = fourier_transform(s, xi, method="lattice", refine=1.0)
    fine = fourier_transform(s, xi, method="lattice", refine=2.0)
    np.testing.assert_allclose(fine, ref, rtol=1e-6, atol=1e-9)
    h = math.pi / (5 * 10.77)
    assert np.max(np.abs(coarse - fine)) <= 10 * h ** 2 * np.max(np.abs(ref))


def _random_directions(rng, n, d):
    v = rng.normal(size=(n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


@pytest.mark.parametrize("spec,d", [
    (example_two(), 2),
    (bump_source((0.0, 0.1, -0.1), 0.8, (1.0, -0.5, 2.0)), 3),
])
def test_fourier_identity(spec, d, rng):
    p = ElasticParams(1.0, 1.0)
    ratio = float(p.k_p(1.0) / p.k_s(1.0))
    far = elastic_far_field_2d if d == 2 else elastic_far_field_3d
    worst = 0.0
    for x, w in zip(_random_directions(rng, 100, d), rng.uniform(0.5, 40.0, 100)):
        u_p, _ = far(spec, p, x, w)
        _, u_s = far(spec, p, x, ratio * w)
        F = fourier_transform(spec, float(p.k_p(w)) * x)
        worst = max(worst, np.linalg.norm(u_p + u_s - F) / np.linalg.norm(F))
    assert worst <= 1e-6


def test_dataset_invariants_elastic():
    ds = synthesize_dataset(example_two(), ElasticParams(), theta_circle(51), frequency_grid(0.5, 80))
    assert len(ds) == 4080
    X = ds.directions.vectors[:, None, :]
    u_p, u_s = ds.blocks["p"], ds.blocks["s"]
    par = u_p - X * np.sum(u_p * X, axis=-1, keepdims=True)
    assert np.all(np.linalg.norm(par, axis=-1) <= 1e-10 * np.linalg.norm(u_p, axis=-1) + 1e-300)
    assert np.max(np.abs(np.sum(u_s * X, axis=-1))) <= 1e-10 * np.max(np.abs(u_s))
    r = ds.record(3, 7)
    assert r.frequency == 4.0 and set(r.blocks) == {"p", "s"}


def test_dataset_invariants_em():
    s = bump_source((0.0, 0.0, 0.0), 0.6, (1.0, 2.0, -1.0))
    p = EMParams(2.0, 1.5)
    ds = synthesize_dataset(s, p, fibonacci_sphere(30), frequency_grid(0.5, 12))
    X = ds.directions.vectors[:, None, :]
    E, H = ds.blocks["E"], ds.blocks["H"]
    scale = np.max(np.abs(E))
    assert np.max(np.abs(np.sum(E * X, axis=-1))) <= 1e-10 * scale
    np.testing.assert_allclose(H, math.sqrt(2.0 / 1.5) * np.cross(np.broadcast_to(X, E.shape), E),
                               atol=1e-10 * np.max(np.abs(H)))
    assert np.max(np.abs(np.sum(H * E, axis=-1))) <= 1e-10 * scale * np.max(np.abs(H))


def test_zero_dataset_and_determinism():
    ds = synthesize_dataset(zero_source(2), ElasticParams(), theta_circle(4), frequency_grid(1.0, 2))
    assert len(ds) == 8 and all(np.all(b == 0) for b in ds.blocks.values())
    a = synthesize_dataset(example_two(), ElasticParams(), theta_circle(9), frequency_grid(0.5, 10))
    b = synthesize_dataset(example_two(), ElasticParams(), theta_circle(9), frequency_grid(0.5, 10))
    assert a == b


def test_noise_zero_only_metadata():
    ds = synthesize_dataset(example_two(), ElasticParams(), theta_circle(9), frequency_grid(0.5, 10))
    n = apply_noise(ds, 0.0, 17)
    assert n.noise_level == 0.0 and n.seed == 17
    for k in ds.block_names:
        np.testing.assert_array_equal(n.blocks[k], ds.blocks[k])
    with pytest.raises(InvalidParameter):
        apply_noise(ds, -0.1, 0)


def test_noise_deterministic_and_independent_blocks():
    ds = synthesize_dataset(example_two(), ElasticParams(), theta_circle(9), frequency_grid(0.5, 10))
    a, b = apply_noise(ds, 0.3, 5), apply_noise(ds, 0.3, 5)
    assert a == b
    assert not np.array_equal(apply_noise(ds, 0.3, 6).blocks["p"], a.blocks["p"])
    f = noise_multipliers(0.3, 5, 9, 10, 2)
    assert not np.allclose(f[..., 0], f[..., 1])


def test_noise_moments():
    delta = 0.3
    f = noise_multipliers(delta, 12345, 100, 100, 1).ravel()
    n = f.size
    re, im = f.real - 1.0, f.imag
    sem = delta / math.sqrt(n)
    assert abs(re.mean()) <= 5 * sem and abs(im.mean()) <= 5 * sem
    # standard error of the sample std is about sigma / sqrt(2n)
    se_std = delta / math.sqrt(2 * n)
    assert abs(re.std() - delta) <= 5 * se_std and abs(im.std() - delta) <= 5 * se_std
    assert abs(np.corrcoef(re, im)[0, 1]) <= 5 / math.sqrt(n)
