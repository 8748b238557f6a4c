import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import j0

from invsource import metrics as me
from invsource.errors import DimensionMismatch, InvalidParameter
from invsource.forward import ElasticParams, EMParams, apply_noise, synthesize_dataset
from invsource.geometry import cartesian_grid, fibonacci_sphere, frequency_grid, plane_slice, theta_circle
from invsource.indicators import (
    evaluate_batch, indicator, indicator_E, indicator_f_2d, indicator_f_3d, indicator_H, indicator_p_2d,
    indicator_p_3d, indicator_rho, indicator_s_2d, indicator_s_3d, indicator_terms,
)
from invsource.sources import (
    SourceSpec, bump_source, curl_bump, example_four, example_one, example_two, gradient_bump,
    perp_gradient_bump, zero_source,
)

ELASTIC = ElasticParams()
EM = EMParams()
BOX2 = ([-1.5, -1.5], [1.5, 1.5])
BOX3 = ([-1.2] * 3, [1.2] * 3)


def zero_scalar():
    z = zero_source(3)
    return SourceSpec("zero_charge", 3, 1, z.support, lambda p: np.zeros((len(p), 1)))


@pytest.fixture(scope="module")
def small2d():
    return apply_noise(synthesize_dataset(example_two(), ELASTIC, theta_circle(13), frequency_grid(0.5, 12)), 0.3, 1)


@pytest.fixture(scope="module")
def small3d():
    s = bump_source((0.0, 0.1, 0.0), 0.7, (1.0, -1.0, 0.5))
    return synthesize_dataset(s, ELASTIC, fibonacci_sphere(17), frequency_grid(0.5, 8))


@pytest.fixture(scope="module")
def small_em():
    s = curl_bump((0.0, 0.0, 0.0), 0.6, (0.2, 0.3, 1.0))
    return apply_noise(synthesize_dataset(s, EM, fibonacci_sphere(17), frequency_grid(0.5, 8)), 0.1, 2)


# ---------------------------------------------------------------- basics

@pytest.mark.parametrize("kind,d", [("f2d", 2), ("p2d", 2), ("s2d", 2), ("f3d", 3), ("p3d", 3),
                                    ("s3d", 3), ("E", 3), ("H", 3), ("rho", 3)])
def test_zero_data_zero_field(kind, d):
    params = EM if kind in ("E", "H", "rho") else ELASTIC
    dirs = theta_circle(7) if d == 2 else fibonacci_sphere(7)
    ds = synthesize_dataset(zero_source(d), params, dirs, frequency_grid(1.0, 3))
    grid = cartesian_grid(BOX2, 0.3) if d == 2 else plane_slice(BOX3, 1, 0.2, 0.3)
    f = indicator(ds, kind, grid, rho=zero_scalar() if kind == "rho" else None)
    assert f.values.shape == grid.shape + (f.arity,)
    assert np.all(f.values == 0)


def test_arity(small2d, small3d, small_em):
    g2, g3 = cartesian_grid(BOX2, 0.5), plane_slice(BOX3, 0, 0.0, 0.5)
    assert indicator_f_2d(small2d, g2).values.shape[-1] == 2
    assert indicator_p_2d(small2d, g2).values.shape[-1] == 1
    assert indicator_s_3d(small3d, g3).values.shape[-1] == 3
    assert indicator_p_3d(small3d, g3).values.shape[-1] == 1
    assert indicator_H(small_em, g3).values.shape[-1] == 3


def test_mismatches(small2d, small3d, small_em):
    g2, g3 = cartesian_grid(BOX2, 0.5), plane_slice(BOX3, 0, 0.0, 0.5)
    with pytest.raises(DimensionMismatch):
        indicator_E(small2d, g3)
    with pytest.raises(DimensionMismatch):
        indicator_f_2d(small3d, g2)
    with pytest.raises(DimensionMismatch):
        indicator_f_2d(small2d, g3)
    with pytest.raises(DimensionMismatch):
        indicator_f_3d(small_em, g3)
    with pytest.raises(DimensionMismatch):
        indicator_H(small_em, g2)
    with pytest.raises(InvalidParameter):
        indicator(small_em, "rho", g3)
    with pytest.raises(InvalidParameter):
        indicator(small_em, "nope", g3)


def test_volume_guard(small3d):
    vol = cartesian_grid(([-0.5] * 3, [0.5] * 3), 0.25)
    with pytest.raises(InvalidParameter):
        indicator_f_3d(small3d, vol)
    f = indicator_f_3d(small3d, vol, allow_volume=True)
    sl = indicator_f_3d(small3d, plane_slice(([-0.5] * 3, [0.5] * 3), 2, 0.25, 0.25))
    np.testing.assert_allclose(f.values[:, :, 3], sl.values, rtol=1e-12, atol=1e-14)


def _naive(terms, nodes):
    """Per-node loop over the terms in index order."""
    out = np.zeros((len(nodes), terms.coeff.shape[1]), dtype=complex)
    for i, z in enumerate(nodes):
        out[i] = np.exp(1j * (terms.xi @ z)) @ terms.coeff
    return out


@pytest.mark.parametrize("kind", ["f2d", "p2d", "s2d"])
def test_separable_matches_direct_2d(small2d, kind):
    grid = cartesian_grid(([-2.0, -1.0], [1.0, 2.5]), 0.35)
    t = indicator_terms(small2d, kind)
    fast = evaluate_batch(t.xi, t.coeff, grid).reshape(-1, t.coeff.shape[1])
    slow = _naive(t, grid.nodes())
    assert np.max(np.abs(fast - slow)) <= 1e-10 * np.max(np.abs(slow))


@pytest.mark.parametrize("kind,fixture", [("f3d", "small3d"), ("p3d", "small3d"), ("s3d", "small3d"),
                                          ("E", "small_em"), ("H", "small_em")])
@pytest.mark.parametrize("axis", [0, 1, 2])
def test_separable_matches_direct_slices(kind, fixture, axis, request):
    ds = request.getfixturevalue(fixture)
    grid = plane_slice(BOX3, axis, -0.3, 0.3)
    t = indicator_terms(ds, kind)
    fast = evaluate_batch(t.xi, t.coeff, grid).reshape(-1, t.coeff.shape[1])
    slow = _naive(t, grid.nodes())
    assert np.max(np.abs(fast - slow)) <= 1e-10 * np.max(np.abs(slow))


@pytest.mark.parametrize("alpha", [2.5, -1j, 0.3 - 4.0j])
@pytest.mark.parametrize("kind", ["f2d", "p2d", "s2d"])
def test_linearity(small2d, kind, alpha):
    grid = cartesian_grid(BOX2, 0.25)
    a = indicator(small2d, kind, grid).values
    b = indicator(small2d.scaled(alpha), kind, grid).values
    assert np.max(np.abs(b - alpha * a)) <= 1e-12 * np.max(np.abs(alpha * a))


@pytest.mark.parametrize("kind", ["E", "H"])
def test_linearity_em(small_em, kind):
    grid = plane_slice(BOX3, 2, 0.1, 0.2)
    alpha = 1.5 - 0.5j
    a = indicator(small_em, kind, grid).values
    b = indicator(small_em.scaled(alpha), kind, grid).values
    assert np.max(np.abs(b - alpha * a)) <= 1e-12 * np.max(np.abs(alpha * a))


def test_determinism(small2d, small_em):
    g2 = cartesian_grid(BOX2, 0.1)
    np.testing.assert_array_equal(indicator_f_2d(small2d, g2).values, indicator_f_2d(small2d, g2).values)
    g3 = plane_slice(BOX3, 1, 0.0, 0.1)
    np.testing.assert_array_equal(indicator_E(small_em, g3).values, indicator_E(small_em, g3).values)


def test_rho_zero_equals_electric(small_em):
    grid = plane_slice(BOX3, 0, 0.25, 0.1)
    a = indicator_E(small_em, grid).values
    b = indicator_rho(small_em, zero_scalar(), grid).values
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


# ------------------------------------------------- prefactors vs 1D integrals

def _bump_profile(R, p=4):
    return lambda r: (1 - r * r / (R * R)) ** p


def _hankel2(b, R):
    return lambda k: 2 * np.pi * quad(lambda r: b(r) * j0(k * r) * r, 0, R, limit=200, epsabs=1e-13)[0]


def _hankel3(b, R):
    return lambda k: 4 * np.pi * quad(lambda r: b(r) * np.sinc(k * r / np.pi) * r * r, 0, R,
                                      limit=200, epsabs=1e-13)[0]


def test_f2d_prefactor_radial():
    R, a = 0.8, np.array([1.0, -2.0])
    params = ElasticParams(0.5, 1.3)
    fg = frequency_grid(0.25, 40)
    ds = synthesize_dataset(bump_source((0.0, 0.0), R, a), params, theta_circle(16), fg)
    got = indicator_f_2d(ds, cartesian_grid(([0.0, 0.0], [0.1, 0.1]), 0.2)).values[0, 0]
    B = _hankel2(_bump_profile(R), R)
    cp, cs = params.lam + 2 * params.mu, params.mu
    # sum over 16 equispaced directions of xhat xhat^T is 8 I exactly
    total = sum(w * (8 * B(w / math.sqrt(cp)) / cp + 8 * B(w / math.sqrt(cs)) / cs) for w in fg.values)
    expect = fg.delta / (2 * np.pi * 16) * total * a
    np.testing.assert_allclose(got, expect, rtol=1e-8)


def test_f3d_prefactor_radial():
    R, a = 0.7, np.array([0.5, 1.0, -1.5])
    params = ElasticParams(1.0, 0.8)
    fg = frequency_grid(0.5, 20)
    dirs = fibonacci_sphere(23)
    ds = synthesize_dataset(bump_source((0.0, 0.0, 0.0), R, a), params, dirs, fg)
    got = indicator_f_3d(ds, plane_slice(([0.0] * 3, [0.1] * 3), 2, 0.0, 0.2)).values[0, 0]
    B = _hankel3(_bump_profile(R), R)
    cp, cs = params.lam + 2 * params.mu, params.mu
    M = dirs.vectors.T @ dirs.vectors
    total = sum(w * w * (M @ a * B(w / math.sqrt(cp)) / cp ** 1.5 + (23 * a - M @ a) * B(w / math.sqrt(cs)) / cs ** 1.5)
                for w in fg.values)
    expect = fg.delta / (2 * np.pi ** 2 * 23) * total
    np.testing.assert_allclose(got, expect, rtol=1e-8)


def test_f3d_continuum_limit_at_centre():
    """With many frequencies the indicator at the centre tends to b(0) a."""
    R, a = 0.7, np.array([0.5, 1.0, -1.5])
    B = _hankel3(_bump_profile(R), R)
    # the x xT average only enters through its trace for an isotropic rule
    limit = quad(lambda k: k * k * B(k), 0, 200, limit=400)[0] / (2 * np.pi ** 2)
    assert limit == pytest.approx(1.0, abs=1e-3)


# ------------------------------------------------- reconstruction quality

def test_p_vanishes_for_divergence_free_2d():
    s = perp_gradient_bump((0.3, -0.2), 1.0)
    ds = synthesize_dataset(s, ELASTIC, theta_circle(51), frequency_grid(0.5, 80))
    grid = cartesian_grid(([-3, -3], [3, 3]), 0.02)
    p, sp = indicator_p_2d(ds, grid), indicator_s_2d(ds, grid)
    assert np.max(np.abs(p.values)) <= 0.05 * np.max(np.abs(sp.values))
    assert me.relative_l2_error(sp, s, real_part_only=True) <= 0.05


def test_p_and_s_of_gradient_bump_2d():
    s = gradient_bump((0.2, 0.1), 1.0)
    ds = synthesize_dataset(s, ELASTIC, theta_circle(61), frequency_grid(0.5, 80))
    grid = cartesian_grid(([-1.5, -1.5], [1.5, 1.5]), 0.02)
    p, sp = indicator_p_2d(ds, grid), indicator_s_2d(ds, grid)
    assert me.relative_l2_error(p, s, real_part_only=True) <= 0.05
    assert np.max(np.abs(sp.values)) <= 0.05 * np.max(np.abs(p.values))


def test_example_two_p_noisy_band():
    """Re(I_p) against div S with a 3h band, 30% noise, L = 51, top frequency 40."""
    s = example_two()
    ds = apply_noise(synthesize_dataset(s, ELASTIC, theta_circle(51), frequency_grid(0.5, 80)), 0.3, 0)
    grid = cartesian_grid(([-3, -3], [3, 3]), 0.01)
    err = me.relative_l2_error(indicator_p_2d(ds, grid), s, real_part_only=True, exclude_band=3 * grid.h)
    print(f"Re(I_p) error with 3h band: {err:.4f}")
    assert err <= 0.15


@pytest.fixture(scope="module")
def bump3d_data():
    s = bump_source((0.0, 0.0, 0.0), 0.8, (1.0, 0.5, -0.3))
    return s, synthesize_dataset(s, ELASTIC, fibonacci_sphere(151), frequency_grid(0.5, 60))


def test_f3d_bump_slice(bump3d_data):
    s, ds = bump3d_data
    grid = plane_slice(([-1.2] * 3, [1.2] * 3), 2, 0.1, 0.02)
    f = indicator_f_3d(ds, grid)
    assert me.relative_l2_error(f, s) <= 0.1
    assert me.relative_l2_error(indicator_p_3d(ds, grid), s, real_part_only=True) <= 0.1
    assert me.relative_l2_error(indicator_s_3d(ds, grid), s, real_part_only=True) <= 0.1


def test_p3d_vanishes_for_divergence_free():
    s = curl_bump((0.0, 0.0, 0.0), 0.8, (0.0, 0.3, 1.0))
    ds = synthesize_dataset(s, ELASTIC, fibonacci_sphere(151), frequency_grid(0.5, 60))
    grid = plane_slice(([-1.2] * 3, [1.2] * 3), 0, 0.0, 0.02)
    f, p = indicator_f_3d(ds, grid), indicator_p_3d(ds, grid)
    assert np.max(np.abs(p.values)) <= 0.05 * np.max(np.linalg.norm(np.abs(f.values), axis=-1))


@pytest.fixture(scope="module")
def em_bumps():
    rot = curl_bump((0.0, 0.0, 0.0), 0.6, (0.2, 0.3, 1.0))
    grad = gradient_bump((0.0, 0.0, 0.0), 0.6)
    fg = frequency_grid(0.5, 60)
    return {name: (s, synthesize_dataset(s, EM, fibonacci_sphere(121), fg)) for name, s in
            (("rot", rot), ("grad", grad))}


def test_E_and_H_on_rotational_source(em_bumps):
    s, ds = em_bumps["rot"]
    grid = plane_slice(([-1.0] * 3, [1.0] * 3), 1, 0.05, 0.02)
    assert me.relative_l2_error(indicator_E(ds, grid), s, real_part_only=True) <= 0.05
    assert me.relative_l2_error(indicator_H(ds, grid), s, real_part_only=True) <= 0.1


def test_H_vanishes_for_curl_free(em_bumps):
    grid = plane_slice(([-1.0] * 3, [1.0] * 3), 1, 0.05, 0.02)
    s_rot, ds_rot = em_bumps["rot"]
    _, ds_grad = em_bumps["grad"]
    scale = np.max(np.linalg.norm(me.reference_values("H", s_rot, grid), axis=-1))
    h = indicator_H(ds_grad, grid)
    assert np.max(np.linalg.norm(np.abs(h.values), axis=-1)) <= 0.05 * scale


def test_rho_recovers_non_radiating_gradient(em_bumps):
    """A gradient current radiates nothing; the charge term alone rebuilds it."""
    s, ds = em_bumps["grad"]
    assert np.max(np.abs(ds.blocks["E"])) <= 1e-12 * 1e3
    grid = plane_slice(([-1.0] * 3, [1.0] * 3), 2, -0.1, 0.02)
    assert np.max(np.abs(indicator_E(ds, grid).values)) <= 1e-9
    assert me.relative_l2_error(indicator_rho(ds, s.charge, grid), s, real_part_only=True) <= 0.05


def test_rho_example_four():
    s = example_four()
    ds = synthesize_dataset(s, EM, fibonacci_sphere(151), frequency_grid(0.5, 80))
    for axis in range(3):
        grid = plane_slice(([-1.0] * 3, [1.0] * 3), axis, 0.0, 0.01)
        err = me.relative_l2_error(indicator_rho(ds, s.charge, grid), s, real_part_only=True)
        print(f"I_rho slice z{axis + 1}=0: {err:.4f}")
        assert err <= 0.15


def test_example_one_threshold_mask_shrinks_with_L():
    s = example_one()
    grid = cartesian_grid(([-3, -3], [3, 3]), 0.01)
    inside = s.support.contains(grid.nodes()).reshape(grid.shape)
    frac = {}
    for L in (31, 71):
        ds = apply_noise(synthesize_dataset(s, ELASTIC, theta_circle(L), frequency_grid(0.5, 80)), 0.3, 0)
        mask = me.threshold_diff(indicator_f_2d(ds, grid), s, spec=me.ThresholdSpec(1.5), real_part_only=True)
        frac[L] = mask[inside][:, 0].mean()
    print(f"mask fraction inside support, first component: L=31 {frac[31]:.4f}, L=71 {frac[71]:.4f}")
    assert frac[71] <= frac[31]


def test_support_localization_noiseless():
    s = example_two()
    ds = synthesize_dataset(s, ELASTIC, theta_circle(101), frequency_grid(0.5, 80))
    f = indicator_f_2d(ds, cartesian_grid(([-3, -3], [3, 3]), 0.02))
    assert me.support_localization(f, s.support, 0.2) <= 0.1
