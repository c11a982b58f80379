import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoaug.errors import (
    DegeneratePairError,
    InsufficientSamplesError,
    ParameterError,
    UnderdeterminedError,
)
from geoaug.sh import (
    RadianceSampleSet,
    ShExpansion,
    eval_sh_basis,
    fit_sh,
    fit_sh_adaptive,
    fit_sh_batch,
    geodesic_distance,
    interpolate_batch,
    interpolate_from_set,
    mean_leverage,
    num_coeffs,
    penalty_weights,
    query_sh,
    slerp_radiance,
)
from oracles import interpolate_brute, sh_closed_form

Y00 = 0.5 / math.sqrt(math.pi)


def uniform_dirs(n, seed):
    v = np.random.default_rng(seed).standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_expansion(l_max, seed, scale=0.2):
    rng = np.random.default_rng(seed)
    c = scale * rng.standard_normal((num_coeffs(l_max), 3))
    c[0] = 0.5 / Y00
    return ShExpansion(l_max, c)


unit_vectors = st.tuples(*[st.floats(-1, 1)] * 3).filter(lambda v: np.linalg.norm(v) > 1e-3)


# ---------------------------------------------------------------- basis


def test_constant_basis():
    for d in [(0, 0, 1), (1, 2, 3), (-1, 0, 0)]:
        assert eval_sh_basis(0, np.array(d, float)) == pytest.approx([0.28209479177387814], abs=1e-15)


def test_band_one_on_z_axis():
    got = eval_sh_basis(1, np.array([0.0, 0.0, 1.0]))
    np.testing.assert_allclose(got, [Y00, 0.0, math.sqrt(3 / (4 * math.pi)), 0.0], atol=1e-15)


@given(unit_vectors)
def test_band_two_matches_closed_form(d):
    np.testing.assert_allclose(eval_sh_basis(2, np.array(d)), sh_closed_form(2, d), atol=1e-12)


def test_basis_shape_and_range_errors():
    assert eval_sh_basis(3, uniform_dirs(5, 0)).shape == (5, 16)
    with pytest.raises(ParameterError):
        eval_sh_basis(-1, np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ParameterError):
        eval_sh_basis(9, np.array([0.0, 0.0, 1.0]))


def test_orthonormality_monte_carlo():
    d = uniform_dirs(1_000_000, 1)
    y = eval_sh_basis(3, d)
    gram = 4 * math.pi * (y.T @ y) / len(d)
    np.testing.assert_allclose(gram, np.eye(16), atol=5e-3)


# ---------------------------------------------------------------- fitting


def test_constant_fit_ridge_zero():
    dirs = uniform_dirs(20, 2)
    s = RadianceSampleSet(np.full((20, 3), 0.5), dirs)
    exp = fit_sh(s, l_max=0, ridge=0.0)
    np.testing.assert_allclose(exp.coeffs[0], 0.5 * 2 * math.sqrt(math.pi), atol=1e-12)
    np.testing.assert_allclose(query_sh(exp, uniform_dirs(7, 3)), 0.5, atol=1e-9)


def test_band_limited_recovery_ridge_zero():
    gen = random_expansion(2, 4)
    dirs = uniform_dirs(50, 5)
    s = RadianceSampleSet(query_sh(gen, dirs, clamp=False), dirs)
    exp = fit_sh(s, l_max=2, ridge=0.0)
    np.testing.assert_allclose(exp.coeffs, gen.coeffs, atol=1e-6)
    held = uniform_dirs(100, 6)
    np.testing.assert_allclose(query_sh(exp, held, clamp=False), query_sh(gen, held, clamp=False), atol=1e-6)


def test_exact_interpolant_residual():
    gen = random_expansion(2, 7)
    dirs = uniform_dirs(9, 8)
    colors = query_sh(gen, dirs, clamp=False)
    exp = fit_sh(RadianceSampleSet(colors, dirs), 2, 0.0)
    assert np.max(np.abs(query_sh(exp, dirs, clamp=False) - colors)) < 1e-9


def test_residual_non_increasing_in_l_max():
    rng = np.random.default_rng(9)
    dirs = uniform_dirs(60, 10)
    colors = rng.uniform(0, 1, (60, 3))
    s = RadianceSampleSet(colors, dirs)
    res = []
    for l_max in range(5):
        exp = fit_sh(s, l_max, 0.0)
        res.append(np.sum((query_sh(exp, dirs, clamp=False) - colors) ** 2))
    assert all(b <= a + 1e-12 for a, b in zip(res, res[1:]))


def test_underdetermined_without_ridge():
    dirs = uniform_dirs(5, 11)
    s = RadianceSampleSet(np.zeros((5, 3)), dirs)
    with pytest.raises(UnderdeterminedError):
        fit_sh(s, l_max=2, ridge=0.0)
    fit_sh(s, l_max=2, ridge=1e-4)  # ridge makes it solvable


def test_clustered_ridge_is_stable_where_plain_solve_is_singular():
    # A ridge can never beat unregularized least squares on residual at the
    # sample directions; what it buys is a bounded solution.
    rng = np.random.default_rng(12)
    axis = np.array([0.0, 0.0, 1.0])
    d = axis + 0.05 * rng.standard_normal((10, 3))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    colors = rng.uniform(0.2, 0.8, (10, 3))
    a = eval_sh_basis(2, d)
    assert np.linalg.cond(a.T @ a) > 1e12
    pinv = np.linalg.pinv(a) @ colors  # minimum-norm least squares
    exp = fit_sh(RadianceSampleSet(colors, d), 2, 1e-3)
    assert np.all(np.isfinite(exp.coeffs))
    assert np.linalg.norm(exp.coeffs) <= np.linalg.norm(pinv)
    r_ridge = np.sum((a @ exp.coeffs - colors) ** 2)
    r_pinv = np.sum((a @ pinv - colors) ** 2)
    assert r_pinv <= r_ridge <= np.sum(colors**2)


def test_batch_fit_with_mask_matches_single():
    rng = np.random.default_rng(13)
    dirs = uniform_dirs(40, 14).reshape(2, 20, 3)
    cols = rng.uniform(0, 1, (2, 20, 3))
    mask = np.ones((2, 20), bool)
    mask[1, 12:] = False
    batch = fit_sh_batch(dirs, cols, 2, 1e-4, mask)
    single = fit_sh(RadianceSampleSet(cols[1, :12], dirs[1, :12]), 2, 1e-4)
    np.testing.assert_allclose(batch[1], single.coeffs, atol=1e-10)


def test_laplacian_penalty_leaves_mean_free():
    w = penalty_weights(2, "laplacian")
    assert w[0] == 0.0 and list(w[1:4]) == [2, 2, 2] and list(w[4:]) == [6] * 5
    dirs = uniform_dirs(12, 15)
    s = RadianceSampleSet(np.full((12, 3), 0.4), dirs)
    exp = fit_sh(s, 2, 1e-4, penalty="laplacian")
    np.testing.assert_allclose(query_sh(exp, uniform_dirs(30, 16)), 0.4, atol=1e-12)
    with pytest.raises(ParameterError):
        fit_sh(s, 2, 1e-4, penalty="bogus")


def test_leverage_oracle_and_adaptive_bands():
    rng = np.random.default_rng(17)
    spread = uniform_dirs(30, 18)[None]
    q = uniform_dirs(5, 19)[None]
    a = eval_sh_basis(2, spread[0])
    y = eval_sh_basis(2, q[0])
    inv = np.linalg.inv(a.T @ a + 1e-4 * np.eye(9))
    expect = np.mean([yy @ inv @ yy for yy in y])
    assert mean_leverage(spread, q, 2, 1e-4)[0] == pytest.approx(expect, rel=1e-10)
    # directions along one great circle cannot pin down l=2 off that circle
    t = rng.uniform(0, 2 * np.pi, 30)
    ring = np.stack([np.cos(t), np.sin(t), np.zeros(30)], axis=1)[None]
    off = np.array([[[0.0, 0.0, 1.0]]])
    both_dirs = np.concatenate([spread, ring])
    both_q = np.concatenate([q[:, :1], off])
    cols = rng.uniform(0, 1, (2, 30, 3))
    coeffs, bands = fit_sh_adaptive(both_dirs, cols, both_q, 2, 1e-4, penalty="laplacian", max_leverage=10.0)
    assert bands.tolist() == [2, 0]
    np.testing.assert_allclose(coeffs[1, 1:], 0.0)
    _, all_bands = fit_sh_adaptive(both_dirs, cols, both_q, 2, 1e-4, penalty="laplacian")
    assert all_bands.tolist() == [2, 2]


# ---------------------------------------------------------------- query


def test_query_constant_red():
    c = np.zeros((1, 3))
    c[0] = 2 * math.sqrt(math.pi) * np.array([1.0, 0.0, 0.0])
    np.testing.assert_allclose(query_sh(ShExpansion(0, c), uniform_dirs(10, 20)), [[1, 0, 0]] * 10, atol=1e-12)


def test_query_clamps_negative():
    c = np.zeros((4, 3))
    c[0] = 0.1
    c[2] = -5.0
    exp = ShExpansion(1, c)
    d = np.array([0.0, 0.0, 1.0])
    assert np.all(query_sh(exp, d, clamp=False) < 0)
    assert np.all(query_sh(exp, d) == 0.0)


@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 10_000))
@settings(max_examples=50)
def test_query_linear_in_coefficients(a, b, seed):
    e1, e2 = random_expansion(2, seed), random_expansion(2, seed + 1)
    mix = ShExpansion(2, a * e1.coeffs + b * e2.coeffs)
    d = uniform_dirs(4, seed)
    lhs = query_sh(mix, d, clamp=False)
    rhs = a * query_sh(e1, d, clamp=False) + b * query_sh(e2, d, clamp=False)
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_expansion_text_round_trip():
    e = random_expansion(2, 21)
    text = e.to_text()
    assert text.splitlines()[0].strip() == "2" and len(text.splitlines()) == 10
    back = ShExpansion.from_text(text)
    assert np.array_equal(back.coeffs, e.coeffs)


# ---------------------------------------------------------------- geodesics and interpolation


def test_geodesic_examples():
    assert geodesic_distance([1, 0, 0], [0, 1, 0]) == pytest.approx(math.pi / 2)
    assert geodesic_distance([1, 0, 0], [1, 0, 0]) == 0.0
    assert geodesic_distance([1, 0, 0], [-1, 0, 0]) == pytest.approx(math.pi)


def test_geodesic_triangle_inequality():
    a, b, c = (uniform_dirs(1000, s) for s in (22, 23, 24))
    assert np.all(geodesic_distance(a, c) <= geodesic_distance(a, b) + geodesic_distance(b, c) + 1e-9)


def test_slerp_endpoints_and_midpoint():
    c1, c2 = np.array([1.0, 0.2, 0.0]), np.array([0.0, 0.4, 1.0])
    v1, v2 = np.array([1.0, 0, 0]), np.array([0, 1.0, 0])
    np.testing.assert_array_equal(slerp_radiance(v1, (c1, v1), (c2, v2)), c1)
    np.testing.assert_array_equal(slerp_radiance(v2, (c1, v1), (c2, v2)), c2)
    mid = np.array([1.0, 1.0, 0.0]) / math.sqrt(2)
    np.testing.assert_allclose(slerp_radiance(mid, (c1, v1), (c2, v2)), (c1 + c2) / 2, atol=1e-12)
    # the printed weighting swaps the endpoints
    np.testing.assert_allclose(slerp_radiance(v1, (c1, v1), (c2, v2), literal=True), c2)
    with pytest.raises(DegeneratePairError):
        slerp_radiance(v1, (c1, v1), (c2, v1))


@given(st.floats(0, 1))
def test_slerp_weights_convex_on_arc(s):
    v1, v2 = np.array([1.0, 0, 0]), np.array([0, 0, 1.0])
    th = s * math.pi / 2
    target = np.array([math.cos(th), 0, math.sin(th)])
    out = slerp_radiance(target, (np.ones(3), v1), (np.zeros(3), v2))
    assert np.all((out >= -1e-12) & (out <= 1 + 1e-12))


def test_interpolate_examples():
    s = RadianceSampleSet(np.array([[1.0, 0, 0], [0, 0, 1.0]]), np.array([[1.0, 0, 0], [0, 1.0, 0]]))
    np.testing.assert_array_equal(interpolate_from_set([1, 0, 0], s), [1, 0, 0])
    far = RadianceSampleSet(
        np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]]),
        np.array([[1.0, 0.1, 0], [1.0, -0.2, 0], [-1.0, 0, 0]]),
    )
    out = interpolate_from_set([-1.0, 0, 0], far)
    # the coincident sample is the nearest, so it is in the pair and reproduced
    np.testing.assert_allclose(out, [0, 0, 1.0], atol=1e-12)
    out2 = interpolate_from_set([1.0, 0, 0], far)
    assert out2[2] == 0.0  # the farthest sample is excluded
    with pytest.raises(InsufficientSamplesError):
        interpolate_from_set([1, 0, 0], RadianceSampleSet(np.zeros((1, 3)), np.array([[1.0, 0, 0]])))


def test_interpolate_matches_brute_force():
    rng = np.random.default_rng(25)
    for seed in range(20):
        dirs = uniform_dirs(20, 100 + seed)
        cols = rng.uniform(0, 1, (20, 3))
        target = uniform_dirs(1, 200 + seed)[0]
        got = interpolate_from_set(target, RadianceSampleSet(cols, dirs))
        np.testing.assert_allclose(got, interpolate_brute(target, dirs, cols), atol=1e-12)


def test_interpolate_batch_matches_scalar():
    rng = np.random.default_rng(26)
    dirs = uniform_dirs(3 * 15, 27).reshape(3, 15, 3)
    cols = rng.uniform(0, 1, (3, 15, 3))
    targets = uniform_dirs(3 * 4, 28).reshape(3, 4, 3)
    mask = np.ones((3, 15), bool)
    mask[2, 5:] = False
    out = interpolate_batch(targets, dirs, cols, mask)
    for p in range(3):
        s = RadianceSampleSet(cols[p, mask[p]], dirs[p, mask[p]])
        for m in range(4):
            np.testing.assert_allclose(out[p, m], interpolate_from_set(targets[p, m], s), atol=1e-12)
