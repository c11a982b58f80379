import numpy as np
import pytest

from geoaug.errors import DegenerateNormalError, ParameterError
from geoaug.geom import Ray
from geoaug.mesh import marching_cubes, mesh_intersect_batch
from geoaug.sdf import (
    Box,
    Capsule,
    GridField,
    PerturbedField,
    Plane,
    Sphere,
    Union,
    march_visibility,
    ray_march_visibility,
    sdf_normal,
    sphere_trace_first_hit,
    trace_first_hit,
)

UNIT = Sphere([0, 0, 0], 1.0)
PAIR = Union([Sphere([0, 0, 0], 1.0), Sphere([1.8, 0, 0], 0.6)], bounds=([-1.5, -1.5, -1.5], [2.9, 1.5, 1.5]))


def unit_rows(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def test_primitive_distances():
    assert UNIT.distance([2.0, 0, 0]) == pytest.approx(1.0)
    assert UNIT.distance([0.0, 0, 0]) == pytest.approx(-1.0)
    box = Box([0, 0, 0], [1, 2, 3])
    assert box.distance([2.0, 0, 0]) == pytest.approx(1.0)
    assert box.distance([2.0, 3.0, 0]) == pytest.approx(np.sqrt(2))
    assert box.distance([0.0, 0, 0]) == pytest.approx(-1.0)
    assert Plane([0, 0, 2], 1.0).distance([5.0, 5, 3]) == pytest.approx(2.0)
    cap = Capsule([0, 0, 0], [0, 0, 2], 0.5)
    assert cap.distance([1.0, 0, 1]) == pytest.approx(0.5)
    assert cap.distance([0.0, 0, 3]) == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        Sphere([0, 0, 0], 0.0)
    with pytest.raises(ParameterError):
        Union([Plane([0, 0, 1])])  # unbounded without explicit bounds


@pytest.mark.parametrize(
    "field",
    [UNIT, Box([0.2, 0, 0], [0.5, 1, 0.3]), Plane([1, 2, 3], 0.4), Capsule([0, 0, 0], [1, 1, 0], 0.3), PAIR],
    ids=["sphere", "box", "plane", "capsule", "union"],
)
def test_lipschitz_one(field):
    rng = np.random.default_rng(0)
    p = rng.uniform(-3, 3, (10_000, 3))
    q = rng.uniform(-3, 3, (10_000, 3))
    assert np.all(np.abs(field.distance(p) - field.distance(q)) <= np.linalg.norm(p - q, axis=1) + 1e-12)


def test_union_is_exact_min():
    p = np.random.default_rng(1).uniform(-2, 3, (1000, 3))
    expect = np.minimum(PAIR.members[0].distance(p), PAIR.members[1].distance(p))
    assert np.array_equal(PAIR.distance(p), expect)


def test_normals():
    np.testing.assert_allclose(sdf_normal(UNIT, [1.0, 0, 0]), [1, 0, 0], atol=1e-5)
    plane = Union([Plane([0, 0, 1])], bounds=([-1, -1, -1], [1, 1, 1]))
    for p in ([0.3, -0.2, 0.0], [5.0, 1.0, 2.0]):
        np.testing.assert_allclose(sdf_normal(plane, p), [0, 0, 1], atol=1e-12)
    p = np.array([-1.0, 0.3, 0.2])
    p = p / np.linalg.norm(p)  # on the first sphere, far from the second
    np.testing.assert_allclose(sdf_normal(PAIR, p), p, atol=1e-4)
    with pytest.raises(DegenerateNormalError):
        sdf_normal(UNIT, [0.0, 0, 0])


def test_visibility_examples():
    assert ray_march_visibility(UNIT, [1.0, 0, 0], [1.0, 0, 0]).visible
    assert not ray_march_visibility(UNIT, [1.0, 0, 0], [-1.0, 0, 0]).visible
    # a ray from the big sphere toward the small one is blocked
    assert not ray_march_visibility(PAIR, [1.0, 0, 0], [1.0, 0, 0]).visible
    # the same point looking away escapes
    assert ray_march_visibility(PAIR, [-1.0, 0, 0], [-1.0, 0, 0]).visible
    # stopping short of the occluder counts as visible
    assert ray_march_visibility(PAIR, [1.0, 0, 0], [1.0, 0, 0], max_dist=0.1).visible


def test_visibility_validation():
    with pytest.raises(ParameterError):
        ray_march_visibility(UNIT, [1.0, 0, 0], [1.0, 0, 0], eps=0.0)
    with pytest.raises(ParameterError):
        ray_march_visibility(UNIT, [1.0, 0, 0], [1.0, 0, 0], lift=-1.0)


def test_visibility_monotone_in_eps():
    rng = np.random.default_rng(2)
    n = 2000
    starts = unit_rows(rng.standard_normal((n, 3)))
    dirs = unit_rows(rng.standard_normal((n, 3)))
    lift = 3e-3
    prev = None
    for eps in (1e-4, 1e-3, 1e-2, 5e-2):
        vis, _, _ = march_visibility(PAIR, starts, dirs, eps=eps, lift=lift)
        if prev is not None:
            # invisible at a smaller eps stays invisible at a larger one
            assert not np.any(~prev & vis)
        prev = vis


def test_sphere_trace_examples():
    hit = sphere_trace_first_hit(UNIT, Ray([0, 0, -3.0], [0, 0, 1.0]))
    assert hit is not None
    point, t = hit
    np.testing.assert_allclose(point, [0, 0, -1], atol=1e-3)
    assert t == pytest.approx(2.0, abs=1e-3)
    assert sphere_trace_first_hit(UNIT, Ray([0, 0, -3.0], [0, 1.0, 0])) is None


def test_trace_agrees_with_mesh_oracle():
    mesh = marching_cubes(PAIR, 64)
    rng = np.random.default_rng(3)
    n = 1000
    # origins on a shell around the scene, aimed at jittered interior points
    origins = np.array([0.7, 0, 0]) + 5.0 * unit_rows(rng.standard_normal((n, 3)))
    targets = rng.uniform([-1.5, -1.5, -1.5], [2.9, 1.5, 1.5], (n, 3))
    dirs = unit_rows(targets - origins)
    hit, t, _ = trace_first_hit(PAIR, origins, dirs)
    t_mesh, _ = mesh_intersect_batch(mesh, origins, dirs)
    hit_mesh = ~np.isnan(t_mesh)
    assert np.mean(hit == hit_mesh) >= 0.99
    both = hit & hit_mesh
    assert both.sum() > 300
    # a ray agrees when both miss, or both hit within two voxels; tangent
    # grazes that pass within eps of a silhouette account for the rest
    close = np.zeros(len(hit), bool)
    close[both] = np.abs(t[both] - t_mesh[both]) <= 2 * mesh.voxel_size
    assert np.mean(close | (~hit & ~hit_mesh)) >= 0.99


def test_grid_field_corners_and_monotone_edges(tmp_path):
    grid = GridField.sample(PAIR, 12)
    idx = np.stack(np.meshgrid(*[np.arange(12)] * 3, indexing="ij"), axis=-1)
    corners = grid.lo + idx * grid.spacing
    assert np.array_equal(grid.distance(corners), grid.values)
    # along an axis-aligned edge the interpolant stays between its end values
    a = grid.lo + np.array([3, 4, 5]) * grid.spacing
    b = a + np.array([grid.spacing[0], 0, 0])
    s = np.linspace(0, 1, 33)[:, None]
    vals = grid.distance(a + s * (b - a))
    assert np.all(np.diff(vals) * np.sign(vals[-1] - vals[0]) >= -1e-15)
    grid.save(tmp_path / "g.grid")
    back = GridField.load(tmp_path / "g.grid")
    np.testing.assert_allclose(back.values, grid.values.astype(np.float32))
    np.testing.assert_allclose(back.lo, grid.lo)


def test_perturbed_field_stays_close():
    pert = PerturbedField(UNIT, 0.05, 0.5, seed=4)
    p = np.random.default_rng(5).uniform(-1, 1, (500, 3))
    assert np.all(np.abs(pert.distance(p) - UNIT.distance(p)) <= 0.05 + 1e-12)
    assert pert.step_scale < 1.0
