import json

import numpy as np
import pytest

import neharilab as nl
from neharilab.errors import (
    DegenerateGrid,
    GridError,
    LengthMismatch,
    ProfileNotInX,
    SnapshotError,
)


def test_radial_nodes_follow_graded_midpoint_formula():
    g = nl.build_radial_grid(20.0, 256, 2.0)
    assert g.nodes[0] == pytest.approx(20.0 * (0.5 / 256) ** 2, rel=1e-15)
    assert g.nodes[0] > 0.0
    i = np.arange(256)
    assert g.nodes == pytest.approx(20.0 * ((i + 0.5) / 256) ** 2, rel=1e-15)
    assert np.all(np.diff(g.nodes) > 0.0)


def test_radial_weights_positive_across_configs():
    for R, M, grading in ((10.0, 64, 1.0), (20.0, 256, 2.0), (12.0, 512, 3.0), (16.0, 128, 1.5)):
        g = nl.build_radial_grid(R, M, grading)
        assert np.all(g.weights > 0.0)


def test_constant_function_mass_exact():
    g = nl.build_radial_grid(10.0, 512, 2.0)
    total = nl.integrate(g, np.ones(g.M))
    assert total == pytest.approx(10.0**3 / 3.0, rel=1e-10)


def test_monomial_exactness_k_le_2():
    g = nl.build_radial_grid(10.0, 512, 2.0)
    for k in range(3):
        exact = 10.0 ** (k + 3) / (k + 3)
        assert nl.integrate(g, g.nodes**k) == pytest.approx(exact, rel=1e-9)


def test_gaussian_moment_oracle():
    # int_0^inf e^{-r^2} r^2 dr = sqrt(pi)/4, tail beyond R=10 is ~1e-44
    g = nl.build_radial_grid(10.0, 512, 2.0)
    val = nl.integrate(g, np.exp(-g.nodes**2))
    assert val == pytest.approx(np.sqrt(np.pi) / 4.0, rel=1e-8)


def test_refinement_convergence_factor():
    prev = None
    diffs = []
    for M in (32, 64, 128, 256, 512):
        g = nl.build_radial_grid(10.0, M, 2.0)
        val = nl.integrate(g, np.exp(-g.nodes**2))
        if prev is not None:
            diffs.append(abs(val - prev))
        prev = val
    for a, b in zip(diffs, diffs[1:]):
        if a > 1e-13 * abs(prev):
            assert b < a / 3.0


def test_degenerate_grid_rejected():
    with pytest.raises(DegenerateGrid):
        nl.build_radial_grid(10.0, 8)


def test_higher_dimension_radial_grid():
    # the radial machinery carries arbitrary N >= 3 (the measure is r^(N-1) dr)
    g = nl.build_radial_grid(10.0, 256, 2.0, dim=4)
    assert nl.integrate(g, np.ones(g.M)) == pytest.approx(10.0**4 / 4.0, rel=1e-10)
    assert g.omega == pytest.approx(2 * np.pi**2, rel=1e-14)  # S^3 measure


def test_integrate_is_monotone_under_domination(rng):
    g = nl.build_radial_grid(10.0, 64, 2.0)
    f = rng.uniform(0.0, 1.0, g.M)
    assert nl.integrate(g, f) <= nl.integrate(g, f + 0.5)
    assert nl.integrate(g, np.zeros(g.M)) == 0.0


def test_integrate_length_mismatch():
    g = nl.build_radial_grid(10.0, 64, 2.0)
    with pytest.raises(LengthMismatch):
        nl.integrate(g, np.ones(65))


# --- cartesian -----------------------------------------------------------------

def test_cartesian_construction():
    g = nl.build_cartesian_grid(8.0, 16)
    assert g.h == pytest.approx(1.0)
    assert g.points.shape == (4096, 3)
    assert np.min(np.linalg.norm(g.points, axis=1)) > 0.0


def test_cartesian_odd_m_rejected():
    with pytest.raises(GridError):
        nl.build_cartesian_grid(8.0, 15)
    with pytest.raises(DegenerateGrid):
        nl.build_cartesian_grid(8.0, 4)


def test_cartesian_volume_partition():
    g = nl.build_cartesian_grid(8.0, 16)
    assert nl.integrate(g, np.ones(g.size)) == pytest.approx((2 * 8.0) ** 3, rel=1e-13)


def test_cartesian_symmetry_under_axis_permutation():
    g = nl.build_cartesian_grid(4.0, 8)
    pts = {tuple(np.round(p, 12)) for p in g.points}
    for perm in ((1, 0, 2), (2, 1, 0), (0, 2, 1)):
        assert {tuple(np.round(p[list(perm)], 12)) for p in g.points} == pts


def test_cartesian_gaussian_integral():
    g = nl.build_cartesian_grid(6.0, 24)
    val = nl.integrate(g, np.exp(-np.linalg.norm(g.points, axis=1) ** 2))
    assert val == pytest.approx(np.pi**1.5, rel=1e-2)


# --- profiles -----------------------------------------------------------------

def test_gaussian_profile_near_origin(grid):
    u = nl.sample_profile("gaussian", 1.0, grid)
    assert u.values[0] == pytest.approx(np.exp(-grid.nodes[0] ** 2), rel=1e-14)


def test_inverse_poly_profile_definition(grid):
    u = nl.sample_profile("inverse_poly", 1.0, grid, beta=1.0)
    assert u.values == pytest.approx((1 + grid.nodes**2) ** -1.0, rel=1e-14)


def test_profile_scaling_composition(grid):
    # the graded grid with half the radius has nodes exactly r_i / 2, so
    # sample(sigma=2) on the full grid must equal sample(sigma=1) there
    half = nl.build_radial_grid(grid.R / 2.0, grid.M, grid.grading)
    assert half.nodes == pytest.approx(grid.nodes / 2.0, rel=1e-15)
    for family, beta in (("gaussian", None), ("inverse_poly", 1.5), ("sobolev_bump", None)):
        u2 = nl.sample_profile(family, 2.0, grid, beta=beta)
        base = nl.sample_profile(family, 1.0, half, beta=beta)
        assert u2.values == pytest.approx(base.values, rel=1e-13, abs=1e-300)


def test_slow_decay_profile_warns(grid):
    with pytest.warns(ProfileNotInX):
        nl.sample_profile("inverse_poly", 1.0, grid, beta=0.4)


def test_positive_cone_membership(grid):
    u = nl.sample_profile("sobolev_bump", 2.0, grid)
    assert u.in_positive_cone
    zero = nl.GridFunction(grid, np.zeros(grid.M))
    assert not zero.in_positive_cone


# --- snapshots -----------------------------------------------------------------

def test_grid_function_shape_checked(grid):
    with pytest.raises(LengthMismatch):
        nl.GridFunction(grid, np.ones(grid.M + 1))
    with pytest.raises(GridError):
        nl.GridFunction(grid, np.full(grid.M, np.nan))


def test_snapshot_roundtrip_bit_exact(tmp_path, grid, params, rng):
    u = nl.GridFunction(grid, rng.uniform(0.0, 1.0, grid.M))
    path = tmp_path / "snap.json"
    nl.save_snapshot(path, u, params=params, extra={"lambda": 0.25})
    loaded, prm_dict, extra = nl.load_snapshot(path)
    assert np.array_equal(loaded.values, u.values)  # bit-exact
    assert loaded.grid.R == grid.R and loaded.grid.M == grid.M
    assert prm_dict["alpha"] == params.alpha
    assert extra["lambda"] == 0.25


def test_snapshot_checksum_detects_corruption(tmp_path, grid):
    u = nl.GridFunction(grid, np.linspace(0.0, 1.0, grid.M))
    path = tmp_path / "snap.json"
    nl.save_snapshot(path, u)
    doc = json.loads(path.read_text())
    doc["values"][3] = doc["values"][3] + 1.0
    path.write_text(json.dumps(doc))
    with pytest.raises(SnapshotError):
        nl.load_snapshot(path)
