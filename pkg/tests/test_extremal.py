import numpy as np
import pytest

import neharilab as nl
from neharilab.errors import EmptyFamily
from neharilab.extremal import (
    DescentOptions,
    estimate_lambda_star,
    family_sweep,
    refine_descent,
)
from neharilab.fibering import lambda_e, lambda_n, scale_triple


def test_family_sweep_pinned_gaussian_lattice(params, grid):
    # single gaussian family over sigma in {0.5, 1, 2}: the lattice argmin is
    # its own oracle; value pinned as a regression fixture (R=16, M=128, g=2)
    val, best, trace = family_sweep([("gaussian", None)], [0.5, 1.0, 2.0], grid, params)
    assert len(trace) == 3
    assert val == pytest.approx(min(e.value for e in trace), rel=0)
    assert val == pytest.approx(1.7390513300045138, rel=1e-9)
    assert np.all([e.value >= val for e in trace])


def test_family_sweep_scale_invariance(params, grid):
    # Lambda_n is 0-homogeneous: doubling a profile's amplitude leaves its value
    u = nl.sample_profile("gaussian", 1.0, grid)
    t1 = nl.reduced_triple(u, params)
    t2 = nl.reduced_triple(u.scaled(2.0), params)
    assert float(lambda_n(t2, params.p, params.q)) == pytest.approx(
        float(lambda_n(t1, params.p, params.q)), rel=1e-12
    )


def test_family_sweep_empty_rejected(params, grid):
    with pytest.raises(EmptyFamily):
        family_sweep([], [1.0], grid, params)
    with pytest.raises(EmptyFamily):
        family_sweep([("gaussian", None)], [], grid, params)


def test_refine_descent_decreases_from_sweep_winner(params, grid):
    _, start, _ = family_sweep([("gaussian", None)], [0.5, 1.0, 2.0], grid, params)
    start_val = float(lambda_n(nl.reduced_triple(start, params), params.p, params.q))
    val, minimizer, history = refine_descent(start, params)
    assert val <= start_val
    assert history == sorted(history, reverse=True)  # monotone decrease
    assert minimizer.in_positive_cone


def test_refine_descent_multi_start_consistency(params, grid):
    vals = []
    for family, beta, sigma in (("gaussian", None, 1.0), ("inverse_poly", 1.5, 0.7)):
        start = nl.sample_profile(family, sigma, grid, beta=beta)
        val, _, _ = refine_descent(start, params)
        vals.append(val)
    assert abs(vals[0] - vals[1]) <= 0.01 * min(vals)


def test_estimate_upper_bound_property(params, grid, estimate):
    # every evaluated lattice profile certifies Lambda_n(u) >= reported lambda*
    for entry in estimate.sweep_trace:
        assert entry.value >= estimate.lambda_star - 1e-12 * estimate.lambda_star
    assert estimate.lambda_star > 0.0


def test_estimate_regression_value(estimate):
    # regression fixture on the test grid (R=16, M=128, grading=2)
    assert estimate.lambda_star == pytest.approx(1.16854, rel=1e-3)


def test_lambda_sub_exact_ratio(params, estimate):
    ratio = nl.fibering_constants(params.p, params.q).ratio
    assert estimate.lambda_sub == pytest.approx(ratio * estimate.lambda_star, rel=1e-12)


def test_lambda_e_pointwise_ratio_on_lattice(params, grid):
    # independently minimizing Lambda_e over the same lattice yields
    # ratio * (Lambda_n minimum): the two lattices share argmins
    ratio = nl.fibering_constants(params.p, params.q).ratio
    vals_n, vals_e = [], []
    for sigma in (0.5, 0.7, 1.0, 1.4, 2.0):
        u = nl.sample_profile("gaussian", sigma, grid)
        t = nl.reduced_triple(u, params)
        vals_n.append(float(lambda_n(t, params.p, params.q)))
        vals_e.append(float(lambda_e(t, params.p, params.q)))
        assert vals_e[-1] == pytest.approx(ratio * vals_n[-1], rel=1e-12)
    assert min(vals_e) == pytest.approx(ratio * min(vals_n), rel=1e-10)


def test_descent_zero_gradient_no_move(params, grid, estimate):
    # restarting at the converged minimizer moves (almost) nowhere
    val0 = float(lambda_n(nl.reduced_triple(estimate.minimizer, params), params.p, params.q))
    val, _, history = refine_descent(estimate.minimizer, params,
                                     DescentOptions(max_iters=40))
    assert val <= val0
    assert val == pytest.approx(val0, rel=1e-6)


def test_truncation_radius_sensitivity_report(params):
    from neharilab.extremal import r_sensitivity

    rows = r_sensitivity(params, (12.0, 16.0, 20.0), M=96,
                         opts=DescentOptions(max_iters=100))
    assert [R for R, _ in rows] == [12.0, 16.0, 20.0]
    deltas = [abs(b[1] - a[1]) for a, b in zip(rows, rows[1:])]
    assert deltas[1] < deltas[0]  # truncation effect shrinks with R


def test_grid_refinement_shrinking_delta(params):
    opts = DescentOptions(max_iters=120)
    vals = []
    for M in (64, 128, 256):
        g = nl.build_radial_grid(16.0, M, 2.0)
        est = estimate_lambda_star(params, g, opts=opts)
        vals.append(est.lambda_star)
    d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
    assert d2 < d1  # refinement delta shrinks


def test_trace_csv_output(tmp_path, estimate):
    path = tmp_path / "trace.csv"
    estimate.write_trace_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "family,beta,sigma,lambda_n"
    assert len(lines) == len(estimate.sweep_trace) + 1
