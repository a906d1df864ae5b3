"""Acceptance gate: ten numbered criteria, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v`` (add ``-s`` to see the
quantitative detail printed by each criterion). Thresholds marked
"frozen" were calibrated once from oracle runs and then fixed.
"""

import itertools
import time

import numpy as np
from scipy.optimize import linear_sum_assignment

from lotmap.cli import parse_config, run_experiment
from lotmap.embedding import (
    SolverConfig,
    SquaredDistanceMatrix,
    compute_transport_maps,
    lot_wassmap,
    mds,
    wassmap,
)
from lotmap.evaluation import (
    check_perturbation_bound,
    instrument,
    procrustes_align,
)
from lotmap.lot import (
    TransportMap,
    barycentric_projection,
    empirical_lot_distance,
    transport_map_matrix,
)
from lotmap.measures import (
    GaussianSpec,
    generate_circle_translation,
    generate_grid_translation,
    sample_gaussian,
)
from lotmap.solvers import (
    HALF_SQUARED,
    SQUARED,
    CostMatrix,
    cost_matrix,
    solve_exact,
    solve_sinkhorn,
    transport_cost,
)


def _passed(number, detail):
    print(f"criterion {number}: PASS ({detail})")


def _uniform(k):
    return np.full(k, 1.0 / k)


def test_criterion_01_exact_solver_oracle_equivalence():
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(50):
        k = int(rng.integers(2, 9))
        values = rng.random((k, k))
        costs = CostMatrix(np.ascontiguousarray(values), SQUARED)
        plan = solve_exact(costs, _uniform(k), _uniform(k))
        rows, cols = linear_sum_assignment(values)
        oracle = values[rows, cols].sum() / k
        worst = max(worst, abs((plan.mass * values).sum() - oracle))
    assert worst <= 1e-9

    worst_1d = 0.0
    for _ in range(50):
        k = int(rng.integers(2, 65))
        x = rng.standard_normal((k, 1))
        y = rng.standard_normal((k, 1))
        cost = cost_matrix(x, y)
        plan = solve_exact(cost, _uniform(k), _uniform(k))
        oracle = ((np.sort(x[:, 0]) - np.sort(y[:, 0])) ** 2).mean()
        worst_1d = max(
            worst_1d, abs(transport_cost(plan, cost) - oracle)
        )
    assert worst_1d <= 1e-9
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0
    _passed(1, f"assignment gap {worst:.2e}, 1d gap {worst_1d:.2e}, "
               f"{elapsed:.2f}s")


def test_criterion_02_sinkhorn_correctness():
    # Displaced standard-normal clouds keep the transport cost scale
    # well above the beta=0.01 entropic bias (calibrated: the objective
    # gap stays under 0.03% over 20 seeds).
    worst_marginal = 0.0
    worst_gap = 0.0
    for seed in range(3):
        rng = np.random.default_rng(200 + seed)
        x = rng.standard_normal((32, 2))
        y = rng.standard_normal((32, 2)) + np.array([3.0, 4.0])
        a, b = _uniform(32), _uniform(32)
        half = cost_matrix(x, y, HALF_SQUARED)
        full = cost_matrix(x, y)
        exact_obj = transport_cost(solve_exact(full, a, b), full)

        objectives = []
        for beta in (1.0, 0.1, 0.01):
            # Small beta converges slowly, so request just under the
            # criterion's 1e-6 marginal bound rather than a tight 1e-9;
            # the margin absorbs plan-reconstruction roundoff.
            res = solve_sinkhorn(half, a, b, beta=beta, tol=9e-7,
                                 max_iter=200000)
            assert res.converged
            col_err = np.abs(res.plan.mass.sum(axis=0) - b).max()
            worst_marginal = max(worst_marginal, col_err)
            objectives.append(2.0 * transport_cost(res.plan, half))
        assert objectives[1] <= objectives[0] + 1e-6
        assert objectives[2] <= objectives[1] + 1e-6
        gap = abs(objectives[2] - exact_obj) / exact_obj
        worst_gap = max(worst_gap, gap)
    assert worst_marginal <= 1e-6
    assert worst_gap <= 0.01
    _passed(2, f"marginal {worst_marginal:.2e}, beta=0.01 objective gap "
               f"{100 * worst_gap:.4f}%")


def test_criterion_03_mds_exact_recovery():
    rng = np.random.default_rng(301)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(5, 51))
        d = int(rng.integers(1, 6))
        if d >= n:
            d = n - 1
        truth = rng.standard_normal((n, d)) * 2.0
        truth -= truth.mean(axis=0)
        diff = truth[:, None, :] - truth[None, :, :]
        dist = SquaredDistanceMatrix((diff ** 2).sum(axis=2))
        res = mds(dist, d)
        worst = max(
            worst, procrustes_align(res.coordinates, truth).absolute_error
        )
    assert worst <= 1e-8
    _passed(3, f"worst Procrustes error {worst:.2e} over 20 configs")


def test_criterion_04_gram_distance_identity():
    rng = np.random.default_rng(401)
    worst = 0.0
    for _ in range(10):
        n_maps = int(rng.integers(3, 12))
        m = int(rng.integers(10, 60))
        maps = [TransportMap(rng.standard_normal((m, 2)) * 2.0)
                for _ in range(n_maps)]
        tmat = transport_map_matrix(maps)
        lam = np.zeros((n_maps, n_maps))
        for i in range(n_maps):
            for j in range(n_maps):
                lam[i, j] = empirical_lot_distance(maps[i], maps[j]) ** 2
        j_mat = np.eye(n_maps) - np.ones((n_maps, n_maps)) / n_maps
        resid = tmat.matrix.T @ tmat.matrix + 0.5 * j_mat @ lam @ j_mat
        worst = max(worst, np.abs(resid).max())
    assert worst <= 1e-10
    _passed(4, f"max residual {worst:.2e} over 10 map matrices")


def test_criterion_05_algorithm_equivalence():
    ds = generate_circle_translation(
        10, 8.0, np.array([[1.0, -0.5], [-0.5, 1.0]]), 0.5, 150, 150, 7
    )
    solver = SolverConfig()
    res = lot_wassmap(ds, solver, 2)
    maps, _ = compute_transport_maps(ds, solver)
    lam = np.zeros((10, 10))
    for i, j in itertools.combinations(range(10), 2):
        lam[i, j] = lam[j, i] = empirical_lot_distance(maps[i], maps[j]) ** 2
    alt = mds(SquaredDistanceMatrix(lam), 2)
    err = procrustes_align(res.coordinates, alt.coordinates).absolute_error
    assert err <= 1e-8
    _passed(5, f"SVD route vs MDS route Procrustes error {err:.2e}")


def test_criterion_06_perturbation_bound():
    rng = np.random.default_rng(601)
    checked = 0
    for _ in range(100):
        n = int(rng.integers(6, 21))
        d = int(rng.integers(2, 4))
        truth = rng.standard_normal((n, d)) * 2.0
        truth -= truth.mean(axis=0)
        diff = truth[:, None, :] - truth[None, :, :]
        delta = (diff ** 2).sum(axis=2)
        sing = np.linalg.svd(truth, compute_uv=False)
        pinv_norm = 1.0 / sing[-1]
        # Keep ||Y+|| sqrt(N) sqrt(tau2) <= 1/sqrt(2) with margin.
        tau2 = float(rng.uniform(0.1, 0.9)) / (2.0 * n * pinv_norm ** 2)
        noise = rng.uniform(-tau2, tau2, size=(n, n))
        noise = (noise + noise.T) / 2.0
        np.fill_diagonal(noise, 0.0)
        lam = np.maximum(delta + noise, 0.0)
        np.fill_diagonal(lam, 0.0)
        emb = mds(SquaredDistanceMatrix(lam), d)
        report = check_perturbation_bound(
            truth, lam, emb.coordinates, tau2=tau2
        )
        assert report.hypothesis_ok
        assert report.lhs <= report.rhs
        checked += 1
    assert checked == 100
    _passed(6, f"bound held in {checked}/100 trials with hypothesis ok")


def test_criterion_07_closed_form_isometry():
    ss = np.random.SeedSequence((7000, 0))
    r_ref, r_mu, r_nu = [np.random.default_rng(c) for c in ss.spawn(3)]
    ref = sample_gaussian(GaussianSpec(np.zeros(2), np.eye(2)), 2000, r_ref)
    mu = sample_gaussian(GaussianSpec(np.zeros(2), np.eye(2)), 2000, r_mu)
    nu = sample_gaussian(
        GaussianSpec(np.array([3.0, 4.0]), np.eye(2)), 2000, r_nu
    )
    maps = []
    for target in (mu, nu):
        cost = cost_matrix(ref.points, target.points)
        plan = solve_exact(cost, ref.weights, target.weights)
        maps.append(barycentric_projection(plan, target.points, ref.points))
    dist = empirical_lot_distance(maps[0], maps[1])
    # Bures closed form for equal covariances: |mean gap| = 5.
    # Frozen: 20-repeat Monte Carlo put the worst deviation at 1.17%.
    rel = abs(dist - 5.0) / 5.0
    assert rel <= 0.05
    _passed(7, f"LOT distance {dist:.4f}, deviation {100 * rel:.2f}%")


def test_criterion_08_experiment_one_reproduction(tmp_path):
    start = time.perf_counter()
    cfg = parse_config({
        "experiment": "circle-translation",
        "solver": "exact",
        "m_sweep": [125, 1000, 2000],
        "trials": 10,
        "seed": 0,
        "output_dir": str(tmp_path / "exp1"),
    })
    report = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    means = {a.m: a.mean_relative_error for a in report.aggregates}
    # Frozen from the calibration run (observed 0.00595 at m=1000).
    assert means[1000] < 0.02
    assert means[2000] < means[125]
    assert elapsed < 300.0
    _passed(8, f"mean error m=1000 {means[1000]:.4f}, "
               f"m=125 {means[125]:.4f} > m=2000 {means[2000]:.4f}, "
               f"{elapsed:.0f}s")


def test_criterion_09_timing_advantage():
    ds = generate_grid_translation(
        5, (-10.0, 10.0), np.array([[1.0, -0.5], [-0.5, 1.0]]), 0.5,
        500, 500, 11,
    )
    solver = SolverConfig()
    lot_rec = instrument(lambda: lot_wassmap(ds, solver, 2))
    w_rec = instrument(lambda: wassmap(ds, solver, 2))
    assert lot_rec.ot_solve_count == 25
    assert w_rec.ot_solve_count == 300
    assert lot_rec.total_seconds < w_rec.total_seconds
    _passed(9, f"25 vs 300 solves, {lot_rec.total_seconds:.2f}s vs "
               f"{w_rec.total_seconds:.2f}s")


def test_criterion_10_deterministic_aggregates(tmp_path):
    def run(tag, jobs):
        cfg = parse_config({
            "experiment": "rotation",
            "n_measures": 5,
            "m_sweep": [16, 24],
            "trials": 3,
            "seed": 13,
            "jobs": jobs,
            "output_dir": str(tmp_path / tag),
        })
        run_experiment(cfg)
        return (tmp_path / tag / "rotation" / "aggregate.csv").read_bytes()

    first = run("a", 1)
    second = run("b", 1)
    threaded = run("c", 4)
    assert first == second
    assert first == threaded
    _passed(10, f"aggregate.csv identical across reruns and jobs "
                f"({len(first)} bytes)")
