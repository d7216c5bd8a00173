"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. Every tolerance is pinned
here; the dense oracles (numpy eigh/pinv/expm) are independent of the
factorization path they check.
"""

import time

import numpy as np
import scipy.linalg

from cauchygft.bench import bench_cut, bench_nodes, loglog_slope, series
from cauchygft.factorization import factorize
from cauchygft.filters import (
    CallableFilter,
    FilterBank,
    FilterLayerConfig,
    apply_layer,
    eval_bank,
    heat_filter,
)
from cauchygft.graph import Graph, barabasi_albert, build_laplacian, dense_eig
from cauchygft.partition import build_plan
from cauchygft.plan import plan_from_leaves
from cauchygft.sparsify import (
    ResistanceEstimate,
    SparsifyPolicy,
    sparsify_interface,
    verify_spectral_bound,
)
from cauchygft.secular import deflate, rank_one_update_factor, solve_secular


def report(criterion: str, passed: bool, detail: str) -> None:
    print(f"\n[{criterion}] {'PASS' if passed else 'FAIL'} ({detail})")


def test_criterion_1_exactness():
    """Sorted factorized eigenvalues and the reconstructed operator match the
    dense oracle on 50 seeded preferential-attachment graphs."""
    t0 = time.perf_counter()
    sizes = (50, 100, 200, 300)
    worst_lam = worst_rec = 0.0
    for seed in range(50):
        n = sizes[seed % 4]
        g = barabasi_albert(n, 2, seed=seed)
        plan = build_plan(g, seed=seed).plan
        f = factorize(g, plan)
        lap = build_laplacian(g)
        w, _ = dense_eig(lap)
        worst_lam = max(worst_lam, float(np.max(np.abs(np.sort(f.lambda_final) - w))))
        dense = lap.dense()
        rec = f.reconstruct_operator(f.lambda_final)
        worst_rec = max(
            worst_rec,
            float(np.linalg.norm(rec - dense) / np.linalg.norm(dense)),
        )
    elapsed = time.perf_counter() - t0
    passed = worst_lam <= 1e-8 and worst_rec <= 1e-8 and elapsed <= 120
    report(
        "criterion 1: exactness",
        passed,
        f"max |lambda - dense| = {worst_lam:.2e}, "
        f"max rel recon err = {worst_rec:.2e}, {elapsed:.1f}s",
    )
    assert worst_lam <= 1e-8
    assert worst_rec <= 1e-8
    assert elapsed <= 120


def test_criterion_2_secular_oracle():
    """500 random rank-one updates, clustered spectra included: eigenvalues
    match the dense oracle, interleaving strict, trace conserved."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240817)
    worst_eig = worst_trace = 0.0
    interleaving_ok = True
    for trial in range(500):
        n = int(rng.integers(2, 201))
        style = trial % 4
        if style == 0:
            lam = np.sort(rng.uniform(0.0, 4.0, n))
        elif style == 1:
            base = np.sort(rng.uniform(0.0, 4.0, max(1, n // 4)))
            lam = np.sort(rng.choice(base, size=n))
        elif style == 2:
            lam = np.sort(rng.uniform(0.0, 4.0, n))
            lam[1::3] = lam[0::3][: lam[1::3].size] + 10.0 ** rng.uniform(
                -8, -5, lam[1::3].size
            )
            lam = np.sort(lam)
        else:
            lam = np.sort(rng.uniform(0.0, 1.0, n) * 10.0 ** rng.integers(-2, 2, n))
        z = rng.standard_normal(n)
        z[rng.random(n) < 0.1] = 0.0
        z /= max(np.linalg.norm(z), 1e-3)
        rho = float(rng.uniform(0.25, 2.0))

        rec = deflate(lam, z, rho=rho)
        if rec.kept.size:
            d = lam[rec.kept]
            sol = solve_secular(d, rec.z_deflated, rho)
            if not (
                np.all(sol.lambda_new > d)
                and np.all(sol.lambda_new[:-1] < d[1:])
            ):
                interleaving_ok = False
            znorm2 = rho * float(rec.z_deflated @ rec.z_deflated)
            worst_trace = max(
                worst_trace,
                sol.trace_defect / (1.0 + abs(float(np.sum(d))) + znorm2),
            )
        _, lam_new = rank_one_update_factor(lam, z, rho)
        oracle = np.linalg.eigvalsh(np.diag(lam) + rho * np.outer(z, z))
        err = np.abs(np.sort(lam_new) - oracle) / (1.0 + np.abs(oracle))
        worst_eig = max(worst_eig, float(err.max()))
    elapsed = time.perf_counter() - t0
    passed = (
        worst_eig <= 1e-10 and interleaving_ok and worst_trace <= 1e-10
        and elapsed <= 60
    )
    report(
        "criterion 2: secular oracle equivalence",
        passed,
        f"max eig err = {worst_eig:.2e}, max trace defect = {worst_trace:.2e}, "
        f"interleaving {'strict' if interleaving_ok else 'VIOLATED'}, {elapsed:.1f}s",
    )
    assert worst_eig <= 1e-10
    assert interleaving_ok
    assert worst_trace <= 1e-10
    assert elapsed <= 60


def test_criterion_3_quadratic_scaling():
    """Factorization runtime grows ~quadratically in n; the dense baseline is
    cubic and loses by n = 4000."""
    t0 = time.perf_counter()
    records = bench_nodes(
        [500, 1000, 2000, 4000, 8000],
        m=2, seed=0, repeats=1, k_target=5, levels=2, ed_max=4000,
    )
    cf_n, cf_t = series(records, "CF")
    ed_n, ed_t = series(records, "ED")
    cf_slope = loglog_slope(
        [n for n in cf_n if n >= 1000], [t for n, t in zip(cf_n, cf_t) if n >= 1000]
    )
    ed_slope = loglog_slope(
        [n for n in ed_n if n <= 2000], [t for n, t in zip(ed_n, ed_t) if n <= 2000]
    )
    cf_4000 = dict(zip(cf_n, cf_t))[4000]
    ed_4000 = dict(zip(ed_n, ed_t))[4000]
    elapsed = time.perf_counter() - t0
    passed = (
        1.6 <= cf_slope <= 2.6
        and 2.5 <= ed_slope <= 3.5
        and cf_4000 < ed_4000
        and elapsed <= 900
    )
    report(
        "criterion 3: quadratic scaling",
        passed,
        f"CF slope = {cf_slope:.2f} (want [1.6, 2.6]), "
        f"ED slope = {ed_slope:.2f} (want [2.5, 3.5]), "
        f"CF(4000) = {cf_4000:.1f}s vs ED(4000) = {ed_4000:.1f}s, {elapsed:.0f}s",
    )
    assert 1.6 <= cf_slope <= 2.6
    assert 2.5 <= ed_slope <= 3.5
    assert cf_4000 < ed_4000
    assert elapsed <= 900


def test_criterion_4_linear_in_k():
    """At fixed n = 2000 the factorization time is ~linear in the interface
    size while preprocessing stays flat."""
    t0 = time.perf_counter()
    records = bench_cut([2, 4, 8, 16, 32], n=2000, m=2, seed=0, repeats=1)
    ks, ts = series(records, "CF", key="k")
    kp, tp = series(records, "PRE", key="k")
    slope = loglog_slope(ks, ts)
    pre_var = max(tp) / min(tp)
    elapsed = time.perf_counter() - t0
    passed = 0.6 <= slope <= 1.4 and pre_var < 2.0 and elapsed <= 600
    report(
        "criterion 4: linear-in-k scaling",
        passed,
        f"CF slope = {slope:.2f} (want [0.6, 1.4]), "
        f"PRE variation = {pre_var:.2f}x (want < 2x), {elapsed:.0f}s",
    )
    assert 0.6 <= slope <= 1.4
    assert pre_var < 2.0
    assert elapsed <= 600


def test_criterion_5_sparsifier_guarantee():
    """Interface sampling keeps quadratic-form extremes inside (0.4, 1.6) on
    >= 90% of seeds and is unbiased in expectation (3 sigma)."""
    t0 = time.perf_counter()
    # dense preferential-attachment graphs: redundant interfaces are the
    # regime sparsification targets (sparse-BA cuts carry too much leverage
    # per edge for any half-rate sample; see the cut-size measurements)
    inside = 0
    seeds = 20
    for seed in range(seeds):
        g = barabasi_albert(200, 40, seed=seed)
        res = build_plan(
            g, force_levels=1, max_levels=1,
            sparsify=SparsifyPolicy(keep_fraction=0.5, eps_jl=0.5), seed=seed,
        )
        rep = verify_spectral_bound(
            build_laplacian(g), build_laplacian(res.graph), eps=0.5,
            trials=50, seed=seed,
        )
        inside += rep.ratio_min > 0.4 and rep.ratio_max < 1.6

    # Monte Carlo unbiasedness of the sampler itself
    rng = np.random.default_rng(99)
    edges = [(0, 3, 1.0), (1, 3, 2.0), (1, 4, 0.5), (2, 4, 1.5), (2, 5, 1.0)]
    resist = ResistanceEstimate(
        edges=[(u, v) for u, v, _ in edges],
        values=rng.uniform(0.3, 1.0, len(edges)),
        projection_dim=0,
        epsilon_jl=0.5,
    )
    trials = 10000
    acc = np.zeros((6, 6))
    acc2 = np.zeros((6, 6))
    for seed in range(trials):
        out = sparsify_interface(edges, resist, keep_fraction=0.5, seed=seed)
        lap = np.zeros((6, 6))
        for u, v, w in out.kept_edges:
            lap[u, u] += w
            lap[v, v] += w
            lap[u, v] -= w
            lap[v, u] -= w
        acc += lap
        acc2 += lap * lap
    mean = acc / trials
    target = np.zeros((6, 6))
    for u, v, w in edges:
        target[u, u] += w
        target[v, v] += w
        target[u, v] -= w
        target[v, u] -= w
    stderr = np.sqrt(np.maximum(acc2 / trials - mean**2, 0.0) / trials)
    unbiased = bool(np.all(np.abs(mean - target) <= 3.0 * stderr + 1e-12))
    elapsed = time.perf_counter() - t0
    passed = inside >= 18 and unbiased and elapsed <= 180
    report(
        "criterion 5: sparsifier guarantee",
        passed,
        f"band hits = {inside}/{seeds} (want >= 18), "
        f"sampler unbiased = {unbiased}, {elapsed:.0f}s",
    )
    assert inside >= 18
    assert unbiased
    assert elapsed <= 180


def test_criterion_6_filter_layer_identities():
    """Unit filters give the identity, monomials give Laplacian powers, the
    heat response matches the dense matrix exponential."""
    t0 = time.perf_counter()
    g = barabasi_albert(150, 2, seed=2)
    half = g.n // 2
    plan = plan_from_leaves(g, [list(range(half)), list(range(half, g.n))])
    f = factorize(g, plan)
    lap = build_laplacian(g).dense()
    rng = np.random.default_rng(4)
    x = rng.standard_normal((g.n, 3))

    ident = apply_layer(f, FilterLayerConfig(), x)
    ident_err = float(np.linalg.norm(ident - x) / np.linalg.norm(x))

    poly_ok = True
    poly_worst = 0.0
    for d in (1, 2, 3):
        cfg = FilterLayerConfig(global_filter=CallableFilter(lambda lam, d=d: lam**d))
        got = apply_layer(f, cfg, x)
        want = np.linalg.matrix_power(lap, d) @ x
        rel = float(np.linalg.norm(got - want) / np.linalg.norm(lap) ** d)
        poly_worst = max(poly_worst, rel)
        poly_ok &= rel <= 1e-6

    heat = apply_layer(f, FilterLayerConfig(global_filter=heat_filter(1.0)), x)
    heat_want = scipy.linalg.expm(-lap) @ x
    heat_err = float(np.max(np.abs(heat - heat_want)))

    elapsed = time.perf_counter() - t0
    passed = ident_err <= 1e-8 and poly_ok and heat_err <= 1e-7 and elapsed <= 60
    report(
        "criterion 6: filter-layer identities",
        passed,
        f"identity err = {ident_err:.2e}, worst poly rel err = {poly_worst:.2e}, "
        f"heat err = {heat_err:.2e}, {elapsed:.1f}s",
    )
    assert ident_err <= 1e-8
    assert poly_ok
    assert heat_err <= 1e-7
    assert elapsed <= 60


def test_criterion_7_partition_of_unity():
    """Every normalized bank sums to one across filters on a 1000-point grid."""
    grid = np.linspace(0.0, 1.0, 1000)
    worst = 0.0
    banks = [
        FilterBank.spline(num_basis=4, normalize=True),
        FilterBank.spline(num_basis=8, normalize=True),
        FilterBank.spline(
            num_basis=6,
            coefficients=np.random.default_rng(0).uniform(0.1, 1.0, (3, 6)),
            normalize=True,
        ),
        FilterBank.rbf(num_basis=4, normalize=True),
        FilterBank.rbf(num_basis=9, normalize=True),
    ]
    for bank in banks:
        rows = eval_bank(bank, grid).sum(axis=1)
        worst = max(worst, float(np.max(np.abs(rows - 1.0))))
    passed = worst <= 1e-9
    report(
        "criterion 7: partition of unity",
        passed,
        f"max |sum - 1| = {worst:.2e} over {len(banks)} banks",
    )
    assert worst <= 1e-9


def test_criterion_8_deflation_end_to_end():
    """Fully degenerate spectra and parallel bridge edges factorize exactly,
    driving both deflation cases through the whole pipeline."""
    t0 = time.perf_counter()
    worst = 0.0

    def run(g, leaf_sets):
        nonlocal worst
        plan = plan_from_leaves(g, leaf_sets)
        f = factorize(g, plan)
        w, _ = dense_eig(build_laplacian(g))
        worst = max(worst, float(np.max(np.abs(np.sort(f.lambda_final) - w))))

    for n in (8, 16, 30):
        edges = [(i, j, 1.0) for i in range(n) for j in range(i + 1, n)]
        g = Graph.from_edges(n, edges)
        half = n // 2
        run(g, [list(range(half)), list(range(half, n))])
        quarter = n // 4
        run(
            g,
            [
                list(range(quarter)),
                list(range(quarter, half)),
                list(range(half, half + quarter)),
                list(range(half + quarter, n)),
            ],
        )

    # duplicate-parallel bridges: complete bipartite interfaces between
    # identical leaves collapse to repeated spectra (Householder case), and
    # rotated updates deflate to near-empty supports (zero case)
    g = Graph.from_edges(
        4, [(0, 1, 1.0), (2, 3, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 2, 1.0), (1, 3, 1.0)]
    )
    run(g, [[0, 1], [2, 3]])
    g = Graph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (0, 3, 1.0)])
    run(g, [[0, 1], [2, 3]])
    star_edges = [(0, i, 1.0) for i in range(1, 12)]
    g = Graph.from_edges(12, star_edges)
    run(g, [list(range(6)), list(range(6, 12))])

    elapsed = time.perf_counter() - t0
    passed = worst <= 1e-8
    report(
        "criterion 8: deflation end to end",
        passed,
        f"max eigenvalue err = {worst:.2e}, {elapsed:.1f}s",
    )
    assert worst <= 1e-8
