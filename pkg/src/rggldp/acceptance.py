"""Acceptance suite: one check per exit criterion, each with its own runtime budget.

Every check returns a ``CriterionResult``; ``run_all`` prints one line per
criterion. Used by ``rggldp verify`` and by ``tests/test_acceptance.py``.
"""
from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import (
    BoundaryMode,
    ModelParams,
    PointCloud,
    build_coloured_rgg,
    build_rgg,
    sample_points,
)
from .measures import (
    CountableMeasure,
    empirical_colour_measure,
    empirical_neighbourhood_measure,
    empirical_pair_measure,
    h_map,
)
from .montecarlo import coloured_typical_check, estimate_rate_slope, run_trials
from .rates import (
    PoissonLaw,
    eta1,
    eta_at_x,
    hc_d,
    optimal_conditional_delta,
    product_measure,
    rho,
    solve_a,
    xi1,
)

RHO_C_GRID = (0.5, 1.0, 2.0)
Y_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
D = 2


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    detail: str
    seconds: float
    budget: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d} {self.name}: {self.detail} ({self.seconds:.1f}s / {self.budget:g}s)"


def _c(rc: float) -> float:
    return rc / rho(D)


def brute_force_edges(points: np.ndarray, r: float, torus: bool) -> set[tuple[int, int]]:
    """All-pairs oracle, independent of the grid code."""
    n = len(points)
    iu, ju = np.triu_indices(n, k=1)
    diff = np.abs(points[:, None, :] - points[None, :, :])
    if torus:
        diff = np.minimum(diff, 1.0 - diff)
    d2 = np.sum(diff * diff, axis=-1)
    mask = d2[iu, ju] <= r * r
    return set(zip(iu[mask].tolist(), ju[mask].tolist()))


def check_eta1_zero():
    worst = max(eta1(PoissonLaw(rc).as_measure(), D, _c(rc)) for rc in RHO_C_GRID)
    return worst <= 1e-9, f"max eta1(Poisson(rho c)) = {worst:.3e} (tol 1e-9)"


def check_xi1_zero():
    worst_val = worst_res = 0.0
    for rc in RHO_C_GRID:
        y = math.exp(-rc)
        worst_val = max(worst_val, abs(xi1(y, D, _c(rc))))
        a = solve_a(y, D, _c(rc))
        worst_res = max(worst_res, abs(a * -math.expm1(-a) - rc * (1 - y)))
    ok = worst_val <= 1e-8 and worst_res <= 1e-10
    return ok, f"max |xi1(e^-rho c)| = {worst_val:.3e} (tol 1e-8), max residual = {worst_res:.3e} (tol 1e-10)"


def check_contraction():
    worst = 0.0
    for rc, y in itertools.product(RHO_C_GRID, Y_GRID):
        c = _c(rc)
        worst = max(worst, abs(eta1(optimal_conditional_delta(y, D, c), D, c) - xi1(y, D, c)))
    return worst <= 1e-8, f"max |eta1(delta*) - xi1| = {worst:.3e} over {len(RHO_C_GRID) * len(Y_GRID)} points (tol 1e-8)"


def random_degree_law(rng: np.random.Generator, max_support: int = 10, max_degree: int = 20) -> CountableMeasure:
    size = int(rng.integers(1, max_support + 1))
    support = np.sort(rng.choice(max_degree + 1, size=size, replace=False))
    w = rng.dirichlet(np.ones(size))
    return CountableMeasure(dict(zip(support.tolist(), w.tolist())))


def check_minimiser_at_mean(count: int = 1000, seed: int = 4):
    rng = np.random.default_rng(seed)
    failures = []
    for i in range(count):
        delta = random_degree_law(rng)
        rc = RHO_C_GRID[i % 3]
        m = delta.mean()
        base = eta_at_x(delta, m, D, _c(rc))
        for eps in (0.01, 0.1, 1.0):
            diff = eta_at_x(delta, m + eps, D, _c(rc)) - base
            if not diff > 0:
                failures.append((m, rc, eps, diff))
    detail = f"{len(failures)} of {3 * count} (delta, eps) cases have eta^(<d>+eps) - eta^<d> <= 0"
    if failures:
        m, rc, eps, diff = min(failures, key=lambda f: f[3])
        below = sum(f[0] < f[1] for f in failures)
        detail += f"; worst at <d>={m:.3f}, rho c={rc}, eps={eps}: {diff:.3e}; {below} of them have <d> < rho c"
    return not failures, detail


def random_hc_instance(rng: np.random.Generator):
    k = int(rng.integers(1, 5))
    C = rng.exponential(1.0, (k, k)) * (rng.random((k, k)) < 0.8)
    C = np.triu(C) + np.triu(C, 1).T
    if not C.any():
        C[0, 0] = 1.0
    omega = CountableMeasure(dict(enumerate(rng.dirichlet(np.ones(k)).tolist())))
    w = rng.exponential(1.0, (k, k)) * (rng.random((k, k)) < 0.8)
    w = np.triu(w) + np.triu(w, 1).T
    varpi = CountableMeasure({(a, b): w[a, b] for a in range(k) for b in range(k)})
    return varpi, omega, C


def check_hc_nonnegative(count: int = 1000, seed: int = 5):
    rng = np.random.default_rng(seed)
    lowest = math.inf
    worst_eq = 0.0
    for _ in range(count):
        varpi, omega, C = random_hc_instance(rng)
        d = int(rng.integers(1, 4))
        lowest = min(lowest, hc_d(varpi, omega, C, d))
        equal = product_measure(C, omega).scaled(rho(d))
        worst_eq = max(worst_eq, abs(hc_d(equal, omega, C, d)))
    ok = lowest >= -1e-12 and worst_eq <= 1e-12
    return ok, f"min value = {lowest:.3e} (>= -1e-12), max at equality = {worst_eq:.3e} (<= 1e-12)"


def random_coloured_params(rng: np.random.Generator, n: int, d: int, mode: str) -> ModelParams:
    k = int(rng.integers(1, 5))
    C = rng.uniform(0.2, 4.0, (k, k)) * (rng.random((k, k)) < 0.8)
    C = np.triu(C) + np.triu(C, 1).T
    if not C.any():
        C[0, 0] = 1.0
    return ModelParams(d=d, n=n, C=C, nu=rng.dirichlet(np.ones(k)), mode=mode,
                       seed=int(rng.integers(2**32)))


def check_h_identity(count: int = 100, seed: int = 6):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(count):
        params = random_coloured_params(rng, int(rng.integers(1, 501)), int(rng.integers(1, 4)),
                                        str(rng.choice(["cube", "torus"])))
        cg = build_coloured_rgg(sample_points(params.n, params.d, params.seed), params, params.seed + 1)
        h1, h2 = h_map(empirical_neighbourhood_measure(cg))
        l1, l2 = empirical_colour_measure(cg), empirical_pair_measure(cg)
        if h1.counts != l1.counts or h2.counts != l2.counts:
            bad += 1
    return bad == 0, f"{count - bad}/{count} graphs with exact integer-count equality"


def check_grid_oracle(count: int = 500, seed: int = 7):
    rng = np.random.default_rng(seed)
    bad = 0
    for i in range(count):
        d = 1 + i % 3
        mode = BoundaryMode.TORUS if i % 2 else BoundaryMode.CUBE
        n = int(rng.integers(0, 301))
        if rng.random() < 0.5:
            r = min((rng.uniform(0.2, 8.0) / max(n, 1)) ** (1 / d), 1.0)
        else:
            r = float(rng.uniform(0.01, 1.0))
        cloud = PointCloud(d, rng.random((n, d)))
        if build_rgg(cloud, r, mode).edge_set() != brute_force_edges(cloud.points, r, mode == BoundaryMode.TORUS):
            bad += 1
    return bad == 0, f"{count - bad}/{count} instances match the all-pairs oracle"


def check_typical_values():
    s = run_trials(ModelParams(d=D, n=2000, c=_c(1.0), mode="torus", seed=8), 200)
    dev_iso = abs(s.mean_isolated - math.exp(-1))
    dev_deg = abs(s.mean_degree - 1.0)
    ok = dev_iso <= 3 * s.se_isolated and dev_deg <= 3 * s.se_degree
    return ok, (f"mean D(0) = {s.mean_isolated:.5f} vs e^-1 (|dev| = {dev_iso / s.se_isolated:.2f} SE); "
                f"mean degree = {s.mean_degree:.5f} vs 1 (|dev| = {dev_deg / s.se_degree:.2f} SE)")


def check_slope_probe(trials: int = 100_000, mode: str = "torus"):
    params = ModelParams(d=D, n=50, c=_c(1.0), mode=mode, seed=9)
    ests = estimate_rate_slope(params, 0.55, (50, 100), trials)
    ok = all(e.log_rate is not None and 0.02 <= e.log_rate <= 0.08 for e in ests)
    parts = [f"n={e.n}: hits={e.hits}, -log(p)/n = {e.log_rate if e.log_rate is None else round(e.log_rate, 4)}"
             for e in ests]
    return ok, f"{'; '.join(parts)} (bracket [0.02, 0.08], xi1(0.55) = {ests[0].reference_rate:.4f})"


def check_coloured_typical(trials: int = 20):
    params = ModelParams(d=D, n=2000, C=np.full((2, 2), _c(1.0)), nu=[0.5, 0.5], mode="torus", seed=10)
    rep = coloured_typical_check(params, trials, n_ladder=(500, 2000))
    z = np.abs(rep.mean - rep.target) / rep.se
    j500, j2000 = rep.ladder[500], rep.ladder[2000]
    ok = bool(rep.within(3.0).all()) and j2000 < j500
    return ok, (f"max |mean - target| = {z.max():.2f} SE over {z.size} colour pairs; "
                f"rate_J: n=500 -> {j500:.4f}, n=2000 -> {j2000:.4f}")


def check_b_equals_a_identity():
    worst = 0.0
    for rc in RHO_C_GRID:
        for y in np.linspace(0.0, 0.99, 100):
            a = solve_a(float(y), D, _c(rc))
            lhs = (a * a + rc * rc - 2 * rc * a * (1 - y)) / (2 * rc)
            rhs = rc * y * (2 - y) / 2 + (a - rc * (1 - y)) ** 2 / (2 * rc)
            worst = max(worst, abs(lhs - rhs))
    return worst <= 1e-10, f"max |lhs - rhs| = {worst:.3e} on 300 (y, rho c) points (tol 1e-10)"


CRITERIA: list[tuple[int, str, float, Callable]] = [
    (1, "eta1 vanishes at Poisson(rho c)", 1, check_eta1_zero),
    (2, "xi1 vanishes at e^-rho c", 1, check_xi1_zero),
    (3, "contraction identity eta1(delta*) = xi1", 5, check_contraction),
    (4, "eta^x minimised at x = <delta>", 10, check_minimiser_at_mean),
    (5, "H_C^d nonnegative, zero at equality", 5, check_hc_nonnegative),
    (6, "exact h_map identity on sampled graphs", 30, check_h_identity),
    (7, "grid RGG equals brute force", 60, check_grid_oracle),
    (8, "typical D(0) and mean degree", 120, check_typical_values),
    (9, "LDP slope probe at y = 0.55", 600, check_slope_probe),
    (10, "coloured typical law", 180, check_coloured_typical),
    (11, "algebraic identity at b = a", 1, check_b_equals_a_identity),
]


def run_criterion(number: int) -> CriterionResult:
    num, name, budget, fn = next(c for c in CRITERIA if c[0] == number)
    t0 = time.perf_counter()
    ok, detail = fn()
    dt = time.perf_counter() - t0
    return CriterionResult(num, name, bool(ok) and dt < budget, detail, dt, budget)


def run_all(numbers=None, echo: Callable[[str], None] = print) -> list[CriterionResult]:
    results = []
    for num, *_ in CRITERIA:
        if numbers is not None and num not in numbers:
            continue
        res = run_criterion(num)
        echo(res.line())
        results.append(res)
    return results
