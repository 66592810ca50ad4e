"""Ensemble simulation: typical values, tail probabilities and rate probes.

Trial ``t`` of a run seeded with ``seed`` draws its points from the stream
``SeedSequence(seed, spawn_key=(t, 0))`` and its colours from
``(t, 1)``. Results therefore depend only on ``(params, trial index)``,
not on execution order or worker count.
"""
from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .exceptions import InvalidParameterError
from .geometry import ModelParams, build_graph
from .measures import (
    CountableMeasure,
    empirical_neighbourhood_measure,
    empirical_pair_measure,
    neighbour_colour_counts,
)
from .rates import rate_J, rho, xi1


def trial_seed(seed: int, trial: int, stream: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(seed), spawn_key=(int(trial), int(stream)))


def build_trial_graph(params: ModelParams, trial: int):
    return build_graph(params, trial_seed(params.seed, trial, 0), trial_seed(params.seed, trial, 1))


def _plain(g):
    return g.graph if hasattr(g, "graph") else g


def _degree_chunk(params: ModelParams, trials: range):
    rows = []
    for t in trials:
        g = _plain(build_trial_graph(params, t))
        deg = g.degrees
        rows.append((t, int((deg == 0).sum()), g.num_edges, np.bincount(deg)))
    return rows


def _run_chunks(fn, params, trials: int, workers: int):
    if workers <= 1 or trials < 2:
        return fn(params, range(trials))
    bounds = np.linspace(0, trials, min(workers * 4, trials) + 1).astype(int)
    chunks = [range(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, [params] * len(chunks), chunks))
    return [row for part in parts for row in part]


def _mean_se(values) -> tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    if len(values) < 2:
        return float(values.mean()), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(len(values)))


@dataclass
class TrialSummary:
    n: int
    trials: int
    seed: int
    mean_isolated: float
    se_isolated: float
    mean_degree: float
    se_degree: float
    aggregate_degree_distribution: CountableMeasure
    rows: list = field(default_factory=list, repr=False)  # (trial, isolated, edges)

    def to_json(self) -> dict:
        out = {k: v for k, v in dataclasses.asdict(self).items()
               if k not in ("aggregate_degree_distribution", "rows")}
        out["aggregate_degree_distribution"] = self.aggregate_degree_distribution.to_json()
        return out


def run_trials(params: ModelParams, trials: int, workers: int = 1) -> TrialSummary:
    """Build ``trials`` independent graphs and aggregate isolated-vertex and degree statistics."""
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    if params.n < 1:
        raise InvalidParameterError("n must be >= 1")
    rows = _run_chunks(_degree_chunk, params, trials, workers)
    n = params.n
    mean_iso, se_iso = _mean_se([iso / n for _, iso, _, _ in rows])
    mean_deg, se_deg = _mean_se([2 * e / n for _, _, e, _ in rows])
    width = max(len(h) for *_, h in rows)
    hist = np.zeros(width, dtype=np.int64)
    for *_, h in rows:
        hist[:len(h)] += h
    pooled = CountableMeasure.from_counts({k: int(v) for k, v in enumerate(hist) if v}, n * trials)
    return TrialSummary(n, trials, params.seed, mean_iso, se_iso, mean_deg, se_deg, pooled,
                        [(t, iso, e) for t, iso, e, _ in rows])


@dataclass
class TailEstimate:
    y: float
    n: int
    trials: int
    hits: int
    p_hat: float
    log_rate: Optional[float]  # None when there were no hits
    wilson_ci: tuple[float, float]
    reference_rate: Optional[float] = None  # xi1(y) for uncoloured models
    seed: int = 0

    @property
    def log_rate_defined(self) -> bool:
        return self.log_rate is not None

    def to_json(self) -> dict:
        out = dataclasses.asdict(self)
        out["wilson_ci"] = list(self.wilson_ci)
        out["log_rate_defined"] = self.log_rate_defined
        return out


def _isolated_chunk(params: ModelParams, trials: range):
    return [int((_plain(build_trial_graph(params, t)).degrees == 0).sum()) for t in trials]


def estimate_tail_probability(params: ModelParams, y: float, trials: int, workers: int = 1) -> TailEstimate:
    """Plain Monte Carlo estimate of ``P(D(0) >= y)``."""
    if not 0 <= y <= 1:
        raise InvalidParameterError(f"y must lie in [0, 1], got {y}")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    n = params.n
    isolated = np.asarray(_run_chunks(_isolated_chunk, params, trials, workers))
    threshold = math.ceil(y * n - 1e-9)
    hits = int((isolated >= threshold).sum())
    p_hat = hits / trials
    log_rate = -math.log(p_hat) / n if hits else None
    lo, hi = proportion_confint(hits, trials, alpha=0.05, method="wilson")
    ref = None if params.coloured else xi1(y, params.d, params.c)
    return TailEstimate(y, n, trials, hits, p_hat, log_rate, (float(lo), float(hi)), ref, params.seed)


def estimate_rate_slope(params: ModelParams, y: float, n_list: Sequence[int], trials: int,
                        workers: int = 1) -> list[TailEstimate]:
    """One tail estimate per ``n``; ``params.n`` is replaced and the radius follows ``n``."""
    return [estimate_tail_probability(dataclasses.replace(params, n=int(n)), y, trials, workers)
            for n in n_list]


@dataclass
class ColouredReport:
    n: int
    trials: int
    seed: int
    mean: np.ndarray      # mean[a, b]: mean number of colour-b neighbours of a colour-a vertex
    variance: np.ndarray  # pooled variance of the same counts
    se: np.ndarray        # standard error across trials of the per-trial means
    target: np.ndarray    # rho(d) C(a, b) nu(b)
    ladder: dict          # n -> mean rate_J at the empirical measures

    def within(self, k: float = 3.0) -> np.ndarray:
        return np.abs(self.mean - self.target) <= k * self.se

    def to_json(self) -> dict:
        return {
            "n": self.n, "trials": self.trials, "seed": self.seed,
            "mean": self.mean.tolist(), "variance": self.variance.tolist(),
            "se": self.se.tolist(), "target": self.target.tolist(),
            "within_3se": self.within().tolist(),
            "rate_J_ladder": {str(k): v for k, v in self.ladder.items()},
        }


def _coloured_chunk(params: ModelParams, trials: range):
    k = params.num_colours
    out = []
    for t in trials:
        cg = build_trial_graph(params, t)
        counts = neighbour_colour_counts(cg)
        sums = np.zeros((k, k))
        sq = np.zeros((k, k))
        nv = np.zeros(k)
        for a in range(k):
            rows = counts[cg.colours == a]
            nv[a] = len(rows)
            sums[a] = rows.sum(axis=0)
            sq[a] = (rows.astype(np.float64) ** 2).sum(axis=0)
        out.append((nv, sums, sq))
    return out


def _rate_chunk(params: ModelParams, trials: range):
    vals = []
    for t in trials:
        cg = build_trial_graph(params, t)
        vals.append(rate_J(empirical_pair_measure(cg), empirical_neighbourhood_measure(cg),
                           params.nu, params.C, params.d))
    return vals


def coloured_typical_check(params: ModelParams, trials: int, n_ladder: Sequence[int] = (500, 2000),
                           workers: int = 1) -> ColouredReport:
    """Compare neighbour-colour counts with their typical Poisson means and track ``rate_J`` along ``n_ladder``."""
    if not params.coloured:
        raise InvalidParameterError("coloured_typical_check needs coloured params")
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials}")
    rows = _run_chunks(_coloured_chunk, params, trials, workers)
    nv = np.array([r[0] for r in rows])
    sums = np.array([r[1] for r in rows])
    sq = np.array([r[2] for r in rows])
    tot_v = nv.sum(axis=0)[:, None]
    mean = sums.sum(axis=0) / tot_v
    variance = sq.sum(axis=0) / tot_v - mean ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        per_trial = sums / nv[:, :, None]
    if trials > 1:
        se = np.nanstd(per_trial, axis=0, ddof=1) / np.sqrt((nv > 0).sum(axis=0))[:, None]
    else:
        se = np.zeros_like(mean)
    target = rho(params.d) * params.C * params.nu[None, :]
    ladder = {}
    for n in n_ladder:
        vals = _run_chunks(_rate_chunk, dataclasses.replace(params, n=int(n)), trials, workers)
        ladder[int(n)] = float(np.mean(vals))
    return ColouredReport(params.n, trials, params.seed, mean, variance, se, target, ladder)
