"""Sparse measures on countable sets and the empirical measures of a graph.

Empirical measures keep the integer counts they were built from together
with the common denominator ``n``; masses are ``count / n`` computed once.
Identities such as ``h_map(M) == (L1, L2)`` can therefore be checked on
the integer counts exactly.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Optional

import numpy as np

from .exceptions import InvalidMeasureError, UndefinedMeasureError
from .geometry import ColouredGraph, Graph

LocalityVector = tuple  # tuple of (colour, count) pairs, sorted, counts > 0


def locality_vector(counts) -> LocalityVector:
    """Canonical locality vector from a mapping or a dense count sequence."""
    items = counts.items() if isinstance(counts, Mapping) else enumerate(counts)
    out = []
    for b, k in items:
        k = int(k)
        if k < 0:
            raise InvalidMeasureError("locality counts must be nonnegative")
        if k:
            out.append((int(b), k))
    return tuple(sorted(out))


def lv_get(ell: LocalityVector, b: int) -> int:
    for colour, k in ell:
        if colour == b:
            return k
    return 0


class CountableMeasure:
    """Nonnegative measure with finite support, stored as ``{key: mass}``.

    Zero masses are dropped. ``counts``/``denominator`` are set for
    empirical measures. ``infinite_mean`` marks a degree law whose mean is
    known to diverge.
    """

    def __init__(self, masses: Mapping[Hashable, float] | None = None, *,
                 counts: Optional[Mapping[Hashable, int]] = None,
                 denominator: Optional[int] = None,
                 infinite_mean: bool = False):
        clean = {}
        for key, mass in (masses or {}).items():
            mass = float(mass)
            if not mass >= 0:
                raise InvalidMeasureError(f"negative or NaN mass {mass} at {key!r}")
            if mass > 0:
                clean[key] = mass
        self.masses = clean
        self.counts = None if counts is None else {k: int(v) for k, v in counts.items() if v}
        self.denominator = denominator
        self.infinite_mean = infinite_mean
        self.total = math.fsum(clean.values())

    @classmethod
    def from_counts(cls, counts: Mapping[Hashable, int], n: int, **kw):
        return cls({k: v / n for k, v in counts.items()}, counts=counts, denominator=n, **kw)

    def __getitem__(self, key) -> float:
        return self.masses.get(key, 0.0)

    def __contains__(self, key) -> bool:
        return key in self.masses

    def __iter__(self):
        return iter(self.masses)

    def __len__(self) -> int:
        return len(self.masses)

    def items(self):
        return self.masses.items()

    @property
    def support(self) -> list:
        return sorted(self.masses, key=_sort_key)

    def __repr__(self) -> str:
        body = ", ".join(f"{k!r}: {v:.6g}" for k, v in sorted(self.masses.items(), key=lambda kv: _sort_key(kv[0]))[:8])
        more = ", ..." if len(self.masses) > 8 else ""
        return f"{type(self).__name__}({{{body}{more}}})"

    def log_mass(self, key) -> float:
        m = self.masses.get(key, 0.0)
        return math.log(m) if m > 0 else -math.inf

    def is_probability(self, tol: float = 1e-12) -> bool:
        return abs(self.total - 1.0) <= tol

    def mean(self) -> float:
        """First moment for measures on the nonnegative integers."""
        if self.infinite_mean:
            return math.inf
        return math.fsum(k * m for k, m in self.masses.items())

    def scaled(self, factor: float) -> "CountableMeasure":
        return type(self)({k: factor * v for k, v in self.masses.items()})

    def as_fractions(self) -> dict:
        """Exact masses; only available for empirical (count-backed) measures."""
        if self.counts is None:
            raise InvalidMeasureError("exact masses need a count-backed measure")
        return {k: Fraction(v, self.denominator) for k, v in self.counts.items()}

    def allclose(self, other: "CountableMeasure", atol: float = 1e-12) -> bool:
        keys = set(self.masses) | set(other.masses)
        return all(abs(self[k] - other[k]) <= atol for k in keys)

    def to_json(self) -> dict:
        return {
            "entries": [[_jsonable_key(k), m] for k, m in sorted(self.masses.items(), key=lambda kv: _sort_key(kv[0]))],
            "total": self.total,
        }

    @classmethod
    def from_json(cls, obj) -> "CountableMeasure":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls({_key_from_json(k): m for k, m in obj["entries"]})

    def to_csv(self, fh=None) -> str:
        """One row per support point. Returns the text when ``fh`` is None."""
        buf = fh if fh is not None else io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        rows = sorted(self.masses.items(), key=lambda kv: _sort_key(kv[0]))
        writer.writerow(self._csv_header())
        for key, mass in rows:
            writer.writerow([*self._csv_key(key), repr(mass)])
        return buf.getvalue() if fh is None else ""

    def _csv_header(self):
        sample = next(iter(self.masses), 0)
        if isinstance(sample, tuple):
            return ["a", "b", "mass"]
        return ["key", "mass"]

    def _csv_key(self, key):
        return list(key) if isinstance(key, tuple) else [key]


class NeighbourhoodMeasure(CountableMeasure):
    """Measure on pairs ``(colour, locality vector)``."""

    def colour_marginal(self) -> CountableMeasure:
        acc: dict[int, list] = {}
        for (a, _), m in self.masses.items():
            acc.setdefault(a, []).append(m)
        return CountableMeasure({a: math.fsum(v) for a, v in acc.items()})

    def _csv_header(self):
        return ["colour", "locality", "mass"]

    def _csv_key(self, key):
        a, ell = key
        return [a, ";".join(f"{b}:{k}" for b, k in ell)]


def _sort_key(key):
    if isinstance(key, tuple):
        return tuple(_sort_key(k) for k in key)
    return key


def _jsonable_key(key):
    if isinstance(key, tuple):
        return [_jsonable_key(k) for k in key]
    return key


def _key_from_json(key):
    if isinstance(key, list):
        return tuple(_key_from_json(k) for k in key)
    return key


def neighbourhood_from_json(obj) -> NeighbourhoodMeasure:
    if isinstance(obj, str):
        obj = json.loads(obj)
    out = {}
    for (a, ell), m in obj["entries"]:
        out[(int(a), locality_vector({b: k for b, k in ell}))] = m
    return NeighbourhoodMeasure(out)


# --- empirical measures ---------------------------------------------------

def _require_vertices(n: int):
    if n < 1:
        raise UndefinedMeasureError("empirical measures need at least one vertex")


def degree_distribution(g: Graph) -> CountableMeasure:
    _require_vertices(g.n)
    hist = np.bincount(g.degrees)
    counts = {k: int(v) for k, v in enumerate(hist) if v}
    return CountableMeasure.from_counts(counts, g.n)


def empirical_colour_measure(cg: ColouredGraph) -> CountableMeasure:
    _require_vertices(cg.n)
    hist = np.bincount(cg.colours, minlength=cg.num_colours)
    return CountableMeasure.from_counts({a: int(v) for a, v in enumerate(hist) if v}, cg.n)


def _pair_counts(cg: ColouredGraph) -> dict:
    edges = cg.graph.edge_array()
    k = cg.num_colours
    ca, cb = cg.colours[edges[:, 0]], cg.colours[edges[:, 1]]
    flat = np.bincount(ca * k + cb, minlength=k * k) + np.bincount(cb * k + ca, minlength=k * k)
    return {(a, b): int(flat[a * k + b]) for a in range(k) for b in range(k) if flat[a * k + b]}


def empirical_pair_measure(cg: ColouredGraph) -> CountableMeasure:
    _require_vertices(cg.n)
    return CountableMeasure.from_counts(_pair_counts(cg), cg.n)


def neighbour_colour_counts(cg: ColouredGraph) -> np.ndarray:
    """``(n, k)`` matrix: entry ``(v, b)`` is the number of neighbours of ``v`` coloured ``b``."""
    g, k = cg.graph, cg.num_colours
    src = np.repeat(np.arange(g.n), g.degrees)
    flat = np.bincount(src * k + cg.colours[g.indices], minlength=g.n * k)
    return flat.reshape(g.n, k)


def empirical_neighbourhood_measure(cg: ColouredGraph) -> NeighbourhoodMeasure:
    _require_vertices(cg.n)
    rows = np.column_stack([cg.colours, neighbour_colour_counts(cg)])
    uniq, cnt = np.unique(rows, axis=0, return_counts=True)
    counts = {(int(r[0]), locality_vector(r[1:])): int(c) for r, c in zip(uniq, cnt)}
    return NeighbourhoodMeasure.from_counts(counts, cg.n)


def h_map(mu: NeighbourhoodMeasure) -> tuple[CountableMeasure, CountableMeasure]:
    """Colour marginal and first-moment pair measure of a neighbourhood measure.

    The second component is keyed ``(b, a)``: the mean number of
    colour-``b`` neighbours carried by colour-``a`` vertices. For a
    count-backed input the outputs are count-backed too.
    """
    if mu.counts is not None:
        c1: dict = {}
        c2: dict = {}
        for (a, ell), cnt in mu.counts.items():
            c1[a] = c1.get(a, 0) + cnt
            for b, k in ell:
                c2[(b, a)] = c2.get((b, a), 0) + cnt * k
        n = mu.denominator
        return CountableMeasure.from_counts(c1, n), CountableMeasure.from_counts(c2, n)
    h1: dict = {}
    h2: dict = {}
    for (a, ell), m in mu.items():
        h1.setdefault(a, []).append(m)
        for b, k in ell:
            h2.setdefault((b, a), []).append(m * k)
    return (CountableMeasure({a: math.fsum(v) for a, v in h1.items()}),
            CountableMeasure({key: math.fsum(v) for key, v in h2.items()}))


class Consistency(str, enum.Enum):
    CONSISTENT = "consistent"
    SUB_CONSISTENT = "sub_consistent"
    INCONSISTENT = "inconsistent"


def consistency_check(varpi: CountableMeasure, mu: NeighbourhoodMeasure, tol: float = 1e-9) -> Consistency:
    if tol < 0:
        raise ValueError("tol must be >= 0")
    _, h2 = h_map(mu)
    keys = set(h2.masses) | set(varpi.masses)
    if all(abs(h2[k] - varpi[k]) <= tol for k in keys):
        return Consistency.CONSISTENT
    if all(h2[k] <= varpi[k] + tol for k in keys):
        return Consistency.SUB_CONSISTENT
    return Consistency.INCONSISTENT


def pooled(measures: Iterable[CountableMeasure]) -> CountableMeasure:
    """Average of count-backed measures, weighting each by its denominator."""
    counts: dict = {}
    total = 0
    for m in measures:
        for k, v in m.counts.items():
            counts[k] = counts.get(k, 0) + v
        total += m.denominator
    return CountableMeasure.from_counts(counts, total)
