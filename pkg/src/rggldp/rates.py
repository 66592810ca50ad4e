"""Rate functions for the degree law, the isolated-vertex proportion and the
joint (pair measure, neighbourhood measure) law of coloured RGGs.

Rates are plain floats; ``math.inf`` is the infinite rate. Countable sums
against Poisson laws are cut where the remaining tail mass drops below
``TAIL_TOL``.
"""
from __future__ import annotations

import itertools
import math
from typing import Mapping, Optional

import numpy as np
from scipy import special, stats

from .exceptions import (
    DegenerateInputError,
    DomainError,
    InvalidDimensionError,
    InvalidMeasureError,
    InvalidParameterError,
)
from .geometry import validate_kernel
from .measures import (
    Consistency,
    CountableMeasure,
    NeighbourhoodMeasure,
    consistency_check,
    h_map,
    locality_vector,
)

TAIL_TOL = 1e-14


def rho(d: int) -> float:
    """Volume of the Euclidean unit ball in ``d`` dimensions."""
    if d < 1:
        raise InvalidDimensionError(f"dimension must be >= 1, got {d}")
    return math.pi ** (d / 2) / math.gamma((d + 2) / 2)


def _rho_c(d: int, c: float) -> float:
    if not c > 0:
        raise InvalidParameterError(f"c must be > 0, got {c}")
    return rho(d) * c


class PoissonLaw:
    """Poisson law with mean ``rate``, truncated for finite evaluation.

    ``truncation`` is the smallest ``K`` with ``P(X > K) < tail``.
    """

    def __init__(self, rate: float, tail: float = TAIL_TOL):
        if not rate >= 0:
            raise InvalidParameterError(f"Poisson rate must be >= 0, got {rate}")
        self.rate = float(rate)
        self.tail = tail
        if self.rate == 0:
            self.truncation = 0
        else:
            k = int(stats.poisson.isf(tail, self.rate))
            while k > 0 and stats.poisson.sf(k - 1, self.rate) < tail:
                k -= 1
            while stats.poisson.sf(k, self.rate) >= tail:
                k += 1
            self.truncation = k

    def log_mass(self, k) -> float:
        if not isinstance(k, (int, np.integer)) or k < 0:
            return -math.inf
        if self.rate == 0:
            return 0.0 if k == 0 else -math.inf
        return -self.rate + k * math.log(self.rate) - math.lgamma(k + 1)

    def pmf(self) -> np.ndarray:
        return stats.poisson.pmf(np.arange(self.truncation + 1), self.rate)

    def as_measure(self) -> CountableMeasure:
        return CountableMeasure(dict(enumerate(self.pmf())))


def kl(p: CountableMeasure, q) -> float:
    """``sum_k p(k) log(p(k)/q(k))`` over the support of ``p``.

    ``q`` is a ``CountableMeasure`` or anything with a ``log_mass(key)``
    method. ``p`` need not be normalised, in which case the result may be
    negative. Returns ``inf`` if ``p`` charges a point ``q`` does not.
    """
    terms = []
    for key, m in p.items():
        if m < 0:
            raise InvalidMeasureError("negative mass")
        lq = q.log_mass(key)
        if lq == -math.inf:
            return math.inf
        terms.append(m * (math.log(m) - lq))
    return math.fsum(terms)


def _check_degree_law(delta: CountableMeasure):
    if not delta.is_probability(1e-12):
        raise InvalidMeasureError(f"degree law must be a probability measure (total {delta.total!r})")
    for k in delta:
        if not isinstance(k, (int, np.integer)) or k < 0:
            raise InvalidMeasureError(f"degree law keys must be nonnegative integers, got {k!r}")


def _mean_penalty(x: float, rc: float) -> float:
    # 1/2 x log x - 1/2 x log(rc) + 1/2 rc - 1/2 x, with 0 log 0 = 0
    return 0.5 * (float(special.xlogy(x, x)) - x * math.log(rc) + rc - x)


def eta1(delta: CountableMeasure, d: int, c: float) -> float:
    """Rate of the empirical degree distribution at ``delta``."""
    rc = _rho_c(d, c)
    _check_degree_law(delta)
    if delta.infinite_mean:
        return math.inf
    m = delta.mean()
    return _mean_penalty(m, rc) + kl(delta, PoissonLaw(m))


def eta_at_x(delta: CountableMeasure, x: float, d: int, c: float) -> float:
    """Objective minimised over ``x >= mean(delta)`` in the contraction for ``eta1``."""
    rc = _rho_c(d, c)
    _check_degree_law(delta)
    if delta.infinite_mean:
        return math.inf
    m = delta.mean()
    if x < m * (1 - 1e-15):
        raise DomainError(f"x = {x} is below the mean {m} of delta")
    return kl(delta, PoissonLaw(x)) + _mean_penalty(x, rc)


def solve_a(y: float, d: int, c: float, tol: float = 1e-12) -> float:
    """Unique ``a > 0`` with ``a (1 - exp(-a)) = rho(d) c (1 - y)``, by bisection."""
    if not 0 <= y < 1:
        raise DomainError(f"y must lie in [0, 1), got {y}")
    target = _rho_c(d, c) * (1 - y)

    def g(a):
        return -a * math.expm1(-a)

    lo, hi = 1e-12, target + 1.0
    while g(hi) < target:
        hi *= 2
    if g(lo) >= target:
        return lo
    for _ in range(400):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if g(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def xi1(y: float, d: int, c: float) -> float:
    """Rate of the proportion of isolated vertices at ``y``."""
    if not 0 <= y <= 1:
        raise DomainError(f"y must lie in [0, 1], got {y}")
    rc = _rho_c(d, c)
    if y == 1:
        return rc / 2
    a = solve_a(y, d, c)
    s = rc * (1 - y)
    return float(special.xlogy(y, y) + rc * y * (1 - y / 2)
                 - (1 - y) * (math.log(rc / a) - (a - s) ** 2 / (2 * s)))


def optimal_conditional_delta(y: float, d: int, c: float) -> CountableMeasure:
    """Degree law with ``delta(0) = y`` and a zero-truncated Poisson(a) body.

    This is the minimiser behind ``xi1``: ``eta1`` of the result equals
    ``xi1(y)``.
    """
    if not 0 <= y <= 1:
        raise DomainError(f"y must lie in [0, 1], got {y}")
    _rho_c(d, c)
    if y == 1:
        return CountableMeasure({0: 1.0})
    a = solve_a(y, d, c)
    law = PoissonLaw(a)
    body = (1 - y) * law.pmf() / -math.expm1(-a)
    masses = {k: float(body[k]) for k in range(1, law.truncation + 1)}
    masses[0] = y
    return CountableMeasure(masses)


def isolated_rate_objective(b: float, y: float, d: int, c: float) -> float:
    """Lower-bound objective in ``b`` whose minimum over ``b > 0`` sits at ``solve_a(y)``."""
    rc = _rho_c(d, c)
    return float(0.5 * rc + special.xlogy(y, y) + b * b / (2 * rc)
                 + (1 - y) * math.log((1 - y) / -math.expm1(-b)) - b * (1 - y))


# --- coloured model -------------------------------------------------------

def product_measure(C: np.ndarray, omega: CountableMeasure) -> CountableMeasure:
    """``(a, b) -> C(a, b) omega(a) omega(b)``."""
    C = np.asarray(C)
    k = C.shape[0]
    return CountableMeasure({(a, b): C[a, b] * omega[a] * omega[b]
                             for a in range(k) for b in range(k)})


def _check_pair_keys(varpi: CountableMeasure, k: int):
    for key in varpi:
        a, b = key
        if not (0 <= a < k and 0 <= b < k):
            raise InvalidMeasureError(f"pair {key!r} outside the colour set")


def hc_d(varpi: CountableMeasure, omega: CountableMeasure, C, d: int) -> float:
    """Relative entropy of ``varpi`` against ``rho(d) C omega x omega`` with mass correction."""
    C = np.asarray(C, dtype=np.float64)
    if C.ndim != 2 or not np.array_equal(C, C.T) or (C < 0).any():
        raise InvalidParameterError("C must be a symmetric nonnegative matrix")
    _check_pair_keys(varpi, C.shape[0])
    ref = product_measure(C, omega).scaled(rho(d))
    h = kl(varpi, ref)
    if h == math.inf:
        return math.inf
    return h + ref.total - varpi.total


class QReference:
    """Product-Poisson law on ``(colour, locality vector)``.

    Colour ``a`` has mass ``mu1(a)``; given ``a`` the coordinates ``l(b)`` are
    independent Poisson with mean ``varpi(a, b) / mu1(a)``.
    """

    def __init__(self, varpi: CountableMeasure, mu1: CountableMeasure, num_colours: Optional[int] = None):
        colours = {a for a in mu1} | {a for key in varpi for a in key}
        k = num_colours if num_colours is not None else (max(colours) + 1 if colours else 0)
        self.num_colours = k
        self.mu1 = mu1
        self.rates = np.zeros((k, k))
        for (a, b), m in varpi.items():
            if mu1[a] == 0:
                raise DegenerateInputError(f"colour {a} has zero marginal but positive pair mass")
            self.rates[a, b] = m / mu1[a]

    def log_mass(self, key) -> float:
        a, ell = key
        if not 0 <= a < self.num_colours or self.mu1[a] == 0:
            return -math.inf
        total = math.log(self.mu1[a]) - self.rates[a].sum()
        for b, cnt in ell:
            lam = self.rates[a, b] if 0 <= b < self.num_colours else 0.0
            if lam == 0:
                return -math.inf
            total += cnt * math.log(lam) - math.lgamma(cnt + 1)
        return total


def q_measure(varpi: CountableMeasure, mu1: CountableMeasure,
              num_colours: Optional[int] = None, tail: float = TAIL_TOL) -> NeighbourhoodMeasure:
    """Enumerate ``QReference`` on its truncated support."""
    ref = QReference(varpi, mu1, num_colours)
    out = {}
    for a in range(ref.num_colours):
        if mu1[a] == 0:
            continue
        pmfs = [PoissonLaw(lam, tail).pmf() for lam in ref.rates[a]]
        for ell in itertools.product(*(range(len(p)) for p in pmfs)):
            mass = mu1[a] * math.prod(p[k] for p, k in zip(pmfs, ell))
            out[(a, locality_vector(ell))] = mass
    return NeighbourhoodMeasure(out)


def typical_neighbourhood_measure(C, nu, d: int, tail: float = TAIL_TOL) -> tuple[CountableMeasure, NeighbourhoodMeasure]:
    """Typical ``(varpi, mu)`` of the coloured model.

    ``varpi = rho(d) C nu x nu``; under ``mu`` the colour has law ``nu`` and
    the neighbour counts are independent Poisson(``rho(d) C(a, b) nu(b)``).
    """
    C = validate_kernel(C)
    nu_m = nu if isinstance(nu, CountableMeasure) else CountableMeasure(dict(enumerate(nu)))
    varpi = product_measure(C, nu_m).scaled(rho(d))
    return varpi, q_measure(varpi, nu_m, C.shape[0], tail)


def rate_J(varpi: CountableMeasure, mu: NeighbourhoodMeasure, nu, C, d: int,
           tol: float = 1e-9) -> float:
    """Joint rate of the (pair measure, neighbourhood measure) pair.

    Infinite unless ``(varpi, mu)`` is consistent within ``tol``.
    """
    C = validate_kernel(C)
    nu_m = nu if isinstance(nu, CountableMeasure) else CountableMeasure(dict(enumerate(nu)))
    if consistency_check(varpi, mu, tol) != Consistency.CONSISTENT:
        return math.inf
    mu1, _ = h_map(mu)
    ref = QReference(varpi, mu1, C.shape[0])
    parts = (kl(mu, ref), kl(mu1, nu_m), hc_d(varpi, mu1, C, d))
    if math.inf in parts:
        return math.inf
    return parts[0] + parts[1] + 0.5 * parts[2]


def degree_law(masses: Mapping[int, float] | list) -> CountableMeasure:
    """Convenience constructor: a list is read as masses at ``0, 1, 2, ...``."""
    if not isinstance(masses, Mapping):
        masses = dict(enumerate(masses))
    return CountableMeasure({int(k): v for k, v in masses.items()})
