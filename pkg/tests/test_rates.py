import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import optimize, stats

from rggldp import (
    CountableMeasure,
    DegenerateInputError,
    DomainError,
    InvalidDimensionError,
    InvalidMeasureError,
    NeighbourhoodMeasure,
    PoissonLaw,
    eta1,
    eta_at_x,
    hc_d,
    kl,
    optimal_conditional_delta,
    q_measure,
    rate_J,
    rho,
    solve_a,
    typical_neighbourhood_measure,
    xi1,
)
from rggldp.measures import locality_vector
from rggldp.rates import degree_law, isolated_rate_objective, product_measure

D = 2
C1 = 1 / math.pi  # rho(2) * C1 == 1


def c_for(rc, d=D):
    return rc / rho(d)


# values computed with mpmath at 40 digits (findroot on a(1 - e^-a) = rho c (1 - y))
A_Y0_RC1 = 1.3499764854011254
A_Y055_RC1 = 0.81036592750841037
XI1_Y055_RC1 = 0.040250233500840862


@pytest.mark.parametrize("d,expected", [(1, 2.0), (2, math.pi), (3, 4 * math.pi / 3)])
def test_rho_special_values(d, expected):
    assert rho(d) == pytest.approx(expected, rel=1e-15)


def test_rho_rejects_zero():
    with pytest.raises(InvalidDimensionError):
        rho(0)


def test_kl_examples():
    p = CountableMeasure({0: 0.5, 1: 0.5})
    assert kl(p, p) == 0.0
    assert kl(CountableMeasure({0: 1.0}), p) == pytest.approx(math.log(2), rel=1e-15)
    q = CountableMeasure({0: 0.25, 1: 0.75})
    assert kl(p, q) == pytest.approx(0.5 * math.log(2) + 0.5 * math.log(2 / 3), rel=1e-14)
    assert kl(p, q) == pytest.approx(0.14384103622589046, rel=1e-14)


def test_kl_infinite_without_absolute_continuity():
    assert kl(CountableMeasure({0: 0.5, 2: 0.5}), CountableMeasure({0: 1.0})) == math.inf
    assert kl(CountableMeasure({}), CountableMeasure({0: 1.0})) == 0.0


def test_poisson_truncation_mass():
    for rate in (0.0, 1e-6, 0.5, 1.0, 7.3, 40.0):
        law = PoissonLaw(rate)
        assert abs(law.pmf().sum() - 1) <= 1e-12
        assert stats.poisson.sf(law.truncation, rate) < 1e-14


@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0, 5.0])
def test_eta1_vanishes_at_poisson(rc):
    assert abs(eta1(PoissonLaw(rc).as_measure(), D, c_for(rc))) <= 1e-9


@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0])
def test_eta1_point_mass_at_zero(rc):
    value = eta1(CountableMeasure({0: 1.0}), D, c_for(rc))
    assert value == pytest.approx(rc / 2, rel=1e-14)
    assert value == pytest.approx(xi1(1.0, D, c_for(rc)), rel=1e-14)
    assert xi1(1 - 1e-9, D, c_for(rc)) == pytest.approx(rc / 2, abs=1e-4)


def test_eta1_poisson_two_with_unit_intensity():
    assert eta1(PoissonLaw(2.0).as_measure(), D, C1) == pytest.approx(math.log(2) - 0.5, abs=1e-12)


def test_eta1_infinite_mean_flag():
    delta = CountableMeasure({0: 0.5, 1: 0.5}, infinite_mean=True)
    assert eta1(delta, D, C1) == math.inf


def test_eta1_requires_probability():
    with pytest.raises(InvalidMeasureError):
        eta1(CountableMeasure({0: 0.5}), D, C1)


@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("shift", [0, 1, 2])
@pytest.mark.parametrize("eps", [1e-3, 1e-2, 0.1])
def test_eta1_positive_on_perturbed_poisson(rc, shift, eps):
    masses = PoissonLaw(rc).as_measure().masses
    masses[shift] += eps
    total = sum(masses.values())
    delta = CountableMeasure({k: v / total for k, v in masses.items()})
    assert eta1(delta, D, c_for(rc)) > 0


def test_eta_at_x_at_mean_is_eta1():
    delta = degree_law([0.1, 0.3, 0.4, 0.2])
    assert eta_at_x(delta, delta.mean(), D, C1) == eta1(delta, D, C1)


def test_eta_at_x_poisson_one_at_two():
    delta = PoissonLaw(1.0).as_measure()
    assert eta_at_x(delta, 2.0, D, C1) == pytest.approx(0.5, abs=1e-12)


def test_eta_at_x_rejects_x_below_mean():
    with pytest.raises(DomainError):
        eta_at_x(degree_law([0.0, 1.0]), 0.5, D, C1)


def _increment(m, eps, rc):
    # closed form of eta^(m + eps) - eta^m
    return eps / 2 - 0.5 * m * math.log1p(eps / m) + 0.5 * eps * math.log((m + eps) / rc) if m > 0 else \
        eps / 2 + 0.5 * eps * math.log(eps / rc)


degree_laws = st.lists(st.one_of(st.just(0.0), st.floats(1e-6, 1.0)), min_size=1, max_size=12).filter(lambda w: sum(w) > 0).map(
    lambda w: CountableMeasure({k: v / sum(w) for k, v in enumerate(w)}))


@settings(max_examples=200, deadline=None)
@given(delta=degree_laws, eps=st.sampled_from([0.01, 0.1, 1.0]), rc=st.sampled_from([0.5, 1.0, 2.0]))
def test_eta_at_x_increment_closed_form(delta, eps, rc):
    m = delta.mean()
    diff = eta_at_x(delta, m + eps, D, c_for(rc)) - eta_at_x(delta, m, D, c_for(rc))
    assert diff == pytest.approx(_increment(m, eps, rc), abs=1e-10)


@settings(max_examples=200, deadline=None)
@given(delta=degree_laws, eps=st.sampled_from([0.01, 0.1, 1.0]))
def test_eta_at_x_increases_above_mean_when_mean_at_least_rho_c(delta, eps):
    m = delta.mean()
    rc = min(m, 2.0)
    if rc <= 0:
        return
    c = c_for(rc)
    assert eta_at_x(delta, m + eps, D, c) > eta_at_x(delta, m, D, c)


def test_eta_at_x_can_decrease_above_mean_when_mean_below_rho_c():
    # d/dx eta^x at x = <delta> equals log(<delta> / rho c) / 2
    delta = degree_law([1.0])
    assert eta_at_x(delta, 0.1, D, C1) < eta_at_x(delta, 0.0, D, C1)
    delta = degree_law([0.8, 0.2])
    x = np.linspace(0.2, 0.3, 11)
    vals = [eta_at_x(delta, float(v), D, C1) for v in x]
    assert vals[-1] < vals[0]


@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0, 3.5])
def test_solve_a_at_typical_value(rc):
    assert solve_a(math.exp(-rc), D, c_for(rc)) == pytest.approx(rc, abs=1e-11)


def test_solve_a_reference_values():
    assert solve_a(0.0, D, C1) == pytest.approx(A_Y0_RC1, abs=1e-11)
    assert solve_a(0.55, D, C1) == pytest.approx(A_Y055_RC1, abs=1e-11)


@settings(max_examples=200, deadline=None)
@given(y=st.floats(0.0, 0.999), rc=st.floats(0.05, 20.0))
def test_solve_a_agrees_with_brentq(y, rc):
    target = rc * (1 - y)
    ref = optimize.brentq(lambda a: -a * math.expm1(-a) - target, 1e-15, target + 2, xtol=1e-14)
    a = solve_a(y, D, c_for(rc))
    assert a == pytest.approx(ref, abs=1e-10)
    assert abs(-a * math.expm1(-a) - target) < 1e-10


def test_solve_a_small_target_goes_to_zero():
    values = [solve_a(1 - t, D, C1) for t in (1e-2, 1e-4, 1e-6, 1e-8)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert values[-1] < 1e-3


@pytest.mark.parametrize("y", [1.0, 1.2, -0.1])
def test_solve_a_domain(y):
    with pytest.raises(DomainError):
        solve_a(y, D, C1)


@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0])
def test_xi1_zero_at_typical_value(rc):
    assert abs(xi1(math.exp(-rc), D, c_for(rc))) <= 1e-8


def test_xi1_reference_value():
    assert xi1(0.55, D, C1) == pytest.approx(XI1_Y055_RC1, abs=1e-10)


def test_xi1_endpoints():
    assert xi1(1.0, D, C1) == 0.5
    a = A_Y0_RC1
    assert xi1(0.0, D, C1) == pytest.approx(-math.log(1 / a) + (a - 1) ** 2 / 2, abs=1e-10)


@pytest.mark.parametrize("y", [-0.01, 1.01])
def test_xi1_domain(y):
    with pytest.raises(DomainError):
        xi1(y, D, C1)


@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0])
def test_xi1_nonnegative_with_single_zero(rc):
    c = c_for(rc)
    root = math.exp(-rc)
    for y in np.arange(0.0, 1.0 + 1e-12, 1e-3):
        v = xi1(float(min(y, 1.0)), D, c)
        assert v >= -1e-12
        if abs(y - root) > 1e-6:
            assert v > 0


@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0])
def test_contraction_identity(rc):
    c = c_for(rc)
    for y in np.arange(0.05, 0.951, 0.05):
        y = float(y)
        assert eta1(optimal_conditional_delta(y, D, c), D, c) == pytest.approx(xi1(y, D, c), abs=1e-8)


def test_optimal_delta_shape():
    for y in (0.0, 0.3, 0.9, 0.999):
        delta = optimal_conditional_delta(y, D, C1)
        assert abs(delta.total - 1) <= 1e-12
        assert delta[0] == y
    a = solve_a(0.0, D, C1)
    delta = optimal_conditional_delta(0.0, D, C1)
    assert 0 not in delta
    for k in (1, 2, 5):
        assert delta[k] == pytest.approx(stats.poisson.pmf(k, a) / (1 - math.exp(-a)), rel=1e-12)
    assert optimal_conditional_delta(1.0, D, C1).masses == {0: 1.0}


@settings(max_examples=200, deadline=None)
@given(y=st.floats(0.0, 0.95), weights=st.lists(st.floats(0.01, 1.0), min_size=1, max_size=10),
       rc=st.sampled_from([0.5, 1.0, 2.0]))
def test_jensen_lower_bound(y, weights, rc):
    b = solve_a(y, D, c_for(rc))
    law = PoissonLaw(b)
    w = np.array(weights) / sum(weights) * (1 - y)
    lhs = sum(m * (math.log(m) - law.log_mass(k)) for k, m in enumerate(w, start=1))
    rhs = (1 - y) * math.log((1 - y) / -math.expm1(-b))
    assert lhs >= rhs - 1e-12


@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0])
@pytest.mark.parametrize("y", [0.05, 0.3, 0.6, 0.9])
def test_b_objective_minimised_at_a(rc, y):
    c = c_for(rc)
    res = optimize.minimize_scalar(lambda b: isolated_rate_objective(b, y, D, c),
                                   bounds=(1e-6, 20), method="bounded", options={"xatol": 1e-10})
    a = solve_a(y, D, c)
    assert res.x == pytest.approx(a, abs=1e-5)
    assert isolated_rate_objective(a, y, D, c) == pytest.approx(xi1(y, D, c), abs=1e-10)


@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0])
def test_b_equals_a_identity(rc):
    for y in np.linspace(0, 0.99, 50):
        a = solve_a(float(y), D, c_for(rc))
        lhs = (a * a + rc * rc - 2 * rc * a * (1 - y)) / (2 * rc)
        rhs = rc * y * (2 - y) / 2 + (a - rc * (1 - y)) ** 2 / (2 * rc)
        assert abs(lhs - rhs) <= 1e-10


def test_hc_d_zero_at_equality():
    C = np.array([[1.0, 0.5], [0.5, 2.0]])
    omega = CountableMeasure({0: 0.4, 1: 0.6})
    varpi = product_measure(C, omega).scaled(rho(3))
    assert abs(hc_d(varpi, omega, C, 3)) <= 1e-12


def test_hc_d_single_colour():
    value = hc_d(CountableMeasure({(0, 0): 2.0}), CountableMeasure({0: 1.0}), [[C1]], D)
    assert value == pytest.approx(2 * math.log(2) + 1 - 2, abs=1e-12)


def test_hc_d_infinite_outside_support():
    C = np.array([[1.0, 0.0], [0.0, 1.0]])
    varpi = CountableMeasure({(0, 1): 0.1, (1, 0): 0.1})
    assert hc_d(varpi, CountableMeasure({0: 0.5, 1: 0.5}), C, D) == math.inf


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 3))
def test_hc_d_nonnegative(seed, d):
    from rggldp.acceptance import random_hc_instance
    varpi, omega, C = random_hc_instance(np.random.default_rng(seed))
    assert hc_d(varpi, omega, C, d) >= -1e-12


def test_q_measure_single_colour_is_poisson():
    Q = q_measure(CountableMeasure({(0, 0): 1.7}), CountableMeasure({0: 1.0}))
    for k in range(6):
        assert Q[(0, locality_vector([k]))] == pytest.approx(stats.poisson.pmf(k, 1.7), rel=1e-12)


def test_q_measure_without_edges():
    Q = q_measure(CountableMeasure({}), CountableMeasure({0: 0.3, 1: 0.7}), num_colours=2)
    assert Q.masses == {(0, ()): 0.3, (1, ()): 0.7}


def test_q_measure_two_colours_total_mass():
    varpi = CountableMeasure({(a, b): 0.5 for a in range(2) for b in range(2)})
    Q = q_measure(varpi, CountableMeasure({0: 0.5, 1: 0.5}))
    assert abs(Q.total - 1) <= 1e-12
    p1 = stats.poisson.pmf(1, 1.0)
    assert Q[(0, locality_vector([1, 1]))] == pytest.approx(0.5 * p1 * p1, rel=1e-12)


def test_q_measure_degenerate_colour():
    with pytest.raises(DegenerateInputError):
        q_measure(CountableMeasure({(1, 0): 0.2}), CountableMeasure({0: 1.0}))


def test_rate_J_vanishes_at_typical_law():
    C = np.array([[1.2, 0.3], [0.3, 0.8]])
    nu = [0.35, 0.65]
    varpi, mu = typical_neighbourhood_measure(C, nu, D)
    assert -1e-12 <= rate_J(varpi, mu, nu, C, D) <= 1e-6


def test_rate_J_infinite_when_inconsistent():
    C = np.ones((2, 2))
    varpi, mu = typical_neighbourhood_measure(C, [0.5, 0.5], D)
    assert rate_J(varpi.scaled(1.1), mu, [0.5, 0.5], C, D) == math.inf


@pytest.mark.parametrize("masses", [[0.2, 0.5, 0.3], [0.0, 0.0, 1.0], [0.6, 0.1, 0.1, 0.2]])
@pytest.mark.parametrize("rc", [0.5, 1.0, 2.0])
def test_rate_J_single_colour_matches_eta_at_x(masses, rc):
    delta = degree_law(masses)
    x = delta.mean()
    mu = NeighbourhoodMeasure({(0, locality_vector([k])): m for k, m in delta.items()})
    varpi = CountableMeasure({(0, 0): x})
    c = c_for(rc)
    assert rate_J(varpi, mu, [1.0], [[c]], D) == pytest.approx(eta_at_x(delta, x, D, c), abs=1e-12)
