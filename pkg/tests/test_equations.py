import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from freewalk.core import make_cyclic_free_product
from freewalk.equations import (
    InvalidMeasure,
    NoSolution,
    SolverOptions,
    StepDistribution,
    TrafficSolution,
    first_passage_map,
    solve_first_passage,
    solve_stationary_traffic,
    solve_traffic,
    traffic_map,
)
from freewalk.presets import FAMILIES, uniform_per_factor


def build(name, *point):
    return FAMILIES[name].build(point)[0]


# avoid p = q, where the displayed formulas for r(b), r(b^2) divide by zero
GRID = [(p, q) for p in np.linspace(0.02, 0.95, 20) for q in np.linspace(0.013, 0.94, 20)
        if p + q < 0.99 and abs(p - q) > 1e-3]


def test_z2z3_general_closed_form():
    worst = 0.0
    for p, q in GRID:
        r = solve_traffic(build("z2z3", p, q)).r
        worst = max(worst, np.max(np.abs(r - oracles.z2z3_r(p, q))))
    assert worst < 1e-10


@pytest.mark.parametrize("p", [0.05, 0.25, 0.4, 0.49])
def test_z2z3_symmetric(p):
    r = solve_traffic(build("z2z3", p, p)).r
    assert np.allclose(r, oracles.z2z3_sym_r(p), atol=1e-12)
    # r(b) = r(b^2) whenever mu(b) = mu(b^2)
    assert abs(r[1] - r[2]) < 1e-13


@pytest.mark.parametrize("p", [0.05, 0.2, 0.3, 0.45])
def test_z3z3_families(p):
    assert np.allclose(solve_traffic(build("z3z3-i", p)).r, oracles.z3z3_i_r(p), atol=1e-12)
    assert np.allclose(solve_traffic(build("z3z3-ii", p)).r, oracles.z3z3_ii_r(p), atol=1e-12)


@pytest.mark.parametrize("p", [0.05, 0.17, 0.3, 0.45])
def test_minimal_generator_families(p):
    assert np.allclose(solve_traffic(build("z2z4-minS", p)).r, oracles.z2z4_min_r(p), atol=1e-12)
    assert np.allclose(solve_traffic(build("z3z4-minS", p)).r, oracles.z3z4_min_r(p), atol=1e-12)
    assert np.allclose(solve_traffic(build("z4z4-minS", p)).r, oracles.z4z4_min_r(p), atol=1e-10)


def test_z4z4_simple_normalisation():
    # A published form of this vector sums to 1/2; the solver returns the
    # normalised one, exactly twice it.
    r = solve_traffic(build("z4z4-minS", 0.25)).r
    assert np.allclose(r, oracles.Z4Z4_R, atol=1e-12)
    assert abs(oracles.Z4Z4_R_DISPLAYED.sum() - 0.5) < 1e-12
    assert np.allclose(oracles.Z4Z4_R_DISPLAYED * 2, r, atol=1e-12)


def test_traffic_fixed_point_and_simplex():
    mu = build("z3z3-pq", 0.2, 0.5)
    sol = solve_traffic(mu)
    assert isinstance(sol, TrafficSolution)
    assert sol.residual < 1e-13
    assert abs(sol.r.sum() - 1) < 1e-12
    assert np.max(np.abs(traffic_map(mu, sol.r) - sol.r)) < 1e-13


def test_start_independence():
    mu = build("z3z4-minS", 0.3)
    rng = np.random.default_rng(3)
    ref = solve_traffic(mu).r
    for _ in range(10):
        start = rng.dirichlet(np.ones(5))
        assert np.max(np.abs(solve_traffic(mu, start=start).r - ref)) < 1e-9


def test_measure_validation():
    fp = make_cyclic_free_product([2, 3])
    with pytest.raises(InvalidMeasure):
        StepDistribution(fp, [0.5, 0.2, 0.2])
    with pytest.raises(InvalidMeasure):
        StepDistribution(fp, [1.2, -0.1, -0.1])
    with pytest.raises(InvalidMeasure):
        StepDistribution(fp, [0.0, 0.5, 0.5])
    fp4 = make_cyclic_free_product([4, 3])
    # support {a^2} only generates a subgroup of Z/4
    with pytest.raises(InvalidMeasure):
        StepDistribution(fp4, [0, 0.5, 0, 0.25, 0.25])


def test_solver_options_validated():
    with pytest.raises(ValueError):
        SolverOptions(tolerance=0)
    with pytest.raises(ValueError):
        SolverOptions(damping=1.5)


# stationary traffic equations


@pytest.mark.parametrize("p", [0.05, 0.15, 0.3, 0.45])
def test_stationary_family_i_solvable(p):
    sol = solve_stationary_traffic(build("z3z3-i", p))
    assert sol
    assert np.allclose(sol.r, oracles.z3z3_i_r(p), atol=1e-10)


@pytest.mark.parametrize("p", [0.05, 0.15, 0.3, 0.45])
def test_stationary_family_ii_unsolvable(p):
    assert isinstance(solve_stationary_traffic(build("z3z3-ii", p)), NoSolution)


@pytest.mark.parametrize("p, q", [(0.25, 0.25), (0.1, 0.3), (0.45, 0.05), (0.2, 0.2)])
def test_stationary_z2z3_unsolvable(p, q):
    res = solve_stationary_traffic(build("z2z3", p, q))
    assert not res
    assert res.residual > 1e-6


def test_stationary_simple_zkzk():
    sol = solve_stationary_traffic(FAMILIES["zkzk-simple"].build((4,))[0])
    assert np.allclose(sol.r, oracles.Z4Z4_R, atol=1e-10)


# first passage


@pytest.mark.parametrize("orders", [(2, 3), (3, 4)])
@pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
def test_first_passage_product_identity(orders, p):
    mu = uniform_per_factor(orders).build((p,))[0]
    q = solve_first_passage(mu).q
    fp = mu.fp
    qs = fp.factor_mask @ q
    assert abs(qs[0] * qs[1] - 1) < 1e-8


def test_first_passage_bounds():
    mu = FAMILIES["zkzk-simple"].build((4,))[0]
    sol = solve_first_passage(mu)
    assert np.all(sol.q >= mu.weights - 1e-15)
    assert np.all(sol.q < 1)
    assert np.max(np.abs(first_passage_map(mu, sol.q) - sol.q)) < 1e-12
    # q(a^2) for the simple walk on Z/4*Z/4
    assert abs(sol.q[1] - (np.sqrt(5) - 2)) < 1e-12


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=5, max_size=5), st.lists(st.floats(0.01, 1.0), min_size=5, max_size=5))
def test_traffic_map_preserves_mass(w, r):
    fp = make_cyclic_free_product([3, 4])
    w = np.array(w) / sum(w)
    r = np.array(r) / sum(r)
    mu = StepDistribution(fp, w)
    assert abs(traffic_map(mu, r).sum() - 1) < 1e-12


@pytest.mark.parametrize("p", [0.05, 0.2, 0.4])
def test_z3z3_i_reduced_quadratic(p):
    # R = r(a) + r(b) solves (2p - 1/2) R^2 - (2p - 3/2) R - 1/2 = 0; the
    # printed quadratic carries the opposite sign on the linear term.
    R = 2 * solve_traffic(build("z3z3-i", p)).r[0]
    assert abs((2 * p - 0.5) * R**2 - (2 * p - 1.5) * R - 0.5) < 1e-12
    assert abs((2 * p - 0.5) * R**2 + (2 * p - 1.5) * R - 0.5) > 1e-3
