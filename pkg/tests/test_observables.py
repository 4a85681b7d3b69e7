import math

import numpy as np
import pytest

import oracles
from freewalk.core import GeneratorSet, make_cyclic_free_product
from freewalk.equations import solve_traffic
from freewalk.harmonic import HarmonicMeasure
from freewalk.observables import (
    Family,
    analyze,
    ball_counts,
    drift_s,
    drift_sigma,
    entropy,
    extremality_ratio,
    growth_numerator,
    maximize,
    parse_grid,
    sweep,
    volume_s,
    volume_sigma,
)
from freewalk.presets import FAMILIES, get_family, uniform_per_factor


def solved(name, *point):
    mu, S = FAMILIES[name].build(point)
    return mu, S, HarmonicMeasure(mu.fp, solve_traffic(mu))


@pytest.mark.parametrize("p", [0.05, 0.25, 0.45])
def test_drift_elementary_cases(p):
    mu, _, hm = solved("z2z3", p, p)
    assert abs(drift_sigma(mu, hm) - oracles.z2z3_sym_drift(p)) < 1e-12
    mu, _, hm = solved("z3z3-ii", p)
    assert abs(drift_sigma(mu, hm) - oracles.z3z3_ii_drift(p)) < 1e-12
    mu, _, hm = solved("z3z3-i", p)
    assert abs(drift_sigma(mu, hm) - oracles.z3z3_i_drift(p)) < 1e-12


def test_drift_z2z3_one_seventh():
    mu, _, hm = solved("z2z3", 0.25, 0.25)
    assert abs(drift_sigma(mu, hm) - 1 / 7) < 1e-13


def test_drift_z2z3_general_grid():
    worst = 0.0
    for p in np.linspace(0.01, 0.9, 20):
        for q in np.linspace(0.015, 0.9, 20):
            if p + q >= 0.99:
                continue
            mu, _, hm = solved("z2z3", p, q)
            worst = max(worst, abs(drift_sigma(mu, hm) - oracles.z2z3_drift(p, q)))
    assert worst < 1e-10


def test_general_drift_reduces_to_symmetric_formula():
    for p in np.linspace(0.05, 0.45, 9):
        assert abs(oracles.z2z3_drift(p, p) - oracles.z2z3_sym_drift(p)) < 1e-12


@pytest.mark.parametrize("p, q", [(0.1, 0.2), (0.5, 0.1), (0.3, 0.3), (0.05, 0.7)])
def test_drift_z3z3_pq(p, q):
    mu, _, hm = solved("z3z3-pq", p, q)
    assert abs(drift_sigma(mu, hm) - oracles.z3z3_pq_drift(p, q)) < 1e-12


@pytest.mark.parametrize("p", [0.02, 0.1, 0.25, 0.4, 0.48])
def test_drift_s_closed_forms(p):
    mu, S, hm = solved("z2z4-minS", p)
    assert abs(drift_s(mu, hm, S) - oracles.z2z4_min_drift_s(p)) < 1e-12
    mu, S, hm = solved("z3z4-minS", p)
    assert abs(drift_s(mu, hm, S) - oracles.z3z4_min_drift_s(p)) < 1e-12
    mu, S, hm = solved("z4z4-minS", p)
    assert abs(drift_s(mu, hm, S) - oracles.z4z4_min_drift_s(p)) < 1e-10


def test_drift_s_full_sigma_equals_drift_sigma():
    mu, _, hm = solved("z3z3-pq", 0.2, 0.3)
    assert abs(drift_s(mu, hm, GeneratorSet.full(mu.fp)) - drift_sigma(mu, hm)) < 1e-14


@pytest.mark.parametrize("p", [0.05, 0.2, 0.25, 0.35, 0.45])
def test_entropy_z4z4_quartic_form(p):
    mu, _, hm = solved("z4z4-minS", p)
    assert abs(entropy(mu, hm) - oracles.z4z4_min_entropy(p)) < 1e-10


def test_entropy_z4z4_quarter():
    mu, S, hm = solved("z4z4-minS", 0.25)
    assert abs(entropy(mu, hm) - oracles.Z4Z4_H) < 1e-12
    assert abs(drift_s(mu, hm, S) - oracles.Z4Z4_GAMMA_S) < 1e-12
    assert abs(extremality_ratio(mu, hm, S) - oracles.Z4Z4_Q) < 1e-12


@pytest.mark.parametrize("orders", [(2, 3), (3, 4), (4, 6)])
@pytest.mark.parametrize("p", [0.1, 0.5, 0.8])
def test_uniform_family_is_extremal(orders, p):
    mu = uniform_per_factor(orders).build((p,))[0]
    hm = HarmonicMeasure(mu.fp, solve_traffic(mu))
    fp = mu.fp
    v = math.log((orders[0] - 1) * (orders[1] - 1)) / 2
    assert abs(entropy(mu, hm) / drift_sigma(mu, hm) - v) < 1e-10
    r1, r2 = fp.factor_mask @ hm.r
    e1, e2 = oracles.uniform_factor_mass(p, *orders)
    assert abs(r1 - e1) < 1e-12 and abs(r2 - e2) < 1e-12


@pytest.mark.parametrize("p", [0.1, 0.2, 0.3, 0.4, 0.45])
def test_z2z2z2_drift_formula(p):
    mu, _, hm = solved("z2z2z2", p)
    assert abs(drift_sigma(mu, hm) - oracles.z2z2z2_drift(p)) < 1e-12


def test_z2z2z2_extremal_only_at_one_third():
    mu, _, hm = solved("z2z2z2", 1 / 3)
    assert abs(entropy(mu, hm) - math.log(2) / 3) < 1e-13
    for p in [0.1, 0.3, 0.34, 0.45]:
        mu, _, hm = solved("z2z2z2", p)
        assert entropy(mu, hm) / (drift_sigma(mu, hm) * math.log(2)) < 1 - 1e-7


def test_z2z2z2_literal_entropy_expression_disagrees():
    # The printed h_p expression gives log 2 at p = 1/3 instead of
    # (1/3) log 2, so it cannot serve as an oracle; the drift expression
    # printed next to it does check out (test above).
    assert abs(oracles.z2z2z2_entropy_literal(1 / 3) - math.log(2)) < 1e-12


@pytest.mark.parametrize(
    "orders, expected",
    [((2, 3), math.log(math.sqrt(2))), ((2, 2, 2), math.log(2)), ((5, 5), math.log(4)), ((3, 4), math.log(math.sqrt(6)))],
)
def test_volume_sigma(orders, expected):
    assert abs(volume_sigma(make_cyclic_free_product(orders)) - expected) < 1e-12


@pytest.mark.parametrize(
    "orders, expected",
    [((2, 4), oracles.V_S_Z2Z4), ((3, 4), oracles.V_S_Z3Z4), ((4, 4), oracles.V_S_Z4Z4)],
)
def test_volume_s(orders, expected):
    fp = make_cyclic_free_product(orders)
    S = GeneratorSet.minimal_symmetric(fp)
    assert abs(volume_s(fp, S) - expected) < 1e-10


def test_volume_s_full_matches_volume_sigma():
    for orders in [(2, 3), (3, 5), (2, 2, 2), (2, 3, 4)]:
        fp = make_cyclic_free_product(orders)
        assert abs(volume_s(fp, GeneratorSet.full(fp)) - volume_sigma(fp)) < 1e-10


@pytest.mark.parametrize("orders", [(2, 4), (3, 4), (4, 4)])
def test_ball_counts_growth(orders):
    fp = make_cyclic_free_product(orders)
    S = GeneratorSet.minimal_symmetric(fp)
    counts = ball_counts(fp, S, 12)
    assert abs(math.log(counts[-1] / counts[-2]) - volume_s(fp, S)) < 1e-2


def test_ball_counts_match_growth_series():
    # coefficients of F = 1 / (sum 1/F_i - (n - 1)) against the BFS spheres
    fp = make_cyclic_free_product([3, 4])
    S = GeneratorSet.minimal_symmetric(fp)
    counts = ball_counts(fp, S, 8)
    spheres = np.diff([0] + counts)
    polys = [S.factor_growth(i) for i in range(2)]
    den = growth_numerator(fp, S)
    num = np.polynomial.polynomial.polymul(polys[0], polys[1])
    series = np.zeros(9)
    for m in range(9):
        acc = num[m] if m < len(num) else 0.0
        for j in range(1, min(m, len(den) - 1) + 1):
            acc -= den[j] * series[m - j]
        series[m] = acc / den[0]
    assert np.allclose(series, spheres)


# ratio behaviour


def test_z2z4_ratio_below_one_and_limit():
    fam = get_family("z2z4-minS")
    vals = []
    for p in [1e-4, 0.01, 0.1, 0.25, 0.4, 0.49]:
        mu, S = fam.build((p,))
        vals.append(extremality_ratio(mu, solve_traffic(mu), S))
    assert all(v < 1 for v in vals)
    assert abs(vals[0] - 1) < 1e-2


def test_z3z4_ratio_at_poly_root():
    roots = sorted(np.roots([5, -13, 7, -1]).real)
    p = roots[1]
    mu, S = get_family("z3z4-minS").build((p,))
    assert abs(extremality_ratio(mu, solve_traffic(mu), S) - 1) < 1e-10


# sweeps and maximisation


def test_sweep_z3z3_i():
    grid = parse_grid("0.01:0.49:97")
    res = sweep(get_family("z3z3-i"), [grid])
    assert len(res.rows) == 97 and not res.failures
    p = res.column("p")
    assert np.all(np.diff(p) > 0)
    assert np.allclose(res.column("gamma_sigma"), [oracles.z3z3_i_drift(x) for x in p], atol=1e-12)
    for row in res.rows:
        a = row.analysis
        assert a.entropy <= a.gamma_sigma * a.v_sigma + 1e-9
        assert a.entropy <= a.gamma_s * a.v_s + 1e-9


def test_sweep_records_failures_and_skips_outside_points():
    res = sweep(get_family("z2z3"), [parse_grid("0:1:5"), parse_grid("0:1:5")])
    # points with mu(a) = 0 or zero mass on the Z/3 factor fail; p + q > 1 is skipped
    assert res.failures
    assert all(sum(row.point) <= 1 for row in res.rows)
    assert len(res.rows) + len(res.failures) == 15


def test_sweep_integer_family():
    res = sweep(get_family("zkzk-simple"), [parse_grid("3:8:6", integer=True)])
    assert np.allclose(res.column("gamma_sigma"), [oracles.ZKZK_DRIFT[k] for k in range(3, 9)], atol=1e-6)


def test_parse_grid():
    assert np.allclose(parse_grid("0:1:3"), [0, 0.5, 1])
    assert np.allclose(parse_grid("0.1,0.2"), [0.1, 0.2])
    with pytest.raises(ValueError):
        parse_grid("0:1")


def test_maximize_z2z3_drift():
    res = maximize(get_family("z2z3"), "drift")
    p, q = res.point
    z0 = 1 - p - q
    assert q == 0.0
    assert abs(res.value - 0.163379) < 1e-5
    assert abs(z0 - 0.490275) < 1e-5
    assert abs(oracles.z2z3_max_poly(z0)) < 1e-8


def test_maximize_ratio_families():
    res = maximize(get_family("z3z4-minS"), "ratio")
    assert abs(res.point[0] - 0.432692) < 1e-4
    assert abs(res.value - 1) < 1e-6
    assert abs(oracles.z3z4_ratio_poly(res.point[0])) < 1e-8
    res = maximize(get_family("z4z4-minS"), "ratio")
    assert abs(res.point[0] - 0.25) < 1e-6


def test_maximize_custom_objective():
    fam = Family("quad", ("x",), ((0.0, 1.0),), lambda x: (None, None))
    res = maximize(fam, lambda x: -(x - 0.3) ** 2)
    assert abs(res.point[0] - 0.3) < 1e-8


def test_analyze_invariants():
    mu, S = get_family("z3z4-minS").build((0.2,))
    a = analyze(mu, S, first_passage=True)
    assert a.invariant_violations() == []
    assert a.q is not None and np.all(a.q < 1)
    assert a.gamma_s >= a.gamma_sigma
