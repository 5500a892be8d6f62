from math import comb

import pytest
from hypothesis import given, strategies as st

from gwprogeny.errors import InsufficientOrder, NotInvertible, SupercriticalOffspring
from gwprogeny.laws import Geometric, Sibuya, SibuyaOffspring, Tabulated, parse_law
from gwprogeny.progeny import (
    check_is_progeny,
    functional_equation_residual,
    offspring_of,
    progeny_of,
    solve_functional_equation,
)
from gwprogeny.rational import Q
from gwprogeny.series import PowerSeries
from gwprogeny.sibuya import SibuyaParams, sibuya_gf

DELTA0 = Tabulated.finite([1])
DELTA1 = Tabulated.finite([0, 1])


def catalan(n):
    return comb(2 * n, n) // (n + 1)


def test_geometric_half_gives_catalan_law():
    q = progeny_of(Geometric(Q(1, 2)), 40).series(40)
    assert [q[n] for n in range(1, 41)] == [Q(catalan(n - 1), 2 ** (2 * n - 1)) for n in range(1, 41)]
    assert q == sibuya_gf(SibuyaParams(Q(1, 2)), 40)


def test_no_children_means_progeny_one():
    assert progeny_of(DELTA0, 10).series(10) == DELTA1.series(10)
    assert offspring_of(DELTA1, 10).series(10) == DELTA0.series(10)


def test_geometric_three_tenths():
    q = progeny_of(Geometric(Q(3, 10)), 30).series(30)
    assert q == sibuya_gf(SibuyaParams(Q(1, 2), rho=Q(21, 25)), 30)


def test_sibuya_half_inverts_to_geometric():
    p = offspring_of(Sibuya(Q(1, 2)), 30).series(30)
    assert list(p.coeffs) == [Q(1, 2 ** (n + 1)) for n in range(31)]


def test_sibuya_third_is_not_a_progeny():
    p = offspring_of(Sibuya(Q(1, 3)), 20).series(20)
    assert any(c < 0 for c in p.coeffs)
    res = check_is_progeny(Sibuya(Q(1, 3)), 20)
    assert not res.is_progeny
    assert (res.first_negative, res.negative_value) == (6, Q(-1, 81))


def test_no_mass_at_one_is_not_invertible():
    with pytest.raises(NotInvertible):
        offspring_of(Tabulated.finite([0, 0, 1]), 5)


@pytest.mark.slow
def test_two_thirds_passes_to_200():
    assert check_is_progeny(Sibuya(Q(2, 3)), 200).is_progeny


def test_half_passes_to_200():
    res = check_is_progeny(Sibuya(Q(1, 2)), 200)
    assert res.is_progeny and res.first_negative is None


def test_bounded_support_is_rejected():
    res = check_is_progeny(Tabulated.finite([0, Q(1, 2), Q(1, 2)]), 20)
    assert not res.is_progeny
    assert res.first_negative is not None or res.first_excess is not None


def test_residuals():
    zero = PowerSeries.constant(0, 60)
    assert functional_equation_residual(Geometric(Q(1, 2)), Sibuya(Q(1, 2)), 60) == zero
    assert functional_equation_residual(DELTA0, DELTA1, 10) == PowerSeries.constant(0, 10)
    assert functional_equation_residual(Geometric(Q(1, 2)), Sibuya(Q(1, 3)), 20) != PowerSeries.constant(0, 20)


def test_supercritical_rejected():
    with pytest.raises(SupercriticalOffspring):
        progeny_of(Geometric(Q(3, 5)), 10)
    with pytest.raises(SupercriticalOffspring):
        progeny_of(Tabulated.finite([0, 1]), 5)


def test_short_table_needs_more_order():
    p = Tabulated(PowerSeries([Q(1, 2), Q(1, 4)], 1), tail=None)
    with pytest.raises(InsufficientOrder):
        progeny_of(p, 10)


def test_methods_agree_on_heavy_tail():
    p = SibuyaOffspring(Q(3, 2))
    assert progeny_of(p, 60).series(60) == progeny_of(p, 60, method="newton").series(60)
    assert progeny_of(p, 60).series(60) == sibuya_gf(SibuyaParams(Q(2, 3)), 60)


def test_critical_partial_sums_increase_to_one():
    p = Tabulated.finite([Q(1, 4), Q(1, 2), Q(1, 4)])  # mean 1
    sums = [progeny_of(p, n).series(n).partial_sum() for n in (10, 40, 160)]
    assert sums == sorted(sums)
    assert all(s < 1 for s in sums)
    assert 1 - sums[-1] < Q(1, 5)


def test_parse_law_strings():
    assert parse_law("geometric:1/2").series(5) == Geometric(Q(1, 2)).series(5)
    assert parse_law("finite:1/4,1/2,1/4").series(2) == PowerSeries([Q(1, 4), Q(1, 2), Q(1, 4)], 2)
    assert parse_law("hb:2").series(8) == Geometric(Q(1, 2)).series(8)


finite_laws = st.lists(st.integers(0, 6), min_size=2, max_size=5).filter(
    lambda w: w[0] > 0 and sum(i * x for i, x in enumerate(w)) <= sum(w)
).map(lambda w: Tabulated.finite([Q(x, sum(w)) for x in w]))


@given(finite_laws)
def test_round_trip(p):
    order = 10
    q = progeny_of(p, order + 1)
    assert offspring_of(q, order).series(order) == p.series(order)


@given(finite_laws)
def test_lagrange_solves_functional_equation(p):
    order = 12
    q = progeny_of(p, order)
    assert functional_equation_residual(p, q, order) == PowerSeries.constant(0, order)
    assert q.series(order) == solve_functional_equation(p.series(order - 1), order)
    coeffs = q.series(order).coeffs
    assert all(c >= 0 for c in coeffs) and sum(coeffs) <= 1
