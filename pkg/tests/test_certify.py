from fractions import Fraction
from math import factorial, pi, sin

import pytest
from hypothesis import given, strategies as st

from conftest import binomial_series, rising
from gwprogeny import certify as cert
from gwprogeny.rational import Q
from gwprogeny.series import PowerSeries


def P_oracle(b, n_max):
    """b*u / (1 - (1-u)^b) by schoolbook long division in Fraction."""
    b = Fraction(b)
    one_minus = binomial_series(b, n_max + 1)
    den = [-one_minus[n + 1] / b for n in range(n_max + 1)]  # Psi, Psi(0) = 1
    out = []
    for n in range(n_max + 1):
        acc = Fraction(int(n == 0))
        acc -= sum(den[k] * out[n - k] for k in range(1, n + 1))
        out.append(acc)
    return out


def test_b2_is_geometric():
    h = cert.hb_series(2, 40)
    assert list(h.coeffs) == [Q(1, 2 ** (n + 1)) for n in range(41)]
    assert list(cert.P_coeffs(2, 200)) == [Q(1, 2**n) for n in range(201)]


def test_b3_values():
    assert list((cert.hb_series(3, 6) * 3).coeffs) == [1, 1, Q(2, 3), Q(1, 3), Q(1, 9), 0, Q(-1, 27)]
    P = cert.P_coeffs(3, 6)
    assert (P[5], P[6]) == (0, Q(-1, 27))


def test_b3_closed_form():
    P = cert.P_coeffs(3, 30)
    for n in range(31):
        assert abs(cert.b3_closed_form(n) - float(P[n])) < 1e-12
        assert abs(3 ** (-n / 2) * sin((n + 1) * pi / 6) / sin(pi / 6) - float(P[n])) < 1e-12


def test_b4_values():
    P = cert.P_coeffs(4, 5)
    assert (P[4], P[5]) == (Q(1, 16), Q(-7, 32))


@pytest.mark.parametrize("b", [Fraction(3, 2), Fraction(5, 2), Fraction(7, 3), Fraction(11, 10), Fraction(4)])
def test_P_against_long_division(b):
    got = cert.P_coeffs(Q(b.numerator, b.denominator), 40)
    assert list(got) == P_oracle(b, 40)
    assert got[1] == Q(b.numerator - b.denominator, 2 * b.denominator)


def test_P_is_b_times_hb():
    for b in (Q(3, 2), Q(13, 5)):
        assert list(cert.P_coeffs(b, 30)) == list((cert.hb_series(b, 30) * b).coeffs)


def test_H_series():
    b = Q(3, 2)
    H = cert.H_series(b, 100)
    assert H[0] == (b - 1) / 2
    assert all(c > 0 for c in H.coeffs)
    for n in range(1, 30):
        assert H[n] == (b - 1) * cert_prod(b, n) / factorial(n + 2)


def cert_prod(b, n):
    out = Q(1)
    for j in range(2, n + 2):
        out *= j - b
    return out


@pytest.mark.parametrize("b", [Q(3, 2), Q(5, 2), Q(4), Q(2)])
def test_H_identity(b):
    # b h_b (1 - u H) = 1
    N = 60
    H = cert.H_series(b, N)
    u = PowerSeries.variable(N)
    assert cert.hb_series(b, N) * b * (1 - u * H) == PowerSeries.constant(1, N)
    assert cert.h_identity_holds(b, N)


def test_p_coeffs_and_reciprocity():
    b = Q(5, 2)
    p = cert.p_coeffs(b, 100)
    assert (p[0], p[1]) == (1, -(b - 1) / 2)
    assert all(p[n] > 0 for n in range(2, 101))
    fb = Fraction(5, 2)
    for n in range(2, 21):
        assert p[n] == rising(1 - fb, n) / factorial(n + 1)
    prod = PowerSeries(p, 100) * PowerSeries(cert.P_coeffs(b, 100), 100)
    assert prod == PowerSeries.constant(1, 100)


def test_scaled_pair():
    b = Q(5, 2)
    pair = cert.scaled_pair(b, 101)
    P = cert.P_coeffs(b, 101)
    for n in (2, 17, 64, 101):
        assert pair.A[n] * ((b - 1) / 2) ** n == P[n]
    assert (pair.A[1], pair.a[1]) == (1, -1)
    assert all(pair.recurrence_residual(n) == 0 for n in range(4, 101))
    assert (PowerSeries(pair.A, 101) * PowerSeries(pair.a, 101)) == PowerSeries.constant(1, 101)


@pytest.mark.parametrize("b", [Q(5, 2), Q(7, 3), Q(11, 4)])
def test_ratio_formula_and_limit(b):
    pair = cert.scaled_pair(b, 401)
    target = 2 / (b - 1)
    for n in (10, 100, 400):
        assert pair.ratio(n) == cert.exact_ratio(b, n) == (n + 1 - b) / (n + 2) * target
    # the ratio tends to 2/(b-1) > 1, but only like 1 - (b+1)/(n+2)
    errs = [abs(pair.ratio(n) - target) / target for n in (100, 200, 400)]
    assert errs == sorted(errs, reverse=True)
    assert errs[0] == (b + 1) / 102
    assert target > 1


def test_first_negative_examples():
    assert cert.first_negative(Q(2000000001, 1000000000), 60).first_negative == 45
    assert cert.first_negative(3, 30).first_negative == 6
    rep = cert.first_negative(4, 5)
    assert (rep.first_negative, rep.value_at_first_negative) == (5, Q(-7, 32))


def test_three_halves_certified():
    rep = cert.certify(Q(3, 2), 500)
    assert rep.first_negative is None
    assert rep.structural_certificate and rep.h_identity


def test_sharp_above_three():
    reps = cert.certify_interval([Q(4), Q(5), Q(10)], 5)
    assert all(r.first_negative is not None and r.first_negative <= 5 for r in reps)


def test_failure_window():
    reps = cert.certify_interval([Q(5, 2), Q(29, 10)], 2000)
    assert [r.first_negative for r in reps] == [7, 6]


@pytest.mark.slow
def test_positive_grid_to_500():
    grid = cert.rational_grid(Q(11, 10), 2, Q(1, 5)) + [Q(2)]
    reps = cert.certify_interval(sorted(set(grid)), 500, workers=2)
    assert all(r.first_negative is None and r.h_identity for r in reps)


def test_rational_grid_is_exact():
    g = cert.rational_grid(Q(1), Q(2), Q(1, 3))
    assert g == [1, Q(4, 3), Q(5, 3), 2]


def test_discrepancy_report():
    rows = cert.discrepancy_report()
    assert rows
    for r in rows:
        if r["ratio"] is not None:
            assert Q(r["ratio"]) == r["n_factorial"]
            assert r["same_sign"]
    # b=2 fixes the normalisation: P_2 must be 1/4
    assert cert.P_coeffs(2, 2)[2] == Q(1, 4)


def test_low_order_closed_forms():
    for b in (Q(5, 2), Q(7, 3), Q(6)):
        P = cert.P_coeffs(b, 5)
        assert P[2] == (b**2 - 1) / 12
        assert P[3] == (b**2 - 1) / 24
        assert P[4] == -(b**2 - 1) * (b**2 - 19) / 720
        assert P[5] == -(b - 3) * (b - 1) * (b + 1) * (b + 3) / 480


def test_report_json():
    data = cert.certify(Q(5, 2), 50).to_json()
    assert data["b"] == "5/2" and data["first_negative"] == 7
    assert set(data) >= {"b", "first_negative", "value", "elapsed_ms"}


@given(st.integers(2, 12), st.integers(1, 12))
def test_first_negative_matches_oracle(num_extra, den):
    b = Q(den + num_extra, den)  # b in (1, 13]
    fb = Fraction(den + num_extra, den)
    P = P_oracle(fb, 25)
    expected = next((n for n, c in enumerate(P) if c < 0), None)
    assert cert.first_negative(b, 25).first_negative == expected
    if fb <= 2:
        assert expected is None
