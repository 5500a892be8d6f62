from fractions import Fraction
from itertools import product
from math import comb, factorial

import numpy as np
import pytest
from hypothesis import given

from conftest import binomial_series, rising, unit_interval
from gwprogeny.errors import InvalidParams, SamplerOverflow
from gwprogeny.rational import Q
from gwprogeny.series import compose
from gwprogeny.sibuya import (
    SibuyaParams,
    first_return_law,
    pochhammer,
    sibuya_gf,
    sibuya_pmf,
    sibuya_sample,
    sibuya_sample_many,
    survival,
    taylor_poly_at_one,
    tilt_normalizer,
)
from gwprogeny.simulate import compare, histogram

HALF = SibuyaParams(Q(1, 2))


def first_return_counts(max_len):
    """Count +-1 walks of each even length whose first return to 0 is at the end."""
    counts = {}
    for length in range(2, max_len + 1, 2):
        hits = 0
        for steps in product((1, -1), repeat=length):
            pos, ok = 0, True
            for i, s in enumerate(steps):
                pos += s
                if pos == 0 and i < length - 1:
                    ok = False
                    break
            hits += ok and pos == 0
        counts[length] = hits
    return counts


def test_pmf_small_values():
    assert [sibuya_pmf(HALF, n) for n in (1, 2, 3)] == [Q(1, 2), Q(1, 8), Q(1, 16)]


def test_gf_half_to_order_five():
    assert list(sibuya_gf(HALF, 5).coeffs) == [0, Q(1, 2), Q(1, 8), Q(1, 16), Q(5, 128), Q(7, 256)]


def test_pmf_against_binomial_oracle():
    a = Fraction(2, 7)
    oracle = binomial_series(a, 40)
    for n in range(1, 41):
        assert sibuya_pmf(SibuyaParams(Q(2, 7)), n) == -oracle[n]


def test_half_is_first_return_of_walk():
    counts = first_return_counts(16)
    for length, hits in counts.items():
        assert sibuya_pmf(HALF, length // 2) == Q(hits, 2**length)
    # the closed form carries on past what brute force can reach
    for n in range(1, 60):
        assert sibuya_pmf(HALF, n) == first_return_law(n) == Q(comb(2 * n - 2, n - 1), n * 2 ** (2 * n - 1))


def test_total_mass_partial_sum():
    N = 200
    gf = sibuya_gf(HALF, N)
    # 1 - sum_{n<=N} s(n) = Pr(S > N), the survival product
    assert 1 - gf.partial_sum() == survival(HALF, N)


def test_lambda_one_is_plain():
    assert sibuya_gf(SibuyaParams(Q(1, 3), lam=1), 20) == sibuya_gf(SibuyaParams(Q(1, 3)), 20)


def test_zero_atom_mixture():
    p = SibuyaParams(Q(1, 3), lam=Q(1, 2))
    gf = sibuya_gf(p, 10)
    assert gf[0] == Q(1, 2)
    assert gf - Q(1, 2) == sibuya_gf(SibuyaParams(Q(1, 3)), 10) * Q(1, 2)


@pytest.mark.parametrize("k", range(7))
def test_taylor_poly_at_one(k):
    a = Fraction(1, 3)
    direct = sum(binomial_series(a, k))  # P_k(1) is the partial sum of (1-z)^a's expansion at z=1
    assert taylor_poly_at_one(Q(1, 3), k) == direct == rising(1 - a, k) / factorial(k)


def test_generalized_gf_is_a_law():
    p = SibuyaParams(Q(1, 2), k=2)
    gf = sibuya_gf(p, 400)
    assert gf[0] == 0
    assert all(c >= 0 for c in gf.coeffs)
    assert 0 < 1 - gf.partial_sum() < Q(1, 10)
    assert all(sibuya_pmf(p, n) == gf[n] for n in range(1, 15))


def test_tilted_gf_sums_to_one():
    p = SibuyaParams(Q(1, 2), rho=Q(3, 4))
    assert tilt_normalizer(Q(1, 2), Q(3, 4)) == Q(1, 2)
    gf = sibuya_gf(p, 30)
    assert all(sibuya_pmf(p, n) == gf[n] for n in range(1, 31))
    assert gf(Q(1)) < 1


def test_tilt_with_irrational_normalizer_refused():
    with pytest.raises(InvalidParams):
        sibuya_gf(SibuyaParams(Q(1, 2), rho=Q(1, 2)), 5)


def test_pochhammer():
    assert pochhammer(Q(7, 3), 0) == 1
    assert pochhammer(Q(-1, 2), 3) == Q(-3, 8)
    assert pochhammer(Q(2, 3), 5) / factorial(5) == taylor_poly_at_one(Q(1, 3), 5)


@pytest.mark.parametrize("bad", [dict(a=Q(0)), dict(a=Q(1)), dict(a=Q(1, 2), k=-1),
                                 dict(a=Q(1, 2), rho=Q(3, 2)), dict(a=Q(1, 2), k=1, rho=Q(1, 2))])
def test_invalid_params(bad):
    with pytest.raises(InvalidParams):
        SibuyaParams(**bad)


def test_survival_product():
    p = SibuyaParams(Q(3, 5))
    gf = sibuya_gf(p, 50)
    for n in (1, 5, 50):
        assert survival(p, n) == 1 - sum(gf.coeffs[1 : n + 1])


@given(unit_interval, unit_interval)
def test_semigroup(a, b):
    order = 12
    lhs = compose(sibuya_gf(SibuyaParams(a), order), sibuya_gf(SibuyaParams(b), order))
    assert lhs == sibuya_gf(SibuyaParams(a * b), order)


@given(unit_interval)
def test_pmf_matches_gf(a):
    p = SibuyaParams(a)
    gf = sibuya_gf(p, 15)
    assert [sibuya_pmf(p, n) for n in range(1, 16)] == list(gf.coeffs[1:])


@pytest.mark.parametrize("k", [0, 1])
def test_sampler_matches_pmf(k):
    p = SibuyaParams(Q(1, 2), k=k)
    draws = sibuya_sample_many(p, 10**6, np.random.default_rng(11 + k))
    res = compare(histogram(draws, 20), sibuya_gf(p, 20), 20)
    assert res.passed, res


def test_sampler_near_one():
    p = SibuyaParams(Q(999, 1000))
    draws = sibuya_sample_many(p, 10**5, np.random.default_rng(5))
    assert abs(np.mean(draws == 1) - 0.999) < 5e-4


def test_sampler_scalar_and_heavy_tail():
    rng = np.random.default_rng(0)
    x = sibuya_sample(SibuyaParams(Q(1, 3)), rng)
    assert isinstance(x, int) and x >= 1
    draws = sibuya_sample_many(SibuyaParams(Q(1, 3)), 2 * 10**5, rng)
    # Pr(S > 10^4) from the exact survival product, reached only through the inversion branch
    target = float(survival(SibuyaParams(Q(1, 3)), 10**4))
    se = (target * (1 - target) / draws.size) ** 0.5
    assert abs(np.mean(draws > 10**4) - target) < 4 * se


def test_sampler_overflow_is_loud():
    with pytest.raises(SamplerOverflow):
        sibuya_sample_many(SibuyaParams(Q(1, 100)), 10**3, np.random.default_rng(0))


def test_sampler_rejects_tilted_params():
    with pytest.raises(InvalidParams):
        sibuya_sample(SibuyaParams(Q(1, 2), rho=Q(3, 4)), np.random.default_rng(0))


def test_half_vs_third_fails():
    draws = sibuya_sample_many(HALF, 10**5, np.random.default_rng(2))
    res = compare(histogram(draws, 20), sibuya_gf(SibuyaParams(Q(1, 3)), 20), 20)
    assert not res.passed and res.tv_distance > 0.1
