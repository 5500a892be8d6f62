"""The Sibuya family: exact pmf and generating functions, and samplers.

``s_a`` lives on ``{1, 2, ...}`` with generating function ``1 - (1-z)^a``
and masses ``s_a(n) = a(1-a)(2-a)...(n-1-a)/n!``.  Note the positive
product is the mass; written with the rising factorial it is
``-(-a)_n/n!``, with a minus sign.

Three variants share :class:`SibuyaParams` (at most one may be active):

* ``k > 0``: generalized law, events ``A_n`` with probability ``a/(n+k)``,
  gf ``(P_k(z) - (1-z)^a) / (z^k P_k(1))`` where ``P_k`` is the degree-``k``
  Taylor polynomial of ``(1-z)^a``;
* ``rho < 1``: exponential tilt, gf ``(1 - (1-rho z)^a) / (1 - (1-rho)^a)``;
* ``lam < 1``: mixture with an atom at zero, gf ``1 - lam (1-z)^a``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from gmpy2 import mpq

from .errors import InvalidParams, IrrationalValue, SamplerOverflow
from .rational import ONE, ZERO, ExactRational, Q, RationalLike, exact_power, format_rational
from .series import PowerSeries, pow_rational

# trials done one Bernoulli event at a time before switching to inversion
EVENT_STEPS = 64
MAX_DRAW = 2**62


@dataclass(frozen=True)
class SibuyaParams:
    a: ExactRational
    k: int = 0
    rho: ExactRational = ONE
    lam: ExactRational = ONE

    def __post_init__(self):
        object.__setattr__(self, "a", Q(self.a))
        object.__setattr__(self, "rho", Q(self.rho))
        object.__setattr__(self, "lam", Q(self.lam))
        if not 0 < self.a < 1:
            raise InvalidParams(f"need 0 < a < 1, got a={format_rational(self.a)}")
        if not isinstance(self.k, int) or self.k < 0:
            raise InvalidParams(f"k must be a nonnegative integer, got {self.k!r}")
        if not 0 < self.rho <= 1:
            raise InvalidParams(f"need 0 < rho <= 1, got rho={format_rational(self.rho)}")
        if not 0 < self.lam <= 1:
            raise InvalidParams(f"need 0 < lambda <= 1, got lambda={format_rational(self.lam)}")
        active = (self.k != 0) + (self.rho != 1) + (self.lam != 1)
        if active > 1:
            raise InvalidParams("k, rho and lambda are mutually exclusive; set at most one")

    @property
    def plain(self) -> bool:
        return self.k == 0 and self.rho == 1 and self.lam == 1

    def to_json(self) -> dict:
        return {
            "a": format_rational(self.a),
            "k": self.k,
            "rho": format_rational(self.rho),
            "lambda": format_rational(self.lam),
        }


def pochhammer(x: RationalLike, n: int) -> ExactRational:
    """Rising factorial ``x (x+1) ... (x+n-1)``; ``(x)_0 = 1``."""
    x = Q(x)
    out = ONE
    for j in range(n):
        out *= x + j
    return out


def taylor_poly_at_one(a: RationalLike, k: int) -> ExactRational:
    """``P_k(1)`` summed term by term from the Taylor coefficients of ``(1-z)^a``."""
    a = Q(a)
    total = ZERO
    term = ONE
    for j in range(k + 1):
        total += term
        term = term * (j - a) / (j + 1)
    return total


def tilt_normalizer(a: RationalLike, rho: RationalLike) -> ExactRational:
    """``1 - (1-rho)^a`` exactly; raises :class:`InvalidParams` if irrational."""
    try:
        return ONE - exact_power(ONE - Q(rho), a)
    except IrrationalValue as exc:
        raise InvalidParams(
            f"tilted Sibuya normalizer is irrational ({exc}); choose rho so that "
            "(1-rho)^a is rational"
        ) from None


def _plain_pmf(a: ExactRational, n: int) -> ExactRational:
    out = a
    for j in range(1, n):
        out = out * (j - a) / j
    return out / n


def sibuya_gf(params: SibuyaParams, order: int) -> PowerSeries:
    """Exact generating function truncated at ``order``."""
    a = params.a
    if params.k:
        k = params.k
        base = pow_rational(PowerSeries([1, -1], order + k), a)
        # P_k(z) - (1-z)^a kills the first k+1 coefficients
        tail = [ZERO] * (k + 1) + [-c for c in base.coeffs[k + 1 :]]
        return PowerSeries(tail[k:], order) / taylor_poly_at_one(a, k)
    if params.rho != 1:
        inner = pow_rational(PowerSeries([1, -params.rho], order), a)
        return (1 - inner) / tilt_normalizer(a, params.rho)
    return 1 - pow_rational(PowerSeries([1, -1], order), a) * params.lam


def sibuya_pmf(params: SibuyaParams, n: int) -> ExactRational:
    """Exact mass at ``n >= 1``."""
    if n < 1:
        raise InvalidParams(f"sibuya_pmf needs n >= 1, got {n}")
    a = params.a
    if params.k:
        return sibuya_gf(params, n)[n]
    mass = _plain_pmf(a, n)
    if params.rho != 1:
        mass = mass * params.rho**n / tilt_normalizer(a, params.rho)
    return mass * params.lam


def sibuya_pmf_table(params: SibuyaParams, n_max: int) -> list:
    """Masses for ``n = 1..n_max`` (index 0 unused, holds the mass at zero)."""
    return list(sibuya_gf(params, n_max).coeffs)


def survival(params: SibuyaParams, n: int) -> ExactRational:
    """``Pr(S > n) = prod_{j=1..n} (1 - a/(j+k))`` (untilted, no atom)."""
    out = ONE
    for j in range(1, n + 1):
        out *= 1 - params.a / (j + params.k)
    return out


def _log_gamma_ratio(x, a: float):
    """``log Gamma(x+1-a) - log Gamma(x+1)``; accurate for huge ``x`` too."""
    x = np.asarray(x, dtype=float)
    from scipy.special import gammaln

    small = gammaln(x + 1 - a) - gammaln(x + 1)
    xl = np.maximum(x, 1.0)
    # Gamma(x+1-a)/Gamma(x+1) = x^-a (1 - a(1-a)/(2x) + O(x^-2))
    large = -a * np.log(xl) + np.log1p(-a * (1 - a) / (2 * xl))
    return np.where(x < 1e7, small, large)


def _invert_tail(u, a: float, k: int, start: int):
    """Smallest ``n > start`` with ``Pr(S > n | S > start) <= u``, vectorized."""
    u = np.atleast_1d(np.asarray(u, dtype=float))
    base = _log_gamma_ratio(start + k, a)
    logu = np.log(u)

    def logsurv(n):
        return _log_gamma_ratio(n + k, a) - base

    lo = np.full(u.shape, float(start))  # logsurv(lo) > logu
    hi = np.full(u.shape, float(start + 1))
    # exponential search for an upper bracket
    while True:
        bad = logsurv(hi) > logu
        if not bad.any():
            break
        if (hi[bad] > MAX_DRAW).any():
            raise SamplerOverflow(f"Sibuya draw exceeds {MAX_DRAW}")
        lo = np.where(bad, hi, lo)
        hi = np.where(bad, np.floor(2 * hi - start + 1), hi)
    while True:
        mid = np.floor((lo + hi) / 2)
        # beyond 2^53 floats cannot split every gap
        gap = (hi - lo > 1) & (mid > lo) & (mid < hi)
        if not gap.any():
            break
        go_up = logsurv(mid) > logu
        lo = np.where(gap & go_up, mid, lo)
        hi = np.where(gap & ~go_up, mid, hi)
    return hi


def _check_sampler_params(params: SibuyaParams) -> None:
    if params.rho != 1 or params.lam != 1:
        raise InvalidParams("the event sampler supports k only (rho = lambda = 1)")


def sibuya_sample(params: SibuyaParams, rng: np.random.Generator) -> int:
    """One draw of ``min{n : A_n occurs}``, ``Pr(A_n) = a/(n+k)`` independent.

    The first :data:`EVENT_STEPS` events are tried one by one.  If none
    occurs, the remaining events are still independent, so the rest of the
    draw is taken by inverting their conditional survival function with a
    single uniform (heavy tails make one-by-one trials unbounded in cost).
    """
    _check_sampler_params(params)
    a, k = float(params.a), params.k
    for n in range(1, EVENT_STEPS + 1):
        if rng.random() < a / (n + k):
            return n
    return int(_invert_tail(1.0 - rng.random(), a, k, EVENT_STEPS)[0])


def sibuya_sample_many(params: SibuyaParams, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` independent draws; same construction as :func:`sibuya_sample`, vectorized."""
    _check_sampler_params(params)
    a, k = float(params.a), params.k
    out = np.zeros(count, dtype=np.int64)
    alive = np.arange(count)
    for n in range(1, EVENT_STEPS + 1):
        if alive.size == 0:
            return out
        hit = rng.random(alive.size) < a / (n + k)
        out[alive[hit]] = n
        alive = alive[~hit]
    if alive.size:
        draws = _invert_tail(1.0 - rng.random(alive.size), a, k, EVENT_STEPS)
        out[alive] = draws.astype(np.int64)
    return out


def first_return_law(n: int) -> ExactRational:
    """``Pr(T = 2n)`` for the first return to 0 of a simple random walk.

    Equals ``C(2n-2, n-1) / (n 2^(2n-1))``, i.e. ``Catalan(n-1) / 2^(2n-1)``.
    """
    return mpq(math.comb(2 * n - 2, n - 1), n * 2 ** (2 * n - 1))
