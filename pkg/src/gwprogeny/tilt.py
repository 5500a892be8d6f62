"""Natural-exponential-family tilting of offspring and progeny laws.

If ``p`` has progeny ``q``, the tilted offspring law ``f_p(r z)/f_p(r)``
has as progeny the tilted law ``f_q(rho z)/f_q(rho)`` with ``r = f_q(rho)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import IrrationalValue, OutOfRange, SupercriticalTilt, TiltOutOfRange
from .laws import Geometric, Law, Sibuya, SibuyaOffspring, Tilted
from .progeny import functional_equation_residual
from .rational import ONE, ExactRational, Q, RationalLike, exact_power, format_rational
from .series import PowerSeries


@dataclass(frozen=True)
class TiltedOffspring:
    law: Law
    r: ExactRational
    tilted_mean: Optional[ExactRational]
    subcritical: Optional[bool]
    exact: bool

    def to_json(self, order: int) -> dict:
        out = self.law.to_json(order)
        out.update(
            r=format_rational(self.r),
            tilted_mean=None if self.tilted_mean is None else format_rational(self.tilted_mean),
            subcritical=self.subcritical,
            exact_normalizer=self.exact,
        )
        return out


def tilt_offspring(p: Law, r: RationalLike, strict: bool = True) -> TiltedOffspring:
    """Tilt ``p`` by ``r``; with ``strict`` a tilted mean above 1 raises.

    Laws without an exact gf (truncated tables) are tilted only for
    ``r < 1`` and normalized by the truncated sum, which is flagged as
    inexact.
    """
    r = Q(r)
    if r <= 0:
        raise TiltOutOfRange("need r > 0")
    if not p.exact_gf:
        if r >= 1:
            raise TiltOutOfRange("truncated laws can only be tilted with r < 1")
    elif float(r) >= p.radius and not (r == 1 and p.radius >= 1):
        raise TiltOutOfRange(f"r = {format_rational(r)} is outside the radius {p.radius:g}")
    if isinstance(p, Geometric):
        law: Law = Geometric(p.alpha * r)
        m = law.mean()
        exact = True
    else:
        try:
            fr = p.gf(r)
        except IrrationalValue as exc:
            raise TiltOutOfRange(f"f_p(r) is irrational ({exc})") from None
        law = Tilted(p, r, fr)
        exact = p.exact_gf
        m = r * p.gf_prime(r) / fr if exact else None
    sub = None if m is None else m <= 1
    if strict and sub is False:
        raise SupercriticalTilt(f"tilted mean {format_rational(m)} > 1")
    return TiltedOffspring(law=law, r=r, tilted_mean=m, subcritical=sub, exact=exact)


def tilt_progeny(q: Law, rho: RationalLike) -> Law:
    """``f_q(rho z) / f_q(rho)``; identity at ``rho = 1``."""
    rho = Q(rho)
    if not 0 < rho <= 1:
        raise TiltOutOfRange("need 0 < rho <= 1")
    if rho == 1:
        return q
    try:
        return Tilted(q, rho)
    except IrrationalValue as exc:
        raise TiltOutOfRange(f"f_q(rho) is irrational ({exc})") from None


def solve_rho(q: Law, r: RationalLike, denominator_bound: int = 10**12) -> ExactRational:
    """The ``rho`` in ``(0, 1]`` with ``f_q(rho) = r``.

    Sibuya-type laws (which include the progeny of a geometric law) are
    inverted in closed form.  Otherwise ``f_q`` is bisected between exact
    rational endpoints until the bracket is narrower than
    ``1/denominator_bound``; the result is then only approximate.
    """
    r = Q(r)
    if not 0 < r <= 1:
        raise OutOfRange("r must lie in (0, 1]")
    if r == 1:
        return ONE
    if isinstance(q, Sibuya) and q.params.k == 0 and q.params.lam == 1:
        a, rho0 = q.params.a, q.params.rho
        try:
            norm = q.gf(1) if rho0 == 1 else 1 - exact_power(1 - rho0, a)
            # 1 - (1 - rho0 rho)^a = r norm
            return (1 - exact_power(1 - r * norm, 1 / a)) / rho0
        except IrrationalValue:
            pass
    lo, hi = Q(0), ONE
    if q.gf(hi) < r:
        raise OutOfRange(f"r = {format_rational(r)} is not attained by f_q on (0, 1]")
    while (hi - lo) * denominator_bound > 1:
        mid = (lo + hi) / 2
        if q.gf(mid) < r:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def tilt_residual(p: Law, q: Law, r: RationalLike, order: int) -> PowerSeries:
    """``f_{q^rho}(z) - z f_{p^r}(f_{q^rho}(z))`` with ``rho`` solving ``f_q(rho) = r``."""
    tp = tilt_offspring(p, r, strict=True)
    rho = solve_rho(q, r)
    return functional_equation_residual(tp.law, tilt_progeny(q, rho), order)


def geometric_rho(alpha: RationalLike, r: RationalLike) -> ExactRational:
    """``rho = r (1 - alpha r) / (1 - alpha)`` for the geometric family."""
    alpha, r = Q(alpha), Q(r)
    return r * (1 - alpha * r) / (1 - alpha)


def sibuya_offspring_rho(b: RationalLike, r: RationalLike) -> ExactRational:
    """``rho = 1 - (1 - r)^b`` for the offspring law ``h_b``."""
    return 1 - exact_power(1 - Q(r), b)
