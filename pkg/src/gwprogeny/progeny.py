"""Offspring law <-> total-progeny law.

The progeny gf solves ``f_q(z) = z f_p(f_q(z))``.  Forward, ``q`` comes
from Lagrange–Bürmann, ``q_n = (1/n) [u^(n-1)] f_p(u)^n``, or from Newton's
method on the functional equation; the two routes are independent and
must agree.  Backward, with ``g`` the compositional inverse of ``f_q``,
``f_p(u) = u / g(u)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import InsufficientOrder, InvalidParams, NotInvertible, SupercriticalOffspring
from .laws import Law, Tabulated
from .rational import ONE, ZERO, ExactRational, format_rational
from .series import PowerSeries, comp_inverse, compose, derivative, div, lagrange_inversion


def _offspring_coeffs(p: Law, order: int) -> PowerSeries:
    try:
        s = p.series(order)
    except InsufficientOrder:
        raise
    if any(c < 0 for c in s.coeffs):
        n = next(i for i, c in enumerate(s.coeffs) if c < 0)
        raise InvalidParams(f"{p.name} has a negative mass at {n}; not an offspring law")
    if s.partial_sum() > 1:
        raise InvalidParams(f"{p.name} has total mass above 1")
    return s


def check_subcritical(p: Law, order: int) -> ExactRational:
    """Return the best available mean; raise if it already exceeds 1.

    Truncated laws only give a lower bound for the mean, so they are
    rejected only when that lower bound is above 1.
    """
    m = p.mean()
    if m is None:
        m = p.mean_lower_bound(order)
    if m > 1:
        raise SupercriticalOffspring(f"{p.name} has mean {format_rational(m)} > 1")
    return m


def _progeny_tail(p: Law, q: PowerSeries, order: int) -> Optional[ExactRational]:
    # total progeny mass is 1 when p is a full probability law with m <= 1
    m = p.mean()
    try:
        t = p.tail(order)
    except Exception:
        t = None
    if m is not None and m <= 1 and t is not None:
        return 1 - q.partial_sum()
    return None


def progeny_of(p: Law, order: int, method: str = "lagrange") -> Tabulated:
    """Progeny law ``q_1..q_order`` of the offspring law ``p``.

    ``p`` is needed to order ``order - 1``.  ``method`` is ``"lagrange"``
    or ``"newton"``.
    """
    if order < 1:
        raise InvalidParams("order must be >= 1")
    fp = _offspring_coeffs(p, order - 1)
    check_subcritical(p, order - 1)
    if fp.coeffs[0] == 0:
        raise SupercriticalOffspring("p_0 = 0: every individual has a child, the progeny is infinite")
    if method == "lagrange":
        q = lagrange_inversion(fp, order)
    elif method == "newton":
        q = solve_functional_equation(fp, order)
    else:
        raise InvalidParams(f"unknown method {method!r}")
    return Tabulated(q, _progeny_tail(p, q, order), name=f"progeny({p.name})")


def solve_functional_equation(fp: PowerSeries, order: int) -> PowerSeries:
    """Newton iteration for ``y = z f_p(y)``; ``fp`` known to ``order - 1``.

    ``F(y) = y - z f_p(y)`` and ``F'(y) = 1 - z f_p'(y)``; every step
    doubles the number of correct coefficients.
    """
    if fp.order < order - 1:
        raise InsufficientOrder(f"f_p known to order {fp.order}, need {order - 1}")
    dfp = derivative(fp) if fp.order > 0 else PowerSeries([ZERO])
    y = PowerSeries([ZERO, fp.coeffs[0]], 1)
    prec = 1
    while prec < order:
        prec = min(2 * prec, order)
        yp = PowerSeries(y.coeffs, prec)
        F = yp - compose(fp.truncate(prec - 1), yp.truncate(prec - 1)).shift_up(1)
        # F = O(z^2): F'(y) is needed to order prec - 2 only
        m = prec - 2
        if m == 0:
            dF = PowerSeries([ONE])
        else:
            dF = 1 - compose(dfp.truncate(m - 1), yp.truncate(m - 1)).shift_up(1)
        y = yp - div(F.shift_down(2), dF).shift_up(2)
    return y if order > 1 else PowerSeries([ZERO, fp.coeffs[0]])


def offspring_of(q: Law, order: int) -> Tabulated:
    """Coefficients of ``f_p(u) = u / g(u)`` to ``order``, ``g = f_q^(-1)``.

    ``q`` is needed to order ``order + 1``.  Nonnegativity of the result is
    not guaranteed; that is what :func:`check_is_progeny` tests.
    """
    fq = q.series(order + 1)
    if fq.coeffs[0] != 0:
        raise InvalidParams("a progeny law has no mass at 0")
    if fq.coeffs[1] == 0:
        raise NotInvertible("q_1 = 0: the inverse of f_q is not analytic at 0")
    g = comp_inverse(fq)
    fp = div(PowerSeries.constant(1, order), g.shift_down(1))
    return Tabulated(fp, None, name=f"offspring({q.name})")


@dataclass(frozen=True)
class CheckResult:
    is_progeny: bool
    order: int
    first_negative: Optional[int]
    negative_value: Optional[ExactRational]
    first_excess: Optional[int]
    offspring: PowerSeries

    def to_json(self) -> dict:
        return {
            "is_progeny_to_order": self.is_progeny,
            "order": self.order,
            "first_negative": self.first_negative,
            "negative_value": None if self.negative_value is None else format_rational(self.negative_value),
            "first_partial_sum_above_one": self.first_excess,
            "offspring": [format_rational(c) for c in self.offspring.coeffs],
        }


def check_is_progeny(q: Law, order: int) -> CheckResult:
    """Finite-order verdict: offspring masses ``>= 0`` and partial sums ``<= 1``."""
    fp = offspring_of(q, order).series(order)
    neg = next((n for n, c in enumerate(fp.coeffs) if c < 0), None)
    excess, acc = None, ZERO
    for n, c in enumerate(fp.coeffs):
        acc += c
        if acc > 1:
            excess = n
            break
    return CheckResult(
        is_progeny=neg is None and excess is None,
        order=order,
        first_negative=neg,
        negative_value=None if neg is None else fp.coeffs[neg],
        first_excess=excess,
        offspring=fp,
    )


def functional_equation_residual(p: Law, q: Law, order: int) -> PowerSeries:
    """``f_q(z) - z f_p(f_q(z))`` to ``order``; zero iff the pair is consistent."""
    fq = q.series(order)
    if fq.coeffs[0] != 0:
        raise InvalidParams("a progeny law has no mass at 0")
    fp = p.series(order - 1)
    return fq - compose(fp, fq.truncate(order - 1)).shift_up(1)
