"""Sign certification for the coefficients of ``h_b(u) = u / (1 - (1-u)^b)``.

``s_{1/b}`` is a progeny exactly when ``h_b`` has nonnegative coefficients.
Everything here is exact rational arithmetic: near ``b = 2`` the sign of a
coefficient comes down to cancellations far below double precision.

Notation (all series in ``u`` unless stated):

* ``psi(u) = (1 - (1-u)^b) / (b u)`` with ``psi(0) = 1``; its coefficients
  are ``p_n = (1-b)_n / (n+1)!``.
* ``b h_b = 1 / psi = 1 + (b-1)/2 u + sum P_n u^n``.
* ``H(u)`` with ``1 - u H(u) = psi(u)``; for ``1 < b < 2`` every coefficient
  of ``H`` is positive, so ``h_b = (1/b) sum (u H)^n`` is a structural
  positivity certificate valid for all orders.
* with ``v = (b-1) u / 2``: ``A_n = P_n (2/(b-1))^n``, ``a_n = p_n (2/(b-1))^n``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

from gmpy2 import mpq

from .errors import InvalidParams
from .rational import ONE, ZERO, ExactRational, Q, RationalLike, format_rational
from .series import PowerSeries, div, iter_quotient, mul, pow_rational

DEFAULT_N_MAX = 500


def _b(b: RationalLike) -> ExactRational:
    b = Q(b)
    if b <= 1:
        raise InvalidParams(f"need b > 1, got b={format_rational(b)}")
    return b


def psi_series(b: RationalLike, order: int) -> PowerSeries:
    """``(1 - (1-u)^b) / (b u)`` with the removable factor ``u`` divided out."""
    b = _b(b)
    g = 1 - pow_rational(PowerSeries([1, -1], order + 1), b)
    return g.shift_down(1) / b


def hb_series(b: RationalLike, order: int) -> PowerSeries:
    """Coefficients of ``h_b(u) = u / (1 - (1-u)^b)`` to ``order``."""
    b = _b(b)
    return div(PowerSeries.constant(ONE / b, order), psi_series(b, order))


def P_coeffs(b: RationalLike, order: int) -> tuple:
    """Coefficients of ``b u / (1 - (1-u)^b)`` at ``u^0 .. u^order``.

    Index 0 is 1 and index 1 is ``(b-1)/2``; the ``P_n`` proper start at 2.
    """
    b = _b(b)
    return div(PowerSeries.constant(1, order), psi_series(b, order)).coeffs


def H_series(b: RationalLike, order: int) -> PowerSeries:
    """``H(u) = (b-1)/2 + sum_{n>=1} (b-1)(2-b)...(n+1-b) u^n / (n+2)!``."""
    b = _b(b)
    c = (b - 1) / 2
    out = [c]
    for n in range(1, order + 1):
        c = c * (n + 1 - b) / (n + 2)
        out.append(c)
    return PowerSeries(out, order)


def p_coeffs(b: RationalLike, order: int) -> tuple:
    """``p_n = (1-b)_n / (n+1)!`` for ``n = 0..order`` (so ``p_0 = 1``, ``p_1 = -(b-1)/2``)."""
    b = _b(b)
    c = ONE
    out = [c]
    for n in range(1, order + 1):
        c = c * (n - b) / (n + 1)
        out.append(c)
    return tuple(out)


def _rescale(s: PowerSeries, d) -> PowerSeries:
    """Substitute ``u = d w``: coefficient ``n`` is multiplied by ``d^n``."""
    out, f = [], ONE
    for c in s.coeffs:
        out.append(c * f)
        f *= d
    return PowerSeries(out, s.order)


def _scan(b: ExactRational, n_max: int, stop_at_negative: bool):
    """Generate the ``b h_b`` coefficients in the variable ``w = u/d``.

    ``d`` is the denominator of ``b``.  The substitution multiplies the
    ``n``-th coefficient by ``d^n > 0``, so signs are untouched, while the
    denominators shrink and the exact division runs several times faster.
    Returns ``(first_negative, value, scaled_coeffs, d)``.
    """
    d = b.denominator
    scaled_psi = _rescale(psi_series(b, n_max), d)
    coeffs = []
    for n, c in enumerate(iter_quotient(PowerSeries.constant(1, n_max), scaled_psi)):
        coeffs.append(c)
        if c < 0 and stop_at_negative:
            return n, c / mpq(d) ** n, coeffs, d
    neg = next((n for n, c in enumerate(coeffs) if c < 0), None)
    value = None if neg is None else coeffs[neg] / mpq(d) ** neg
    return neg, value, coeffs, d


def _identity_from_scaled(b: ExactRational, scaled_coeffs: list, d, order: int) -> bool:
    one_minus_uH = 1 - H_series(b, order - 1).shift_up(1)
    product = mul(PowerSeries(scaled_coeffs[: order + 1], order), _rescale(one_minus_uH, d))
    return product == PowerSeries.constant(1, order)


def h_identity_holds(b: RationalLike, order: int) -> bool:
    """Check ``b h_b(u) (1 - u H(u)) = 1`` exactly to ``order``.

    The check runs after the substitution ``u = d w`` (a ring automorphism
    of truncated series), so it is equivalent to the check in ``u``.
    """
    b = _b(b)
    _, _, coeffs, d = _scan(b, order, stop_at_negative=False)
    return _identity_from_scaled(b, coeffs, d, order)


def structural_certificate(b: RationalLike) -> bool:
    """True iff every coefficient of ``H`` is nonnegative for every order.

    ``H_n`` is ``(b-1)/(n+2)!`` times ``prod_{j=2..n+1} (j - b)``, so this
    reduces to a sign condition on finitely many factors: it holds exactly
    for ``1 < b <= 2``.
    """
    b = _b(b)
    return b <= 2


@dataclass(frozen=True)
class CertificateReport:
    b: ExactRational
    n_max: int
    first_negative: Optional[int]
    value_at_first_negative: Optional[ExactRational]
    elapsed: float
    structural_certificate: bool = False
    h_identity: Optional[bool] = None

    def to_json(self) -> dict:
        return {
            "b": format_rational(self.b),
            "n_max": self.n_max,
            "first_negative": self.first_negative,
            "value": None
            if self.value_at_first_negative is None
            else format_rational(self.value_at_first_negative),
            "elapsed_ms": round(self.elapsed * 1000, 3),
            "structural_certificate": self.structural_certificate,
            "h_identity": self.h_identity,
        }


def first_negative(b: RationalLike, n_max: int = DEFAULT_N_MAX) -> CertificateReport:
    """Smallest ``n <= n_max`` with ``P_n < 0``, or none.

    The quotient is generated lazily and the scan stops at the first
    negative coefficient.
    """
    b = _b(b)
    if n_max < 2:
        raise InvalidParams("n_max must be >= 2")
    t0 = time.perf_counter()
    found, value, _, _ = _scan(b, n_max, stop_at_negative=True)
    return CertificateReport(
        b=b,
        n_max=n_max,
        first_negative=found,
        value_at_first_negative=value,
        elapsed=time.perf_counter() - t0,
        structural_certificate=structural_certificate(b),
    )


def certify(b: RationalLike, n_max: int = DEFAULT_N_MAX, check_identity: bool = True) -> CertificateReport:
    """:func:`first_negative` plus, for ``1 < b <= 2``, the ``H``-identity check."""
    b = _b(b)
    if n_max < 2:
        raise InvalidParams("n_max must be >= 2")
    t0 = time.perf_counter()
    found, value, coeffs, d = _scan(b, n_max, stop_at_negative=True)
    structural = structural_certificate(b)
    identity = None
    if check_identity and structural:
        if found is not None:
            _, _, coeffs, d = _scan(b, n_max, stop_at_negative=False)
        identity = _identity_from_scaled(b, coeffs, d, n_max)
    return CertificateReport(
        b=b,
        n_max=n_max,
        first_negative=found,
        value_at_first_negative=value,
        elapsed=time.perf_counter() - t0,
        structural_certificate=structural,
        h_identity=identity,
    )


def _certify_task(args):
    b, n_max, check_identity = args
    return certify(b, n_max, check_identity)


def certify_interval(
    b_grid: Sequence[RationalLike],
    n_max: int = DEFAULT_N_MAX,
    workers: int = 1,
    check_identity: bool = True,
) -> list:
    """One :class:`CertificateReport` per grid value, in input order."""
    tasks = [(_b(b), n_max, check_identity) for b in b_grid]
    if workers <= 1 or len(tasks) <= 1:
        return [_certify_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_certify_task, tasks))


def rational_grid(start: RationalLike, stop: RationalLike, step: RationalLike) -> list:
    """``start, start+step, ...`` up to and including ``stop`` (exact)."""
    start, stop, step = Q(start), Q(stop), Q(step)
    if step <= 0:
        raise InvalidParams("step must be positive")
    out = []
    x = start
    while x <= stop:
        out.append(x)
        x += step
    return out


@dataclass(frozen=True)
class ScaledSeriesPair:
    """Both sides rescaled by ``v = (b-1) u / 2``; index ``n`` is the ``v^n`` coefficient."""

    b: ExactRational
    A: tuple
    a: tuple
    order: int = field(default=0)

    def recurrence_residual(self, n: int) -> ExactRational:
        """``a_n + a_{n-1} + sum_{k=2}^{n-2} A_{n-k} a_k - (A_{n-1} - A_n)``; zero for ``n >= 4``."""
        A, a = self.A, self.a
        conv = sum((A[n - k] * a[k] for k in range(2, n - 1)), ZERO)
        return a[n] + a[n - 1] + conv - (A[n - 1] - A[n])

    def ratio(self, n: int) -> ExactRational:
        """``a_{n+1} / a_n``; tends to ``2/(b-1)``."""
        return self.a[n + 1] / self.a[n]


def scaled_pair(b: RationalLike, order: int) -> ScaledSeriesPair:
    b = _b(b)
    scale = 2 / (b - 1)
    P = P_coeffs(b, order)
    p = p_coeffs(b, order)
    A, a = [], []
    s = ONE
    for n in range(order + 1):
        A.append(P[n] * s)
        a.append(p[n] * s)
        s *= scale
    return ScaledSeriesPair(b=b, A=tuple(A), a=tuple(a), order=order)


def exact_ratio(b: RationalLike, n: int) -> ExactRational:
    """Closed form of ``a_{n+1}/a_n = (n+1-b)/(n+2) * 2/(b-1)``."""
    b = _b(b)
    return (n + 1 - b) / mpq(n + 2) * 2 / (b - 1)


def b3_closed_form(n: int) -> float:
    """Coefficient of ``u^n`` in ``1 / (1 - u + u^2/3)`` from its complex roots.

    The roots are ``sqrt(3) exp(+-i pi/6)``, so the coefficient is
    ``3^(-n/2) sin((n+1) pi/6) / sin(pi/6)``: the modulus enters with a
    negative exponent, the coefficients decay.
    """
    return 3 ** (-n / 2) * math.sin((n + 1) * math.pi / 6) / math.sin(math.pi / 6)


def reference_P(b: RationalLike) -> dict:
    """Reference closed forms for ``P_2 .. P_5`` in derivative normalisation.

    These are ``P^(n)(0)``, i.e. ``n!`` times the series coefficients; kept
    to be compared against the expansion.
    """
    b = Q(b)
    s = b * b - 1
    return {2: s / 6, 3: s / 4, 4: (19 - b * b) * s / 30, 5: (9 - b * b) * s / 4}


def discrepancy_report(b_values: Sequence[RationalLike] = (2, 3, mpq(5, 2), 4)) -> list:
    """Rows comparing the reference ``P_2..P_5`` with the direct expansion."""
    rows = []
    for b in b_values:
        b = _b(b)
        P = P_coeffs(b, 5)
        for n, pub in reference_P(b).items():
            ratio = None if P[n] == 0 else pub / P[n]
            rows.append(
                {
                    "b": format_rational(b),
                    "n": n,
                    "expansion": format_rational(P[n]),
                    "reference": format_rational(pub),
                    "ratio": None if ratio is None else format_rational(ratio),
                    "n_factorial": math.factorial(n),
                    "same_sign": (pub > 0) == (P[n] > 0) and (pub < 0) == (P[n] < 0),
                }
            )
    return rows
