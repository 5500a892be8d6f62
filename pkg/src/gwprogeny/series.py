"""Truncated formal power series with exact rational coefficients.

A :class:`PowerSeries` of order ``N`` stores the coefficients of
``u^0 .. u^N`` and stands for a function known modulo ``O(u^(N+1))``.
Binary operations return a series of the smaller input order, so a
coefficient is never reported beyond the point where it is trustworthy.

Values are immutable; every operation is a pure function.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

from gmpy2 import mpq

from .errors import (
    CompositionNeedsZeroConstant,
    DivisionByNonUnit,
    InvalidParams,
    NotInvertible,
    PowNeedsUnitConstant,
)
from .rational import ONE, ZERO, ExactRational, Q, RationalLike, format_rational, parse_rational

__all__ = [
    "PowerSeries",
    "add",
    "sub",
    "mul",
    "div",
    "compose",
    "comp_inverse",
    "comp_inverse_lagrange",
    "lagrange_inversion",
    "pow_rational",
    "pow_int",
    "log_series",
    "exp_series",
    "derivative",
    "integrate",
    "iter_quotient",
]


class PowerSeries:
    """Truncated power series ``c_0 + c_1 u + ... + c_N u^N + O(u^(N+1))``."""

    __slots__ = ("_c",)

    def __init__(self, coeffs: Iterable[RationalLike], order: int | None = None):
        c = [Q(x) for x in coeffs]
        if order is None:
            if not c:
                raise InvalidParams("empty coefficient list needs an explicit order")
            order = len(c) - 1
        if order < 0:
            raise InvalidParams(f"order must be >= 0, got {order}")
        if len(c) <= order:
            c.extend([ZERO] * (order + 1 - len(c)))
        self._c = tuple(c[: order + 1])

    @classmethod
    def _raw(cls, coeffs: Sequence) -> "PowerSeries":
        obj = cls.__new__(cls)
        obj._c = tuple(coeffs)
        return obj

    # construction helpers

    @classmethod
    def constant(cls, value: RationalLike, order: int) -> "PowerSeries":
        return cls([value], order)

    @classmethod
    def variable(cls, order: int) -> "PowerSeries":
        """The series ``u``."""
        if order < 1:
            raise InvalidParams("the variable needs order >= 1")
        return cls([0, 1], order)

    @classmethod
    def monomial(cls, coeff: RationalLike, power: int, order: int) -> "PowerSeries":
        c = [ZERO] * (order + 1)
        if power <= order:
            c[power] = Q(coeff)
        return cls._raw(c)

    # basic protocol

    @property
    def order(self) -> int:
        return len(self._c) - 1

    @property
    def coeffs(self) -> tuple:
        return self._c

    def __len__(self) -> int:
        return len(self._c)

    def __iter__(self) -> Iterator:
        return iter(self._c)

    def __getitem__(self, n):
        if isinstance(n, slice):
            return self._c[n]
        if n < 0:
            raise IndexError("negative coefficient index")
        if n > self.order:
            raise IndexError(f"coefficient u^{n} is beyond the truncation order {self.order}")
        return self._c[n]

    def __repr__(self) -> str:
        shown = ", ".join(format_rational(x) for x in self._c[:8])
        more = ", ..." if len(self._c) > 8 else ""
        return f"PowerSeries([{shown}{more}], order={self.order})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, PowerSeries):
            try:
                other = PowerSeries.constant(Q(other), self.order)
            except Exception:
                return NotImplemented
        n = min(self.order, other.order)
        return self._c[: n + 1] == other._c[: n + 1]

    __hash__ = None  # equality is order-relative, so no consistent hash

    def truncate(self, order: int) -> "PowerSeries":
        if order > self.order:
            raise InvalidParams(f"cannot raise order {self.order} to {order} by truncation")
        return PowerSeries._raw(self._c[: order + 1])

    def valuation(self) -> int | None:
        """Index of the first nonzero coefficient, or ``None`` if all vanish."""
        for i, x in enumerate(self._c):
            if x != 0:
                return i
        return None

    def shift_down(self, k: int = 1) -> "PowerSeries":
        """Exact division by ``u^k``; the low ``k`` coefficients must vanish."""
        if k > self.order:
            raise InvalidParams("shift exceeds the truncation order")
        if any(x != 0 for x in self._c[:k]):
            raise DivisionByNonUnit(f"series is not divisible by u^{k}")
        return PowerSeries._raw(self._c[k:])

    def shift_up(self, k: int = 1) -> "PowerSeries":
        """Multiplication by ``u^k``; the order grows by ``k``."""
        return PowerSeries._raw((ZERO,) * k + self._c)

    def __call__(self, x: RationalLike):
        """Evaluate the truncation polynomial at ``x`` (exact Horner)."""
        x = Q(x)
        acc = ZERO
        for c in reversed(self._c):
            acc = acc * x + c
        return acc

    def partial_sum(self) -> ExactRational:
        return sum(self._c, ZERO)

    # operators

    def __add__(self, other):
        if isinstance(other, PowerSeries):
            return add(self, other)
        c = list(self._c)
        c[0] = c[0] + Q(other)
        return PowerSeries._raw(c)

    __radd__ = __add__

    def __neg__(self):
        return PowerSeries._raw([-x for x in self._c])

    def __sub__(self, other):
        if isinstance(other, PowerSeries):
            return sub(self, other)
        return self + (-Q(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, PowerSeries):
            return mul(self, other)
        k = Q(other)
        return PowerSeries._raw([x * k for x in self._c])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, PowerSeries):
            return div(self, other)
        k = Q(other)
        if k == 0:
            raise DivisionByNonUnit("division by zero scalar")
        return PowerSeries._raw([x / k for x in self._c])

    def __rtruediv__(self, other):
        return div(PowerSeries.constant(Q(other), self.order), self)

    def __pow__(self, e):
        e = Q(e)
        if e.denominator == 1 and e >= 0:
            return pow_int(self, int(e))
        return pow_rational(self, e)

    # serialization

    def to_json(self) -> dict:
        return {"order": self.order, "coeffs": [format_rational(x) for x in self._c]}

    @classmethod
    def from_json(cls, data: dict) -> "PowerSeries":
        coeffs = [parse_rational(str(x)) for x in data["coeffs"]]
        order = int(data.get("order", len(coeffs) - 1))
        if len(coeffs) != order + 1:
            raise InvalidParams(f"order {order} needs {order + 1} coefficients, got {len(coeffs)}")
        return cls._raw(coeffs)


def _common(s: PowerSeries, t: PowerSeries) -> int:
    return min(s.order, t.order)


def add(s: PowerSeries, t: PowerSeries) -> PowerSeries:
    n = _common(s, t)
    return PowerSeries._raw([a + b for a, b in zip(s.coeffs[: n + 1], t.coeffs[: n + 1])])


def sub(s: PowerSeries, t: PowerSeries) -> PowerSeries:
    n = _common(s, t)
    return PowerSeries._raw([a - b for a, b in zip(s.coeffs[: n + 1], t.coeffs[: n + 1])])


def _mul_lists(a: Sequence, b: Sequence, n: int) -> list:
    out = [ZERO] * (n + 1)
    bn = [(j, y) for j, y in enumerate(b[: n + 1]) if y != 0]
    for i, x in enumerate(a[: n + 1]):
        if x == 0:
            continue
        lim = n - i
        for j, y in bn:
            if j > lim:
                break
            out[i + j] += x * y
    return out


def mul(s: PowerSeries, t: PowerSeries) -> PowerSeries:
    """Cauchy product truncated to the smaller order."""
    n = _common(s, t)
    a, b = s.coeffs, t.coeffs
    # iterate over the sparser factor in the outer loop
    if sum(1 for x in a[: n + 1] if x != 0) > sum(1 for y in b[: n + 1] if y != 0):
        a, b = b, a
    return PowerSeries._raw(_mul_lists(a, b, n))


def iter_quotient(s: PowerSeries, t: PowerSeries) -> Iterator[ExactRational]:
    """Yield the coefficients of ``s/t`` one at a time.

    Lets callers stop at the first interesting coefficient without paying
    for the full quotient.
    """
    t0 = t.coeffs[0]
    if t0 == 0:
        raise DivisionByNonUnit("divisor has zero constant term")
    n = _common(s, t)
    tc = [(k, y) for k, y in enumerate(t.coeffs[1 : n + 1], start=1) if y != 0]
    sc = s.coeffs
    q: list = []
    inv0 = ONE / t0
    for m in range(n + 1):
        acc = sc[m]
        for k, y in tc:
            if k > m:
                break
            acc -= y * q[m - k]
        qm = acc * inv0
        q.append(qm)
        yield qm


def div(s: PowerSeries, t: PowerSeries) -> PowerSeries:
    """Quotient ``s/t``; ``t`` must have a nonzero constant term."""
    if t.coeffs[0] == 0:
        raise DivisionByNonUnit("divisor has zero constant term")
    return PowerSeries._raw(list(iter_quotient(s, t)))


def compose(outer: PowerSeries, inner: PowerSeries) -> PowerSeries:
    """``outer(inner(u))``; ``inner`` must have zero constant term.

    Horner's scheme where the partial result at depth ``k`` is only kept to
    order ``N-k``, because it gets multiplied by ``inner^k`` afterwards.
    """
    if inner.coeffs[0] != 0:
        raise CompositionNeedsZeroConstant("inner series has a nonzero constant term")
    n = _common(outer, inner)
    oc = outer.coeffs
    ic = [(j, y) for j, y in enumerate(inner.coeffs[1 : n + 1], start=1) if y != 0]
    res = [oc[n]]
    for k in range(n - 1, -1, -1):
        m = n - k
        new = [ZERO] * (m + 1)
        for i, r in enumerate(res):
            if r == 0:
                continue
            lim = m - i
            for j, y in ic:
                if j > lim:
                    break
                new[i + j] += r * y
        new[0] += oc[k]
        res = new
    return PowerSeries._raw(res)


def derivative(s: PowerSeries) -> PowerSeries:
    """Formal derivative; order drops by one (order 0 gives the order-0 zero)."""
    if s.order == 0:
        return PowerSeries._raw([ZERO])
    return PowerSeries._raw([k * c for k, c in enumerate(s.coeffs) if k > 0])


def integrate(s: PowerSeries, constant: RationalLike = 0) -> PowerSeries:
    """Formal antiderivative with the given constant; order grows by one."""
    return PowerSeries._raw([Q(constant)] + [c / (k + 1) for k, c in enumerate(s.coeffs)])


def log_series(s: PowerSeries) -> PowerSeries:
    """``log(s)`` for ``s(0) = 1``."""
    if s.coeffs[0] != 1:
        raise PowNeedsUnitConstant("log needs constant term 1")
    if s.order == 0:
        return PowerSeries._raw([ZERO])
    return integrate(div(derivative(s), s.truncate(s.order - 1)))


def exp_series(s: PowerSeries) -> PowerSeries:
    """``exp(s)`` for ``s(0) = 0``, via ``w' = s' w``."""
    if s.coeffs[0] != 0:
        raise CompositionNeedsZeroConstant("exp needs constant term 0")
    sc = [(k, k * y) for k, y in enumerate(s.coeffs) if k > 0 and y != 0]
    w = [ONE]
    for n in range(1, s.order + 1):
        acc = ZERO
        for k, ky in sc:
            if k > n:
                break
            acc += ky * w[n - k]
        w.append(acc / n)
    return PowerSeries._raw(w)


def pow_rational(s: PowerSeries, e: RationalLike) -> PowerSeries:
    """``s^e`` for ``s(0) = 1`` and rational ``e``.

    Uses the coefficient recurrence obtained from ``s w' = e s' w``, which
    is the same series as ``exp(e log s)`` but costs one convolution
    instead of three and stays sparse when ``s`` is.
    """
    e = Q(e)
    if s.coeffs[0] != 1:
        raise PowNeedsUnitConstant("pow_rational needs constant term 1")
    sc = [(k, y) for k, y in enumerate(s.coeffs) if k > 0 and y != 0]
    e1 = e + 1
    w = [ONE]
    for n in range(1, s.order + 1):
        acc = ZERO
        for k, y in sc:
            if k > n:
                break
            acc += (e1 * k - n) * y * w[n - k]
        w.append(acc / n)
    return PowerSeries._raw(w)


def pow_int(s: PowerSeries, n: int) -> PowerSeries:
    """``s^n`` for a nonnegative integer ``n`` (binary powering)."""
    if n < 0:
        raise InvalidParams("pow_int needs n >= 0")
    result = PowerSeries.constant(1, s.order)
    base = s
    while n:
        if n & 1:
            result = mul(result, base)
        n >>= 1
        if n:
            base = mul(base, base)
    return result


def _check_invertible(s: PowerSeries) -> None:
    if s.order < 1:
        raise NotInvertible("need order >= 1 to invert")
    if s.coeffs[0] != 0:
        raise NotInvertible("compositional inverse needs s(0) = 0")
    if s.coeffs[1] == 0:
        raise NotInvertible("compositional inverse needs s'(0) != 0")


def comp_inverse(s: PowerSeries) -> PowerSeries:
    """Compositional inverse ``g`` with ``s(g(u)) = u``, by Newton iteration.

    Each step ``g <- g - (s(g) - u) / s'(g)`` doubles the number of correct
    coefficients.
    """
    _check_invertible(s)
    n = s.order
    ds = derivative(s)
    g = PowerSeries([0, ONE / s.coeffs[1]])
    prec = 1
    while prec < n:
        prec = min(2 * prec, n)
        gp = PowerSeries._raw(list(g.coeffs) + [ZERO] * (prec - g.order))
        u = PowerSeries.variable(prec)
        resid = compose(s.truncate(prec), gp) - u
        # resid(0) = 0, so s'(g) is only needed to order prec-1
        slope = compose(ds.truncate(prec - 1), gp.truncate(prec - 1))
        g = gp - div(resid.shift_down(1), slope).shift_up(1)
    return g.truncate(n) if g.order > n else g


def lagrange_inversion(phi: PowerSeries, n: int) -> PowerSeries:
    """Series ``y`` of order ``n`` solving ``y = u * phi(y)``.

    Lagrange–Bürmann: ``[u^k] y = (1/k) [w^(k-1)] phi(w)^k``.  ``phi`` must
    be known to order ``n-1`` and have ``phi(0) != 0``.
    """
    if n < 1:
        return PowerSeries._raw([ZERO])
    if phi.coeffs[0] == 0:
        raise NotInvertible("phi(0) must be nonzero")
    if phi.order < n - 1:
        raise InvalidParams(f"phi known to order {phi.order}, need {n - 1}")
    base = phi.truncate(n - 1)
    power = PowerSeries.constant(1, n - 1)
    out = [ZERO]
    for k in range(1, n + 1):
        power = mul(power, base)
        out.append(power.coeffs[k - 1] / k)
    return PowerSeries._raw(out)


def comp_inverse_lagrange(s: PowerSeries) -> PowerSeries:
    """Compositional inverse by direct Lagrange coefficient extraction.

    Independent of :func:`comp_inverse`; used to cross-check it.
    """
    _check_invertible(s)
    # s(g) = u  <=>  g = u * phi(g) with phi(w) = w / s(w)
    phi = div(PowerSeries.constant(1, s.order - 1), s.shift_down(1))
    return lagrange_inversion(phi, s.order)
