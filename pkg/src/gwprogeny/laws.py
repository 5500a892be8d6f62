"""Discrete laws on the nonnegative integers, known exactly or by truncation.

A law hands out its generating-function coefficients to any order it can
(closed-form families extend without limit, tabulated laws stop at their
table) and evaluates its generating function exactly where it can.
Offspring laws (mass possibly at 0) and progeny laws (mass on ``n >= 1``)
share this interface.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Optional, Union

from .errors import InsufficientOrder, InvalidParams, IrrationalValue
from .rational import ONE, ZERO, ExactRational, Q, RationalLike, exact_power, format_rational, parse_rational
from .series import PowerSeries, derivative
from .sibuya import SibuyaParams, sibuya_gf, tilt_normalizer
from . import certify


class Law:
    """Common interface; see the concrete subclasses."""

    name = "law"
    #: highest coefficient index available, ``None`` when unlimited
    known_order: Optional[int] = None
    #: the generating function can be evaluated exactly inside the radius
    exact_gf = True

    def series(self, order: int) -> PowerSeries:
        raise NotImplementedError

    def gf(self, x: RationalLike) -> ExactRational:
        raise NotImplementedError

    def gf_prime(self, x: RationalLike) -> ExactRational:
        raise NotImplementedError

    @property
    def radius(self) -> float:
        """A lower bound for the radius of convergence of the gf."""
        return 1.0

    def mean(self) -> Optional[ExactRational]:
        """Exact mean when known."""
        return None

    def mean_lower_bound(self, order: int) -> ExactRational:
        s = self.series(order)
        return sum((n * c for n, c in enumerate(s.coeffs)), ZERO)

    def tail(self, order: int) -> Optional[ExactRational]:
        """Exact mass beyond ``order``, when it is known."""
        return None

    def _need(self, order: int) -> None:
        if self.known_order is not None and order > self.known_order:
            raise InsufficientOrder(
                f"{self.name} is known to order {self.known_order}, {order} requested"
            )

    def to_json(self, order: int, kind: str = "offspring") -> dict:
        s = self.series(order)
        tail = self.tail(order)
        return {
            "kind": kind,
            "name": self.name,
            "order": s.order,
            "coeffs": [format_rational(c) for c in s.coeffs],
            "tail": None if tail is None else format_rational(tail),
        }

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.name}>"


class Tabulated(Law):
    """A law given by finitely many exact masses plus optional exact tail mass.

    With ``tail == 0`` the law is finite and fully known; its gf is the
    polynomial.  Otherwise the gf can only be evaluated by truncation and
    :attr:`exact_gf` is false.
    """

    def __init__(self, coeffs: PowerSeries, tail: Optional[RationalLike] = None, name: str = "tabulated"):
        self._s = coeffs
        self._tail = None if tail is None else Q(tail)
        self.name = name
        self.known_order = None if self._tail == 0 else coeffs.order
        self.exact_gf = self._tail == 0

    @classmethod
    def finite(cls, masses, name: str = "finite") -> "Tabulated":
        return cls(PowerSeries(masses), tail=0, name=name)

    @property
    def table(self) -> PowerSeries:
        """The stored masses, at their own order."""
        return self._s

    def series(self, order: int) -> PowerSeries:
        self._need(order)
        if order <= self._s.order:
            return self._s.truncate(order)
        return PowerSeries(self._s.coeffs, order)

    def gf(self, x):
        return self._s(x)

    def gf_prime(self, x):
        return derivative(self._s)(x) if self._s.order > 0 else ZERO

    @property
    def radius(self) -> float:
        return math.inf if self._tail == 0 else 1.0

    def mean(self):
        return self.mean_lower_bound(self._s.order) if self._tail == 0 else None

    def tail(self, order: int):
        if order >= self._s.order:
            return self._tail
        known = self._s.coeffs[order + 1 :]
        return None if self._tail is None else self._tail + sum(known, ZERO)


class Geometric(Law):
    """``p_n = (1-alpha) alpha^n`` on ``{0, 1, ...}``; gf ``(1-alpha)/(1-alpha z)``."""

    def __init__(self, alpha: RationalLike):
        self.alpha = Q(alpha)
        if not 0 < self.alpha < 1:
            raise InvalidParams("need 0 < alpha < 1")
        self.name = f"geometric:{format_rational(self.alpha)}"

    def series(self, order):
        c, out = 1 - self.alpha, []
        for _ in range(order + 1):
            out.append(c)
            c *= self.alpha
        return PowerSeries(out, order)

    def gf(self, x):
        return (1 - self.alpha) / (1 - self.alpha * Q(x))

    def gf_prime(self, x):
        return (1 - self.alpha) * self.alpha / (1 - self.alpha * Q(x)) ** 2

    @property
    def radius(self):
        return float(1 / self.alpha)

    def mean(self):
        return self.alpha / (1 - self.alpha)

    def tail(self, order):
        return self.alpha ** (order + 1)


class SibuyaOffspring(Law):
    """Offspring law with gf ``h_b(u) = u / (1 - (1-u)^b)``, ``b = 1/a``.

    A genuine probability law exactly when ``1 < b <= 2``; outside that
    window the coefficients are still computed but some are negative.
    """

    def __init__(self, b: RationalLike):
        self.b = Q(b)
        if self.b <= 1:
            raise InvalidParams("need b > 1")
        self.name = f"sibuya-offspring:{format_rational(self.b)}"

    def series(self, order):
        return certify.hb_series(self.b, order)

    def gf(self, x):
        x = Q(x)
        if x == 0:
            return ONE / self.b
        return x / (1 - exact_power(1 - x, self.b))

    def gf_prime(self, x):
        x = Q(x)
        if x == 0:
            return (self.b - 1) / (2 * self.b)
        g = 1 - exact_power(1 - x, self.b)
        dg = self.b * exact_power(1 - x, self.b - 1)
        return (g - x * dg) / (g * g)

    @property
    def radius(self):
        b = self.b
        r = 2 * math.sin(math.pi / float(b)) if b >= 2 else math.inf
        return min(r, math.inf if b.denominator == 1 else 1.0)

    def mean(self):
        # f'(1) = 1 for every b > 1: the law is critical
        return ONE

    def tail(self, order):
        if self.b > 2:
            return None
        return 1 - self.series(order).partial_sum()


class Sibuya(Law):
    """Sibuya law ``s_a`` (optionally generalized, tilted, or zero-inflated)."""

    def __init__(self, params: Union[SibuyaParams, RationalLike], **kw):
        self.params = params if isinstance(params, SibuyaParams) else SibuyaParams(Q(params), **kw)
        p = self.params
        name = f"sibuya:{format_rational(p.a)}"
        if p.k:
            name += f",k={p.k}"
        if p.rho != 1:
            name += f",rho={format_rational(p.rho)}"
        if p.lam != 1:
            name += f",lambda={format_rational(p.lam)}"
        self.name = name

    def series(self, order):
        return sibuya_gf(self.params, order)

    def gf(self, x):
        p, x = self.params, Q(x)
        if p.k:
            raise IrrationalValue("closed-form gf of the generalized law is not implemented")
        if p.rho != 1:
            return (1 - exact_power(1 - p.rho * x, p.a)) / tilt_normalizer(p.a, p.rho)
        return 1 - p.lam * exact_power(1 - x, p.a)

    def gf_prime(self, x):
        p, x = self.params, Q(x)
        if p.k:
            raise IrrationalValue("closed-form gf of the generalized law is not implemented")
        if p.rho != 1:
            return p.a * p.rho * exact_power(1 - p.rho * x, p.a - 1) / tilt_normalizer(p.a, p.rho)
        return p.lam * p.a * exact_power(1 - x, p.a - 1)

    @property
    def radius(self):
        return float(1 / self.params.rho)

    def tail(self, order):
        if self.params.k:
            return None
        return 1 - self.series(order).partial_sum()


class Tilted(Law):
    """Exponential tilt: gf ``f(r z) / f(r)``, masses ``c_n r^n / f(r)``."""

    def __init__(self, base: Law, r: RationalLike, normalizer: Optional[ExactRational] = None):
        self.base = base
        self.r = Q(r)
        if normalizer is None:
            normalizer = base.gf(self.r)
        self.normalizer = Q(normalizer)
        self.exact_gf = base.exact_gf
        self.known_order = base.known_order
        self.name = f"tilt({base.name};{format_rational(self.r)})"

    def series(self, order):
        s = self.base.series(order)
        out, f = [], ONE / self.normalizer
        for c in s.coeffs:
            out.append(c * f)
            f *= self.r
        return PowerSeries(out, order)

    def gf(self, x):
        return self.base.gf(self.r * Q(x)) / self.normalizer

    def gf_prime(self, x):
        return self.r * self.base.gf_prime(self.r * Q(x)) / self.normalizer

    @property
    def radius(self):
        return self.base.radius / float(self.r)

    def mean(self):
        if not self.exact_gf:
            return None
        try:
            return self.gf_prime(1)
        except IrrationalValue:
            return None

    def tail(self, order):
        if not self.exact_gf:
            return None
        return 1 - self.series(order).partial_sum()


def geometric_progeny(alpha: RationalLike) -> Sibuya:
    """Closed-form progeny of the geometric law: ``s_{1/2}`` tilted by ``4 alpha (1-alpha)``."""
    alpha = Q(alpha)
    if not 0 < alpha <= Q(1, 2):
        raise InvalidParams("the geometric law is subcritical or critical only for alpha <= 1/2")
    rho = 4 * alpha * (1 - alpha)
    return Sibuya(SibuyaParams(Q(1, 2), rho=rho))


def known_progeny(p: Law) -> Optional[Law]:
    """Closed-form progeny for the families where one is known."""
    if isinstance(p, Geometric) and p.alpha <= Q(1, 2):
        return geometric_progeny(p.alpha)
    if isinstance(p, SibuyaOffspring) and p.b <= 2:
        return Sibuya(ONE / p.b)
    return None


def parse_law(text: str) -> Law:
    """``geometric:A``, ``sibuya:A``, ``sibuya-offspring:B``, ``finite:p0,p1,...`` or a JSON file."""
    if ":" in text and not Path(text).exists():
        kind, _, arg = text.partition(":")
        kind = kind.strip().lower()
        if kind == "geometric":
            return Geometric(parse_rational(arg))
        if kind == "sibuya":
            return Sibuya(parse_rational(arg))
        if kind in ("sibuya-offspring", "hb"):
            return SibuyaOffspring(parse_rational(arg))
        if kind == "finite":
            return Tabulated.finite([parse_rational(x) for x in arg.split(",")])
        raise InvalidParams(f"unknown law family {kind!r}")
    return load_law(text)


def load_law(path: Union[str, Path]) -> Tabulated:
    data = json.loads(Path(path).read_text())
    return law_from_json(data)


def law_from_json(data: dict) -> Tabulated:
    s = PowerSeries.from_json(data)
    tail = data.get("tail")
    return Tabulated(s, None if tail is None else parse_rational(str(tail)), name=data.get("name", "tabulated"))
