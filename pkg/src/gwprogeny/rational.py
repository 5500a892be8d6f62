"""Exact rationals: parsing, formatting and exact roots.

``ExactRational`` is :class:`gmpy2.mpq`.  It interoperates with ``int`` and
:class:`fractions.Fraction` (equality, hashing, arithmetic) and is several
times faster than ``Fraction`` on the large-denominator workloads here.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational
from typing import Optional, Union

import gmpy2
from gmpy2 import mpq, mpz

from .errors import InvalidRational, IrrationalValue

ExactRational = type(mpq(0))

RationalLike = Union[int, Fraction, "mpq", str]

_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+)\s*)?$")

ZERO = mpq(0)
ONE = mpq(1)


def Q(x: RationalLike, den: Optional[int] = None) -> "mpq":
    """Coerce ``x`` (or ``x/den``) to an exact rational.

    Floats are refused: converting one would silently change the value.
    """
    if den is not None:
        if den == 0:
            raise InvalidRational("zero denominator")
        return mpq(Q(x)) / Q(den)
    if isinstance(x, ExactRational):
        return x
    if isinstance(x, bool):
        raise InvalidRational(f"not a rational: {x!r}")
    if isinstance(x, (int, type(mpz(0)))):
        return mpq(x)
    if isinstance(x, Rational):
        return mpq(int(x.numerator), int(x.denominator))
    if isinstance(x, str):
        return parse_rational(x)
    if isinstance(x, float):
        raise InvalidRational(
            f"float {x!r} refused on the exact path; pass a string like '3/10'"
        )
    raise InvalidRational(f"not a rational: {x!r}")


def parse_rational(text: str) -> "mpq":
    """Parse ``"num/den"`` or an integer literal.

    >>> parse_rational("-6/14")
    mpq(-3,7)
    >>> parse_rational("0.3")
    Traceback (most recent call last):
    ...
    gwprogeny.errors.InvalidRational: '0.3' is not an exact rational; write it as a fraction, e.g. '3/10'
    """
    m = _RATIONAL_RE.match(text)
    if m is None:
        hint = ""
        try:
            hint_val = Fraction(text.strip())
        except (ValueError, ZeroDivisionError):
            raise InvalidRational(f"{text!r} is not a rational literal") from None
        hint = f"{hint_val.numerator}/{hint_val.denominator}"
        raise InvalidRational(
            f"{text!r} is not an exact rational; write it as a fraction, e.g. '{hint}'"
        )
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) is not None else 1
    if den == 0:
        raise InvalidRational(f"{text!r} has a zero denominator")
    return mpq(num, den)


def format_rational(x: RationalLike) -> str:
    """Canonical ``"num/den"`` form, lowest terms, sign on the numerator."""
    x = Q(x)
    return f"{x.numerator}/{x.denominator}"


def to_fraction(x: RationalLike) -> Fraction:
    x = Q(x)
    return Fraction(int(x.numerator), int(x.denominator))


def _exact_iroot(n: int, k: int) -> Optional[int]:
    root, exact = gmpy2.iroot(mpz(n), k)
    return int(root) if exact else None


def exact_power(x: RationalLike, e: RationalLike) -> "mpq":
    """Return ``x**e`` exactly, or raise :class:`IrrationalValue`.

    ``x`` must be positive unless ``e`` is an integer.
    """
    x, e = Q(x), Q(e)
    p, q = int(e.numerator), int(e.denominator)
    if q == 1:
        return x**p
    if x < 0:
        raise IrrationalValue(f"({x})^({e}) is not real")
    if x == 0:
        return ZERO
    rn = _exact_iroot(int(x.numerator), q)
    rd = _exact_iroot(int(x.denominator), q)
    if rn is None or rd is None:
        raise IrrationalValue(f"({format_rational(x)})^({format_rational(e)}) is irrational")
    return mpq(rn, rd) ** p


def try_exact_power(x: RationalLike, e: RationalLike) -> Optional["mpq"]:
    try:
        return exact_power(x, e)
    except IrrationalValue:
        return None
