"""Exception hierarchy.

Every error raised for a mathematical or domain reason derives from
:class:`ProgenyError`; the CLI maps those to exit status 2.
"""


class ProgenyError(Exception):
    """Base class for domain errors."""


class DivisionByNonUnit(ProgenyError, ZeroDivisionError):
    pass


class CompositionNeedsZeroConstant(ProgenyError, ValueError):
    pass


class NotInvertible(ProgenyError, ValueError):
    pass


class PowNeedsUnitConstant(ProgenyError, ValueError):
    pass


class InvalidParams(ProgenyError, ValueError):
    pass


class InvalidRational(ProgenyError, ValueError):
    pass


class IrrationalValue(ProgenyError, ValueError):
    """An exact-path quantity turned out to be irrational."""


class SamplerOverflow(ProgenyError, OverflowError):
    pass


class SupercriticalOffspring(ProgenyError, ValueError):
    pass


class InsufficientOrder(ProgenyError, ValueError):
    pass


class TiltOutOfRange(ProgenyError, ValueError):
    pass


class SupercriticalTilt(ProgenyError, ValueError):
    pass


class OutOfRange(ProgenyError, ValueError):
    pass


class InsufficientSamples(ProgenyError, ValueError):
    pass


class TruncatedTail(ProgenyError, ValueError):
    """A truncated law carries too much unknown tail mass to be simulated."""
