"""Exact progeny computations for Galton–Watson processes and the Sibuya law."""

from .errors import ProgenyError
from .rational import Q, format_rational, parse_rational
from .series import PowerSeries

__version__ = "0.1.0"

__all__ = ["PowerSeries", "ProgenyError", "Q", "format_rational", "parse_rational", "__version__"]
