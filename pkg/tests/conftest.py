from fractions import Fraction

from hypothesis import HealthCheck, settings, strategies as st

from gwprogeny.rational import Q
from gwprogeny.series import PowerSeries

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def binomial_series(e, n_max, sign=-1):
    """Coefficients of (1 + sign*u)^e from the generalized binomial theorem, in Fraction."""
    e = Fraction(e)
    out, c = [], Fraction(1)
    for n in range(n_max + 1):
        out.append(c * sign**n)
        c = c * (e - n) / (n + 1)
    return out


def rising(x, n):
    x = Fraction(x)
    out = Fraction(1)
    for j in range(n):
        out *= x + j
    return out


small_rationals = st.builds(lambda n, d: Q(n, d), st.integers(-6, 6), st.integers(1, 5))
unit_interval = st.builds(lambda n, d: Q(n, n + d), st.integers(1, 9), st.integers(1, 9))


@st.composite
def series(draw, order=6, unit=False, zero_constant=False):
    cs = draw(st.lists(small_rationals, min_size=order + 1, max_size=order + 1))
    if unit:
        cs[0] = Q(1)
    if zero_constant:
        cs[0] = Q(0)
        if cs[1] == 0:
            cs[1] = Q(1)
    return PowerSeries(cs, order)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import REPORT
    except ImportError:
        return
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT, key=lambda s: s[7:9]):
            terminalreporter.write_line(line)
