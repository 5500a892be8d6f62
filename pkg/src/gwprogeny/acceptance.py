"""Release criteria, runnable from the CLI (``check-all``) and from pytest.

Each criterion returns a :class:`CriterionResult`; tolerances are fixed
here and nowhere else.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import certify as cert
from .laws import Geometric, Sibuya, SibuyaOffspring, geometric_progeny
from .progeny import offspring_of, progeny_of
from .rational import Q, format_rational
from .series import PowerSeries, compose
from .sibuya import SibuyaParams, sibuya_gf, sibuya_sample_many
from .simulate import GWConfig, compare, histogram, simulate_totals
from .tilt import geometric_rho, tilt_residual, sibuya_offspring_rho, solve_rho

N45_B = Q(2000000001, 1000000000)
N45_RUNTIME_S = 10.0
B3_FLOAT_TOL = 1e-12
RATIO_REL_TOL = 0.01
TV_TOL = 0.005
STAT_SAMPLES = 10**6
STAT_RUNTIME_S = 60.0


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.title} ({self.elapsed:.2f}s)"

    def to_json(self) -> dict:
        return {
            "criterion": self.number,
            "title": self.title,
            "passed": self.passed,
            "elapsed_s": round(self.elapsed, 3),
            "detail": self.detail,
        }


def c01_n45() -> CriterionResult:
    t0 = time.perf_counter()
    rep = cert.first_negative(N45_B, 60)
    dt = time.perf_counter() - t0
    ok = rep.first_negative == 45 and dt < N45_RUNTIME_S
    return CriterionResult(1, "first negative P_n at n=45 for b=2+1e-9", ok,
                           {"first_negative": rep.first_negative, "runtime_s": dt})


def c02_geometric() -> CriterionResult:
    P = cert.P_coeffs(2, 200)
    bad = [n for n in range(201) if P[n] != Q(1, 2**n)]
    return CriterionResult(2, "b=2: P_n = 2^-n exactly for n <= 200", not bad, {"mismatches": bad[:10]})


def c03_b3() -> CriterionResult:
    P = cert.P_coeffs(3, 30)
    # oracle: c_n = c_{n-1} - c_{n-2}/3 from 1/(1 - u + u^2/3)
    c = [Q(1), Q(1)]
    for n in range(2, 31):
        c.append(c[n - 1] - c[n - 2] / 3)
    fn = cert.first_negative(3, 30).first_negative
    worst = max(abs(cert.b3_closed_form(n) - float(c[n])) for n in range(31))
    ok = (P[5] == 0 and P[6] == Q(-1, 27) and fn == 6 and list(P) == c and worst < B3_FLOAT_TOL)
    return CriterionResult(3, "b=3: P_5=0, P_6=-1/27, first negative 6, closed form", ok,
                           {"P5": format_rational(P[5]), "P6": format_rational(P[6]),
                            "first_negative": fn, "max_closed_form_error": worst})


def c04_sharp() -> CriterionResult:
    idx = {str(b): cert.first_negative(b, 5).first_negative for b in (4, 5, 10)}
    ok = all(i is not None and i <= 5 for i in idx.values())
    return CriterionResult(4, "b>3: first negative index <= 5 for b in {4,5,10}", ok, {"first_negative": idx})


def c05_positivity(n_max: int = 500) -> CriterionResult:
    grid = cert.rational_grid(Q(21, 20), 2, Q(1, 20))
    reps = cert.certify_interval(grid, n_max)
    bad = [format_rational(r.b) for r in reps if r.first_negative is not None or r.h_identity is not True]
    return CriterionResult(5, f"1<b<=2 grid step 1/20: no negative P_n and H-identity to {n_max}", not bad,
                           {"grid_size": len(grid), "failures": bad})


# regression values found by the search and pinned here
FAILURE_WINDOW = {Q(5, 2): 7, Q(29, 10): 6}


def c06_failure() -> CriterionResult:
    found = {b: cert.first_negative(b, 2000).first_negative for b in FAILURE_WINDOW}
    ok = all(found[b] is not None and found[b] == FAILURE_WINDOW[b] for b in found)
    return CriterionResult(6, "2<b<3: finite first negative for b in {5/2, 29/10}", ok,
                           {format_rational(b): i for b, i in found.items()})


def c07_recurrence() -> CriterionResult:
    detail, ok = {}, True
    for b in (Q(5, 2), Q(7, 3)):
        pair = cert.scaled_pair(b, 101)
        rec_ok = all(pair.recurrence_residual(n) == 0 for n in range(4, 101))
        ratio = pair.ratio(100)
        target = 2 / (b - 1)
        rel = float(abs(ratio - target) / target)
        detail[format_rational(b)] = {"recurrence_exact": rec_ok, "ratio_100": float(ratio),
                                      "target": float(target), "relative_error": rel}
        ok = ok and rec_ok and rel <= RATIO_REL_TOL
    return CriterionResult(7, "recurrence exact for 4<=n<=100; a_101/a_100 within 1% of 2/(b-1)", ok, detail)


def c08_round_trip(order: int = 50) -> CriterionResult:
    detail, ok = {}, True
    for p in (Geometric(Q(3, 10)), SibuyaOffspring(Q(3, 2))):
        lag = progeny_of(p, order + 1, method="lagrange")
        newt = progeny_of(p, order + 1, method="newton")
        back = offspring_of(lag, order).series(order)
        same = lag.series(order + 1) == newt.series(order + 1)
        rt = back == p.series(order)
        detail[p.name] = {"round_trip": rt, "lagrange_equals_newton": same}
        ok = ok and same and rt
    return CriterionResult(8, "progeny round trip to order 50; Lagrange == Newton", ok, detail)


def c09_closed_form(order: int = 30) -> CriterionResult:
    detail = {}
    for alpha in (Q(1, 2), Q(3, 10)):
        q = progeny_of(Geometric(alpha), order).series(order)
        rho = 4 * alpha * (1 - alpha)
        detail[format_rational(alpha)] = q == sibuya_gf(SibuyaParams(Q(1, 2), rho=rho), order)
    return CriterionResult(9, "geometric progeny = tilted s_1/2 with rho=4a(1-a)", all(detail.values()), detail)


def c10_tilting(order: int = 40) -> CriterionResult:
    alpha, r = Q(1, 2), Q(3, 4)
    q = geometric_progeny(alpha)
    rho_geo = solve_rho(q, r)
    res_geo = tilt_residual(Geometric(alpha), q, r, order)
    b, r2 = Q(2), Q(1, 2)
    qs = Sibuya(1 / b)
    rho_sib = solve_rho(qs, r2)
    res_sib = tilt_residual(SibuyaOffspring(b), qs, r2, order)
    zero = PowerSeries.constant(0, order)
    ok = (res_geo == zero and res_sib == zero and rho_geo == geometric_rho(alpha, r)
          and rho_sib == sibuya_offspring_rho(b, r2))
    return CriterionResult(10, "NEF tilting transports progenies (both worked examples)", ok,
                           {"rho_geometric": format_rational(rho_geo), "rho_sibuya": format_rational(rho_sib)})


def c11_semigroup(order: int = 100) -> CriterionResult:
    f1 = sibuya_gf(SibuyaParams(Q(7, 10)), order)
    f2 = sibuya_gf(SibuyaParams(Q(4, 5)), order)
    ok = compose(f1, f2) == sibuya_gf(SibuyaParams(Q(14, 25)), order)
    return CriterionResult(11, "semigroup f_s(7/10) o f_s(4/5) = f_s(14/25) to order 100", ok)


def c12_statistical(samples: int = STAT_SAMPLES, seed: int = 20240601) -> CriterionResult:
    t0 = time.perf_counter()
    k_max = 20
    alpha = Q(2, 5)
    cfg = GWConfig(master_seed=seed, replicas=samples)
    sim = simulate_totals(Geometric(alpha), cfg)
    exact_q = progeny_of(Geometric(alpha), k_max).series(k_max)
    gw = compare(histogram(sim.totals, k_max, sim.censored), exact_q, k_max, threshold=TV_TOL)
    params = SibuyaParams(Q(1, 2))
    draws = sibuya_sample_many(params, samples, np.random.default_rng(seed))
    sib = compare(histogram(draws, k_max), sibuya_gf(params, k_max), k_max, threshold=TV_TOL)
    elapsed = time.perf_counter() - t0
    # determinism: a smaller run must reproduce the prefix; the Sibuya stream must repeat
    prefix = simulate_totals(Geometric(alpha), GWConfig(master_seed=seed, replicas=min(samples, 10**5)))
    det_gw = bool(np.array_equal(prefix.totals, sim.totals[: prefix.totals.size]))
    det_sib = bool(np.array_equal(draws, sibuya_sample_many(params, samples, np.random.default_rng(seed))))
    ok = gw.passed and sib.passed and det_gw and det_sib and elapsed < STAT_RUNTIME_S
    return CriterionResult(12, "10^6 GW totals and Sibuya draws match exact pmf (TV<0.005)", ok,
                           {"gw_tv": gw.tv_distance, "sibuya_tv": sib.tv_distance,
                            "deterministic": det_gw and det_sib, "runtime_s": elapsed,
                            "censored_fraction": sim.censored_fraction})


def c13_discrepancy() -> CriterionResult:
    rows = cert.discrepancy_report()
    factorial_relation = all(r["ratio"] is None or Q(r["ratio"]) == r["n_factorial"] for r in rows)
    signs = all(r["same_sign"] for r in rows if r["ratio"] is not None)
    p2_b2 = cert.P_coeffs(2, 2)[2]
    ok = factorial_relation and signs and p2_b2 == Q(1, 4)
    return CriterionResult(13, "reference P_2..P_5 = n! x expansion; P_2(b=2) = 1/4", ok,
                           {"rows": rows, "P2_at_b2": format_rational(p2_b2)})


CRITERIA: list = [c01_n45, c02_geometric, c03_b3, c04_sharp, c05_positivity, c06_failure, c07_recurrence,
                  c08_round_trip, c09_closed_form, c10_tilting, c11_semigroup, c12_statistical, c13_discrepancy]


def run_criterion(fn: Callable) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        res = fn()
    except Exception as exc:  # a crash is a failed criterion, not a crashed report
        num = CRITERIA.index(fn) + 1 if fn in CRITERIA else 0
        res = CriterionResult(num, fn.__name__, False, {"error": f"{type(exc).__name__}: {exc}"})
    res.elapsed = time.perf_counter() - t0
    return res


def check_all(echo: Callable[[str], None] | None = None) -> list:
    results = []
    for fn in CRITERIA:
        res = run_criterion(fn)
        if echo is not None:
            echo(res.line())
        results.append(res)
    return results
