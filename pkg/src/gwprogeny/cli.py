"""Command-line entry point: ``gwprogeny <subcommand> ...``.

Exit status: 0 on success, 1 on usage errors, 2 on domain errors.
Every JSON output carries the fully resolved configuration under ``config``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np

from . import acceptance
from . import certify as cert
from .errors import InvalidParams, ProgenyError
from .laws import Geometric, SibuyaOffspring, known_progeny, parse_law
from .progeny import check_is_progeny, offspring_of, progeny_of
from .rational import format_rational, parse_rational
from .sibuya import SibuyaParams, sibuya_gf, sibuya_sample_many
from .simulate import GWConfig, compare, histogram, simulate_totals
from .tilt import tilt_residual, solve_rho, tilt_offspring, tilt_progeny

FORMAT_ENV = "GWPROGENY_FORMAT"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _rational(text: str):
    try:
        return parse_rational(text)
    except ProgenyError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _emit(args, payload: dict, rows: Optional[list] = None, columns: Optional[list] = None) -> None:
    payload = {"config": _config(args), **payload}
    if args.format == "csv" and rows is not None:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=columns or list(rows[0]), extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=2, default=str) + "\n"
    if args.output and args.output != "-":
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config(args) -> dict:
    out = {}
    for k, v in vars(args).items():
        if k == "func":
            continue
        out[k] = format_rational(v) if hasattr(v, "denominator") and not isinstance(v, int) else v
    return out


# sibuya


def _sibuya_params(args) -> SibuyaParams:
    return SibuyaParams(args.a, k=args.k, rho=args.rho, lam=args.lam)


def cmd_sibuya_pmf(args) -> int:
    params = _sibuya_params(args)
    gf = sibuya_gf(params, args.n_max)
    rows = [{"n": n, "mass": format_rational(gf[n]), "mass_float": float(gf[n])} for n in range(0, args.n_max + 1)
            if n >= 1 or gf[0] != 0]
    _emit(args, {"params": params.to_json(), "pmf": rows}, rows, ["n", "mass", "mass_float"])
    return 0


def cmd_sibuya_sample(args) -> int:
    params = _sibuya_params(args)
    draws = sibuya_sample_many(params, args.count, np.random.default_rng(args.seed))
    rows = [{"index": i, "value": int(v)} for i, v in enumerate(draws)]
    _emit(args, {"params": params.to_json(), "samples": [int(v) for v in draws]}, rows, ["index", "value"])
    return 0


# progeny


def _law_rows(series, flag_negative: bool = False) -> list:
    rows = []
    for n, c in enumerate(series.coeffs):
        row = {"n": n, "mass": format_rational(c), "mass_float": float(c)}
        if flag_negative:
            row["negative"] = c < 0
        rows.append(row)
    return rows


def cmd_progeny_forward(args) -> int:
    p = parse_law(args.offspring)
    q = progeny_of(p, args.order, method=args.method)
    s = q.series(args.order)
    tail = q.tail(args.order)
    _emit(args, {"law": q.to_json(args.order, kind="progeny"),
                 "tail": None if tail is None else format_rational(tail)},
          _law_rows(s)[1:], ["n", "mass", "mass_float"])
    return 0


def cmd_progeny_invert(args) -> int:
    q = parse_law(args.progeny)
    p = offspring_of(q, args.order)
    s = p.series(args.order)
    rows = _law_rows(s, flag_negative=True)
    _emit(args, {"law": p.to_json(args.order), "has_negative": any(r["negative"] for r in rows),
                 "offspring": rows}, rows, ["n", "mass", "mass_float", "negative"])
    return 0


def cmd_progeny_check(args) -> int:
    q = parse_law(args.progeny)
    res = check_is_progeny(q, args.order)
    row = {k: v for k, v in res.to_json().items() if k != "offspring"}
    _emit(args, res.to_json(), [row], list(row))
    return 0


# certification

CERT_COLUMNS = ["b", "first_negative", "value", "elapsed_ms"]


def cmd_certify(args) -> int:
    rep = cert.certify(args.b, args.n_max)
    data = rep.to_json()
    _emit(args, data, [data], CERT_COLUMNS)
    return 0


def cmd_certify_grid(args) -> int:
    grid = cert.rational_grid(args.start, args.stop, args.step)
    reps = cert.certify_interval(grid, args.n_max, workers=args.workers)
    rows = [r.to_json() for r in reps]
    _emit(args, {"reports": rows}, rows, CERT_COLUMNS)
    return 0


# tilting


def cmd_tilt_offspring(args) -> int:
    p = parse_law(args.law)
    t = tilt_offspring(p, args.r, strict=False)
    data = t.to_json(args.order)
    _emit(args, data, _law_rows(t.law.series(args.order)), ["n", "mass", "mass_float"])
    return 0


def cmd_tilt_progeny(args) -> int:
    q = parse_law(args.law)
    t = tilt_progeny(q, args.rho)
    s = t.series(args.order)
    _emit(args, {"law": t.to_json(args.order, kind="progeny")}, _law_rows(s)[1:], ["n", "mass", "mass_float"])
    return 0


def _family_law(args):
    if args.family == "geometric":
        if args.alpha is None:
            raise UsageError("--family geometric needs --alpha")
        return Geometric(args.alpha)
    if args.b is None:
        raise UsageError("--family sibuya-offspring needs --b")
    return SibuyaOffspring(args.b)


def cmd_tilt_check(args) -> int:
    p = _family_law(args)
    q = known_progeny(p)
    if q is None:
        raise InvalidParams(f"no closed-form progeny for {p.name}")
    rho = solve_rho(q, args.r)
    res = tilt_residual(p, q, args.r, args.order)
    nonzero = [n for n, c in enumerate(res.coeffs) if c != 0]
    data = {"offspring": p.name, "progeny": q.name, "r": format_rational(args.r), "rho": format_rational(rho),
            "order": args.order, "residual_zero": not nonzero, "first_nonzero": nonzero[0] if nonzero else None}
    _emit(args, data, [data], list(data))
    return 0


# simulation


def cmd_simulate(args) -> int:
    p = _family_law(args)
    cfg = GWConfig(master_seed=args.seed, max_generations=args.max_gen, max_total=args.max_total,
                   replicas=args.replicas)
    summ = simulate_totals(p, cfg, workers=args.workers)
    hist = histogram(summ.totals, args.k_max, summ.censored)
    payload = {
        "offspring": p.name,
        "histogram": {str(k): int(c) for k, c in enumerate(hist[: args.k_max + 1]) if k >= 1},
        "histogram_tail": int(hist[args.k_max + 1]),
        "censored_fraction": summ.censored_fraction,
        "mean_total_uncensored": float(summ.totals[~summ.censored].mean()) if (~summ.censored).any() else None,
    }
    q = known_progeny(p)
    exact = q.series(args.k_max) if q is not None else progeny_of(p, args.k_max).series(args.k_max)
    try:
        cmp_ = compare(hist, exact, args.k_max, min_samples=1)
        payload["tv_vs_exact"] = cmp_.tv_distance
        payload["chi_square"] = cmp_.chi_square
    except ProgenyError as exc:
        payload["tv_vs_exact"] = None
        payload["compare_error"] = str(exc)
    if args.per_replica:
        with open(args.per_replica, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["replica", "total", "censored", "generations"])
            for i, (t, c, g) in enumerate(zip(summ.totals, summ.censored, summ.generations)):
                w.writerow([i, int(t), int(c), int(g)])
    rows = [{"n": k, "count": v} for k, v in payload["histogram"].items()]
    _emit(args, payload, rows, ["n", "count"])
    return 0


def cmd_check_all(args) -> int:
    echo = (lambda line: print(line, file=sys.stderr)) if args.format == "json" else None
    results = acceptance.check_all(echo)
    rows = [{"criterion": r.number, "title": r.title, "passed": r.passed, "elapsed_s": round(r.elapsed, 3)}
            for r in results]
    _emit(args, {"criteria": [r.to_json() for r in results], "all_passed": all(r.passed for r in results)},
          rows, ["criterion", "title", "passed", "elapsed_s"])
    return 0 if all(r.passed for r in results) else 2


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default=os.environ.get(FORMAT_ENV, "json"))
    common.add_argument("--json", dest="format", action="store_const", const="json")
    common.add_argument("--csv", dest="format", action="store_const", const="csv")
    common.add_argument("--output", "-o", default="-")

    parser = _Parser(prog="gwprogeny", description="Exact progeny computations for Galton-Watson processes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sib = sub.add_parser("sibuya", help="Sibuya pmf and sampler")
    sib_sub = sib.add_subparsers(dest="action", required=True, parser_class=_Parser)
    for name, fn in (("pmf", cmd_sibuya_pmf), ("sample", cmd_sibuya_sample)):
        sp = sib_sub.add_parser(name, parents=[common])
        sp.add_argument("--a", type=_rational, required=True)
        sp.add_argument("--k", type=int, default=0)
        sp.add_argument("--rho", type=_rational, default=parse_rational("1"))
        sp.add_argument("--lambda", dest="lam", type=_rational, default=parse_rational("1"))
        if name == "pmf":
            sp.add_argument("--n-max", type=int, default=20)
        else:
            sp.add_argument("--count", type=int, default=1000)
            sp.add_argument("--seed", type=int, default=0)
        sp.set_defaults(func=fn)

    prog = sub.add_parser("progeny", help="offspring <-> progeny")
    prog_sub = prog.add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = prog_sub.add_parser("forward", parents=[common])
    sp.add_argument("--offspring", required=True, help="law file or geometric:A / sibuya-offspring:B / finite:p0,p1,...")
    sp.add_argument("--order", type=int, default=20)
    sp.add_argument("--method", choices=["lagrange", "newton"], default="lagrange")
    sp.set_defaults(func=cmd_progeny_forward)
    for name, fn in (("invert", cmd_progeny_invert), ("check", cmd_progeny_check)):
        sp = prog_sub.add_parser(name, parents=[common])
        sp.add_argument("--progeny", required=True, help="law file or sibuya:A")
        sp.add_argument("--order", type=int, default=20)
        sp.set_defaults(func=fn)

    sp = sub.add_parser("certify", parents=[common], help="first negative P_n for one b")
    sp.add_argument("--b", type=_rational, required=True)
    sp.add_argument("--n-max", type=int, default=cert.DEFAULT_N_MAX)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("certify-grid", parents=[common], help="certify a rational grid of b values")
    sp.add_argument("--from", dest="start", type=_rational, required=True)
    sp.add_argument("--to", dest="stop", type=_rational, required=True)
    sp.add_argument("--step", type=_rational, required=True)
    sp.add_argument("--n-max", type=int, default=cert.DEFAULT_N_MAX)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_certify_grid)

    tilt = sub.add_parser("tilt", help="exponential tilting")
    tilt_sub = tilt.add_subparsers(dest="action", required=True, parser_class=_Parser)
    sp = tilt_sub.add_parser("offspring", parents=[common])
    sp.add_argument("--law", required=True)
    sp.add_argument("--r", type=_rational, required=True)
    sp.add_argument("--order", type=int, default=20)
    sp.set_defaults(func=cmd_tilt_offspring)
    sp = tilt_sub.add_parser("progeny", parents=[common])
    sp.add_argument("--law", required=True)
    sp.add_argument("--rho", type=_rational, required=True)
    sp.add_argument("--order", type=int, default=20)
    sp.set_defaults(func=cmd_tilt_progeny)
    sp = tilt_sub.add_parser("check", parents=[common])
    sp.add_argument("--family", choices=["geometric", "sibuya-offspring"], required=True)
    sp.add_argument("--alpha", type=_rational)
    sp.add_argument("--b", type=_rational)
    sp.add_argument("--r", type=_rational, required=True)
    sp.add_argument("--order", type=int, default=40)
    sp.set_defaults(func=cmd_tilt_check)

    sp = sub.add_parser("simulate", parents=[common], help="Monte Carlo total progeny")
    sp.add_argument("--family", choices=["geometric", "sibuya-offspring"], required=True)
    sp.add_argument("--alpha", type=_rational)
    sp.add_argument("--b", type=_rational)
    sp.add_argument("--replicas", type=int, default=10**4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--max-gen", type=int, default=10_000)
    sp.add_argument("--max-total", type=int, default=10**7)
    sp.add_argument("--k-max", type=int, default=20)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--per-replica", help="write per-replica CSV here")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("check-all", parents=[common], help="run the acceptance criteria")
    sp.set_defaults(func=cmd_check_all)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ProgenyError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
