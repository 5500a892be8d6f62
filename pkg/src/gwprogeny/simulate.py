"""Monte Carlo Galton–Watson processes.

Randomness is counter-based: the uniform used by individual ``slot`` of
replica ``i`` in generation ``g`` is a hash of ``(master_seed, i, g, slot,
sub)``.  A replica's trajectory is therefore a pure function of its index,
so results do not depend on chunking or on the number of workers, and
raising a cap never changes a replica that was not censored.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from .errors import InsufficientSamples, InvalidParams, TruncatedTail
from .laws import Geometric, Law, Sibuya, SibuyaOffspring, Tabulated
from .rational import ONE, ZERO, Q, RationalLike, format_rational
from .series import compose
from .sibuya import SibuyaParams, _invert_tail, sibuya_gf

TAIL_BUDGET = 1e-12
DEFAULT_TV_THRESHOLD = 0.005
MIN_SAMPLES = 10**4

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def counter_uniforms(seed: int, *counters) -> np.ndarray:
    """Uniforms in ``(0, 1)`` keyed by ``seed`` and integer counter arrays.

    SplitMix64 finalizer chained over the counters; every distinct key tuple
    gives an independent-looking 53-bit uniform.
    """
    with np.errstate(over="ignore"):
        h = _mix(np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + _GAMMA)
        for c in counters:
            c = np.asarray(c).astype(np.uint64)
            h = _mix(h ^ (c * _GAMMA + _GAMMA))
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


# offspring samplers: draw(seed, rep, gen, slot) -> (values, in_tail)


class _GeometricSampler:
    def __init__(self, alpha):
        self.log_alpha = math.log(float(alpha))

    def draw(self, seed, rep, gen, slot):
        u = counter_uniforms(seed, rep, gen, slot, 0)
        return np.floor(np.log(u) / self.log_alpha).astype(np.int64), None


class _SibuyaSampler:
    """Inverse survival function of ``s_{a,k}``: ``Pr(S > n) = prod (1 - a/(j+k))``."""

    def __init__(self, params: SibuyaParams):
        self.a, self.k = float(params.a), params.k

    def draw(self, seed, rep, gen, slot):
        u = counter_uniforms(seed, rep, gen, slot, 0)
        return _invert_tail(u, self.a, self.k, 0).astype(np.int64), None


class _HbSampler:
    """Exact sampler for ``h_b``, ``1 < b <= 2``.

    ``h_b = (1/b) sum_m (u H(u))^m`` with ``H(1) = 1 - 1/b``, so a draw is
    ``M + Y_1 + ... + Y_M`` where ``Pr(M >= m) = (1 - 1/b)^m`` and ``Y + 2``
    is the first success among independent events ``B_j`` (``j >= 2``) of
    probability ``b/j``.
    """

    def __init__(self, b):
        b = Q(b)
        if not 1 < b <= 2:
            raise InvalidParams("h_b is a probability law only for 1 < b <= 2")
        self.b = float(b)
        self.log_q = math.log(1 - 1 / self.b)

    def draw(self, seed, rep, gen, slot):
        u = counter_uniforms(seed, rep, gen, slot, 0)
        m = np.floor(np.log(u) / self.log_q).astype(np.int64)
        total = m.copy()
        if self.b == 2 or not m.any():
            return total, None
        owner = np.repeat(np.arange(m.size), m)
        starts = np.cumsum(m) - m
        sub = np.arange(owner.size) - starts[owner] + 1
        uy = counter_uniforms(seed, rep[owner], gen, slot[owner], sub)
        y = _invert_tail(uy, self.b, 0, 1).astype(np.int64) - 2
        total += np.bincount(owner, weights=y, minlength=m.size).astype(np.int64)
        return total, None


class _TableSampler:
    """Inverse CDF from exact coefficients, extended on demand.

    Cumulative sums are formed exactly and rounded once to double.  A
    uniform beyond the table is retried against a doubled table; past
    ``max_order`` it is reported as a tail draw (the replica is censored).
    """

    def __init__(self, law: Law, order: int = 64, max_order: int = 4096):
        self.law = law
        self.max_order = max_order if law.known_order is None else law.known_order
        self.finite = law.known_order is None and isinstance(law, Tabulated)
        self._build(min(order, self.max_order))

    def _build(self, order):
        s = self.law.series(order)
        if any(c < 0 for c in s.coeffs):
            raise InvalidParams(f"{self.law.name} has negative masses")
        acc, cdf = ZERO, []
        for c in s.coeffs:
            acc += c
            cdf.append(float(acc))
        self.order = order
        self.cdf = np.array(cdf)
        self.last_positive = max(i for i, c in enumerate(s.coeffs) if c > 0) if acc > 0 else 0

    def draw(self, seed, rep, gen, slot):
        u = counter_uniforms(seed, rep, gen, slot, 0)
        x = np.searchsorted(self.cdf, u, side="right")
        out_of_table = x > self.order
        while out_of_table.any() and not self.finite and self.order < self.max_order:
            self._build(min(2 * self.order, self.max_order))
            x = np.searchsorted(self.cdf, u, side="right")
            out_of_table = x > self.order
        if self.finite:
            x = np.minimum(x, self.last_positive)
            return x.astype(np.int64), None
        x = np.minimum(x, self.order)
        return x.astype(np.int64), out_of_table


def make_sampler(p: Law):
    if isinstance(p, Geometric):
        return _GeometricSampler(p.alpha)
    if isinstance(p, SibuyaOffspring):
        return _HbSampler(p.b)
    if isinstance(p, Sibuya) and p.params.rho == 1 and p.params.lam == 1:
        return _SibuyaSampler(p.params)
    if isinstance(p, Tabulated):
        tail = p.tail(p.table.order)
        if tail is None:
            raise TruncatedTail(f"{p.name}: tail mass unknown, refusing to simulate")
        if tail > TAIL_BUDGET:
            raise TruncatedTail(f"{p.name}: truncated tail mass {float(tail):.3g} exceeds {TAIL_BUDGET}")
        return _TableSampler(p)
    if p.tail(0) is None:
        raise TruncatedTail(f"{p.name}: tail mass unknown, refusing to simulate")
    return _TableSampler(p)


@dataclass(frozen=True)
class GWConfig:
    master_seed: int = 0
    max_generations: int = 10_000
    max_total: int = 10**7
    replicas: int = 1000
    chunk_size: int = 1 << 16
    batch_individuals: int = 1 << 22

    def __post_init__(self):
        if self.max_generations < 1 or self.max_total < 1:
            raise InvalidParams("caps must be >= 1")
        if self.replicas < 1:
            raise InvalidParams("replicas must be >= 1")

    def to_json(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GWResult:
    trajectory: tuple
    total: int
    censored: bool


@dataclass
class SimSummary:
    """Per-replica outcomes in replica-index order."""

    totals: np.ndarray
    censored: np.ndarray
    generations: np.ndarray
    final_population: np.ndarray
    trajectories: Optional[list] = None

    @property
    def censored_fraction(self) -> float:
        return float(self.censored.mean())

    def results(self) -> list:
        if self.trajectories is None:
            raise InvalidParams("trajectories were not kept")
        return [
            GWResult(tuple(int(z) for z in t), int(s), bool(c))
            for t, s, c in zip(self.trajectories, self.totals, self.censored)
        ]


def _offspring_sums(sampler, seed, rep, gen, Z, batch):
    """Sum of ``Z[i]`` offspring draws for every replica ``rep[i]``."""
    sums = np.zeros(rep.size, dtype=np.int64)
    tail = np.zeros(rep.size, dtype=bool)
    ends = np.cumsum(Z)
    lo = 0
    while lo < rep.size:
        base = ends[lo - 1] if lo else 0
        hi = max(lo + 1, int(np.searchsorted(ends, base + batch, side="right")))
        z = Z[lo:hi]
        owner = np.repeat(np.arange(hi - lo), z)
        starts = np.cumsum(z) - z
        slot = np.arange(owner.size) - starts[owner]
        x, in_tail = sampler.draw(seed, rep[lo:hi][owner], gen, slot)
        sums[lo:hi] = np.bincount(owner, weights=x, minlength=hi - lo).astype(np.int64)
        if in_tail is not None and in_tail.any():
            tail[lo:hi] = np.bincount(owner, weights=in_tail, minlength=hi - lo) > 0
        lo = hi
    return sums, tail


def _run_chunk(args):
    sampler, cfg, start, stop, keep = args
    n = stop - start
    rep = np.arange(start, stop, dtype=np.int64)
    Z = np.ones(n, dtype=np.int64)
    total = np.ones(n, dtype=np.int64)
    censored = np.zeros(n, dtype=bool)
    gens = np.zeros(n, dtype=np.int64)
    traj = [[1] for _ in range(n)] if keep else None
    active = np.arange(n)
    for gen in range(cfg.max_generations):
        if active.size == 0:
            break
        sums, tail = _offspring_sums(sampler, cfg.master_seed, rep[active], gen, Z[active], cfg.batch_individuals)
        Z[active] = sums
        total[active] += sums
        gens[active] = gen + 1
        if keep:
            for i, s in zip(active, sums):
                traj[i].append(int(s))
        over = tail | (total[active] > cfg.max_total)
        censored[active[over]] = True
        active = active[(sums > 0) & ~over]
    censored[active] = True
    return total, censored, gens, Z, traj


def simulate_totals(p: Law, cfg: GWConfig, workers: int = 1, keep_trajectories: bool = False) -> SimSummary:
    """Run ``cfg.replicas`` independent processes with offspring law ``p``."""
    sampler = make_sampler(p)
    bounds = [(s, min(s + cfg.chunk_size, cfg.replicas)) for s in range(0, cfg.replicas, cfg.chunk_size)]
    tasks = [(sampler, cfg, s, e, keep_trajectories) for s, e in bounds]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_run_chunk, tasks))
    else:
        parts = [_run_chunk(t) for t in tasks]
    trajs = None
    if keep_trajectories:
        trajs = [t for part in parts for t in part[4]]
    return SimSummary(
        totals=np.concatenate([x[0] for x in parts]),
        censored=np.concatenate([x[1] for x in parts]),
        generations=np.concatenate([x[2] for x in parts]),
        final_population=np.concatenate([x[3] for x in parts]),
        trajectories=trajs,
    )


def simulate(p: Law, cfg: GWConfig, workers: int = 1) -> list:
    """Full trajectories as :class:`GWResult` objects (memory grows with replicas)."""
    return simulate_totals(p, cfg, workers, keep_trajectories=True).results()


def histogram(values: np.ndarray, k_max: int, overflow: Optional[np.ndarray] = None) -> np.ndarray:
    """Counts for ``0..k_max`` plus one lumped cell for ``> k_max``.

    Entries flagged in ``overflow`` (e.g. censored replicas) go to the last cell.
    """
    v = np.asarray(values)
    if overflow is not None:
        v = np.where(overflow, k_max + 1, v)
    v = np.clip(v, 0, k_max + 1)
    return np.bincount(v, minlength=k_max + 2)


@dataclass(frozen=True)
class CompareResult:
    tv_distance: float
    chi_square: float
    dof: int
    p_value: float
    passed: bool
    samples: int
    threshold: float

    def to_json(self) -> dict:
        return asdict(self)


def compare(
    counts: np.ndarray,
    exact: Sequence,
    k_max: int,
    start: int = 1,
    threshold: float = DEFAULT_TV_THRESHOLD,
    min_samples: int = MIN_SAMPLES,
) -> CompareResult:
    """TV distance and chi-square between a histogram and an exact pmf.

    Cells are ``start..k_max`` plus a lumped tail; ``exact[n]`` is the exact
    mass at ``n`` (a :class:`PowerSeries` or a sequence indexed by value).
    """
    counts = np.asarray(counts)
    n = int(counts.sum())
    if n < min_samples:
        raise InsufficientSamples(f"{n} samples < {min_samples}")
    if len(counts) < k_max + 2:
        raise InvalidParams("histogram shorter than k_max + 2")
    masses = [Q(exact[i]) for i in range(start, k_max + 1)]
    tail = ONE - sum(masses, ZERO) - sum((Q(exact[i]) for i in range(start)), ZERO)
    expected = np.array([float(m) for m in masses] + [float(tail)])
    observed = np.concatenate([counts[start : k_max + 1], [counts[k_max + 1 :].sum()]]) / n
    tv = 0.5 * float(np.abs(observed - expected).sum())
    pos = expected > 0
    chi = float(n * (((observed - expected) ** 2)[pos] / expected[pos]).sum())
    dof = int(pos.sum()) - 1
    return CompareResult(
        tv_distance=tv,
        chi_square=chi,
        dof=dof,
        p_value=float(stats.chi2.sf(chi, dof)),
        passed=tv < threshold,
        samples=n,
        threshold=threshold,
    )


@dataclass(frozen=True)
class GenerationLawReport:
    a: str
    n: int
    order: int
    exact_ok: bool
    empirical: Optional[CompareResult]

    @property
    def passed(self) -> bool:
        return self.exact_ok and (self.empirical is None or self.empirical.passed)


def iterate_gf(p: Law, n: int, order: int):
    """``f_p`` composed with itself ``n`` times, as a truncated series.

    Needs ``f_p(0) = 0`` unless ``p`` has finite support (then the outer
    polynomial is evaluated exactly at the inner series).
    """
    from .series import PowerSeries

    fp = p.series(order)
    result = PowerSeries.variable(order) if order >= 1 else PowerSeries([ZERO])
    for _ in range(n):
        if fp.coeffs[0] == 0:
            result = compose(fp, result)
        elif p.known_order is None and isinstance(p, Tabulated):
            acc = PowerSeries.constant(0, order)
            for c in reversed(p.table.coeffs):
                acc = acc * result + c
            result = acc
        else:
            raise InvalidParams("iterating a gf with f(0) != 0 needs a finite-support law")
    return result


def generation_law_check(
    a: RationalLike,
    n: int,
    cfg: Optional[GWConfig] = None,
    order: int = 100,
    k_max: int = 20,
) -> GenerationLawReport:
    """Law of ``Z_n`` for offspring law ``s_a``: it must be ``s_{a^n}``.

    Exact side: ``n``-fold composition of ``f_{s_a}`` against the closed
    form.  Empirical side (when ``cfg`` is given): simulate ``n``
    generations and compare ``Z_n`` on ``1..k_max``.  Every individual has
    at least one child, so ``Z`` never decreases and replicas censored by
    the population cap already sit in the tail cell.
    """
    a = Q(a)
    if not Q(1, 2) <= a < 1:
        raise InvalidParams("need 1/2 <= a < 1")
    law = Sibuya(a)
    target = sibuya_gf(SibuyaParams(a**n), order) if n > 0 else None
    it = iterate_gf(law, n, order)
    if n == 0:
        from .series import PowerSeries

        exact_ok = it == PowerSeries.variable(order)
    else:
        exact_ok = it == target
    empirical = None
    if cfg is not None:
        if k_max > order:
            raise InvalidParams("k_max must not exceed the series order")
        if cfg.max_total < (n + 1) * (k_max + 1):
            raise InvalidParams("max_total too small to classify censored replicas")
        run_cfg = GWConfig(
            master_seed=cfg.master_seed,
            max_generations=max(n, 1),
            max_total=cfg.max_total,
            replicas=cfg.replicas,
            chunk_size=cfg.chunk_size,
        )
        if n == 0:
            zn = np.ones(cfg.replicas, dtype=np.int64)
            overflow = None
        else:
            summ = simulate_totals(law, run_cfg)
            zn = summ.final_population
            overflow = summ.generations < n
        exact = list(it.coeffs) if n > 0 else [ZERO, ONE] + [ZERO] * max(order, k_max)
        empirical = compare(histogram(zn, k_max, overflow), exact, k_max, min_samples=min(MIN_SAMPLES, cfg.replicas))
    return GenerationLawReport(a=format_rational(a), n=n, order=order, exact_ok=exact_ok, empirical=empirical)
