"""Heuristic optimisation over near-deterministic repeater schemes.

The search sweeps link lengths from one elementary link up to the full
chain.  Elementary links scan the pair-generation protocols and attempt
counts; longer links scan adjacent-span decompositions, swap protocols and
attempt counts, then a bounded number of distillation rounds.  Schemes are
kept in a per-link grid over coarse-grained success probability and
fidelity, each cell holding the fastest scheme seen, and sub-optimal cells
are pruned after each link.  Banded swapping and distillation, the
bisection restriction for composite chain lengths, and the hierarchical
(BDCZ-style) restriction all narrow which scheme pairs are combined.
"""

from __future__ import annotations

import dataclasses
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .chain import ChainConfig
from .errors import InfeasibleError, SizeGuardError, ValidationError
from .scheme import ChainEvaluator, BlockEval, Scheme, SchemeMetrics
from .timing import attempts_for, mp_retrieval_prob, optimal_attempts_mp

LOG = math.log  # banded swapping uses natural logarithms


@dataclass(frozen=True)
class OptimizerConfig:
    """Search-control parameters.

    Infinite eps_swap or eps_distill disables the corresponding band
    (including the span-length condition for swaps).  `symmetric=None`
    detects chain symmetry automatically.
    """

    eps_f: float = 0.01
    eps_p: float = 0.02
    eps_swap: float = 0.05
    eps_distill: float = 0.05
    m: int = 2
    p_min: float = 0.9
    p_max: float = 0.99
    r_discr: int = 200
    f_threshold: float = 0.5
    symmetric: bool | None = None
    bisection: bool = False
    bdcz_only: bool = False
    prune_suboptimal: bool = True
    brute_force_guard: int = 5_000_000

    def __post_init__(self):
        if not 0.5 <= self.f_threshold < 1.0:
            raise ValidationError("f_threshold must lie in [0.5, 1)")
        if not 0.0 < self.p_min < self.p_max <= 1.0:
            raise ValidationError("need 0 < p_min < p_max <= 1")
        if self.eps_f <= 0 or self.eps_p <= 0:
            raise ValidationError("eps_f and eps_p must be positive")
        if self.eps_swap < 0 or self.eps_distill < 0:
            raise ValidationError("band widths must be nonnegative")
        if self.r_discr < 1 or self.m < 0:
            raise ValidationError("need r_discr >= 1 and m >= 0")

    def p_bin(self, p: float) -> int:
        """Smallest n with p < p_min + n * eps_p."""
        if p < self.p_min:
            return 0
        return int(math.floor((p - self.p_min) / self.eps_p)) + 1

    def f_bin(self, f: float) -> int:
        """Smallest n with f < f_threshold + n * eps_f."""
        if f < self.f_threshold:
            return 0
        return int(math.floor((f - self.f_threshold) / self.eps_f)) + 1


def swap_band_ok(i1: int, i2: int, f1: float, f2: float, eps_swap: float) -> bool:
    """Banded-swapping admissibility of two adjacent schemes."""
    if math.isinf(eps_swap):
        return True
    if abs(i1 - i2) > 2.0 * LOG(i1 + i2 - 1):
        return False
    return abs(LOG(f1) / i1 - LOG(f2) / i2) <= eps_swap


def swap_lengths_ok(i1: int, i2: int, eps_swap: float) -> bool:
    """Span-length part of the swap band, checked once per decomposition."""
    if math.isinf(eps_swap):
        return True
    return abs(i1 - i2) <= 2.0 * LOG(i1 + i2 - 1)


def swap_fidelities_ok(i1: int, i2: int, f1: float, f2: float, eps_swap: float) -> bool:
    if math.isinf(eps_swap):
        return True
    return abs(LOG(f1) / i1 - LOG(f2) / i2) <= eps_swap


def distill_band_ok(f1: float, f2: float, eps_distill: float) -> bool:
    """Banded-distillation admissibility: fidelities within eps of each
    other (boundary inclusive)."""
    if math.isinf(eps_distill):
        return True
    return abs(f1 - f2) <= eps_distill


def attempt_grid(
    q: float, cfg: OptimizerConfig, mp_decay_c: float = 0.0
) -> np.ndarray:
    """Attempt counts whose block success probability spans
    [p_min, p_max], at most r_discr values, endpoints included.

    With retrieval decay (mp_decay_c > 0) the window is clipped at the
    probability maximum; an empty grid means the block is infeasible.
    """
    if q <= 0.0:
        return np.empty(0, dtype=int)
    if mp_decay_c > 0.0 and q < 1.0:
        r_peak = optimal_attempts_mp(q, mp_decay_c)
        if mp_retrieval_prob(q, r_peak, mp_decay_c) < cfg.p_min:
            return np.empty(0, dtype=int)
        r_min = _first_reaching(q, mp_decay_c, cfg.p_min, r_peak)
        if mp_retrieval_prob(q, r_peak, mp_decay_c) >= cfg.p_max:
            r_max = _first_reaching(q, mp_decay_c, cfg.p_max, r_peak)
        else:
            r_max = r_peak
    else:
        if q >= cfg.p_max:
            return np.array([1], dtype=int)
        try:
            r_min = attempts_for(q, cfg.p_min)
            if cfg.p_max >= 1.0:
                # p_max = 1 is unreachable; cap the scan at r_discr values.
                r_max = r_min + cfg.r_discr - 1
            else:
                r_max = attempts_for(q, cfg.p_max)
        except InfeasibleError:
            return np.empty(0, dtype=int)
    if r_max < r_min:
        r_max = r_min
    grid = np.unique(np.rint(np.linspace(r_min, r_max, cfg.r_discr)).astype(int))
    return grid


def _first_reaching(q: float, c: float, target: float, r_peak: int) -> int:
    """Smallest r <= r_peak with retrieval-adjusted success >= target;
    valid because the probability is nondecreasing up to its peak."""
    lo, hi = 1, r_peak
    while lo < hi:
        mid = (lo + hi) // 2
        if mp_retrieval_prob(q, mid, c) >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


class SchemeStore:
    """Per-link grid over (probability bin, fidelity bin), each cell
    keeping the fastest scheme seen."""

    def __init__(self, cfg: OptimizerConfig):
        self.cfg = cfg
        self._links: dict = {}

    def link_cells(self, key) -> dict:
        return self._links.setdefault(key, {})

    def keys(self):
        return sorted(self._links.keys(), key=str)

    def store(self, key, scheme: Scheme) -> bool:
        """StoreScheme: discard below the fidelity threshold, otherwise
        keep the scheme unless its cell already holds a faster one."""
        if scheme.fidelity < self.cfg.f_threshold:
            return False
        cells = self.link_cells(key)
        cell = (self.cfg.p_bin(scheme.p), self.cfg.f_bin(scheme.fidelity))
        incumbent = cells.get(cell)
        if incumbent is None or scheme.t < incumbent.t:
            cells[cell] = scheme
            return True
        return False

    def would_store(self, key, p: float, f: float, t: float) -> bool:
        """Cheap pre-check of `store` from metrics alone."""
        if f < self.cfg.f_threshold:
            return False
        incumbent = self.link_cells(key).get((self.cfg.p_bin(p), self.cfg.f_bin(f)))
        return incumbent is None or t < incumbent.t

    def prune_link(self, key):
        """Per probability bin, walking fidelity downward, drop any scheme
        at least as slow as a higher-fidelity survivor."""
        cells = self.link_cells(key)
        by_pbin: dict[int, list] = {}
        for (pb, fb), scheme in cells.items():
            by_pbin.setdefault(pb, []).append(((pb, fb), scheme))
        for pb in sorted(by_pbin):
            ordered = sorted(
                by_pbin[pb], key=lambda kv: (-kv[1].fidelity, kv[1].t, kv[1].seq)
            )
            max_time = ordered[0][1].t
            for cell, scheme in ordered[1:]:
                if max_time <= scheme.t:
                    del cells[cell]
                else:
                    max_time = scheme.t
        return self

    def schemes(self, key) -> list[Scheme]:
        """Deterministically ordered cell contents of one link."""
        cells = self.link_cells(key)
        return [cells[cell] for cell in sorted(cells)]

    def frontier(self, key) -> list[Scheme]:
        """Stored schemes of one link, sorted by descending fidelity."""
        return sorted(
            self.link_cells(key).values(), key=lambda s: (-s.fidelity, s.t, s.seq)
        )


@dataclass
class RunStats:
    """Instrumentation of one optimisation run."""

    candidates_per_length: dict = field(default_factory=dict)
    stored_per_length: dict = field(default_factory=dict)
    wall_time: float = 0.0

    def count(self, length: int, candidates: int, stored: int = 0):
        self.candidates_per_length[length] = (
            self.candidates_per_length.get(length, 0) + candidates
        )
        self.stored_per_length[length] = self.stored_per_length.get(length, 0) + stored

    @property
    def total_candidates(self) -> int:
        return sum(self.candidates_per_length.values())


@dataclass
class OptimizeResult:
    store: SchemeStore
    stats: RunStats
    end_key: object
    symmetric: bool

    def frontier(self) -> list[Scheme]:
        return self.store.frontier(self.end_key)


def shift_scheme(scheme: Scheme, offset: int) -> Scheme:
    """Translate a scheme (and its subtree) along a symmetric chain."""
    if offset == 0:
        return scheme
    return dataclasses.replace(
        scheme,
        span=(scheme.span[0] + offset, scheme.span[1] + offset),
        children=tuple(shift_scheme(c, offset) for c in scheme.children),
    )


def _allowed_lengths(n: int, bisection: bool) -> set[int]:
    if not bisection:
        return set(range(1, n + 1))
    h = n
    while h % 2 == 0:
        h //= 2
    lengths = set(range(1, h + 1))
    lengths.update(k for k in range(h, n + 1, h))
    lengths.add(n)
    return lengths


def _splits(i: int, allowed: set[int], symmetric: bool, eps_swap: float):
    """Adjacent-span decompositions i1 + i2 = i passing the length band."""
    out = []
    for i1 in range(1, i):
        i2 = i - i1
        if i1 not in allowed or i2 not in allowed:
            continue
        if symmetric and i1 > i2:
            continue  # mirror decompositions are metric-equivalent
        if not swap_lengths_ok(i1, i2, eps_swap):
            continue
        out.append((i1, i2))
    return out


def _run(
    chain: ChainConfig,
    cfg: OptimizerConfig,
    heuristics: bool,
    guard: int | None = None,
) -> OptimizeResult:
    started = time.perf_counter()
    ev = ChainEvaluator(chain)
    n = chain.n_links
    symmetric = cfg.symmetric if cfg.symmetric is not None else chain.is_symmetric()
    eps_swap = cfg.eps_swap if heuristics else math.inf
    eps_distill = cfg.eps_distill if heuristics else math.inf
    bisection = cfg.bisection and heuristics
    bdcz = cfg.bdcz_only
    allowed = _allowed_lengths(n, bisection)
    store = SchemeStore(cfg)
    stats = RunStats()

    def key_for(span):
        return span[1] - span[0] if symmetric else span

    def consider(base: BlockEval, length: int, key) -> int:
        rs = attempt_grid(
            base.q, cfg, ev.mp_decay_constant(base.span, base.t_attempt)
        )
        if rs.size == 0:
            return 0
        if guard is not None and stats.total_candidates + rs.size > guard:
            raise SizeGuardError(
                f"enumeration exceeds the configured budget of {guard} candidates"
            )
        fs, ps, ts = ev.metrics_grid(base, rs)
        stored = 0
        for idx in range(rs.size):
            f, p, t = float(fs[idx]), float(ps[idx]), float(ts[idx])
            if store.would_store(key, p, f, t):
                scheme = ev.build(base, int(rs[idx]), SchemeMetrics(f, p, t))
                if store.store(key, scheme):
                    stored += 1
        stats.count(length, int(rs.size), stored)
        return stored

    for i in range(1, n + 1):
        if i not in allowed:
            continue
        spans = [(0, i)] if symmetric else [(k, k + i) for k in range(n - i + 1)]
        for span in spans:
            key = key_for(span)
            if i == 1:
                for proto in ev.epg_protocols(span[0]):
                    consider(ev.epg_base(span[0], proto), i, key)
            else:
                for i1, i2 in _splits(i, allowed, symmetric, eps_swap):
                    if symmetric:
                        left = store.schemes(i1)
                        right = [shift_scheme(s, i1) for s in store.schemes(i2)]
                    else:
                        left = store.schemes((span[0], span[0] + i1))
                        right = store.schemes((span[0] + i1, span[1]))
                    for s1 in left:
                        for s2 in right:
                            if bdcz and s1.fingerprint() != s2.fingerprint():
                                continue
                            if not swap_fidelities_ok(
                                i1, i2, s1.fidelity, s2.fidelity, eps_swap
                            ):
                                continue
                            consider(ev.swap_base(s1, s2), i, key)
            if chain.supports_distillation():
                for _ in range(cfg.m):
                    snapshot = store.schemes(key)
                    for s1 in snapshot:
                        for s2 in snapshot:
                            if bdcz and s1.fingerprint() != s2.fingerprint():
                                continue
                            if not distill_band_ok(
                                s1.fidelity, s2.fidelity, eps_distill
                            ):
                                continue
                            consider(ev.distill_base(s1, s2), i, key)
            if heuristics and cfg.prune_suboptimal:
                store.prune_link(key)

    stats.wall_time = time.perf_counter() - started
    end_key = n if symmetric else (0, n)
    return OptimizeResult(store=store, stats=stats, end_key=end_key, symmetric=symmetric)


def optimize(chain: ChainConfig, cfg: OptimizerConfig) -> OptimizeResult:
    """Heuristic optimisation: full pipeline with coarse-grained storage,
    banded combination and per-link pruning."""
    return _run(chain, cfg, heuristics=True)


def brute_force(chain: ChainConfig, cfg: OptimizerConfig) -> OptimizeResult:
    """Reference search without heuristics: no bands, no pruning, no
    bisection; only the success-probability and fidelity-threshold filters
    and the coarse-grained cell storage remain.

    Guarded: refuses chains beyond three links or enumerations beyond the
    configured candidate budget.
    """
    if chain.n_links > 3:
        raise SizeGuardError("brute force is limited to chains of at most 3 links")
    plain = dataclasses.replace(cfg, bisection=False, bdcz_only=False, symmetric=False)
    return _run(chain, plain, heuristics=False, guard=cfg.brute_force_guard)


# -- complexity bounds -------------------------------------------------------


def _cells_bound(cfg: OptimizerConfig) -> int:
    f_cells = math.ceil((1.0 - cfg.f_threshold) / cfg.eps_f)
    p_cells = math.ceil((1.0 - cfg.p_min) / cfg.eps_p)
    return f_cells * p_cells


def candidate_bound(
    n: int,
    cfg: OptimizerConfig,
    n_epg: int,
    n_swap: int = 1,
    n_distill: int = 1,
    symmetric: bool = False,
) -> float:
    """Pre-asymptotic candidate-count bound of the heuristic search.

    Sums, per link length, the admissible decompositions times the worst
    case of stored-scheme pairs, protocols and attempt values, plus the
    banded-distillation term; the symmetric variant counts each length
    once with the reduced number of unique decompositions.
    """
    cells = _cells_bound(cfg)
    pair_bound = cells * cells
    distill_pairs = (
        2 * math.ceil(cfg.eps_distill / cfg.eps_f) * math.ceil((1.0 - cfg.p_min) / cfg.eps_p)
        if math.isfinite(cfg.eps_distill)
        else cells
    ) * cells
    total = (1 if symmetric else n) * n_epg * cfg.r_discr
    total += (1 if symmetric else n) * cfg.m * n_distill * distill_pairs * cfg.r_discr
    for i in range(2, n + 1):
        positions = 1 if symmetric else n - i + 1
        unique_splits = math.floor(LOG(i - 1)) + 1
        if not symmetric:
            unique_splits = 2 * math.floor(LOG(i - 1)) + 1
        swaps = unique_splits * n_swap * pair_bound * cfg.r_discr
        distills = cfg.m * n_distill * distill_pairs * cfg.r_discr
        total += positions * (swaps + distills)
    return float(total)


def brute_force_count(
    n: int, r_values: int, n_epg: int, n_swap: int = 1
) -> float:
    """Scheme count of the exhaustive search without distillation:
    (r |S|)^(n-1) (r |E|)^n."""
    return (r_values * n_swap) ** (n - 1) * (r_values * n_epg) ** n
