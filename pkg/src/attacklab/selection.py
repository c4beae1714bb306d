"""Budget-constrained attack-set selection: two greedy variants and baselines."""
from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from attacklab import kernels
from attacklab.attack import AttackScenario
from attacklab.convergence import InfluenceCache, build_influence_cache, conv_error

BRUTE_FORCE_CAP = 20
TIE_RTOL = 1e-12


class SelectionError(ValueError):
    pass


@dataclass(frozen=True)
class TraceRecord:
    agent: int
    gain: float
    gain_per_cost: float
    f_cum: float


@dataclass(frozen=True)
class SelectionResult:
    set: tuple
    f_value: float
    cost: float
    bound: float
    trace: tuple = ()
    wall_time: float = 0.0
    algorithm: str = ""
    evaluations: int = 0
    discarded: int | None = None  # agent removed by the final budget repair


def suboptimality_bound(cost: float, omega: float) -> float:
    """``1 - exp(-cost / omega)``."""
    if not omega > 0:
        raise SelectionError(f"budget must be positive, got {omega}")
    if cost < 0:
        raise SelectionError(f"cost must be non-negative, got {cost}")
    return 1.0 - math.exp(-cost / omega)


def _bound(cost: float, omega: float) -> float:
    return suboptimality_bound(cost, omega) if omega > 0 else 0.0


def _better(score: float, best: float) -> bool:
    return score > best + TIE_RTOL * max(abs(score), abs(best))


class _Greedy:
    """Shared state for the greedy loops: running sum, cost and evaluation count."""

    def __init__(self, cache: InfluenceCache, costs: np.ndarray):
        self.cache = cache
        self.costs = costs
        self.total = np.zeros(cache.g.shape[0])
        self.f = 0.0
        self.cost = 0.0
        self.chosen: list[int] = []
        self.trace: list[TraceRecord] = []
        self.evaluations = 0

    def best(self, candidates):
        best_a, best_score, best_gain = None, -math.inf, 0.0
        for a in candidates:  # ascending IDs, so the first maximiser wins ties
            gain = float(np.linalg.norm(self.total + self.cache.g[:, a - 1])) - self.f
            self.evaluations += 1
            score = gain / self.costs[a - 1]
            if best_a is None or _better(score, best_score):
                best_a, best_score, best_gain = a, score, gain
        return best_a, best_gain, best_score

    def add(self, a: int, gain: float, score: float):
        self.total = self.total + self.cache.g[:, a - 1]
        self.f = float(np.linalg.norm(self.total))
        self.cost += float(self.costs[a - 1])
        self.chosen.append(a)
        self.trace.append(TraceRecord(a, gain, score, self.f))


def _prepare(s: AttackScenario, cache: InfluenceCache | None):
    if cache is None:
        cache = build_influence_cache(s)
    return cache, s.cost_vector()


def _result(s, cache, chosen, cost, algorithm, t0, trace=(), evaluations=0, discarded=None):
    chosen = tuple(sorted(chosen))
    return SelectionResult(
        set=chosen,
        f_value=conv_error(cache, chosen),
        cost=float(cost),
        bound=_bound(float(cost), s.budget),
        trace=tuple(trace),
        wall_time=time.perf_counter() - t0,
        algorithm=algorithm,
        evaluations=evaluations,
        discarded=discarded,
    )


def fdi_assa(s: AttackScenario, cache: InfluenceCache | None = None) -> SelectionResult:
    """Cost-ratio greedy that may overshoot the budget, then drops its last pick."""
    t0 = time.perf_counter()
    cache, costs = _prepare(s, cache)
    st = _Greedy(cache, costs)
    remaining = list(range(1, s.n + 1))
    while remaining and st.cost <= s.budget:
        a, gain, score = st.best(remaining)
        st.add(a, gain, score)
        remaining.remove(a)
    discarded = None
    if st.cost > s.budget:
        discarded = st.chosen.pop()
        st.cost -= float(costs[discarded - 1])
    cost = float(sum(costs[a - 1] for a in st.chosen))
    return _result(s, cache, st.chosen, cost, "greedy", t0, st.trace, st.evaluations, discarded)


def ifdi_assa(s: AttackScenario, cache: InfluenceCache | None = None) -> SelectionResult:
    """Cost-ratio greedy restricted to candidates that still fit the budget."""
    t0 = time.perf_counter()
    cache, costs = _prepare(s, cache)
    st = _Greedy(cache, costs)
    remaining = list(range(1, s.n + 1))
    while remaining and st.cost < s.budget:
        feasible = [a for a in remaining if st.cost + costs[a - 1] <= s.budget]
        if not feasible:
            break
        a, gain, score = st.best(feasible)
        st.add(a, gain, score)
        remaining.remove(a)
    return _result(s, cache, st.chosen, st.cost, "greedy-improved", t0, st.trace, st.evaluations)


def brute_force(s: AttackScenario, cache: InfluenceCache | None = None) -> SelectionResult:
    """Exact maximiser over every affordable subset; ties go to the smallest sorted tuple."""
    if s.n > BRUTE_FORCE_CAP:
        raise SelectionError(f"brute force capped at n <= {BRUTE_FORCE_CAP}, got {s.n}")
    t0 = time.perf_counter()
    cache, costs = _prepare(s, cache)
    F = kernels.subset_norms(cache.g.T)
    masks = np.arange(1 << s.n)
    bits = (masks[:, None] >> np.arange(s.n)) & 1
    C = bits @ costs
    ok = C <= s.budget + 1e-12 * max(1.0, s.budget)
    fmax = float(F[ok].max())
    near = ok & (F >= fmax - TIE_RTOL * max(fmax, 1e-300))
    winners = [tuple(i + 1 for i in range(s.n) if m >> i & 1) for m in np.flatnonzero(near)]
    best = min(winners)
    return _result(s, cache, best, s.cost_of(best), "brute", t0, evaluations=int(ok.sum()))


def _in_order(s, cache, costs, order, algorithm, t0):
    chosen, cost = [], 0.0
    for a in order:
        if cost + costs[a - 1] <= s.budget:
            chosen.append(int(a))
            cost += float(costs[a - 1])
    return _result(s, cache, chosen, cost, algorithm, t0)


def random_baseline(s: AttackScenario, seed: int, cache: InfluenceCache | None = None) -> SelectionResult:
    t0 = time.perf_counter()
    cache, costs = _prepare(s, cache)
    order = np.random.default_rng(seed).permutation(np.arange(1, s.n + 1))
    return _in_order(s, cache, costs, order, "random", t0)


def degree_baseline(s: AttackScenario, cache: InfluenceCache | None = None) -> SelectionResult:
    t0 = time.perf_counter()
    cache, costs = _prepare(s, cache)
    deg = s.graph.degrees()
    order = sorted(range(1, s.n + 1), key=lambda i: (-deg[i - 1], i))
    return _in_order(s, cache, costs, order, "degree", t0)


ALGORITHMS = {
    "greedy": fdi_assa,
    "greedy-improved": ifdi_assa,
    "brute": brute_force,
    "degree": degree_baseline,
}

SELECTION_HEADER = ["algorithm", "omega", "cost", "set", "f_value", "bound", "wall_ms"]
TRACE_HEADER = ["iter", "agent", "gain", "gain_per_cost", "f_cum"]


def format_set(ids) -> str:
    return "+".join(str(i) for i in sorted(ids))


def _g(x: float) -> str:
    return f"{x:.17g}"


def selection_row(r: SelectionResult, omega: float, include_time: bool = True) -> list:
    wall = _g(r.wall_time * 1e3) if include_time else ""
    return [r.algorithm, _g(omega), _g(r.cost), format_set(r.set), _g(r.f_value), _g(r.bound), wall]


def write_selection_csv(rows, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SELECTION_HEADER)
        w.writerows(rows)


def write_trace_csv(r: SelectionResult, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for k, rec in enumerate(r.trace, start=1):
            w.writerow([k, rec.agent, _g(rec.gain), _g(rec.gain_per_cost), _g(rec.f_cum)])
