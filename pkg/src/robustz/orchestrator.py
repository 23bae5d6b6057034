"""Case ladder, robust test assembly, n-sweeps and feasible-n search.

Per direction the ladder tries the sign regimes in the order that can
only improve the level: minimization runs case 2 (level <= 0), then the
linear case (level 0), then case 1 (level >= 0); maximization mirrors
it. The first feasible case's level is the reported extremal statistic.

When all three cases fail but n disjoint pairs exist, the assignment
backing the linear case is returned with its actual Z and flagged
``fallback`` so a sweep never reports a spurious "no pairs" while the
cardinality constraint is satisfiable.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .greedy import GreedySolution, Infeasible, build_sorted_list, greedy_max, greedy_min
from .hungarian import case3_selection, case3_verdict
from .matching import EffectMatrix
from .statistic import (
    TestResult,
    classify_robustness,
    p_values,
    stats_from_values,
    z_statistic,
)

FALLBACK = "fallback"


@dataclass(frozen=True)
class NoPairsPossible:
    reason: str


class NoPairsError(RuntimeError):
    """A direction could not produce n disjoint eligible pairs."""


def solve(em: EffectMatrix, n: int, direction: str, trace: list | None = None):
    """Best level for one direction: GreedySolution or NoPairsPossible.

    ``trace``, when given, collects the case tags in attempt order.
    """
    if n < 2:
        raise ValueError(f"solver needs n >= 2, got n={n}")
    if direction not in ("min", "max"):
        raise ValueError(f"unknown direction {direction!r}")

    ylist = build_sorted_list(em)
    selection_cache: dict[str, object] = {}

    def case3_attempt():
        selection = case3_selection(em, n, direction)
        selection_cache["selection"] = selection
        return case3_verdict(selection, em, direction)

    if direction == "min":
        ladder = [
            ("min_case2", lambda: greedy_min(ylist, n, "case2")),
            ("min_case3", case3_attempt),
            ("min_case1", lambda: greedy_min(ylist, n, "case1")),
        ]
    else:
        ladder = [
            ("max_case1", lambda: greedy_max(ylist, n, "case1")),
            ("max_case3", case3_attempt),
            ("max_case2", lambda: greedy_max(ylist, n, "case2")),
        ]

    for tag, attempt in ladder:
        if trace is not None:
            trace.append(tag)
        result = attempt()
        if not isinstance(result, Infeasible):
            return result

    if "selection" not in selection_cache:
        selection_cache["selection"] = case3_selection(em, n, direction)
    selection = selection_cache["selection"]
    if selection is None:
        return NoPairsPossible(f"no assignment of {n} disjoint eligible pairs exists")
    if trace is not None:
        trace.append(FALLBACK)
    stats = stats_from_values(em.effect[p] for p in selection.sorted_pairs())
    return GreedySolution(
        assignment=selection,
        stats=stats,
        gamma=z_statistic(stats),
        case=FALLBACK,
    )


def run_test(em: EffectMatrix, n: int, alpha: float) -> TestResult:
    """Both directions at one n, with P-values and robustness class.

    The two ladder levels can cross on corner instances: the linear case
    reports the bound 0 rather than a witnessed statistic, and degenerate
    selections report signed infinity, so the minimization level may land
    above the maximization one. When that happens both bounds are
    re-anchored to the Z values of the assignments the two ladders
    actually constructed, which are always genuine members of the
    assignment set (nothing is fabricated; the interval only tightens).
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    low = solve(em, n, "min")
    high = solve(em, n, "max")
    if isinstance(low, NoPairsPossible):
        raise NoPairsError(low.reason)
    if isinstance(high, NoPairsPossible):
        raise NoPairsError(high.reason)
    if low.gamma <= high.gamma:
        z_min, src_min = low.gamma, low
        z_max, src_max = high.gamma, high
    else:
        witnesses = [(z_statistic(low.stats), low), (z_statistic(high.stats), high)]
        z_min, src_min = min(witnesses, key=lambda w: w[0])
        z_max, src_max = max(witnesses, key=lambda w: w[0])
    p_min, p_max = p_values(z_max, z_min)
    return TestResult(
        n=n,
        z_min=z_min,
        z_max=z_max,
        gamma_min=z_min,
        gamma_max=z_max,
        case_used_min=src_min.case,
        case_used_max=src_max.case,
        p_min=p_min,
        p_max=p_max,
        classification=classify_robustness(p_min, p_max, alpha),
        assignment_min=src_min.assignment,
        assignment_max=src_max.assignment,
        degenerate_min=src_min.stats.degenerate,
        degenerate_max=src_max.stats.degenerate,
    )


@dataclass(frozen=True)
class SweepRow:
    n: int
    result: TestResult | None
    elapsed_ms: float

    @property
    def no_pairs(self) -> bool:
        return self.result is None


def _timed_test(em: EffectMatrix, n: int, alpha: float) -> SweepRow:
    start = time.perf_counter()
    try:
        result = run_test(em, n, alpha)
    except NoPairsError:
        result = None
    elapsed = (time.perf_counter() - start) * 1000.0
    return SweepRow(n=n, result=result, elapsed_ms=elapsed)


def iter_sweep(em: EffectMatrix, ns, alpha: float = 0.05, jobs: int = 1):
    """Yield one SweepRow per n, in input order (rows stream as computed)."""
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            yield from pool.map(lambda n: _timed_test(em, n, alpha), ns)
    else:
        for n in ns:
            yield _timed_test(em, n, alpha)


def sweep(em: EffectMatrix, n_min: int, n_max: int, step: int = 1,
          alpha: float = 0.05, jobs: int = 1) -> list[SweepRow]:
    """One test per n over the range; rows come back ordered by n."""
    if n_min < 2 or n_min > n_max:
        raise ValueError(f"invalid sweep range [{n_min}, {n_max}]")
    if step < 1:
        raise ValueError(f"sweep step must be >= 1, got {step}")
    ns = list(range(n_min, n_max + 1, step))
    return sorted(iter_sweep(em, ns, alpha, jobs), key=lambda r: r.n)


def find_max_feasible_n(em: EffectMatrix, n_min: int = 2,
                        n_max: int | None = None) -> int | None:
    """Largest n in [n_min, n_max] solvable in both directions, by bisection.

    Solvability is monotone in n (it reduces to matchability thanks to the
    fallback), so bisection is exact; a linear descent double-checks the
    returned n anyway.
    """
    if n_max is None:
        n_max = min(em.match.matched_treated, em.match.matched_control)
    if n_min > n_max:
        raise ValueError(f"invalid search range [{n_min}, {n_max}]")
    n_min = max(n_min, 2)
    if n_min > n_max:
        return None

    cache: dict[int, bool] = {}

    def feasible(n: int) -> bool:
        if n not in cache:
            cache[n] = not isinstance(solve(em, n, "min"), NoPairsPossible) and \
                not isinstance(solve(em, n, "max"), NoPairsPossible)
        return cache[n]

    lo, hi = n_min, n_max
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        if feasible(mid):
            best = mid
            lo = mid + 1
        else:
            hi = mid - 1
    while best is not None and not feasible(best):
        best = best - 1 if best > n_min else None
    return best
