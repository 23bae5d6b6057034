"""Exhaustive ground truth for desk-scale instances.

Enumerates every valid assignment of exactly n eligible, row- and
column-disjoint pairs by backtracking over treated rows in sorted
order, and reports exact extremes of the Z statistic (degenerate
assignments included, with their signed-infinity values).
"""

from __future__ import annotations

from dataclasses import dataclass

from .matching import EffectMatrix
from .statistic import Assignment, stats_from_values, z_statistic

DEFAULT_BUDGET = 10_000_000


class BudgetExceededError(RuntimeError):
    """Enumeration would evaluate more assignments than the budget allows."""


@dataclass(frozen=True)
class OracleResult:
    z_max: float
    z_min: float
    argmax: Assignment
    argmin: Assignment
    enumerated: int
    degenerate_seen: bool


def enumerate_extrema(em: EffectMatrix, n: int,
                      budget: int = DEFAULT_BUDGET) -> OracleResult:
    """Exact max/min Z over all n-pair assignments within the eligibility set."""
    if n < 2:
        raise ValueError(f"oracle needs n >= 2, got n={n}")
    if budget < 1:
        raise ValueError(f"budget must be positive, got {budget}")

    row_options: dict[int, list[int]] = {}
    for i, j in em.match.eligible:
        row_options.setdefault(i, []).append(j)
    rows = sorted(row_options)
    for i in rows:
        row_options[i].sort()

    best = {
        "count": 0,
        "z_max": None,
        "z_min": None,
        "argmax": None,
        "argmin": None,
        "degenerate": False,
    }
    used_cols: set[int] = set()
    picked: list[tuple[int, int]] = []

    def evaluate() -> None:
        best["count"] += 1
        if best["count"] > budget:
            raise BudgetExceededError(
                f"enumeration exceeded the budget of {budget} assignments"
            )
        pairs = sorted(picked)
        stats = stats_from_values(em.effect[p] for p in pairs)
        z = z_statistic(stats)
        if stats.degenerate:
            best["degenerate"] = True
        if best["z_max"] is None or z > best["z_max"]:
            best["z_max"] = z
            best["argmax"] = frozenset(pairs)
        if best["z_min"] is None or z < best["z_min"]:
            best["z_min"] = z
            best["argmin"] = frozenset(pairs)

    def backtrack(idx: int, needed: int) -> None:
        if needed == 0:
            evaluate()
            return
        if len(rows) - idx < needed:
            return
        i = rows[idx]
        for j in row_options[i]:
            if j in used_cols:
                continue
            used_cols.add(j)
            picked.append((i, j))
            backtrack(idx + 1, needed - 1)
            picked.pop()
            used_cols.remove(j)
        # the row may also be skipped entirely
        backtrack(idx + 1, needed)

    backtrack(0, n)

    if best["z_max"] is None:
        raise ValueError(f"no assignment of {n} disjoint eligible pairs exists")
    return OracleResult(
        z_max=best["z_max"],
        z_min=best["z_min"],
        argmax=Assignment(pairs=best["argmax"]),
        argmin=Assignment(pairs=best["argmin"]),
        enumerated=best["count"],
        degenerate_seen=best["degenerate"],
    )
