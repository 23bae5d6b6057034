"""Greedy schemes over the sorted effect list.

Both extremal directions of the robust Z test reduce to four sign
regimes. The two that admit a quadratic level bound are solved greedily
on the ascending effect list:

* minimization, case 2 (level <= 0, effect sum <= 0): repeatedly take
  the most negative remaining entry; infeasible as soon as the smallest
  remaining effect is positive.
* minimization, case 1 (level >= 0, effect sum >= 0): build couples.
  Each round picks an anchor (the most negative entry if its magnitude
  is covered by the most positive one, otherwise the most positive) and
  the partner that makes the couple sum smallest while keeping it
  nonnegative; odd n finishes with the single smallest entry that keeps
  the running sum nonnegative.

The maximization cases are the exact mirror image: negate every effect,
solve the mirrored minimization case, negate the resulting level. Every
selection removes all entries sharing the chosen row or column, so the
output is always a valid one-to-one assignment.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from .matching import EffectMatrix
from .statistic import (
    Assignment,
    DegenerateStatisticError,
    PairStats,
    gamma_roots,
    stats_from_values,
)


@dataclass(frozen=True)
class SortedEffectList:
    """Eligible pair effects in ascending value order, ties by (i, j)."""

    values: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    n_treated: int
    n_control: int

    def __len__(self) -> int:
        return len(self.values)

    @property
    def entries(self) -> list[tuple[float, int, int]]:
        return [
            (float(v), int(i), int(j))
            for v, i, j in zip(self.values, self.rows, self.cols)
        ]


@dataclass(frozen=True)
class Infeasible:
    reason: str


@dataclass(frozen=True)
class GreedySolution:
    assignment: Assignment
    stats: PairStats
    gamma: float
    case: str


def build_sorted_list(em: EffectMatrix) -> SortedEffectList:
    """Ascending stable sort of all eligible effects (zeros included)."""
    nnz = em.nnz
    values = np.empty(nnz, dtype=np.float64)
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    for k, ((i, j), v) in enumerate(em.effect.items()):
        rows[k] = i
        cols[k] = j
        values[k] = v
    order = np.lexsort((cols, rows, values))
    return SortedEffectList(
        values=values[order],
        rows=rows[order],
        cols=cols[order],
        n_treated=em.n_treated,
        n_control=em.n_control,
    )


class _ListState:
    """Doubly linked view of the sorted list with lazy conflict removal.

    Entries whose row or column is already used are unlinked the first
    time a walk touches them, so repeated scans stay near-linear overall.
    """

    __slots__ = ("values", "rows", "cols", "m", "nxt", "prv", "removed",
                 "row_used", "col_used")

    def __init__(self, ylist: SortedEffectList):
        self.values = ylist.values.tolist()
        self.rows = ylist.rows.tolist()
        self.cols = ylist.cols.tolist()
        m = len(self.values)
        self.m = m
        self.nxt = list(range(1, m + 1))
        self.prv = list(range(-1, m - 1))
        self.removed = bytearray(m)
        self.row_used = bytearray(ylist.n_treated)
        self.col_used = bytearray(ylist.n_control)

    def unlink(self, k: int) -> None:
        if self.removed[k]:
            return
        self.removed[k] = 1
        p, nx = self.prv[k], self.nxt[k]
        if p >= 0:
            self.nxt[p] = nx
        if nx < self.m:
            self.prv[nx] = p

    def assign(self, k: int) -> None:
        self.row_used[self.rows[k]] = 1
        self.col_used[self.cols[k]] = 1
        self.unlink(k)

    def forward(self, k: int):
        """Smallest assignable index >= k in sort order, else None."""
        m = self.m
        trail = []
        while 0 <= k < m:
            if self.removed[k]:
                trail.append(k)
                k = self.nxt[k]
                continue
            if self.row_used[self.rows[k]] or self.col_used[self.cols[k]]:
                self.unlink(k)
                trail.append(k)
                k = self.nxt[k]
                continue
            break
        target = k if 0 <= k < m else m
        for t in trail:
            self.nxt[t] = target
        return k if 0 <= k < m else None

    def backward(self, k: int):
        """Largest assignable index <= k in sort order, else None."""
        trail = []
        while k >= 0:
            if self.removed[k]:
                trail.append(k)
                k = self.prv[k]
                continue
            if self.row_used[self.rows[k]] or self.col_used[self.cols[k]]:
                self.unlink(k)
                trail.append(k)
                k = self.prv[k]
                continue
            break
        target = k if k >= 0 else -1
        for t in trail:
            self.prv[t] = target
        return k if k >= 0 else None


def _partner(state: _ListState, threshold: float, anchor: int | None):
    """Smallest assignable entry with value >= threshold, disjoint from anchor."""
    k = state.forward(bisect_left(state.values, threshold))
    if anchor is None:
        return k
    a_row, a_col = state.rows[anchor], state.cols[anchor]
    while k is not None:
        if k != anchor and state.rows[k] != a_row and state.cols[k] != a_col:
            return k
        k = state.forward(state.nxt[k])
    return None


def _first_candidate(state: _ListState, barred: set):
    k = state.forward(0)
    while k is not None and k in barred:
        k = state.forward(state.nxt[k])
    return k


def _last_candidate(state: _ListState, barred: set):
    k = state.backward(state.m - 1)
    while k is not None and k in barred:
        k = state.backward(state.prv[k])
    return k


def _solution_from(state: _ListState, chosen: list[int], case: str) -> GreedySolution:
    pairs = sorted((state.rows[k], state.cols[k]) for k in chosen)
    index = {(state.rows[k], state.cols[k]): k for k in chosen}
    stats = stats_from_values(state.values[index[p]] for p in pairs)
    try:
        g_min, g_max = gamma_roots(stats.S, stats.Q, stats.n)
        gamma = g_max if case.endswith("case1") else g_min
    except DegenerateStatisticError:
        if stats.S > 0.0:
            gamma = math.inf
        elif stats.S < 0.0:
            gamma = -math.inf
        else:
            gamma = 0.0
    return GreedySolution(
        assignment=Assignment(pairs=frozenset(pairs)),
        stats=stats,
        gamma=gamma + 0.0,
        case=case,
    )


def _min_case2(state: _ListState, n: int):
    chosen = []
    for _ in range(n):
        k = state.forward(0)
        if k is None:
            return Infeasible("eligible pairs exhausted before n assignments")
        if state.values[k] > 0.0:
            return Infeasible("smallest remaining effect is positive")
        state.assign(k)
        chosen.append(k)
    if math.fsum(state.values[k] for k in chosen) > 0.0:
        return Infeasible("selected effect sum is positive")
    return _solution_from(state, chosen, "min_case2")


def _min_case1(state: _ListState, n: int):
    chosen = []
    running = 0.0
    rounds = (n + 1) // 2
    for r in range(rounds):
        if n % 2 == 1 and r == rounds - 1:
            # final odd entry: smallest one keeping the total nonnegative.
            # couples are nonnegative by exact float comparison, but the
            # running sum carries rounding, so acceptance re-checks the
            # exactly-rounded total the final statistics will report
            base = [state.values[c] for c in chosen]
            k = state.forward(bisect_left(state.values, -running))
            while k is not None and math.fsum(base + [state.values[k]]) < 0.0:
                k = state.forward(state.nxt[k])
            if k is None:
                return Infeasible("no remaining effect keeps the sum nonnegative")
            state.assign(k)
            chosen.append(k)
            running += state.values[k]
            continue
        top = state.backward(state.m - 1)
        if top is None:
            return Infeasible("eligible pairs exhausted before n assignments")
        if state.values[top] < 0.0:
            return Infeasible("largest remaining effect is negative")
        barred: set = set()
        while True:
            low = _first_candidate(state, barred)
            if low is None:
                return Infeasible("no anchor admits a nonnegative couple")
            high = _last_candidate(state, barred)
            anchor = low if abs(state.values[low]) <= state.values[high] else high
            q = _partner(state, -state.values[anchor], anchor=anchor)
            if q is None:
                barred.add(anchor)
                continue
            state.assign(anchor)
            state.assign(q)
            chosen.extend((anchor, q))
            running += state.values[anchor] + state.values[q]
            break
    return _solution_from(state, chosen, "min_case1")


def greedy_min(ylist: SortedEffectList, n: int, case: str):
    """Minimization greedy for one sign regime; GreedySolution or Infeasible."""
    if n < 2:
        raise ValueError(f"greedy solver needs n >= 2, got n={n}")
    if case not in ("case1", "case2"):
        raise ValueError(f"unknown minimization case {case!r}")
    state = _ListState(ylist)
    if case == "case2":
        return _min_case2(state, n)
    return _min_case1(state, n)


def _reflected(ylist: SortedEffectList) -> SortedEffectList:
    neg = -ylist.values
    order = np.lexsort((ylist.cols, ylist.rows, neg))
    return SortedEffectList(
        values=neg[order],
        rows=ylist.rows[order],
        cols=ylist.cols[order],
        n_treated=ylist.n_treated,
        n_control=ylist.n_control,
    )


_MIRROR = {"case1": "case2", "case2": "case1"}


def greedy_max(ylist: SortedEffectList, n: int, case: str):
    """Maximization greedy by reflection of the mirrored minimization case."""
    if n < 2:
        raise ValueError(f"greedy solver needs n >= 2, got n={n}")
    if case not in ("case1", "case2"):
        raise ValueError(f"unknown maximization case {case!r}")
    mirrored = greedy_min(_reflected(ylist), n, _MIRROR[case])
    if isinstance(mirrored, Infeasible):
        return mirrored
    stats = mirrored.stats
    original = PairStats(
        S=-stats.S + 0.0,
        Q=stats.Q,
        n=stats.n,
        sigma_hat=stats.sigma_hat,
        degenerate=stats.degenerate,
    )
    return GreedySolution(
        assignment=mirrored.assignment,
        stats=original,
        gamma=-mirrored.gamma + 0.0,
        case=f"max_{case}",
    )
