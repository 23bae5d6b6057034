"""Good-match eligibility and treatment-effect matrices.

A matched-pair study starts from a bipartite eligibility structure over
(treated, control) units: pair (i, j) is eligible when every covariate
rule holds. Eligibility is kept sparse (a set of index pairs) and the
per-pair treatment effects ``y_t[i] - y_c[j]`` are keyed by that same
set, so a zero-valued effect stays distinguishable from "not a match".
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .data_types import Dataset


class MatchingError(ValueError):
    """Raised when covariate rules cannot be applied to the data."""


_NUMERIC = (int, float)


@dataclass(frozen=True)
class CovariateRule:
    """One eligibility criterion on a single covariate column.

    ``exact`` requires equal values (numeric or categorical);
    ``caliper`` requires ``|x_i - x_j| <= tolerance`` on numeric values.
    The caliper bound is inclusive.
    """

    column: str
    kind: str  # "exact" or "caliper"
    tolerance: float | None = None

    def __post_init__(self):
        if self.kind not in ("exact", "caliper"):
            raise MatchingError(f"unknown rule kind {self.kind!r} for column {self.column!r}")
        if self.kind == "caliper":
            if self.tolerance is None or not isinstance(self.tolerance, _NUMERIC):
                raise MatchingError(f"caliper rule for {self.column!r} needs a numeric tolerance")
            if self.tolerance < 0:
                raise MatchingError(f"caliper tolerance for {self.column!r} must be >= 0")
        elif self.tolerance is not None:
            raise MatchingError(f"exact rule for {self.column!r} does not take a tolerance")


@dataclass(frozen=True)
class MatchMatrix:
    """Sparse bipartite eligibility over treated rows x control columns."""

    treated_ids: tuple[str, ...]
    control_ids: tuple[str, ...]
    eligible: frozenset[tuple[int, int]]

    def __post_init__(self):
        nt, nc = len(self.treated_ids), len(self.control_ids)
        for i, j in self.eligible:
            if not (0 <= i < nt and 0 <= j < nc):
                raise MatchingError(f"eligible pair ({i}, {j}) out of range {nt}x{nc}")

    @property
    def nnz(self) -> int:
        return len(self.eligible)

    @property
    def n_treated(self) -> int:
        return len(self.treated_ids)

    @property
    def n_control(self) -> int:
        return len(self.control_ids)

    @property
    def matched_treated(self) -> int:
        """Number of distinct treated rows with at least one eligible pair."""
        return len({i for i, _ in self.eligible})

    @property
    def matched_control(self) -> int:
        """Number of distinct control columns with at least one eligible pair."""
        return len({j for _, j in self.eligible})

    def pairs_sorted(self) -> list[tuple[int, int]]:
        return sorted(self.eligible)


@dataclass(frozen=True)
class EffectMatrix:
    """Treatment effects keyed by the eligible pairs of a MatchMatrix."""

    match: MatchMatrix
    effect: Mapping[tuple[int, int], float]

    def __post_init__(self):
        if set(self.effect.keys()) != self.match.eligible:
            raise MatchingError("effect map domain must equal the eligible set exactly")

    @property
    def nnz(self) -> int:
        return self.match.nnz

    @property
    def n_treated(self) -> int:
        return self.match.n_treated

    @property
    def n_control(self) -> int:
        return self.match.n_control

    def items_sorted(self) -> list[tuple[tuple[int, int], float]]:
        return sorted(self.effect.items())

    @classmethod
    def from_effects(cls, effects: Mapping[tuple[int, int], float],
                     n_treated: int | None = None,
                     n_control: int | None = None) -> "EffectMatrix":
        """Build a standalone matrix from an index->effect map (synthetic ids)."""
        if effects:
            max_i = max(i for i, _ in effects)
            max_j = max(j for _, j in effects)
        else:
            max_i = max_j = -1
        nt = n_treated if n_treated is not None else max_i + 1
        nc = n_control if n_control is not None else max_j + 1
        mm = MatchMatrix(
            treated_ids=tuple(f"t{i}" for i in range(nt)),
            control_ids=tuple(f"c{j}" for j in range(nc)),
            eligible=frozenset(effects.keys()),
        )
        return cls(match=mm, effect=dict(effects))


@dataclass(frozen=True)
class Block:
    """One connected component of the eligibility graph."""

    treated: tuple[int, ...]
    control: tuple[int, ...]
    identical_rows: bool


@dataclass(frozen=True)
class BlockPartition:
    blocks: tuple[Block, ...]

    @property
    def identical_rows_all(self) -> bool:
        return all(b.identical_rows for b in self.blocks)

    def __len__(self) -> int:
        return len(self.blocks)


def _value_key(v):
    # numeric values compare as numbers, everything else as exact strings
    if isinstance(v, _NUMERIC):
        return ("n", float(v))
    return ("s", v)


def _check_rule_columns(dataset: Dataset, rules: Iterable[CovariateRule]) -> None:
    for rule in rules:
        for unit in dataset.units:
            if rule.column not in unit.covariates:
                raise MatchingError(f"unit {unit.id!r} has no value for column {rule.column!r}")
            if rule.kind == "caliper" and not isinstance(unit.covariates[rule.column], _NUMERIC):
                raise MatchingError(
                    f"caliper rule on categorical column {rule.column!r} "
                    f"(unit {unit.id!r} has non-numeric value)"
                )


def build_match_matrix(dataset: Dataset, rules: list[CovariateRule]) -> MatchMatrix:
    """Evaluate covariate rules over the treated x control grid.

    Pair (i, j) is eligible iff every rule holds. Exact rules are applied
    first by hashing units into groups, so the pairwise caliper checks run
    only within groups that already agree on all exact columns.
    """
    if not rules:
        raise MatchingError("at least one covariate rule is required")
    _check_rule_columns(dataset, rules)

    treated = dataset.treated_units()
    control = dataset.control_units()
    exact_cols = [r.column for r in rules if r.kind == "exact"]
    calipers = [(r.column, float(r.tolerance)) for r in rules if r.kind == "caliper"]

    def exact_key(unit):
        return tuple(_value_key(unit.covariates[c]) for c in exact_cols)

    groups_t: dict[tuple, list[int]] = {}
    for i, u in enumerate(treated):
        groups_t.setdefault(exact_key(u), []).append(i)
    groups_c: dict[tuple, list[int]] = {}
    for j, u in enumerate(control):
        groups_c.setdefault(exact_key(u), []).append(j)

    eligible = set()
    for key, t_idx in groups_t.items():
        c_idx = groups_c.get(key)
        if not c_idx:
            continue
        for i in t_idx:
            t_cov = treated[i].covariates
            for j in c_idx:
                c_cov = control[j].covariates
                ok = True
                for col, tol in calipers:
                    if abs(t_cov[col] - c_cov[col]) > tol:
                        ok = False
                        break
                if ok:
                    eligible.add((i, j))

    return MatchMatrix(
        treated_ids=tuple(u.id for u in treated),
        control_ids=tuple(u.id for u in control),
        eligible=frozenset(eligible),
    )


def build_effect_matrix(match: MatchMatrix, dataset: Dataset) -> EffectMatrix:
    """Attach the effect y_t[i] - y_c[j] to every eligible pair."""
    by_id = {u.id: u for u in dataset.units}
    try:
        t_out = [by_id[tid].outcome for tid in match.treated_ids]
        c_out = [by_id[cid].outcome for cid in match.control_ids]
    except KeyError as exc:
        raise MatchingError(f"match matrix id {exc.args[0]!r} not found in dataset") from exc
    effect = {(i, j): t_out[i] - c_out[j] for i, j in match.eligible}
    return EffectMatrix(match=match, effect=effect)


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def partition_blocks(match: MatchMatrix) -> BlockPartition:
    """Connected components of the eligibility graph.

    Each block carries an ``identical_rows`` flag: true when every treated
    row in the block has the same eligible column set, which is exactly the
    structure that exact matching induces.
    """
    nt = match.n_treated
    uf = _UnionFind(nt + match.n_control)
    row_cols: dict[int, set[int]] = {}
    for i, j in match.eligible:
        uf.union(i, nt + j)
        row_cols.setdefault(i, set()).add(j)

    comp_t: dict[int, list[int]] = {}
    comp_c: dict[int, list[int]] = {}
    for i in row_cols:
        comp_t.setdefault(uf.find(i), []).append(i)
    for j in {j for _, j in match.eligible}:
        comp_c.setdefault(uf.find(nt + j), []).append(j)

    blocks = []
    for root in sorted(comp_t, key=lambda r: min(comp_t[r])):
        t_idx = tuple(sorted(comp_t[root]))
        c_idx = tuple(sorted(comp_c.get(root, [])))
        col_sets = {frozenset(row_cols[i]) for i in t_idx}
        blocks.append(Block(treated=t_idx, control=c_idx, identical_rows=len(col_sets) == 1))
    return BlockPartition(blocks=tuple(blocks))


def write_coordinate_list(em: EffectMatrix, path) -> None:
    """Dump the eligibility structure as ``i,j,effect`` lines sorted by (i, j)."""
    with open(path, "w", encoding="utf-8") as fh:
        for (i, j), v in em.items_sorted():
            fh.write(f"{i},{j},{v!r}\n")
