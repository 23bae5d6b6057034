"""Core dataset records shared by ingestion and matching."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping


class DataError(ValueError):
    """Raised when a dataset violates its schema or invariants."""


@dataclass(frozen=True)
class Unit:
    """One sample: covariates, treatment flag, continuous outcome."""

    id: str
    covariates: Mapping[str, float | str]
    treatment: bool
    outcome: float


@dataclass(frozen=True)
class Dataset:
    """Units kept by the treatment rule, plus the count of excluded rows."""

    units: tuple[Unit, ...]
    excluded: int = 0

    def __post_init__(self):
        for u in self.units:
            if not math.isfinite(u.outcome):
                raise DataError(f"unit {u.id!r} has non-finite outcome {u.outcome!r}")
        if not any(u.treatment for u in self.units):
            raise DataError("empty treated group")
        if not any(not u.treatment for u in self.units):
            raise DataError("empty control group")

    def treated_units(self) -> list[Unit]:
        return [u for u in self.units if u.treatment]

    def control_units(self) -> list[Unit]:
        return [u for u in self.units if not u.treatment]

    @property
    def n_treated(self) -> int:
        return sum(1 for u in self.units if u.treatment)

    @property
    def n_control(self) -> int:
        return len(self.units) - self.n_treated
