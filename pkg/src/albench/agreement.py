"""Inter-rater reliability: pairwise assignment designs and Krippendorff's alpha.

Alpha uses the coincidence-matrix formulation with the nominal difference
function, which handles missing ratings natively; that matters because a
pairwise design over n raters leaves most (unit, rater) cells empty.
"""

from __future__ import annotations

import csv
import itertools
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence


class AgreementError(ValueError):
    """Raised when a computation has no pairable data to work with."""


@dataclass
class RatingMatrix:
    """Partial (unit, rater) -> label map; missing entries are simply absent."""

    values: dict[tuple[object, str], str] = field(default_factory=dict)

    @property
    def units(self) -> list:
        return sorted({unit for unit, _ in self.values}, key=repr)

    @property
    def raters(self) -> list[str]:
        return sorted({rater for _, rater in self.values})

    def add(self, unit, rater: str, label: str) -> None:
        self.values[(unit, rater)] = str(label)

    def ratings_by_unit(self) -> dict[object, list[str]]:
        grouped: dict[object, list[str]] = {}
        for (unit, rater), label in sorted(self.values.items(), key=lambda kv: repr(kv[0])):
            grouped.setdefault(unit, []).append(label)
        return grouped

    def pairable_units(self) -> dict[object, list[str]]:
        return {u: r for u, r in self.ratings_by_unit().items() if len(r) >= 2}

    @classmethod
    def from_rows(cls, rows: Iterable[tuple[object, str, str]]) -> "RatingMatrix":
        matrix = cls()
        for unit, rater, label in rows:
            matrix.add(unit, rater, label)
        return matrix

    @classmethod
    def from_csv(cls, path: str | Path) -> "RatingMatrix":
        """Read the ``unit_id,rater_id,label`` interchange format."""
        matrix = cls()
        with open(path, "r", encoding="utf-8", newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise AgreementError(f"{path}: empty ratings file")
            if [h.strip().lower() for h in header] != ["unit_id", "rater_id", "label"]:
                raise AgreementError(f"{path}: expected header unit_id,rater_id,label")
            for row in reader:
                if not row:
                    continue
                unit, rater, label = row[0], row[1], row[2]
                matrix.add(unit, rater, label)
        return matrix


@dataclass(frozen=True)
class AgreementReport:
    alpha: float | None  # None iff alpha_undefined
    alpha_undefined: bool
    percent_agreement: float
    pairable_units: int
    total_units: int
    label_marginals: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "alpha_display": None if self.alpha is None else round(self.alpha, 3),
            "alpha_undefined": self.alpha_undefined,
            "percent_agreement": self.percent_agreement,
            "pairable_units": self.pairable_units,
            "total_units": self.total_units,
            "label_marginals": dict(self.label_marginals),
        }


def pairwise_design(raters: Sequence[str], units_per_pair: int = 1) -> list[tuple[int, str, str]]:
    """Assign C(n,2) * units_per_pair units, two raters each, every pair equally often.

    Twelve raters and one unit per pair yields 66 units with 11 per rater.
    """
    if len(raters) < 2:
        raise AgreementError(f"pairwise design needs at least 2 raters, got {len(raters)}")
    if len(set(raters)) != len(raters):
        raise AgreementError("rater ids must be distinct")
    if units_per_pair < 1:
        raise AgreementError("units_per_pair must be >= 1")
    assignment = []
    unit_index = 0
    for _ in range(units_per_pair):
        for a, b in itertools.combinations(raters, 2):
            assignment.append((unit_index, a, b))
            unit_index += 1
    return assignment


def _coincidences(pairable: dict[object, list[str]]) -> Counter:
    o: Counter = Counter()
    for ratings in pairable.values():
        m = len(ratings)
        weight = 1.0 / (m - 1)
        for i, c in enumerate(ratings):
            for j, k in enumerate(ratings):
                if i != j:
                    o[(c, k)] += weight
    return o


def percent_agreement(matrix: RatingMatrix) -> float:
    """Fraction of pairable units whose ratings are unanimous."""
    pairable = matrix.pairable_units()
    if not pairable:
        raise AgreementError("no units with two or more ratings")
    unanimous = sum(1 for ratings in pairable.values() if len(set(ratings)) == 1)
    return unanimous / len(pairable)


def krippendorff_alpha(matrix: RatingMatrix) -> AgreementReport:
    """Nominal-data alpha from the coincidence matrix.

    Each pairable unit with m ratings contributes 1/(m-1) per ordered
    rating pair; alpha = 1 - D_o/D_e with D_o the observed and D_e the
    expected disagreement. D_e = 0 (a single label overall) leaves alpha
    undefined rather than pretending perfect or zero agreement.
    """
    ratings_by_unit = matrix.ratings_by_unit()
    pairable = {u: r for u, r in ratings_by_unit.items() if len(r) >= 2}
    if not pairable:
        raise AgreementError("no units with two or more ratings")

    o = _coincidences(pairable)
    n = sum(o.values())
    marginals: dict[str, float] = {}
    for (c, _k), value in o.items():
        marginals[c] = marginals.get(c, 0.0) + value

    observed = sum(value for (c, k), value in o.items() if c != k) / n
    expected = sum(
        marginals[c] * marginals[k]
        for c in marginals
        for k in marginals
        if c != k
    ) / (n * (n - 1))

    if expected == 0.0:
        alpha = None
        undefined = True
    else:
        alpha = 1.0 - observed / expected
        undefined = False

    return AgreementReport(
        alpha=alpha,
        alpha_undefined=undefined,
        percent_agreement=percent_agreement(matrix),
        pairable_units=len(pairable),
        total_units=len(ratings_by_unit),
        label_marginals=marginals,
    )
