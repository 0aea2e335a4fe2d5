"""Exact union size compared against |L| q^(1/3), in integers."""

from __future__ import annotations

from dataclasses import dataclass

from ..incidence_axioms import IncidenceTable
from ..line_families import LineFamily
from ._exact import root_constant


@dataclass
class TheoremRatio:
    q: int
    n: int
    family_size: int
    union: int
    union_cubed: int
    comparison: int  # |L|^3 q
    constant: dict
    directions_distinct: bool

    @property
    def c(self) -> float:
        return self.constant["c"]

    def holds_with(self, num: int, den: int) -> bool:
        """Exact test of |⋃l|^3 >= (num/den)^3 |L|^3 q."""
        return den**3 * self.union_cubed >= num**3 * self.comparison

    def to_dict(self) -> dict:
        return {
            "kind": "theorem-ratio",
            "familySize": self.family_size,
            "union": self.union,
            "unionCubed": self.union_cubed,
            "comparison": self.comparison,
            "ratio": self.constant["c"],
            "cLower": self.constant["cLower"],
            "directionsDistinct": self.directions_distinct,
        }


def theorem_ratio(fam: LineFamily, table: IncidenceTable | None = None) -> TheoremRatio:
    table = table or IncidenceTable(fam)
    u = int(table.union_mask.sum())
    L, q = len(fam), fam.q
    dirs = {line.direction for line in fam}
    return TheoremRatio(q, fam.n, L, u, u**3, L**3 * q, root_constant(u, L, q, 3), len(dirs) == L)
