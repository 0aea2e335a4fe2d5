"""Union lower bounds for set systems with pairwise intersections of size <= 1."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Collection, Sequence

import numpy as np

from ..errors import InvariantViolation, PreconditionFailed
from ..field_geometry import Line
from ..incidence_axioms import IncidenceTable
from ..line_families import LineFamily, PointSet
from ._exact import ceil_div, frac


@dataclass
class CordobaCertificate:
    n_sets: int
    set_sizes: list[int]
    sum_sizes: int
    lower_bound: int
    actual_union: int
    c_constant: int = 1
    consequence_bound: Fraction | None = None
    # filled in when built from a line family
    family_size: int | None = None
    x_size: int | None = None
    threshold: int | None = None
    selected: list[Line] | None = None
    selected_union: int | None = None
    small_q: bool | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {
            "kind": "cordoba",
            "N": self.n_sets,
            "setSizes": self.set_sizes,
            "sumSizes": self.sum_sizes,
            "lowerBound": self.lower_bound,
            "actualUnion": self.actual_union,
            "C": self.c_constant,
            "consequenceBound": None if self.consequence_bound is None else frac(self.consequence_bound),
        }
        if self.family_size is not None:
            d.update(
                familySize=self.family_size,
                xSize=self.x_size,
                threshold=self.threshold,
                selectedLines=[l.to_dict() for l in self.selected],
                selectedUnion=self.selected_union,
                impliedXLowerBound=self.lower_bound,
                smallQ=self.small_q,
                warnings=self.warnings,
            )
        return d


def cordoba_lower_bound(sets: Sequence[Collection], c: int = 1) -> CordobaCertificate:
    """|A_1 ∪ ... ∪ A_N| >= Σ|A_i| - N(N-1)/2, checked against the exact union.

    When ``min |A_i| >= c * N`` the certificate also carries the weaker
    proportional form ``(1 - 1/(2c)) Σ|A_i|``.
    """
    if c < 1:
        raise ValueError("C must be >= 1")
    sets = [frozenset(s) for s in sets]
    for i, j in combinations(range(len(sets)), 2):
        if len(sets[i] & sets[j]) > 1:
            raise PreconditionFailed(
                "|A_i ∩ A_j| <= 1",
                f"sets {i} and {j} share {len(sets[i] & sets[j])} elements",
                witness=(i, j),
            )
    n = len(sets)
    sizes = [len(s) for s in sets]
    total = sum(sizes)
    lower = total - n * (n - 1) // 2
    union = len(frozenset().union(*sets)) if sets else 0
    consequence = None
    if n and min(sizes) >= c * n:
        consequence = (1 - Fraction(1, 2 * c)) * total
    if union < lower or (consequence is not None and union < consequence):
        raise InvariantViolation("union below the Córdoba bound")
    return CordobaCertificate(n, sizes, total, lower, union, c, consequence)


def best_prefix(sizes_desc: Sequence[int]) -> int:
    """N maximizing Σ_{i<=N} a_i - N(N-1)/2 over prefixes of a descending list."""
    return sum(1 for i, a in enumerate(sizes_desc) if a > i)


def _resolve_points(table: IncidenceTable, X) -> np.ndarray:
    if X is None:
        return table.union_mask
    if isinstance(X, np.ndarray) and X.dtype == bool:
        return X
    return table.mask(X)


def cordoba_prime(
    fam: LineFamily,
    X: PointSet | Collection | np.ndarray | None = None,
    threshold: int | None = None,
    n_select: int | str | None = None,
    c: int = 1,
    table: IncidenceTable | None = None,
) -> CordobaCertificate:
    """Córdoba bound for at most 2q lines each meeting X in many points.

    ``X`` defaults to the union of the family.  Lines are taken in order of
    decreasing ``|l ∩ X|`` (ties in canonical order); ``n_select`` fixes how
    many: default ``min(|L|, max(1, floor(q/300)))``, or ``"best"`` for the
    prefix length giving the largest bound.
    """
    table = table or IncidenceTable(fam)
    q = fam.q
    if len(fam) > 2 * q:
        raise PreconditionFailed("|L| <= 2q", f"family has {len(fam)} > {2 * q} lines")
    if threshold is None:
        threshold = max(1, ceil_div(q, 300))
    xmask = _resolve_points(table, X)
    counts = table.counts_in(xmask)
    low = np.flatnonzero(counts < threshold)
    if len(low):
        bad = table.lines[int(low[0])]
        raise PreconditionFailed(
            "|l ∩ X| >= threshold",
            f"line {bad.to_dict()} meets X in {int(counts[low[0]])} < {threshold} points",
            witness=bad,
        )
    order = sorted(range(len(table)), key=lambda i: (-int(counts[i]), i))
    if n_select is None:
        n = min(len(fam), max(1, q // 300))
    elif n_select == "best":
        n = best_prefix([int(counts[i]) for i in order])
    else:
        n = int(n_select)
        if not 0 <= n <= len(fam):
            raise ValueError(f"n_select={n} outside [0, {len(fam)}]")
    chosen = order[:n]
    sets = [frozenset(int(p) for p in table.pts[i][xmask[table.pts[i]]]) for i in chosen]
    cert = cordoba_lower_bound(sets, c)
    on_lines = np.zeros(table.size, dtype=bool)
    on_lines[table.pts.ravel()] = True
    cert.selected_union = cert.actual_union
    cert.actual_union = int((on_lines & xmask).sum())
    cert.family_size = len(fam)
    cert.x_size = int(xmask.sum())
    cert.threshold = threshold
    cert.selected = [table.lines[i] for i in chosen]
    cert.small_q = fam.modulus.small_q
    if cert.small_q:
        cert.warnings.append("small-q regime: q <= 600, line threshold floored at 1")
    return cert
