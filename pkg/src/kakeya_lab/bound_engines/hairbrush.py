"""Hairbrush bound: pick a heavily-intersected stem and foliate by planes through it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import EmptyFamily, InvariantViolation, PreconditionFailed
from ..field_geometry import Flat, Line, span_flat
from ..incidence_axioms import (
    IncidenceTable,
    _lift,
    _quotient,
    canonicalize_rows,
    encode_rows,
    wolff_axiom_report,
)
from ..line_families import LineFamily
from ._exact import ceil_div, root_constant
from .cordoba import CordobaCertificate, _resolve_points, best_prefix, cordoba_lower_bound

CASE_CONSTANT = 200
LEAF_CONSTANT = 300


@dataclass
class HairbrushLeaf:
    plane: Flat
    hairs: int  # H(pi)
    below_threshold: int
    cordoba: CordobaCertificate

    def to_dict(self) -> dict:
        return {
            "plane": self.plane.to_dict(),
            "H": self.hairs,
            "linesBelowLeafThreshold": self.below_threshold,
            "cordoba": self.cordoba.to_dict(),
        }


@dataclass
class HairbrushCertificate:
    q: int
    n: int
    family_size: int
    x_size: int
    triple_count: int
    stem: Line
    stem_triple_count: int
    stem_points_in_x: int
    stem_incident_lines: int
    case_taken: str
    case_lhs: int
    case_rhs: int
    leaves: list[HairbrushLeaf]
    union_lower_bound: int
    actual_union: int
    thresholds: dict
    hypotheses_checked: bool
    small_q: bool
    constant: dict
    warnings: list[str] = field(default_factory=list)

    @property
    def per_leaf_counts(self) -> dict[Flat, int]:
        return {leaf.plane: leaf.hairs for leaf in self.leaves}

    def to_dict(self) -> dict:
        return {
            "kind": "hairbrush",
            "familySize": self.family_size,
            "xSize": self.x_size,
            "tripleCount": self.triple_count,
            "stem": self.stem.to_dict(),
            "stemTripleCount": self.stem_triple_count,
            "stemPointsInX": self.stem_points_in_x,
            "stemIncidentLines": self.stem_incident_lines,
            "caseTaken": self.case_taken,
            "caseTest": {"lhs": self.case_lhs, "rhs": self.case_rhs},
            "leaves": [leaf.to_dict() for leaf in self.leaves],
            "unionLowerBound": self.union_lower_bound,
            "actualUnion": self.actual_union,
            "thresholds": self.thresholds,
            "hypothesesChecked": self.hypotheses_checked,
            "smallQ": self.small_q,
            "measuredConstant": self.constant,
            "warnings": self.warnings,
        }


def hairbrush_bound(
    fam: LineFamily,
    X=None,
    line_threshold: int | None = None,
    leaf_threshold: int | None = None,
    check_hypotheses: bool = True,
    table: IncidenceTable | None = None,
) -> HairbrushCertificate:
    """Lower-bound ``|X|`` for a family whose lines each meet X often.

    ``X`` defaults to the union of the family.  Multiplicities are taken with
    respect to the whole family.  With ``check_hypotheses=False`` the 2-flat
    and family-size conditions are assumed (callers that inherit them).
    """
    if len(fam) == 0:
        raise EmptyFamily("hairbrush needs at least one line")
    table = table or IncidenceTable(fam)
    q = fam.q
    L = len(table)
    if line_threshold is None:
        line_threshold = max(1, ceil_div(q, CASE_CONSTANT))
    if leaf_threshold is None:
        leaf_threshold = max(1, ceil_div(q, LEAF_CONSTANT))

    if check_hypotheses:
        if L > 3 * q * q:
            raise PreconditionFailed("|L| <= 3q^2", f"family has {L} > {3 * q * q} lines")
        report = wolff_axiom_report(fam, table)
        if report.max_lines_in_2flat > 2 * q:
            raise PreconditionFailed(
                "at most 2q lines in any 2-flat",
                f"{report.max_lines_in_2flat} lines lie in one 2-flat",
                witness=report.witness_2flat,
            )

    xmask = _resolve_points(table, X)
    if (xmask & ~table.union_mask).any():
        bad = table.decode(int(np.flatnonzero(xmask & ~table.union_mask)[0]))
        raise PreconditionFailed("X inside the union of the family", f"point {bad} is on no line", witness=bad)
    counts = table.counts_in(xmask)
    low = np.flatnonzero(counts < line_threshold)
    if len(low):
        bad = table.lines[int(low[0])]
        raise PreconditionFailed(
            "|l ∩ X| >= line threshold",
            f"line {bad.to_dict()} meets X in {int(counts[low[0]])} < {line_threshold} points",
            witness=bad,
        )

    mu = table.mu.astype(np.int64)
    x_size = int(xmask.sum())
    T = int((mu[xmask] ** 2).sum())
    weights = np.where(xmask, mu, 0)
    t = weights[table.pts].sum(axis=1)
    s = int(np.argmax(t))  # first maximum = canonical tie-break
    if int(t[s]) * L < T:
        raise InvariantViolation("pigeonholed stem below the average triple count")
    stem = table.lines[s]

    stem_mask = np.zeros(table.size, dtype=bool)
    stem_mask[table.pts[s]] = True
    incident = table.counts_in(stem_mask) > 0
    incident[s] = False
    hair_ids = np.flatnonzero(incident)

    v = table.dirs[s]
    piv = int(np.argmax(v != 0))
    leaves: list[HairbrushLeaf] = []
    if len(hair_ids):
        u = canonicalize_rows(_quotient(table.dirs[hair_ids], v, piv, q), q)
        codes = encode_rows(u, q)
        groups: dict[int, list[int]] = {}
        rep: dict[int, np.ndarray] = {}
        for k, (j, c) in enumerate(zip(hair_ids.tolist(), codes.tolist())):
            groups.setdefault(c, []).append(j)
            rep.setdefault(c, u[k])
        leaf_x = xmask & ~stem_mask
        for c, members in groups.items():
            plane = span_flat(stem.anchor, [stem.direction, _lift(rep[c], piv)], q)
            sets = [frozenset(int(p) for p in table.pts[j][leaf_x[table.pts[j]]]) for j in members]
            order = sorted(range(len(members)), key=lambda i: (-len(sets[i]), members[i]))
            sizes = [len(sets[i]) for i in order]
            N = best_prefix(sizes)
            cert = cordoba_lower_bound([sets[i] for i in order[:N]])
            below = sum(1 for z in sizes if z < leaf_threshold)
            leaves.append(HairbrushLeaf(plane, len(members), below, cert))
        leaves.sort(key=lambda lf: lf.plane)

    if sum(lf.hairs for lf in leaves) != len(hair_ids):
        raise InvariantViolation("hairbrush lines do not partition across leaves")
    stem_in_x = int(counts[s])
    lower = stem_in_x + sum(lf.cordoba.lower_bound for lf in leaves)
    if x_size < lower:
        raise InvariantViolation(f"|X| = {x_size} below certified bound {lower}")
    lhs, rhs = 2 * CASE_CONSTANT**2 * x_size, q * L
    small = fam.modulus.small_q
    warnings = ["small-q regime: q <= 600, per-line thresholds floored at 1"] if small else []
    return HairbrushCertificate(
        q=q,
        n=fam.n,
        family_size=L,
        x_size=x_size,
        triple_count=T,
        stem=stem,
        stem_triple_count=int(t[s]),
        stem_points_in_x=stem_in_x,
        stem_incident_lines=len(hair_ids),
        case_taken="Case1" if lhs >= rhs else "Case2",
        case_lhs=lhs,
        case_rhs=rhs,
        leaves=leaves,
        union_lower_bound=lower,
        actual_union=x_size,
        thresholds={
            "line": line_threshold,
            "leaf": leaf_threshold,
            "caseConstant": CASE_CONSTANT,
            "leafConstant": LEAF_CONSTANT,
        },
        hypotheses_checked=check_hypotheses,
        small_q=small,
        constant=root_constant(x_size, L, q, 2),
        warnings=warnings,
    )
