"""Incidence statistics and the hypothesis checkers.

Bulk work runs on :class:`IncidenceTable`, a numpy view of a family in which
every point of F_q^n is encoded by its base-q index (numeric order of the
index is lexicographic order of the point).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import InvariantViolation
from .field_geometry import (
    Flat,
    Line,
    Point,
    _make_flat,
    enumerate_directions,
    flats_containing,
    flats_through_line,
    point_from_index,
    point_index,
    rref,
    span_flat,
)
from .line_families import LineFamily, PointSet


class IncidenceTable:
    """Point-line incidences of a family as integer arrays.

    ``pts[i, lam]`` is the index of ``anchor_i + lam * direction_i``.
    """

    def __init__(self, fam: LineFamily, line_ids: np.ndarray | None = None):
        self.family = fam
        self.q, self.n = fam.q, fam.n
        self.size = self.q**self.n
        all_lines = fam.lines
        if line_ids is None:
            line_ids = np.arange(len(all_lines))
        self.line_ids = np.asarray(line_ids, dtype=np.int64)
        self.lines: list[Line] = [all_lines[i] for i in self.line_ids]
        q, n = self.q, self.n
        self.weights = q ** np.arange(n - 1, -1, -1, dtype=np.int64)
        self.dirs = np.array([l.direction for l in self.lines], dtype=np.int64).reshape(-1, n)
        self.anchors = np.array([l.anchor for l in self.lines], dtype=np.int64).reshape(-1, n)
        lam = np.arange(q, dtype=np.int64)
        coords = (self.anchors[:, None, :] + lam[None, :, None] * self.dirs[:, None, :]) % q
        self.pts = coords @ self.weights
        self.mu = np.bincount(self.pts.ravel(), minlength=self.size)

    def __len__(self) -> int:
        return len(self.lines)

    def restrict(self, local_ids: Iterable[int]) -> IncidenceTable:
        """Table of the sub-family given by positions in this table."""
        local = np.asarray(list(local_ids) if not isinstance(local_ids, np.ndarray) else local_ids, dtype=np.int64)
        return IncidenceTable(self.family, self.line_ids[local])

    def decode(self, idx: int) -> Point:
        return point_from_index(int(idx), self.q, self.n)

    def encode(self, p) -> int:
        return point_index(p, self.q)

    def mask(self, points: Iterable) -> np.ndarray:
        """Boolean indicator array over F_q^n for a collection of points or indices."""
        m = np.zeros(self.size, dtype=bool)
        idx = [p if isinstance(p, (int, np.integer)) else self.encode(p) for p in points]
        if idx:
            m[np.asarray(idx, dtype=np.int64)] = True
        return m

    @cached_property
    def union_mask(self) -> np.ndarray:
        return self.mu > 0

    @cached_property
    def _csr(self):
        flat = self.pts.ravel()
        order = np.argsort(flat, kind="stable")
        starts = np.zeros(self.size + 1, dtype=np.int64)
        np.cumsum(self.mu, out=starts[1:])
        return order // self.q, starts

    def lines_through(self, idx: int) -> np.ndarray:
        """Positions (ascending, i.e. canonical order) of the lines through a point."""
        ids, starts = self._csr
        return ids[starts[idx] : starts[idx + 1]]

    def counts_in(self, mask: np.ndarray) -> np.ndarray:
        """``|l ∩ S|`` for every line, with S given as a boolean mask."""
        return mask[self.pts].sum(axis=1)


# ---------------------------------------------------------------------------
# vectorized projective helpers


def _inverse_table(q: int) -> np.ndarray:
    inv = np.zeros(q, dtype=np.int64)
    inv[1:] = [pow(a, -1, q) for a in range(1, q)]
    return inv


def canonicalize_rows(rows: np.ndarray, q: int) -> np.ndarray:
    """Scale each nonzero row so its first nonzero entry is 1 (zero rows stay zero)."""
    rows = np.asarray(rows, dtype=np.int64) % q
    if rows.size == 0:
        return rows
    nz = rows != 0
    first = np.argmax(nz, axis=1)
    lead = rows[np.arange(len(rows)), first]
    return rows * _inverse_table(q)[lead][:, None] % q


def encode_rows(rows: np.ndarray, q: int) -> np.ndarray:
    d = rows.shape[1]
    return rows @ (q ** np.arange(d - 1, -1, -1, dtype=np.int64))


def _quotient(vectors: np.ndarray, v: np.ndarray, pivot: int, q: int) -> np.ndarray:
    """Image of vectors in F_q^n / <v>, in the coordinates other than ``pivot``."""
    red = (vectors - vectors[:, pivot : pivot + 1] * v[None, :]) % q
    return np.delete(red, pivot, axis=1)


def _lift(u: Iterable[int], pivot: int) -> tuple[int, ...]:
    u = [int(x) for x in u]
    return tuple(u[:pivot] + [0] + u[pivot:])


def _minors_vanish(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Row-wise test that the pair (a_k, b_k) has rank <= 1."""
    ok = np.ones(len(a), dtype=bool)
    d = a.shape[1]
    for i in range(d):
        for j in range(i + 1, d):
            ok &= (a[:, i] * b[:, j] - a[:, j] * b[:, i]) % q == 0
    return ok


# ---------------------------------------------------------------------------
# multiplicity and triples


def multiplicity(fam: LineFamily, table: IncidenceTable | None = None) -> dict[Point, int]:
    """μ(p) for every point of the union."""
    table = table or IncidenceTable(fam)
    idx = np.flatnonzero(table.mu)
    return {table.decode(i): int(table.mu[i]) for i in idx}


def triple_count(fam: LineFamily, points: PointSet | Iterable, table: IncidenceTable | None = None) -> int:
    """Σ_{p ∈ X} μ(p)^2, i.e. the number of (l, l', p) with p on both lines."""
    table = table or IncidenceTable(fam)
    m = table.mask(points)
    mu = table.mu.astype(object) if table.mu.max(initial=0) > 3_000_000 else table.mu
    return int((mu[m] ** 2).sum())


# ---------------------------------------------------------------------------
# Wolff-type counts


@dataclass
class AxiomReport:
    q: int
    n: int
    family_size: int
    max_lines_in_2flat: int
    witness_2flat: Flat
    max_lines_in_3flat: int | None
    witness_3flat: Flat | None
    directions_distinct: bool
    max_lines_per_direction: int

    @property
    def bounds(self) -> dict[str, int]:
        q = self.q
        return {"twoFlat": 2 * q, "threeFlat": 3 * q * q, "familySize": 4 * q**3}

    @property
    def passes(self) -> dict[str, bool]:
        b = self.bounds
        three = self.max_lines_in_3flat
        return {
            "twoFlat": self.max_lines_in_2flat <= b["twoFlat"],
            "threeFlat": three is None or three <= b["threeFlat"],
            "familySize": self.family_size <= b["familySize"],
        }

    @property
    def ok(self) -> bool:
        return all(self.passes.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.passes.items() if not v]

    def to_dict(self) -> dict:
        return {
            "kind": "axiom-report",
            "q": self.q,
            "n": self.n,
            "familySize": self.family_size,
            "maxLinesInSome2Flat": {"count": self.max_lines_in_2flat, "witness": self.witness_2flat.to_dict()},
            "maxLinesInSome3Flat": {
                "count": self.max_lines_in_3flat,
                "witness": None if self.witness_3flat is None else self.witness_3flat.to_dict(),
            },
            "directionsDistinct": self.directions_distinct,
            "maxLinesPerDirection": self.max_lines_per_direction,
            "bounds": self.bounds,
            "passes": self.passes,
            "ok": self.ok,
        }


def _projective_normals(q: int) -> np.ndarray:
    return np.array(list(enumerate_directions(q, 3)), dtype=np.int64)


def _null_pair(normal: np.ndarray, q: int) -> list[tuple[int, ...]]:
    """Basis of {u in F_q^3 : normal . u = 0}."""
    red, piv = rref([tuple(int(x) for x in normal)], q, 3)
    (row,), (p,) = red, piv
    out = []
    for f in range(3):
        if f == p:
            continue
        w = [0, 0, 0]
        w[f] = 1
        w[p] = -row[f] % q
        out.append(tuple(w))
    return out


def wolff_axiom_report(fam: LineFamily, table: IncidenceTable | None = None) -> AxiomReport:
    """Exact maximum number of family lines in a common 2-flat and 3-flat.

    For each line l the flats through l correspond to subspaces of the
    quotient F_q^n / <dir l>.  Another line projects to a point (parallel),
    to a line through the origin (meets l), or to a line missing the origin
    (skew).  Counting projections per subspace gives, for every flat through
    l, the number of family lines it contains; maximizing over l is exhaustive.
    """
    table = table or IncidenceTable(fam)
    q, n = table.q, table.n
    L = len(table)
    V, A = table.dirs, table.anchors
    normals = _projective_normals(q) if n == 4 else None
    normal_lookup = None
    if normals is not None:
        normal_lookup = np.full(q**3, -1, dtype=np.int64)
        normal_lookup[encode_rows(normals, q)] = np.arange(len(normals))

    best2, cand2 = 1, []
    best3, cand3 = (1 if n >= 3 else None), []
    for i in range(L):
        v, a = V[i], A[i]
        piv = int(np.argmax(v != 0))
        others = np.delete(np.arange(L), i)
        if len(others) == 0:
            break
        pd = _quotient((A[others] - a) % q, v, piv, q)
        pv = _quotient(V[others], v, piv, q)
        parallel = ~pv.any(axis=1)
        meet = ~parallel & _minors_vanish(pv, pd, q)
        coplanar = parallel | meet
        u = np.where(parallel[:, None], pd, pv)[coplanar]
        if n == 2:
            c2 = 1 + len(others)
            codes2 = np.array([], dtype=np.int64)
        elif len(u):
            codes = encode_rows(canonicalize_rows(u, q), q)
            uniq, cnt = np.unique(codes, return_counts=True)
            c2 = 1 + int(cnt.max())
            codes2 = uniq[cnt == cnt.max()]
        else:
            c2, codes2 = 1, np.array([], dtype=np.int64)
        if c2 > best2:
            best2, cand2 = c2, []
        if c2 == best2 and c2 > 1:
            cand2.extend((i, int(c)) for c in codes2)

        if n == 4:
            skew = ~coplanar
            counts = np.zeros(len(normals), dtype=np.int64)
            if skew.any():
                cr = np.cross(pv[skew], pd[skew]) % q
                idx = normal_lookup[encode_rows(canonicalize_rows(cr, q), q)]
                counts += np.bincount(idx, minlength=len(normals))
            if len(u):
                counts += ((normals @ u.T) % q == 0).sum(axis=1)
            c3 = 1 + int(counts.max())
            if c3 > best3:
                best3, cand3 = c3, []
            if c3 == best3:
                cand3.extend((i, int(k)) for k in np.flatnonzero(counts == counts.max()))
        elif n == 3:
            best3 = L

    lines = table.lines
    # witnesses: smallest canonical flat among all maximizers
    if n == 2:
        w2 = span_flat(lines[0].anchor, [(1, 0), (0, 1)], q)
    elif cand2:
        flats = set()
        for i, code in cand2:
            piv = int(np.argmax(V[i] != 0))
            u = [(code // q**k) % q for k in range(n - 2, -1, -1)]
            flats.add(span_flat(lines[i].anchor, [lines[i].direction, _lift(u, piv)], q))
        w2 = min(flats)
    else:
        w2 = flats_through_line(lines[0])[0]

    w3 = None
    if n == 3:
        w3 = span_flat(lines[0].anchor, [(1, 0, 0), (0, 1, 0), (0, 0, 1)], q)
    elif n == 4:
        if cand3:
            flats = set()
            for i, k in cand3:
                piv = int(np.argmax(V[i] != 0))
                extra = [_lift(w, piv) for w in _null_pair(normals[k], q)]
                flats.add(span_flat(lines[i].anchor, [lines[i].direction, *extra], q))
            w3 = min(flats)
        else:
            w3 = flats_containing(flats_through_line(lines[0])[0])[0]

    dir_codes = encode_rows(V, q)
    _, per_dir = np.unique(dir_codes, return_counts=True)
    return AxiomReport(
        q=q,
        n=n,
        family_size=L,
        max_lines_in_2flat=best2,
        witness_2flat=w2,
        max_lines_in_3flat=best3,
        witness_3flat=w3,
        directions_distinct=bool(per_dir.max() == 1),
        max_lines_per_direction=int(per_dir.max()),
    )


# ---------------------------------------------------------------------------
# planiness


@dataclass
class PlaninessResult:
    plane_assignment: dict[Point, Flat] | None = None
    violation: tuple[Point, tuple[Line, Line, Line]] | None = None
    points_checked: int = 0

    @property
    def plany(self) -> bool:
        return self.violation is None

    def to_dict(self, include_assignment: bool = True) -> dict:
        out: dict = {"kind": "planiness", "plany": self.plany, "pointsChecked": self.points_checked}
        if self.violation is not None:
            p, ls = self.violation
            out["violation"] = {"point": list(p), "lines": [l.to_dict() for l in ls]}
        elif include_assignment:
            out["planeAssignment"] = [
                {"point": list(p), "plane": f.to_dict()} for p, f in sorted(self.plane_assignment.items())
            ]
        return out


def _rank_two(v1: np.ndarray, v2: np.ndarray, w: np.ndarray, q: int) -> np.ndarray:
    """Row-wise: does w lie in span(v1, v2)? (v1, v2 independent)."""
    n = v1.shape[1]
    ok = np.ones(len(w), dtype=bool)
    if n < 3:
        return ok
    for cols in _triples(n):
        m = np.stack([v1[:, cols], v2[:, cols], w[:, cols]], axis=1)
        ok &= _det3(m) % q == 0
    return ok


def _triples(n: int):
    return [[i, j, k] for i in range(n) for j in range(i + 1, n) for k in range(j + 1, n)]


def _det3(m: np.ndarray) -> np.ndarray:
    return (
        m[:, 0, 0] * (m[:, 1, 1] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 1])
        - m[:, 0, 1] * (m[:, 1, 0] * m[:, 2, 2] - m[:, 1, 2] * m[:, 2, 0])
        + m[:, 0, 2] * (m[:, 1, 0] * m[:, 2, 1] - m[:, 1, 1] * m[:, 2, 0])
    )


def planiness_check(fam: LineFamily, table: IncidenceTable | None = None) -> PlaninessResult:
    """For every point on two or more lines, test that all its lines share a 2-flat.

    The candidate plane at x is spanned by the first two lines through x (in
    canonical line order); the first point (lexicographically) where a further
    line leaves that plane is returned as the violation.
    """
    table = table or IncidenceTable(fam)
    q = table.q
    ids, starts = table._csr
    multi = np.flatnonzero(table.mu >= 2)
    first = ids[starts[multi]]
    second = ids[starts[multi] + 1]
    v1, v2 = table.dirs[first], table.dirs[second]
    # rest: (point position, line) pairs beyond the first two lines at each point
    extra_counts = table.mu[multi] - 2
    owner = np.repeat(np.arange(len(multi)), extra_counts)
    offs = np.arange(extra_counts.sum()) - np.repeat(np.cumsum(extra_counts) - extra_counts, extra_counts)
    rest = ids[starts[multi][owner] + 2 + offs]
    ok = _rank_two(v1[owner], v2[owner], table.dirs[rest], q)
    if not ok.all():
        k = int(np.flatnonzero(~ok)[0])
        j = owner[k]
        lines = table.lines
        witness = (lines[first[j]], lines[second[j]], lines[rest[k]])
        return PlaninessResult(violation=(table.decode(multi[j]), witness), points_checked=len(multi))

    assignment: dict[Point, Flat] = {}
    basis_cache: dict[tuple, tuple] = {}
    lines = table.lines
    for pos, p_idx in enumerate(multi):
        d1, d2 = lines[first[pos]].direction, lines[second[pos]].direction
        key = (d1, d2)
        if key not in basis_cache:
            basis, _ = rref([d1, d2], q)
            if len(basis) != 2:
                raise InvariantViolation("two distinct lines through a point span a plane")
            basis_cache[key] = basis
        p = table.decode(p_idx)
        assignment[p] = _make_flat(q, p, basis_cache[key])
    return PlaninessResult(plane_assignment=assignment, points_checked=len(multi))
