"""Exact arithmetic in F_q and affine geometry in F_q^n.

Points and directions are plain tuples of residues in ``[0, q)``.  Lines and
flats are frozen dataclasses kept in a canonical form so that equality of
values is equality of point sets:

* a direction is scaled so that its first nonzero coordinate is 1;
* a line stores its canonical direction and the lexicographically smallest
  point on it;
* a flat stores a reduced row echelon basis and the anchor reduced to zero in
  every pivot column, which is again the lexicographically smallest point.

Everything here is pure and immutable.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

from .errors import (
    DomainMismatch,
    InversionOfZero,
    NotPrime,
    UnsupportedDimension,
    ZeroDirection,
)

Point = tuple[int, ...]
Direction = tuple[int, ...]

SMALL_Q_LIMIT = 600
MAX_FLAT_DIM = 3


def is_prime(q: int) -> bool:
    """Deterministic Miller-Rabin, exact for every q < 3.3e24."""
    if q < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if q % p == 0:
            return q == p
    d, s = q - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, q)
        if x in (1, q - 1):
            continue
        for _ in range(s - 1):
            x = x * x % q
            if x == q - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeModulus:
    """The pair (q, n): field size and ambient dimension."""

    q: int
    n: int

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q < 3 or not is_prime(self.q):
            raise NotPrime(f"q={self.q} is not a prime >= 3")
        if self.n not in (2, 3, 4):
            raise UnsupportedDimension(f"n={self.n} not in {{2, 3, 4}}")

    @property
    def small_q(self) -> bool:
        """True when q is below the range where the asymptotic constants are proven."""
        return self.q <= SMALL_Q_LIMIT

    @property
    def num_points(self) -> int:
        return self.q**self.n

    @property
    def num_directions(self) -> int:
        return (self.q**self.n - 1) // (self.q - 1)

    def inv(self, a: int) -> int:
        return fe_inv(a, self.q)

    def element(self, value: int) -> FieldElement:
        return FieldElement(value % self.q, self.q)


def _qval(m: PrimeModulus | int) -> int:
    return m.q if isinstance(m, PrimeModulus) else m


@dataclass(frozen=True)
class FieldElement:
    value: int
    q: int

    def __post_init__(self):
        if not 0 <= self.value < self.q:
            raise ValueError(f"{self.value} is not a residue mod {self.q}")

    def _coerce(self, other) -> int:
        if isinstance(other, FieldElement):
            if other.q != self.q:
                raise DomainMismatch(f"mod {self.q} vs mod {other.q}")
            return other.value
        if isinstance(other, int):
            return other % self.q
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        return FieldElement((self.value + o) % self.q, self.q)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        return FieldElement((self.value - o) % self.q, self.q)

    def __rsub__(self, other):
        o = self._coerce(other)
        return FieldElement((o - self.value) % self.q, self.q)

    def __mul__(self, other):
        o = self._coerce(other)
        return FieldElement(self.value * o % self.q, self.q)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement(-self.value % self.q, self.q)

    def __truediv__(self, other):
        o = self._coerce(other)
        return FieldElement(self.value * fe_inv(o, self.q) % self.q, self.q)

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        return FieldElement(pow(self.value, e, self.q), self.q)

    def inverse(self) -> FieldElement:
        return FieldElement(fe_inv(self.value, self.q), self.q)

    def __int__(self):
        return self.value

    def __repr__(self):
        return f"{self.value} (mod {self.q})"


def fe_inv(a: FieldElement | int, m: PrimeModulus | int | None = None):
    """Multiplicative inverse mod q.

    Accepts a FieldElement (returns a FieldElement) or an int plus a modulus
    (returns an int).
    """
    if isinstance(a, FieldElement):
        return a.inverse()
    q = _qval(m)
    a %= q
    if a == 0:
        raise InversionOfZero(f"0 has no inverse mod {q}")
    return pow(a, -1, q)


# ---------------------------------------------------------------------------
# small exact linear algebra over F_q


def rref(rows: Sequence[Sequence[int]], q: int, ncols: int | None = None):
    """Reduced row echelon form. Returns (nonzero rows, pivot columns)."""
    mat = [[x % q for x in r] for r in rows]
    if ncols is None:
        ncols = len(mat[0]) if mat else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == len(mat):
            break
        sel = next((i for i in range(r, len(mat)) if mat[i][c]), None)
        if sel is None:
            continue
        mat[r], mat[sel] = mat[sel], mat[r]
        inv = pow(mat[r][c], -1, q)
        mat[r] = [x * inv % q for x in mat[r]]
        for i in range(len(mat)):
            if i != r and mat[i][c]:
                f = mat[i][c]
                mat[i] = [(x - f * y) % q for x, y in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
    return [tuple(row) for row in mat[:r]], pivots


def rank(rows: Sequence[Sequence[int]], q: int) -> int:
    return len(rref(rows, q)[0]) if rows else 0


def solve_affine(a: Sequence[Sequence[int]], b: Sequence[int], q: int, ncols: int):
    """Solve ``a x = b`` over F_q.

    Returns ``(particular, nullspace_basis)`` or ``None`` when inconsistent.
    """
    if not a:
        return (0,) * ncols, [_unit(ncols, j) for j in range(ncols)]
    aug = [list(row) + [bi] for row, bi in zip(a, b)]
    red, pivots = rref(aug, q, ncols + 1)
    if ncols in pivots:
        return None
    x = [0] * ncols
    for row, p in zip(red, pivots):
        x[p] = row[ncols]
    null = []
    for f in range(ncols):
        if f in pivots:
            continue
        v = [0] * ncols
        v[f] = 1
        for row, p in zip(red, pivots):
            v[p] = -row[f] % q
        null.append(tuple(v))
    return tuple(x), null


def _unit(n: int, j: int) -> tuple[int, ...]:
    return tuple(1 if i == j else 0 for i in range(n))


def _sub(a: Sequence[int], b: Sequence[int], q: int) -> tuple[int, ...]:
    return tuple((x - y) % q for x, y in zip(a, b))


def _axpy(lam: int, x: Sequence[int], y: Sequence[int], q: int) -> tuple[int, ...]:
    return tuple((lam * xi + yi) % q for xi, yi in zip(x, y))


# ---------------------------------------------------------------------------
# directions and point encoding


def canonical_direction(v: Sequence[int | FieldElement], m: PrimeModulus | int | None = None) -> Direction:
    """Scale ``v`` so its first nonzero coordinate is 1."""
    if m is None:
        fe = next((x for x in v if isinstance(x, FieldElement)), None)
        if fe is None:
            raise TypeError("modulus required for integer vectors")
        m = fe.q
    q = _qval(m)
    vals = tuple(int(x) % q for x in v)
    lead = next((x for x in vals if x), 0)
    if lead == 0:
        raise ZeroDirection("the zero vector has no direction")
    if lead == 1:
        return vals
    inv = pow(lead, -1, q)
    return tuple(x * inv % q for x in vals)


def enumerate_directions(q: int, n: int) -> Iterator[Direction]:
    """All canonical directions of F_q^n in lexicographic order."""
    for i in range(n - 1, -1, -1):
        for tail in itertools.product(range(q), repeat=n - 1 - i):
            yield (0,) * i + (1,) + tail


def enumerate_points(q: int, n: int) -> Iterator[Point]:
    return itertools.product(range(q), repeat=n)


def point_index(p: Sequence[int], q: int) -> int:
    """Base-q code of a point; numeric order equals lexicographic order."""
    idx = 0
    for c in p:
        idx = idx * q + c
    return idx


def point_from_index(idx: int, q: int, n: int) -> Point:
    out = [0] * n
    for k in range(n - 1, -1, -1):
        idx, out[k] = divmod(idx, q)
    return tuple(out)


# ---------------------------------------------------------------------------
# lines


@dataclass(frozen=True, order=True)
class Line:
    q: int
    direction: Direction
    anchor: Point

    @property
    def n(self) -> int:
        return len(self.anchor)

    def points(self) -> list[Point]:
        return line_points(self)

    def __contains__(self, p) -> bool:
        return flat_contains(line_as_flat(self), p)

    def to_dict(self) -> dict:
        return {"anchor": list(self.anchor), "direction": list(self.direction)}


def _pivot(v: Sequence[int]) -> int:
    return next(i for i, x in enumerate(v) if x)


def line_new(p: Sequence[int], v: Sequence[int], m: PrimeModulus | int) -> Line:
    q = _qval(m)
    if len(p) != len(v):
        raise DomainMismatch(f"point has {len(p)} coordinates, direction {len(v)}")
    d = canonical_direction(v, q)
    a = tuple(int(x) % q for x in p)
    i = _pivot(d)
    anchor = _axpy(-a[i], d, a, q)
    return Line(q, d, anchor)


def line_points(line: Line) -> list[Point]:
    q, a, v = line.q, line.anchor, line.direction
    return [tuple((ai + lam * vi) % q for ai, vi in zip(a, v)) for lam in range(q)]


def _check_same_domain(*objs) -> None:
    q0, n0 = objs[0].q, objs[0].n
    for o in objs[1:]:
        if o.q != q0 or o.n != n0:
            raise DomainMismatch(f"(q, n)=({q0}, {n0}) vs ({o.q}, {o.n})")


class Relation(enum.Enum):
    EQUAL = "Equal"
    MEET = "Meet"
    PARALLEL_DISTINCT = "ParallelDistinct"
    SKEW = "Skew"


@dataclass(frozen=True)
class LineRelation:
    kind: Relation
    point: Point | None = None


def lines_relation(l1: Line, l2: Line) -> LineRelation:
    _check_same_domain(l1, l2)
    if l1 == l2:
        return LineRelation(Relation.EQUAL)
    if l1.direction == l2.direction:
        return LineRelation(Relation.PARALLEL_DISTINCT)
    q = l1.q
    a = [(x, -y % q) for x, y in zip(l1.direction, l2.direction)]
    sol = solve_affine(a, _sub(l2.anchor, l1.anchor, q), q, 2)
    if sol is None:
        return LineRelation(Relation.SKEW)
    lam = sol[0][0]
    return LineRelation(Relation.MEET, _axpy(lam, l1.direction, l1.anchor, q))


# ---------------------------------------------------------------------------
# flats


@dataclass(frozen=True, order=True)
class Flat:
    """Affine subspace in canonical form; build with :func:`span_flat`.

    Ordering (dim, basis, anchor) is the canonical flat order used for all
    tie-breaking.
    """

    q: int
    dim: int
    basis: tuple[tuple[int, ...], ...]
    anchor: Point

    @property
    def n(self) -> int:
        return len(self.anchor)

    @cached_property
    def pivots(self) -> tuple[int, ...]:
        return tuple(_pivot(b) for b in self.basis)

    @cached_property
    def equations(self) -> tuple[tuple[tuple[int, ...], ...], tuple[int, ...]]:
        """``(M, c)`` with the flat equal to ``{x : M x = c}``."""
        q, n = self.q, self.n
        rows = []
        for f in range(n):
            if f in self.pivots:
                continue
            w = [0] * n
            w[f] = 1
            for b, p in zip(self.basis, self.pivots):
                w[p] = -b[f] % q
            rows.append(tuple(w))
        c = tuple(sum(w_i * a_i for w_i, a_i in zip(w, self.anchor)) % q for w in rows)
        return tuple(rows), c

    @property
    def size(self) -> int:
        return self.q**self.dim

    def points(self) -> list[Point]:
        return flat_points(self)

    def to_dict(self) -> dict:
        return {"dim": self.dim, "anchor": list(self.anchor), "basis": [list(b) for b in self.basis]}

    @classmethod
    def from_dict(cls, d: dict, q: int) -> Flat:
        f = _make_flat(q, tuple(d["anchor"]), [tuple(b) for b in d["basis"]])
        if f.to_dict() != d:
            raise ValueError("flat is not in canonical form")
        return f


def _reduce_mod_span(x: Sequence[int], basis, pivots, q: int) -> tuple[int, ...]:
    out = list(x)
    for b, p in zip(basis, pivots):
        c = out[p]
        if c:
            out = [(o - c * bi) % q for o, bi in zip(out, b)]
    return tuple(out)


def _make_flat(q: int, anchor: Sequence[int], dirs: Sequence[Sequence[int]]) -> Flat:
    n = len(anchor)
    for d in dirs:
        if len(d) != n:
            raise DomainMismatch(f"direction of length {len(d)} in F_q^{n}")
    basis, pivots = rref(dirs, q, n) if dirs else ([], [])
    a = tuple(int(x) % q for x in anchor)
    a = _reduce_mod_span(a, basis, pivots, q)
    return Flat(q, len(basis), tuple(basis), a)


def span_flat(anchor: Sequence[int], dirs: Sequence[Sequence[int]], m: PrimeModulus | int) -> Flat:
    """The flat ``anchor + span(dirs)`` in canonical form."""
    if not dirs:
        raise ZeroDirection("no directions given")
    f = _make_flat(_qval(m), anchor, dirs)
    if f.dim == 0:
        raise ZeroDirection("all directions are zero")
    if f.dim > MAX_FLAT_DIM:
        raise UnsupportedDimension(f"span has dimension {f.dim} > {MAX_FLAT_DIM}")
    return f


def point_flat(p: Sequence[int], m: PrimeModulus | int) -> Flat:
    return _make_flat(_qval(m), p, [])


def line_as_flat(line: Line) -> Flat:
    return Flat(line.q, 1, (line.direction,), line.anchor)


def flat_points(f: Flat) -> list[Point]:
    q = f.q
    out = []
    for coeffs in itertools.product(range(q), repeat=f.dim):
        p = list(f.anchor)
        for c, b in zip(coeffs, f.basis):
            if c:
                p = [(x + c * y) % q for x, y in zip(p, b)]
        out.append(tuple(p))
    out.sort()
    return out


def _in_direction_span(f: Flat, v: Sequence[int]) -> bool:
    return not any(_reduce_mod_span(v, f.basis, f.pivots, f.q))


def flat_contains(f: Flat, p: Sequence[int]) -> bool:
    if len(p) != f.n:
        raise DomainMismatch(f"point of length {len(p)} in F_q^{f.n}")
    return _in_direction_span(f, _sub(p, f.anchor, f.q))


def flat_contains_line(f: Flat, line: Line) -> bool:
    _check_same_domain(f, line)
    return flat_contains(f, line.anchor) and _in_direction_span(f, line.direction)


def flats_intersection(f1: Flat, f2: Flat) -> Flat | None:
    """Exact intersection; ``None`` when empty, a dim-0 flat for a single point."""
    _check_same_domain(f1, f2)
    m1, c1 = f1.equations
    m2, c2 = f2.equations
    sol = solve_affine(list(m1) + list(m2), list(c1) + list(c2), f1.q, f1.n)
    if sol is None:
        return None
    x0, null = sol
    return _make_flat(f1.q, x0, null)


def line_meets_or_parallel(line: Line, plane: Flat) -> bool:
    """True iff the line meets the plane or its direction lies in the plane's direction space."""
    _check_same_domain(line, plane)
    if plane.dim != 2:
        raise UnsupportedDimension("expected a 2-flat")
    q = line.q
    mat, c = plane.equations
    mv = [sum(w * x for w, x in zip(row, line.direction)) % q for row in mat]
    r = [(ci - sum(w * x for w, x in zip(row, line.anchor))) % q for row, ci in zip(mat, c)]
    # meets-or-parallel iff the (n-2) x 2 matrix [Mv | c - Ma] has rank <= 1
    for i in range(len(mv)):
        for j in range(i + 1, len(mv)):
            if (mv[i] * r[j] - mv[j] * r[i]) % q:
                return False
    return True


def flats_containing(f: Flat) -> list[Flat]:
    """All flats of dimension ``f.dim + 1`` containing ``f``, sorted canonically.

    Complement directions supported on the non-pivot coordinates give each
    such flat exactly once.
    """
    q, n = f.q, f.n
    if f.dim + 1 > min(n, MAX_FLAT_DIM):
        raise UnsupportedDimension(f"no {f.dim + 1}-flats available in F_q^{n}")
    free = [c for c in range(n) if c not in f.pivots]
    out = []
    for w_free in enumerate_directions(q, len(free)):
        w = [0] * n
        for c, x in zip(free, w_free):
            w[c] = x
        out.append(span_flat(f.anchor, list(f.basis) + [w], q))
    out.sort()
    return out


def flats_through_line(line: Line, m: PrimeModulus | int | None = None) -> list[Flat]:
    """All 2-flats containing ``line``; they meet pairwise exactly in the line."""
    if line.n < 2:
        raise UnsupportedDimension("need n >= 2")
    return flats_containing(line_as_flat(line))


def flats_through_plane(plane: Flat, m: PrimeModulus | int | None = None) -> list[Flat]:
    """All 3-flats of F_q^4 containing the 2-flat ``plane``."""
    if plane.n != 4:
        raise UnsupportedDimension(f"3-flat foliation needs n=4, got n={plane.n}")
    if plane.dim != 2:
        raise UnsupportedDimension("expected a 2-flat")
    return flats_containing(plane)


def flat_from_lines(l1: Line, l2: Line) -> Flat:
    """Smallest flat containing both lines."""
    _check_same_domain(l1, l2)
    q = l1.q
    return span_flat(l1.anchor, [l1.direction, l2.direction, _sub(l2.anchor, l1.anchor, q)], q)
