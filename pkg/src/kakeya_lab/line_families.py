"""Line families: builders, unions, and the plain-text family file format.

File format (UTF-8)::

    q n m
    a1 ... an ; v1 ... vn      (m rows: anchor ; direction)

Rows may be non-canonical; the reader canonicalizes and drops duplicates with
a warning.  The writer always emits canonical rows in canonical line order.
"""

from __future__ import annotations

import hashlib
import os
import re
import tempfile
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import CapExceeded, DomainMismatch, EmptyFamily, FamilyParseError, NotPrime, ZeroDirection
from .field_geometry import (
    Flat,
    Line,
    Point,
    PrimeModulus,
    enumerate_directions,
    enumerate_points,
    flat_points,
    line_new,
    line_points,
    rref,
)
from .rng import SplitMix64


@dataclass(frozen=True)
class LineFamily:
    """Distinct canonical lines over a common (q, n), kept in canonical order."""

    modulus: PrimeModulus
    lines: tuple[Line, ...]
    label: str = ""

    def __post_init__(self):
        lines = tuple(sorted(set(self.lines)))
        if not lines:
            raise EmptyFamily("a line family needs at least one line")
        q, n = self.modulus.q, self.modulus.n
        for line in lines:
            if line.q != q or line.n != n:
                raise DomainMismatch(f"line over (q={line.q}, n={line.n}) in family over (q={q}, n={n})")
        object.__setattr__(self, "lines", lines)

    @property
    def q(self) -> int:
        return self.modulus.q

    @property
    def n(self) -> int:
        return self.modulus.n

    def __len__(self) -> int:
        return len(self.lines)

    def __iter__(self) -> Iterator[Line]:
        return iter(self.lines)

    def __contains__(self, line: Line) -> bool:
        return line in set(self.lines)

    def subfamily(self, lines: Iterable[Line], label: str | None = None) -> LineFamily:
        return LineFamily(self.modulus, tuple(lines), self.label if label is None else label)

    def digest(self) -> str:
        """SHA-256 of the canonical file serialization."""
        return hashlib.sha256(format_family(self).encode()).hexdigest()


@dataclass(frozen=True)
class PointSet:
    modulus: PrimeModulus
    points: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        pts = frozenset(tuple(p) for p in self.points)
        for p in pts:
            if len(p) != self.modulus.n:
                raise DomainMismatch(f"point {p} not in F_q^{self.modulus.n}")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self) -> Iterator[Point]:
        return iter(sorted(self.points))

    def __contains__(self, p) -> bool:
        return tuple(p) in self.points


def union_points(fam: LineFamily) -> PointSet:
    pts: set[Point] = set()
    for line in fam:
        pts.update(line_points(line))
    return PointSet(fam.modulus, frozenset(pts))


def bush_family(center: Sequence[int], m: PrimeModulus) -> LineFamily:
    """Every line through ``center``."""
    lines = [line_new(center, d, m) for d in enumerate_directions(m.q, m.n)]
    return LineFamily(m, tuple(lines), f"bush(center={tuple(center)})")


def plane_pencil_family(plane: Flat, m: PrimeModulus | None = None) -> LineFamily:
    """All q(q+1) lines contained in the 2-flat ``plane``."""
    if plane.dim != 2:
        raise ValueError("plane_pencil_family needs a 2-flat")
    m = m or PrimeModulus(plane.q, plane.n)
    q = plane.q
    b1, b2 = plane.basis
    dirs = [tuple((s * x + t * y) % q for x, y in zip(b1, b2)) for s, t in enumerate_directions(q, 2)]
    lines = {line_new(p, d, q) for p in flat_points(plane) for d in dirs}
    return LineFamily(m, tuple(lines), f"plane-pencil(anchor={plane.anchor})")


def _coset_representatives(basis, q: int, n: int) -> list[tuple[int, ...]]:
    pivots = [next(i for i, x in enumerate(b) if x) for b in basis]
    free = [c for c in range(n) if c not in pivots]
    reps = []
    for vals in enumerate_points(q, len(free)):
        r = [0] * n
        for c, x in zip(free, vals):
            r[c] = x
        reps.append(tuple(r))
    return reps


def parallel_pencil_family(
    dir_plane: Sequence[Sequence[int]] | None,
    m: PrimeModulus,
    per_plane_cap: int | None = None,
) -> LineFamily:
    """Lines inside every translate of a fixed 2-dim direction space.

    In each of the q^(n-2) parallel planes we place ``per_plane_cap`` lines
    with distinct in-plane directions.  In plane coordinates (x, y) these are
    the parabola tangents ``y = 2a x - a^2`` for a = 0, 1, ... (no three
    concurrent, so most incidences sit on double points), plus the line
    ``x = 0`` when the cap is q + 1.  Every point lies in exactly one of the
    parallel planes, so the family is plany.
    """
    q, n = m.q, m.n
    if n < 3:
        raise ValueError("parallel pencils need n >= 3")
    if dir_plane is None:
        dir_plane = [tuple(1 if i == 0 else 0 for i in range(n)), tuple(1 if i == 1 else 0 for i in range(n))]
    basis, _ = rref(dir_plane, q, n)
    if len(basis) != 2:
        raise ValueError("dir_plane must span a 2-dimensional direction space")
    cap = min(q + 1, 2 * q) if per_plane_cap is None else per_plane_cap
    if cap > q + 1:
        raise CapExceeded(f"per-plane cap {cap} exceeds the q+1={q + 1} in-plane directions")
    if cap < 1:
        raise CapExceeded("per-plane cap must be positive")
    b1, b2 = basis

    def embed(r, x, y):
        return tuple((ri + x * u + y * w) % q for ri, u, w in zip(r, b1, b2))

    in_plane = [((0, -a * a % q), (1, 2 * a % q)) for a in range(min(cap, q))]
    if cap == q + 1:
        in_plane.append(((0, 0), (0, 1)))
    lines = []
    for r in _coset_representatives(basis, q, n):
        for (px, py), (dx, dy) in in_plane:
            p = embed(r, px, py)
            d = tuple((dx * u + dy * w) % q for u, w in zip(b1, b2))
            lines.append(line_new(p, d, q))
    return LineFamily(m, tuple(lines), f"parallel-pencil(cap={cap})")


def random_family(m: PrimeModulus, count: int, seed: int, distinct_directions: bool = False) -> LineFamily:
    q, n = m.q, m.n
    dirs = list(enumerate_directions(q, n))
    rng = SplitMix64(seed)
    if count < 1:
        raise CapExceeded("count must be positive")
    if distinct_directions:
        if count > len(dirs):
            raise CapExceeded(f"{count} distinct directions requested, only {len(dirs)} exist")
        rng.shuffle(dirs)
        lines = [line_new(_random_point(rng, q, n), d, q) for d in dirs[:count]]
        return LineFamily(m, tuple(lines), f"random(count={count}, seed={seed}, distinct)")
    total = len(dirs) * q ** (n - 1)
    if count > total:
        raise CapExceeded(f"only {total} lines exist in F_{q}^{n}")
    chosen: set[Line] = set()
    while len(chosen) < count:
        d = dirs[rng.below(len(dirs))]
        chosen.add(line_new(_random_point(rng, q, n), d, q))
    return LineFamily(m, tuple(chosen), f"random(count={count}, seed={seed})")


def kakeya_family(m: PrimeModulus, seed: int) -> LineFamily:
    """One line in every direction, each through a seeded random point."""
    rng = SplitMix64(seed)
    lines = [line_new(_random_point(rng, m.q, m.n), d, m) for d in enumerate_directions(m.q, m.n)]
    return LineFamily(m, tuple(lines), f"kakeya(seed={seed})")


def _random_point(rng: SplitMix64, q: int, n: int) -> Point:
    return tuple(rng.below(q) for _ in range(n))


# ---------------------------------------------------------------------------
# file format


def format_family(fam: LineFamily) -> str:
    rows = [f"{fam.q} {fam.n} {len(fam)}"]
    for line in fam:
        rows.append(" ".join(map(str, line.anchor)) + " ; " + " ".join(map(str, line.direction)))
    return "\n".join(rows) + "\n"


def _tokens(text: str, lineno: int, col0: int, what: str) -> list[tuple[int, int]]:
    """Integers in ``text`` with their 1-based column in the full row."""
    out = []
    for match in re.finditer(r"\S+", text):
        col = col0 + match.start() + 1
        try:
            out.append((int(match.group()), col))
        except ValueError:
            raise FamilyParseError(f"expected integer {what}, got {match.group()!r}", lineno, col) from None
    return out


def parse_family(text: str, label: str = "") -> LineFamily:
    rows = text.splitlines()
    if not rows or not rows[0].strip():
        raise FamilyParseError("missing header 'q n m'", 1)
    header = [v for v, _ in _tokens(rows[0], 1, 0, "header field")]
    if len(header) != 3:
        raise FamilyParseError(f"header must have 3 integers, found {len(header)}", 1)
    q, n, count = header
    try:
        m = PrimeModulus(q, n)
    except NotPrime:
        raise
    except ValueError as e:
        raise FamilyParseError(str(e), 1) from e
    body = [(i + 2, r) for i, r in enumerate(rows[1:]) if r.strip()]
    if len(body) != count:
        raise FamilyParseError(f"header declares {count} lines, file has {len(body)}", 1)
    lines = []
    for lineno, row in body:
        if row.count(";") != 1:
            raise FamilyParseError("expected exactly one ';' separating anchor and direction", lineno)
        left, right = row.split(";")
        parts = []
        for text, col0, what in ((left, 0, "anchor coordinate"), (right, len(left) + 1, "direction coordinate")):
            toks = _tokens(text, lineno, col0, what)
            if len(toks) != n:
                raise FamilyParseError(f"expected {n} {what}s, found {len(toks)}", lineno, col0 + 1)
            for v, col in toks:
                if not 0 <= v < q:
                    raise FamilyParseError(f"residue {v} outside [0, {q})", lineno, col)
            parts.append([v for v, _ in toks])
        try:
            lines.append(line_new(parts[0], parts[1], q))
        except ZeroDirection:
            raise FamilyParseError("zero direction vector", lineno, len(left) + 2) from None
    distinct = set(lines)
    if len(distinct) < len(lines):
        warnings.warn(f"{len(lines) - len(distinct)} duplicate line(s) removed", stacklevel=2)
    if not distinct:
        raise EmptyFamily("family file contains no lines")
    return LineFamily(m, tuple(distinct), label)


def load_family(path: str | os.PathLike) -> LineFamily:
    path = Path(path)
    return parse_family(path.read_text(encoding="utf-8"), label=f"file:{path.name}")


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def save_family(fam: LineFamily, path: str | os.PathLike) -> None:
    atomic_write_text(path, format_family(fam))
