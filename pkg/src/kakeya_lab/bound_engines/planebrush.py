"""Planebrush bound for plany families in F_q^4, run as an explicit loop.

Each pass works on the remaining lines W: it picks a base point x_1 with
many well-populated lines, takes the plane Π through its bush, collects the
lines L_1 meeting or parallel to Π, and either terminates (few intersections
inside L_1, or an empty bush count) or certifies a lower bound on the points
P_1' of L_1 covered twice, which no later line can touch.  Then W shrinks
to W \\ L_1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import HypothesisFailed, InvariantViolation, NotPlany, UnsupportedDimension
from ..field_geometry import Flat, flats_through_line, span_flat
from ..incidence_axioms import (
    AxiomReport,
    IncidenceTable,
    PlaninessResult,
    canonicalize_rows,
    encode_rows,
    planiness_check,
    wolff_axiom_report,
)
from ..line_families import LineFamily
from ._exact import frac, root_constant
from .cordoba import CordobaCertificate, cordoba_prime
from .hairbrush import HairbrushCertificate, hairbrush_bound

EARLY_EXIT = "EarlyExitCase"
CASE1 = "Case1"
CASE2 = "Case2"


@dataclass
class AlphaLeaf:
    flat: Flat
    lines: int
    dropped: int  # lines with no point of P_1' off the plane
    hairbrush: HairbrushCertificate | None

    @property
    def lower_bound(self) -> int:
        return 0 if self.hairbrush is None else self.hairbrush.union_lower_bound

    def to_dict(self) -> dict:
        return {
            "flat": self.flat.to_dict(),
            "lines": self.lines,
            "droppedLines": self.dropped,
            "lowerBound": self.lower_bound,
            "hairbrush": None if self.hairbrush is None else self.hairbrush.to_dict(),
        }


@dataclass
class Case2Record:
    s: int
    s_prime: int
    s_double: int
    p1_prime: int
    closure_verified: bool
    closure_points_checked: int
    l1_prime_threshold: int
    l1_prime: int
    mass_in_l1_prime: int
    mass_outside_l1_prime: int
    l_pi: int
    cordoba: CordobaCertificate | None
    leaves: list[AlphaLeaf]
    p1_prime_lower_bound: int
    constant: dict

    def to_dict(self) -> dict:
        return {
            "S": self.s,
            "SPrime": self.s_prime,
            "SDoublePrime": self.s_double,
            "P1Prime": self.p1_prime,
            "closureVerified": self.closure_verified,
            "closurePointsChecked": self.closure_points_checked,
            "L1PrimeThreshold": self.l1_prime_threshold,
            "L1Prime": self.l1_prime,
            "massInL1Prime": self.mass_in_l1_prime,
            "massOutsideL1Prime": self.mass_outside_l1_prime,
            "decomposition": {"LPi": self.l_pi, "LAlpha": [leaf.lines for leaf in self.leaves]},
            "cordobaLPi": None if self.cordoba is None else self.cordoba.to_dict(),
            "alphaLeaves": [leaf.to_dict() for leaf in self.leaves],
            "P1PrimeLowerBound": self.p1_prime_lower_bound,
            "measuredConstant": self.constant,
        }


@dataclass
class PlanebrushIteration:
    index: int
    lines: int
    x_size: int
    avg_multiplicity: Fraction
    x_prime_threshold: int
    x_prime_size: int
    retained: int
    discarded: int
    base_point: tuple
    base_point_mu: int
    base_point_good_lines: int
    base_point_deviation: bool
    base_plane: Flat
    base_plane_deviation: bool
    l1: int
    l0: int
    bush_points: int
    bush_count_term1: int
    bush_count_union: int
    bush_count_overcount: int
    bound_first_term: Fraction
    bound_second_term: int
    double_count_checked: int
    case_taken: str
    terminal_lower_bound: int | None = None
    terminal_constant: dict | None = None
    case2: Case2Record | None = None

    @property
    def filter_ratio(self) -> Fraction:
        return Fraction(self.retained, self.retained + self.discarded)

    @property
    def filter_discarded_ratio(self) -> Fraction:
        return Fraction(self.discarded, self.retained + self.discarded)

    def to_dict(self) -> dict:
        return {
            "iteration": self.index,
            "lines": self.lines,
            "X": self.x_size,
            "avgMultiplicity": frac(self.avg_multiplicity),
            "XPrimeThreshold": self.x_prime_threshold,
            "XPrime": self.x_prime_size,
            "multiplicityFilter": {
                "retained": self.retained,
                "discarded": self.discarded,
                "total": self.retained + self.discarded,
                "ratio": frac(self.filter_ratio),
                "holds99": 100 * self.retained >= 99 * (self.retained + self.discarded),
            },
            "basePoint": list(self.base_point),
            "basePointMultiplicity": self.base_point_mu,
            "basePointGoodLines": self.base_point_good_lines,
            "basePointDeviation": self.base_point_deviation,
            "basePlane": self.base_plane.to_dict(),
            "basePlaneDeviation": self.base_plane_deviation,
            "L1": self.l1,
            "L0": self.l0,
            "bushCount": {
                "bushPoints": self.bush_points,
                "term1": self.bush_count_term1,
                "union": self.bush_count_union,
                "overcount": self.bush_count_overcount,
                "boundFirstTerm": frac(self.bound_first_term),
                "boundSecondTerm": self.bound_second_term,
                "boundEarlyExit": self.bound_second_term >= self.bound_first_term,
                "doubleCountLinesChecked": self.double_count_checked,
            },
            "caseTaken": self.case_taken,
            "terminalLowerBound": self.terminal_lower_bound,
            "terminalConstant": self.terminal_constant,
            "case2": None if self.case2 is None else self.case2.to_dict(),
        }


@dataclass
class PlanebrushCertificate:
    q: int
    family_size: int
    iterations: list[PlanebrushIteration]
    extracted: int
    terminal_remainder: int
    certified_lower_bound: int
    actual_union: int
    constant: dict
    small_q: bool
    warnings: list[str] = field(default_factory=list)

    @property
    def c(self) -> float:
        return self.constant["c"]

    @property
    def c_lower(self) -> Fraction:
        k, s = self.constant["cLower"]
        return Fraction(k, s)

    def to_dict(self) -> dict:
        return {
            "kind": "planebrush",
            "familySize": self.family_size,
            "iterations": [it.to_dict() for it in self.iterations],
            "extractedLines": self.extracted,
            "terminalRemainder": self.terminal_remainder,
            "certifiedLowerBound": self.certified_lower_bound,
            "actualUnion": self.actual_union,
            "finalRatio": self.constant,
            "smallQ": self.small_q,
            "warnings": self.warnings,
        }


def _plane_test(table: IncidenceTable, ids: np.ndarray, plane: Flat):
    """For the given lines: (meets-or-parallel, contained, Mv, c - Ma)."""
    q = table.q
    M = np.array(plane.equations[0], dtype=np.int64)
    c = np.array(plane.equations[1], dtype=np.int64)
    mv = table.dirs[ids] @ M.T % q
    r = (c[None, :] - table.anchors[ids] @ M.T) % q
    meets = (mv[:, 0] * r[:, 1] - mv[:, 1] * r[:, 0]) % q == 0
    inside = ~mv.any(axis=1) & ~r.any(axis=1)
    return meets, inside, mv, r


def _check_hypotheses(fam: LineFamily, table: IncidenceTable):
    if fam.n != 4:
        raise UnsupportedDimension(f"planebrush runs in F_q^4, got n={fam.n}")
    plany = planiness_check(fam, table)
    if not plany.plany:
        p, ls = plany.violation
        raise NotPlany(f"lines through {p} span more than a plane", witness=plany.violation)
    report = wolff_axiom_report(fam, table)
    if not report.ok:
        which = report.failed()[0]
        witness = {"twoFlat": report.witness_2flat, "threeFlat": report.witness_3flat}.get(which)
        raise HypothesisFailed(which, f"Wolff bound {which} fails: {report.to_dict()[_REPORT_KEY[which]]}", witness)
    return plany, report


_REPORT_KEY = {"twoFlat": "maxLinesInSome2Flat", "threeFlat": "maxLinesInSome3Flat", "familySize": "familySize"}


def planebrush_bound(
    fam: LineFamily,
    table: IncidenceTable | None = None,
    planiness: PlaninessResult | None = None,
) -> PlanebrushCertificate:
    table = table or IncidenceTable(fam)
    if planiness is None:
        planiness, _ = _check_hypotheses(fam, table)
    q, L = table.q, len(table)
    assignment = planiness.plane_assignment
    alive = np.ones(L, dtype=bool)
    iterations: list[PlanebrushIteration] = []
    extracted = 0
    certified = 0

    while alive.any():
        w_ids = np.flatnonzero(alive)
        pts = table.pts[w_ids]
        mu = np.bincount(pts.ravel(), minlength=table.size)
        lw = len(w_ids)
        x_size = int((mu > 0).sum())
        total = q * lw

        # the multiplicity filter keeps most incidences
        thr = max(1, total // (100 * x_size))
        xp = mu >= thr
        retained = int(mu[xp].sum())
        discarded = int(mu[~xp].sum())
        if retained + discarded != total:
            raise InvariantViolation("multiplicity filter incidences do not add up to q|L|")

        # base point
        on_xp = xp[pts].sum(axis=1)
        good = 2 * on_xp >= q
        g = np.bincount(pts[good].ravel(), minlength=table.size)
        ok = np.flatnonzero(xp & (2 * g >= mu))
        deviation = len(ok) == 0
        if not deviation:
            x1 = int(ok[0])
        else:
            cand = np.flatnonzero(xp)
            x1 = int(max(cand, key=lambda i: (Fraction(int(g[i]), int(mu[i])), -i)))
        bush_local = np.flatnonzero((pts == x1).any(axis=1))
        x1_point = table.decode(x1)

        # base plane from planiness
        plane_dev = x1_point not in assignment
        if not plane_dev:
            plane = assignment[x1_point]
        else:
            only = table.lines[w_ids[bush_local[0]]]
            scored = []
            for cand_plane in flats_through_line(only):
                meets, inside, _, _ = _plane_test(table, w_ids, cand_plane)
                scored.append((-int(meets.sum()), -int(inside.sum()), cand_plane))
            plane = min(scored, key=lambda s: (s[0], s[1], s[2]))[2]
        meets, inside, mv, r = _plane_test(table, w_ids, plane)
        if not meets[bush_local].all() or not inside[bush_local].all():
            raise InvariantViolation("bush at the base point leaves its plane")
        l1_local = np.flatnonzero(meets)

        # bush count: lines through bush points in X'
        bush_mask = np.zeros(table.size, dtype=bool)
        bush_mask[pts[bush_local].ravel()] = True
        bush_mask[x1] = False
        bush_mask &= xp
        term1 = int(mu[bush_mask].sum())
        hits = bush_mask[pts].sum(axis=1)
        union = int((hits > 0).sum())
        if not meets[hits > 0].all():
            raise InvariantViolation("a line through the bush is not in L_1")
        multi = hits >= 2
        if not inside[multi].all():
            raise InvariantViolation("a doubly counted bush line is not inside the base plane")

        it = PlanebrushIteration(
            index=len(iterations),
            lines=lw,
            x_size=x_size,
            avg_multiplicity=Fraction(total, x_size),
            x_prime_threshold=thr,
            x_prime_size=int(xp.sum()),
            retained=retained,
            discarded=discarded,
            base_point=x1_point,
            base_point_mu=int(mu[x1]),
            base_point_good_lines=int(g[x1]),
            base_point_deviation=deviation,
            base_plane=plane,
            base_plane_deviation=plane_dev,
            l1=len(l1_local),
            l0=int(inside.sum()),
            bush_points=int(bush_mask.sum()),
            bush_count_term1=term1,
            bush_count_union=union,
            bush_count_overcount=term1 - union,
            bound_first_term=Fraction(q**3 * lw * lw, 10**5 * x_size * x_size),
            bound_second_term=2 * q * q,
            double_count_checked=int(multi.sum()),
            case_taken="",
        )
        iterations.append(it)

        if union == 0:
            it.case_taken = EARLY_EXIT
            bush_size = 1 + int(mu[x1]) * (q - 1)
            it.terminal_lower_bound = bush_size
            it.terminal_constant = root_constant(x_size, lw, q, 2)
            certified += bush_size
            break

        l1_pts = pts[l1_local]
        mu1 = np.bincount(l1_pts.ravel(), minlength=table.size)
        s = q * len(l1_local)
        s_prime = int((mu1 == 1).sum())
        if 2 * s_prime >= s:
            it.case_taken = CASE1
            it.terminal_lower_bound = s_prime
            it.terminal_constant = root_constant(s_prime, lw, q, 3)
            certified += s_prime
            break

        it.case_taken = CASE2
        it.case2 = _case2(table, w_ids, l1_local, mu, mu1, plane, inside, mv, r, s, s_prime)
        certified += it.case2.p1_prime_lower_bound
        extracted += len(l1_local)
        alive[w_ids[l1_local]] = False

    remainder = int(alive.sum())
    if extracted + remainder != L:
        raise InvariantViolation("line conservation across iterations fails")
    actual = int(table.union_mask.sum())
    if certified > actual:
        raise InvariantViolation(f"certified bound {certified} exceeds the union {actual}")
    small = fam.modulus.small_q
    warn = ["small-q regime: q <= 600, density thresholds floored at 1"] if small else []
    if any(it.base_point_deviation for it in iterations):
        warn.append("no point met the half-lines condition exactly; best-ratio base point used")
    if any(it.base_plane_deviation for it in iterations):
        warn.append("base point on a single family line; base plane chosen to maximize L_1")
    return PlanebrushCertificate(
        q=q,
        family_size=L,
        iterations=iterations,
        extracted=extracted,
        terminal_remainder=remainder,
        certified_lower_bound=certified,
        actual_union=actual,
        constant=root_constant(actual, L, q, 3),
        small_q=small,
        warnings=warn,
    )


def _case2(table, w_ids, l1_local, mu, mu1, plane, inside, mv, r, s, s_prime) -> Case2Record:
    q = table.q
    pts = table.pts[w_ids]
    p1 = mu1 >= 2
    # closure of P_1': every working line through a point of P_1' is in L_1
    closure = bool((mu[p1] == mu1[p1]).all())
    if not closure:
        raise InvariantViolation("closure of P_1' fails: a point of P_1' lies on a line outside L_1")

    l1_thr = max(1, q // 200)
    on_p1 = p1[pts[l1_local]].sum(axis=1)
    keep = on_p1 >= l1_thr
    lp = l1_local[keep]
    mass_in = int(on_p1[keep].sum())
    mass_out = int(on_p1[~keep].sum())
    if mass_in + mass_out != s - s_prime:
        raise InvariantViolation("incidences on P_1' do not add up to |S''|")

    in_pi = inside[lp]
    pi_ids = lp[in_pi]
    alpha_ids = lp[~in_pi]
    cord = None
    lower = 0
    fam = table.family
    if len(pi_ids):
        sub = fam.subfamily([table.lines[w_ids[i]] for i in pi_ids])
        cord = cordoba_prime(sub, X=p1, threshold=l1_thr, n_select="best")
        lower += cord.lower_bound

    leaves: list[AlphaLeaf] = []
    if len(alpha_ids):
        # 3-flats through the plane <-> directions of F_q^4 / dir(plane), seen through M
        img = np.where(mv[alpha_ids].any(axis=1)[:, None], mv[alpha_ids], r[alpha_ids])
        codes = encode_rows(canonicalize_rows(img, q), q)
        free = [c for c in range(4) if c not in plane.pivots]
        pi_mask = np.zeros(table.size, dtype=bool)
        pi_mask[[table.encode(p) for p in plane.points()]] = True
        off_plane = p1 & ~pi_mask
        for code in np.unique(codes):
            members = alpha_ids[codes == code]
            u = canonicalize_rows(img[codes == code][:1], q)[0]
            w = [0] * 4
            for col, val in zip(free, u):
                w[col] = int(val)
            flat = span_flat(plane.anchor, [*plane.basis, w], q)
            counts = off_plane[pts[members]].sum(axis=1)
            live = members[counts > 0]
            hb = None
            if len(live):
                sub = fam.subfamily([table.lines[w_ids[i]] for i in live])
                xa = np.zeros(table.size, dtype=bool)
                for i in live:
                    row = pts[i]
                    xa[row[off_plane[row]]] = True
                hb = hairbrush_bound(sub, X=xa, line_threshold=1, check_hypotheses=False)
                lower += hb.union_lower_bound
            leaves.append(AlphaLeaf(flat, len(members), int(len(members) - len(live)), hb))
        leaves.sort(key=lambda lf: lf.flat)

    if len(pi_ids) + sum(lf.lines for lf in leaves) != len(lp):
        raise InvariantViolation("L_1' does not decompose into L_Pi and the L_alpha")
    p1_size = int(p1.sum())
    if lower > p1_size:
        raise InvariantViolation(f"|P_1'| = {p1_size} below its certified bound {lower}")
    return Case2Record(
        s=s,
        s_prime=s_prime,
        s_double=s - s_prime,
        p1_prime=p1_size,
        closure_verified=closure,
        closure_points_checked=p1_size,
        l1_prime_threshold=l1_thr,
        l1_prime=len(lp),
        mass_in_l1_prime=mass_in,
        mass_outside_l1_prime=mass_out,
        l_pi=len(pi_ids),
        cordoba=cord,
        leaves=leaves,
        p1_prime_lower_bound=lower,
        constant=root_constant(p1_size, len(l1_local), q, 3),
    )
