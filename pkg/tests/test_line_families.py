import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from kakeya_lab.errors import CapExceeded, DomainMismatch, EmptyFamily, FamilyParseError, NotPrime
from kakeya_lab.field_geometry import PrimeModulus, flat_contains_line, line_new, line_points, span_flat
from kakeya_lab.incidence_axioms import planiness_check, wolff_axiom_report
from kakeya_lab.line_families import (
    LineFamily,
    PointSet,
    bush_family,
    format_family,
    kakeya_family,
    load_family,
    parallel_pencil_family,
    parse_family,
    plane_pencil_family,
    random_family,
    save_family,
    union_points,
)
from kakeya_lab.rng import SplitMix64


def fam_of(q, n, *specs):
    m = PrimeModulus(q, n)
    return LineFamily(m, tuple(line_new(p, v, q) for p, v in specs))


def test_splitmix_reference_values():
    # first outputs for seed 0 of the standard SplitMix64 generator
    r = SplitMix64(0)
    assert [r.next_u64() for _ in range(3)] == [0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_splitmix_below_and_shuffle_are_deterministic():
    a, b = SplitMix64(42), SplitMix64(42)
    assert [a.below(7) for _ in range(50)] == [b.below(7) for _ in range(50)]
    xs, ys = list(range(20)), list(range(20))
    SplitMix64(3).shuffle(xs)
    SplitMix64(3).shuffle(ys)
    assert xs == ys and sorted(xs) == list(range(20))


def test_family_invariants():
    f = fam_of(5, 2, ((0, 0), (1, 1)), ((2, 2), (3, 3)), ((0, 1), (1, 0)))
    assert len(f) == 2
    assert list(f) == sorted(f)
    with pytest.raises(EmptyFamily):
        LineFamily(PrimeModulus(5, 2), ())
    with pytest.raises(DomainMismatch):
        LineFamily(PrimeModulus(5, 3), (line_new((0, 0), (1, 0), 5),))
    with pytest.raises(DomainMismatch):
        PointSet(PrimeModulus(5, 3), frozenset({(0, 0)}))


def test_union_points_examples():
    assert len(union_points(fam_of(7, 2, ((0, 0), (1, 2))))) == 7
    assert len(union_points(bush_family((0, 0), PrimeModulus(3, 2)))) == 9
    assert len(union_points(fam_of(5, 2, ((0, 0), (1, 0)), ((0, 0), (0, 1))))) == 9


@settings(max_examples=60)
@given(st.sampled_from([3, 5, 7]), st.integers(2, 4), st.integers(1, 30), st.integers(0, 2**32))
def test_union_points_oracle(q, n, count, seed):
    fam = random_family(PrimeModulus(q, n), min(count, q ** (n - 1)), seed)
    sets = [oracles.line_set(l.anchor, l.direction, q) for l in fam]
    assert len(union_points(fam)) == oracles.union_size(sets)


@pytest.mark.parametrize("q, n", [(3, 2), (3, 3), (3, 4), (5, 3)])
def test_bush_family(q, n):
    fam = bush_family((1,) * n, PrimeModulus(q, n))
    assert len(fam) == (q**n - 1) // (q - 1)
    sets = [frozenset(line_points(l)) for l in fam]
    assert len(union_points(fam)) == oracles.union_size(sets) == q**n


def test_bush_examples():
    assert len(bush_family((0, 0), PrimeModulus(3, 2))) == 4
    assert len(bush_family((0, 0, 0, 0), PrimeModulus(3, 4))) == 40


@pytest.mark.parametrize("q, expected", [(3, 12), (7, 56)])
def test_plane_pencil(q, expected):
    plane = span_flat((0, 0, 1), [(1, 0, 0), (0, 1, 0)], q)
    fam = plane_pencil_family(plane)
    assert len(fam) == expected == q * (q + 1)
    assert all(flat_contains_line(plane, l) for l in fam)
    brute = {s for s in oracles.all_lines(q, 3) if s <= frozenset(plane.points())} if q == 3 else None
    if brute is not None:
        assert {frozenset(line_points(l)) for l in fam} == brute


@pytest.mark.parametrize("q", [3, 5, 7, 11])
def test_parallel_pencil_plany_for_every_cap(q):
    m = PrimeModulus(q, 4)
    caps = range(1, q + 2) if q <= 5 else (1, 2, q, q + 1)
    for cap in caps:
        fam = parallel_pencil_family(None, m, cap)
        assert len(fam) == q * q * cap
        assert planiness_check(fam).plany


def test_parallel_pencil_examples(pencil5):
    assert len(pencil5) == 150
    assert planiness_check(pencil5).plany
    assert wolff_axiom_report(pencil5).max_lines_in_2flat == 6
    fam3 = parallel_pencil_family(None, PrimeModulus(3, 4), 4)
    assert len(fam3) == 36 <= 4 * 27
    with pytest.raises(CapExceeded):
        parallel_pencil_family(None, PrimeModulus(5, 4), 7)
    # default cap is q + 1
    assert len(parallel_pencil_family(None, PrimeModulus(3, 4))) == 36


def test_parallel_pencil_custom_direction_plane():
    m = PrimeModulus(5, 4)
    fam = parallel_pencil_family([(1, 1, 0, 0), (0, 0, 1, 3)], m, 3)
    assert len(fam) == 75 and planiness_check(fam).plany
    dirs = span_flat((0,) * 4, [(1, 1, 0, 0), (0, 0, 1, 3)], 5)
    assert all(flat_contains_line(dirs, line_new((0,) * 4, l.direction, 5)) for l in fam)


def test_random_family():
    m = PrimeModulus(5, 3)
    assert random_family(m, 10, 1) == random_family(m, 10, 1)
    d = random_family(m, 31, 7, distinct_directions=True)
    assert len({l.direction for l in d}) == 31
    assert len(random_family(m, 1, 3)) == 1
    with pytest.raises(CapExceeded):
        random_family(m, 32, 0, distinct_directions=True)
    with pytest.raises(CapExceeded):
        random_family(PrimeModulus(3, 2), 13, 0)


def test_kakeya_family_has_every_direction():
    fam = kakeya_family(PrimeModulus(7, 2), 5)
    assert len(fam) == 8 and len({l.direction for l in fam}) == 8
    assert fam == kakeya_family(PrimeModulus(7, 2), 5)


# --- file format ----------------------------------------------------------


def test_round_trip(tmp_path, pencil5):
    path = tmp_path / "f.txt"
    save_family(pencil5, path)
    back = load_family(path)
    assert back == LineFamily(pencil5.modulus, pencil5.lines, back.label)
    assert format_family(back) == path.read_text()


def test_reader_canonicalizes_and_dedups():
    text = "5 2 3\n1 1 ; 2 2\n0 0 ; 1 1\n0 1 ; 3 0\n"
    with pytest.warns(UserWarning, match="duplicate"):
        fam = parse_family(text)
    assert len(fam) == 2
    assert format_family(fam) == "5 2 2\n0 1 ; 1 0\n0 0 ; 1 1\n"


def test_reader_rejects_non_prime():
    with pytest.raises(NotPrime):
        parse_family("9 2 1\n0 0 ; 1 0\n")


@pytest.mark.parametrize(
    "text, line, col",
    [
        ("", 1, 1),
        ("5 2\n", 1, 1),
        ("5 2 2\n0 0 ; 1 0\n", 1, 1),
        ("5 2 1\n0 0 1 0\n", 2, 1),
        ("5 2 1\n0 x ; 1 0\n", 2, 3),
        ("5 2 1\n0 0 ; 1 7\n", 2, 9),
        ("5 2 1\n0 0 ; 0 0\n", 2, 6),
        ("5 2 1\n0 0 0 ; 1 0\n", 2, 1),
    ],
)
def test_reader_errors_carry_location(text, line, col):
    with pytest.raises(FamilyParseError) as info:
        parse_family(text)
    assert (info.value.line, info.value.column) == (line, col)


def test_reader_accepts_clean_file_without_warning():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        parse_family("3 2 1\n0 0 ; 1 1\n")
