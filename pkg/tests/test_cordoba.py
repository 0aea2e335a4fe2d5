import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from kakeya_lab.bound_engines import best_prefix, cordoba_lower_bound, cordoba_prime
from kakeya_lab.errors import PreconditionFailed
from kakeya_lab.field_geometry import PrimeModulus, line_new, line_points
from kakeya_lab.line_families import LineFamily, kakeya_family, random_family


def test_three_sets_of_five():
    sets = [set(range(0, 5)), set(range(4, 9)), {0} | set(range(9, 13))]
    cert = cordoba_lower_bound(sets)
    assert (cert.n_sets, cert.sum_sizes, cert.lower_bound) == (3, 15, 12)
    assert cert.actual_union == 13


def test_single_set():
    cert = cordoba_lower_bound([range(7)])
    assert cert.lower_bound == cert.actual_union == 7


def test_empty_system():
    cert = cordoba_lower_bound([])
    assert cert.lower_bound == cert.actual_union == 0


def test_pairwise_violation_names_the_pair():
    with pytest.raises(PreconditionFailed) as info:
        cordoba_lower_bound([{1, 2}, {3}, {1, 2, 4}])
    assert info.value.witness == (0, 2)


@settings(max_examples=300)
@given(st.integers(0, 2**32))
def test_random_systems_exact(seed):
    sets = oracles.random_set_system(random.Random(seed))
    cert = cordoba_lower_bound(sets)
    assert cert.actual_union == oracles.union_size(sets)
    assert cert.lower_bound == sum(map(len, sets)) - len(sets) * (len(sets) - 1) // 2
    assert cert.actual_union >= cert.lower_bound


@pytest.mark.parametrize("c", [1, 2, 3])
def test_proportional_form(c):
    # N lines of F_q^2 with distinct directions through distinct points
    q = 13
    fam = kakeya_family(PrimeModulus(q, 2), 4)
    sets = [frozenset(line_points(l)) for l in list(fam)[:4]]
    cert = cordoba_lower_bound(sets, c)
    if min(map(len, sets)) >= c * len(sets):
        assert cert.consequence_bound == (1 - Fraction(1, 2 * c)) * sum(map(len, sets))
        assert cert.actual_union >= cert.consequence_bound
    else:
        assert cert.consequence_bound is None


def test_proportional_form_absent_when_sets_small():
    assert cordoba_lower_bound([{1}, {2}, {3}], 1).consequence_bound is None


@given(st.lists(st.integers(0, 40), max_size=25))
def test_best_prefix_is_optimal(sizes):
    sizes = sorted(sizes, reverse=True)
    value = lambda k: sum(sizes[:k]) - k * (k - 1) // 2  # noqa: E731
    best = best_prefix(sizes)
    assert value(best) == max(value(k) for k in range(len(sizes) + 1))


def test_prime_q_plus_one_lines_q7():
    q = 7
    fam = kakeya_family(PrimeModulus(q, 2), 1)
    cert = cordoba_prime(fam)
    sets = [frozenset(line_points(l)) for l in fam]
    assert cert.actual_union == oracles.union_size(sets)
    assert cert.actual_union >= cert.lower_bound
    assert 2 * cert.actual_union >= q * q
    assert cert.n_sets == 1 and cert.small_q and cert.warnings


def test_prime_one_line():
    fam = LineFamily(PrimeModulus(11, 3), (line_new((1, 2, 3), (0, 1, 4), 11),))
    cert = cordoba_prime(fam)
    assert cert.lower_bound == 11 and cert.x_size == 11


def test_prime_best_prefix_on_kakeya_family():
    q = 13
    fam = kakeya_family(PrimeModulus(q, 2), 9)
    cert = cordoba_prime(fam, n_select="best")
    # N = q and N = q + 1 tie; the shorter prefix is kept
    assert cert.n_sets == q
    assert cert.lower_bound == q * q - q * (q - 1) // 2
    assert cert.actual_union >= cert.lower_bound


def test_prime_threshold_violation():
    q = 7
    fam = kakeya_family(PrimeModulus(q, 2), 2)
    X = line_points(fam.lines[0])
    cordoba_prime(fam, X)  # every line meets X, default threshold is 1
    with pytest.raises(PreconditionFailed) as info:
        cordoba_prime(fam, X, threshold=2)
    assert info.value.witness in fam.lines and info.value.witness != fam.lines[0]


def test_prime_too_many_lines():
    fam = random_family(PrimeModulus(3, 2), 7, 1)
    with pytest.raises(PreconditionFailed, match="2q"):
        cordoba_prime(fam)


def test_prime_selection_order():
    q = 5
    fam = kakeya_family(PrimeModulus(q, 2), 3)
    X = set(line_points(fam.lines[2])) | set(line_points(fam.lines[4]))
    X |= {p for l in fam for p in line_points(l)[:1]}
    cert = cordoba_prime(fam, X, n_select=2)
    counts = {l: sum(1 for p in line_points(l) if p in X) for l in fam}
    expected = sorted(fam, key=lambda l: (-counts[l], list(fam).index(l)))[:2]
    assert cert.selected == expected
    assert cert.x_size == len(X)
