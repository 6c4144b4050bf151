"""Arithmetic and lattice laws for the extended naturals."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conebound.extnat import (
    INF,
    TOP,
    Contradiction,
    Interval,
    ext_add,
    ext_ceil_div,
    ext_le,
    ext_max,
    ext_min,
    ext_monus,
    ext_mul,
    meet,
)

extnats = st.one_of(st.integers(min_value=0, max_value=40), st.just(INF))

SMALL = list(range(0, 9)) + [INF]


@st.composite
def interval_values(draw):
    lo = draw(extnats)
    hi = draw(extnats)
    if not ext_le(lo, hi):
        lo, hi = hi, lo
    return Interval(lo, hi)


# -- point cases ---------------------------------------------------------------


def test_add_cases():
    assert ext_add(2, 3) == 5
    assert ext_add(INF, 0) == INF
    assert ext_add(INF, INF) == INF


def test_mul_cases():
    assert ext_mul(2, 3) == 6
    assert ext_mul(INF, 1) == INF
    assert ext_mul(0, INF) == 0
    assert ext_mul(INF, 0) == 0


def test_monus_cases():
    assert ext_monus(5, 2) == 3
    assert ext_monus(2, 5) == 0
    assert ext_monus(INF, 7) == INF
    assert ext_monus(3, INF) == 0
    assert ext_monus(INF, INF) == 0


def test_ceil_div_cases():
    assert ext_ceil_div(7, 2) == 4
    assert ext_ceil_div(6, 3) == 2
    assert ext_ceil_div(INF, 4) == INF
    assert ext_ceil_div(5, INF) == 0
    assert ext_ceil_div(INF, INF) == 0


def test_ceil_div_zero_divisor_is_a_bug():
    with pytest.raises(ValueError):
        ext_ceil_div(3, 0)


def test_interval_rejects_crossed_bounds():
    with pytest.raises(ValueError):
        Interval(3, 2)
    with pytest.raises(ValueError):
        Interval(INF, 5)


def test_meet_cases():
    assert meet(Interval(2, 5), Interval(3, 7)) == Interval(3, 5)
    assert meet(TOP, Interval(1, 1)) == Interval(1, 1)
    result = meet(Interval(4, INF), Interval(0, 2))
    assert isinstance(result, Contradiction)
    assert result.left == Interval(4, INF)
    assert result.right == Interval(0, 2)


# -- algebraic laws --------------------------------------------------------------


@given(extnats, extnats)
def test_add_commutative(a, b):
    assert ext_add(a, b) == ext_add(b, a)


@given(extnats, extnats, extnats)
def test_add_associative(a, b, c):
    assert ext_add(ext_add(a, b), c) == ext_add(a, ext_add(b, c))


@given(extnats, extnats)
def test_mul_commutative(a, b):
    assert ext_mul(a, b) == ext_mul(b, a)


@given(extnats, extnats, extnats)
def test_mul_associative(a, b, c):
    assert ext_mul(ext_mul(a, b), c) == ext_mul(a, ext_mul(b, c))


@given(interval_values())
def test_meet_idempotent(i):
    assert meet(i, i) == i


@given(interval_values(), interval_values())
def test_meet_commutative_where_defined(i, j):
    ij, ji = meet(i, j), meet(j, i)
    if isinstance(ij, Contradiction) or isinstance(ji, Contradiction):
        # emptiness is symmetric even though the carried operands swap
        assert isinstance(ij, Contradiction) and isinstance(ji, Contradiction)
    else:
        assert ij == ji


@given(interval_values(), interval_values(), interval_values())
def test_meet_associative_where_defined(i, j, k):
    left_inner = meet(i, j)
    right_inner = meet(j, k)
    if isinstance(left_inner, Contradiction) or isinstance(right_inner, Contradiction):
        return
    left = meet(left_inner, k)
    right = meet(i, right_inner)
    if isinstance(left, Contradiction) or isinstance(right, Contradiction):
        assert isinstance(left, Contradiction) and isinstance(right, Contradiction)
    else:
        assert left == right


@given(interval_values())
def test_meet_top_identity(i):
    assert meet(i, TOP) == i


@given(extnats, extnats)
def test_order_total(a, b):
    assert ext_le(a, b) or ext_le(b, a)
    assert ext_min(a, b) in (a, b)
    assert ext_max(a, b) in (a, b)


# -- rearrangement soundness, checked against exhaustive enumeration -------------


def test_monus_rearrangement_sound_on_finite_model():
    # independent oracle: brute force over {0..8, inf}^3
    for a in SMALL:
        for b in SMALL:
            for c in SMALL:
                if ext_le(a, ext_add(b, c)):
                    assert ext_le(ext_monus(a, c), b), (a, b, c)


def test_ceil_div_rearrangement_sound_on_finite_model():
    for a in SMALL:
        for b in SMALL:
            for c in SMALL:
                a1, b1, c1 = ext_add(a, 1), ext_add(b, 1), ext_add(c, 1)
                if ext_le(a1, ext_mul(b1, c1)):
                    assert ext_le(ext_ceil_div(a1, c1), b1), (a, b, c)
