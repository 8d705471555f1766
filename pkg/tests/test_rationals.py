"""Rational arcs: reduction, Dirichlet approximation, Farey sets, the
modulation windows X_j, the joint neighborhoods, and denominator blocks.
"""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from carleson.rationals import (
    ArcPair,
    ArcParams,
    ReducedRational,
    dirichlet_approx,
    divisor_count,
    enumerate_Rs,
    farey_set,
    in_Mj,
    in_Xj,
    lcm_range,
    mj_candidates,
    reduce,
    rs_block,
)


# ==================== oracles ====================


def brute_best_rational(x: float, Q: int):
    """Smallest denominator q <= Q whose nearest fraction satisfies the
    Dirichlet bound |x - a/q| <= 1/(qQ)."""
    for q in range(1, Q + 1):
        a = math.floor(x * q + 0.5)
        if abs(x - a / q) <= 1.0 / (q * Q):
            return Fraction(a, q)
    return None


def brute_farey_count(Q: int) -> int:
    return 1 + sum(
        sum(1 for a in range(1, q) if math.gcd(a, q) == 1)
        for q in range(2, Q + 1)
    )


def brute_rs_count(s: int, n: int) -> int:
    total = 0
    for q in rs_block(s):
        for a in range(q):
            for b in np.ndindex(*(q,) * n):
                if math.gcd(a, *b, q) == 1:
                    total += 1
    return total


# ==================== reduction ====================


def test_reduce_examples():
    assert reduce(2, 4) == ReducedRational(1, 2)
    assert reduce(-3, -9) == ReducedRational(1, 3)
    assert reduce(0, 7) == ReducedRational(0, 1)
    assert reduce(5, -10) == ReducedRational(-1, 2)
    with pytest.raises(ZeroDivisionError):
        reduce(1, 0)


@given(st.integers(-10**9, 10**9), st.integers(-10**9, 10**9))
def test_reduce_canonical(num, den):
    if den == 0:
        return
    r = reduce(num, den)
    assert r.den >= 1
    assert math.gcd(r.num, r.den) == 1
    assert Fraction(r.num, r.den) == Fraction(num, den)


def test_reduced_rational_rejects_non_reduced():
    with pytest.raises(ValueError):
        ReducedRational(2, 4)
    with pytest.raises(ValueError):
        ReducedRational(1, 0)


def test_arc_pair_canonical():
    p = ArcPair(2, (1,), 4)  # gcd(2,1,4)=1; coordinates need not reduce
    assert p.alpha == 0.5 and p.n == 1
    with pytest.raises(ValueError):
        ArcPair(2, (2,), 4)  # gcd 2
    with pytest.raises(ValueError):
        ArcPair(4, (1,), 4)  # a outside [0, q)


# ==================== dirichlet approximation ====================


@given(
    st.floats(min_value=0.0, max_value=1.0, exclude_max=True),
    st.integers(1, 300),
)
@settings(max_examples=300)
def test_dirichlet_bound(x, Q):
    r = dirichlet_approx(x, Q)
    assert 1 <= r.den <= Q
    assert abs(x - r.value) <= 1.0 / (r.den * Q) + 1e-15


@given(
    st.floats(min_value=0.0, max_value=1.0, exclude_max=True),
    st.integers(1, 60),
)
@settings(max_examples=150)
def test_dirichlet_matches_smallest_denominator(x, Q):
    r = dirichlet_approx(x, Q)
    best = brute_best_rational(x, Q)
    assert best is not None
    assert r.den == best.denominator


def test_dirichlet_exact_rational():
    r = dirichlet_approx(3 / 7, 50)
    assert (r.num, r.den) == (3, 7)


# ==================== farey sets and blocks ====================


@pytest.mark.parametrize("Q", [1, 2, 5, 12, 40])
def test_farey_count_and_order(Q):
    fs = farey_set(Q)
    assert len(fs) == brute_farey_count(Q)
    vals = [f.as_fraction() for f in fs]
    assert vals == sorted(vals)
    assert len(set(vals)) == len(vals)
    assert all(0 <= f.value < 1 for f in fs)


def test_rs_blocks_tile_denominators():
    params = ArcParams(d=1, n=1, eps1=0.25, eps2=0.3)
    for j in (4, 8, 11, 16):
        covered = []
        for s in range(1, params.s_max(j) + 1):
            covered.extend(rs_block(s))
        assert covered == list(range(1, params.aj_denominator_bound(j)))


def test_s_max_floor():
    params = ArcParams(d=1, n=1, eps1=0.25, eps2=0.3)
    assert params.s_max(11) == 2  # floor(2.75)
    assert params.s_max(12) == 3
    assert params.s_max(3) == 0  # no blocks below s=1
    assert params.aj_denominator_bound(3) == 1  # empty family


@pytest.mark.parametrize("s,n", [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2)])
def test_enumerate_rs_matches_brute_count(s, n):
    triples = enumerate_Rs(s, n)
    assert len(triples) == brute_rs_count(s, n)
    assert all(math.gcd(t.a, *t.b, t.q) == 1 for t in triples)
    assert all(t.q in rs_block(s) for t in triples)
    assert len(set((t.a, t.b, t.q) for t in triples)) == len(triples)


def test_lcm_range_values():
    assert lcm_range(1) == 2
    assert lcm_range(2) == 12
    assert lcm_range(3) == 840
    for s in (4, 5, 6):
        lo, hi = 1 << (s - 1), 1 << s
        acc = 1
        for q in range(lo, hi + 1):
            acc = acc * q // math.gcd(acc, q)
        assert lcm_range(s) == acc
    with pytest.raises(OverflowError):
        lcm_range(7)


@given(st.integers(1, 5000))
def test_divisor_count(q):
    assert divisor_count(q) == sum(1 for t in range(1, q + 1) if q % t == 0)


# ==================== modulation windows ====================


def test_in_xj_membership_and_boundary():
    params = ArcParams(d=1, n=1, eps1=0.25, eps2=0.3)
    j = 8
    w = params.xj_halfwidth(j)
    hit = in_Xj(1 / 3 + 0.5 * w, j, params)
    assert (hit.num, hit.den) == (1, 3)
    assert in_Xj(1 / 3 + 2.5 * w, j, params) is None
    # closed boundary: lam exactly at the edge stays a member
    edge = in_Xj(0.5 + w, j, params)
    assert (edge.num, edge.den) == (1, 2)


def test_in_xj_respects_denominator_bound():
    params = ArcParams(d=1, n=1, eps1=0.25, eps2=0.3)
    j = 8  # denominators below 2^2 = 4 only
    assert params.aj_denominator_bound(j) == 4
    w = params.xj_halfwidth(j)
    assert in_Xj(1 / 5 + 0.1 * w, j, params) is None  # q=5 not admitted
    hit = in_Xj(1 / 3 - 0.9 * w, j, params)
    assert (hit.num, hit.den) == (1, 3)


def test_in_mj_unique_and_empty():
    params = ArcParams(d=1, n=1, eps1=0.25, eps2=0.3)
    j = 10  # joint denominators below 2^3 = 8
    lam_w = 2.0 ** (-2 * j + params.eps2 * j)
    xi_w = 2.0 ** (-j + params.eps2 * j)
    pair = in_Mj(0.5 + 0.3 * lam_w, [1 / 3 + 0.3 * xi_w], j, params)
    assert (pair.a, pair.b, pair.q) == (3, (2,), 6)
    assert in_Mj(0.5 + 5 * lam_w, [0.123456], j, params) is None
    hits = mj_candidates(0.5 + 0.3 * lam_w, [1 / 3], j, params)
    assert len(hits) == 1


@given(st.floats(0, 1, exclude_max=True), st.integers(5, 11))
@settings(max_examples=200)
def test_xj_window_uniqueness(lam, j):
    params = ArcParams(d=1, n=1, eps1=0.25, eps2=0.3)
    hit = in_Xj(lam, j, params)
    if hit is not None:
        assert 1 <= hit.den < params.aj_denominator_bound(j)
        assert abs(lam - hit.value) <= params.xj_halfwidth(j)
