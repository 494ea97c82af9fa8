import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irrtorus.arith import (MINOR, Major, classify_arc, coprime_residues, divisor_count, divisor_counts_upto,
                            divisor_tail_count, dirichlet_approx, gauss_sum, major_halfwidth, ramanujan_sum,
                            totient, totients_upto)


def mobius(n):
    res, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            res = -res
        p += 1
    return -res if n > 1 else res


def test_totient_examples():
    assert [totient(q) for q in (1, 6, 10)] == [1, 2, 4]
    phi = totients_upto(300)
    assert all(phi[q] == sum(1 for a in range(1, q + 1) if math.gcd(a, q) == 1) for q in range(1, 301))


def test_ramanujan_examples():
    assert ramanujan_sum(1, 17) == 1
    assert ramanujan_sum(12, 0) == totient(12)
    assert ramanujan_sum(6, 2) == -1


def test_ramanujan_direct_sum_small():
    for q in range(1, 30):
        for k in range(-30, 31):
            direct = sum(cmath.exp(-2j * math.pi * a * k / q) for a in range(1, q + 1) if math.gcd(a, q) == 1)
            assert abs(ramanujan_sum(q, k) - direct) < 1e-9


def test_ramanujan_mobius_spot():
    for q, k in [(200, 200), (199, -7), (128, 64), (105, 35)]:
        g = math.gcd(q, k)
        expected = sum(dd * mobius(q // dd) for dd in range(1, g + 1) if g % dd == 0)
        assert ramanujan_sum(q, k) == expected


def test_gauss_examples():
    assert gauss_sum(1, 1) == pytest.approx(1)
    assert abs(gauss_sum(3, 1)) == pytest.approx(math.sqrt(3))
    assert gauss_sum(4, 1) == pytest.approx(2 + 2j)
    with pytest.raises(ValueError):
        gauss_sum(6, 3)


def test_gauss_quadratic_reciprocity_value():
    # classical evaluation for prime p = 1 mod 4: S(p, 1) = sqrt(p)
    for p in (5, 13, 17, 29):
        assert gauss_sum(p, 1) == pytest.approx(math.sqrt(p), abs=1e-9)


def test_divisor_examples():
    assert divisor_count(1, 10) == 1
    assert divisor_count(12, 5) == 4
    assert divisor_count(7, 7) == 1
    assert divisor_count(0, 6) == 5
    assert divisor_tail_count(10, 3, 1) == 6
    assert divisor_tail_count(50, 7, 7) == 0
    assert divisor_tail_count(50, 7, 0) == 51


def test_divisor_counts_upto_matches_pointwise():
    M = 13
    table = divisor_counts_upto(200, M)
    assert all(table[k] == divisor_count(k, M) for k in range(201))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 300), st.integers(1, 20), st.floats(0, 20))
def test_divisor_tail_monotone_in_D(N, M, D):
    assert divisor_tail_count(N, M, D + 0.5) <= divisor_tail_count(N, M, D)


def test_dirichlet_examples():
    r = dirichlet_approx(0.5, 10)
    assert (r.a, r.q, r.err) == (1, 2, 0.0)
    r = dirichlet_approx(1 / 3, 10)
    assert (r.a, r.q) == (1, 3) and r.err < 1e-15
    r = dirichlet_approx(1 / math.pi, 100)
    assert (r.a, r.q) == (7, 22)
    assert r.err == pytest.approx(abs(1 / math.pi - 7 / 22), rel=1e-9)
    assert r.err <= 1 / 2200


def best_brute(t, Qmax):
    """Exhaustive admissible fractions, for cross-checking the guarantee."""
    x = Fraction(t) % 1
    out = []
    for q in range(1, Qmax + 1):
        a = round(x * q)
        err = abs(x - Fraction(a, q))
        if err * q * Qmax <= 1:
            out.append((q, err))
    return out


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1, exclude_max=True), st.integers(1, 300))
def test_dirichlet_guarantee(t, Qmax):
    r = dirichlet_approx(t, Qmax)
    assert 1 <= r.q <= Qmax and 1 <= r.a <= r.q
    assert math.gcd(r.a, r.q) == 1
    x = Fraction(t)
    err = abs(x - Fraction(r.a, r.q))
    err = min(err % 1, 1 - err % 1)
    assert err * r.q * Qmax <= 1
    assert best_brute(t, Qmax)  # Dirichlet: something admissible exists


def test_classify_examples():
    assert classify_arc(0.0, 7) == Major(1, 1)
    assert classify_arc(0.5, 2) == Major(2, 1)
    assert classify_arc(0.6180339887, 10) is MINOR


def test_classify_matches_scan():
    rng = np.random.default_rng(1)
    N = 12
    w = major_halfwidth(N)
    centers = [(a / q, q, a) for q in range(1, N + 1) for a in coprime_residues(q)]
    ts = np.concatenate([rng.random(300), [c + s * 0.9 * w for c, _, _ in centers[:40] for s in (-1, 1)]])
    for t in ts % 1.0:
        hits = sorted((q, int(a)) for c, q, a in centers if abs((t - c + 0.5) % 1 - 0.5) <= w)
        got = classify_arc(float(t), N)
        if hits:
            assert got == Major(*hits[0])
        else:
            assert got is MINOR


def test_major_fraction_small():
    N = 16
    grid = np.arange(20000) / 20000
    frac = np.mean([classify_arc(float(t), N) is not MINOR for t in grid])
    assert frac < 0.02
