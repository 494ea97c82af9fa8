"""Number-theoretic kernels: totients, Ramanujan and Gauss sums, divisor
statistics, Dirichlet approximation and major/minor arc classification."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

IMAG_TOL = 1e-9


class ConsistencyError(ArithmeticError):
    """A quantity that must be real came out with a large imaginary part."""


def totient(q: int) -> int:
    if q < 1:
        raise ValueError("q must be >= 1")
    result, m, p = q, q, 2
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            result -= result // p
        p += 1
    if m > 1:
        result -= result // m
    return result


def totients_upto(n: int) -> np.ndarray:
    """phi(0..n) by sieve (phi(0) is set to 0)."""
    phi = np.arange(n + 1, dtype=np.int64)
    for p in range(2, n + 1):
        if phi[p] == p:  # p is prime
            phi[p::p] -= phi[p::p] // p
    return phi


def coprime_residues(q: int) -> np.ndarray:
    """J_q = {1 <= a <= q : gcd(a, q) = 1}."""
    a = np.arange(1, q + 1)
    return a[np.gcd(a, q) == 1]


def _phase(num: np.ndarray, q: int) -> np.ndarray:
    """e(num / q) with the numerator reduced mod q first."""
    return np.exp(2j * np.pi * (np.mod(num, q) / q))


def ramanujan_sum(q: int, k: int) -> float:
    """c_q(k) = sum over a in J_q of e(-a k / q).

    The sum is an integer; after checking the imaginary residue the real part
    is rounded to it.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    a = coprime_residues(q).astype(np.int64)
    z = _phase(-a * (int(k) % q), q).sum()
    if abs(z.imag) > IMAG_TOL * max(1.0, len(a)):
        raise ConsistencyError(f"c_{q}({k}) has imaginary part {z.imag}")
    r = round(z.real)
    if abs(z.real - r) > IMAG_TOL * max(1.0, len(a)):
        raise ConsistencyError(f"c_{q}({k}) = {z.real} is not an integer")
    return float(r)


def gauss_sum(q: int, a: int) -> complex:
    """S(q, a) = sum_{n=1}^{q} e(n^2 a / q), for gcd(a, q) = 1."""
    if q < 1 or math.gcd(a, q) != 1:
        raise ValueError(f"need q >= 1 and gcd(a, q) = 1, got q={q}, a={a}")
    n = np.arange(1, q + 1, dtype=np.int64)
    return complex(_phase((n * n % q) * (a % q), q).sum())


def divisor_count(k: int, M: int) -> int:
    """Number of divisors d of k with 1 <= d < M; every such d divides 0."""
    k = abs(int(k))
    if k == 0:
        return max(M - 1, 0)
    return sum(1 for d in range(1, min(M - 1, k) + 1) if k % d == 0)


def divisor_counts_upto(N: int, M: int) -> np.ndarray:
    """d(k, M) for k = 0..N."""
    counts = np.zeros(N + 1, dtype=np.int64)
    for d in range(1, M):
        counts[::d] += 1
    return counts


def divisor_tail_count(N: int, M: int, D: float) -> int:
    """#{0 <= k <= N : d(k, M) > D}."""
    if N < 0 or M < 1:
        raise ValueError("need N >= 0 and M >= 1")
    return int(np.count_nonzero(divisor_counts_upto(N, M) > D))


def divisor_tail_constant(N: int, M: int, D: float, beta: float, B: float) -> float:
    """Empirical constant c in  tail(N, M, D) <= c (D^-B M^beta N + M^B)."""
    return divisor_tail_count(N, M, D) / (D ** (-B) * M ** beta * N + M ** B)


# ---------------------------------------------------------------- approximation

@dataclass(frozen=True)
class RationalApprox:
    a: int
    q: int
    err: float
    coprime: bool = True

    @property
    def value(self) -> float:
        return self.a / self.q


def dist_to_int(x):
    """||x||, distance to the nearest integer (works on arrays)."""
    return np.abs(x - np.round(x))


def _frac_dist(t: Fraction, a: int, q: int) -> Fraction:
    x = t - Fraction(a, q)
    return abs(x - round(x))


def dirichlet_approx(t: float, Qmax: int) -> RationalApprox:
    """Rational a/q with q <= Qmax and ||t - a/q|| <= 1/(q Qmax).

    Walks the continued fraction of the exact binary value of t and keeps the
    last convergent with q <= Qmax, then sweeps the intermediate fractions
    between it and the next convergent for a strictly better admissible one.
    """
    if Qmax < 1:
        raise ValueError("Qmax must be >= 1")
    x = Fraction(float(t)) % 1
    # convergents p/q of x
    p0, q0, p1, q1 = 0, 1, 1, 0
    y = x
    nxt = None
    while True:
        ai = math.floor(y)
        p2, q2 = ai * p1 + p0, ai * q1 + q0
        if q2 > Qmax:
            nxt = (ai, p0, q0)
            break
        p0, q0, p1, q1 = p1, q1, p2, q2
        frac = y - ai
        if frac == 0:
            break
        y = 1 / frac
    best_a, best_q = p1, q1
    best_err = _frac_dist(x, best_a, best_q)
    if nxt is not None:
        ai, pp, qq = nxt
        # best intermediate fraction (j p1 + pp) / (j q1 + qq), 1 <= j < ai
        j = min(ai - 1, (Qmax - qq) // q1)
        if j >= 1:
            pj, qj = j * p1 + pp, j * q1 + qq
            e = _frac_dist(x, pj, qj)
            if e < best_err and e * qj * Qmax <= 1:
                best_a, best_q, best_err = pj, qj, e
    a, q = best_a % best_q, best_q
    if a == 0:
        a = q
    g = math.gcd(a, q)
    return RationalApprox(a // g, q // g, float(_frac_dist(x, a, q)), True)


@dataclass(frozen=True)
class Major:
    q: int
    a: int


@dataclass(frozen=True)
class Minor:
    pass


MINOR = Minor()


def major_halfwidth(N: int) -> float:
    return 1.0 / (100.0 * N * N)


def classify_arc(t: float, N: int) -> Major | Minor:
    """Major(q, a) if ||t - a/q|| <= 1/(100 N^2) for some coprime a/q, q <= N.

    Ties (possible only at rounding level) go to the smallest q, then a.
    """
    w = major_halfwidth(N)
    for q in range(1, N + 1):
        c = round(t * q)
        hits = sorted({x % q or q for x in (c - 1, c, c + 1)
                       if math.gcd(x % q or q, q) == 1 and dist_to_int(t - x / q) <= w})
        if hits:
            return Major(q, hits[0])
    return MINOR
