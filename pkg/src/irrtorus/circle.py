"""Major/minor arc decomposition of [0, 1) and per-arc moments of the Weyl sum."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arith import coprime_residues, major_halfwidth, totient, totients_upto
from .expsum import grid_mean, weyl_sum_grid


@dataclass(frozen=True)
class MajorArc:
    q: int
    a: int
    center: float
    halfwidth: float


@dataclass(frozen=True)
class ArcDecomposition:
    """Arcs ||t - a/q|| <= 1/(100 N^2), 1 <= a <= q <= N coprime, and the
    minor complement split into m1 (good approximation with small q) and m2."""

    N: int
    eps: float
    majors: tuple

    @property
    def halfwidth(self) -> float:
        return major_halfwidth(self.N)

    @property
    def major_measure(self) -> float:
        return math.fsum(2 * arc.halfwidth for arc in self.majors)

    @property
    def minor_measure(self) -> float:
        return 1.0 - self.major_measure

    @property
    def Qmax(self) -> int:
        return math.ceil(self.N ** (2 - self.eps))

    @property
    def small_q(self) -> int:
        return int(math.floor(self.N ** self.eps + 1e-12))

    def major_index(self, t) -> tuple[np.ndarray, np.ndarray]:
        """(q, a) of the major arc containing each t, or (0, 0) on the minor set.

        Ties go to the smallest q, then a.
        """
        t = np.asarray(t, dtype=np.float64)
        qq = np.zeros(t.shape, dtype=np.int64)
        aa = np.zeros(t.shape, dtype=np.int64)
        w = self.halfwidth
        for q in range(1, self.N + 1):
            a = np.rint(t * q)
            ar = np.mod(a, q).astype(np.int64)
            ar[ar == 0] = q
            hit = (qq == 0) & (np.abs(t - a / q) <= w) & (np.gcd(ar, q) == 1)
            qq[hit] = q
            aa[hit] = ar[hit]
        return qq, aa

    def is_m1(self, t) -> np.ndarray:
        """||t - a/q|| <= 1/(q Qmax) for some q <= N^eps."""
        t = np.asarray(t, dtype=np.float64)
        out = np.zeros(t.shape, dtype=bool)
        for q in range(1, self.small_q + 1):
            a = np.rint(t * q)
            out |= np.abs(t - a / q) <= 1.0 / (q * self.Qmax)
        return out

    def label(self, t) -> np.ndarray:
        """'M' (major), 'm1' or 'm2' for each t."""
        qq, _ = self.major_index(t)
        return np.where(qq > 0, "M", np.where(self.is_m1(t), "m1", "m2"))


def build_arcs(N: int, eps: float = 0.2) -> ArcDecomposition:
    if N < 1 or not 0 < eps < 0.5:
        raise ValueError("need N >= 1 and 0 < eps < 1/2")
    w = major_halfwidth(N)
    majors = tuple(MajorArc(q, int(a), a / q, w) for q in range(1, N + 1) for a in coprime_residues(q))
    return ArcDecomposition(N, eps, majors)


@dataclass
class ArcMoments:
    N: int
    r: float
    total: float
    major_total: float
    minor_total: float
    m1_total: float
    m2_total: float
    per_q: list  # (q, phi(q), measure, integral)
    grid_points: int
    under_resolved: bool
    m2_sup: float

    @property
    def major_share(self) -> float:
        return self.major_total / self.total


def _cell_overlaps(arcs: ArcDecomposition, G: int):
    """For every arc, the grid cells [i/G - h/2, i/G + h/2) it meets and the overlap lengths."""
    h = 1.0 / G
    c = np.array([arc.center for arc in arcs.majors])
    w = arcs.halfwidth
    J = int(math.ceil(2 * w / h)) + 2
    i0 = np.floor((c - w) / h + 0.5).astype(np.int64)
    idx = i0[:, None] + np.arange(J)[None, :]
    lo = idx * h - h / 2
    ov = np.minimum(c[:, None] + w, lo + h) - np.maximum(c[:, None] - w, lo)
    return np.mod(idx, G), np.clip(ov, 0.0, None)


def arc_moments(N: int, r: float, grid_points: int | None = None, oversample: int = 64,
                eps: float = 0.2) -> ArcMoments:
    """Integrals of |F|^r over the major arcs, the minor set and its m1/m2 parts.

    One uniform grid carries all integrals; a cell meeting an arc contributes
    to it in proportion to the overlap, so the pieces add up to the
    periodic-trapezoid total.
    """
    arcs = build_arcs(N, eps)
    G = grid_points or oversample * N * N
    h = 1.0 / G
    F = np.abs(weyl_sum_grid(N, G))
    Fr = F ** r
    idx, ov = _cell_overlaps(arcs, G)
    frac = np.zeros(G)
    np.add.at(frac, idx.ravel(), ov.ravel() / h)
    arc_int = np.sum(Fr[idx] * ov, axis=1)
    qs = np.array([arc.q for arc in arcs.majors])
    per_q_int = np.bincount(qs, weights=arc_int, minlength=N + 1)
    phi = totients_upto(N)
    per_q = [(q, int(phi[q]), 2 * arcs.halfwidth * int(phi[q]), float(per_q_int[q])) for q in range(1, N + 1)]
    total = grid_mean(Fr)
    major_total = math.fsum(per_q_int)
    minor_w = np.clip(1.0 - frac, 0.0, 1.0)
    t = np.arange(G) * h
    m1 = arcs.is_m1(t)
    m1_total = float(np.sum(Fr * minor_w * m1)) / G
    m2_total = float(np.sum(Fr * minor_w * ~m1)) / G
    m2_mask = (frac == 0) & ~m1
    m2_sup = float(F[m2_mask].max()) if m2_mask.any() else 0.0
    return ArcMoments(N, r, total, major_total, total - major_total, m1_total, m2_total, per_q, G,
                      h > 2 * arcs.halfwidth, m2_sup)


def major_lower_comparator(N: int, r: float) -> float:
    """N^(r-2) * sum over odd q <= sqrt(N) of phi(q) q^(-r/2)."""
    if r <= 4:
        raise ValueError("r must exceed 4")
    qmax = math.isqrt(N)
    return N ** (r - 2) * sum(totient(q) * q ** (-r / 2) for q in range(1, qmax + 1, 2))
