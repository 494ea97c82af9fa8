"""Quadratic forms on Z^d, frequency boxes, lattice shells and frequency regions.

A diagonal form Q(n) = sum_j theta_j n_j^2 plays the role of the Laplacian
symbol on an irrational torus.  Everything here is finite enumeration over
integer boxes; nothing is asymptotic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce

import numpy as np

log = logging.getLogger(__name__)

# rounding slack for |Q(n) - l| <= 1 when theta is irrational (relative to |Q|)
SHELL_TOL = 1e-12
# floats whose exact binary value has a denominator at most this are "rational"
_RATIONAL_DEN = 1 << 20


def _as_fraction(x) -> Fraction | None:
    if isinstance(x, (int, np.integer, Fraction)):
        return Fraction(x)
    f = Fraction(float(x))
    return f if f.denominator <= _RATIONAL_DEN else None


@dataclass(frozen=True)
class QuadraticForm:
    """Diagonal positive form Q(n) = sum theta_j n_j^2.

    ``C`` defaults to the smallest comparability bound with
    1/C <= theta_j <= C.  ``tag`` is a free-form label (e.g. ``"1,sqrt2"``)
    used only for reporting.
    """

    theta: tuple
    C: float | None = None
    tag: str | None = None
    _exact: tuple | None = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        raw = tuple(self.theta)
        if len(raw) < 1:
            raise ValueError("need at least one coefficient")
        th = tuple(float(t) for t in raw)
        if any(not math.isfinite(t) or t <= 0 for t in th):
            raise ValueError(f"theta must be positive and finite, got {th}")
        c_min = max(max(th), 1.0 / min(th))
        C = c_min if self.C is None else float(self.C)
        if C < c_min * (1 - 1e-15):
            raise ValueError(f"C={C} violates 1/C <= theta_j <= C for theta={th}")
        object.__setattr__(self, "theta", th)
        object.__setattr__(self, "C", C)
        fracs = [_as_fraction(t) for t in raw]
        if all(f is not None for f in fracs):
            L = reduce(math.lcm, (f.denominator for f in fracs), 1)
            ints = tuple(int(f * L) for f in fracs)
            object.__setattr__(self, "_exact", (L, ints))

    @property
    def d(self) -> int:
        return len(self.theta)

    @property
    def is_rational(self) -> bool:
        return self._exact is not None

    @property
    def label(self) -> str:
        return self.tag or ",".join(f"{t:.12g}" for t in self.theta)

    def __call__(self, n) -> float:
        return eval_Q(self, n)

    def values(self, points: np.ndarray) -> np.ndarray:
        """Q evaluated on an (..., d) integer array."""
        pts = np.asarray(points)
        if pts.shape[-1] != self.d:
            raise ValueError(f"points have dimension {pts.shape[-1]}, form has {self.d}")
        p = pts.astype(np.float64)
        return (p * p) @ np.asarray(self.theta)

    def scaled_int_values(self, points: np.ndarray) -> tuple[int, np.ndarray]:
        """For rational theta: (L, L*Q(points)) with exact int64 values."""
        if self._exact is None:
            raise ValueError("form is not rational")
        L, ints = self._exact
        p = np.asarray(points, dtype=np.int64)
        return L, (p * p) @ np.asarray(ints, dtype=np.int64)

    def dot(self, a, n) -> np.ndarray:
        """Theta-weighted dot product a ._theta n = sum theta_j a_j n_j."""
        return np.asarray(n, dtype=np.float64) @ (np.asarray(self.theta) * np.asarray(a, dtype=np.float64))


def eval_Q(form: QuadraticForm, n) -> float:
    n = np.asarray(n)
    if n.shape != (form.d,):
        raise ValueError(f"expected a vector of length {form.d}, got shape {n.shape}")
    if form.is_rational:
        L, ints = form._exact
        return float(Fraction(sum(c * int(v) ** 2 for c, v in zip(ints, n)), L))
    return float(sum(t * float(v) ** 2 for t, v in zip(form.theta, n)))


@dataclass(frozen=True)
class FreqBox:
    """The box center + [-N, N]^d, enumerated in lexicographic (C) order."""

    d: int
    N: int
    center: tuple = ()

    def __post_init__(self):
        if self.d < 1 or self.N < 0:
            raise ValueError("need d >= 1 and N >= 0")
        c = tuple(int(x) for x in self.center) or (0,) * self.d
        if len(c) != self.d:
            raise ValueError("center has wrong dimension")
        object.__setattr__(self, "center", c)

    @property
    def side(self) -> int:
        return 2 * self.N + 1

    @property
    def shape(self) -> tuple:
        return (self.side,) * self.d

    def __len__(self) -> int:
        return self.side ** self.d

    def offsets(self) -> np.ndarray:
        """Offsets m in [-N, N]^d, shape (len, d), lexicographic order."""
        r = np.arange(-self.N, self.N + 1)
        grids = np.meshgrid(*([r] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def points(self) -> np.ndarray:
        return self.offsets() + np.asarray(self.center, dtype=np.int64)


# ---------------------------------------------------------------- shells

def _shell_range(form: QuadraticForm, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Smallest and largest integer l with |Q(n) - l| <= 1, per point."""
    if form.is_rational:
        L, q = form.scaled_int_values(pts)
        lo = -((L - q) // L)  # ceil((q - L) / L)
        hi = (q + L) // L
        return lo, hi
    q = form.values(pts)
    tol = SHELL_TOL * np.maximum(1.0, q)
    lo = np.ceil(q - 1 - tol).astype(np.int64)
    hi = np.floor(q + 1 + tol).astype(np.int64)
    gap = np.abs(q - np.round(q))
    near = (gap > 0) & (gap <= tol)
    if near.any():
        log.info("%d points within tolerance of a shell boundary", int(near.sum()))
    return lo, hi


def shell_count(form: QuadraticForm, ell: float, N: int) -> int:
    """Number of n in S_N with |Q(n) - ell| <= 1 (exhaustive)."""
    pts = FreqBox(form.d, N).points()
    if form.is_rational and float(ell).is_integer():
        L, q = form.scaled_int_values(pts)
        return int(np.count_nonzero(np.abs(q - int(ell) * L) <= L))
    q = form.values(pts)
    return int(np.count_nonzero(np.abs(q - ell) <= 1 + SHELL_TOL * np.maximum(1.0, q)))


def shell_counts(form: QuadraticForm, N: int) -> tuple[np.ndarray, np.ndarray]:
    """All nonempty integer shells: returns (ells, |A_ell|)."""
    lo, hi = _shell_range(form, FreqBox(form.d, N).points())
    base = int(lo.min())
    size = int(hi.max()) - base + 1
    counts = np.zeros(size, dtype=np.int64)
    width = int((hi - lo).max()) + 1
    for j in range(width):
        ell = lo + j
        ok = ell <= hi
        counts += np.bincount(ell[ok] - base, minlength=size)
    ells = np.arange(base, base + size)
    keep = counts > 0
    return ells[keep], counts[keep]


def shell_moment(form: QuadraticForm, N: int, s: float) -> float:
    """sum over integer ell of |A_ell|^s."""
    if not math.isfinite(s) or s < 1:
        raise ValueError("s must be finite and >= 1")
    _, counts = shell_counts(form, N)
    if float(s).is_integer():
        return float(sum(int(c) ** int(s) for c in counts))
    return float(np.sum(counts.astype(np.float64) ** s))


# ---------------------------------------------------------------- regions

@dataclass(frozen=True)
class Annulus:
    """Dyadic annulus N/2 < |n|_inf <= N (the ball |n|_inf <= 1 when N = 1)."""

    d: int
    N: int
    kind = "annulus"

    def contains(self, pts) -> np.ndarray:
        m = np.abs(np.asarray(pts)).max(axis=-1)
        if self.N <= 1:
            return m <= self.N
        return (2 * m > self.N) & (m <= self.N)

    def points(self) -> np.ndarray:
        p = FreqBox(self.d, self.N).points()
        return p[self.contains(p)]


@dataclass(frozen=True)
class Cube:
    """Lattice cube center + [-half, half]^d (side length 2*half)."""

    center: tuple
    half: int
    kind = "cube"

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(int(c) for c in self.center))

    @property
    def d(self) -> int:
        return len(self.center)

    def contains(self, pts) -> np.ndarray:
        off = np.asarray(pts) - np.asarray(self.center)
        return np.abs(off).max(axis=-1) <= self.half

    def points(self) -> np.ndarray:
        return FreqBox(self.d, self.half, self.center).points()


@dataclass(frozen=True)
class Strip:
    """Lattice points n of ``cube`` with lo <= (a ._theta n - base)/M < hi.

    ``index`` is the strip number l; ``a`` is the unit normal.  The last strip
    of a partition is closed on the right (``last=True``).  Every strip has
    a ._theta-width at most M, so it lies inside the slab |a._theta n - A| <= M
    with A its midpoint.
    """

    form: QuadraticForm
    cube: Cube
    a: tuple
    base: float
    M: float
    index: int
    last: bool = False
    kind = "strip"

    @property
    def offset(self) -> float:
        return self.base + self.M * (self.index + 0.5)

    def coordinate(self, pts) -> np.ndarray:
        return self.form.dot(self.a, pts)

    def contains(self, pts) -> np.ndarray:
        inside = self.cube.contains(pts)
        return inside & (_strip_index(self.coordinate(pts), self.base, self.M, self.last_index) == self.index)

    @property
    def last_index(self) -> int | None:
        return self.index if self.last else None

    def in_slab(self, pts) -> np.ndarray:
        return np.abs(self.coordinate(pts) - self.offset) <= self.M

    def points(self) -> np.ndarray:
        p = self.cube.points()
        return p[self.contains(p)]


def _strip_index(v, base, M, cap=None):
    idx = np.floor((np.asarray(v) - base) / M).astype(np.int64)
    if cap is not None:
        idx = np.where(idx > cap, cap, idx)
    return idx


def strip_partition(form: QuadraticForm, cube: Cube, M: float) -> list[Strip]:
    """Partition ``cube`` into slabs of theta-width M normal to its center.

    Strips are anchored at the smallest value of a._theta n over the cube, so
    the count is max(1, ceil(span/M)); a cube whose span does not exceed M is
    a single strip.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    n0 = np.asarray(cube.center, dtype=np.float64)
    norm = float(np.linalg.norm(n0))
    if norm == 0:
        raise ValueError("cube center is zero: strip direction undefined")
    a = tuple(float(x) for x in n0 / norm)
    v = form.dot(a, cube.points())
    base = float(v.min())
    span = float(v.max()) - base
    count = max(1, math.ceil(span / M - 1e-12))
    strips = [Strip(form, cube, a, base, float(M), i, last=(i == count - 1)) for i in range(count)]
    return strips


def strip_width(N1: int, N2: int) -> int:
    """M = max(ceil(N2^2 / N1), 1)."""
    return max(-(-N2 * N2 // N1), 1)
