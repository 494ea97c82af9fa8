"""Band-limited data, the linear flow on the torus, and space-time norms.

The flow of f = sum c_n e(n.x) is u(x, t) = sum c_n e(n.x + Q(n) t).  It is
sampled on a uniform periodic grid in x (one inverse FFT per time node) and
a closed trapezoid rule in t.  Rank-one data (c_n = prod_j a_j(n_j)) keep a
factored representation, because then u(x, t) = prod_j u_j(x_j, t) and every
norm or level set reduces to one-dimensional arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Iterator

import numpy as np
from scipy import fft as sfft

from .quadform import FreqBox, QuadraticForm

TIME_CHUNK = 64
FACTOR_CHUNK = 4096


# ---------------------------------------------------------------- data

@dataclass(frozen=True, eq=False)
class BandLimitedField:
    """Coefficients c_n on ``box`` stored as an array of shape box.shape.

    ``factors`` (optional) are 1-D arrays with coeffs == outer product.
    """

    box: FreqBox
    coeffs: np.ndarray
    factors: tuple | None = None
    l2norm: float = dc_field(init=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.size != len(self.box):
            raise ValueError(f"expected {len(self.box)} coefficients, got {c.size}")
        c = c.reshape(self.box.shape)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.factors is not None:
            fs = tuple(np.asarray(f, dtype=np.complex128) for f in self.factors)
            if len(fs) != self.box.d or any(f.shape != (self.box.side,) for f in fs):
                raise ValueError("factor shapes do not match the box")
            object.__setattr__(self, "factors", fs)
        object.__setattr__(self, "l2norm", math.sqrt(float(np.sum(np.abs(c.ravel()) ** 2))))

    @property
    def d(self) -> int:
        return self.box.d

    @property
    def N(self) -> int:
        return self.box.N

    def points(self) -> np.ndarray:
        return self.box.points()

    def values(self) -> np.ndarray:
        """Coefficients in box enumeration order."""
        return self.coeffs.ravel()

    def support(self) -> np.ndarray:
        return self.points()[self.values() != 0]

    def scaled(self, s: complex) -> "BandLimitedField":
        fs = None
        if self.factors is not None:
            fs = (self.factors[0] * s,) + self.factors[1:]
        return BandLimitedField(self.box, self.coeffs * s, fs)

    def restrict(self, mask) -> "BandLimitedField":
        """Zero the coefficients outside ``mask`` (bool array or predicate on points)."""
        if callable(mask):
            mask = mask(self.points())
        mask = np.asarray(mask, dtype=bool).reshape(self.box.shape)
        return BandLimitedField(self.box, np.where(mask, self.coeffs, 0))


def make_field(kind: str, box: FreqBox, seed: int | None = None, n0=None, values=None,
               amplitude: complex = 1.0) -> BandLimitedField:
    """Build data on ``box``.

    kinds: ``all-ones`` (c = (2N+1)^(-d/2)), ``single-mode`` (c = amplitude at
    n0), ``gaussian-random`` (complex Gaussian, unit l2 norm), ``explicit``.
    """
    side, d = box.side, box.d
    if kind == "all-ones":
        f = np.full(side, side ** -0.5, dtype=np.complex128)
        return BandLimitedField(box, np.full(box.shape, side ** (-d / 2), dtype=np.complex128), (f,) * d)
    if kind == "single-mode":
        n0 = tuple(box.center) if n0 is None else tuple(int(v) for v in n0)
        idx = tuple(n - c + box.N for n, c in zip(n0, box.center))
        if len(idx) != d or any(i < 0 or i >= side for i in idx):
            raise ValueError(f"mode {n0} is outside the box")
        fs = []
        for j, i in enumerate(idx):
            f = np.zeros(side, dtype=np.complex128)
            f[i] = amplitude if j == 0 else 1.0
            fs.append(f)
        c = np.zeros(box.shape, dtype=np.complex128)
        c[idx] = amplitude
        return BandLimitedField(box, c, tuple(fs))
    if kind == "gaussian-random":
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
        return BandLimitedField(box, c / np.linalg.norm(c.ravel()))
    if kind == "explicit":
        v = np.asarray(values, dtype=np.complex128)
        if v.size != len(box):
            raise ValueError(f"explicit data needs {len(box)} values, got {v.size}")
        return BandLimitedField(box, v)
    raise ValueError(f"unknown field kind {kind!r}")


def save_field(path, fld: BandLimitedField) -> None:
    """Text table: a header line, then one row 'n_1 ... n_d re im' per mode."""
    with open(path, "w") as fh:
        fh.write(f"# irrtorus-field v1 d={fld.d} N={fld.N} center={','.join(map(str, fld.box.center))}\n")
        for p, c in zip(fld.points(), fld.values()):
            fh.write(" ".join(str(int(v)) for v in p) + f" {float(c.real)!r} {float(c.imag)!r}\n")


def load_field(path) -> BandLimitedField:
    with open(path) as fh:
        head = fh.readline().split()
        if head[:3] != ["#", "irrtorus-field", "v1"]:
            raise ValueError("not a field file")
        meta = dict(kv.split("=") for kv in head[3:])
        box = FreqBox(int(meta["d"]), int(meta["N"]), tuple(int(v) for v in meta["center"].split(",")))
        rows = np.loadtxt(fh, ndmin=2)
    pts = rows[:, :box.d].astype(np.int64)
    if not np.array_equal(pts, box.points()):
        raise ValueError("rows are not in box enumeration order")
    return BandLimitedField(box, rows[:, box.d] + 1j * rows[:, box.d + 1])


# ---------------------------------------------------------------- grids

@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform periodic x-grid with P[j] points per axis and a closed
    trapezoid rule with T_s intervals on [t0, t1]."""

    P: tuple
    T_s: int
    t0: float = 0.0
    t1: float = 1.0

    def __post_init__(self):
        P = (self.P,) if isinstance(self.P, (int, np.integer)) else tuple(self.P)
        object.__setattr__(self, "P", tuple(int(v) for v in P))
        if self.T_s < 1 or not self.t1 > self.t0:
            raise ValueError("need T_s >= 1 and t1 > t0")

    @classmethod
    def default(cls, form: QuadraticForm, N: int, interval=(0.0, 1.0), space_oversample: int = 4,
                time_oversample: int = 64) -> "SpaceTimeGrid":
        P = sfft.next_fast_len(max(space_oversample * (2 * N + 1), 4 * N + 1))
        length = interval[1] - interval[0]
        T_s = time_oversample * max(1, math.ceil(form.C * N * N * length))
        return cls((P,) * form.d, T_s, *interval)

    @property
    def d(self) -> int:
        return len(self.P)

    @property
    def length(self) -> float:
        return self.t1 - self.t0

    def times(self) -> np.ndarray:
        return self.t0 + self.length * np.arange(self.T_s + 1) / self.T_s

    def weights(self) -> np.ndarray:
        w = np.full(self.T_s + 1, self.length / self.T_s)
        w[0] = w[-1] = 0.5 * self.length / self.T_s
        return w

    def oversampling(self, N: int) -> float:
        return min(self.P) / (2 * N + 1)

    def x_axis(self, j: int) -> np.ndarray:
        return np.arange(self.P[j]) / self.P[j]

    def with_P(self, P) -> "SpaceTimeGrid":
        return SpaceTimeGrid(P, self.T_s, self.t0, self.t1)


def _to_grid_axis(a: np.ndarray, axis: int, N: int, P: int) -> np.ndarray:
    """Inverse DFT along ``axis`` of modes -N..N onto P points (unnormalized)."""
    shape = list(a.shape)
    shape[axis] = P
    out = np.zeros(shape, dtype=np.complex128)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    src[axis], dst[axis] = slice(N, None), slice(0, N + 1)
    out[tuple(dst)] = a[tuple(src)]
    if N:
        src[axis], dst[axis] = slice(0, N), slice(P - N, P)
        out[tuple(dst)] = a[tuple(src)]
    return sfft.ifft(out, axis=axis, norm="forward", overwrite_x=True)


def modes_to_grid(c: np.ndarray, N: int, P: tuple, lead: int = 1) -> np.ndarray:
    """Evaluate sum_m c_m e(m.x) on the grid; the first ``lead`` axes are batch axes."""
    out = c
    for j in reversed(range(len(P))):
        out = _to_grid_axis(out, lead + j, N, P[j])
    return out


def grid_to_modes(u: np.ndarray, N: int, lead: int = 1) -> np.ndarray:
    """Inverse of modes_to_grid for modes -N..N (exact when P >= 2N+1)."""
    out = u
    for j in range(u.ndim - lead):
        ax = lead + j
        P = out.shape[ax]
        f = sfft.fft(out, axis=ax, norm="forward")
        idx = np.r_[np.arange(P - N, P), np.arange(0, N + 1)]
        out = np.take(f, idx, axis=ax)
    return out


def _check_grid(fld: BandLimitedField, grid: SpaceTimeGrid):
    if grid.d != fld.d:
        raise ValueError("grid and field dimensions differ")
    if min(grid.P) < 2 * fld.N + 1:
        raise ValueError(f"grid with P={grid.P} cannot resolve modes |n| <= {fld.N}")


def _axis_modulation(center_j: int, P: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.mod(center_j * np.arange(P), P) / P)


# ---------------------------------------------------------------- samples

@dataclass(eq=False)
class SpaceTimeSamples:
    """Samples of u on a SpaceTimeGrid.

    Exactly one representation is used: ``values`` (T+1, *P) materialized,
    ``factors`` (list of (T+1, P_j) arrays, u = prod_j factor_j), lazy
    factors (``lazy_factors``, recomputed per time block), or lazy
    evaluation from (form, field) chunk by chunk.
    """

    grid: SpaceTimeGrid
    values: np.ndarray | None = None
    factors: list | None = None
    form: QuadraticForm | None = None
    field: BandLimitedField | None = None
    demodulate: bool = False
    lazy_factors: bool = False

    @property
    def separable(self) -> bool:
        return self.factors is not None or self.lazy_factors

    def factor_rows(self, sl: slice) -> list:
        """Per-axis factors restricted to the time nodes ``sl`` (separable only)."""
        if self.factors is not None:
            return [f[sl] for f in self.factors]
        return _factor_block(self.form, self.field, self.grid, self.grid.times()[sl], self.demodulate)

    def factor_blocks(self, size: int = FACTOR_CHUNK) -> Iterator[tuple[slice, list]]:
        """Yield (slice, per-axis factor blocks) over consecutive time blocks."""
        T = self.grid.T_s + 1
        for i in range(0, T, size):
            sl = slice(i, min(i + size, T))
            yield sl, self.factor_rows(sl)

    def chunks(self, size: int = TIME_CHUNK) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        """Yield (weights, u) for consecutive blocks of time nodes."""
        w = self.grid.weights()
        T = w.size
        for i in range(0, T, size):
            sl = slice(i, min(i + size, T))
            if self.values is not None:
                yield w[sl], self.values[sl]
            elif self.separable:
                fs = self.factor_rows(sl)
                u = fs[0]
                for f in fs[1:]:
                    u = u[..., None] * f.reshape((f.shape[0],) + (1,) * (u.ndim - 1) + (f.shape[1],))
                yield w[sl], u
            else:
                yield w[sl], _flow_block(self.form, self.field, self.grid, self.grid.times()[sl], self.demodulate)


def _time_phases(times: np.ndarray, q: np.ndarray) -> np.ndarray:
    """e(q t) for every (t, q).  For uniform times the rows after the first
    are built by repeated multiplication with e(q h)."""
    if times.size > 2:
        h = times[1] - times[0]
        if np.allclose(np.diff(times), h, rtol=0, atol=1e-15 * max(1.0, abs(times[-1]))):
            out = np.empty((times.size, q.size), dtype=np.complex128)
            out[0] = np.exp(2j * np.pi * np.mod(q * times[0], 1.0))
            step = np.exp(2j * np.pi * np.mod(q * h, 1.0))
            out[1:] = step
            return np.cumprod(out, axis=0)
    return np.exp(2j * np.pi * np.mod(np.multiply.outer(times, q), 1.0))


def _flow_block(form, fld, grid, times, demodulate=False):
    pts = fld.points()
    qv = form.values(pts)
    if demodulate:
        qv = qv - form.values(np.asarray(fld.box.center))
    vals = fld.values()
    nz = vals != 0
    phase = np.zeros((times.size, vals.size), dtype=np.complex128)
    phase[:, nz] = _time_phases(times, qv[nz]) * vals[nz]
    u = modes_to_grid(phase.reshape((times.size,) + fld.box.shape), fld.N, grid.P)
    if not demodulate and any(fld.box.center):
        for j, cj in enumerate(fld.box.center):
            if cj:
                shape = [1] * u.ndim
                shape[1 + j] = grid.P[j]
                u = u * _axis_modulation(cj, grid.P[j]).reshape(shape)
    return u


def _flow_1d(theta: float, coeff: np.ndarray, N: int, center: int, P: int, times: np.ndarray,
             demodulate: bool = False) -> np.ndarray:
    n = center + np.arange(-N, N + 1)
    q = theta * n.astype(np.float64) ** 2
    if demodulate:
        q = q - theta * float(center) ** 2
    a = coeff * np.exp(2j * np.pi * np.mod(np.multiply.outer(times, q), 1.0))
    u = _to_grid_axis(a, 1, N, P)
    if center and not demodulate:
        u = u * _axis_modulation(center, P)
    return u


def _factor_block(form, fld, grid, times, demodulate=False) -> list:
    return [_flow_1d(th, f, fld.N, c, P, times, demodulate)
            for th, f, c, P in zip(form.theta, fld.factors, fld.box.center, grid.P)]


def propagate_eval(form: QuadraticForm, fld: BandLimitedField, grid: SpaceTimeGrid, lazy: bool | None = None,
                   demodulate: bool = False) -> SpaceTimeSamples:
    """Sample u = e^{-it Delta} f on the grid.

    Rank-one data always use the factored representation; the factors are
    stored unless ``lazy`` (default: when they would exceed ~2^26 samples).
    Otherwise the full array is materialized unless ``lazy`` (default: when
    it would exceed ~2^26 samples), in which case blocks are recomputed on
    demand.
    ``demodulate`` drops the unimodular factor e(n0.x + Q(n0) t) of an
    off-center box; moduli are unchanged.
    """
    if form.d != fld.d:
        raise ValueError("form and field dimensions differ")
    _check_grid(fld, grid)
    times = grid.times()
    if fld.factors is not None:
        if lazy is None:
            lazy = times.size * sum(grid.P) > (1 << 26)
        if lazy:
            return SpaceTimeSamples(grid, form=form, field=fld, demodulate=demodulate, lazy_factors=True)
        facs = _factor_block(form, fld, grid, times, demodulate)
        return SpaceTimeSamples(grid, factors=facs, form=form, field=fld, demodulate=demodulate)
    size = times.size * math.prod(grid.P)
    if lazy is None:
        lazy = size > (1 << 26)
    s = SpaceTimeSamples(grid, form=form, field=fld, demodulate=demodulate)
    if not lazy:
        s.values = np.concatenate([u for _, u in s.chunks()], axis=0)
    return s


# ---------------------------------------------------------------- norms

def _lp_power(samples: SpaceTimeSamples, p: float) -> float:
    """int_I int_T^d |u|^p, torus volume 1."""
    parts = []
    if samples.separable:
        w = samples.grid.weights()
        for sl, fs in samples.factor_blocks():
            prod = np.ones(sl.stop - sl.start)
            for f in fs:
                prod = prod * np.mean(np.abs(f) ** p, axis=1)
            parts.append(float(np.sum(w[sl] * prod)))
        return math.fsum(parts)
    for w, u in samples.chunks():
        m = np.mean((np.abs(u) ** p).reshape(u.shape[0], -1), axis=1)
        parts.append(float(np.sum(w * m)))
    return math.fsum(parts)


def spacetime_norm(samples: SpaceTimeSamples, p: float) -> float:
    """L^p(I x T^d) norm; p = inf is the grid maximum."""
    if not p >= 1:
        raise ValueError("p must be >= 1")
    if math.isinf(p):
        return sup_norm(samples)[0]
    return _lp_power(samples, p) ** (1.0 / p)


def _parabolic_peak(fm, f0, fp):
    den = fp - 2 * f0 + fm
    return 0.0 if den >= 0 else -(fp - fm) ** 2 / (8 * den)


def sup_norm(samples: SpaceTimeSamples) -> tuple[float, float]:
    """(grid max of |u|, grid max refined by a 3-point parabola per axis)."""
    if samples.separable:
        top, loc = -1.0, None
        for sl, fs in samples.factor_blocks():
            amp = [np.abs(f) for f in fs]
            prod = amp[0].max(axis=1)
            for a in amp[1:]:
                prod = prod * a.max(axis=1)
            i = int(np.argmax(prod))
            if prod[i] > top:
                top = float(prod[i])
                loc = (sl.start + i,) + tuple(int(np.argmax(a[i])) for a in amp)
        rows = {}

        def val(idx):
            t = idx[0]
            if t not in rows:
                rows[t] = [np.abs(f[0]) for f in samples.factor_rows(slice(t, t + 1))]
            out = 1.0
            for j, a in enumerate(rows[t]):
                out *= a[idx[1 + j] % a.size]
            return out
    else:
        best, loc, block = -1.0, None, None
        for i, (_, u) in enumerate(samples.chunks()):
            a = np.abs(u)
            m = float(a.max())
            if m > best:
                best = m
                pos = np.unravel_index(int(np.argmax(a)), a.shape)
                loc = (pos[0] + i * TIME_CHUNK,) + tuple(int(v) for v in pos[1:])
        top = best
        vals = {}

        def val(idx):
            key = (idx[0],) + tuple(v % P for v, P in zip(idx[1:], samples.grid.P))
            if key not in vals:
                t = key[0]
                if samples.values is not None:
                    vals[key] = float(abs(samples.values[key]))
                else:
                    u = _flow_block(samples.form, samples.field, samples.grid,
                                    samples.grid.times()[t:t + 1], samples.demodulate)
                    vals[key] = float(abs(u[(0,) + key[1:]]))
            return vals[key]
    refined = top
    T = samples.grid.T_s
    for ax in range(len(loc)):
        lo, hi = list(loc), list(loc)
        lo[ax] -= 1
        hi[ax] += 1
        if ax == 0 and (lo[0] < 0 or hi[0] > T):
            continue
        refined += _parabolic_peak(val(tuple(lo)), top, val(tuple(hi)))
    return top, refined


@dataclass(frozen=True)
class LevelSetProfile:
    lambdas: np.ndarray
    measures: np.ndarray


def _count_above(amps: list, lam: np.ndarray) -> np.ndarray:
    """#{x : prod_j amps[j][b, x_j] > lam_i} for a block of times b (separable).

    Works in log amplitude: the last factor is sorted per row, rows are
    shifted apart by a constant so one searchsorted handles the whole block.
    Returns an array of shape (B, len(lam)).
    """
    tiny = 1e-300
    logs = [np.log(np.maximum(a, tiny)) for a in amps]
    B = logs[0].shape[0]
    head = logs[0]
    for lg in logs[1:-1]:
        head = (head[:, :, None] + lg[:, None, :]).reshape(B, -1)
    last = np.sort(logs[-1], axis=1)
    P = last.shape[1]
    loglam = np.log(lam)
    span = 4.0 * (sum(np.abs(lg).max() for lg in logs) + np.abs(loglam).max() + 1.0)
    shift = span * np.arange(B)[:, None]
    flat = (last + shift).ravel()
    out = np.empty((B, lam.size))
    for i, L in enumerate(loglam):
        q = (L - head) + shift
        idx = np.searchsorted(flat, q.ravel(), side="right").reshape(q.shape) - np.arange(B)[:, None] * P
        out[:, i] = np.sum(P - idx, axis=1)
    return out


def level_set_profile(samples: SpaceTimeSamples, lambdas) -> LevelSetProfile:
    """|{(x, t) : |u| > lambda}| with trapezoid time weights, |T^d| = 1."""
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.ndim != 1 or np.any(np.diff(lam) <= 0):
        raise ValueError("lambdas must be strictly increasing")
    vol = 1.0 / math.prod(samples.grid.P)
    parts = [[] for _ in lam]
    if samples.separable:
        w = samples.grid.weights()
        for blk, fs in samples.factor_blocks():
            amps = [np.abs(f) for f in fs]
            wb = w[blk]
            for i0 in range(0, wb.size, TIME_CHUNK):
                sl = slice(i0, i0 + TIME_CHUNK)
                if len(amps) == 1:
                    c = (amps[0][sl][:, :, None] > lam).sum(axis=1)
                else:
                    c = _count_above([a[sl] for a in amps], lam)
                for i in range(lam.size):
                    parts[i].append(float(np.sum(wb[sl] * c[:, i])))
    else:
        for w, u in samples.chunks():
            a = np.abs(u).reshape(u.shape[0], -1)
            for i, L in enumerate(lam):
                parts[i].append(float(np.sum(w * np.count_nonzero(a > L, axis=1))))
    meas = np.array([math.fsum(pp) for pp in parts]) * vol
    return LevelSetProfile(lam, np.minimum.accumulate(meas))


def bernstein_check(form: QuadraticForm, fld: BandLimitedField, grid: SpaceTimeGrid) -> float:
    """sup |u| / ((2N+1)^(d/2) ||f||_2); at most 1 by Cauchy-Schwarz."""
    top, _ = sup_norm(propagate_eval(form, fld, grid))
    return top / ((2 * fld.N + 1) ** (fld.d / 2) * fld.l2norm)


def spatial_l2(samples: SpaceTimeSamples) -> np.ndarray:
    """||u(., t)||_{L^2(T^d)} for every time node."""
    if samples.separable:
        out = np.ones(samples.grid.T_s + 1)
        for sl, fs in samples.factor_blocks():
            for f in fs:
                out[sl] = out[sl] * np.mean(np.abs(f) ** 2, axis=1)
        return np.sqrt(out)
    rows = [np.sqrt(np.mean((np.abs(u) ** 2).reshape(u.shape[0], -1), axis=1)) for _, u in samples.chunks()]
    return np.concatenate(rows)
