"""Strichartz quotients, exponent fits, extremizer ascent, multilinear
products, strip almost-orthogonality, and the Hausdorff-Young and
dual-kernel checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import fft as sfft
from scipy.signal import fftconvolve, convolve

from . import expsum
from .field import (BandLimitedField, SpaceTimeGrid, SpaceTimeSamples, grid_to_modes, make_field,
                    modes_to_grid, propagate_eval, spacetime_norm)
from .quadform import Cube, FreqBox, QuadraticForm, strip_partition, strip_width


# ---------------------------------------------------------------- exponents

def predicted_exponent(d: int, p: float, partial: bool = False) -> tuple[float, bool]:
    """Growth exponent of K_{p,N} in N, and whether it carries an eps-loss.

    ``partial`` selects the torus with theta = (1, 1, theta_3) in d = 3,
    where the scaling exponent 3/2 - 5/p holds for p > 14/3.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    if p == 2:
        return 0.0, False
    close = lambda a, b: abs(a - b) <= 1e-12
    if partial and d == 3 and p > 14 / 3 and not close(p, 14 / 3):
        return 1.5 - 5 / p, False
    if d == 2:
        if p <= 3:
            return 0.0, True
        if p < 4 and not close(p, 4):
            return 2 / 3 - 2 / p, True
        if close(p, 4):
            return 1 / 6, False
        if p <= 20 / 3 or close(p, 20 / 3):
            return 3 / 4 - 7 / (3 * p), True
        return 1 - 4 / p, False
    if d == 3:
        if p <= 8 / 3:
            return 0.0, True
        if p <= 4:
            return 1 - 8 / (3 * p), True
        if p <= 16 / 3 or close(p, 16 / 3):
            return 5 / 4 - 11 / (3 * p), True
        return 1.5 - 5 / p, False
    if d == 4:
        if p <= 2.5:
            return 0.0, True
        if p <= 4:
            return 4 / 3 - 10 / (3 * p), True
        return 2 - 6 / p, False
    if d >= 5:
        if p <= 2 * (d + 1) / d:
            return 0.0, True
        if p < 4:
            return (d / 4 - 0.5) * (2 * d / (d - 1) - 4 * (d + 1) / (p * (d - 1))), True
        return d / 2 - (d + 2) / p, False
    raise ValueError("d must be >= 2")


def scaling_exponent(d: int, p: float) -> float:
    return d / 2 - (d + 2) / p


@dataclass
class ExponentFit:
    points: list
    slope: float
    intercept: float
    residual: float
    stderr: float = float("nan")
    predicted: float | None = None
    tolerance: float | None = None

    @property
    def delta(self) -> float | None:
        return None if self.predicted is None else abs(self.slope - self.predicted)

    @property
    def verdict(self) -> bool | None:
        if self.predicted is None or self.tolerance is None:
            return None
        return self.delta <= self.tolerance

    def interval(self, z: float = 1.96) -> tuple[float, float]:
        return self.slope - z * self.stderr, self.slope + z * self.stderr


def exponent_fit(points, predicted: float | None = None, tolerance: float | None = None) -> ExponentFit:
    """Least squares of log(value) against log(N)."""
    pts = [(float(n), float(v)) for n, v in points]
    if len(pts) < 3:
        raise ValueError("need at least 3 points")
    if any(n <= 0 or v <= 0 for n, v in pts):
        raise ValueError("N and values must be positive")
    x = np.log([n for n, _ in pts])
    y = np.log([v for _, v in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - (slope * x + icpt)
    dof = len(x) - 2
    sxx = float(np.sum((x - x.mean()) ** 2))
    stderr = math.sqrt(float(np.sum(res ** 2)) / dof / sxx) if dof > 0 and sxx > 0 else float("nan")
    return ExponentFit(pts, float(slope), float(icpt), float(np.sqrt(np.mean(res ** 2))), stderr,
                       predicted, tolerance)


# ---------------------------------------------------------------- quotients

def strichartz_quotient(form: QuadraticForm, fld: BandLimitedField, p: float,
                        grid: SpaceTimeGrid | None = None) -> float:
    """||e^{-it Delta} f||_{L^p(I x T^d)} / ||f||_2."""
    if fld.l2norm == 0:
        raise ValueError("zero field")
    grid = grid or SpaceTimeGrid.default(form, fld.N)
    return spacetime_norm(propagate_eval(form, fld, grid), p) / fld.l2norm


def adjoint_flow(form: QuadraticForm, box: FreqBox, grid: SpaceTimeGrid, g: np.ndarray) -> np.ndarray:
    """S* g: the coefficients sum_t w_t mean_x g(x, t) e(-n.x - Q(n) t) on ``box``."""
    w = grid.weights()
    ghat = grid_to_modes(g, box.N)  # (T, *box.shape) spatial means against e(-m.x)
    q = form.values(box.points()).reshape(box.shape)
    t = grid.times()
    out = np.zeros(box.shape, dtype=np.complex128)
    for i in range(t.size):
        out += w[i] * ghat[i] * np.exp(-2j * np.pi * np.mod(q * t[i], 1.0))
    return out


@dataclass
class ExtremizerResult:
    field: BandLimitedField
    quotient: float
    history: list = dc_field(default_factory=list)
    converged: bool = False


def _ascend(form, box, grid, p, c, iters, tol):
    def q_of(c):
        s = propagate_eval(form, BandLimitedField(box, c), grid, lazy=False)
        return spacetime_norm(s, p), s

    val, s = q_of(c)
    hist = [val]
    converged = False
    for _ in range(iters):
        u = s.values
        g = np.abs(u) ** (p - 2) * u
        new = adjoint_flow(form, box, grid, g)
        new /= np.linalg.norm(new.ravel())
        step, accepted = 1.0, False
        while step > 1e-3:
            trial = c + step * (new - c)
            trial = trial / np.linalg.norm(trial.ravel())
            tv, ts = q_of(trial)
            if tv > val:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            converged = True
            break
        gain = tv - val
        c, val, s = trial, tv, ts
        hist.append(val)
        if gain <= tol * val:
            converged = True
            break
    return c, val, hist, converged


def extremizer_search(form: QuadraticForm, N: int, p: float, grid: SpaceTimeGrid | None = None,
                      iters: int = 50, restarts: int = 8, seed: int = 0, tol: float = 1e-9) -> ExtremizerResult:
    """Nonlinear power iteration for max ||u||_p over unit coefficient vectors.

    Starts from all-ones data and ``restarts`` Gaussian seeds; steps are
    accepted only when the quotient increases (halving toward the current
    iterate otherwise).  The result is a lower bound for the discretized
    operator norm.
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    box = FreqBox(form.d, N)
    grid = grid or SpaceTimeGrid.default(form, N)
    starts = [make_field("all-ones", box).coeffs]
    rng = np.random.default_rng(seed)
    for _ in range(restarts):
        c = rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
        starts.append(c / np.linalg.norm(c.ravel()))
    best = None
    for c0 in starts:
        if p == 2:
            val = spacetime_norm(propagate_eval(form, BandLimitedField(box, c0), grid), 2)
            res = (c0, val, [val], True)
        else:
            res = _ascend(form, box, grid, p, np.array(c0), iters, tol)
        if best is None or res[1] > best[1]:
            best = res
    c, val, hist, conv = best
    return ExtremizerResult(BandLimitedField(box, c), val, hist, conv)


@dataclass
class SweepResult:
    fit: ExponentFit
    rows: list  # (N, family, quotient)
    eps_loss: bool = False


def knp_sweep(form: QuadraticForm, p: float, N_list, families=("all-ones",), seeds=(0,),
              interval=(0.0, 1.0), time_oversample: int = 64, space_oversample: int = 4,
              tolerance: float = 0.15, partial: bool | None = None, extremizer_opts=None) -> SweepResult:
    """Max quotient over the families for each N, and a log-log fit against
    the predicted exponent."""
    if len(N_list) < 3:
        raise ValueError("need at least 3 values of N")
    rows, best = [], []
    for N in N_list:
        grid = SpaceTimeGrid.default(form, N, interval, space_oversample, time_oversample)
        box = FreqBox(form.d, N)
        vals = []
        for fam in families:
            if fam == "all-ones":
                v = strichartz_quotient(form, make_field("all-ones", box), p, grid)
            elif fam == "gaussian-random":
                v = max(strichartz_quotient(form, make_field("gaussian-random", box, seed=s), p, grid)
                        for s in seeds)
            elif fam == "extremizer":
                v = extremizer_search(form, N, p, grid, **(extremizer_opts or {})).quotient
            else:
                raise ValueError(f"unknown family {fam!r}")
            rows.append((N, fam, v))
            vals.append(v)
        best.append((N, max(vals)))
    if partial is None:
        partial = form.d == 3 and form.theta[0] == form.theta[1]
    pred, eps = predicted_exponent(form.d, p, partial)
    return SweepResult(exponent_fit(best, pred, tolerance), rows, eps)


# ---------------------------------------------------------------- multilinear

def _q_range(form: QuadraticForm, fld: BandLimitedField) -> tuple[float, float]:
    q = form.values(fld.support()) - form.values(np.asarray(fld.box.center))
    return float(q.min()), float(q.max())


def product_grid(form: QuadraticForm, fields, interval=(0.0, 1.0), time_oversample: int = 16) -> SpaceTimeGrid:
    """Grid resolving |prod u_j|^2 exactly in x (P > 2 sum N_j) and with
    ``time_oversample`` nodes per unit of total (demodulated) Q-spread."""
    width = sum(f.N for f in fields)
    P = sfft.next_fast_len(2 * width + 1)
    spread = sum(hi - lo for lo, hi in (_q_range(form, f) for f in fields))
    length = interval[1] - interval[0]
    T_s = time_oversample * max(1, math.ceil(spread * length))
    return SpaceTimeGrid((P,) * form.d, T_s, *interval)


def product_l2_sq(form: QuadraticForm, fields, grid: SpaceTimeGrid) -> float:
    """int_I int |prod_j u_j|^2 in physical space (off-center boxes demodulated)."""
    samples = [propagate_eval(form, f, grid, lazy=True, demodulate=True) for f in fields]
    parts = []
    for blocks in zip(*(s.chunks() for s in samples)):
        w = blocks[0][0]
        prod = blocks[0][1]
        for _, u in blocks[1:]:
            prod = prod * u
        m = np.mean((np.abs(prod) ** 2).reshape(prod.shape[0], -1), axis=1)
        parts.append(float(np.sum(w * m)))
    return math.fsum(parts)


def product_l2_sq_frequency(form: QuadraticForm, fields, grid: SpaceTimeGrid) -> float:
    """Same integral computed on the frequency side: at each time node the
    Fourier coefficients of the product are a direct (non-FFT) convolution."""
    w = grid.weights()
    total = []
    qs = [form.values(f.points()).reshape(f.box.shape) - form.values(np.asarray(f.box.center))
          for f in fields]
    for i, t in enumerate(grid.times()):
        acc = None
        for f, q in zip(fields, qs):
            c = f.coeffs * np.exp(2j * np.pi * np.mod(q * t, 1.0))
            acc = c if acc is None else convolve(acc, c, method="direct")
        total.append(w[i] * float(np.sum(np.abs(acc) ** 2)))
    return math.fsum(total)


def default_delta(d: int, k: int) -> float:
    """Midpoint of the admissible delta range at the midpoint of the
    exponent window used for the critical multilinear bound (0 if empty)."""
    if d == 2:
        lo, hi = 20 / 3, 8 * k / (k + 1)
        bound = lambda p: 0.5 - 10 / (3 * p)
    elif d == 3:
        lo, hi = 16 / 3, 20 * k / (3 * k + 2)
        bound = lambda p: 0.5 - 8 / (3 * p)
    else:
        lo, hi = 4.0, 4 * k * (d + 2) / (d * k + 2)
        bound = lambda p: 0.5 - 2 / p
    if hi <= lo:
        return 0.0
    return 0.5 * max(bound(0.5 * (lo + hi)), 0.0)


@dataclass(frozen=True)
class MultilinearResult:
    lhs: float
    rhs_subcritical: float
    rhs_critical: float
    s: float
    delta: float


def multilinear_quotient(form: QuadraticForm, fields, grid: SpaceTimeGrid | None = None,
                         scales=None, supports=None, s: float | None = None,
                         delta: float | None = None) -> MultilinearResult:
    """lhs = ||prod u_j||_{L^2(I x T^d)} with the subcritical and critical
    right-hand sides.

    ``scales`` are the dyadic sizes N_1 >= ... >= N_{k+1} (default: box
    radii); ``supports`` optional regions each field must be supported in.
    """
    fields = list(fields)
    if len(fields) < 2:
        raise ValueError("need at least two fields")
    scales = list(scales or [max(f.N, 1) for f in fields])
    if any(a < b for a, b in zip(scales, scales[1:])):
        raise ValueError("scales must be nonincreasing")
    if supports is not None:
        for f, reg in zip(fields, supports):
            if not np.all(reg.contains(f.support())):
                raise ValueError("field is not supported in its region")
    grid = grid or product_grid(form, fields)
    lhs = math.sqrt(product_l2_sq(form, fields, grid))
    k = len(fields) - 1
    d = form.d
    sc = d / 2 - 1 / k
    s = sc if s is None else s
    delta = default_delta(d, k) if delta is None else delta
    norms = [f.l2norm for f in fields]
    rhs_sub = max(scales) ** (-s) * math.prod(n ** s for n in scales) * math.prod(norms)
    N1, N2, Nk1 = scales[0], scales[1], scales[-1]
    rhs_crit = (Nk1 / N1 + 1 / N2) ** delta * norms[0] * math.prod(n ** sc * v for n, v in zip(scales[1:], norms[1:]))
    return MultilinearResult(lhs, rhs_sub, rhs_crit, s, delta)


@dataclass
class StripCheck:
    ratio: float
    total: float
    strip_sum: float
    strips: int
    M: float


def strip_orthogonality_check(form: QuadraticForm, N1: int, N2: int, cube: Cube, fields,
                              M: float | None = None, interval=(0.0, 1.0),
                              time_oversample: int = 8) -> StripCheck:
    """||P_C u_1 prod_{j>=2} u_j||^2 / sum_l ||P_{R_l} u_1 prod u_j||^2.

    ``fields[0]`` lives on a box centered at the cube center; the strips
    R_l partition the cube with width M = max(ceil(N2^2/N1), 1).
    """
    u1, rest = fields[0], list(fields[1:])
    if tuple(u1.box.center) != tuple(cube.center):
        raise ValueError("first field must be centered at the cube center")
    u1 = u1.restrict(cube.contains)
    M = strip_width(N1, N2) if M is None else M
    strips = strip_partition(form, cube, M)
    total = product_l2_sq(form, [u1] + rest, product_grid(form, [u1] + rest, interval, time_oversample))
    if len(strips) == 1:
        return StripCheck(1.0, total, total, 1, M)
    parts = []
    for st in strips:
        piece = u1.restrict(st.contains)
        if not np.any(piece.values()):
            continue
        fs = [piece] + rest
        parts.append(product_l2_sq(form, fs, product_grid(form, fs, interval, time_oversample)))
    strip_sum = math.fsum(parts)
    return StripCheck(total / strip_sum, total, strip_sum, len(strips), M)


# ---------------------------------------------------------------- Hausdorff-Young

@dataclass(frozen=True)
class HYCheck:
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs


def hausdorff_young_check(form: QuadraticForm, points, values, a, p: float,
                          time_oversample: int = 16) -> HYCheck:
    """||F_a||_{L^p([-1,1])} against the bucketed l^{p'} sum of |c_n c_{a-n}|.

    F_a(t) = sum_n c_n c_{a-n} e([Q(n) + Q(a-n)] t).
    """
    if p < 2:
        raise ValueError("p must be >= 2")
    p_prime = 1.0 if math.isinf(p) else p / (p - 1)
    omega, w, _ = expsum.pair_frequencies(form, points, values, a)
    if omega.size == 0:
        return HYCheck(0.0, 0.0)
    rhs = expsum.pair_bucket_norm(form, points, values, a, p_prime)
    om = omega - omega.min()
    T_s = time_oversample * max(1, math.ceil(2 * (om.max() + 1)))
    t = np.linspace(-1.0, 1.0, T_s + 1)
    wt = np.full(t.size, 2.0 / T_s)
    wt[0] = wt[-1] = 1.0 / T_s
    vals = []
    for i in range(0, t.size, 4096):
        tt = t[i:i + 4096]
        F = np.exp(2j * np.pi * np.mod(np.multiply.outer(tt, om), 1.0)) @ w
        vals.append(np.abs(F))
    F = np.concatenate(vals)
    if math.isinf(p):
        lhs = float(F.max())
    else:
        lhs = float(np.sum(wt * F ** p)) ** (1 / p)
    return HYCheck(lhs, rhs)


# ---------------------------------------------------------------- dual identity

@dataclass(frozen=True)
class DualCheck:
    lhsum: float
    rhs_identity: float
    bound: float

    @property
    def identity_residual(self) -> float:
        return abs(self.lhsum - self.rhs_identity) / max(abs(self.lhsum), 1e-300)


def dual_kernel_check(form: QuadraticForm, N: int, f: np.ndarray, grid: SpaceTimeGrid, p: float) -> DualCheck:
    """Both sides of  sum_{n in S_N} |f^(n, Q(n))|^2 = <R * 1_I f, 1_I f>
    and the Holder-Young bound ||R||_{L^{p/2}(2I x T^2)} ||f||_{p'}^2.

    ``f`` holds samples on ``grid`` with shape (T_s + 1, P, P).
    """
    if form.d != 2:
        raise ValueError("the dual kernel check is two-dimensional")
    P = grid.P
    f = np.asarray(f, dtype=np.complex128)
    if f.shape != (grid.T_s + 1,) + P:
        raise ValueError("samples do not match the grid")
    if min(P) < 2 * N + 1:
        raise ValueError("grid too coarse")
    w = grid.weights()
    t = grid.times()
    h = grid.length / grid.T_s
    box = FreqBox(2, N)
    q = form.values(box.points()).reshape(box.shape)
    Fn = grid_to_modes(f, N)  # (T+1, 2N+1, 2N+1): mean_x f e(-n.x)

    # left: space-time Fourier coefficients at (n, Q(n))
    fhat = np.einsum("t,tij,tij->ij", w, Fn, np.exp(-2j * np.pi * np.mod(np.multiply.outer(t, q), 1.0)))
    lhsum = float(np.sum(np.abs(fhat) ** 2))

    # right: R sampled at lags (k - l) h, spatial DFT, time convolution per mode
    T = grid.T_s
    lags = h * np.arange(-T, T + 1)
    Rhat = np.empty((lags.size,) + box.shape, dtype=np.complex128)
    xs = [grid.x_axis(j) for j in range(2)]
    for i0 in range(0, lags.size, 256):
        lg = lags[i0:i0 + 256]
        R1 = expsum.quad_kernel(N, form.theta[0], xs[0][None, :], lg[:, None])
        R2 = expsum.quad_kernel(N, form.theta[1], xs[1][None, :], lg[:, None])
        R = R1[:, :, None] * R2[:, None, :]
        Rhat[i0:i0 + 256] = grid_to_modes(R, N)
    g = w[:, None, None] * Fn
    conv = fftconvolve(Rhat, g, axes=0)[T:2 * T + 1]  # (R * g)(t_k) = sum_l R(t_k - s_l) g_l
    rhs = np.einsum("t,tij,tij->", w, conv, np.conj(Fn))
    rhs_identity = float(rhs.real)

    # Holder-Young bound; R factorizes so its L^{p/2} norm is a product of 1-D norms
    r = p / 2
    Pb = sfft.next_fast_len(max(int(math.ceil(r)) * 2 * N + 1, min(P)))
    xb = np.arange(Pb) / Pb
    wl = np.full(lags.size, h)
    wl[0] = wl[-1] = h / 2
    prod = np.ones(lags.size)
    for th in form.theta:
        prod = prod * np.mean(np.abs(expsum.quad_kernel(N, th, xb[None, :], lags[:, None])) ** r, axis=1)
    R_norm = float(np.sum(wl * prod)) ** (1 / r)
    pp = p / (p - 1)
    f_norm = float(np.sum(w * np.mean((np.abs(f) ** pp).reshape(f.shape[0], -1), axis=1))) ** (1 / pp)
    return DualCheck(lhsum, rhs_identity, R_norm * f_norm ** 2)
