"""Quadratic exponential sums and the kernels built from them.

Conventions: e(z) = exp(2 pi i z).  F(t) = sum_{0<=n<=N} e(n^2 t) is the Weyl
sum; R_theta, the product kernel and the regularized kernel K live on the
circle in x and are evaluated pointwise or on uniform grids via FFT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import fft as sfft

from .arith import coprime_residues, dirichlet_approx, ramanujan_sum
from .quadform import QuadraticForm

TWO_PI_I = 2j * np.pi


def e(z):
    return np.exp(TWO_PI_I * np.asarray(z))


def _frac(x):
    return np.mod(x, 1.0)


# ---------------------------------------------------------------- Weyl sums

def weyl_sum(N: int, t):
    """F(t) = sum_{0 <= n <= N} e(n^2 t); t may be an array."""
    t = np.asarray(t, dtype=np.float64)
    out = np.zeros(t.shape, dtype=np.complex128)
    for n in range(N + 1):
        out += e(_frac(float(n * n) * t))
    return out if out.ndim else complex(out)


def weyl_sum_grid(N: int, G: int) -> np.ndarray:
    """F(j/G) for j = 0..G-1 via one inverse FFT."""
    n = np.arange(N + 1, dtype=np.int64)
    c = np.bincount((n * n) % G, minlength=G).astype(np.complex128)
    return sfft.ifft(c) * G


def quad_kernel(N: int, theta: float, x, t):
    """R_theta(x, t) = sum_{|n| <= N} e(n x + theta n^2 t)."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
    out = np.ones(x.shape, dtype=np.complex128)
    for n in range(1, N + 1):
        ph = e(_frac(theta * n * n * t))
        out += ph * (e(_frac(n * x)) + e(_frac(-n * x)))
    return out if out.ndim else complex(out)


def product_kernel(form: QuadraticForm, N: int, x, t):
    """R(x, t) = prod_j R_{theta_j}(x_j, t); x has trailing dimension d."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1:] != (form.d,):
        raise ValueError(f"x must have trailing dimension {form.d}")
    out = 1.0 + 0j
    for j, th in enumerate(form.theta):
        out = out * quad_kernel(N, th, x[..., j], t)
    return out


def kernel_weights(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Frequencies n and trapezoid multiplier sigma_n on |n| < 2N."""
    n = np.arange(-2 * N, 2 * N + 1)
    sigma = np.clip((2 * N - np.abs(n)) / N, 0.0, 1.0)
    return n, sigma


def regularized_kernel(N: int, x, t):
    """K(x, t) = sum_n sigma_n e(n x + n^2 t) with the trapezoid multiplier."""
    if N < 1:
        raise ValueError("N must be >= 1")
    x, t = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
    out = np.zeros(x.shape, dtype=np.complex128)
    for n, s in zip(*kernel_weights(N)):
        if s:
            out += s * e(_frac(n * x + float(n * n) * t))
    return out if out.ndim else complex(out)


def regularized_kernel_average(N: int, x, t):
    """(1/N) sum_{k=N}^{2N-1} W_k with W_k(x, t) = sum_{|n|<=k} e(n x + n^2 t)."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=np.float64), np.asarray(t, dtype=np.float64))
    W = np.zeros(x.shape, dtype=np.complex128)
    acc = np.zeros_like(W)
    for n in range(0, 2 * N):
        ph = e(_frac(float(n * n) * t))
        W += ph if n == 0 else ph * (e(_frac(n * x)) + e(_frac(-n * x)))
        if n >= N:
            acc += W
    out = acc / N
    return out if out.ndim else complex(out)


def regularized_kernel_grid(N: int, t: float, P: int) -> np.ndarray:
    """K(j/P, t) for j = 0..P-1 (P > 4N)."""
    if P <= 4 * N:
        raise ValueError("grid too coarse for the kernel bandwidth")
    n, sigma = kernel_weights(N)
    c = np.zeros(P, dtype=np.complex128)
    np.add.at(c, n % P, sigma * e(_frac(n.astype(np.float64) ** 2 * t)))
    return sfft.ifft(c) * P


def weyl_bound_ratios(N: int, times, oversample: int = 4) -> np.ndarray:
    """max_x |K(x,t)| q^(1/2) (1 + N ||t - a/q||^(1/2)) / N, per t.

    (a, q) is the Dirichlet approximation of t with denominator at most N.
    """
    P = sfft.next_fast_len(oversample * (4 * N + 1))
    out = []
    for t in np.atleast_1d(times):
        ra = dirichlet_approx(float(t), N)
        peak = np.abs(regularized_kernel_grid(N, float(t), P)).max()
        out.append(peak * math.sqrt(ra.q) * (1 + N * math.sqrt(ra.err)) / N)
    return np.asarray(out)


def weyl_bound_check(N: int, sample_count: int = 256, seed: int = 0, oversample: int = 4) -> float:
    """Empirical constant in |K| <= c N / (q^(1/2) (1 + N ||t-a/q||^(1/2))).

    Samples t = 0 plus ``sample_count`` uniform random times.
    """
    rng = np.random.default_rng(seed)
    times = np.concatenate([[0.0], rng.random(sample_count)])
    return float(weyl_bound_ratios(N, times, oversample).max())


# ---------------------------------------------------------------- bump Phi

ETA_LO, ETA_HI = 1.0 / 200, 1.0 / 100


def eta(u):
    """Smooth bump on [1/200, 1/100], peak value 1 at the midpoint."""
    u = np.asarray(u, dtype=np.float64)
    s = (u - 0.5 * (ETA_LO + ETA_HI)) / (0.5 * (ETA_HI - ETA_LO))
    inside = np.abs(s) < 1
    out = np.zeros(u.shape)
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si * si))
    return out


def eta_hat(xi, nodes: int = 256):
    """Fourier transform of the even extension eta(|v|):
    2 * int eta(v) cos(2 pi xi v) dv, by Gauss-Legendre on the support."""
    x, w = leggauss(nodes)
    v = ETA_LO + (x + 1) * 0.5 * (ETA_HI - ETA_LO)
    w = w * 0.5 * (ETA_HI - ETA_LO)
    xi = np.asarray(xi, dtype=np.float64)
    vals = 2.0 * (np.cos(2 * np.pi * np.multiply.outer(xi, v)) * eta(v)) @ w
    return vals if vals.ndim else float(vals)


def phi_bump(M: int, t):
    """Phi(t) = sum_{M <= q < 2M} sum_{a in J_q} eta(q^2 ||t - a/q||)."""
    t0 = np.asarray(t, dtype=np.float64)
    t = np.atleast_1d(t0)
    out = np.zeros(t.shape)
    for q in range(M, 2 * M):
        a = np.rint(t * q)
        u = q * q * np.abs(t - a / q)
        ar = np.mod(a, q).astype(np.int64)
        ar[ar == 0] = q
        ok = np.gcd(ar, q) == 1
        out += np.where(ok, eta(u), 0.0)
    return out.reshape(t0.shape) if t0.ndim else float(out[0])


def phi_fourier(M: int, k: int) -> float:
    """Closed form hat Phi(k) = sum_{M<=q<2M} q^-2 c_q(k) eta_hat(k / q^2)."""
    return float(sum(ramanujan_sum(q, k) * eta_hat(k / (q * q)) / (q * q) for q in range(M, 2 * M)))


def phi_fourier_quadrature(M: int, k: int, nodes: int = 128) -> float:
    """int_0^1 Phi(t) e(-k t) dt by Gauss-Legendre on each bump support.

    The supports are disjoint, so this is a direct quadrature of phi_bump.
    """
    x, w = leggauss(nodes)
    total = 0.0 + 0j
    for q in range(M, 2 * M):
        lo, hi = ETA_LO / (q * q), ETA_HI / (q * q)
        half = 0.5 * (hi - lo)
        for a in coprime_residues(q):
            c = a / q
            for side in (-1.0, 1.0):
                t = c + side * (lo + (x + 1) * half)
                total += np.sum(w * half * phi_bump(M, t) * e(-k * t))
    return float(total.real)


# ---------------------------------------------------------------- moments

@dataclass(frozen=True)
class MomentResult:
    N: int
    r: float
    value: float
    method: str
    grid_points: int = 0
    under_resolved: bool = False

    @property
    def normalized(self) -> float:
        return self.value / self.N ** (self.r - 2)


_I64_MAX = np.iinfo(np.int64).max


def _isqrt_vec(x: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(x.astype(np.float64))).astype(np.int64)
    r = np.where(r * r > x, r - 1, r)
    return np.where((r + 1) * (r + 1) <= x, r + 1, r)


def _sum_squares(h: np.ndarray) -> int:
    """Exact sum of h^2 as a Python int."""
    if h.dtype == object:
        return sum(int(v) * int(v) for v in h)
    hmax = int(h.max()) if h.size else 0
    if hmax == 0:
        return 0
    chunk = max(1, min(h.size, _I64_MAX // (hmax * hmax)))
    total = 0
    for i in range(0, h.size, chunk):
        c = h[i:i + chunk]
        total += int(np.dot(c, c))
    return total


def pair_square_sumsq(N: int, window: int = 1 << 22) -> int:
    """sum_s h_2(s)^2 with h_2(s) = #{0<=a,b<=N : a^2+b^2 = s}, in s-windows."""
    a = np.arange(N + 1, dtype=np.int64)
    a2 = a * a
    smax = 2 * N * N
    total = 0
    for s0 in range(0, smax + 1, window):
        s1 = min(s0 + window, smax + 1)
        lo = np.maximum(s0 - a2, 0)
        hi = s1 - 1 - a2
        ok = hi >= 0
        b_lo = _isqrt_vec(lo)
        b_lo = np.where(b_lo * b_lo < lo, b_lo + 1, b_lo)
        b_hi = np.minimum(_isqrt_vec(np.maximum(hi, 0)), N)
        L = np.where(ok, np.maximum(b_hi - b_lo + 1, 0), 0)
        if L.sum() == 0:
            continue
        start = np.repeat(np.cumsum(L) - L, L)
        b = np.arange(int(L.sum()), dtype=np.int64) - start + np.repeat(b_lo, L)
        s = np.repeat(a2, L) + b * b
        total += _sum_squares(np.bincount(s - s0, minlength=s1 - s0).astype(np.int64))
    return total


def square_rep_counts(N: int, m: int, bigint: bool = False) -> np.ndarray:
    """h_m(s) = #{(n_1..n_m) in [0, N]^m : sum n_i^2 = s}, s = 0..m N^2."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if (N + 1) ** (m - 1) > _I64_MAX // 2 and not bigint:
        raise OverflowError(f"counts for N={N}, m={m} may exceed int64; pass bigint=True")
    dtype = object if (N + 1) ** (m - 1) > _I64_MAX // 2 else np.int64
    sq = np.arange(N + 1, dtype=np.int64) ** 2
    h = np.zeros(N * N + 1, dtype=dtype)
    h[sq] = 1
    for _ in range(m - 1):
        nxt = np.zeros(h.size + N * N, dtype=dtype)
        for s in sq:
            nxt[s:s + h.size] += h
        h = nxt
    return h


def even_moment_exact(N: int, m: int, bigint: bool = False) -> int:
    """int_0^1 |F(t)|^(2m) dt, counted as solutions of
    n_1^2+...+n_m^2 = n_{m+1}^2+...+n_{2m}^2 with 0 <= n_i <= N."""
    if m == 1:
        return N + 1
    if m == 2 and N > 256:
        return pair_square_sumsq(N)
    return _sum_squares(square_rep_counts(N, m, bigint=bigint))


def grid_mean(values: np.ndarray, chunk: int = 1 << 20) -> float:
    """Mean over a uniform grid, summed in fixed chunks combined by fsum."""
    parts = [float(np.sum(values[i:i + chunk])) for i in range(0, values.size, chunk)]
    return math.fsum(parts) / values.size


def moment_quadrature(N: int, r: float, grid_points: int | None = None, oversample: int = 64,
                      chunk: int = 1 << 20) -> MomentResult:
    """Periodic trapezoid estimate of int_0^1 |F(t)|^r dt on a uniform grid.

    Chunk sums are combined with math.fsum so the result does not depend on
    how chunks are scheduled.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    G = grid_points or oversample * max(N * N, 1)
    F = np.abs(weyl_sum_grid(N, G))
    value = grid_mean(F ** r, chunk)
    return MomentResult(N, r, value, "quadrature", G, G < 64 * N * N)


# ---------------------------------------------------------------- F_a clustering

def pair_frequencies(form: QuadraticForm, points: np.ndarray, values: np.ndarray, a):
    """Pairs (n, a-n) with both in the support: returns (omega, weight).

    omega = Q(n) + Q(a - n), weight = c_n c_{a-n}.
    """
    pts = np.asarray(points, dtype=np.int64)
    index = {tuple(p): i for i, p in enumerate(pts)}
    a = np.asarray(a, dtype=np.int64)
    i1, i2 = [], []
    for i, p in enumerate(pts):
        j = index.get(tuple(a - p))
        if j is not None:
            i1.append(i)
            i2.append(j)
    i1, i2 = np.asarray(i1, dtype=np.int64), np.asarray(i2, dtype=np.int64)
    if form.is_rational:
        L, q = form.scaled_int_values(pts)
        omega_scaled = q[i1] + q[i2]
        omega = omega_scaled / L
    else:
        qv = form.values(pts)
        omega_scaled, L = None, None
        omega = qv[i1] + qv[i2]
    vals = np.asarray(values)
    return omega, vals[i1] * vals[i2], (omega_scaled, L)


def pair_bucket_norm(form: QuadraticForm, points, values, a, p_prime: float) -> float:
    """[sum_k (sum_{omega in (k-1/2, k+1/2]} |c_n c_{a-n}|)^p']^(1/p').

    Buckets are half-open so each omega lands in exactly one; exact integer
    arithmetic is used for rational forms.
    """
    omega, w, (scaled, L) = pair_frequencies(form, points, values, a)
    if omega.size == 0:
        return 0.0
    if scaled is not None:
        # k = ceil(omega - 1/2) = ceil((2 s - L) / (2 L))
        k = -((L - 2 * scaled) // (2 * L))
    else:
        k = np.ceil(omega - 0.5).astype(np.int64)
    k = k - k.min()
    sums = np.bincount(k, weights=np.abs(w))
    if math.isinf(p_prime):
        return float(sums.max())
    return float(np.sum(sums ** p_prime) ** (1.0 / p_prime))
