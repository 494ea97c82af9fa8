import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from irrtorus import strichartz as S
from irrtorus.field import BandLimitedField, SpaceTimeGrid, make_field, propagate_eval, spacetime_norm
from irrtorus.quadform import Annulus, Cube, FreqBox, QuadraticForm

SQ2 = math.sqrt(2)
FORM2 = QuadraticForm((1, SQ2))


# ---------------------------------------------------------------- exponents

def test_predicted_exponent_examples():
    assert S.predicted_exponent(2, 4) == (pytest.approx(1 / 6), False)
    assert S.predicted_exponent(2, 8) == (pytest.approx(0.5), False)
    assert S.predicted_exponent(3, 5, partial=True) == (pytest.approx(0.5), False)
    assert S.predicted_exponent(3, 6)[0] == pytest.approx(1.5 - 5 / 6)
    assert S.predicted_exponent(6, 5) == (pytest.approx(3 - 8 / 5), False)
    assert S.predicted_exponent(2, 2) == (0.0, False)
    with pytest.raises(ValueError):
        S.predicted_exponent(2, 1.5)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 7), st.floats(2.0, 30.0), st.booleans())
def test_predicted_exponent_continuous_monotone(d, p, partial):
    a, _ = S.predicted_exponent(d, p, partial)
    b, _ = S.predicted_exponent(d, p + 1e-7, partial)
    assert b >= a - 1e-12
    assert abs(b - a) < 1e-5
    assert a >= -1e-12
    assert a >= S.scaling_exponent(d, p) - 1e-12


def test_exponent_fit_examples():
    Ns = [4, 8, 16, 32]
    fit = S.exponent_fit([(n, 3 * n ** 1.25) for n in Ns])
    assert fit.slope == pytest.approx(1.25) and fit.intercept == pytest.approx(math.log(3))
    assert fit.residual < 1e-12
    assert S.exponent_fit([(n, 2.0) for n in Ns]).slope == pytest.approx(0.0, abs=1e-12)
    fit = S.exponent_fit([(n, n ** 0.5) for n in Ns], predicted=0.5, tolerance=1e-6)
    assert fit.verdict and fit.delta < 1e-12
    with pytest.raises(ValueError):
        S.exponent_fit([(4, 1.0), (8, 2.0)])
    with pytest.raises(ValueError):
        S.exponent_fit([(4, 1.0), (8, 0.0), (16, 2.0)])


def test_exponent_fit_noisy():
    rng = np.random.default_rng(0)
    Ns = np.array([4, 8, 16, 32, 64, 128])
    for _ in range(20):
        vals = Ns ** 0.5 * (1 + 0.01 * rng.standard_normal(Ns.size))
        fit = S.exponent_fit(list(zip(Ns, vals)))
        assert 0.48 <= fit.slope <= 0.52
        lo, hi = fit.interval()
        assert lo < hi


# ---------------------------------------------------------------- quotients

def exact_l4_fourth(form, fld):
    """int_0^1 int |u|^4 with the time integral done in closed form:
    sum over s of sum_{pairs, pairs'} a a' kappa(omega - omega'), kappa(nu) = int_0^1 e(nu t)."""
    pts, c = fld.points(), fld.values()
    q = form.values(pts)
    i, j = np.meshgrid(np.arange(len(pts)), np.arange(len(pts)), indexing="ij")
    i, j = i.ravel(), j.ravel()
    s = pts[i] + pts[j]
    key = np.unique(s, axis=0, return_inverse=True)[1].ravel()
    order = np.argsort(key, kind="stable")
    key, om, a = key[order], (q[i] + q[j])[order], (c[i] * c[j])[order]
    cuts = np.flatnonzero(np.diff(key)) + 1
    total = 0.0
    for o, w in zip(np.split(om, cuts), np.split(a, cuts)):
        nu = o[:, None] - o[None, :]
        safe = np.where(nu == 0, 1.0, nu)
        k = np.where(nu == 0, 1.0, (np.exp(2j * np.pi * nu) - 1) / (2j * np.pi * safe))
        total += float(np.real(w @ k @ np.conj(w)))
    return total


def test_quotient_trivial_values():
    f = make_field("gaussian-random", FreqBox(2, 3), seed=1).scaled(4.0)
    g = SpaceTimeGrid.default(FORM2, 3, (0.0, 0.5), time_oversample=8)
    assert S.strichartz_quotient(FORM2, f, 2, g) == pytest.approx(math.sqrt(0.5), rel=1e-10)
    m = make_field("single-mode", FreqBox(2, 3), n0=(1, -2), amplitude=2.0)
    for p in (3, 6, 10):
        assert S.strichartz_quotient(FORM2, m, p, g) == pytest.approx(0.5 ** (1 / p), rel=1e-12)
    with pytest.raises(ValueError):
        S.strichartz_quotient(FORM2, BandLimitedField(FreqBox(2, 1), np.zeros(9)), 4)


def test_quotient_p4_against_closed_form_time_integral():
    f = make_field("all-ones", FreqBox(2, 8))
    exact = exact_l4_fourth(FORM2, f) ** 0.25
    assert S.strichartz_quotient(FORM2, f, 4) == pytest.approx(exact, rel=1e-6)


def test_quotient_monotone_in_p():
    # on the probability space I x T^d with |I| = 1, L^p norms increase with p
    f = make_field("gaussian-random", FreqBox(2, 3), seed=2)
    g = SpaceTimeGrid.default(FORM2, 3, time_oversample=8)
    vals = [S.strichartz_quotient(FORM2, f, p, g) for p in (2, 3, 4, 6, 8)]
    assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))


def test_adjoint_flow_is_adjoint():
    box = FreqBox(2, 2)
    grid = SpaceTimeGrid((7, 7), 12)
    rng = np.random.default_rng(3)
    c = rng.standard_normal(box.shape) + 1j * rng.standard_normal(box.shape)
    g = rng.standard_normal((13, 7, 7)) + 1j * rng.standard_normal((13, 7, 7))
    u = propagate_eval(FORM2, BandLimitedField(box, c), grid).values
    lhs = np.sum(grid.weights()[:, None, None] * u * np.conj(g)) / 49
    rhs = np.sum(c * np.conj(S.adjoint_flow(FORM2, box, grid, g)))
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_extremizer_trivial():
    g = SpaceTimeGrid.default(FORM2, 0, (0.0, 2.0), time_oversample=4)
    assert S.extremizer_search(FORM2, 0, 6, g, restarts=1).quotient == pytest.approx(2 ** (1 / 6))
    g = SpaceTimeGrid.default(FORM2, 2, time_oversample=4)
    assert S.extremizer_search(FORM2, 2, 2, g, restarts=2).quotient == pytest.approx(1.0, rel=1e-10)


def test_extremizer_beats_multistart():
    N, p = 2, 4
    g = SpaceTimeGrid.default(FORM2, N, time_oversample=16)
    res = S.extremizer_search(FORM2, N, p, g, iters=50, restarts=4, seed=0)
    assert all(b >= a for a, b in zip(res.history, res.history[1:]))
    best = max(S.strichartz_quotient(FORM2, make_field("gaussian-random", FreqBox(2, N), seed=1000 + s), p, g)
               for s in range(200))
    assert res.quotient >= best - 1e-3
    assert res.quotient == pytest.approx(S.strichartz_quotient(FORM2, res.field, p, g), rel=1e-12)


def test_knp_sweep_needs_three_points():
    with pytest.raises(ValueError):
        S.knp_sweep(FORM2, 8, [4, 8])


def test_knp_sweep_small():
    res = S.knp_sweep(FORM2, 6, [2, 3, 4], families=("all-ones", "gaussian-random"), seeds=(0, 1),
                      time_oversample=8)
    # one row per (N, family); the random family keeps the max over seeds
    assert len(res.rows) == 3 * 2
    assert [r[0] for r in res.rows] == [2, 2, 3, 3, 4, 4]
    assert [v for _, v in res.fit.points] == [max(r[2] for r in res.rows if r[0] == N) for N in (2, 3, 4)]
    assert res.fit.predicted == pytest.approx(S.predicted_exponent(2, 6)[0])
    assert res.eps_loss


# ---------------------------------------------------------------- multilinear

def test_multilinear_single_modes():
    form = QuadraticForm((1, SQ2, 1.7))
    fs = [make_field("single-mode", FreqBox(3, N), n0=n0, amplitude=a)
          for N, n0, a in [(4, (3, -4, 1), 0.5), (2, (1, 1, -2), 2j), (1, (0, 1, 0), 1.5)]]
    g = S.product_grid(form, fs, (0.0, 0.5))
    res = S.multilinear_quotient(form, fs, g)
    assert res.lhs == pytest.approx(math.sqrt(0.5) * 0.5 * 2 * 1.5, rel=1e-12)


def test_multilinear_equal_fields_is_l4_squared():
    f = make_field("gaussian-random", FreqBox(2, 3), seed=4)
    g = S.product_grid(FORM2, [f, f])
    lhs = S.multilinear_quotient(FORM2, [f, f], g).lhs
    assert lhs == pytest.approx(spacetime_norm(propagate_eval(FORM2, f, g), 4) ** 2, rel=1e-12)


def test_multilinear_homogeneity_and_symmetry():
    form = QuadraticForm((1, SQ2, math.sqrt(3)))
    a = make_field("gaussian-random", FreqBox(3, 2), seed=5)
    b = make_field("gaussian-random", FreqBox(3, 2), seed=6)
    c = make_field("gaussian-random", FreqBox(3, 1), seed=7)
    g = S.product_grid(form, [a, b, c], time_oversample=4)
    base = S.multilinear_quotient(form, [a, b, c], g).lhs
    assert S.multilinear_quotient(form, [a.scaled(3), b, c], g).lhs == pytest.approx(3 * base, rel=1e-12)
    assert S.multilinear_quotient(form, [b, a, c], g).lhs == pytest.approx(base, rel=1e-12)


def test_multilinear_frequency_oracle():
    form = QuadraticForm((1, SQ2, math.sqrt(3)))
    fs = []
    for N, seed in [(16, 1), (4, 2), (2, 3)]:
        f = make_field("gaussian-random", FreqBox(3, N), seed=seed)
        fs.append(f.restrict(Annulus(3, N).contains))
    g = S.product_grid(form, fs)
    g = SpaceTimeGrid(g.P, 3, 0.0, 0.01)
    phys = S.product_l2_sq(form, fs, g)
    freq = S.product_l2_sq_frequency(form, fs, g)
    assert phys == pytest.approx(freq, rel=1e-6)


def test_multilinear_support_and_scale_checks():
    a = make_field("gaussian-random", FreqBox(2, 4), seed=1)
    b = make_field("gaussian-random", FreqBox(2, 2), seed=2)
    with pytest.raises(ValueError):
        S.multilinear_quotient(FORM2, [a, b], supports=[Annulus(2, 4), Annulus(2, 2)])
    with pytest.raises(ValueError):
        S.multilinear_quotient(FORM2, [a, b], scales=[2, 4])
    a, b = a.restrict(Annulus(2, 4).contains), b.restrict(Annulus(2, 2).contains)
    res = S.multilinear_quotient(FORM2, [a, b], supports=[Annulus(2, 4), Annulus(2, 2)], s=0.5)
    # k = 1, d = 2: N1^{-s} (N1 N2)^s |a||b| and, at s_c = 0, (N2/N1 + 1/N2)^delta |a||b| = |a||b|
    assert res.rhs_subcritical == pytest.approx(math.sqrt(2) * a.l2norm * b.l2norm, rel=1e-12)
    assert res.rhs_critical == pytest.approx(a.l2norm * b.l2norm, rel=1e-12)


def test_default_delta_in_admissible_range():
    for d, k in [(2, 5), (3, 3), (4, 2), (2, 1)]:
        assert 0 <= S.default_delta(d, k) < 0.5


# ---------------------------------------------------------------- strips

def test_strip_single_strip_ratio_one():
    form = QuadraticForm((1, SQ2, math.sqrt(3)))
    cube = Cube((20, 0, 0), 1)
    u1 = make_field("gaussian-random", FreqBox(3, 1, cube.center), seed=1)
    u2 = make_field("gaussian-random", FreqBox(3, 2), seed=2)
    res = S.strip_orthogonality_check(form, 8, 2, cube, [u1, u2], M=100)
    assert res.ratio == 1.0 and res.strips == 1


def test_strip_two_strip_toy():
    # two strips whose modes have Q values far apart relative to N2^2: the
    # products live in disjoint time-frequency bands, ratio ~ 1
    form = QuadraticForm((1, SQ2))
    cube = Cube((40, 0), 20)
    box = FreqBox(2, 20, cube.center)
    c = np.zeros(box.shape, complex)
    c[0, 20] = 1.0          # n = (20, 0), Q = 400
    c[40, 20] = 1.0         # n = (60, 0), Q = 3600
    u1 = BandLimitedField(box, c)
    u2 = make_field("gaussian-random", FreqBox(2, 2), seed=3)
    res = S.strip_orthogonality_check(form, 64, 2, cube, [u1, u2], M=20, time_oversample=8)
    assert res.strips >= 2
    assert res.ratio == pytest.approx(1.0, abs=1e-3)


def test_strip_requires_centered_field():
    cube = Cube((10, 0), 2)
    u1 = make_field("gaussian-random", FreqBox(2, 2), seed=1)
    u2 = make_field("gaussian-random", FreqBox(2, 2), seed=2)
    with pytest.raises(ValueError):
        S.strip_orthogonality_check(FORM2, 16, 4, cube, [u1, u2])


# ---------------------------------------------------------------- Hausdorff-Young

def test_hy_single_term():
    pts = np.array([[1, 0], [2, 1]])
    vals = np.array([0.5, 2.0])
    for p in (2, 4, 8):
        res = S.hausdorff_young_check(FORM2, pts, vals, (3, 1), p)
        # F_a has two equal terms (n and a-n swap): |F| = 2 |c c| constant
        assert res.rhs == pytest.approx(2.0)
        assert res.lhs == pytest.approx(2 ** (1 / p) * 2.0, rel=1e-9)
        assert res.ratio == pytest.approx(2 ** (1 / p), rel=1e-9)


def test_hy_high_p():
    rng = np.random.default_rng(4)
    pts = FreqBox(2, 4).points()
    for _ in range(10):
        vals = rng.standard_normal(len(pts)) + 1j * rng.standard_normal(len(pts))
        a = tuple(rng.integers(-4, 5, size=2))
        assert S.hausdorff_young_check(FORM2, pts, vals, a, 64).ratio <= 2


def test_hy_empty():
    res = S.hausdorff_young_check(FORM2, np.array([[0, 0]]), np.array([1.0]), (5, 5), 4)
    assert res.lhs == 0 and res.rhs == 0


# ---------------------------------------------------------------- dual identity

def test_dual_single_spacetime_mode():
    N = 3
    grid = SpaceTimeGrid((9, 9), 64 * 13)
    n = (1, -2)
    t = grid.times()[:, None, None]
    x1 = (np.arange(9) / 9)[None, :, None]
    x2 = (np.arange(9) / 9)[None, None, :]
    f = np.exp(2j * np.pi * (n[0] * x1 + n[1] * x2 + (1 + 4 * SQ2) * t))
    res = S.dual_kernel_check(FORM2, N, f, grid, 16)
    assert res.lhsum == pytest.approx(1.0, abs=1e-6)
    assert res.identity_residual < 1e-6
    assert res.lhsum <= res.bound


def test_dual_random_small():
    N = 3
    grid = SpaceTimeGrid((9, 9), 64 * 13)
    rng = np.random.default_rng(0)
    for _ in range(3):
        f = rng.standard_normal((grid.T_s + 1, 9, 9)) + 1j * rng.standard_normal((grid.T_s + 1, 9, 9))
        res = S.dual_kernel_check(FORM2, N, f, grid, 16)
        assert res.identity_residual < 1e-6
        assert res.lhsum <= res.bound
    with pytest.raises(ValueError):
        S.dual_kernel_check(QuadraticForm((1, 1, 1)), N, f, grid, 16)
