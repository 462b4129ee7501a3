import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opuc_spectra import sequences as S
from opuc_spectra.arcs import arc
from opuc_spectra.diagonalization import (
    detect_sign_constants,
    eigen_frame,
    frame_series,
    lambda_plus_minus,
    perturbation_matrix,
    perturbation_norms,
    reconstruction_residual,
    relative_increment_sums,
    select_lambda,
    spectral_norm_2x2,
)
from opuc_spectra.errors import DiagnosticError, OutOfBandError, RegionError
from opuc_spectra.transfer import TildeBlock, block_data, circle_points, tilde_block, transfer_block

in_band = st.tuples(st.floats(-1.9, 1.9), st.floats(-0.5, 0.5)).map(lambda t: complex(*t)).filter(lambda d: abs(d) < 1.9)


def test_lambda_examples():
    lp, lm = lambda_plus_minus(0.0)
    assert abs(lp - 1j) < 1e-15 and abs(lm + 1j) < 1e-15
    lp, lm = lambda_plus_minus(math.sqrt(2))
    assert abs(lp - cmath.exp(1j * math.pi / 4)) < 1e-15
    assert abs(lm - cmath.exp(-1j * math.pi / 4)) < 1e-15
    lp, lm = lambda_plus_minus(1 + 0.1j)
    assert abs(lp) > 1 > abs(lm)
    with pytest.raises(OutOfBandError):
        lambda_plus_minus(2.0)
    with pytest.raises(OutOfBandError):
        lambda_plus_minus(np.array([0.0, -2.5]))
    assert select_lambda(0.3, -1) == lambda_plus_minus(0.3)[::-1]


@settings(max_examples=200, deadline=None)
@given(in_band)
def test_lambda_identities(d):
    lp, lm = lambda_plus_minus(d)
    assert abs(lp * lm - 1) < 1e-13
    assert abs(lp + lm - d) < 1e-13
    cp, cm = lambda_plus_minus(d.conjugate())
    assert abs(cp - lm.conjugate()) < 1e-13 and abs(cm - lp.conjugate()) < 1e-13
    if abs(d) <= 1.9 and d.imag == 0:
        assert lp.imag > 0 > lm.imag


@settings(max_examples=50, deadline=None)
@given(st.floats(-1.9, 1.9))
def test_lambda_modulus_increasing_in_imaginary_part(x):
    y = np.linspace(0, min(1.0, 0.99 * math.sqrt(4 - x * x)), 101)
    mods = np.abs(lambda_plus_minus(x + 1j * y)[0])
    assert np.all(np.diff(mods) > 0)


def test_free_sign_constants(free_sc):
    assert free_sc.s == 1 and free_sc.t == 1
    assert 0 < free_sc.margin_c <= 2 - 2 * math.cos(math.pi / 4) + 1e-12
    assert free_sc.m0 == 0


def test_arc_through_band_edge_rejected(free):
    with pytest.raises(RegionError):
        detect_sign_constants(free, 1, arc(-0.5, 0.5))


def test_multi_arc_rejected(free):
    from opuc_spectra.arcs import ArcSet

    with pytest.raises(RegionError):
        detect_sign_constants(free, 1, ArcSet(((1.0, 1.5), (3.0, 3.5))))


def test_rotating_sign_constants(rotating_sc):
    assert rotating_sc.s == rotating_sc.t == 1
    assert rotating_sc.margin_c > 0.05
    assert rotating_sc.epsilon <= 0.05


def test_free_eigenframe(free, free_sc):
    for th in np.linspace(math.pi / 2, 3 * math.pi / 2, 9):
        z = cmath.exp(1j * th)
        tb = tilde_block(transfer_block(free, 0, 1, z), free_sc.branch(1))
        fr = eigen_frame(tb, free_sc)
        assert abs(fr.lam - cmath.exp(0.5j * th)) < 1e-14
        assert abs(fr.lam * fr.lam_inv - 1) < 1e-13
        np.testing.assert_allclose(fr.U[1], [1j * math.sin(th / 2)] * 2, atol=1e-14)
        assert abs(fr.det_u - (fr.lam - fr.lam_inv) * tb.c) < 1e-12
        assert reconstruction_residual(tb, fr) < 1e-13


def test_eigenframe_precondition(free, free_sc):
    tb = tilde_block(transfer_block(free, 0, 1, cmath.exp(0.05j)), free_sc.branch(1))
    with pytest.raises(RegionError):
        eigen_frame(tb, free_sc)


def test_reconstruction_random_samples(rotating, rotating_sc, rng):
    lo, hi = rotating_sc.arc_bounds
    ms = rng.integers(0, 5000, 100)
    theta = rng.uniform(lo, hi, 100)
    r = 1 - rng.uniform(0, rotating_sc.epsilon, 100)
    z, zh = circle_points(theta, r)
    data = block_data(rotating, ms, 1, z, zh, derivative=False)  # 10^4 samples
    tb = TildeBlock(a=data.a, b=data.b, c=data.c, d=data.d, delta=data.delta)
    fr = eigen_frame(tb, rotating_sc)
    assert reconstruction_residual(tb, fr).max() <= 1e-10
    assert np.max(np.abs(fr.det_u - (fr.lam - fr.lam_inv) * data.c)) <= 1e-12 * max(1, np.abs(fr.det_u).max())
    assert np.max(np.abs(fr.lam * fr.lam_inv - 1)) < 1e-13


def test_contraction_inside_disk(rotating, rotating_sc):
    theta = rotating_sc.arc.grid(41)
    ratios = []
    for m0 in (0, 2000, 8000):
        ms = np.arange(m0, m0 + 50)
        for depth in (1e-4, 1e-3, rotating_sc.epsilon):
            fs = frame_series(rotating, ms, 1, theta, 1 - depth, rotating_sc.s)
            ratios.append(((1 - np.abs(fs.lam)) / depth).min())
            # the reciprocal eigenvalue lies on the other side of the real axis
            assert np.all(rotating_sc.s * fs.lam_inv.imag < 0)
    ratios = np.array(ratios).reshape(3, 3)
    assert ratios.min() > 0
    assert ratios[:, 0].max() / ratios[:, 0].min() < 1.5


def test_identical_blocks_give_zero_perturbation(rotating_sc):
    spec = S.constant(0.5)
    a = eigen_frame(tilde_block(transfer_block(spec, 0, 1, cmath.exp(2j))), rotating_sc)
    b = eigen_frame(tilde_block(transfer_block(spec, 5, 1, cmath.exp(2j))), rotating_sc)
    pm = perturbation_matrix(a, b, coefficient_variation=0.0)
    assert pm.norm < 1e-15 and pm.ratio is None
    assert pm.e == pm.W[0, 0] and pm.h == pm.W[1, 1]


def test_spectral_norm_closed_form(rng):
    W = rng.normal(size=(50, 2, 2)) + 1j * rng.normal(size=(50, 2, 2))
    np.testing.assert_allclose(spectral_norm_2x2(W), np.linalg.norm(W, 2, axis=(-2, -1)), rtol=1e-12)


def test_rotating_square_sum_converges(rotating, rotating_sc):
    theta = rotating_sc.arc.grid(21)
    ms = np.arange(0, 20001)
    norms, var = perturbation_norms(rotating, 1, theta, rotating_sc, ms)
    partial = np.cumsum(norms.max(axis=1) ** 2)
    # tail increments shrink: last quarter adds far less than the first
    q = len(partial) // 4
    assert partial[-1] - partial[3 * q] < 0.02 * partial[-1]
    tail = norms.max(axis=1)[1000:]
    diffs = tail**2
    slope = np.polyfit(np.log(np.arange(1001, 1001 + len(diffs))), np.log(diffs + 1e-300), 1)[0]
    assert slope < -1.2  # about -3/2 for |alpha'| ~ n^{-3/4}
    ratio = norms.max(axis=1) / var
    assert ratio.max() < 10 * np.median(ratio)


def test_increment_sums_constant():
    res = relative_increment_sums(np.full(20, 0.3 + 1j))
    assert res.value == 0 and res.max_modulus == 0


def test_increment_sums_alternating():
    n = np.arange(41)
    eps = 1j + (-1.0) ** n / 10
    for k, l in [(0, 39), (3, 17), (10, 10)]:
        res = relative_increment_sums(eps, k, l)
        direct = sum((eps[j + 1] - eps[j]) / eps[j] for j in range(k, l + 1))
        assert abs(res.value - direct) < 1e-13
        sq = sum(abs(eps[j + 1] - eps[j]) ** 2 for j in range(k, l + 1))
        # |log(1+x) - x| <= |x|^2 for |x| <= 1/2, and |x| <= |eps_{n+1} - eps_n| since |eps_n| >= 1
        assert abs(res.value) <= abs(cmath.log(eps[l + 1] / eps[k])) + sq + 1e-13
    full = relative_increment_sums(eps)
    assert full.max_modulus >= abs(full.value)
    assert full.bound_constant == pytest.approx(math.hypot(1, 0.1))


def test_increment_sums_validation():
    eps = np.array([1j, 2j, -0.5 + 0j, 1j])
    with pytest.raises(DiagnosticError, match="n = 2"):
        relative_increment_sums(eps)
    with pytest.raises(DiagnosticError, match="n = 1"):
        relative_increment_sums(np.array([1j, 5j, 1j]), bound=2.0)


def test_increment_sums_rotating_bounded(rotating, rotating_sc):
    z, zh = circle_points(np.array([2.0, math.pi, 4.0]))
    data = block_data(rotating, np.arange(0, 4001), 1, z, zh, derivative=False)
    for j in range(3):
        c = rotating_sc.t * data.c[:, j]
        lam, lam_inv = select_lambda(data.delta[:, j], rotating_sc.s)
        for eps in (c, rotating_sc.s * (lam - lam_inv)):
            short = relative_increment_sums(eps[:1001]).max_modulus
            long = relative_increment_sums(eps).max_modulus
            assert np.isfinite(long) and long < 2.0
            assert long <= short + 0.5
