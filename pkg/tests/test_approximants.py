import math
import warnings

import numpy as np
import pytest

from opuc_spectra import sequences as S
from opuc_spectra.approximants import (
    DensityProfile,
    EntropyWarning,
    ac_density,
    approximant_spec,
    choose_stripping_offset,
    entropy_integral,
    oracle_density,
    product_diagnostics,
    weyl_bound_report,
    weyl_solution,
)
from opuc_spectra.arcs import ArcSet, arc
from opuc_spectra.diagonalization import detect_sign_constants
from opuc_spectra.errors import BudgetError
from opuc_spectra.szego import caratheodory_function, radial_density, natural_tail
from opuc_spectra.transfer import block_data, circle_points

FREE_ARC = arc(math.pi / 2, 3 * math.pi / 2)


@pytest.fixture(scope="module")
def bs_sc(bernstein_szego):
    return detect_sign_constants(bernstein_szego, 1, FREE_ARC)


def test_approximant_definition(rotating):
    ap = approximant_spec(rotating, 3, 1)
    n = np.arange(12)
    vals = ap.alphas(n)
    np.testing.assert_array_equal(vals[:3], rotating.alphas(n[:3]))
    np.testing.assert_array_equal(vals[3:], np.full(9, rotating(3)))
    per = S.periodic([0.3, -0.1j])
    np.testing.assert_array_equal(approximant_spec(per, 5, 2).alphas(np.arange(50)), per.alphas(np.arange(50)))
    ap2 = approximant_spec(rotating, 4, 2)
    np.testing.assert_array_equal(ap2.alphas(np.arange(8, 20)), np.tile(rotating.alphas(np.arange(8, 10)), 6))
    with pytest.raises(ValueError):
        approximant_spec(rotating, -1, 1)


def test_tail_discriminant_equals_block_N(rotating):
    ap = approximant_spec(rotating, 7, 1)
    z, zh = circle_points(np.linspace(1, 5, 9))
    base = block_data(rotating, [7], 1, z, zh, False).delta[0]
    tail = block_data(ap, np.arange(7, 30), 1, z, zh, False).delta
    np.testing.assert_array_equal(tail, np.broadcast_to(base, tail.shape))


def test_free_weyl_solution(free, free_sc):
    theta = np.linspace(1.7, 4.5, 11)
    N = 20
    tr = weyl_solution(approximant_spec(free, N, 1), sc=free_sc, theta=theta)
    lam = np.exp(0.5j * theta)
    n = np.arange(N + 1)[:, None]
    expect = lam[None, :] ** (n - N) * 1j * np.sin(theta / 2)[None, :]
    np.testing.assert_allclose(tr.u[..., 0], expect, atol=1e-13)
    np.testing.assert_allclose(tr.u[..., 1], expect, atol=1e-13)
    np.testing.assert_allclose(tr.wronskian[0], 2 * np.sin(theta / 2) ** 2, atol=1e-13)
    assert tr.roundtrip_residual < 1e-12 and tr.wronskian_drift < 1e-12


def test_free_density_is_one(free, free_sc):
    theta = FREE_ARC.grid(101)
    for N in (1, 10, 100):
        prof = ac_density(approximant_spec(free, N, 1), theta, free_sc)
        assert np.max(np.abs(prof.w - 1.0)) <= 1e-10


def test_rotating_weyl_invariants(rotating, rotating_sc):
    theta = rotating_sc.arc.grid(51)
    tr = weyl_solution(approximant_spec(rotating, 200, 1), sc=rotating_sc, theta=theta)
    assert tr.roundtrip_residual <= 1e-9
    assert tr.wronskian_drift <= 1e-8
    # Wronskian at the origin matches -2 i c_N Im lambda_N
    np.testing.assert_allclose(tr.wronskian[0], (-2j * tr.c_N * tr.lam_N.imag).real, rtol=1e-9)


def test_weyl_solution_complex_z_uses_arc_branch(rotating, rotating_sc):
    theta = np.array([2.0, 3.5, 4.8])
    ap = approximant_spec(rotating, 30, 1)
    a = weyl_solution(ap, sc=rotating_sc, theta=theta)
    b = weyl_solution(ap, np.exp(1j * theta), rotating_sc)
    np.testing.assert_allclose(a.u, b.u, atol=1e-12)


def test_bernstein_szego_matches_oracle(bernstein_szego, bs_sc):
    theta = FREE_ARC.grid(41, interior=0.01)
    for N in (1, 5):
        ap = approximant_spec(bernstein_szego, N, 1)
        w = ac_density(ap, theta, bs_sc).w
        assert np.max(np.abs(w - oracle_density(ap, theta))) < 1e-4
        # the density of a single coefficient measure
        np.testing.assert_allclose(w, 0.75 / np.abs(1 - 0.5 * np.exp(1j * theta)) ** 2, rtol=1e-10)


def test_oracle_equivalence_rotating(rotating, rotating_sc):
    theta = rotating_sc.arc.grid(15, interior=0.05)
    for N in (25, 60):
        ap = approximant_spec(rotating, N, 1)
        w = ac_density(ap, theta, rotating_sc).w
        plain = oracle_density(ap, theta, richardson=False)
        extrap = oracle_density(ap, theta, richardson=True)
        assert np.max(np.abs(w - plain)) <= 1e-3
        assert np.max(np.abs(w - extrap)) <= np.max(np.abs(w - plain))


def test_caratheodory_of_trace(rotating, rotating_sc):
    theta = np.array([2.2, 3.0])
    r = 0.9
    ap = approximant_spec(rotating, 15, 1)
    tr = weyl_solution(ap, sc=rotating_sc, theta=theta, r=r)
    F = caratheodory_function(ap, r * np.exp(1j * theta), ap.schur_tail())
    np.testing.assert_allclose(tr.caratheodory, F, rtol=1e-9)


def test_density_mass_at_most_one(rotating, rotating_sc):
    lo, hi = rotating_sc.arc_bounds
    theta = np.linspace(lo, hi, 801)
    for N in (10, 100, 300):
        w = ac_density(approximant_spec(rotating, N, 1), theta, rotating_sc).w
        assert w.min() >= -1e-9
        assert np.trapezoid(w, theta) / (2 * math.pi) <= 1 + 1e-6


def test_density_cauchy(rotating, rotating_sc):
    theta = rotating_sc.arc.grid(61, interior=0.05)
    w = {N: ac_density(approximant_spec(rotating, N, 1), theta, rotating_sc).w for N in (50, 100, 200, 400, 800)}
    diffs = [np.max(np.abs(w[2 * N] - w[N])) for N in (50, 100, 200, 400)]
    assert all(b < a for a, b in zip(diffs, diffs[1:]))


def test_entropy_trivial():
    theta = np.linspace(0, 2 * math.pi, 257)
    prof = DensityProfile(ArcSet.full(), theta, np.ones_like(theta))
    for weight in ("1", "1-cos", "1-cos2"):
        assert entropy_integral(prof, weight).value == 0.0


def test_entropy_bernstein_szego(bernstein_szego):
    theta = np.linspace(0, 2 * math.pi, 4097)
    w = radial_density(bernstein_szego, theta, natural_tail(bernstein_szego), r=1 - 1e-6)
    rep = entropy_integral(DensityProfile(ArcSet.full(), theta, w, method="caratheodory-radial"))
    assert abs(rep.value - math.log(0.75)) < 1e-6
    assert rep.to_json()["weight"] == "1" and rep.clipped_fraction == 0.0


def test_entropy_clipping_warning():
    theta = np.linspace(0, 1, 11)
    w = np.ones_like(theta)
    w[:3] = 0.0
    with pytest.warns(EntropyWarning):
        rep = entropy_integral(DensityProfile(arc(0, 1), theta, w))
    assert rep.clipped_fraction == pytest.approx(3 / 11)
    assert np.isfinite(rep.value)


def test_entropy_stable_in_N(rotating, rotating_sc):
    theta = rotating_sc.arc.grid(401)
    vals = [entropy_integral(ac_density(approximant_spec(rotating, N, 1), theta, rotating_sc)).value
            for N in (50, 100, 200, 400)]
    assert max(vals) - min(vals) < 0.01


def test_free_product_diagnostics(free, free_sc):
    d = product_diagnostics(approximant_spec(free, 30, 1), sc=free_sc, theta=np.linspace(2, 4, 5))
    assert np.max(np.abs(d.e)) < 1e-15 and np.max(np.abs(d.f)) < 1e-15
    np.testing.assert_allclose(d.phi, 1.0)
    np.testing.assert_allclose(d.nu, 0.0, atol=1e-15)
    np.testing.assert_allclose(d.f_N, 0.0, atol=1e-15)


def test_rotating_product_routes(rotating, rotating_sc):
    theta = np.array([math.pi, 2.0, 4.0])
    for N in (100, 1000):
        d = product_diagnostics(approximant_spec(rotating, N, 1), sc=rotating_sc, theta=theta)
        assert d.product_residual <= 1e-9 and d.normalized_residual <= 1e-9
        tr = weyl_solution(approximant_spec(rotating, N, 1), sc=rotating_sc, theta=theta, check=False)
        np.testing.assert_allclose(d.log_u02, np.log(np.abs(tr.u0[:, 1])), atol=1e-9)


def test_nu_controlled_by_square_sum(rotating, rotating_sc):
    theta = rotating_sc.arc.grid(9, interior=0.05)
    nus, sums = [], []
    for k in (0, 300, 3000):
        d = product_diagnostics(approximant_spec(rotating.strip(k), 200, 1), sc=rotating_sc, theta=theta)
        nus.append(np.abs(d.nu).max())
        sums.append(d.w_norm_sq_partial[-1].max())
    assert nus[0] > nus[1] > nus[2]
    ratios = np.array(nus) / np.array(sums)
    assert ratios.max() < 5 * ratios.min() + 10


def test_weyl_bound_report_free(free, free_sc):
    rep = weyl_bound_report(free, 1, [5, 10], free_sc)
    assert rep.max_log_w_minus_2f < 1e-12
    assert rep.max_f_plus_integral < 1e-12
    assert abs(rep.min_inner) < 1e-12


def test_weyl_bound_report_rotating(rotating, rotating_sc):
    rep = weyl_bound_report(rotating, 1, [25, 50, 100, 200], rotating_sc, theta=rotating_sc.arc.grid(61))
    vals = rep.log_w_minus_2f
    assert max(vals) <= 2 * min(vals)
    assert np.isfinite(rep.max_f_plus_integral)
    assert set(rep.to_json()) == {"N", "maxLogWMinus2f", "fPlusIntegral", "innerMin", "constants"}


def test_stripping_periodic():
    spec = S.constant(0.5)
    res = choose_stripping_offset(spec, 1, arc(2 * math.pi / 5, 8 * math.pi / 5), 1e-3, window=1024)
    assert res.k == 0


def test_stripping_rotating(rotating, rotating_sc):
    big = choose_stripping_offset(rotating, 1, rotating_sc.arc, 100.0, window=4096, sc=rotating_sc)
    assert big.k == 0
    res = choose_stripping_offset(rotating, 1, rotating_sc.arc, 0.1, sc=rotating_sc)
    assert res.tail_sum < 0.1 and res.k > 0
    with pytest.raises(BudgetError):
        choose_stripping_offset(rotating, 1, rotating_sc.arc, 0.1, window=4096, sc=rotating_sc)
