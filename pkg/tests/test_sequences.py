import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opuc_spectra import sequences as S
from opuc_spectra.errors import ConfigurationError


def test_constant_zero():
    c = S.eval_sequence(S.constant(0), 7)
    assert c.alpha == 0 and c.rho == 1.0


def test_constant_345():
    c = S.eval_sequence(S.constant(0.6), 0)
    assert c.alpha == 0.6
    assert c.rho == pytest.approx(0.8, abs=1e-15)


def test_rotating_phase_at_16():
    # 16^{1/4} = 2, so the phase is a whole turn
    val = S.rotating_phase(0.5, 0.25)(16)
    assert abs(val - 0.5) < 1e-14


def test_rotating_modulus_constant():
    a = S.rotating_phase(0.5, 0.25).alphas(np.arange(2000))
    assert np.allclose(np.abs(a), 0.5, atol=1e-15)


def test_modulated_rotating_phase():
    seq = S.rotating_phase(0.5, 0.25, modulation=0.2)
    n = np.arange(1, 200)
    expected = (0.5 + 0.2 * np.sin(2 * np.pi * n**0.25)) * np.exp(2j * np.pi * n**0.25)
    assert np.allclose(seq.alphas(n), expected, atol=1e-14)


def test_cap_bound_violation_names_index():
    seq = S.explicit([0.1, 0.2, 1.2])
    with pytest.raises(ConfigurationError, match="alpha_2"):
        seq.alphas(np.arange(5))


def test_cap_bound_limit():
    seq = S.constant(0.9995)
    with pytest.raises(ConfigurationError):
        seq(0)
    assert S.VerblunskySequence("constant", {"value": 0.9995}, cap_bound=1e-4)(3) == 0.9995


def test_unknown_kind():
    with pytest.raises(ConfigurationError):
        S.VerblunskySequence("nope", {})


def test_missing_param():
    with pytest.raises(ConfigurationError, match="period"):
        S.VerblunskySequence("p-periodic", {})


def test_periodic_plus_decaying_modes():
    seq = S.VerblunskySequence("periodic-plus-decaying", {"period": [0.3, 0.4]})
    assert seq(0) == pytest.approx(0.3 * (1 - 1 / 2))
    assert seq(3) == pytest.approx(0.4 * (1 - 1 / 5))
    add = S.VerblunskySequence("periodic-plus-decaying", {"period": [0.3], "mode": "additive", "amplitude": 0.1,
                                                          "power": 2})
    assert add(2) == pytest.approx(0.3 + 0.1 / 16)


def test_custom_generator():
    seq = S.custom(lambda n: 0.1 * np.cos(n))
    assert seq(3) == pytest.approx(0.1 * math.cos(3))
    with pytest.raises(ConfigurationError):
        seq.to_json()


def test_strip_examples():
    seq = S.explicit([0.1, 0.2, 0.3])
    assert np.array_equal(seq.strip(0).alphas(np.arange(6)), seq.alphas(np.arange(6)))
    assert np.allclose(seq.strip(1).alphas(np.arange(3)), [0.2, 0.3, 0.0])
    rot = S.rotating_phase(0.5, 0.25)
    n = np.arange(21)
    assert np.array_equal(S.strip_coefficients(S.strip_coefficients(rot, 2), 3).alphas(n), rot.strip(5).alphas(n))
    with pytest.raises(ConfigurationError):
        rot.strip(-1)


def test_json_roundtrip():
    seq = S.VerblunskySequence("rotating-phase", {"amplitude": 0.5, "exponent": 0.25, "phaseScale": 1.0},
                               offset=3, cap_bound=1e-3)
    obj = seq.to_json()
    assert set(obj) == {"kind", "params", "offset", "capBound"}
    back = S.VerblunskySequence.from_json(obj)
    n = np.arange(50)
    assert np.array_equal(back.alphas(n), seq.alphas(n))


def test_complex_params_json():
    seq = S.periodic([0.3, -0.2 + 0.4j])
    back = S.VerblunskySequence.from_json(seq.to_json())
    assert back(1) == -0.2 + 0.4j
    assert S.parse_complex({"re": 1, "im": 2}) == 1 + 2j


def test_deterministic():
    seq = S.rotating_phase(0.5, 0.25)
    assert seq.alphas(np.arange(1000)).tobytes() == seq.alphas(np.arange(1000)).tobytes()


@settings(max_examples=60, deadline=None)
@given(st.complex_numbers(max_magnitude=0.99, allow_nan=False, allow_infinity=False))
def test_rho_identity(a):
    coeff = S.VerblunskyCoefficient(a)
    assert coeff.rho**2 + abs(a) ** 2 == pytest.approx(1.0, abs=1e-14)
    assert 0 < coeff.rho <= 1


def test_diagnostics_constant():
    d = S.sequence_diagnostics(S.constant(0.3), 2, 500)
    assert d.partial_l2_variation == 0.0 and d.partial_l1_variation == 0.0
    assert d.sup_modulus == pytest.approx(0.3)


def test_diagnostics_alternating():
    seq = S.custom(lambda n: 0.5 * (-1.0) ** n)
    N = 400
    assert S.sequence_diagnostics(seq, 2, N).partial_l2_variation == 0.0
    d1 = S.sequence_diagnostics(seq, 1, N)
    # |alpha_{n+1} - alpha_n| = 1 for each of the N terms n < N
    assert d1.partial_l1_variation == pytest.approx(N)


def test_rotating_variation_converges():
    seq = S.rotating_phase(0.5, 0.25)
    sums = S.variation_partial_sums(seq, 1, 200000)
    assert np.all(np.diff(sums) >= 0)
    # squared differences ~ (pi/4)^2 n^{-3/2} / ...; tail beyond N is O(N^{-1/2})
    tail_est = sums[-1] - sums[len(sums) // 2]
    assert tail_est < 0.05 * sums[-1]
