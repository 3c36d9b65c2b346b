"""Cavity reflection model unit tests."""

import math

import numpy as np
import pytest

from nlcnot import cavity
from nlcnot.cavity import (
    CavityParams,
    InvalidMode,
    PulseSpectrum,
    coherence_survival,
    cpf_channel,
    ideal_reflection,
    pulse_averaged_reflection,
    reflection_coefficient,
    resonant_R,
)


class TestCavityParams:
    def test_big_g(self):
        p = CavityParams(g=10.0, gamma=2.0, gamma_s=5.0)
        assert p.big_g == pytest.approx(10.0)

    def test_from_g_ratio_roundtrip(self):
        assert CavityParams.from_g_ratio(7.5).big_g == pytest.approx(7.5)

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            CavityParams(g=-1.0, gamma=1.0, gamma_s=1.0)
        with pytest.raises(ValueError):
            CavityParams(g=1.0, gamma=0.0, gamma_s=1.0)
        with pytest.raises(ValueError):
            CavityParams.from_g_ratio(-1.0)


class TestIdealReflection:
    def test_uncoupled_atom_full_flip(self):
        # p_z = 0: the bare cavity reflects with a -1 sign
        assert ideal_reflection(0.0, 123.4) == -1.0

    def test_g_100(self):
        assert ideal_reflection(1.0, 100.0) == pytest.approx(399.0 / 401.0, rel=1e-15)

    def test_strong_coupling_limit(self):
        assert ideal_reflection(1.0, 1e9) == pytest.approx(1.0, abs=1e-8)

    def test_invalid(self):
        with pytest.raises(ValueError):
            ideal_reflection(1.0, -1.0)


class TestResonantIdentity:
    def test_matches_full_formula_at_resonance(self):
        rng = np.random.default_rng(11)
        for _ in range(200):
            g, gamma, gamma_s = rng.uniform(0.1, 10.0, size=3)
            p_z = rng.uniform(0.0, 2.0)
            params = CavityParams(g=g, gamma=gamma, gamma_s=gamma_s)
            r0 = reflection_coefficient(0.0, p_z, params)
            assert abs(r0.imag) < 1e-12
            assert r0.real == pytest.approx(ideal_reflection(p_z, params.big_g), abs=1e-12)

    def test_magnitude_bounded_in_validity_window(self):
        # |r| <= 1 holds exactly for |omega| <= gamma_s / sqrt(2)
        rng = np.random.default_rng(12)
        for _ in range(200):
            g, gamma, gamma_s = rng.uniform(0.1, 10.0, size=3)
            p_z = rng.uniform(0.0, 2.0)
            params = CavityParams(g=g, gamma=gamma, gamma_s=gamma_s)
            w = rng.uniform(-1.0, 1.0) * gamma_s / math.sqrt(2.0)
            assert abs(reflection_coefficient(w, p_z, params)) <= 1 + 1e-12


class TestCoherenceSurvival:
    def test_value_g100(self):
        assert coherence_survival(100.0, 1.0) == pytest.approx(1.0 - 800.0 / 160801.0, rel=1e-15)

    def test_gap_identity(self):
        for big_g in (0.1, 1.0, 10.0, 100.0):
            gap = ideal_reflection(1.0, big_g) - coherence_survival(big_g, 1.0)
            assert gap == pytest.approx(-2.0 / (1.0 + 4.0 * big_g) ** 2, rel=1e-9)

    def test_resonant_R_is_squared_amplitude(self):
        assert resonant_R(100.0, 1.0) == pytest.approx(ideal_reflection(1.0, 100.0) ** 2)


class TestPulseSpectrum:
    def test_gaussian_normalized(self):
        spec = PulseSpectrum("gaussian", center=0.3, bandwidth=0.7)
        w = np.linspace(*spec.support(), 20001)
        assert np.trapezoid(spec.density(w), w) == pytest.approx(1.0, abs=1e-6)

    def test_flat_top_normalized(self):
        spec = PulseSpectrum("flat-top", center=0.0, bandwidth=0.5)
        lo, hi = spec.support()
        w = np.linspace(lo, hi, 20001)
        assert np.trapezoid(spec.density(w), w) == pytest.approx(1.0, abs=1e-3)

    def test_invalid_shape(self):
        with pytest.raises(ValueError):
            PulseSpectrum("triangle")
        with pytest.raises(ValueError):
            PulseSpectrum("gaussian", bandwidth=0.0)

    def test_narrowband_limit(self):
        params = CavityParams(g=10.0, gamma=1.0, gamma_s=1.0)
        spec = PulseSpectrum("gaussian", center=0.0, bandwidth=1e-4)
        avg = pulse_averaged_reflection(spec, 1.0, params)
        target = reflection_coefficient(0.0, 1.0, params)
        assert abs(avg - target) < 1e-6

    def test_broadband_average_differs_from_resonant(self):
        params = CavityParams(g=3.0, gamma=1.0, gamma_s=1.0)
        spec = PulseSpectrum("flat-top", center=0.0, bandwidth=0.3)
        avg = pulse_averaged_reflection(spec, 1.0, params)
        assert abs(avg - reflection_coefficient(0.0, 1.0, params)) > 1e-6


class TestCpfChannel:
    def test_ideal_diagonal(self):
        ch = cpf_channel(100.0, mode=cavity.IDEAL)
        assert np.allclose(ch.matrices[0], np.diag([1, 1, 1, -1]))
        assert ch.completeness_defect < 1e-12

    def test_imperfect_channel_weights(self):
        ch = cpf_channel(100.0, 1.0, cavity.NARROWBAND_IMPERFECT)
        r1 = ideal_reflection(1.0, 100.0)
        assert ch.matrices[0][1, 1] == pytest.approx(r1)
        assert ch.matrices[0][3, 3] == -1.0
        # loss operator carries the missing weight from |0h>
        assert ch.loss_matrices[0][0, 1] == pytest.approx(math.sqrt(1 - r1 * r1))
        # kept + loss branch together are trace preserving
        s = ch._ksum(ch.matrices + ch.loss_matrices)
        assert np.max(np.abs(s - np.eye(4))) < 1e-12

    def test_invalid_mode(self):
        with pytest.raises(InvalidMode):
            cpf_channel(100.0, mode="broadband")

    def test_dephasing_completion(self):
        ch = cpf_channel(100.0, 1.0, cavity.NARROWBAND_IMPERFECT)
        comp = cavity.dephasing_completion(ch)
        r1 = ideal_reflection(1.0, 100.0)
        assert comp[1, 1] == pytest.approx(math.sqrt(1 - r1 * r1))
        total = ch._ksum(ch.matrices + [comp])
        assert np.max(np.abs(total - np.eye(4))) < 1e-12
