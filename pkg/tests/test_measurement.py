import math

import numpy as np
import pytest
from scipy.integrate import quad

from freqkey.errors import ConfigurationError
from freqkey.measurement import (
    MeasurementSetting,
    SettingKind,
    b92_test_probs,
    channel_time_density,
    gaussian_band_probability,
    gaussian_time_density,
    mean_photon_number,
    mono_time_cdf,
    prob_frequency,
    quantize_offsets,
    sample_arrival_offsets,
    sample_outcome,
    time_density,
)
from freqkey.states import (
    SpectralPacket,
    evolve,
    make_control_state,
    make_gaussian_state,
    make_info_state,
)
from freqkey.stats import ks_test

from conftest import DELTA_OMEGA, INV_SQRT2, OMEGA0, OMEGA1, PERIOD, random_amplitude_pair


@pytest.fixture
def control_state():
    return make_control_state(INV_SQRT2, INV_SQRT2, 0.0, OMEGA0, OMEGA1)


class TestFrequencyProbabilities:
    def test_info_state_own_projector(self):
        assert prob_frequency(make_info_state(0, OMEGA0, OMEGA1), 0) == 1.0
        assert prob_frequency(make_info_state(1, OMEGA0, OMEGA1), 1) == 1.0

    def test_info_state_opposite_projector_identically_zero(self):
        assert prob_frequency(make_info_state(0, OMEGA0, OMEGA1), 1) == 0.0
        assert prob_frequency(make_info_state(1, OMEGA0, OMEGA1), 0) == 0.0

    def test_control_state_weights(self, control_state):
        assert prob_frequency(control_state, 0) == pytest.approx(0.5, abs=1e-12)
        assert prob_frequency(control_state, 1) == pytest.approx(0.5, abs=1e-12)

    def test_time_independence_under_evolution(self, control_state):
        # Frequency statistics never depend on when the measurement happens.
        base = prob_frequency(control_state, 0)
        for t in np.linspace(0.0, 10 * PERIOD, 23):
            assert abs(prob_frequency(evolve(control_state, t), 0) - base) < 1e-12


class TestTimeDensity:
    def test_info_state_flat(self):
        s = make_info_state(0, OMEGA0, OMEGA1)
        for t in np.linspace(0.0, PERIOD, 11):
            assert time_density(s, t) == pytest.approx(1.0 / PERIOD, rel=1e-12)

    def test_control_maximum_at_preparation(self, control_state):
        assert time_density(control_state, 0.0) == pytest.approx(2.0 / PERIOD, rel=1e-9)

    def test_control_zero_at_half_period(self, control_state):
        val = time_density(control_state, PERIOD / 2.0)
        assert abs(val) * PERIOD < 1e-9

    def test_unit_integral_over_period(self):
        rng = np.random.default_rng(21)
        for _ in range(10):
            f0, f1 = random_amplitude_pair(rng)
            s = make_control_state(f0, f1, 0.0, OMEGA0, OMEGA1)
            val, _ = quad(lambda t: float(time_density(s, t)), 0.0, PERIOD, limit=200)
            assert val == pytest.approx(1.0, abs=1e-9)

    def test_periodicity_exact(self, control_state):
        for t in np.linspace(0.0, PERIOD, 17):
            a = time_density(control_state, t)
            b = time_density(control_state, t + PERIOD)
            assert abs(a - b) * PERIOD < 1e-9

    def test_nonnegative_for_random_states(self):
        rng = np.random.default_rng(22)
        grid = np.linspace(0.0, PERIOD, 10_000)
        for _ in range(100):
            f0, f1 = random_amplitude_pair(rng)
            s = make_control_state(f0, f1, rng.uniform(0, PERIOD), OMEGA0, OMEGA1)
            dens = time_density(s, s.t0 + grid)
            assert np.all(dens >= -1e-12 / PERIOD)

    def test_visibility_scales_contrast(self, control_state):
        full = time_density(control_state, 0.0)
        half = time_density(control_state, 0.0, visibility=0.5)
        assert half == pytest.approx((1.0 + 0.5) / PERIOD, rel=1e-12)
        assert full == pytest.approx(2.0 / PERIOD, rel=1e-12)


class TestChannelTimeDensity:
    def test_zero_length_matches_plain_density(self, control_state):
        t = np.linspace(0.0, PERIOD, 101)
        a = channel_time_density(control_state, t, 0.0)
        b = time_density(control_state, t)
        assert np.allclose(a, b, rtol=0, atol=1e-9 / PERIOD)

    def test_half_period_length_shifts_pattern(self, control_state):
        # delta_omega * L / c = pi shifts the oscillation by half a period.
        c = 2.998e8
        length = math.pi * c / DELTA_OMEGA
        t = np.linspace(0.0, PERIOD, 101)
        shifted = channel_time_density(control_state, t, length, c=c)
        reference = time_density(control_state, t + PERIOD / 2.0)
        assert np.allclose(shifted, reference, rtol=0, atol=1e-6 / PERIOD)

    def test_omega_prefactors_negligible_at_small_relative_splitting(self, control_state):
        # delta_omega / omega0 = 1e-7 here: max relative change below 1e-6.
        t = np.linspace(0.0, PERIOD, 2001)
        plain = channel_time_density(control_state, t, 0.0)
        exact = channel_time_density(control_state, t, 0.0, exact_omega_prefactors=True)
        scale = np.max(np.abs(plain))
        assert np.max(np.abs(exact - plain)) / scale < 1e-6

    def test_exact_mode_keeps_unit_integral(self, control_state):
        val, _ = quad(
            lambda t: float(channel_time_density(control_state, t, 0.0,
                                                 exact_omega_prefactors=True)),
            0.0, PERIOD, limit=200,
        )
        assert val == pytest.approx(1.0, abs=1e-9)


class TestGaussianTimeDensity:
    def test_single_component_peaks_at_arrival(self):
        g = make_gaussian_state([(OMEGA0, 1.0)], sigma=1e7)
        c = 2.998e8
        length = 1000.0
        peak_t = length / c
        t = np.linspace(peak_t - 4e-7, peak_t + 4e-7, 4001)
        dens = gaussian_time_density(g, t, length, c=c)
        assert t[np.argmax(dens)] == pytest.approx(peak_t, abs=2.5e-10)

    def test_single_component_unit_integral(self):
        g = make_gaussian_state([(OMEGA0, 1.0)], sigma=1e7)
        val, _ = quad(lambda t: float(gaussian_time_density(g, t)), -8e-7, 8e-7, limit=400)
        assert val == pytest.approx(1.0, abs=1e-9)

    def test_two_component_unit_integral(self):
        rng = np.random.default_rng(31)
        for _ in range(5):
            f0, f1 = random_amplitude_pair(rng)
            sigma = rng.uniform(DELTA_OMEGA / 50, DELTA_OMEGA / 5)
            g = make_gaussian_state([(OMEGA0, f0), (OMEGA1, f1)], sigma=sigma)
            span = 8.0 / sigma
            val, _ = quad(lambda t: float(gaussian_time_density(g, t)),
                          -span, span, limit=800)
            assert val == pytest.approx(1.0, abs=1e-6)

    def test_fringe_visibility_near_envelope_center(self):
        # sigma = delta_omega / 20 keeps the oscillation well defined.
        sigma = DELTA_OMEGA / 20.0
        g = make_gaussian_state([(OMEGA0, INV_SQRT2), (OMEGA1, INV_SQRT2)], sigma=sigma)
        t = np.linspace(-PERIOD, PERIOD, 4001)
        dens = np.asarray(gaussian_time_density(g, t))
        vis = (dens.max() - dens.min()) / (dens.max() + dens.min())
        assert vis > 0.99


class TestGaussianBandProbability:
    def test_narrow_linewidth_limit_recovers_weights(self):
        # sigma = |delta_omega| * 1e-4: band weights converge to |f_k|^2.
        rng = np.random.default_rng(41)
        sigma = DELTA_OMEGA * 1e-4
        for _ in range(5):
            f0, f1 = random_amplitude_pair(rng)
            g = make_gaussian_state([(OMEGA0, f0), (OMEGA1, f1)], sigma=sigma)
            p0 = gaussian_band_probability(g, 0, OMEGA0, OMEGA1)
            p1 = gaussian_band_probability(g, 1, OMEGA0, OMEGA1)
            assert p0 == pytest.approx(abs(f0) ** 2, abs=1e-6)
            assert p1 == pytest.approx(abs(f1) ** 2, abs=1e-6)

    def test_band_probabilities_sum_to_one(self):
        g = make_gaussian_state([(OMEGA0, 0.6), (OMEGA1, 0.8)], sigma=1e7)
        p0 = gaussian_band_probability(g, 0, OMEGA0, OMEGA1)
        p1 = gaussian_band_probability(g, 1, OMEGA0, OMEGA1)
        assert p0 + p1 == pytest.approx(1.0, abs=1e-9)


class TestNonorthogonalTestProbs:
    def test_same_state_never_fires(self, control_state):
        p_own, p_cross = b92_test_probs(control_state, control_state)
        assert p_own == 0.0
        assert p_cross == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal_pair_always_fires(self):
        s0 = make_info_state(0, OMEGA0, OMEGA1)
        s1 = make_info_state(1, OMEGA0, OMEGA1)
        assert b92_test_probs(s0, s1) == (0.0, pytest.approx(1.0, abs=1e-12))

    def test_basis_vs_control_overlap(self, control_state):
        s0 = make_info_state(0, OMEGA0, OMEGA1)
        p_own, p_cross = b92_test_probs(s0, control_state)
        # Overlap 1/sqrt(2): firing probability 1 - 1/2.
        assert p_own == 0.0
        assert p_cross == pytest.approx(0.5, abs=1e-12)


class TestMeanPhotonNumber:
    def _packet(self):
        omegas = np.linspace(OMEGA0 - 5e9, OMEGA0 + 5e9, 101)
        amps = np.full(101, (1.0 / math.sqrt(101)) + 0j)
        return SpectralPacket(omegas=omegas, amplitudes=amps, t0=0.0)

    def test_normalized_packet_gives_one(self):
        assert mean_photon_number(self._packet()) == pytest.approx(1.0, abs=1e-12)

    def test_renormalized_filtered_packet_gives_one(self):
        p = self._packet()
        amps = p.amplitudes.copy()
        amps[:50] = 0.0
        amps /= math.sqrt(float(np.sum(np.abs(amps) ** 2)))
        assert mean_photon_number(
            SpectralPacket(omegas=p.omegas, amplitudes=amps, t0=0.0)
        ) == pytest.approx(1.0, abs=1e-12)

    def test_quadratic_scaling_diagnostic(self):
        p = self._packet()
        half = SpectralPacket(omegas=p.omegas, amplitudes=0.5 * p.amplitudes, t0=0.0)
        assert mean_photon_number(half) == pytest.approx(0.25, abs=1e-12)


class TestSampler:
    def test_info_state_matching_projector_always_clicks(self):
        rng = np.random.default_rng(51)
        s = make_info_state(0, OMEGA0, OMEGA1)
        for _ in range(200):
            rec = sample_outcome(s, MeasurementSetting.frequency(0), rng)
            assert rec.clicked and rec.bit_value == 0

    def test_info_state_opposite_projector_never_clicks(self):
        rng = np.random.default_rng(52)
        s = make_info_state(0, OMEGA0, OMEGA1)
        for _ in range(200):
            rec = sample_outcome(s, MeasurementSetting.frequency(1), rng)
            assert not rec.clicked and rec.bit_value is None

    def test_window_shorter_than_period_rejected(self, control_state):
        rng = np.random.default_rng(53)
        setting = MeasurementSetting.time_of_arrival(1e-9, PERIOD / 2.0)
        with pytest.raises(ConfigurationError):
            sample_outcome(control_state, setting, rng)

    def test_click_time_quantized_and_exact_value_retained(self, control_state):
        rng = np.random.default_rng(54)
        tau_det = 1e-9
        setting = MeasurementSetting.time_of_arrival(tau_det, 10 * PERIOD)
        rec = sample_outcome(control_state, setting, rng)
        assert rec.clicked
        # Quantized value sits on a bin center; exact value within half a bin.
        ratio = rec.click_time / tau_det
        assert abs(ratio - math.floor(ratio) - 0.5) < 1e-9
        assert abs(rec.click_time - rec.click_time_exact) <= tau_det / 2 + 1e-15

    def test_control_sampler_matches_quadrature_cdf(self, control_state):
        # Monte-Carlo draw vs the quadrature CDF at the 5% level.
        rng = np.random.default_rng(55)
        n = 100_000
        u = sample_arrival_offsets(control_state, n, rng, window=PERIOD)
        cdf = mono_time_cdf(control_state, window=PERIOD)
        result = ks_test(u, cdf, alpha=0.05)
        assert not result.reject

    @pytest.mark.parametrize("window_periods", [1, 3, 10])
    def test_sampler_stays_within_window(self, control_state, window_periods):
        rng = np.random.default_rng(56)
        u = sample_arrival_offsets(control_state, 5000, rng,
                                   window=window_periods * PERIOD)
        assert np.all(u >= 0.0) and np.all(u < window_periods * PERIOD)

    def test_gaussian_sampler_matches_quadrature_cdf(self):
        from freqkey.measurement import gaussian_time_cdf, gaussian_window

        rng = np.random.default_rng(57)
        g = make_gaussian_state([(OMEGA0, INV_SQRT2), (OMEGA1, INV_SQRT2)], sigma=1e7)
        window = 12.0 / 1e7
        u = sample_arrival_offsets(g, 50_000, rng, window=window)
        lo, hi = gaussian_window(g, window)
        cdf = gaussian_time_cdf(g, lo, hi)
        result = ks_test(u, cdf, alpha=0.05)
        assert not result.reject

    def test_quantize_offsets_bin_centers(self):
        h = 1e-9
        u = np.array([0.0, 0.49e-9, 0.51e-9, 5.2e-9, -0.3e-9])
        q = quantize_offsets(u, h)
        assert np.allclose(q, [0.5e-9, 0.5e-9, 0.5e-9, 5.5e-9, -0.5e-9])


class TestSettingValidation:
    def test_time_setting_requires_parameters(self):
        with pytest.raises(ConfigurationError):
            MeasurementSetting(SettingKind.TIME_OF_ARRIVAL)
        with pytest.raises(ConfigurationError):
            MeasurementSetting.time_of_arrival(2e-9, 1e-9)

    def test_frequency_factory(self):
        assert MeasurementSetting.frequency(0).kind is SettingKind.FREQ_E0
        assert MeasurementSetting.frequency(1).kind is SettingKind.FREQ_E1
        with pytest.raises(ConfigurationError):
            MeasurementSetting.frequency(2)
