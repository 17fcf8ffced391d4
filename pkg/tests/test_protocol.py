import math
from dataclasses import replace

import numpy as np
import pytest

from freqkey.adversary import InterceptFreq
from freqkey.config import default_config
from freqkey.errors import ConfigurationError
from freqkey.protocol import (
    CHOICE_CONTROL,
    CHOICE_ONE,
    CHOICE_ZERO,
    SETTING_E0,
    SETTING_E1,
    SETTING_EDT,
    SessionConfig,
    derive_rngs,
    disclose_and_group,
    plan_session,
    run_session,
    sift,
)

from conftest import INV_SQRT2


def cfg_with(**kwargs) -> SessionConfig:
    return replace(default_config(), **kwargs)


class TestPlanSession:
    def test_uniform_thirds_counts_within_three_sigma(self):
        config = cfg_with(n_slots=90_000)
        alice, bob = plan_session(config, np.random.default_rng(1))
        n, p = config.n_slots, 1.0 / 3.0
        sigma = math.sqrt(n * p * (1 - p))
        for code in (CHOICE_ZERO, CHOICE_ONE, CHOICE_CONTROL):
            assert abs(np.sum(alice.choices == code) - n * p) < 3 * sigma
        for code in (SETTING_E0, SETTING_E1, SETTING_EDT):
            assert abs(np.sum(bob == code) - n * p) < 3 * sigma

    def test_all_control_when_certain(self):
        config = cfg_with(alice_probs=(1.0, 0.0, 0.0), n_slots=500)
        alice, _ = plan_session(config, np.random.default_rng(2))
        assert np.all(alice.choices == CHOICE_CONTROL)

    def test_same_seed_gives_identical_plans(self):
        config = cfg_with(n_slots=2000)
        a1, b1 = plan_session(config, np.random.default_rng(3))
        a2, b2 = plan_session(config, np.random.default_rng(3))
        assert np.array_equal(a1.choices, a2.choices)
        assert np.array_equal(a1.t0, a2.t0)
        assert np.array_equal(b1, b2)

    def test_excitation_times_sit_inside_slots(self):
        config = cfg_with(n_slots=1000)
        alice, _ = plan_session(config, np.random.default_rng(4))
        starts = np.arange(config.n_slots) * config.slot_length
        assert np.all(alice.t0 >= starts)
        assert np.all(alice.t0 <= starts + config.source.tau_pi)

    def test_slot_plan_view(self):
        config = cfg_with(n_slots=10)
        alice, _ = plan_session(config, np.random.default_rng(5))
        plan = alice.slot_plan(3)
        assert plan.slot == 3
        assert plan.alice_choice in ("zero", "one", "control")


class TestRunSession:
    def test_matching_projector_always_clicks_bit_zero(self):
        config = cfg_with(
            n_slots=3000, alice_probs=(0.0, 1.0, 0.0), bob_probs=(1.0, 0.0, 0.0)
        )
        t = run_session(config)
        assert np.all(t.clicked)
        assert np.all(t.bit_bob == 0)
        assert np.all(t.bit_alice == 0)

    def test_opposite_projector_never_clicks(self):
        config = cfg_with(
            n_slots=3000, alice_probs=(0.0, 1.0, 0.0), bob_probs=(0.0, 1.0, 0.0)
        )
        t = run_session(config)
        assert not np.any(t.clicked)

    def test_control_click_ratio_tracks_weights(self):
        # |f0|^2 = 0.8: E0 vs E1 clicks on control slots split 4:1.
        f0 = math.sqrt(0.8)
        f1 = math.sqrt(0.2)
        config = cfg_with(
            n_slots=30_000, alice_probs=(1.0, 0.0, 0.0),
            control_amplitudes=(f0, f1), seed=9,
        )
        t = run_session(config)
        k0 = int(np.sum(t.clicked & (t.bob_setting == SETTING_E0)))
        k1 = int(np.sum(t.clicked & (t.bob_setting == SETTING_E1)))
        n = k0 + k1
        sigma = math.sqrt(n * 0.8 * 0.2)
        assert abs(k0 - 0.8 * n) < 3 * sigma

    def test_opaque_channel_idles_every_slot(self):
        from freqkey.channel import ChannelParams

        config = cfg_with(n_slots=1000, channel=ChannelParams(transmittance=0.0))
        t = run_session(config)
        assert np.all(t.lost)
        assert not np.any(t.clicked)

    def test_determinism_byte_identical(self):
        config = cfg_with(n_slots=5000, seed=77)
        assert run_session(config).digest() == run_session(config).digest()

    def test_attack_does_not_touch_info_slot_outcomes(self):
        # Information slots are eigenstates of the frequency attack: click
        # flags and bit values are bit-for-bit identical with and without the
        # adversary (the adversary has its own rng stream), and the arrival
        # times keep the same distribution (the time sampler consumes shared
        # draws, so only distribution equality is meaningful there).
        from scipy.stats import ks_2samp

        config = cfg_with(n_slots=100_000, seed=31)
        clean = run_session(config)
        attacked = run_session(config, InterceptFreq())
        info = clean.alice_choice != CHOICE_CONTROL
        assert np.array_equal(clean.clicked[info], attacked.clicked[info])
        assert np.array_equal(clean.bit_bob[info], attacked.bit_bob[info])
        edt = info & (clean.bob_setting == SETTING_EDT) & clean.clicked
        u_clean = clean.click_time[edt] - clean.slot_starts(np.flatnonzero(edt))
        u_att = attacked.click_time[edt] - attacked.slot_starts(np.flatnonzero(edt))
        assert ks_2samp(u_clean, u_att).pvalue > 0.01

    def test_click_times_quantized_on_slot_grid(self):
        config = cfg_with(n_slots=4000, seed=5)
        t = run_session(config)
        h = config.detector.tau_det
        idx = np.flatnonzero(t.clicked & (t.bob_setting == SETTING_EDT))
        u = t.click_time[idx] - t.slot_starts(idx)
        frac = u / h - np.floor(u / h)
        assert np.allclose(frac, 0.5, atol=1e-6)
        assert np.all(np.abs(t.click_time[idx] - t.click_time_exact[idx]) <= h / 2 + 1e-15)


class TestDiscloseAndGroup:
    def test_full_disclosure_leaves_no_key(self):
        config = cfg_with(n_slots=2000, info_disclosure_fraction=1.0)
        t = run_session(config)
        grouped = disclose_and_group(t, config, np.random.default_rng(1))
        assert np.all(t.disclosed)
        alice_key, bob_key = sift(t, grouped)
        assert len(alice_key) == 0 and len(bob_key) == 0

    def test_half_disclosure_binomial(self):
        config = cfg_with(n_slots=15_000, info_disclosure_fraction=0.5)
        t = run_session(config)
        disclose_and_group(t, config, np.random.default_rng(2))
        info = t.alice_choice != CHOICE_CONTROL
        n_info = int(info.sum())
        disclosed_info = int((t.disclosed & info).sum())
        sigma = math.sqrt(n_info * 0.25)
        assert abs(disclosed_info - n_info / 2) < 3 * sigma

    def test_every_control_slot_disclosed_and_grouped(self):
        config = cfg_with(n_slots=3000)
        t = run_session(config)
        grouped = disclose_and_group(t, config, np.random.default_rng(3))
        control_idx = np.flatnonzero(t.alice_choice == CHOICE_CONTROL)
        assert np.all(t.disclosed[control_idx])
        grouped_control = np.concatenate(
            [grouped.cell(CHOICE_CONTROL, b) for b in (SETTING_E0, SETTING_E1, SETTING_EDT)]
        )
        assert np.array_equal(np.sort(grouped_control), control_idx)

    def test_grouping_covers_exactly_the_disclosed_slots(self):
        config = cfg_with(n_slots=3000)
        t = run_session(config)
        grouped = disclose_and_group(t, config, np.random.default_rng(4))
        all_cells = np.concatenate([grouped.cell(a, b) for a in range(3) for b in range(3)])
        assert np.array_equal(np.sort(all_cells), np.flatnonzero(t.disclosed))


class TestSift:
    def test_ideal_session_keys_identical(self):
        config = cfg_with(n_slots=50_000, seed=13)
        t = run_session(config)
        grouped = disclose_and_group(t, config, np.random.default_rng(5))
        alice_key, bob_key = sift(t, grouped)
        assert len(alice_key) > 0
        assert np.array_equal(alice_key.bits, bob_key.bits)
        assert np.array_equal(alice_key.positions, bob_key.positions)

    def test_key_fraction_two_ninths_without_disclosure(self):
        # Enumeration oracle: P(key slot) = sum over info choices of
        # p_alice(i) * p_bob(matching projector) = 2 * (1/3) * (1/3).
        config = cfg_with(n_slots=90_000, info_disclosure_fraction=0.0, seed=17)
        p_key = sum(
            config.alice_probs[1 + bit] * config.bob_probs[bit] for bit in (0, 1)
        )
        assert p_key == pytest.approx(2.0 / 9.0, abs=1e-12)
        t = run_session(config)
        grouped = disclose_and_group(t, config, np.random.default_rng(6))
        alice_key, _ = sift(t, grouped)
        n = config.n_slots
        sigma = math.sqrt(n * p_key * (1 - p_key))
        assert abs(len(alice_key) - n * p_key) < 3 * sigma

    def test_key_fraction_halves_with_transmittance(self):
        from freqkey.channel import ChannelParams

        config = cfg_with(
            n_slots=90_000, info_disclosure_fraction=0.0, seed=19,
            channel=ChannelParams(transmittance=0.5),
        )
        t = run_session(config)
        grouped = disclose_and_group(t, config, np.random.default_rng(7))
        alice_key, _ = sift(t, grouped)
        p_key = 1.0 / 9.0
        sigma = math.sqrt(config.n_slots * p_key * (1 - p_key))
        assert abs(len(alice_key) - config.n_slots * p_key) < 3 * sigma

    def test_key_never_contains_control_or_disclosed_slots(self):
        config = cfg_with(n_slots=10_000)
        t = run_session(config)
        grouped = disclose_and_group(t, config, np.random.default_rng(8))
        alice_key, _ = sift(t, grouped)
        assert not np.any(t.alice_choice[alice_key.positions] == CHOICE_CONTROL)
        assert not np.any(t.disclosed[alice_key.positions])

    def test_time_measurement_clicks_never_enter_key(self):
        config = cfg_with(n_slots=10_000)
        t = run_session(config)
        grouped = disclose_and_group(t, config, np.random.default_rng(9))
        alice_key, _ = sift(t, grouped)
        assert not np.any(t.bob_setting[alice_key.positions] == SETTING_EDT)

    def test_key_length_monotone_in_disclosure_fraction(self):
        lengths = []
        for fraction in (0.0, 0.25, 0.5, 1.0):
            config = cfg_with(n_slots=20_000, info_disclosure_fraction=fraction, seed=23)
            t = run_session(config)
            grouped = disclose_and_group(
                t, config, derive_rngs(config.seed).disclosure
            )
            alice_key, _ = sift(t, grouped)
            lengths.append(len(alice_key))
        assert lengths == sorted(lengths, reverse=True)
        assert lengths[-1] == 0


class TestPublicView:
    def test_no_projector_mapping_for_key_positions(self):
        config = cfg_with(n_slots=5000)
        t = run_session(config)
        grouped = disclose_and_group(t, config, np.random.default_rng(10))
        alice_key, _ = sift(t, grouped)
        public = t.public_view()
        # The public record holds only slot indices and the sender's disclosed
        # choices; nothing maps a key position to the receiver's setting.
        assert set(public) == {
            "alice_disclosed_indices", "alice_disclosed_choices", "bob_key_indices"
        }
        assert np.array_equal(public["bob_key_indices"], alice_key.positions)
        assert not np.any(np.isin(public["alice_disclosed_indices"], alice_key.positions))


class TestSessionConfigValidation:
    def test_bad_probability_vectors_rejected(self):
        with pytest.raises(ConfigurationError):
            cfg_with(alice_probs=(0.5, 0.3, 0.1))
        with pytest.raises(ConfigurationError):
            cfg_with(bob_probs=(0.7, 0.4, -0.1))

    def test_window_shorter_than_period_rejected(self):
        from freqkey.measurement import DetectorParams

        with pytest.raises(ConfigurationError):
            cfg_with(detector=DetectorParams(tau_det=1e-9, window=1e-8))

    def test_non_normalized_control_amplitudes_rejected(self):
        with pytest.raises(ConfigurationError):
            cfg_with(control_amplitudes=(0.9, 0.5))

    def test_slot_grid_alignment(self):
        config = default_config()
        h = config.detector.tau_det
        ratio = config.slot_length / h
        assert ratio == pytest.approx(round(ratio), abs=1e-9)
        assert config.slot_length >= config.window
