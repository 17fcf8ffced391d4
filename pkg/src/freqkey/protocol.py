"""Session orchestration: planning, execution, disclosure, grouping, sifting.

One session is a fixed number of slots.  Per slot the sender randomly
emits one of the three carrier states, the receiver randomly picks a
frequency projector or the time-of-arrival measurement, an optional
adversary transforms the in-flight state, and the channel applies loss and
phases.  After the quantum phase, the sender publicly discloses all
control-slot indices plus a random fraction of information-slot indices;
the disclosed slots feed the statistical verification layer, and the
remaining clicked frequency measurements become the shared key.

Execution is columnar (one numpy array per transcript field) and fully
deterministic given the session seed: five independent child streams are
derived from it (planning, adversary, channel, detector, disclosure) so
the presence of an adversary never shifts anyone else's draws.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import measurement
from .adversary import ATTACK_NONE, AttackStrategy
from .channel import ChannelParams, draw_length_offsets
from .errors import ConfigurationError
from .measurement import DetectorParams
from .source import FilterMode, SourceParams, emit_packet, filter_packet
from .states import TWO_PI, GaussianState, QubitBatch, make_gaussian_state

# Sender choice codes; information-state codes equal their logical bit value.
CHOICE_ZERO = 0
CHOICE_ONE = 1
CHOICE_CONTROL = 2
CHOICE_LABELS = {CHOICE_ZERO: "zero", CHOICE_ONE: "one", CHOICE_CONTROL: "control"}

# Receiver setting codes.
SETTING_E0 = 0
SETTING_E1 = 1
SETTING_EDT = 2
SETTING_LABELS = {SETTING_E0: "E0", SETTING_E1: "E1", SETTING_EDT: "Edt"}

STATE_MODELS = ("monochromatic", "gaussian")

# Slots are paced far apart relative to the beat period so there is no
# inter-slot coherence to model.
MIN_SLOT_PERIODS = 10


@dataclass(frozen=True)
class SessionConfig:
    """Complete, hashable description of one session.

    ``alice_probs`` is (p_control, p_zero, p_one); ``bob_probs`` is
    (p_E0, p_E1, p_Edt).  ``heralding`` enables the source filter Bernoulli
    (per-slot loss at the sender); ``state_model`` picks the monochromatic
    idealization or the finite-linewidth Gaussian variant.
    """

    n_slots: int
    seed: int
    source: SourceParams
    channel: ChannelParams
    detector: DetectorParams
    alice_probs: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    bob_probs: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    control_amplitudes: tuple[complex, complex] = (
        1.0 / math.sqrt(2.0),
        1.0 / math.sqrt(2.0),
    )
    info_disclosure_fraction: float = 0.25
    alpha: float = 0.01
    state_model: str = "monochromatic"
    heralding: bool = False
    exact_omega_prefactors: bool = False

    def __post_init__(self):
        if self.n_slots < 1:
            raise ConfigurationError("n_slots must be at least 1")
        for name, probs in (("alice_probs", self.alice_probs), ("bob_probs", self.bob_probs)):
            if len(probs) != 3 or any(p < 0 or p > 1 for p in probs):
                raise ConfigurationError(f"{name} must be three probabilities in [0, 1]")
            if abs(sum(probs) - 1.0) > 1e-12:
                raise ConfigurationError(f"{name} must sum to 1 within 1e-12, got {sum(probs)!r}")
        f0, f1 = self.control_amplitudes
        if abs(abs(f0) ** 2 + abs(f1) ** 2 - 1.0) > 1e-9:
            raise ConfigurationError("control amplitudes must be normalized within 1e-9")
        if not 0.0 <= self.info_disclosure_fraction <= 1.0:
            raise ConfigurationError("info_disclosure_fraction must lie in [0, 1]")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError("alpha must lie in (0, 1)")
        if self.state_model not in STATE_MODELS:
            raise ConfigurationError(f"state_model must be one of {STATE_MODELS}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        measurement.whole_periods(self.detector.window, self.period)

    @property
    def delta_omega(self) -> float:
        return self.source.omega1 - self.source.omega0

    @property
    def period(self) -> float:
        return TWO_PI / abs(self.delta_omega)

    @property
    def window(self) -> float:
        return self.detector.window

    @property
    def slot_length(self) -> float:
        """Slot pacing: max(window, 10 T), rounded up to whole detector bins
        so slot boundaries stay aligned with the click-time quantization grid."""
        raw = max(self.window, MIN_SLOT_PERIODS * self.period)
        h = self.detector.tau_det
        return math.ceil(raw / h - 1e-9) * h

    def canonical_dict(self) -> dict:
        """JSON-ready dict mirroring the configuration field-for-field."""
        f0, f1 = (complex(a) for a in self.control_amplitudes)
        return {
            "n_slots": self.n_slots,
            "seed": self.seed,
            "alice_probs": list(self.alice_probs),
            "bob_probs": list(self.bob_probs),
            "control_amplitudes": [[f0.real, f0.imag], [f1.real, f1.imag]],
            "info_disclosure_fraction": self.info_disclosure_fraction,
            "alpha": self.alpha,
            "state_model": self.state_model,
            "heralding": self.heralding,
            "exact_omega_prefactors": self.exact_omega_prefactors,
            "source": {
                "tau_pi": self.source.tau_pi,
                "tau_r": self.source.tau_r,
                "sigma": self.source.sigma,
                "omega0": self.source.omega0,
                "omega1": self.source.omega1,
                "delta_omega_spectrum": self.source.delta_omega_spectrum,
                "spectrum": self.source.spectrum,
            },
            "channel": {
                "length_m": self.channel.length_m,
                "c": self.channel.c,
                "delta_l_sigma": self.channel.delta_l_sigma,
                "transmittance": self.channel.transmittance,
                "visibility": self.channel.visibility,
                "jitter_mode": self.channel.jitter_mode,
            },
            "detector": {
                "tau_det": self.detector.tau_det,
                "window": self.detector.window,
                "dark_rate": self.detector.dark_rate,
            },
        }

    def sha256(self) -> str:
        payload = json.dumps(self.canonical_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode()).hexdigest()


@dataclass
class SessionRngs:
    """Independent child streams derived from the session seed."""

    plan: np.random.Generator
    eve: np.random.Generator
    channel: np.random.Generator
    detector: np.random.Generator
    disclosure: np.random.Generator


def derive_rngs(seed: int) -> SessionRngs:
    children = np.random.SeedSequence(seed).spawn(5)
    return SessionRngs(*(np.random.default_rng(c) for c in children))


@dataclass(frozen=True)
class SlotPlan:
    """Per-slot view of the sender's plan."""

    slot: int
    alice_choice: str
    t0: float


@dataclass
class AlicePlan:
    """Columnar sender plan: state choices and excitation times."""

    choices: np.ndarray  # int8 choice codes
    t0: np.ndarray  # absolute excitation times (s)

    def slot_plan(self, i: int) -> SlotPlan:
        return SlotPlan(i, CHOICE_LABELS[int(self.choices[i])], float(self.t0[i]))


def plan_session(config: SessionConfig, rng) -> tuple[AlicePlan, np.ndarray]:
    """Draw the sender's choices/excitation times and the receiver's settings.

    Both sides draw independently per slot; the result is deterministic for
    a given generator state.
    """
    n = config.n_slots
    p_c, p_0, p_1 = config.alice_probs
    choices = rng.choice(3, size=n, p=[p_0, p_1, p_c]).astype(np.int8)
    slot_starts = np.arange(n, dtype=float) * config.slot_length
    jitter = rng.uniform(0.0, config.source.tau_pi, size=n) if config.source.tau_pi > 0 else 0.0
    t0 = slot_starts + jitter
    settings = rng.choice(3, size=n, p=list(config.bob_probs)).astype(np.int8)
    return AlicePlan(choices=choices, t0=t0), settings


@dataclass
class Transcript:
    """Columnar log of one full session.

    ``click_time`` holds detector-quantized absolute times (NaN when there
    was no click); ``click_time_exact`` keeps the continuous sample for
    diagnostics.  ``bit_alice`` is -1 on control slots, ``bit_bob`` is -1
    unless a frequency projector clicked.  ``disclosed``/``in_key`` are
    filled by :func:`disclose_and_group` / :func:`sift`.
    """

    config_hash: str
    n_slots: int
    slot_length: float
    period: float
    window: float
    alice_choice: np.ndarray
    t0: np.ndarray
    attack: np.ndarray
    lost: np.ndarray
    bob_setting: np.ndarray
    clicked: np.ndarray
    click_time: np.ndarray
    click_time_exact: np.ndarray
    bit_alice: np.ndarray
    bit_bob: np.ndarray
    disclosed: np.ndarray = field(default=None)
    in_key: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.disclosed is None:
            self.disclosed = np.zeros(self.n_slots, dtype=bool)
        if self.in_key is None:
            self.in_key = np.zeros(self.n_slots, dtype=bool)

    def slot_starts(self, idx=None) -> np.ndarray:
        if idx is None:
            idx = np.arange(self.n_slots)
        return np.asarray(idx, dtype=float) * self.slot_length

    def digest(self) -> str:
        """Byte-level fingerprint of the full log (determinism checks)."""
        h = hashlib.sha256()
        h.update(self.config_hash.encode())
        for arr in (
            self.alice_choice, self.t0, self.attack, self.lost, self.bob_setting,
            self.clicked, self.click_time, self.click_time_exact,
            self.bit_alice, self.bit_bob, self.disclosed, self.in_key,
        ):
            h.update(np.ascontiguousarray(arr).tobytes())
        return h.hexdigest()

    def public_view(self) -> dict:
        """What actually crosses the open classical channel.

        The sender reveals which slots are up for verification and what was
        sent there; the receiver reveals only *which* undisclosed slots ended
        with a frequency-projector click -- never which projector it was, so
        no public record maps a key position to the receiver's basis choice.
        """
        disclosed_idx = np.flatnonzero(self.disclosed)
        info = self.alice_choice < CHOICE_CONTROL
        key_candidates = np.flatnonzero(
            ~self.disclosed & info & (self.bob_setting != SETTING_EDT) & self.clicked
        )
        return {
            "alice_disclosed_indices": disclosed_idx,
            "alice_disclosed_choices": self.alice_choice[disclosed_idx].copy(),
            "bob_key_indices": key_candidates,
        }


def _herald_probs(config: SessionConfig) -> np.ndarray:
    """Heralding probability per sender choice code, from one emitted packet.

    Packets from different slots share the same band weights (only the phase
    ramp differs), so a single reference packet suffices.
    """
    packet = emit_packet(0.0, config.source)
    modes = {CHOICE_ZERO: FilterMode.ZERO, CHOICE_ONE: FilterMode.ONE,
             CHOICE_CONTROL: FilterMode.CONTROL}
    out = np.zeros(3)
    for code, mode in modes.items():
        out[code], _ = filter_packet(packet, mode, config.source)
    return out


def _gaussian_templates(config: SessionConfig) -> dict[int, GaussianState]:
    s = config.source
    f0, f1 = config.control_amplitudes
    return {
        CHOICE_ZERO: make_gaussian_state([(s.omega0, 1.0)], s.sigma),
        CHOICE_ONE: make_gaussian_state([(s.omega1, 1.0)], s.sigma),
        CHOICE_CONTROL: make_gaussian_state([(s.omega0, f0), (s.omega1, f1)], s.sigma),
    }


def _gaussian_band_leak(config: SessionConfig) -> float:
    """Fraction of a single component's weight falling past the band midpoint."""
    x = 0.5 * abs(config.delta_omega) / config.source.sigma
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def expected_detect_prob(config: SessionConfig, matching: bool = True) -> float:
    """Click probability of an info slot measured with its matching
    (or opposite) frequency projector, given the configured losses.

    This is the reference value for the verification layer's rate test; with
    an ideal channel it is exactly 1 (matching) and 0 (opposite, where any
    click indicates tampering).
    """
    p = config.channel.transmittance
    if config.heralding:
        # Single-band heralding; both info choices share the same band weight
        # for the symmetric default source, use the mean otherwise.
        hp = _herald_probs(config)
        p *= 0.5 * (hp[CHOICE_ZERO] + hp[CHOICE_ONE])
    if config.state_model == "gaussian":
        leak = _gaussian_band_leak(config)
        p *= (1.0 - leak) if matching else leak
    elif not matching:
        p = 0.0
    return p


def run_session(config: SessionConfig, adversary: AttackStrategy | None = None) -> Transcript:
    """Execute one full session and return its transcript.

    Per slot: build the planned state, let the adversary transform it, send
    it through the channel, and sample the receiver's outcome.  Everything is
    deterministic given ``config.seed``.
    """
    rngs = derive_rngs(config.seed)
    alice, bob_settings = plan_session(config, rngs.plan)
    n = config.n_slots
    src = config.source
    ch = config.channel
    det = config.detector
    h = det.tau_det
    slot_starts = np.arange(n, dtype=float) * config.slot_length
    visibility = ch.visibility

    f0, f1 = (complex(a) for a in config.control_amplitudes)
    base0 = np.array([1.0, 0.0, f0], dtype=complex)
    base1 = np.array([0.0, 1.0, f1], dtype=complex)
    choices = alice.choices
    batch = QubitBatch(src.omega0, src.omega1, base0[choices], base1[choices], alice.t0)

    attack_code = adversary.code if adversary is not None else ATTACK_NONE
    if adversary is not None:
        batch = adversary.transform_batch(batch, rngs.eve)

    # Losses: source heralding (if modeled), then channel attenuation.
    lost = np.zeros(n, dtype=bool)
    if config.heralding:
        herald_p = _herald_probs(config)
        lost |= rngs.channel.random(n) >= herald_p[choices]
    if ch.transmittance < 1.0:
        lost |= rngs.channel.random(n) >= ch.transmittance

    # Channel phases: only the relative component phase matters for any
    # statistic, so the per-slot delay acts on component 1.
    delta_l = draw_length_offsets(ch, n, rngs.channel)
    delays = (ch.length_m + delta_l) / ch.c
    b0 = batch.b0.copy()
    b1 = batch.b1 * np.exp(1j * batch.delta_omega * delays)
    if config.exact_omega_prefactors:
        b0 = b0 * math.sqrt(src.omega0)
        b1 = b1 * math.sqrt(src.omega1)
    batch = QubitBatch(src.omega0, src.omega1, b0, b1, alice.t0)

    clicked = np.zeros(n, dtype=bool)
    bit_bob = np.full(n, -1, dtype=np.int8)
    click_time = np.full(n, np.nan)
    click_time_exact = np.full(n, np.nan)
    alive = ~lost

    if config.state_model == "gaussian":
        leak = _gaussian_band_leak(config)
        prob_e0 = batch.prob0() * (1.0 - leak) + batch.prob1() * leak
        prob_e1 = batch.prob1() * (1.0 - leak) + batch.prob0() * leak
    else:
        prob_e0 = batch.prob0()
        prob_e1 = batch.prob1()

    for which, prob in ((SETTING_E0, prob_e0), (SETTING_E1, prob_e1)):
        mask = alive & (bob_settings == which)
        k = int(mask.sum())
        if k == 0:
            continue
        fired = rngs.detector.random(k) < prob[mask]
        idx = np.flatnonzero(mask)[fired]
        clicked[idx] = True
        bit_bob[idx] = which

    edt = alive & (bob_settings == SETTING_EDT)
    if edt.any():
        idx = np.flatnonzero(edt)
        if config.state_model == "gaussian":
            lo, hi = -0.5 * config.window + ch.length_m / ch.c, (
                0.5 * config.window + ch.length_m / ch.c
            )
            std = 1.0 / (2.0 * src.sigma)
            p_window = 0.5 * (
                math.erf((hi - ch.length_m / ch.c) / (std * math.sqrt(2.0)))
                - math.erf((lo - ch.length_m / ch.c) / (std * math.sqrt(2.0)))
            )
            fired = rngs.detector.random(idx.size) < p_window
            idx = idx[fired]
            if idx.size:
                u = measurement._sample_gaussian_offsets(
                    batch.b0[idx], batch.b1[idx], batch.delta_omega,
                    src.sigma, delays[idx], rngs.detector, lo, hi, visibility,
                )
        else:
            m = measurement.whole_periods(config.window, config.period)
            u = measurement.batch_beat_offsets(batch, idx, m, rngs.detector, visibility)
        if idx.size:
            t_exact = alice.t0[idx] + u
            u_slot = t_exact - slot_starts[idx]
            click_time_exact[idx] = t_exact
            click_time[idx] = slot_starts[idx] + measurement.quantize_offsets(u_slot, h)
            clicked[idx] = True

    if det.dark_rate > 0.0:
        p_dark = 1.0 - math.exp(-det.dark_rate * config.window)
        dark = ~clicked & (rngs.detector.random(n) < p_dark)
        for which in (SETTING_E0, SETTING_E1):
            idx = np.flatnonzero(dark & (bob_settings == which))
            clicked[idx] = True
            bit_bob[idx] = which
        idx = np.flatnonzero(dark & (bob_settings == SETTING_EDT))
        if idx.size:
            u = rngs.detector.uniform(0.0, config.window, size=idx.size)
            t_exact = slot_starts[idx] + u
            click_time_exact[idx] = t_exact
            click_time[idx] = slot_starts[idx] + measurement.quantize_offsets(u, h)
            clicked[idx] = True

    bit_alice = np.where(choices < CHOICE_CONTROL, choices, -1).astype(np.int8)

    return Transcript(
        config_hash=config.sha256(),
        n_slots=n,
        slot_length=config.slot_length,
        period=config.period,
        window=config.window,
        alice_choice=choices,
        t0=alice.t0,
        attack=np.full(n, attack_code, dtype=np.int8),
        lost=lost,
        bob_setting=bob_settings,
        clicked=clicked,
        click_time=click_time,
        click_time_exact=click_time_exact,
        bit_alice=bit_alice,
        bit_bob=bit_bob,
    )


@dataclass
class GroupedView:
    """Disclosed slots sorted into the 3 sender-choice groups x 3 setting subgroups."""

    cells: dict[tuple[int, int], np.ndarray]
    disclosed_indices: np.ndarray
    n_slots: int

    def cell(self, choice: int, setting: int) -> np.ndarray:
        return self.cells[(choice, setting)]


def disclose_and_group(transcript: Transcript, config: SessionConfig, rng) -> GroupedView:
    """Disclose all control slots plus a random fraction of info slots, and
    sort the disclosed slots by (sender choice, receiver setting).

    One uniform draw per slot couples disclosure sets monotonically across
    fractions for a fixed generator seed.
    """
    n = transcript.n_slots
    control = transcript.alice_choice == CHOICE_CONTROL
    draws = rng.random(n)
    disclosed = control | (~control & (draws < config.info_disclosure_fraction))
    transcript.disclosed = disclosed

    cells = {}
    for a in (CHOICE_ZERO, CHOICE_ONE, CHOICE_CONTROL):
        for b in (SETTING_E0, SETTING_E1, SETTING_EDT):
            cells[(a, b)] = np.flatnonzero(
                disclosed & (transcript.alice_choice == a) & (transcript.bob_setting == b)
            )
    return GroupedView(cells=cells, disclosed_indices=np.flatnonzero(disclosed), n_slots=n)


@dataclass(frozen=True)
class SiftedKey:
    """Key positions and bit values for one party."""

    positions: np.ndarray
    bits: np.ndarray

    def __post_init__(self):
        if self.positions.shape != self.bits.shape:
            raise ConfigurationError("positions and bits must have equal length")
        if self.positions.size and np.any(np.diff(self.positions) <= 0):
            raise ConfigurationError("positions must be strictly increasing")

    def __len__(self) -> int:
        return int(self.positions.size)


def sift(transcript: Transcript, grouped: GroupedView) -> tuple[SiftedKey, SiftedKey]:
    """Extract the shared key from the undisclosed slots.

    Key slots are the undisclosed information slots in which the receiver
    used a frequency projector and the detector clicked; idle slots and
    time-measurement clicks are discarded.  The sender's bit is what was
    sent, the receiver's bit is the projector that clicked.  Verification is
    a separate concern: sifting never tests anything.
    """
    info = transcript.alice_choice < CHOICE_CONTROL
    mask = (
        ~transcript.disclosed
        & info
        & (transcript.bob_setting != SETTING_EDT)
        & transcript.clicked
    )
    positions = np.flatnonzero(mask)
    transcript.in_key = mask
    alice_key = SiftedKey(positions=positions, bits=transcript.bit_alice[positions].copy())
    bob_key = SiftedKey(positions=positions, bits=transcript.bit_bob[positions].copy())
    return alice_key, bob_key
