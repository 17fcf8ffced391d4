"""Intercept-resend eavesdropping strategies.

Every strategy transforms in-flight states and is modeled as ideal: no
extra loss, instantaneous measurement, perfect resend synchronization.
That is the strongest adversary of this family, so detection power
measured against it lower-bounds the real case.

The physics of why these attacks are visible: a frequency measurement
collapses the control superposition onto a single basis component, which
flattens the arrival-time beat pattern; a time measurement collapses any
state onto an equal-weight superposition, which makes the "impossible"
opposite-frequency projector click on information slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .measurement import _sample_beat_offsets
from .states import FrequencyQubit, QubitBatch, make_control_state, make_info_state

ATTACK_NONE = 0
ATTACK_INTERCEPT_FREQ = 1
ATTACK_INTERCEPT_TIME = 2
ATTACK_BLIND_RESEND = 3

ATTACK_LABELS = {
    ATTACK_NONE: "none",
    ATTACK_INTERCEPT_FREQ: "intercept-freq",
    ATTACK_INTERCEPT_TIME: "intercept-time",
    ATTACK_BLIND_RESEND: "blind-resend",
}

INV_SQRT2 = 1.0 / math.sqrt(2.0)


def intercept_freq(state: FrequencyQubit, rng) -> FrequencyQubit:
    """Measure in the frequency basis and resend the collapsed component.

    The outcome follows the Born rule on |f0|^2, |f1|^2.  Information states
    are eigenstates, so the attack is invisible on them; a control state is
    replaced by one of the basis states and loses its beat pattern.
    """
    p0 = abs(state.f0) ** 2 / state.norm_squared
    bit = 0 if rng.random() < p0 else 1
    return make_info_state(bit, state.omega0, state.omega1, t0=state.t0)


def intercept_time(state: FrequencyQubit, rng, window: float | None = None) -> FrequencyQubit:
    """Measure arrival time and resend the equal-weight beat vector at that time.

    The resent state carries amplitude 1/sqrt(2) on both components with
    phases anchored at the sampled arrival time tau, so a downstream
    frequency projector clicks with probability 1/2 regardless of what was
    sent -- including the projector that could never click before.
    """
    b0, b1 = state.pattern_amplitudes()
    m = 1
    if window is not None:
        m = max(1, int(window // state.period))
    u = float(_sample_beat_offsets([b0], [b1], state.delta_omega, m, rng)[0])
    tau = state.t0 + u
    return make_control_state(INV_SQRT2, INV_SQRT2, tau, state.omega0, state.omega1)


@dataclass(frozen=True)
class AttackStrategy:
    """Base strategy: identity transform (no adversary present)."""

    code: int = ATTACK_NONE

    @property
    def name(self) -> str:
        return ATTACK_LABELS[self.code]

    def transform(self, state: FrequencyQubit, rng) -> FrequencyQubit:
        return state

    def transform_batch(self, batch: QubitBatch, rng) -> QubitBatch:
        return batch


@dataclass(frozen=True)
class InterceptFreq(AttackStrategy):
    code: int = ATTACK_INTERCEPT_FREQ

    def transform(self, state, rng):
        return intercept_freq(state, rng)

    def transform_batch(self, batch, rng):
        collapse_to_one = rng.random(batch.n) >= batch.prob0()
        b0 = np.where(collapse_to_one, 0.0 + 0.0j, 1.0 + 0.0j)
        b1 = np.where(collapse_to_one, 1.0 + 0.0j, 0.0 + 0.0j)
        return QubitBatch(batch.omega0, batch.omega1, b0, b1, batch.t0)


@dataclass(frozen=True)
class InterceptTime(AttackStrategy):
    code: int = ATTACK_INTERCEPT_TIME

    def transform(self, state, rng):
        return intercept_time(state, rng)

    def transform_batch(self, batch, rng):
        u = _sample_beat_offsets(batch.b0, batch.b1, batch.delta_omega, 1, rng)
        # Equal-weight vector anchored at tau = t0 + u, re-expressed in the
        # slot anchor t0: component 1 keeps the relative phase exp(i*delta*u).
        b0 = np.full(batch.n, INV_SQRT2, dtype=complex)
        b1 = INV_SQRT2 * np.exp(1j * batch.delta_omega * u)
        return QubitBatch(batch.omega0, batch.omega1, b0, b1, batch.t0)


@dataclass(frozen=True)
class BlindResend(AttackStrategy):
    """Replace every slot by a fixed configured state (e.g. always logic 0)."""

    code: int = ATTACK_BLIND_RESEND
    f0: complex = 1.0 + 0.0j
    f1: complex = 0.0 + 0.0j

    def __post_init__(self):
        norm_sq = abs(self.f0) ** 2 + abs(self.f1) ** 2
        if abs(norm_sq - 1.0) > 1e-9:
            raise ConfigurationError("blind-resend amplitudes must be normalized")

    def transform(self, state, rng):
        return make_control_state(
            self.f0, self.f1, state.t0, state.omega0, state.omega1
        ) if self.f0 != 0 and self.f1 != 0 else (
            make_info_state(0 if self.f1 == 0 else 1, state.omega0, state.omega1, t0=state.t0)
        )

    def transform_batch(self, batch, rng):
        b0 = np.full(batch.n, self.f0, dtype=complex)
        b1 = np.full(batch.n, self.f1, dtype=complex)
        return QubitBatch(batch.omega0, batch.omega1, b0, b1, batch.t0)


STRATEGY_NAMES = {
    "none": None,
    "intercept-freq": InterceptFreq,
    "intercept-time": InterceptTime,
    "blind-resend": BlindResend,
}


def strategy_from_name(name: str) -> AttackStrategy | None:
    """Look up a built-in strategy by CLI name; ``None`` means no adversary."""
    key = name.strip().lower()
    if key not in STRATEGY_NAMES:
        raise ConfigurationError(
            f"unknown attack strategy {name!r}; choose from {sorted(STRATEGY_NAMES)}"
        )
    cls = STRATEGY_NAMES[key]
    return None if cls is None else cls()
