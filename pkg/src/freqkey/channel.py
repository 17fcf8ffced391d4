"""Fiber channel model: propagation phase, length jitter, loss, visibility.

Propagation over length L multiplies component k by exp(i*omega_k*L/c)
(wave vector k = omega/c), which rigidly shifts the arrival-time beat
pattern by L/c.  Slot-to-slot variation of the effective length (delta L)
jitters the relative phase by delta_omega*delta_L/c and blurs the
ensemble-averaged fringe; attenuation only converts slots into idle
measurements; dispersion and polarization-rotation degradation are folded
into a single fringe-visibility multiplier applied to the interference
cross term.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError
from .measurement import C_LIGHT
from .states import TWO_PI, FrequencyQubit, _component_phases

JITTER_MODES = ("per_slot", "frozen")

# A relative phase shift is "soft" when well below a full turn.
SOFT_PHASE_LIMIT = TWO_PI / 10.0


@dataclass(frozen=True)
class ChannelParams:
    """Channel configuration.

    ``delta_l_sigma`` is the per-slot standard deviation of the effective
    length; ``visibility`` multiplies the interference cross term of every
    arrival-time density evaluated behind this channel.  ``jitter_mode``
    "frozen" draws one length offset per session instead of one per slot
    (calibration-style drift).
    """

    length_m: float = 0.0
    c: float = C_LIGHT
    delta_l_sigma: float = 0.0
    transmittance: float = 1.0
    visibility: float = 1.0
    jitter_mode: str = "per_slot"

    def __post_init__(self):
        if self.length_m < 0:
            raise ConfigurationError("length_m must be non-negative")
        if self.c <= 0:
            raise ConfigurationError("group velocity c must be positive")
        if self.delta_l_sigma < 0:
            raise ConfigurationError("delta_l_sigma must be non-negative")
        if not 0.0 <= self.transmittance <= 1.0:
            raise ConfigurationError("transmittance must lie in [0, 1]")
        if not 0.0 <= self.visibility <= 1.0:
            raise ConfigurationError("visibility must lie in [0, 1]")
        if self.jitter_mode not in JITTER_MODES:
            raise ConfigurationError(f"jitter_mode must be one of {JITTER_MODES}")


def apply_channel_phase(
    state: FrequencyQubit, params: ChannelParams, delta_l: float = 0.0
) -> FrequencyQubit:
    """Deterministic part of propagation: per-component phase omega_k*(L+dL)/c.

    Norm-preserving by construction; the moduli |f0|, |f1| never change.
    """
    path = params.length_m + delta_l
    if path == 0.0:
        return state
    shift = path / params.c
    g0, g1 = _component_phases(state.omega0, state.omega1, -shift)
    return FrequencyQubit(state.f0 * g0, state.f1 * g1, state.omega0, state.omega1, state.t0)


def propagate(
    state: FrequencyQubit, params: ChannelParams, rng, delta_l: float | None = None
) -> FrequencyQubit | None:
    """Send one state through the channel.

    Returns ``None`` with probability 1 - transmittance (the photon was
    absorbed; the slot becomes an idle measurement), otherwise the state with
    propagation phases applied.  The length offset is drawn fresh per call
    from N(0, delta_l_sigma) unless an explicit ``delta_l`` is supplied
    (frozen-offset calibration runs).  The fringe-visibility factor is not
    applied here; it scales the interference term at density evaluation.
    """
    if rng.random() >= params.transmittance:
        return None
    if delta_l is None:
        delta_l = rng.normal(0.0, params.delta_l_sigma) if params.delta_l_sigma > 0 else 0.0
    return apply_channel_phase(state, params, delta_l)


def draw_length_offsets(params: ChannelParams, n: int, rng) -> np.ndarray:
    """Per-slot effective-length offsets for a whole session.

    "frozen" mode draws a single offset shared by all slots.
    """
    if params.delta_l_sigma == 0.0:
        return np.zeros(n)
    if params.jitter_mode == "frozen":
        return np.full(n, rng.normal(0.0, params.delta_l_sigma))
    return rng.normal(0.0, params.delta_l_sigma, size=n)


@dataclass(frozen=True)
class PhaseBudget:
    phase: float
    soft: bool


def jitter_phase_budget(delta_l: float, delta_omega: float, c: float = C_LIGHT) -> PhaseBudget:
    """Relative-phase shift caused by a length change delta_l.

    phase = delta_omega * delta_l / c; the condition is "soft" while the
    shift stays below a tenth of a turn.
    """
    if delta_l < 0 or delta_omega <= 0:
        raise ConfigurationError("delta_l must be >= 0 and delta_omega > 0")
    phase = delta_omega * delta_l / c
    return PhaseBudget(phase=phase, soft=phase <= SOFT_PHASE_LIMIT)
