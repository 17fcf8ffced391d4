"""Outcome probabilities, arrival-time densities and detector sampling.

Two measurement families exist at the receiver: narrow-band frequency
projectors (click probability = component weight, time independent) and a
waiting-mode time-of-arrival measurement whose click-time density is

    monochromatic:  p(u) = { |b0|^2 + |b1|^2
                             + 2*v*Re[b0*conj(b1)*exp(i*(omega1-omega0)*u)] } / (s*T)

with ``u = t - t0``, ``s = |b0|^2 + |b1|^2``, ``T`` the beat period and
``v`` an aggregate fringe-visibility factor.  Finite-linewidth states add a
Gaussian arrival envelope:

    gaussian:  p(t) ~ exp[-2*sigma^2*(t - t0 - L/c)^2] * (fringe term),

normalized to unit integral over the detection window (all probabilities
here are relative, so overall radiometric prefactors are dropped; an
optional exact mode reinstates the sqrt(omega) detection weights).

Click times are produced by rejection sampling from the applicable density
and quantized to detector-resolution bins afterwards; the continuous value
is retained for diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad

from .errors import ConfigurationError, InvalidStateError
from .states import (
    TWO_PI,
    FrequencyQubit,
    GaussianState,
    QubitBatch,
    SpectralPacket,
    inner_product,
)

C_LIGHT = 2.998e8  # effective group velocity used for propagation phases (m/s)


class SettingKind(Enum):
    """Receiver measurement choice."""

    FREQ_E0 = "E0"
    FREQ_E1 = "E1"
    TIME_OF_ARRIVAL = "Edt"


@dataclass(frozen=True)
class MeasurementSetting:
    """One slot's measurement configuration.

    ``tau_det`` (detector resolution) and ``window`` (waiting-mode span) are
    required for time-of-arrival settings and ignored for frequency settings.
    """

    kind: SettingKind
    tau_det: float | None = None
    window: float | None = None

    def __post_init__(self):
        if self.kind is SettingKind.TIME_OF_ARRIVAL:
            if self.tau_det is None or self.window is None:
                raise ConfigurationError("time-of-arrival setting needs tau_det and window")
            if self.tau_det <= 0:
                raise ConfigurationError(f"tau_det must be positive, got {self.tau_det!r}")
            if self.tau_det > self.window:
                raise ConfigurationError("tau_det must not exceed the detection window")

    @staticmethod
    def frequency(which: int) -> "MeasurementSetting":
        if which not in (0, 1):
            raise ConfigurationError(f"frequency projector index must be 0 or 1, got {which!r}")
        return MeasurementSetting(SettingKind.FREQ_E0 if which == 0 else SettingKind.FREQ_E1)

    @staticmethod
    def time_of_arrival(tau_det: float, window: float) -> "MeasurementSetting":
        return MeasurementSetting(SettingKind.TIME_OF_ARRIVAL, tau_det=tau_det, window=window)


@dataclass(frozen=True)
class DetectorParams:
    """Receiver-side detector configuration."""

    tau_det: float
    window: float
    dark_rate: float = 0.0  # Hz; default 0 keeps the ideal-detector model

    def __post_init__(self):
        if self.tau_det <= 0:
            raise ConfigurationError(f"tau_det must be positive, got {self.tau_det!r}")
        if self.window < self.tau_det:
            raise ConfigurationError("window must be at least tau_det")
        if self.dark_rate < 0:
            raise ConfigurationError("dark_rate must be non-negative")


@dataclass
class DetectionRecord:
    """Outcome of one slot's measurement.

    ``click_time`` is quantized to tau_det bins (bin centers, offset from the
    state's t0 anchor); ``click_time_exact`` keeps the continuous sample for
    diagnostics.  ``bit_value`` is set only for frequency-projector clicks.
    """

    slot: int
    setting: MeasurementSetting
    clicked: bool
    click_time: float | None = None
    click_time_exact: float | None = None
    bit_value: int | None = None


# ---------------------------------------------------------------------------
# Closed-form probabilities and densities
# ---------------------------------------------------------------------------


def prob_frequency(state: FrequencyQubit, which: int) -> float:
    """Click probability of frequency projector ``which`` (time independent)."""
    if which not in (0, 1):
        raise ConfigurationError(f"projector index must be 0 or 1, got {which!r}")
    amp = state.f0 if which == 0 else state.f1
    return abs(amp) ** 2 / state.norm_squared


def _pattern_density(b0, b1, delta_omega, u, visibility=1.0):
    """Unit-normalized (per period) beat density at offsets ``u`` from the anchor."""
    u = np.asarray(u, dtype=float)
    s = abs(b0) ** 2 + abs(b1) ** 2
    period = TWO_PI / abs(delta_omega)
    cross = 2.0 * visibility * (b0 * np.conjugate(b1) * np.exp(1j * delta_omega * u)).real
    return (s + cross) / (s * period)


def time_density(state: FrequencyQubit, t, visibility: float = 1.0):
    """Arrival-time probability density of a monochromatic state at time ``t``.

    Information states give the flat density 1/T; control states oscillate at
    the beat frequency with period T, anchored at the preparation time t0.
    """
    b0, b1 = state.pattern_amplitudes()
    return _pattern_density(b0, b1, state.delta_omega, np.asarray(t, dtype=float) - state.t0,
                            visibility)


def channel_time_density(
    state: FrequencyQubit,
    t,
    length_m: float,
    visibility: float = 1.0,
    exact_omega_prefactors: bool = False,
    c: float = C_LIGHT,
):
    """Arrival-time density after propagating ``length_m`` of channel.

    Each component gains the propagation phase ``omega_k * L / c``, which
    shifts the beat pattern by L/c.  With ``exact_omega_prefactors`` the
    component weights are scaled by sqrt(omega_k) (detection-response
    weighting) and the density is renormalized over the period; at
    delta_omega/omega ~ 1e-7 this changes the density by less than 1e-6,
    which is why it is off by default.
    """
    b0, b1 = state.pattern_amplitudes()
    shift = length_m / c
    b0 = b0 * complex(math.cos(state.omega0 * shift), math.sin(state.omega0 * shift))
    b1 = b1 * complex(math.cos(state.omega1 * shift), math.sin(state.omega1 * shift))
    if exact_omega_prefactors:
        b0 *= math.sqrt(state.omega0)
        b1 *= math.sqrt(state.omega1)
    return _pattern_density(b0, b1, state.delta_omega, np.asarray(t, dtype=float) - state.t0,
                            visibility)


def _gaussian_raw_density(state: GaussianState, t, length_m=0.0, visibility=1.0, c=C_LIGHT):
    """Envelope times fringe factor, before window normalization."""
    u = np.asarray(t, dtype=float) - state.t0 - state.delay - length_m / c
    env = np.exp(-2.0 * state.sigma**2 * u**2)
    comps = state.components
    if len(comps) == 1:
        return env * abs(comps[0][1]) ** 2
    (c0, w0), (c1, w1) = comps
    cross = 2.0 * visibility * (w0 * np.conjugate(w1) * np.exp(1j * (c1 - c0) * u)).real
    return env * (abs(w0) ** 2 + abs(w1) ** 2 + cross)


def gaussian_time_density(
    state: GaussianState,
    t,
    length_m: float = 0.0,
    visibility: float = 1.0,
    c: float = C_LIGHT,
):
    """Unit-normalized arrival-time density of a finite-linewidth state.

    A single component gives a pure Gaussian envelope peaking at
    ``t0 + delay + L/c``; two components modulate that envelope with the
    beat fringe.  Fringes are well defined only for sigma much smaller than
    the component separation.  Normalization is analytic:
    the envelope integral is sqrt(pi/(2 sigma^2)) and the fringe term picks
    up the factor exp(-(c1-c0)^2/(8 sigma^2)).
    """
    raw = _gaussian_raw_density(state, t, length_m, visibility, c)
    env_integral = math.sqrt(math.pi / (2.0 * state.sigma**2))
    comps = state.components
    if len(comps) == 1:
        total = env_integral * abs(comps[0][1]) ** 2
    else:
        (c0, w0), (c1, w1) = comps
        damp = math.exp(-((c1 - c0) ** 2) / (8.0 * state.sigma**2))
        cross = 2.0 * visibility * (w0 * np.conjugate(w1)).real * damp
        total = env_integral * (abs(w0) ** 2 + abs(w1) ** 2 + cross)
    return raw / total


def gaussian_band_probability(
    state: GaussianState, which: int, omega0: float, omega1: float
) -> float:
    """Weight of the spectral band around omega_``which``; the bands split at
    the midpoint between the two basis frequencies and extend outward over the
    state's support.  Converges to |f_which|^2 in the narrow-linewidth limit.
    """
    if which not in (0, 1):
        raise ConfigurationError(f"projector index must be 0 or 1, got {which!r}")
    mid = 0.5 * (omega0 + omega1)
    lo, hi = state.support
    target = omega0 if which == 0 else omega1
    if target <= mid:
        a, b = min(lo, mid), mid
    else:
        a, b = mid, max(hi, mid)
    if a >= b:
        return 0.0
    from .states import integrate_spectral_density

    val = integrate_spectral_density(state, a, b)
    return float(min(max(val, 0.0), 1.0))


def b92_test_probs(psi0: FrequencyQubit, psi1: FrequencyQubit) -> tuple[float, float]:
    """Probabilities of the nonorthogonal-state test projectors.

    Testing a state against its own complement projector never fires;
    testing against the other state's complement fires with probability
    ``1 - |<psi0|psi1>|^2``.
    """
    overlap = inner_product(psi0, psi1)
    return 0.0, 1.0 - abs(overlap) ** 2


def mean_photon_number(packet: SpectralPacket) -> float:
    """Total photon number of a packet, sum |f_k|^2 (1 for a normalized packet).

    Deliberately does not renormalize, so it can be used as a diagnostic for
    packets that lost amplitude to filtering.
    """
    return packet.norm_squared


# ---------------------------------------------------------------------------
# Theoretical CDFs (quadrature-built; used by the sampler tests and the
# statistical verification layer as the single source of truth)
# ---------------------------------------------------------------------------


def whole_periods(window: float, period: float) -> int:
    """Number of whole beat periods inside the detection window (>= 1)."""
    m = int(math.floor(window / period + 1e-9))
    if m < 1:
        raise ConfigurationError(
            f"detection window {window!r} s is shorter than one beat period {period!r} s"
        )
    return m


def mono_time_cdf(state: FrequencyQubit, window: float, visibility: float = 1.0,
                  n_grid: int = 8193):
    """CDF of the arrival-time offset u = t - t0 over ``m`` whole periods.

    Built by cumulative quadrature of the density over one period, then
    extended periodically.  Returns a vectorized callable.
    """
    period = state.period
    m = whole_periods(window, period)
    b0, b1 = state.pattern_amplitudes()
    grid = np.linspace(0.0, period, n_grid)
    dens = _pattern_density(b0, b1, state.delta_omega, grid, visibility)
    cum = cumulative_trapezoid(dens, grid, initial=0.0)
    cum /= cum[-1]

    def cdf(u):
        u = np.asarray(u, dtype=float)
        k = np.clip(np.floor(u / period), 0, m - 1)
        r = np.clip(u - k * period, 0.0, period)
        return (k + np.interp(r, grid, cum)) / m

    return cdf


def gaussian_time_cdf(
    state: GaussianState,
    window_lo: float,
    window_hi: float,
    length_m: float = 0.0,
    visibility: float = 1.0,
    c: float = C_LIGHT,
    n_grid: int = 16385,
):
    """CDF of the arrival-time offset u = t - t0 over [window_lo, window_hi].

    Normalized over the window, which matches a sampler that discards
    arrivals outside the waiting span.
    """
    grid = np.linspace(window_lo, window_hi, n_grid)
    dens = _gaussian_raw_density(state, grid + state.t0, length_m, visibility, c)
    cum = cumulative_trapezoid(dens, grid, initial=0.0)
    if cum[-1] <= 0:
        raise ConfigurationError("detection window has no overlap with the arrival envelope")
    cum /= cum[-1]

    def cdf(u):
        u = np.asarray(u, dtype=float)
        return np.interp(u, grid, cum, left=0.0, right=1.0)

    return cdf


# ---------------------------------------------------------------------------
# Samplers
# ---------------------------------------------------------------------------


def quantize_offsets(u, tau_det):
    """Quantize continuous offsets to detector-bin centers (bin width tau_det)."""
    u = np.asarray(u, dtype=float)
    return (np.floor(u / tau_det) + 0.5) * tau_det


def _sample_beat_offsets(b0, b1, delta_omega, m_periods, rng, visibility=1.0):
    """Rejection sampling of arrival offsets for a batch of beat patterns.

    ``b0``/``b1`` are per-row pattern amplitudes. One sample per row is drawn
    from the per-period density, then a uniform whole-period offset is added
    (the monochromatic pattern repeats exactly).  The proposal bound
    ``(s + 2*v*|b0*b1|)/(s*T)`` is tight and closed-form, so acceptance is
    at least 1/2.
    """
    b0 = np.atleast_1d(np.asarray(b0, dtype=complex))
    b1 = np.atleast_1d(np.asarray(b1, dtype=complex))
    n = b0.shape[0]
    period = TWO_PI / abs(delta_omega)
    s = np.abs(b0) ** 2 + np.abs(b1) ** 2
    kappa = b0 * np.conjugate(b1)
    peak = s + 2.0 * visibility * np.abs(kappa)

    out = np.empty(n, dtype=float)
    pending = np.arange(n)
    while pending.size:
        u = rng.uniform(0.0, period, size=pending.size)
        dens = s[pending] + 2.0 * visibility * (
            kappa[pending] * np.exp(1j * delta_omega * u)
        ).real
        accept = rng.uniform(0.0, peak[pending]) < dens
        out[pending[accept]] = u[accept]
        pending = pending[~accept]
    if m_periods > 1:
        out += period * rng.integers(0, m_periods, size=n)
    return out


def _sample_gaussian_offsets(
    weights0,
    weights1,
    center_delta,
    sigma,
    delays,
    rng,
    window_lo,
    window_hi,
    visibility=1.0,
):
    """Rejection sampling of Gaussian-envelope arrivals for a batch of slots.

    Proposals come from the envelope normal distribution (std 1/(2 sigma)),
    are thinned by the fringe factor, and re-drawn when they land outside
    the detection window.  ``weights1``/``center_delta`` may be None for
    single-component states.
    """
    delays = np.atleast_1d(np.asarray(delays, dtype=float))
    n = delays.shape[0]
    std = 1.0 / (2.0 * sigma)
    two_component = weights1 is not None
    if two_component:
        w0 = np.atleast_1d(np.asarray(weights0, dtype=complex))
        w1 = np.atleast_1d(np.asarray(weights1, dtype=complex))
        s = np.abs(w0) ** 2 + np.abs(w1) ** 2
        kappa = w0 * np.conjugate(w1)
        peak = s + 2.0 * visibility * np.abs(kappa)

    out = np.empty(n, dtype=float)
    pending = np.arange(n)
    while pending.size:
        u = rng.normal(delays[pending], std)
        ok = (u >= window_lo) & (u <= window_hi)
        if two_component:
            fringe = s[pending] + 2.0 * visibility * (
                kappa[pending] * np.exp(1j * center_delta * (u - delays[pending]))
            ).real
            ok &= rng.uniform(0.0, peak[pending]) < fringe
        out[pending[ok]] = u[ok]
        pending = pending[~ok]
    return out


def sample_arrival_offsets(state, n: int, rng, window: float, visibility: float = 1.0):
    """Draw ``n`` continuous arrival offsets (u = t - t0) from a state's density.

    Monochromatic states are sampled over ``floor(window/T)`` whole beat
    periods; Gaussian states over a window of length ``window`` centered on
    the arrival envelope.
    """
    if isinstance(state, FrequencyQubit):
        m = whole_periods(window, state.period)
        b0, b1 = state.pattern_amplitudes()
        b0 = np.full(n, b0, dtype=complex)
        b1 = np.full(n, b1, dtype=complex)
        return _sample_beat_offsets(b0, b1, state.delta_omega, m, rng, visibility)
    if isinstance(state, GaussianState):
        lo, hi = gaussian_window(state, window)
        comps = state.components
        delays = np.full(n, state.delay, dtype=float)
        if len(comps) == 1:
            return _sample_gaussian_offsets(
                np.full(n, comps[0][1], dtype=complex), None, 0.0,
                state.sigma, delays, rng, lo, hi, visibility,
            )
        (c0, w0), (c1, w1) = comps
        return _sample_gaussian_offsets(
            np.full(n, w0, dtype=complex), np.full(n, w1, dtype=complex), c1 - c0,
            state.sigma, delays, rng, lo, hi, visibility,
        )
    raise InvalidStateError(f"cannot sample arrival times from {type(state).__name__}")


def gaussian_window(state: GaussianState, window: float) -> tuple[float, float]:
    """Detection window (offsets from t0) centered on the arrival envelope."""
    center = state.delay
    return center - 0.5 * window, center + 0.5 * window


def sample_outcome(
    state,
    setting: MeasurementSetting,
    rng,
    window: float | None = None,
    visibility: float = 1.0,
    slot: int = 0,
) -> DetectionRecord:
    """Sample one detector outcome for ``state`` under ``setting``.

    Frequency settings are Bernoulli clicks with the projector weight; the
    no-click branch is a genuine idle protocol event, not an error.
    Time-of-arrival clicks are rejection-sampled from the applicable density
    and quantized to tau_det bins; monochromatic waiting-mode detection
    always clicks within a window of at least one beat period.
    """
    if setting.kind is not SettingKind.TIME_OF_ARRIVAL:
        which = 0 if setting.kind is SettingKind.FREQ_E0 else 1
        if isinstance(state, FrequencyQubit):
            p = prob_frequency(state, which)
        elif isinstance(state, GaussianState):
            if len(state.centers) == 1:
                raise InvalidStateError(
                    "band probability of a single-component state needs the basis "
                    "frequencies; use gaussian_band_probability directly"
                )
            w0, w1 = state.centers
            p = gaussian_band_probability(state, which, w0, w1)
        else:
            raise InvalidStateError(f"cannot measure {type(state).__name__}")
        clicked = bool(rng.random() < p)
        return DetectionRecord(slot, setting, clicked, bit_value=which if clicked else None)

    win = window if window is not None else setting.window
    u = float(sample_arrival_offsets(state, 1, rng, win, visibility)[0])
    uq = float(quantize_offsets(u, setting.tau_det))
    return DetectionRecord(slot, setting, True, click_time=uq, click_time_exact=u)


# ---------------------------------------------------------------------------
# Batch helpers used by the protocol driver
# ---------------------------------------------------------------------------


def batch_beat_offsets(batch: QubitBatch, mask, m_periods, rng, visibility=1.0):
    """Arrival offsets for the masked rows of a monochromatic state batch."""
    return _sample_beat_offsets(
        batch.b0[mask], batch.b1[mask], batch.delta_omega, m_periods, rng, visibility
    )
