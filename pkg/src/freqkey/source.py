"""Phenomenological single-photon source.

A short excitation pulse (duration tau_pi) starts radiative decay with
lifetime tau_r; the emitted broadband packet (spectral width ~ 1/tau_r)
then passes a pair of narrow spectral filters (width sigma) that carve
out the carrier states.  The emitter microphysics is deliberately reduced
to two numbers: the excitation-time jitter and the packet width.

Because every emission starts from the same excited state, packets from
different slots are identical up to the excitation-time phase ramp
exp(-i*omega_k*t0); filtering two narrow components out of one packet
conserves their relative phase, which is what makes the interference
pattern reproducible slot after slot.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateFilterError, InvalidStateError
from .states import GaussianState, SpectralPacket, make_gaussian_state

# The scale-separation chain uses "much less than" = a factor of ten.
MUCH_LESS_RATIO = 0.1
_RATIO_TOL = 1.0 + 1e-9

SPECTRUM_SHAPES = ("lorentzian", "flat")

# Lorentzian packets are truncated at +-4 half-widths; the excluded wings
# carry ~8% of a true Lorentzian but no structure relevant to filtering.
LORENTZ_TRUNCATION = 4.0

DEFAULT_GRID_POINTS = 4097


@dataclass(frozen=True)
class SourceParams:
    """Emitter and filter configuration.

    ``delta_omega_spectrum`` is the emitted packet width (defaults to
    1/tau_r), ``sigma`` the filter width, and ``omega0``/``omega1`` the two
    carrier frequencies cut from the packet.
    """

    tau_pi: float
    tau_r: float
    sigma: float
    omega0: float
    omega1: float
    delta_omega_spectrum: float | None = None
    spectrum: str = "lorentzian"

    def __post_init__(self):
        if self.tau_pi < 0 or self.tau_r <= 0 or self.sigma <= 0:
            raise InvalidStateError("tau_pi must be >= 0; tau_r and sigma must be positive")
        if self.omega0 == self.omega1:
            raise InvalidStateError("carrier frequencies must differ")
        if self.spectrum not in SPECTRUM_SHAPES:
            raise InvalidStateError(f"spectrum must be one of {SPECTRUM_SHAPES}")
        if self.delta_omega_spectrum is None:
            object.__setattr__(self, "delta_omega_spectrum", 1.0 / self.tau_r)
        elif self.delta_omega_spectrum <= 0:
            raise InvalidStateError("delta_omega_spectrum must be positive")
        if self.sigma >= abs(self.omega1 - self.omega0):
            raise InvalidStateError(
                "filter width sigma must be smaller than the carrier separation"
            )
        if self.tau_pi > MUCH_LESS_RATIO * self.tau_r:
            warnings.warn(
                f"tau_pi = {self.tau_pi:g} s is not much shorter than tau_r = "
                f"{self.tau_r:g} s; excitation-time jitter will blur the "
                "interference pattern",
                stacklevel=2,
            )

    @property
    def center(self) -> float:
        return 0.5 * (self.omega0 + self.omega1)

    @property
    def delta_omega(self) -> float:
        return abs(self.omega1 - self.omega0)


def excite(slot_start: float, params: SourceParams, rng) -> float:
    """Excitation time for one slot: slot start plus uniform jitter on [0, tau_pi].

    Only the jitter bound is physically constrained, so the maximum-entropy
    uniform distribution is used.
    """
    if params.tau_pi == 0.0:
        return slot_start
    return slot_start + rng.uniform(0.0, params.tau_pi)


def emit_packet(t0: float, params: SourceParams, n_grid: int = DEFAULT_GRID_POINTS) -> SpectralPacket:
    """Emit a normalized broadband packet at excitation time ``t0``.

    The packet is centered between the carrier frequencies with width
    ``delta_omega_spectrum``.  Shape is Lorentzian (radiative decay) by
    default; the flat mode reproduces the simple band-fraction heralding
    estimate exactly.  All amplitudes carry the phase ramp exp(-i*omega_k*t0).
    """
    width = params.delta_omega_spectrum
    if params.spectrum == "flat":
        lo, hi = params.center - 0.5 * width, params.center + 0.5 * width
        omegas = np.linspace(lo, hi, n_grid)
        mags = np.full(n_grid, 1.0)
    else:
        half = LORENTZ_TRUNCATION * width
        omegas = np.linspace(params.center - half, params.center + half, n_grid)
        mags = np.sqrt(width**2 / ((omegas - params.center) ** 2 + width**2))
    mags /= np.sqrt(np.sum(mags**2))
    # exp(-i*omega*t0) evaluated as exp(-i*omega*(t0 mod 2pi/omega-ish)) is not
    # safe; keep the straight product, precision is restored downstream by the
    # band-phase referencing in filter_packet.
    phases = np.exp(-1j * omegas * t0)
    return SpectralPacket(omegas=omegas, amplitudes=mags * phases, t0=t0)


class FilterMode:
    """Which band(s) the dual filter passes."""

    ZERO = "zero"
    ONE = "one"
    CONTROL = "control"

    ALL = (ZERO, ONE, CONTROL)


def _band_edges(center: float, width: float) -> tuple[float, float]:
    return center - 0.5 * width, center + 0.5 * width


def _band_weight(packet: SpectralPacket, lo: float, hi: float) -> float:
    """Packet probability weight inside [lo, hi] with fractional bin coverage.

    Each grid point owns a cell of one grid step centered on it; edge cells
    contribute proportionally to their overlap with the band, which keeps the
    weight exact for flat spectra regardless of grid resolution.
    """
    h = packet.grid_step
    cell_lo = packet.omegas - 0.5 * h
    cell_hi = packet.omegas + 0.5 * h
    overlap = np.clip(np.minimum(cell_hi, hi) - np.maximum(cell_lo, lo), 0.0, h)
    return float(np.sum(np.abs(packet.amplitudes) ** 2 * (overlap / h)))


def _band_phase(packet: SpectralPacket, center: float, lo: float, hi: float) -> complex:
    """Unit phase factor of the band relative to the preparation ramp.

    The amplitude nearest the band center is referenced against
    exp(-i*center*t0); for a bare emitted packet this is exactly 1, and any
    extra phase structure (channel, tampering) survives in the result.
    """
    idx = int(np.argmin(np.abs(packet.omegas - center)))
    if not (lo <= packet.omegas[idx] <= hi):
        return 1.0 + 0.0j
    amp = packet.amplitudes[idx]
    if amp == 0:
        return 1.0 + 0.0j
    ramp = np.exp(-1j * packet.omegas[idx] * packet.t0)
    rel = amp / ramp
    mag = abs(rel)
    return rel / mag if mag > 0 else 1.0 + 0.0j


def filter_packet(
    packet: SpectralPacket, mode: str, params: SourceParams
) -> tuple[float, GaussianState | None]:
    """Carve the selected band(s) out of a packet.

    Returns the heralding probability (the band weight: the fraction of
    repeated emissions in which a detector behind the filters would fire at
    all) and the renormalized post-filter state, modeled as Gaussian
    component(s) of width sigma.  Band weights below numerical noise yield
    ``(0.0, None)``.

    Filtering is deterministic; the protocol layer performs the heralding
    Bernoulli draw so the physics here stays exactly testable.
    """
    if mode not in FilterMode.ALL:
        raise DegenerateFilterError(f"unknown filter mode {mode!r}")
    bands: list[tuple[float, float, float]] = []
    if mode in (FilterMode.ZERO, FilterMode.CONTROL):
        lo, hi = _band_edges(params.omega0, params.sigma)
        bands.append((params.omega0, lo, hi))
    if mode in (FilterMode.ONE, FilterMode.CONTROL):
        lo, hi = _band_edges(params.omega1, params.sigma)
        bands.append((params.omega1, lo, hi))
    if len(bands) == 2 and bands[0][2] > bands[1][1] and bands[1][2] > bands[0][1]:
        raise DegenerateFilterError("filter bands overlap; sigma is too wide")

    grid_lo = packet.omegas[0] - 0.5 * packet.grid_step
    grid_hi = packet.omegas[-1] + 0.5 * packet.grid_step
    if all(hi <= grid_lo or lo >= grid_hi for _, lo, hi in bands):
        raise DegenerateFilterError(
            "filter bands have no overlap with the packet spectrum"
        )

    weights = [_band_weight(packet, lo, hi) for _, lo, hi in bands]
    herald = float(sum(weights))
    if herald <= 0.0:
        return 0.0, None

    components = []
    for (center, lo, hi), w in zip(bands, weights):
        if w <= 0.0:
            continue
        components.append((center, math.sqrt(w) * _band_phase(packet, center, lo, hi)))
    if not components:
        return 0.0, None
    total = math.sqrt(sum(abs(w) ** 2 for _, w in components))
    components = [(c, w / total) for c, w in components]
    return herald, make_gaussian_state(components, params.sigma, t0=packet.t0)


@dataclass(frozen=True)
class RegimeInequality:
    """One link of the time-scale ordering chain."""

    name: str
    ratio: float
    satisfied: bool


def timing_regime_check(
    params: SourceParams, tau_det: float, delta_omega: float
) -> list[RegimeInequality]:
    """Evaluate the scale-separation chain tau_pi << tau_r << tau_det << 1/delta_omega.

    "Much less than" is operationalized as a ratio of at most 0.1; the
    returned margins are the raw ratios, ordered along the chain.
    """
    if tau_det <= 0 or delta_omega <= 0:
        raise InvalidStateError("tau_det and delta_omega must be positive")
    ratios = [
        ("tau_pi << tau_r", params.tau_pi / params.tau_r),
        ("tau_r << tau_det", params.tau_r / tau_det),
        ("tau_det << 1/delta_omega", tau_det * delta_omega),
    ]
    return [
        RegimeInequality(name, ratio, ratio <= MUCH_LESS_RATIO * _RATIO_TOL)
        for name, ratio in ratios
    ]


def hard_regime_violation(checks: list[RegimeInequality]) -> bool:
    """True when any ordering ratio exceeds 1, i.e. the chain is inverted."""
    return any(c.ratio > 1.0 for c in checks)
