"""Carrier states for the frequency-coded key distribution protocol.

Three single-photon states travel down the channel: two stationary
information states concentrated at the basis frequencies ``omega0`` and
``omega1`` (logic 0 and 1), and one nonstationary control state that
superposes both frequency components.  The arrival-time statistics of the
control state oscillate with period ``T = 2*pi / |omega1 - omega0|``; the
receiver checks that oscillation to detect tampering.

Monochromatic states are exact two-level objects (:class:`FrequencyQubit`).
Finite-linewidth variants carry one or two Gaussian spectral components of
common width sigma (:class:`GaussianState`), and broadband source emission
is kept on an explicit frequency grid (:class:`SpectralPacket`).

All state values are immutable; every operation here is a pure function,
so states can be freely shared across threads.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import BasisMismatchError, InvalidStateError, NormalizationError

TWO_PI = 2.0 * math.pi

# Unit-norm tolerances: exact algebra for the two-level states, quadrature
# accuracy for finite-linewidth states.
NORM_TOL_MONO = 1e-12
NORM_TOL_QUAD = 1e-9

# Gaussian tails beyond 8 sigma are below 1e-14; integrating further adds noise.
GAUSS_SUPPORT_SIGMAS = 8.0

_DEKKER_SPLIT = 134217729.0  # 2**27 + 1


def _two_product(a: float, b: float) -> tuple[float, float]:
    """a*b as (rounded product, exact rounding error) via Dekker splitting."""
    p = a * b
    ah = a * _DEKKER_SPLIT
    ah = ah - (ah - a)
    al = a - ah
    bh = b * _DEKKER_SPLIT
    bh = bh - (bh - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def beat_phase(delta_omega: float, dt: float) -> float:
    """delta_omega * dt reduced modulo 2*pi without losing the product's low bits.

    Plain ``delta_omega * dt`` commits a rounding error proportional to the
    (possibly enormous) full phase; the compensated product keeps the
    relative beat phase accurate to ~1e-10 rad over a million periods, which
    the phase-periodicity contract requires.
    """
    p, err = _two_product(delta_omega, dt)
    return math.remainder(p, TWO_PI) + err


def _component_phases(omega0: float, omega1: float, dt: float) -> tuple[complex, complex]:
    """(exp(-i*omega0*dt), exp(-i*omega1*dt)) with an accurate relative phase.

    The overall phase of component 0 is physically a global phase, so its
    own rounding is harmless; component 1 is built as that global factor
    times the compensated beat phase, keeping the observable relative phase
    tight.
    """
    g0 = cmath.exp(-1j * math.remainder(omega0 * dt, TWO_PI))
    g1 = g0 * cmath.exp(-1j * beat_phase(omega1 - omega0, dt))
    return g0, g1


@dataclass(frozen=True)
class FrequencyQubit:
    """Monochromatic two-component photon state.

    ``f0``/``f1`` are the stored complex amplitudes on the basis components
    at ``omega0``/``omega1``.  For a control state prepared at time ``t0``
    the stored amplitudes carry the preparation phases ``exp(-i*omega_k*t0)``
    on top of the bare preparation amplitudes.
    """

    f0: complex
    f1: complex
    omega0: float
    omega1: float
    t0: float = 0.0

    def __post_init__(self):
        if self.omega0 == self.omega1:
            raise InvalidStateError("basis frequencies must differ")
        norm_sq = abs(self.f0) ** 2 + abs(self.f1) ** 2
        if abs(norm_sq - 1.0) > NORM_TOL_MONO:
            raise NormalizationError(
                f"|f0|^2 + |f1|^2 = {norm_sq!r}, expected 1 within {NORM_TOL_MONO}"
            )

    @property
    def delta_omega(self) -> float:
        """Signed beat frequency omega1 - omega0 (rad/s)."""
        return self.omega1 - self.omega0

    @property
    def period(self) -> float:
        """Beat period T = 2*pi / |omega1 - omega0| (s)."""
        return TWO_PI / abs(self.delta_omega)

    @property
    def norm_squared(self) -> float:
        return abs(self.f0) ** 2 + abs(self.f1) ** 2

    def pattern_amplitudes(self) -> tuple[complex, complex]:
        """Amplitudes with the preparation phase ramp removed.

        The arrival-time pattern of the state is
        ``|b0*exp(-i*omega0*u) + b1*exp(-i*omega1*u)|^2`` with
        ``u = t - t0`` and ``(b0, b1)`` the values returned here.  The strip
        factors are recomputed with the same compensated decomposition the
        constructors use, so the preparation ramp cancels bit-for-bit even
        when ``omega_k * t0`` is astronomically large.
        """
        g0, g1 = _component_phases(self.omega0, self.omega1, self.t0)
        return self.f0 * g0.conjugate(), self.f1 * g1.conjugate()


def make_info_state(bit: int, omega0: float, omega1: float, t0: float = 0.0) -> FrequencyQubit:
    """Information state for logic ``bit``: all amplitude on one basis component.

    Information states are stationary; ``t0`` only tags the emission slot and
    never influences any statistic.
    """
    if bit not in (0, 1):
        raise InvalidStateError(f"bit must be 0 or 1, got {bit!r}")
    if omega0 == omega1:
        raise InvalidStateError("basis frequencies must differ")
    if bit == 0:
        return FrequencyQubit(1.0 + 0.0j, 0.0 + 0.0j, omega0, omega1, t0)
    return FrequencyQubit(0.0 + 0.0j, 1.0 + 0.0j, omega0, omega1, t0)


def make_control_state(
    f0: complex, f1: complex, t0: float, omega0: float, omega1: float
) -> FrequencyQubit:
    """Control state with bare amplitudes (f0, f1) prepared at time t0.

    The stored amplitudes are ``f_k * exp(-i*omega_k*t0)``.  Non-normalized
    input is rejected rather than silently renormalized so construction bugs
    surface in tests.
    """
    norm_sq = abs(f0) ** 2 + abs(f1) ** 2
    if abs(norm_sq - 1.0) > 1e-9:
        raise NormalizationError(
            f"|f0|^2 + |f1|^2 = {norm_sq!r}, expected 1 within 1e-9 (no silent renormalize)"
        )
    # Renormalize the residual (< 1e-9) so downstream exact-tolerance checks hold.
    scale = 1.0 / math.sqrt(norm_sq)
    g0, g1 = _component_phases(omega0, omega1, t0)
    return FrequencyQubit(f0 * scale * g0, f1 * scale * g1, omega0, omega1, t0)


def evolve(state: FrequencyQubit, t: float) -> FrequencyQubit:
    """Free evolution of the state representation to reference time ``t`` >= t0.

    Each amplitude picks up ``exp(-i*omega_k*(t - t0))``; the norm is
    preserved exactly and information states change only by a global phase.
    """
    dt = t - state.t0
    if dt == 0.0:
        return state
    g0, g1 = _component_phases(state.omega0, state.omega1, dt)
    return FrequencyQubit(state.f0 * g0, state.f1 * g1, state.omega0, state.omega1, t)


def inner_product(a: FrequencyQubit, b: FrequencyQubit) -> complex:
    """Hilbert-space inner product <a|b>, conjugate-linear in the first slot."""
    if (a.omega0, a.omega1) != (b.omega0, b.omega1):
        raise BasisMismatchError(
            f"basis mismatch: ({a.omega0}, {a.omega1}) vs ({b.omega0}, {b.omega1})"
        )
    return a.f0.conjugate() * b.f0 + a.f1.conjugate() * b.f1


@dataclass(frozen=True)
class GaussianState:
    """Finite-linewidth state: one or two Gaussian spectral components.

    The spectral amplitude is ``norm * sum_i w_i * g_i(omega)`` with
    ``g_i(omega) = (2*pi*sigma^2)^(-1/4) * exp(-(omega - c_i)^2 / (4*sigma^2))``.
    ``components`` holds the ``(center, weight)`` pairs with bare weights;
    the emission time ``t0`` anchors the arrival-time envelope, and ``delay``
    accumulates propagation delay (length/c) applied by the channel.
    """

    components: tuple[tuple[float, complex], ...]
    sigma: float
    t0: float = 0.0
    norm: float = 1.0
    delay: float = 0.0

    @property
    def centers(self) -> tuple[float, ...]:
        return tuple(c for c, _ in self.components)

    @property
    def weights(self) -> tuple[complex, ...]:
        return tuple(w for _, w in self.components)

    @property
    def support(self) -> tuple[float, float]:
        """Frequency interval [min center - 8 sigma, max center + 8 sigma]."""
        lo = min(self.centers) - GAUSS_SUPPORT_SIGMAS * self.sigma
        hi = max(self.centers) + GAUSS_SUPPORT_SIGMAS * self.sigma
        return lo, hi

    def spectral_amplitude(self, omega):
        """Normalized spectral amplitude f(omega); accepts scalars or arrays."""
        omega = np.asarray(omega, dtype=float)
        prefac = (TWO_PI * self.sigma**2) ** -0.25
        out = np.zeros(omega.shape, dtype=complex)
        for center, weight in self.components:
            out = out + weight * prefac * np.exp(-((omega - center) ** 2) / (4.0 * self.sigma**2))
        return self.norm * out


def make_gaussian_state(
    components, sigma: float, t0: float = 0.0
) -> GaussianState:
    """Build a normalized Gaussian spectral state.

    The normalization factor is obtained by adaptive quadrature of
    ``|f(omega)|^2`` over the support, never from a closed-form overlap
    expression, so it is correct for any component separation.
    """
    comps = tuple((float(c), complex(w)) for c, w in components)
    if not 1 <= len(comps) <= 2:
        raise InvalidStateError(f"need 1 or 2 spectral components, got {len(comps)}")
    if sigma <= 0:
        raise InvalidStateError(f"sigma must be positive, got {sigma!r}")
    if any(w == 0 for _, w in comps):
        raise InvalidStateError("zero component weights are not allowed")

    raw = GaussianState(components=comps, sigma=float(sigma), t0=float(t0), norm=1.0)
    lo, hi = raw.support
    total = integrate_spectral_density(raw, lo, hi)
    if total <= 0:
        raise InvalidStateError("spectral density integrates to zero")
    return GaussianState(
        components=comps, sigma=float(sigma), t0=float(t0), norm=1.0 / math.sqrt(total)
    )


def integrate_spectral_density(state: GaussianState, lo: float, hi: float) -> float:
    """Adaptive quadrature of |f(omega)|^2 over [lo, hi].

    Evaluated entirely in the scaled coordinate x = (omega - mid)/sigma with
    component offsets computed once, so the integrand never mixes the
    absolute optical frequency scale (~1e15) with narrow feature widths;
    that keeps the quadrature roundoff-clean down to 1e-12.
    """
    if hi <= lo:
        return 0.0
    mid = 0.5 * (min(state.centers) + max(state.centers))
    s = state.sigma
    offsets = [(c - mid) / s for c in state.centers]
    weights = list(state.weights)
    prefactor = state.norm**2 / math.sqrt(TWO_PI)  # sigma cancels against dx scaling

    def integrand(x):
        amp = 0.0 + 0.0j
        for w_i, d_i in zip(weights, offsets):
            amp += w_i * cmath.exp(-((x - d_i) ** 2) / 4.0)
        return abs(amp) ** 2

    a, b = (lo - mid) / s, (hi - mid) / s
    pts = []
    for d_i in offsets:
        for p in (d_i - 4.0, d_i, d_i + 4.0):
            if a < p < b:
                pts.append(p)
    val, _ = quad(integrand, a, b, epsabs=1e-13, epsrel=1e-12, limit=400,
                  points=sorted(set(pts)))
    return float(prefactor * val)


@dataclass(frozen=True)
class SpectralPacket:
    """Broadband single-photon packet on a uniform frequency grid.

    ``omegas`` are the grid frequencies (rad/s, uniformly spaced) and
    ``amplitudes`` the complex amplitudes f_k; a normalized packet has
    ``sum |f_k|^2 = 1``.
    """

    omegas: np.ndarray
    amplitudes: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        omegas = np.asarray(self.omegas, dtype=float)
        amps = np.asarray(self.amplitudes, dtype=complex)
        if omegas.ndim != 1 or omegas.shape != amps.shape:
            raise InvalidStateError("omegas and amplitudes must be matching 1-d arrays")
        if omegas.size < 2:
            raise InvalidStateError("packet grid needs at least two points")
        steps = np.diff(omegas)
        if not np.all(steps > 0):
            raise InvalidStateError("frequency grid must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise InvalidStateError("frequency grid must be uniform")
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def grid_step(self) -> float:
        return float(self.omegas[1] - self.omegas[0])

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amplitudes) ** 2))

    @property
    def grid(self):
        """Ordered (omega_k, f_k) pairs, mainly for inspection."""
        return list(zip(self.omegas.tolist(), self.amplitudes.tolist()))


@dataclass(frozen=True)
class QubitBatch:
    """Columnar bundle of monochromatic states for whole-session processing.

    ``b0``/``b1`` hold pattern-frame amplitudes (preparation ramp removed,
    global phase dropped) so no astronomically large phases ever enter the
    arithmetic; ``t0`` holds the per-slot pattern anchors.
    """

    omega0: float
    omega1: float
    b0: np.ndarray
    b1: np.ndarray
    t0: np.ndarray

    @property
    def delta_omega(self) -> float:
        return self.omega1 - self.omega0

    @property
    def period(self) -> float:
        return TWO_PI / abs(self.omega1 - self.omega0)

    @property
    def n(self) -> int:
        return self.b0.shape[0]

    def prob0(self) -> np.ndarray:
        s = np.abs(self.b0) ** 2 + np.abs(self.b1) ** 2
        return np.abs(self.b0) ** 2 / s

    def prob1(self) -> np.ndarray:
        s = np.abs(self.b0) ** 2 + np.abs(self.b1) ** 2
        return np.abs(self.b1) ** 2 / s
