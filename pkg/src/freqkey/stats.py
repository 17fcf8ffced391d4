"""Statistical verification: distribution tests and the tamper decision.

The receiver checks the disclosed slots group by group:

* control slots measured in time: one-sample sup-distance test of the click
  times against the theoretical beat-pattern CDF,
* control slots measured in frequency: exact binomial test of the E0:E1
  click ratio against |f0|^2 : |f1|^2,
* information slots with the matching projector: exact binomial test of the
  click rate against the configured channel efficiency,
* information slots with the opposite projector: a single click is already
  conclusive evidence of tampering (that outcome has probability zero for
  the ideal carriers),
* information slots measured in time: sup-distance test against the flat
  arrival density.

The per-group verdicts are OR-combined: any rejection flags the session,
which is deliberately conservative toward declaring eavesdropping.

The sup-distance critical value follows the asymptotic Kolmogorov series
with the standard finite-sample scaling sqrt(n) + 0.12 + 0.11/sqrt(n).
Click times are detector-quantized, so their theoretical CDF is evaluated
at bin upper edges; with ties the test is slightly conservative, never
anti-conservative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .channel import apply_channel_phase
from .errors import ConfigurationError
from .measurement import gaussian_time_cdf, gaussian_window, mono_time_cdf, whole_periods
from .protocol import (
    CHOICE_CONTROL,
    CHOICE_ONE,
    CHOICE_ZERO,
    SETTING_E0,
    SETTING_E1,
    SETTING_EDT,
    GroupedView,
    SessionConfig,
    Transcript,
    expected_detect_prob,
    _gaussian_templates,
)
from .states import make_control_state

VERDICT_CLEAN = "clean"
VERDICT_EAVESDROPPING = "eavesdropping"


def kolmogorov_sf(x: float) -> float:
    """Survival function of the Kolmogorov distribution, Q(x) = 2 sum (-1)^(k-1) exp(-2 k^2 x^2)."""
    if x <= 0:
        return 1.0
    total = 0.0
    sign = 1.0
    for k in range(1, 101):
        term = math.exp(-2.0 * (k * x) ** 2)
        total += sign * term
        if term < 1e-18:
            break
        sign = -sign
    return min(1.0, max(0.0, 2.0 * total))


def kolmogorov_quantile(alpha: float) -> float:
    """x such that Q(x) = alpha (e.g. 1.358 at alpha 0.05, 1.628 at 0.01)."""
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("alpha must lie in (0, 1)")
    lo, hi = 1e-6, 5.0
    while kolmogorov_sf(hi) > alpha:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if kolmogorov_sf(mid) > alpha:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ks_critical(alpha: float, n: int) -> float:
    """Critical sup-distance at level alpha for sample size n."""
    if n < 1:
        raise ConfigurationError("sample size must be at least 1")
    en = math.sqrt(n)
    return kolmogorov_quantile(alpha) / (en + 0.12 + 0.11 / en)


@dataclass(frozen=True)
class KsResult:
    """One-sample sup-distance test outcome; rejects iff d > critical."""

    n: int
    d_statistic: float
    critical: float
    alpha: float
    reject: bool


def ks_test(samples, theoretical_cdf, alpha: float = 0.01) -> KsResult:
    """One-sample sup-distance test of ``samples`` against ``theoretical_cdf``.

    The statistic is the larger of the two one-sided suprema of
    |empirical - theoretical| evaluated at the sample points.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ConfigurationError("cannot run a distribution test on an empty sample")
    cdf = np.asarray(theoretical_cdf(x), dtype=float)
    if np.any(cdf < -1e-12) or np.any(cdf > 1.0 + 1e-12):
        raise ConfigurationError("theoretical CDF must map the support into [0, 1]")
    i = np.arange(1, n + 1)
    d_plus = np.max(i / n - cdf)
    d_minus = np.max(cdf - (i - 1) / n)
    d = float(max(d_plus, d_minus))
    crit = ks_critical(alpha, n)
    return KsResult(n=n, d_statistic=d, critical=crit, alpha=alpha, reject=d > crit)


@dataclass(frozen=True)
class RatioResult:
    """Exact binomial test of a two-way click split; inconclusive when no data."""

    clicks0: int
    clicks1: int
    expected_p: float
    p_value: float | None
    alpha: float
    reject: bool
    inconclusive: bool


def ratio_test(clicks0: int, clicks1: int, expected_ratio: float, alpha: float = 0.01) -> RatioResult:
    """Two-sided exact binomial test of clicks0 against p = r / (1 + r).

    ``expected_ratio`` is the predicted clicks0:clicks1 ratio (|f0|^2/|f1|^2
    for the control state).  Zero totals are a legitimate no-data outcome,
    not an error.
    """
    if clicks0 < 0 or clicks1 < 0:
        raise ConfigurationError("click counts must be non-negative")
    if expected_ratio < 0:
        raise ConfigurationError("expected_ratio must be non-negative")
    total = clicks0 + clicks1
    if total == 0:
        return RatioResult(0, 0, expected_ratio / (1.0 + expected_ratio), None, alpha,
                           reject=False, inconclusive=True)
    p = expected_ratio / (1.0 + expected_ratio)
    pval = float(binomtest(clicks0, total, p, alternative="two-sided").pvalue)
    return RatioResult(clicks0, clicks1, p, pval, alpha,
                       reject=pval < alpha, inconclusive=False)


@dataclass(frozen=True)
class TestComponent:
    """One named check inside a detection report."""

    name: str
    kind: str  # "ks" | "binomial" | "impossible"
    n: int
    statistic: float | None
    threshold: float | None
    reject: bool
    inconclusive: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "n": self.n,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "reject": self.reject,
            "inconclusive": self.inconclusive,
            "detail": self.detail,
        }


@dataclass
class DetectionReport:
    """Verification outcome: per-group components and the OR-combined verdict."""

    components: list[TestComponent] = field(default_factory=list)
    alpha: float = 0.01

    @property
    def verdict(self) -> str:
        return VERDICT_EAVESDROPPING if any(c.reject for c in self.components) else VERDICT_CLEAN

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "verdict": self.verdict,
            "components": [c.to_dict() for c in self.components],
        }


def run_and_verify(config: SessionConfig, adversary=None):
    """Convenience pipeline: run, disclose, verify, sift.

    Returns ``(transcript, grouped, report, alice_key, bob_key)``.  The
    disclosure stream is the fifth child of the session seed, so the whole
    pipeline is deterministic for a given configuration.
    """
    from .protocol import derive_rngs, disclose_and_group, run_session, sift

    transcript = run_session(config, adversary)
    grouped = disclose_and_group(transcript, config, derive_rngs(config.seed).disclosure)
    report = verify_session(transcript, grouped, config)
    alice_key, bob_key = sift(transcript, grouped)
    return transcript, grouped, report, alice_key, bob_key


def _binned_cdf(cdf, tau_det: float):
    """Discrete CDF of detector-quantized samples: evaluate at bin upper edges.

    Quantized values sit at bin centers (j + 1/2) * tau_det; the probability
    of landing at or below that value is the continuous CDF at the bin's
    upper edge (j + 1) * tau_det.
    """

    def wrapped(u):
        u = np.asarray(u, dtype=float)
        edges = (np.floor(u / tau_det) + 1.0) * tau_det
        return np.clip(cdf(edges), 0.0, 1.0)

    return wrapped


def _folded_binned_test(u, window_cdf, tau_det: float, period: float, window: float,
                        alpha: float) -> KsResult:
    """Sup-distance test of quantized click offsets folded into one beat period.

    Folding concentrates the periodic pattern: over an m-period window the
    unfolded CDF deviation is diluted by 1/m, so the test is run on
    ``u mod period``.  Detector bins do not align with the beat period, so
    the folded theoretical distribution is built exactly: the window CDF
    gives each quantization bin its probability mass, and bins are re-sorted
    by their folded centers.  Samples fold onto those centers bit-for-bit
    because both sides use the same floating-point reduction.
    """
    u = np.asarray(u, dtype=float)
    n_bins = int(math.ceil(window / tau_det - 1e-9)) + 2  # margin for jitter spill
    edges = np.arange(n_bins + 1) * tau_det
    mass = np.diff(np.clip(window_cdf(edges), 0.0, 1.0))
    centers = (np.arange(n_bins) + 0.5) * tau_det
    folded_centers = np.mod(centers, period)
    order = np.argsort(folded_centers, kind="stable")
    sorted_centers = folded_centers[order]
    cum_mass = np.cumsum(mass[order])
    total = cum_mass[-1]
    if total <= 0:
        raise ConfigurationError("theoretical window CDF carries no probability mass")
    cum_mass /= total

    def folded_cdf(r):
        pos = np.searchsorted(sorted_centers, np.asarray(r, dtype=float), side="right")
        out = np.where(pos > 0, cum_mass[np.maximum(pos - 1, 0)], 0.0)
        return out

    return ks_test(np.mod(u, period), folded_cdf, alpha)


def _reference_time_cdf(config: SessionConfig, choice: int):
    """Theoretical click-time CDF (offsets from the slot start) for one group.

    Uses the precalibrated channel: nominal length, zero length jitter, the
    configured visibility.  The quadrature CDF from the measurement layer is
    the single source of truth here.
    """
    src = config.source
    ch = config.channel
    if config.state_model == "gaussian":
        template = _gaussian_templates(config)[choice]
        lo, hi = gaussian_window(template, config.window)
        lo += ch.length_m / ch.c
        hi += ch.length_m / ch.c
        return gaussian_time_cdf(template, lo, hi, length_m=ch.length_m,
                                 visibility=ch.visibility, c=ch.c)
    if choice != CHOICE_CONTROL:
        # Information arrival patterns are flat over the whole-period window.
        m = whole_periods(config.window, config.period)
        span = m * config.period

        def flat_cdf(u):
            return np.clip(np.asarray(u, dtype=float) / span, 0.0, 1.0)

        return flat_cdf
    f0, f1 = config.control_amplitudes
    ref = make_control_state(f0, f1, 0.0, src.omega0, src.omega1)
    ref = apply_channel_phase(ref, ch, 0.0)
    return mono_time_cdf(ref, config.window, visibility=ch.visibility)


def _click_offsets(transcript: Transcript, idx: np.ndarray) -> np.ndarray:
    sel = idx[transcript.clicked[idx]]
    return transcript.click_time[sel] - transcript.slot_starts(sel)


def verify_session(
    transcript: Transcript, grouped: GroupedView, config: SessionConfig
) -> DetectionReport:
    """Run every per-group check on the disclosed slots and combine verdicts.

    Groups with no usable events yield an inconclusive component (logged,
    never a rejection by itself).
    """
    alpha = config.alpha
    report = DetectionReport(alpha=alpha)
    h = config.detector.tau_det

    def time_shape_component(name: str, u: np.ndarray, choice: int, detail: str,
                             empty_detail: str) -> TestComponent:
        if not u.size:
            return TestComponent(name, "ks", 0, None, None, False, True,
                                 detail=empty_detail)
        window_cdf = _reference_time_cdf(config, choice)
        if config.state_model == "gaussian":
            # The Gaussian arrival pattern is not periodic; test unfolded.
            ks = ks_test(u, _binned_cdf(window_cdf, h), alpha)
        else:
            ks = _folded_binned_test(u, window_cdf, h, config.period,
                                     config.window, alpha)
        return TestComponent(name, "ks", ks.n, ks.d_statistic, ks.critical,
                             ks.reject, False, detail=detail)

    # Control / time-of-arrival: beat-pattern shape test.
    idx = grouped.cell(CHOICE_CONTROL, SETTING_EDT)
    report.components.append(time_shape_component(
        "control_time_shape", _click_offsets(transcript, idx), CHOICE_CONTROL,
        "click-time sup distance vs beat-pattern CDF",
        "no control-slot time clicks",
    ))

    # Control / frequency projectors: click-ratio test.
    f0, f1 = config.control_amplitudes
    k0 = int(transcript.clicked[grouped.cell(CHOICE_CONTROL, SETTING_E0)].sum())
    k1 = int(transcript.clicked[grouped.cell(CHOICE_CONTROL, SETTING_E1)].sum())
    expected_ratio = abs(f0) ** 2 / abs(f1) ** 2 if abs(f1) > 0 else math.inf
    if math.isinf(expected_ratio):
        ratio = RatioResult(k0, k1, 1.0, None, alpha, reject=k1 > 0, inconclusive=False)
        detail = "all control weight on component 0; any E1 click rejects"
    else:
        ratio = ratio_test(k0, k1, expected_ratio, alpha)
        detail = f"E0:E1 clicks {k0}:{k1} vs weight ratio {expected_ratio:.6g}"
    report.components.append(TestComponent(
        "control_frequency_ratio", "binomial", k0 + k1,
        ratio.p_value, alpha, ratio.reject, ratio.inconclusive, detail=detail,
    ))

    # Info / matching projector: click-rate test against the channel efficiency.
    match_idx = np.concatenate([
        grouped.cell(CHOICE_ZERO, SETTING_E0), grouped.cell(CHOICE_ONE, SETTING_E1)
    ])
    n_match = int(match_idx.size)
    if n_match:
        k_match = int(transcript.clicked[match_idx].sum())
        p_exp = expected_detect_prob(config, matching=True)
        if 0.0 < p_exp < 1.0:
            pval = float(binomtest(k_match, n_match, p_exp, alternative="two-sided").pvalue)
            reject = pval < alpha
        else:
            pval = None
            reject = (k_match != n_match) if p_exp >= 1.0 else (k_match != 0)
        report.components.append(TestComponent(
            "info_matching_rate", "binomial", n_match, pval, alpha, reject, False,
            detail=f"{k_match}/{n_match} clicks vs expected rate {p_exp:.6g}",
        ))
    else:
        report.components.append(TestComponent(
            "info_matching_rate", "binomial", 0, None, None, False, True,
            detail="no disclosed info slots with matching projector",
        ))

    # Info / opposite projector: the impossible outcome.
    opp_idx = np.concatenate([
        grouped.cell(CHOICE_ZERO, SETTING_E1), grouped.cell(CHOICE_ONE, SETTING_E0)
    ])
    k_opp = int(transcript.clicked[opp_idx].sum())
    report.components.append(TestComponent(
        "info_impossible_click", "impossible", int(opp_idx.size),
        float(k_opp), 0.0, k_opp > 0, opp_idx.size == 0,
        detail="a single opposite-projector click is conclusive",
    ))

    # Info / time-of-arrival: flat-pattern shape test.
    info_edt = np.concatenate([
        grouped.cell(CHOICE_ZERO, SETTING_EDT), grouped.cell(CHOICE_ONE, SETTING_EDT)
    ])
    report.components.append(time_shape_component(
        "info_time_shape", _click_offsets(transcript, info_edt), CHOICE_ZERO,
        "click-time sup distance vs flat arrival CDF",
        "no info-slot time clicks",
    ))

    return report
