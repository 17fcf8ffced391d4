"""Figure rendering for the report artifacts.

Every command that writes delimited output also renders a matplotlib
figure next to it: the curves command plots the analytic densities, the
session commands plot the disclosed control-slot click-time histogram
against the theoretical beat pattern together with the per-test verdict
panel.  Rendering always uses the Agg backend so it works headless.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .protocol import CHOICE_CONTROL, SETTING_EDT, GroupedView, SessionConfig, Transcript
from .stats import DetectionReport, _reference_time_cdf

DPI = 150


def save_curves_figure(curves: dict, path) -> None:
    """Two panels: two-level beat densities and finite-linewidth envelopes."""
    t = curves["t"]
    fig, (ax_mono, ax_gauss) = plt.subplots(2, 1, figsize=(8, 6), sharex=True)

    period = curves["period"]
    center = 0.5 * (t[0] + t[-1])
    zoom = (t >= center - 3 * period) & (t <= center + 3 * period)
    ax_mono.plot(t[zoom], curves["p_control"][zoom], label="control", lw=1.2)
    ax_mono.plot(t[zoom], curves["p_info"][zoom], label="information", lw=1.2, ls="--")
    ax_mono.set_ylabel("density (1/s)")
    ax_mono.set_title("Two-level arrival-time densities (3 beat periods)")
    ax_mono.legend(loc="upper right", fontsize=8)

    ax_gauss.plot(t, curves["p_gauss_control"], label="control", lw=0.8)
    ax_gauss.plot(t, curves["p_gauss_info"], label="information", lw=1.2, ls="--")
    ax_gauss.set_xlabel("time (s)")
    ax_gauss.set_ylabel("density (1/s)")
    ax_gauss.set_title("Finite-linewidth arrival-time densities")
    ax_gauss.legend(loc="upper right", fontsize=8)

    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def save_report_figure(
    transcript: Transcript,
    grouped: GroupedView,
    report: DetectionReport,
    config: SessionConfig,
    path,
) -> None:
    """Control-slot click-time histogram with theory overlay, plus verdicts."""
    fig, (ax_hist, ax_tests) = plt.subplots(
        2, 1, figsize=(8, 6), gridspec_kw={"height_ratios": [3, 2]}
    )

    idx = grouped.cell(CHOICE_CONTROL, SETTING_EDT)
    idx = idx[transcript.clicked[idx]]
    u = transcript.click_time[idx] - transcript.slot_starts(idx)
    if u.size:
        period = transcript.period
        folded = np.mod(u, period)
        bins = max(10, int(round(period / config.detector.tau_det)))
        ax_hist.hist(folded, bins=bins, range=(0.0, period), density=True,
                     alpha=0.6, label=f"clicks (n={u.size})")
        cdf = _reference_time_cdf(config, CHOICE_CONTROL)
        grid = np.linspace(0.0, period, 600)
        m = max(1, int(round(transcript.window / period)))
        dens = np.gradient(cdf(grid), grid) * m  # fold the window CDF to one period
        ax_hist.plot(grid, dens, "k-", lw=1.2, label="theory")
        ax_hist.legend(loc="upper right", fontsize=8)
    else:
        ax_hist.text(0.5, 0.5, "no control-slot time clicks",
                     ha="center", va="center", transform=ax_hist.transAxes)
    ax_hist.set_xlabel("click time mod beat period (s)")
    ax_hist.set_ylabel("density (1/s)")
    ax_hist.set_title(f"Control-slot arrival times -- verdict: {report.verdict}")

    names = [c.name for c in report.components]
    colors = ["#c0392b" if c.reject else ("#95a5a6" if c.inconclusive else "#27ae60")
              for c in report.components]
    status = [("reject" if c.reject else ("n/a" if c.inconclusive else "pass"))
              for c in report.components]
    y = np.arange(len(names))
    ax_tests.barh(y, [1.0] * len(names), color=colors, alpha=0.8)
    for yi, s in zip(y, status):
        ax_tests.text(0.5, yi, s, ha="center", va="center", fontsize=9, color="white")
    ax_tests.set_yticks(y)
    ax_tests.set_yticklabels(names, fontsize=8)
    ax_tests.set_xticks([])
    ax_tests.set_xlim(0, 1)
    ax_tests.invert_yaxis()
    ax_tests.set_title("Per-group checks", fontsize=10)

    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
