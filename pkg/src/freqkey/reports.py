"""Artifact emission: transcript CSV, run summary JSON, analytic curve grids.

All time values are written in scientific notation with 17 significant
digits so they round-trip exactly through text; summaries are serialized
with sorted keys so identical runs produce byte-identical files.  Wall
clock goes to the console, never into the summary file, to keep the files
reproducible.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .adversary import ATTACK_LABELS
from .channel import apply_channel_phase
from .config import ConfigSource
from .measurement import channel_time_density, gaussian_time_density, time_density
from .protocol import (
    CHOICE_LABELS,
    SETTING_LABELS,
    SessionConfig,
    SiftedKey,
    Transcript,
)
from .states import make_control_state, make_gaussian_state, make_info_state
from .stats import DetectionReport

SCHEMA_VERSION = 1

CURVE_POINTS = 10000

TRANSCRIPT_COLUMNS = [
    "slot", "alice_choice", "attack", "lost", "bob_setting", "clicked",
    "click_time_s", "bit_alice", "bit_bob", "disclosed", "in_key",
]


def fmt_time(value: float) -> str:
    """Seconds with 17 significant digits (exact float64 round trip)."""
    return f"{value:.16e}"


def write_transcript_csv(transcript: Transcript, path) -> None:
    """One row per slot; empty cells for absent values."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRANSCRIPT_COLUMNS)
        for i in range(transcript.n_slots):
            ct = transcript.click_time[i]
            ba = transcript.bit_alice[i]
            bb = transcript.bit_bob[i]
            writer.writerow([
                i,
                CHOICE_LABELS[int(transcript.alice_choice[i])],
                ATTACK_LABELS[int(transcript.attack[i])],
                int(transcript.lost[i]),
                SETTING_LABELS[int(transcript.bob_setting[i])],
                int(transcript.clicked[i]),
                fmt_time(ct) if np.isfinite(ct) else "",
                int(ba) if ba >= 0 else "",
                int(bb) if bb >= 0 else "",
                int(transcript.disclosed[i]),
                int(transcript.in_key[i]),
            ])


@dataclass
class RunSummary:
    """Deterministic numeric summary of one run."""

    command: str
    strategy: str
    seed: int
    config_source: ConfigSource
    config: SessionConfig
    transcript: Transcript
    report: DetectionReport
    alice_key: SiftedKey
    bob_key: SiftedKey

    def to_dict(self) -> dict:
        t = self.transcript
        n = t.n_slots
        key_len = len(self.alice_key)
        mismatches = int(np.sum(self.alice_key.bits != self.bob_key.bits)) if key_len else 0
        return {
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "strategy": self.strategy,
            "seed": self.seed,
            "config_path": self.config_source.path,
            "config_file_sha256": self.config_source.file_sha256,
            "config_sha256": self.config_source.effective_sha256,
            "config": self.config.canonical_dict(),
            "counts": {
                "n_slots": n,
                "lost": int(t.lost.sum()),
                "clicked": int(t.clicked.sum()),
                "disclosed": int(t.disclosed.sum()),
            },
            "key": {
                "length": key_len,
                "fraction": key_len / n,
                "mismatches": mismatches,
                "match_rate": 1.0 - mismatches / key_len if key_len else None,
            },
            "detection": self.report.to_dict(),
            "transcript_sha256": t.digest(),
        }


def write_summary_json(summary: RunSummary, path) -> dict:
    payload = summary.to_dict()
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return payload


def compute_curves(config: SessionConfig, n_points: int = CURVE_POINTS) -> dict:
    """Evaluate the four analytic arrival-time densities on a shared grid.

    Columns: the flat information-state density and the oscillating
    control-state density of the two-level model (channel phases applied),
    plus their finite-linewidth counterparts (Gaussian envelope and
    envelope-times-fringe).  The grid spans the Gaussian arrival envelope
    so it covers many beat periods.
    """
    src = config.source
    ch = config.channel
    f0, f1 = config.control_amplitudes
    delay = ch.length_m / ch.c
    half_span = 8.0 / src.sigma
    t = np.linspace(delay - half_span, delay + half_span, n_points)

    info = make_info_state(0, src.omega0, src.omega1)
    control = make_control_state(f0, f1, 0.0, src.omega0, src.omega1)
    p_info = np.broadcast_to(
        channel_time_density(info, 0.0, ch.length_m, visibility=ch.visibility, c=ch.c),
        t.shape,
    ).copy()
    p_control = channel_time_density(
        control, t, ch.length_m, visibility=ch.visibility,
        exact_omega_prefactors=config.exact_omega_prefactors, c=ch.c,
    )

    g_info = make_gaussian_state([(src.omega0, 1.0)], src.sigma)
    g_control = make_gaussian_state([(src.omega0, f0), (src.omega1, f1)], src.sigma)
    p_g_info = gaussian_time_density(g_info, t, ch.length_m, visibility=ch.visibility, c=ch.c)
    p_g_control = gaussian_time_density(
        g_control, t, ch.length_m, visibility=ch.visibility, c=ch.c
    )

    return {
        "t": t,
        "p_info": p_info,
        "p_control": np.asarray(p_control),
        "p_gauss_info": np.asarray(p_g_info),
        "p_gauss_control": np.asarray(p_g_control),
        "period": config.period,
    }


def write_curves_csv(curves: dict, path) -> None:
    cols = ["t", "p_info", "p_control", "p_gauss_info", "p_gauss_control"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(cols)
        for row in zip(*(curves[c] for c in cols)):
            writer.writerow([fmt_time(v) for v in row])
