"""Command-line front end.

Subcommands:

* ``simulate`` -- run one clean session; writes transcript.csv,
  summary.json and report.png.
* ``attack``   -- run one session with a built-in eavesdropping strategy;
  writes summary.json and report.png.  Exits 4 when an active attack is
  *not* detected (a detection-power failure, not a crash).
* ``curves``   -- emit the analytic arrival-time densities on a dense grid;
  writes curves.csv and curves.png.
* ``selftest`` -- quick built-in sanity checks.

Exit codes: 0 ok, 2 configuration error, 3 timing-regime violation,
4 detection-power failure.  The FREQKEY_OUT environment variable overrides
the --out directory.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .adversary import strategy_from_name
from .config import ConfigSource, load_config
from .errors import ConfigurationError, FreqKeyError
from .protocol import SessionConfig
from .reports import (
    RunSummary,
    compute_curves,
    write_curves_csv,
    write_summary_json,
    write_transcript_csv,
)
from .source import hard_regime_violation, timing_regime_check
from .stats import VERDICT_CLEAN, run_and_verify

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_REGIME = 3
EXIT_POWER = 4

OUT_ENV_VAR = "FREQKEY_OUT"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="freqkey",
        description="Frequency-coded single-photon key distribution simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", metavar="PATH", default=None,
                       help="JSON configuration file (defaults are built in)")
        p.add_argument("--seed", type=int, default=None, metavar="U64",
                       help="override the configured session seed")
        p.add_argument("--out", default=".", metavar="DIR",
                       help=f"output directory (overridden by ${OUT_ENV_VAR})")
        p.add_argument("--alpha", type=float, default=None,
                       help="override the per-test significance level")

    p_sim = sub.add_parser("simulate", help="run one clean session")
    add_common(p_sim)
    p_sim.add_argument("--repeat", type=int, default=1, metavar="N",
                       help="run N independent sessions with derived seeds in parallel")

    p_att = sub.add_parser("attack", help="run one session under an attack strategy")
    add_common(p_att)
    p_att.add_argument("--strategy", default="intercept-freq",
                       help="none | intercept-freq | intercept-time | blind-resend")
    p_att.add_argument("--repeat", type=int, default=1, metavar="N")

    p_cur = sub.add_parser("curves", help="emit the analytic densities as CSV + figure")
    add_common(p_cur)

    p_self = sub.add_parser("selftest", help="quick built-in sanity checks")
    add_common(p_self)
    return parser


def _resolve_out(args) -> Path:
    out = os.environ.get(OUT_ENV_VAR) or args.out
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _load(args) -> tuple[SessionConfig, ConfigSource]:
    return load_config(args.config, seed_override=args.seed, alpha_override=args.alpha)


def _check_regime(config: SessionConfig) -> int:
    checks = timing_regime_check(
        config.source, config.detector.tau_det, abs(config.delta_omega)
    )
    for c in checks:
        status = "ok" if c.satisfied else "MARGINAL" if c.ratio <= 1.0 else "VIOLATED"
        print(f"regime {c.name}: ratio {c.ratio:.3g} [{status}]")
    if hard_regime_violation(checks):
        print("error: timing-regime ordering is inverted; refusing to simulate",
              file=sys.stderr)
        return EXIT_REGIME
    return EXIT_OK


def _single_run(config: SessionConfig, source: ConfigSource, strategy_name: str,
                out_dir: Path, command: str, write_transcript: bool) -> int:
    t_start = time.perf_counter()
    adversary = strategy_from_name(strategy_name)
    transcript, grouped, report, alice_key, bob_key = run_and_verify(config, adversary)

    if write_transcript:
        write_transcript_csv(transcript, out_dir / "transcript.csv")
    summary = RunSummary(
        command=command, strategy=strategy_name, seed=config.seed,
        config_source=source, config=config, transcript=transcript,
        report=report, alice_key=alice_key, bob_key=bob_key,
    )
    payload = write_summary_json(summary, out_dir / "summary.json")

    from .plotting import save_report_figure

    save_report_figure(transcript, grouped, report, config, out_dir / "report.png")

    wall = time.perf_counter() - t_start
    key = payload["key"]
    print(
        f"{command}: seed={config.seed} slots={config.n_slots} "
        f"key_len={key['length']} key_fraction={key['fraction']:.4f} "
        f"verdict={report.verdict} wall={wall:.2f}s -> {out_dir}"
    )
    if adversary is not None and report.verdict == VERDICT_CLEAN:
        print(f"warning: active attack {strategy_name!r} was NOT detected",
              file=sys.stderr)
        return EXIT_POWER
    return EXIT_OK


def _repeat_worker(payload):
    config_dict, path, file_sha, strategy_name, out_dir, command, write_transcript = payload
    from .config import config_from_dict

    config = config_from_dict(config_dict)
    source = ConfigSource(path=path, file_sha256=file_sha,
                          effective_sha256=config.sha256())
    return _single_run(config, source, strategy_name, Path(out_dir), command,
                       write_transcript)


def _run_command(args, command: str, strategy_name: str, write_transcript: bool) -> int:
    config, source = _load(args)
    code = _check_regime(config)
    if code != EXIT_OK:
        return code
    out_dir = _resolve_out(args)
    repeat = getattr(args, "repeat", 1)
    if repeat <= 1:
        return _single_run(config, source, strategy_name, out_dir, command,
                           write_transcript)

    jobs = []
    for i in range(repeat):
        cfg_dict = config.canonical_dict()
        cfg_dict["seed"] = config.seed + i
        sub = out_dir / f"run_{i:03d}"
        sub.mkdir(parents=True, exist_ok=True)
        jobs.append((cfg_dict, source.path, source.file_sha256, strategy_name,
                     str(sub), command, write_transcript))
    with ProcessPoolExecutor(max_workers=min(repeat, os.cpu_count() or 1)) as pool:
        codes = list(pool.map(_repeat_worker, jobs))
    return max(codes)


def cmd_simulate(args) -> int:
    return _run_command(args, "simulate", "none", write_transcript=True)


def cmd_attack(args) -> int:
    strategy_from_name(args.strategy)  # validate before any work
    return _run_command(args, "attack", args.strategy, write_transcript=False)


def cmd_curves(args) -> int:
    config, _source = _load(args)
    code = _check_regime(config)
    if code != EXIT_OK:
        return code
    out_dir = _resolve_out(args)
    curves = compute_curves(config)
    write_curves_csv(curves, out_dir / "curves.csv")

    from .plotting import save_curves_figure

    save_curves_figure(curves, out_dir / "curves.png")
    print(f"curves: {len(curves['t'])} grid points, period={config.period:.6e}s "
          f"-> {out_dir}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    """Fast end-to-end sanity checks; prints one line per check."""
    from scipy.integrate import quad

    from . import measurement
    from .states import make_control_state
    from .stats import ks_test

    config, source = _load(args)
    failures = 0

    def check(name, ok):
        nonlocal failures
        print(f"selftest {name}: {'PASS' if ok else 'FAIL'}")
        failures += 0 if ok else 1

    src = config.source
    state = make_control_state(*config.control_amplitudes, 0.0, src.omega0, src.omega1)
    integral, _ = quad(lambda t: float(measurement.time_density(state, t)),
                       0.0, state.period, limit=200)
    check("control density normalization", abs(integral - 1.0) < 1e-9)

    rng = np.random.default_rng(0)
    u = measurement.sample_arrival_offsets(state, 20000, rng, window=state.period)
    cdf = measurement.mono_time_cdf(state, window=state.period)
    ks = ks_test(u, cdf, alpha=0.01)
    check("arrival-time sampler", not ks.reject)

    from .protocol import run_session

    d1 = run_session(config_small(config, 500)).digest()
    d2 = run_session(config_small(config, 500)).digest()
    check("deterministic replay", d1 == d2)

    checks = timing_regime_check(src, config.detector.tau_det, abs(config.delta_omega))
    check("timing regime", not hard_regime_violation(checks))
    return EXIT_OK if failures == 0 else 1


def config_small(config: SessionConfig, n_slots: int) -> SessionConfig:
    """Copy of a config with a reduced slot count (selftest helper)."""
    from dataclasses import replace

    return replace(config, n_slots=n_slots)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": cmd_simulate,
        "attack": cmd_attack,
        "curves": cmd_curves,
        "selftest": cmd_selftest,
    }
    try:
        return handlers[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FreqKeyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
