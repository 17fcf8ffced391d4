"""Configuration ingestion: a single JSON document mirroring SessionConfig.

Unknown keys anywhere in the document are a hard error so a misspelled
physics parameter can never be silently ignored.  Missing keys fall back to
the documented defaults.  Complex amplitudes are written as [re, im] pairs
(bare reals are accepted on input).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

from .channel import ChannelParams
from .errors import ConfigurationError, FreqKeyError
from .measurement import DetectorParams
from .protocol import SessionConfig
from .source import SourceParams

INV_SQRT2 = 1.0 / math.sqrt(2.0)

DEFAULT_SEED = 20230815

# Default physical scales: carrier separation 1e8 rad/s (beat period
# ~6.28e-8 s), filter width 1e7 rad/s, packet width 1e10 rad/s, detector
# resolution 1e-9 s.  Both carriers are exactly representable so omega1 -
# omega0 is exactly 1e8.
DEFAULTS: dict = {
    "n_slots": 20000,
    "seed": DEFAULT_SEED,
    "alice_probs": [1 / 3, 1 / 3, 1 / 3],
    "bob_probs": [1 / 3, 1 / 3, 1 / 3],
    "control_amplitudes": [[INV_SQRT2, 0.0], [INV_SQRT2, 0.0]],
    "info_disclosure_fraction": 0.25,
    "alpha": 0.01,
    "state_model": "monochromatic",
    "heralding": False,
    "exact_omega_prefactors": False,
    "source": {
        "tau_pi": 1e-12,
        "tau_r": 1e-10,
        "sigma": 1e7,
        "omega0": 1.0e15,
        "omega1": 1.0000001e15,
        "delta_omega_spectrum": 1e10,
        "spectrum": "lorentzian",
    },
    "channel": {
        "length_m": 0.0,
        "c": 2.998e8,
        "delta_l_sigma": 0.0,
        "transmittance": 1.0,
        "visibility": 1.0,
        "jitter_mode": "per_slot",
    },
    "detector": {
        "tau_det": 1e-9,
        "window": None,  # None -> ten beat periods
        "dark_rate": 0.0,
    },
}


@dataclass(frozen=True)
class ConfigSource:
    """Where a session configuration came from, for summary provenance.

    ``file_sha256`` hashes the raw input file bytes (None when running from
    built-in defaults); ``effective_sha256`` hashes the canonical form after
    command-line overrides and therefore always matches the echoed config.
    """

    path: str | None
    file_sha256: str | None
    effective_sha256: str


def _merge_section(name: str, defaults: dict, given: dict) -> dict:
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigurationError(
            f"unknown config key(s) in {name}: {', '.join(sorted(unknown))}"
        )
    merged = dict(defaults)
    merged.update(given)
    return merged


def _as_complex(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(float(value), 0.0)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigurationError(f"{where} must be a real number or an [re, im] pair")


def _as_probs(value, where: str) -> tuple[float, float, float]:
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigurationError(f"{where} must be a list of three probabilities")
    return tuple(float(v) for v in value)


def config_from_dict(raw: dict) -> SessionConfig:
    """Build a validated SessionConfig from a (possibly partial) plain dict."""
    if not isinstance(raw, dict):
        raise ConfigurationError("configuration document must be a JSON object")
    top = _merge_section("the top level", DEFAULTS, raw)
    src_d = _merge_section("source", DEFAULTS["source"], top["source"] or {})
    ch_d = _merge_section("channel", DEFAULTS["channel"], top["channel"] or {})
    det_d = _merge_section("detector", DEFAULTS["detector"], top["detector"] or {})

    try:
        source = SourceParams(
            tau_pi=float(src_d["tau_pi"]),
            tau_r=float(src_d["tau_r"]),
            sigma=float(src_d["sigma"]),
            omega0=float(src_d["omega0"]),
            omega1=float(src_d["omega1"]),
            delta_omega_spectrum=(
                None if src_d["delta_omega_spectrum"] is None
                else float(src_d["delta_omega_spectrum"])
            ),
            spectrum=str(src_d["spectrum"]),
        )
        channel = ChannelParams(
            length_m=float(ch_d["length_m"]),
            c=float(ch_d["c"]),
            delta_l_sigma=float(ch_d["delta_l_sigma"]),
            transmittance=float(ch_d["transmittance"]),
            visibility=float(ch_d["visibility"]),
            jitter_mode=str(ch_d["jitter_mode"]),
        )
        window = det_d["window"]
        if window is None:
            window = 10.0 * (2.0 * math.pi / abs(source.omega1 - source.omega0))
        detector = DetectorParams(
            tau_det=float(det_d["tau_det"]),
            window=float(window),
            dark_rate=float(det_d["dark_rate"]),
        )
        amps = top["control_amplitudes"]
        if not isinstance(amps, (list, tuple)) or len(amps) != 2:
            raise ConfigurationError("control_amplitudes must hold two amplitudes")
        f0 = _as_complex(amps[0], "control_amplitudes[0]")
        f1 = _as_complex(amps[1], "control_amplitudes[1]")
        return SessionConfig(
            n_slots=int(top["n_slots"]),
            seed=int(top["seed"]),
            source=source,
            channel=channel,
            detector=detector,
            alice_probs=_as_probs(top["alice_probs"], "alice_probs"),
            bob_probs=_as_probs(top["bob_probs"], "bob_probs"),
            control_amplitudes=(f0, f1),
            info_disclosure_fraction=float(top["info_disclosure_fraction"]),
            alpha=float(top["alpha"]),
            state_model=str(top["state_model"]),
            heralding=bool(top["heralding"]),
            exact_omega_prefactors=bool(top["exact_omega_prefactors"]),
        )
    except ConfigurationError:
        raise
    except FreqKeyError as exc:
        raise ConfigurationError(str(exc)) from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"malformed configuration value: {exc}") from exc


def default_config() -> SessionConfig:
    return config_from_dict({})


def load_config(
    path: str | None,
    seed_override: int | None = None,
    alpha_override: float | None = None,
) -> tuple[SessionConfig, ConfigSource]:
    """Load a config file (or the defaults) and apply CLI overrides."""
    raw: dict = {}
    file_sha = None
    if path is not None:
        try:
            with open(path, "rb") as fh:
                blob = fh.read()
        except OSError as exc:
            raise ConfigurationError(f"cannot read config file {path!r}: {exc}") from exc
        file_sha = hashlib.sha256(blob).hexdigest()
        try:
            raw = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if seed_override is not None:
        raw = dict(raw)
        raw["seed"] = int(seed_override)
    if alpha_override is not None:
        raw = dict(raw)
        raw["alpha"] = float(alpha_override)
    config = config_from_dict(raw)
    return config, ConfigSource(path=path, file_sha256=file_sha,
                                effective_sha256=config.sha256())
