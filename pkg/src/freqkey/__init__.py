"""freqkey: simulator and analysis toolkit for a frequency-coded
single-photon key distribution protocol.

The sender encodes logic values in which of two narrow spectral components
a single photon carries, plus a nonorthogonal control superposition whose
arrival-time statistics oscillate at the beat frequency; any
intercept-resend attack changes the receiver's outcome statistics, which a
Kolmogorov-style verification layer detects.
"""

from .adversary import (
    AttackStrategy,
    BlindResend,
    InterceptFreq,
    InterceptTime,
    intercept_freq,
    intercept_time,
    strategy_from_name,
)
from .channel import ChannelParams, apply_channel_phase, jitter_phase_budget, propagate
from .config import config_from_dict, default_config, load_config
from .errors import (
    BasisMismatchError,
    ConfigurationError,
    DegenerateFilterError,
    FreqKeyError,
    InvalidStateError,
    NormalizationError,
    RegimeViolationError,
)
from .measurement import (
    DetectionRecord,
    DetectorParams,
    MeasurementSetting,
    SettingKind,
    b92_test_probs,
    channel_time_density,
    gaussian_band_probability,
    gaussian_time_density,
    mean_photon_number,
    prob_frequency,
    sample_arrival_offsets,
    sample_outcome,
    time_density,
)
from .protocol import (
    GroupedView,
    SessionConfig,
    SiftedKey,
    Transcript,
    disclose_and_group,
    plan_session,
    run_session,
    sift,
)
from .source import (
    FilterMode,
    SourceParams,
    emit_packet,
    excite,
    filter_packet,
    timing_regime_check,
)
from .states import (
    FrequencyQubit,
    GaussianState,
    SpectralPacket,
    evolve,
    inner_product,
    make_control_state,
    make_gaussian_state,
    make_info_state,
)
from .stats import (
    DetectionReport,
    KsResult,
    ks_test,
    ratio_test,
    run_and_verify,
    verify_session,
)

__version__ = "0.1.0"

__all__ = [
    "AttackStrategy", "BlindResend", "InterceptFreq", "InterceptTime",
    "intercept_freq", "intercept_time", "strategy_from_name",
    "ChannelParams", "apply_channel_phase", "jitter_phase_budget", "propagate",
    "config_from_dict", "default_config", "load_config",
    "BasisMismatchError", "ConfigurationError", "DegenerateFilterError",
    "FreqKeyError", "InvalidStateError", "NormalizationError", "RegimeViolationError",
    "DetectionRecord", "DetectorParams", "MeasurementSetting", "SettingKind",
    "b92_test_probs", "channel_time_density", "gaussian_band_probability",
    "gaussian_time_density", "mean_photon_number", "prob_frequency",
    "sample_arrival_offsets", "sample_outcome", "time_density",
    "GroupedView", "SessionConfig", "SiftedKey", "Transcript",
    "disclose_and_group", "plan_session", "run_session", "sift",
    "FilterMode", "SourceParams", "emit_packet", "excite", "filter_packet",
    "timing_regime_check",
    "FrequencyQubit", "GaussianState", "SpectralPacket", "evolve",
    "inner_product", "make_control_state", "make_gaussian_state", "make_info_state",
    "DetectionReport", "KsResult", "ks_test", "ratio_test", "run_and_verify",
    "verify_session",
    "__version__",
]
