"""Real-time vibrotactile feedback engine and analysis toolkit."""

from .dsp import (
    BiquadCascade,
    ChannelProcessor,
    ChannelStrip,
    CombineMode,
    FilterSpec,
    apply_gain,
    axis_combine,
    design_bandpass,
    filter_block,
    meter_rms,
)
from .fidelity import FidelityReport, aligned_r, fidelity_report, xcorr_lag
from .pipeline import (
    Ack,
    ChannelConfig,
    ControlMessage,
    Pipeline,
    PipelineConfig,
    SessionLog,
    SourceBinding,
    build,
)
from .placement import (
    EnergyRatioReport,
    LabeledRecording,
    SnrReport,
    actuator_report,
    ase,
    e_ratio,
    placement_report,
    rms3,
    snr,
)
from .signal_model import (
    DEFAULT_RATE,
    SampleBlock,
    TriAxisSeries,
    magnitude,
    slice_series,
)
from .synth import (
    ScenarioEvent,
    ScenarioScript,
    contact_transient,
    motion_noise,
    render_scenario,
    rotation_tone,
)
from .trial_metrics import Thresholds, TrialMetrics, gate, trial_report, zcr

__version__ = "0.1.0"
