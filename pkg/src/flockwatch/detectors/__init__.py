from .circulation import (
    CirculationBucket,
    CirculationRecord,
    circulation_series,
    detect_circulations,
)
from .correlation import (
    SplitCorrelation,
    ancient_registry_stats,
    correlate_circulation_vs_effect,
)
from .gaps import GapEndFit, TimelineGap, detect_gaps, gap_end_correlation
from .params import YEAR_SECONDS, DetectorParams, load_params
from .stratigraphy import (
    InversionRegion,
    StratigraphyBatch,
    find_inversions,
    global_dominant,
    outside_dominant_share,
    stratify,
)
from .types import CountSeries, FollowerSample
from .waveforms import (
    ORGANIC_STEP,
    SAWTOOTH,
    SPIKE,
    InsufficientData,
    WaveformEvent,
    WaveformStats,
    detect_waveforms,
    summarize_waveforms,
)

__all__ = [
    "CirculationBucket",
    "CirculationRecord",
    "CountSeries",
    "DetectorParams",
    "FollowerSample",
    "GapEndFit",
    "InsufficientData",
    "InversionRegion",
    "ORGANIC_STEP",
    "SAWTOOTH",
    "SPIKE",
    "SplitCorrelation",
    "StratigraphyBatch",
    "TimelineGap",
    "WaveformEvent",
    "WaveformStats",
    "YEAR_SECONDS",
    "ancient_registry_stats",
    "circulation_series",
    "correlate_circulation_vs_effect",
    "detect_circulations",
    "detect_gaps",
    "detect_waveforms",
    "find_inversions",
    "gap_end_correlation",
    "global_dominant",
    "load_params",
    "outside_dominant_share",
    "stratify",
    "summarize_waveforms",
]
