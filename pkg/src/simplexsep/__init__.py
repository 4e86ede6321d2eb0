"""Blind speaker counting and separation via the correlation simplex.

The core idea: correlate per-frame feature vectors across time, read the
number of sources off the eigenvalue decay, embed frames with the leading
eigenvectors so they occupy a probability simplex, recover its vertices by
successive projection, and unmix with relative transfer functions estimated
on the frames each speaker dominates.
"""

from .errors import (
    DegenerateReferenceError,
    DegenerateSpectrumError,
    EmptyFrameSetError,
    EmptySelectionError,
    NonColaError,
    NumericalFailureError,
    PipelineStageError,
    RankDeficiencyError,
    SignalTooShortError,
    SimplexSepError,
    SingularVertexMatrixError,
    UnderdeterminedError,
)
from .features import (
    FeatureConfig,
    InstantaneousRtf,
    RtfObservationSet,
    assemble_features,
    instantaneous_rtf,
)
from .geometry import (
    DominatedFrameSets,
    RecoveredProbabilities,
    VertexSet,
    dominated_frames,
    find_vertices,
    recover_probabilities,
)
from .metrics import (
    MetricsReport,
    OracleSelection,
    compute_input_sir,
    ideal_rtf,
    semi_ideal_sets,
    sir_sdr,
)
from .mixture import (
    CorrelationVarianceReport,
    HiddenSourceSet,
    IndicatorTensor,
    ObservationSet,
    ProbabilityMatrix,
    correlation_variance_check,
    generate_hidden_sources,
    generate_observations,
    generate_probabilities,
    oracle_correlation,
)
from .separation import (
    PipelineConfig,
    RtfEstimate,
    SeparationResult,
    UnmixingOperator,
    build_unmixer,
    estimate_rtf,
    run_pipeline,
    separate,
    unmix_bins,
)
from .simulate import (
    RoomSpec,
    SimulatedScene,
    make_room_filters,
    random_scene,
    simulate_mixture,
    speech_like_signal,
)
from .spectral import (
    CorrelationMatrix,
    PerturbationReport,
    SimplexEmbedding,
    build_correlation,
    count_sources,
    embed,
    perturbation_check,
)
from .stft import Spectrogram, StftConfig, interior_slice, istft, stft

__version__ = "0.1.0"

__all__ = [
    "CorrelationMatrix",
    "CorrelationVarianceReport",
    "DegenerateReferenceError",
    "DegenerateSpectrumError",
    "DominatedFrameSets",
    "EmptyFrameSetError",
    "EmptySelectionError",
    "FeatureConfig",
    "HiddenSourceSet",
    "IndicatorTensor",
    "InstantaneousRtf",
    "MetricsReport",
    "NonColaError",
    "NumericalFailureError",
    "ObservationSet",
    "OracleSelection",
    "PerturbationReport",
    "PipelineConfig",
    "PipelineStageError",
    "ProbabilityMatrix",
    "RankDeficiencyError",
    "RecoveredProbabilities",
    "RoomSpec",
    "RtfEstimate",
    "RtfObservationSet",
    "SeparationResult",
    "SignalTooShortError",
    "SimplexEmbedding",
    "SimplexSepError",
    "SimulatedScene",
    "SingularVertexMatrixError",
    "Spectrogram",
    "StftConfig",
    "UnderdeterminedError",
    "UnmixingOperator",
    "VertexSet",
    "assemble_features",
    "build_correlation",
    "build_unmixer",
    "compute_input_sir",
    "correlation_variance_check",
    "count_sources",
    "dominated_frames",
    "embed",
    "estimate_rtf",
    "find_vertices",
    "generate_hidden_sources",
    "generate_observations",
    "generate_probabilities",
    "ideal_rtf",
    "instantaneous_rtf",
    "interior_slice",
    "istft",
    "make_room_filters",
    "oracle_correlation",
    "perturbation_check",
    "random_scene",
    "recover_probabilities",
    "run_pipeline",
    "semi_ideal_sets",
    "separate",
    "simulate_mixture",
    "sir_sdr",
    "speech_like_signal",
    "stft",
    "unmix_bins",
]
