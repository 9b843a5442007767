"""Detection of model-generated time series from uncertainty contraction.

The package pairs a synthetic ideal forecaster, whose internal
distributions reproduce a known trend + noise process, with a family of
white-box detectors: the uncertainty-contraction score (entropy, max
probability, or local variance over successive prefixes) and ten
adapted baselines, evaluated with exact AUROC and TPR at fixed FPR.
"""

from .detectors import (
    ALL_DETECTORS,
    DetectorScore,
    DetectorSettings,
    PerturbConfig,
    UceConfig,
    binocular,
    detect_gpt,
    dna_gpt_wscore,
    fast_detect_gpt,
    fourier_gpt,
    intrinsic_dimension,
    intrinsic_dimension_estimate,
    log_likelihood,
    log_rank_score,
    lrr,
    npr,
    perturb,
    rank_score,
    score_series,
    uce,
)
from .dump import DistributionDump, load_dump, read_dump, validate_dump, write_dump
from .errors import DumpFormatError, UnsupportedDetectorError, ValidationError
from .evaluation import (
    BenchmarkConfig,
    EvalReport,
    LabeledScores,
    TrajectoryConfig,
    TrajectoryReport,
    auroc,
    hypothesis_trajectories,
    run_benchmark,
    tpr_at_fpr,
)
from .forecaster import (
    ForecastModel,
    GenerationResult,
    Identity,
    ReplayModel,
    SymmetricTruncate,
    SyntheticIdealModel,
    Temperature,
    TopKMedian,
    apply_strategy,
    gamma_of,
    generate,
    replay_from_generation,
    strategy_gamma,
)
from .process import NoiseSpec, SeriesSample, TrendSpec, eva, sample_series, variance_sequence
from .vocab import (
    DiscreteDistribution,
    Neighborhood,
    Vocabulary,
    cross_entropy,
    discretize_density,
    dist_mean,
    dist_variance_full,
    entropy,
    local_variance,
    max_prob,
    neighborhood_around_mean,
    quantize,
)

__version__ = "0.1.0"
