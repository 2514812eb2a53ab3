"""Directed connectivity inference and benchmarking for neural recordings."""

from .dataset import (
    ConsistencyError,
    EvalReport,
    FluorescencePanel,
    GroundTruthNetwork,
    NeuronLayout,
    ParseError,
    ScoreMatrix,
    load_benchmark_dir,
    load_dataset,
    load_score_matrix,
    write_pgm_heatmap,
    write_report,
    write_score_matrix,
)
from .preprocess import (
    ScatterMatrix,
    SpikeRaster,
    build_scatter_matrix,
    correct_scatter,
    discretize,
    remove_high_activity_frames,
    summation_filter,
)
from .model_free import (
    CovarianceEstimate,
    PrecisionEstimate,
    cross_correlation_scores,
    empirical_covariance,
    graphical_lasso,
    pca_precision,
    precision_to_scores,
)
from .hawkes import HawkesModel, em_fit, hawkes_scores, log_likelihood, simulate
from .cirusim import (
    PairFeatureVector,
    SpanSeries,
    cirusim_scores,
    extract_span_series,
    svm_predict,
    svm_train,
    transform_and_featurize,
)
from .evaluation import LabeledScores, leave_one_network_out, pr_auc, roc_auc
from .methods import NetworkData, available_methods, build_method
from .simgen import BenchmarkSpec, generate_benchmark, sample_network, synthesize_recording

__version__ = "0.1.0"
