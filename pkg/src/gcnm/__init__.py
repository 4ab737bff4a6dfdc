"""Traffic forecasting with one-step missing-value handling.

A memory-enriched graph convolutional forecaster (local spatio-temporal
statistics + multi-scale attention memory + dynamic graph convolutions)
together with the experiment harness around it: missing-value scenario
injection, recurrent and two-step imputation baselines, masked evaluation
metrics, and rank-based statistical model comparison.
"""

from .baselines import GRUForecaster, impute_knn, impute_mean
from .config import ModelConfig, load_config
from .dataset import DataBundle, ForecastDataset, load_bundle, write_bundle
from .errors import (ConfigError, DataError, GcnmError, NumericError,
                     OrderingError, SchemaError)
from .masking import MissingScenario, inject, inject_per_split, mask_stats
from .metrics import horizon_report, masked_metrics
from .model import GCNM, masked_mae
from .series import (PredefinedGraph, TrafficSeries, ingest_series, normalize,
                     read_series, write_series)
from .stats import (ComparisonResult, compare_models, friedman_test,
                    holm_cliques, wilcoxon_signed_rank)
from .synthetic import daily_traffic, ring_graph
from .training import (build_dataset, build_model, evaluate_mae, load_checkpoint,
                       restore_model, save_checkpoint, train_model)
from .windows import SegmentSpec, admissible_anchors, segment_index, split_anchors

__version__ = "0.1.0"

__all__ = [
    "GCNM", "GRUForecaster", "ModelConfig", "TrafficSeries", "PredefinedGraph",
    "MissingScenario", "SegmentSpec", "DataBundle", "ForecastDataset",
    "ComparisonResult", "GcnmError", "ConfigError", "DataError", "SchemaError",
    "OrderingError", "NumericError",
    "ingest_series", "normalize", "read_series", "write_series",
    "inject", "inject_per_split", "mask_stats",
    "admissible_anchors", "segment_index", "split_anchors",
    "load_bundle", "write_bundle", "load_config",
    "build_dataset", "build_model", "train_model", "evaluate_mae",
    "save_checkpoint", "load_checkpoint", "restore_model",
    "masked_mae", "masked_metrics", "horizon_report",
    "friedman_test", "wilcoxon_signed_rank", "holm_cliques", "compare_models",
    "impute_mean", "impute_knn", "daily_traffic", "ring_graph",
]
