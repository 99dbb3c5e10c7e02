"""Evaluation protocol: metrics, feature embedder, and the benchmark sweep."""

from .benchmark import (
    BenchmarkPairing,
    BenchmarkReport,
    BestOfThree,
    EvalConfig,
    EvalRecord,
    PairingEntry,
    SCORE_SIZE,
    best_of_three,
    format_report,
    pair_benchmark,
    run_benchmark,
)
from .embedder import (
    EmbedderConfig,
    FeatureEmbedder,
    VERSION as EMBEDDER_VERSION,
    perceptual_distance,
    train_embedder,
)
from .metrics import (
    EvalError,
    STRIDE,
    WINDOW,
    frechet_distance,
    lmse,
    lmse_window_count,
    mse,
)

__all__ = [
    "BenchmarkPairing",
    "BenchmarkReport",
    "BestOfThree",
    "EMBEDDER_VERSION",
    "EmbedderConfig",
    "EvalConfig",
    "EvalError",
    "EvalRecord",
    "FeatureEmbedder",
    "PairingEntry",
    "SCORE_SIZE",
    "STRIDE",
    "WINDOW",
    "best_of_three",
    "format_report",
    "frechet_distance",
    "lmse",
    "lmse_window_count",
    "mse",
    "pair_benchmark",
    "perceptual_distance",
    "run_benchmark",
    "train_embedder",
]
