"""Multi-distance embedding toolkit for knowledge-graph link prediction."""

from .checkpoint import (Checkpoint, load_checkpoint, load_optimizer_state,
                         save_checkpoint, save_optimizer_state)
from .data import (FilterIndex, Triple, TripleSet, Vocabulary,
                   build_filter_index, load_triples, save_triples)
from .errors import ConfigError, DataError, MDEError, NumericalError
from .estimator import MDE
from .evaluation import (RankingReport, evaluate, format_reports, rank_triple,
                         score_comparison_rate, write_reports_csv)
from .loss import LossState, limit_loss, update_limits
from .model import (EmbeddingSet, LimitCompatibilityReport, ScoreConfig,
                    check_limit_compatibility, init_embeddings,
                    score_candidates, score_term, score_triples)
from .optim import (AdadeltaState, GradientBuffer, adadelta_step, grad_loss,
                    grad_score_term, sgd_step)
from .patterns import (PATTERNS, PatternSpec, generate_pattern_kg,
                       write_pattern_dataset)
from .training import (GroundTruthReport, TrainConfig, TrainHistory,
                       TrainResult, fit_ground_truth, ground_truth_config,
                       sample_negatives, train)

__version__ = "0.1.0"

__all__ = [
    "MDE",
    "Checkpoint", "load_checkpoint", "save_checkpoint",
    "load_optimizer_state", "save_optimizer_state",
    "FilterIndex", "Triple", "TripleSet", "Vocabulary",
    "build_filter_index", "load_triples", "save_triples",
    "MDEError", "ConfigError", "DataError", "NumericalError",
    "RankingReport", "evaluate", "format_reports", "rank_triple",
    "score_comparison_rate", "write_reports_csv",
    "LossState", "limit_loss", "update_limits",
    "EmbeddingSet", "LimitCompatibilityReport", "ScoreConfig",
    "check_limit_compatibility", "init_embeddings", "score_candidates",
    "score_term", "score_triples",
    "AdadeltaState", "GradientBuffer", "adadelta_step", "grad_loss",
    "grad_score_term", "sgd_step",
    "PATTERNS", "PatternSpec", "generate_pattern_kg", "write_pattern_dataset",
    "GroundTruthReport", "TrainConfig", "TrainHistory", "TrainResult",
    "fit_ground_truth", "ground_truth_config", "sample_negatives", "train",
    "__version__",
]
