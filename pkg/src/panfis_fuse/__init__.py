"""Chunk-parallel evolving fuzzy-rule classification with rule-base fusion."""
from .data import CsvSchema, Dataset, SynthConfig, load_csv, synth_rss, write_csv
from .estimator import PANFISClassifier, ScalablePANFISClassifier
from .exceptions import ChunkError, CsvParseError, FormatError, NumericError, UsageError
from .fusion import (
    FusionReport,
    MergeConfig,
    bhattacharyya_olap,
    fuse,
    homogeneity_check,
    merge_pair,
    overlap_score,
)
from .inference import EvalMetrics, Prediction, evaluate, predict, predict_labels
from .learner import (
    LearnerConfig,
    PANFISLearner,
    grow_rule,
    learn_arrays,
    learn_chunk,
    merge_redundant,
    prune_rules,
    should_grow,
    update_consequents,
    update_winner,
)
from .model_io import load_model, save_model
from .orchestrator import PartitionPlan, RunReport, partition, train_scalable, train_single
from .rule_model import (
    Rule,
    RuleBase,
    Sample,
    firing_strength,
    rule_volume,
    statistical_contribution,
)

__version__ = "0.1.0"
