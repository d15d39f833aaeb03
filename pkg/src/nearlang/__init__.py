"""nearlang: tell closely related, same-script languages apart.

A library and CLI for sentence-level identification of closely related
languages with character/word n-gram features and a linear one-vs-rest
SVM, plus lexical-overlap and average edit-distance analyses between
language vocabularies.
"""

__version__ = "0.1.0"

from .analysis import (
    DistanceMatrix,
    OverlapMatrix,
    SimilarityConfig,
    avg_edit_distance,
    distance_matrix,
    levenshtein,
    overlap_matrix,
    unique_tokens,
)
from .corpus import (
    Corpus,
    FoldAssignment,
    LabeledSentence,
    SplitSpec,
    load_corpus,
    make_cv_folds,
    normalize_sentence,
    split_train_test,
    tokenize,
)
from .errors import ConfigError, DataError, ModelFormatError
from .evaluation import (
    ClassMetrics,
    ConfusionMatrix,
    ErrorRecord,
    EvalReport,
    accuracy,
    confusion_matrix,
    error_report,
    evaluate_model,
    evaluate_predictions,
    per_class_metrics,
)
from .features import (
    FeatureIndex,
    FeatureSpec,
    FeatureVector,
    build_feature_index,
    extract_char_ngrams,
    extract_word_ngrams,
    feature_set_from_name,
    vectorize,
    vectors_to_csr,
)
from .svm import (
    LinearModel,
    SvmSolution,
    TrainConfig,
    decision_values,
    grid_search,
    load_model,
    predict,
    save_model,
    solve_binary_csr,
    train_binary_svm,
    train_ovr,
)

__all__ = [
    "__version__",
    "ClassMetrics",
    "ConfigError",
    "ConfusionMatrix",
    "Corpus",
    "DataError",
    "DistanceMatrix",
    "ErrorRecord",
    "EvalReport",
    "FeatureIndex",
    "FeatureSpec",
    "FeatureVector",
    "FoldAssignment",
    "LabeledSentence",
    "LinearModel",
    "ModelFormatError",
    "OverlapMatrix",
    "SimilarityConfig",
    "SplitSpec",
    "SvmSolution",
    "TrainConfig",
    "accuracy",
    "avg_edit_distance",
    "build_feature_index",
    "confusion_matrix",
    "decision_values",
    "distance_matrix",
    "error_report",
    "evaluate_model",
    "evaluate_predictions",
    "extract_char_ngrams",
    "extract_word_ngrams",
    "feature_set_from_name",
    "grid_search",
    "levenshtein",
    "load_corpus",
    "load_model",
    "make_cv_folds",
    "normalize_sentence",
    "overlap_matrix",
    "per_class_metrics",
    "predict",
    "save_model",
    "solve_binary_csr",
    "split_train_test",
    "tokenize",
    "train_binary_svm",
    "train_ovr",
    "unique_tokens",
    "vectorize",
    "vectors_to_csr",
]
