"""Sparsity-aware augmentation of streaming review graphs.

Ingest a stream of timestamped product reviews, categorize its users by
activity and connectivity, synthesize pseudo-reviews for the sparse
categories through a pluggable completion backend, interpolate them into
the timeline, and evaluate the augmented stream.
"""

from .baseline import PredictorState, predict_then_update, prequential_eval
from .graph import Connectivity, DynamicGraph
from .interpolation import (
    InterpolationConfig,
    InterpolationLedger,
    InterpolationSlot,
    find_slots,
    interpolation_factor,
    interpolate_dataset,
    plan_fills,
)
from .llm import (
    BackendConfig,
    CompletionRequest,
    HttpBackend,
    MockBackend,
    complete,
    make_backend,
)
from .metrics import (
    JudgeScores,
    MetricsReport,
    class_distribution,
    classification_metrics,
    judge_scores,
    metrics_report,
    regression_metrics,
    rmse_reduction,
    vocabulary_richness,
)
from .pipeline import PipelineConfig, run_pipeline
from .reviews import (
    ReviewEvent,
    ReviewStream,
    SparsityCategory,
    dump_stream,
    load_dataset,
    parse_review_line,
    split_train_test,
)
from .sparsity import (
    ActivityFeatures,
    ActivitySeries,
    SparsityAssignment,
    SparsityConfig,
    activity_series,
    categorize_users,
    interaction_variance,
    kmeans_fit,
)
from .synthesis import (
    Profile,
    RunReport,
    SynthesisConfig,
    generate_product_profile,
    generate_user_profile,
    select_reviews,
    select_second_order_products,
    synthesize_review,
)
from .templates import PromptTemplate, load_templates

__version__ = "0.1.0"
