"""Interpretable model-based boosting for binary outcomes.

Component-wise, grouped and sparse-group boosting with ridge base-learners
calibrated to fixed effective degrees of freedom, staged fitting for
interaction screening, cross-validated early stopping, and reporting tools
(variable importance, odds ratios, partial effects, a raw-data logistic
probe) plus a synthetic data generator.
"""

from ._version import __version__
from .artifact import ModelArtifact, atomic_write_text, load_artifact, save_artifact
from .boosting import (
    BINOMIAL_LOGIT,
    BinomialLogit,
    BoostConfig,
    BoostFit,
    LossFamily,
    SelectionStep,
    Stage,
    StagePlan,
    boost,
    init_offset,
    k_step_boost,
    linear_predictor,
    predict_proba,
    pseudo_residuals,
    sigmoid,
)
from .errors import (
    ColumnMismatchError,
    DegenerateColumnError,
    DegenerateFoldError,
    DegenerateOutcomeError,
    FingerprintMismatchError,
    MissingColumnError,
    MissingValueError,
    NonBinaryOutcomeError,
    NumericalFailureError,
    SchemaError,
    SingleClassError,
    SparseboostError,
    TooFewObservationsError,
    UnattainableDfError,
    UnknownCategoryError,
    UnknownLearnerError,
)
from .evaluation import (
    CvResult,
    RocCurve,
    SplitSpec,
    auc_pair_count,
    cv_mstop,
    fit_stage_plan_cv,
    fold_assignments,
    roc_auc,
    split,
)
from .factory import (
    GROUP_ID_PREFIX,
    SgbSpec,
    build_group,
    build_interaction_learners,
    build_mb,
    build_sgb,
)
from .interpret import (
    ImportanceRow,
    ImportanceTable,
    PartialEffectGrid,
    PartialEffectRow,
    ProbeResult,
    StratumProbe,
    importance,
    interaction_probe,
    odds_ratios,
    partial_effects,
)
from .learners import (
    BaseLearner,
    LearnerFit,
    block_rank,
    calibrate_lambda,
    effective_df,
    fit_learner,
    make_learner,
)
from .schema import (
    BinaryOutcome,
    ColumnMeta,
    DatasetSchema,
    DesignMatrix,
    InteractionTerm,
    OutcomeSpec,
    VariableSpec,
    augment_with_interactions,
    column_group_index,
    columns_by_source,
    encode,
    expand_interactions,
    load_schema,
    save_schema,
    schema_fingerprint,
    schema_from_dict,
    schema_to_dict,
)
from .synth import (
    NullStudyReport,
    NullStudyRow,
    SynthSpec,
    TrueModel,
    bernoulli_schema,
    generate,
    null_interaction_study,
)

__all__ = sorted(name for name in dir() if not name.startswith("_")
                 and name not in {"annotations"})
