"""Intrinsic-information rewards over token-embedding transition matrices."""

from .errors import (
    ConditioningWarning,
    ConfigError,
    DegenerateReductionError,
    DimensionalityLimitError,
    EmptyTransitionsError,
    IIRewardError,
    InsufficientDataError,
    InvalidInputError,
    NumericError,
    RewardFlagWarning,
)
from .intrinsic import (
    COMBINE_MAX,
    COMBINE_SUM,
    IntrinsicInfoResult,
    cause_info,
    effect_info,
    intrinsic_info,
    sequence_ii_total,
)
from .metrics import (
    SELF_CONSISTENCY_SAMPLES,
    SELF_CONSISTENCY_TEMPERATURE,
    AnswerSample,
    CalibrationBin,
    CalibrationReport,
    PredictionRecord,
    ResponseStats,
    answer_confidence,
    calibration,
    confidence_bin,
    majority_vote,
    read_predictions,
    response_stats,
    voted_accuracy,
    write_predictions,
)
from .phi import Bipartition, PhiResult, enumerate_bipartitions, partitioned_tpm, phi_system
from .pipeline import ScopeOutcome, compute_rewards, flatten_breakdowns, scope_sequences
from .records import (
    ROLE_OUTPUT,
    ROLE_PROMPT,
    EmbeddingRecord,
    EmbeddingRecordSet,
    read_records,
    write_records_binary,
    write_records_text,
)
from .reward import (
    KIND_ACCURACY,
    KIND_ENTROPY_MIN,
    KIND_II,
    KIND_II_PLUS_ACCURACY,
    KIND_PHI,
    REWARD_KINDS,
    RewardBreakdown,
    RewardConfig,
    entropy_reward,
    phi_reward,
    shape,
    trajectory_reward,
)
from .state_space import (
    CONDITION_ATTENTION,
    CONDITION_NONE,
    STATE_CHUNK,
    STATE_TOKEN,
    BinaryStateSequence,
    ReductionConfig,
    condition_output_on_prompt,
    reduce_and_binarize,
)
from .tpm import (
    MODE_BATCH,
    MODE_PROMPT,
    MODE_TRAJECTORY,
    Scope,
    TpmPolicy,
    TransitionProbabilityMatrix,
    build_tpm,
    group_by_policy,
    load_tpm,
    save_tpm,
)
from .trainer import (
    ExperimentConfig,
    ExperimentResult,
    GrpoConfig,
    MetricsRow,
    MetricsSeries,
    ToyPolicy,
    ToyTrajectory,
    grpo_step,
    rollout_group,
    run_comparison,
    run_experiment,
    score_trajectory,
)

__version__ = "0.1.0"
