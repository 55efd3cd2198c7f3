"""Group-relative policy optimization under reward noise, at desk scale.

Exact GRPO / Dr. GRPO / S-GRPO advantage kernels, a symmetric reward-flip
model with reproducible streams, a toy policy-gradient trainer, and the
experiment drivers that write the frozen CSV schemas.
"""

from .advantage import (
    DEFAULT_EPSILON,
    AdvantageResult,
    DeviationReport,
    GroupStats,
    Method,
    NoiseSpec,
    RewardGroup,
    TrueEstimate,
    compute_advantages,
    dr_grpo_weight,
    estimate_true_mean,
    group_stats,
    mismatch_deviation,
    optimal_weight,
    optimal_weight_from_mean,
    pos_neg_advantages,
    reward_covariance,
    standardized_advantages,
    surrogate_loss_in_w,
)
from .noise import (
    LatentRewardGroup,
    RngSeed,
    apply_symmetric_noise,
    forward_mean,
    sample_true_rewards,
)
from .simulate import (
    TRACE_COLUMNS,
    PolicyParams,
    RolloutBatch,
    SurrogateConfig,
    SyntheticTask,
    TaskRollout,
    TrainingTrace,
    greedy_accuracy,
    initial_policy,
    make_toy_bank,
    policy_entropy,
    rollout,
    surrogate_objective,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_EPSILON",
    "TRACE_COLUMNS",
    "AdvantageResult",
    "DeviationReport",
    "GroupStats",
    "LatentRewardGroup",
    "Method",
    "NoiseSpec",
    "PolicyParams",
    "RewardGroup",
    "RngSeed",
    "RolloutBatch",
    "SurrogateConfig",
    "SyntheticTask",
    "TaskRollout",
    "TrainingTrace",
    "TrueEstimate",
    "apply_symmetric_noise",
    "initial_policy",
    "compute_advantages",
    "dr_grpo_weight",
    "estimate_true_mean",
    "forward_mean",
    "greedy_accuracy",
    "group_stats",
    "make_toy_bank",
    "mismatch_deviation",
    "optimal_weight",
    "optimal_weight_from_mean",
    "policy_entropy",
    "pos_neg_advantages",
    "reward_covariance",
    "rollout",
    "sample_true_rewards",
    "standardized_advantages",
    "surrogate_loss_in_w",
    "surrogate_objective",
    "train",
]
