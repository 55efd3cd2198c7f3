"""Deterministic kernels for group-relative advantages under symmetric reward noise.

Everything here is a pure function of its arguments: group statistics,
standardized advantages, the deviation a single false positive induces
across a whole group, the de-biased true-mean estimate, and the three
group weighting strategies (GRPO, Dr. GRPO, S-GRPO).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

DEFAULT_EPSILON = 1e-8


class Method(enum.Enum):
    """Group weighting strategy applied on top of standardized advantages."""

    GRPO = "grpo"
    DR_GRPO = "dr_grpo"
    S_GRPO = "sgrpo"


@dataclass(frozen=True)
class RewardGroup:
    """An ordered group of binary observed rewards for one task."""

    rewards: tuple[int, ...]
    task_id: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "rewards", tuple(self.rewards))
        if len(self.rewards) < 2:
            raise ValueError(f"a reward group needs at least 2 responses, got {len(self.rewards)}")
        if any(r not in (0, 1) for r in self.rewards):
            raise ValueError("rewards must be exactly 0 or 1")

    @property
    def n(self) -> int:
        return len(self.rewards)

    @property
    def k(self) -> int:
        """Number of observed successes."""
        return int(sum(self.rewards))


@dataclass(frozen=True)
class GroupStats:
    """Mean reward and epsilon-floored standard deviation of one group."""

    mean: float
    sigma: float
    epsilon: float


@dataclass(frozen=True)
class NoiseSpec:
    """Symmetric flip probability and the shared numerical floor."""

    p: float
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self) -> None:
        if not 0.0 <= self.p < 0.5:
            raise ValueError(f"flip probability must lie in [0, 0.5), got {self.p}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


@dataclass(frozen=True)
class TrueEstimate:
    """De-biased latent success rate, its sigma, and whether clipping fired."""

    t: float
    sigma_t: float
    clipped: bool


@dataclass(frozen=True)
class AdvantageResult:
    """Standardized advantages plus the group weight; consumers apply weight * a_i."""

    advantages: tuple[float, ...]
    weight: float
    method: Method


@dataclass(frozen=True)
class DeviationReport:
    """Per-term breakdown of the advantage deviation caused by one false positive."""

    a_pos: float
    a_neg: float
    a_pos_true: float
    a_neg_true: float
    mismatch_term: float
    true_pos_term: float
    true_neg_term: float
    total: float


def group_stats(group: RewardGroup, epsilon: float = DEFAULT_EPSILON) -> GroupStats:
    """Mean reward k/N and sigma = sqrt(mean(1-mean) + epsilon)."""
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    mean = group.k / group.n
    sigma = math.sqrt(mean * (1.0 - mean) + epsilon)
    return GroupStats(mean=mean, sigma=sigma, epsilon=epsilon)


def standardized_advantages(group: RewardGroup, stats: GroupStats) -> list[float]:
    """Per-response advantages (r_i - mean) / sigma, order preserved.

    A constant group (all rewards equal) has every numerator exactly zero,
    so its advantages are all 0.0 even when sigma itself is 0 (epsilon=0).
    """
    if abs(stats.mean - group.k / group.n) > 1e-12:
        raise ValueError("stats were not computed from this group")
    if stats.sigma == 0.0:
        return [0.0] * group.n
    return [(r - stats.mean) / stats.sigma for r in group.rewards]


def pos_neg_advantages(n: int, k: int) -> tuple[float, float]:
    """Closed-form advantages of a group with k successes out of n.

    a_pos = (n-k)/sqrt(k(n-k)) for each success, a_neg = -k/sqrt(k(n-k)) for
    each failure. Requires both classes present; constant groups have no
    finite closed form and must go through standardized_advantages.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must lie in [1, n-1] so both classes are present, got k={k}, n={n}")
    denom = math.sqrt(k * (n - k))
    return (n - k) / denom, -k / denom


def mismatch_deviation(n: int, k: int) -> DeviationReport:
    """Total advantage deviation when one of k observed successes is a false positive.

    The corrected group has k-1 successes. The report splits the deviation into
    the mismatch sample itself, the k-1 genuine successes, and the n-k genuine
    failures. Degenerate compositions use the convention that a constant group
    standardizes to all-zero advantages: at k=1 the corrected group has no
    successes, at k=n the observed group is constant. k=0 is rejected since no
    false positive can exist without an observed success.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, n]; a false positive needs an observed success, got k={k}")

    if k == n:
        a_pos, a_neg = 0.0, 0.0
    else:
        a_pos, a_neg = pos_neg_advantages(n, k)

    if k == 1:
        a_pos_true, a_neg_true = 0.0, 0.0
    else:
        denom = math.sqrt((k - 1) * (n - k + 1))
        a_pos_true = (n - k + 1) / denom
        a_neg_true = -(k - 1) / denom

    mismatch_term = abs(a_pos - a_neg_true)
    true_pos_term = (k - 1) * abs(a_pos - a_pos_true)
    true_neg_term = (n - k) * abs(a_neg - a_neg_true)
    return DeviationReport(
        a_pos=a_pos,
        a_neg=a_neg,
        a_pos_true=a_pos_true,
        a_neg_true=a_neg_true,
        mismatch_term=mismatch_term,
        true_pos_term=true_pos_term,
        true_neg_term=true_neg_term,
        total=mismatch_term + true_pos_term + true_neg_term,
    )


def estimate_true_mean(mean: float, noise: NoiseSpec) -> TrueEstimate:
    """De-biased estimate of the latent success rate from an observed mean.

    Inverts mean = (1-p)t + p(1-t), then clips t to [0, 1]; the clipped flag
    records whether the raw value fell outside that range.
    """
    if not 0.0 <= mean <= 1.0:
        raise ValueError(f"mean must lie in [0, 1], got {mean}")
    raw = (mean - noise.p) / (1.0 - 2.0 * noise.p)
    clipped = raw < 0.0 or raw > 1.0
    t = min(1.0, max(0.0, raw))
    sigma_t = math.sqrt(t * (1.0 - t) + noise.epsilon)
    return TrueEstimate(t=t, sigma_t=sigma_t, clipped=clipped)


def optimal_weight_from_mean(mean: float, noise: NoiseSpec) -> float:
    """Group weight minimizing expected squared error against the true advantage.

    (1-2p) t(1-t) / (sigma_r sigma_t), the correlation between observed and
    true standardized rewards. Exactly 0 when the observed mean is <= p or
    >= 1-p (the estimate clips to a deterministic t), and bounded by 1-2p.
    """
    est = estimate_true_mean(mean, noise)
    numerator = (1.0 - 2.0 * noise.p) * est.t * (1.0 - est.t)
    sigma_r = math.sqrt(mean * (1.0 - mean) + noise.epsilon)
    return numerator / (sigma_r * est.sigma_t)


def optimal_weight(n: int, k: int, noise: NoiseSpec) -> float:
    """Noise-optimal weight for a group with k observed successes out of n."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, n], got k={k}, n={n}")
    return optimal_weight_from_mean(k / n, noise)


def dr_grpo_weight(
    n: int, k: int, epsilon: float = DEFAULT_EPSILON, plot_scale: float | None = None
) -> float:
    """Group standard deviation, the multiplier Dr. GRPO keeps on standardized advantages.

    weight * a_i recovers the unnormalized mean-subtracted advantage r_i - mean.
    With plot_scale, rescales so the maximum over k in [0, n] equals plot_scale.
    """
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if not 0 <= k <= n:
        raise ValueError(f"k must lie in [0, n], got k={k}, n={n}")
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be non-negative, got {epsilon}")
    mean = k / n
    weight = math.sqrt(mean * (1.0 - mean) + epsilon)
    if plot_scale is not None:
        peak = max(math.sqrt((j / n) * (1.0 - j / n) + epsilon) for j in range(n + 1))
        weight = weight * plot_scale / peak
    return weight


def compute_advantages(group: RewardGroup, method: Method, noise: NoiseSpec) -> AdvantageResult:
    """Standardized advantages plus the group weight for the chosen method.

    GRPO fixes the weight at 1, Dr. GRPO uses the group standard deviation so
    that weight * a_i = r_i - mean, and S-GRPO uses the noise-optimal weight
    at noise.p. All three share noise.epsilon as the numerical floor.
    """
    stats = group_stats(group, noise.epsilon)
    advantages = standardized_advantages(group, stats)
    if method is Method.GRPO:
        weight = 1.0
    elif method is Method.DR_GRPO:
        weight = dr_grpo_weight(group.n, group.k, noise.epsilon)
    elif method is Method.S_GRPO:
        weight = optimal_weight(group.n, group.k, noise)
    else:
        raise ValueError(f"unknown method {method!r}")
    return AdvantageResult(advantages=tuple(advantages), weight=weight, method=method)


def surrogate_loss_in_w(w: float, cov: float) -> float:
    """Expected squared error w^2 - 2 w cov + 1 of a reweighted standardized advantage."""
    return w * w - 2.0 * w * cov + 1.0


def reward_covariance(t: float, noise: NoiseSpec) -> float:
    """Covariance (1-2p) t(1-t) between an observed reward and its latent truth."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return (1.0 - 2.0 * noise.p) * t * (1.0 - t)
