"""Desk-scale analog of the group-relative training loop.

Each synthetic task carries a fixed set of candidate responses with known
correctness; the policy is one categorical distribution (softmax over a
logits row) per task. A training step samples a group of responses per
task, scores them with noisy binary rewards, and ascends a PPO-style
clipped surrogate weighted per group by the configured method.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .advantage import (
    DEFAULT_EPSILON,
    AdvantageResult,
    Method,
    NoiseSpec,
    RewardGroup,
    compute_advantages,
)
from .noise import LatentRewardGroup, RngSeed, apply_symmetric_noise


@dataclass(frozen=True)
class SyntheticTask:
    """A toy question: candidate responses with known latent correctness."""

    task_id: str
    correct_mask: tuple[bool, ...]
    difficulty: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "correct_mask", tuple(bool(c) for c in self.correct_mask))
        if len(self.correct_mask) < 2:
            raise ValueError(f"a task needs at least 2 candidate responses, got {len(self.correct_mask)}")
        if not (any(self.correct_mask) and not all(self.correct_mask)):
            raise ValueError("a task needs at least one correct and one incorrect response")

    @property
    def num_responses(self) -> int:
        return len(self.correct_mask)


@dataclass
class PolicyParams:
    """Per-task categorical policy logits [num_tasks, num_responses]."""

    logits: np.ndarray
    step_count: int = 0

    def __post_init__(self) -> None:
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.logits.ndim != 2:
            raise ValueError(f"logits must be a [num_tasks, num_responses] matrix, got shape {self.logits.shape}")
        if not np.isfinite(self.logits).all():
            raise ValueError("logits must be finite")


@dataclass(frozen=True)
class TaskRollout:
    """One task's sampled response indices, snapshot probabilities, and rewards."""

    actions: tuple[int, ...]
    old_probs: tuple[float, ...]
    rewards: LatentRewardGroup


@dataclass(frozen=True)
class RolloutBatch:
    """Rollouts for a (possibly strict) subset of the bank, by bank row index."""

    per_task: tuple[TaskRollout, ...]
    task_indices: tuple[int, ...]
    group_size: int


@dataclass(frozen=True)
class SurrogateConfig:
    """Knobs of the clipped-surrogate trainer.

    learning_rate and tasks_per_step are tuned jointly for the toy scale:
    per-visit updates are large enough that a single strongly reweighted
    group can decide a task, and each task is visited only every
    num_tasks / tasks_per_step steps, mirroring a minibatched dataset pass.
    That is the regime where group-level reward corruption matters.
    """

    method: Method = Method.GRPO
    clip_epsilon: float = 0.2
    learning_rate: float = 32.0
    inner_epochs: int = 1
    noise_assumption_p: float = 0.0
    injected_noise_p: float = 0.0
    epsilon: float = DEFAULT_EPSILON
    group_size: int = 8
    init_scale: float = 0.0
    tasks_per_step: int | None = 4

    def __post_init__(self) -> None:
        if not 0.0 < self.clip_epsilon < 1.0:
            raise ValueError(f"clip_epsilon must lie in (0, 1), got {self.clip_epsilon}")
        if self.learning_rate < 0.0:
            raise ValueError(f"learning_rate must be non-negative, got {self.learning_rate}")
        if self.inner_epochs < 1:
            raise ValueError(f"inner_epochs must be >= 1, got {self.inner_epochs}")
        for name in ("noise_assumption_p", "injected_noise_p"):
            p = getattr(self, name)
            if not 0.0 <= p < 0.5:
                raise ValueError(f"{name} must lie in [0, 0.5), got {p}")
        if not self.epsilon > 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.group_size < 2:
            raise ValueError(f"group_size must be >= 2, got {self.group_size}")
        if self.init_scale < 0.0:
            raise ValueError(f"init_scale must be non-negative, got {self.init_scale}")
        if self.tasks_per_step is not None and self.tasks_per_step < 1:
            raise ValueError(f"tasks_per_step must be >= 1 when set, got {self.tasks_per_step}")


TRACE_COLUMNS = ("step", "accuracy", "entropy", "mean_weight", "gated_fraction", "mean_observed_reward")


@dataclass
class TrainingTrace:
    """Per-step time series of the trainer.

    accuracy and entropy are evaluated after the step's update; mean_weight,
    gated_fraction and mean_observed_reward come from the step's rollout.
    mean_weight averages over non-gated groups only (0.0 if every group is
    gated); gated_fraction is the share of groups with weight exactly 0.
    """

    steps: list[int] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    entropy: list[float] = field(default_factory=list)
    mean_weight: list[float] = field(default_factory=list)
    gated_fraction: list[float] = field(default_factory=list)
    mean_observed_reward: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    def rows(self) -> Iterator[tuple[int, float, float, float, float, float]]:
        yield from zip(
            self.steps,
            self.accuracy,
            self.entropy,
            self.mean_weight,
            self.gated_fraction,
            self.mean_observed_reward,
        )


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def policy_entropy(params: PolicyParams) -> float:
    """Mean Shannon entropy (nats) of the per-task softmax rows."""
    probs = softmax(params.logits)
    terms = np.zeros_like(probs)
    nz = probs > 0.0
    terms[nz] = probs[nz] * np.log(probs[nz])
    return float(-terms.sum(axis=-1).mean())


def greedy_accuracy(params: PolicyParams, tasks: Sequence[SyntheticTask]) -> float:
    """Fraction of tasks whose argmax response is truly correct (ties break low)."""
    picks = np.argmax(params.logits, axis=-1)
    hits = sum(task.correct_mask[pick] for task, pick in zip(tasks, picks))
    return hits / len(tasks)


def _check_bank(params: PolicyParams, tasks: Sequence[SyntheticTask]) -> None:
    num_tasks, num_responses = params.logits.shape
    if len(tasks) != num_tasks:
        raise ValueError(f"got {len(tasks)} tasks for logits with {num_tasks} rows")
    if any(task.num_responses != num_responses for task in tasks):
        raise ValueError("every task must have as many candidate responses as the logits row")


def rollout(
    params: PolicyParams,
    tasks: Sequence[SyntheticTask],
    group_size: int,
    injected_p: float,
    seed: RngSeed,
    step: int = 0,
    task_indices: Sequence[int] | None = None,
) -> RolloutBatch:
    """Sample a group of responses per task and score them with noisy rewards.

    Each task consumes its own stream derived from (seed, step, bank index):
    group_size uniforms pick responses by inverse CDF over the softmax row,
    then group_size more drive the symmetric reward flips. task_indices
    selects which bank rows to roll out (all of them by default).
    """
    if group_size < 2:
        raise ValueError(f"group_size must be >= 2, got {group_size}")
    _check_bank(params, tasks)
    if task_indices is None:
        task_indices = range(len(tasks))
    probs = softmax(params.logits)
    per_task = []
    for idx in task_indices:
        task = tasks[idx]
        stream = seed.stream(step, int(idx))
        row = probs[idx]
        cdf = np.cumsum(row)
        u = stream.random(group_size)
        actions = np.minimum(np.searchsorted(cdf, u, side="right"), row.size - 1)
        true = [int(task.correct_mask[a]) for a in actions]
        rewards = apply_symmetric_noise(true, injected_p, stream)
        per_task.append(
            TaskRollout(
                actions=tuple(int(a) for a in actions),
                old_probs=tuple(float(row[a]) for a in actions),
                rewards=rewards,
            )
        )
    return RolloutBatch(
        per_task=tuple(per_task),
        task_indices=tuple(int(i) for i in task_indices),
        group_size=group_size,
    )


def group_results(batch: RolloutBatch, config: SurrogateConfig) -> list[AdvantageResult]:
    """Weight and standardized advantages per group, from observed rewards only."""
    noise = NoiseSpec(p=config.noise_assumption_p, epsilon=config.epsilon)
    return [
        compute_advantages(RewardGroup(tr.rewards.observed_rewards), config.method, noise)
        for tr in batch.per_task
    ]


def _per_task_objective_grads(
    batch: RolloutBatch,
    logits: np.ndarray,
    config: SurrogateConfig,
    results: Sequence[AdvantageResult],
) -> tuple[np.ndarray, np.ndarray]:
    """Clipped-surrogate value and gradient per task row.

    The gradient flows through the importance ratio only where the unclipped
    branch is active or the ratio sits inside the clip interval; a clipped
    branch strictly below the unclipped one contributes zero gradient.
    """
    probs = softmax(logits)
    objectives = np.zeros(len(batch.per_task))
    grads = np.zeros_like(logits)
    lo, hi = 1.0 - config.clip_epsilon, 1.0 + config.clip_epsilon
    for j, (tr, result) in enumerate(zip(batch.per_task, results)):
        bank_row = batch.task_indices[j]
        weighted = result.weight * np.asarray(result.advantages)
        row = probs[bank_row]
        actions = np.asarray(tr.actions)
        ratio = row[actions] / np.asarray(tr.old_probs)
        clipped_ratio = np.clip(ratio, lo, hi)
        unclipped = ratio * weighted
        clipped = clipped_ratio * weighted
        objectives[j] = np.minimum(unclipped, clipped).mean()
        active = (unclipped <= clipped) | ((ratio >= lo) & (ratio <= hi))
        coeff = np.where(active, weighted * ratio, 0.0) / batch.group_size
        grads[bank_row] -= coeff.sum() * row
        np.add.at(grads[bank_row], actions, coeff)
    return objectives, grads


def surrogate_objective(
    batch: RolloutBatch, params: PolicyParams, config: SurrogateConfig
) -> tuple[float, np.ndarray]:
    """Mean clipped-surrogate objective over tasks with its analytic gradient.

    Raises FloatingPointError on a non-finite objective (exploding ratios).
    """
    results = group_results(batch, config)
    objectives, grads = _per_task_objective_grads(batch, params.logits, config, results)
    objective = float(objectives.mean())
    if not np.isfinite(objective):
        raise FloatingPointError(f"non-finite surrogate objective: {objective}")
    return objective, grads / len(batch.per_task)


# Stream tags separating the initial-logits draw and the per-epoch visit order
# from per-(step, task) rollout streams.
_INIT_STREAM_TAG = 0x1A17
_EPOCH_STREAM_TAG = 0xE90C


def initial_policy(
    tasks: Sequence[SyntheticTask], config: SurrogateConfig, seed: RngSeed
) -> PolicyParams:
    """Seeded Gaussian initial logits, standing in for a base model's priors.

    Rows are drawn N(0, init_scale) from stream (seed, tag), so at init the
    argmax response is usually arbitrary and often wrong; training has to
    reshape the policy rather than merely break ties from a uniform start.
    """
    stream = seed.stream(_INIT_STREAM_TAG)
    logits = config.init_scale * stream.standard_normal((len(tasks), tasks[0].num_responses))
    return PolicyParams(logits=logits)


def train(
    tasks: Sequence[SyntheticTask],
    config: SurrogateConfig,
    steps: int,
    seed: RngSeed,
    initial_logits: np.ndarray | None = None,
) -> TrainingTrace:
    """Run the rollout / clipped-ascent loop and record one trace row per step.

    Each task's logits row ascends the gradient of its own group objective at
    the configured learning rate, so per-task dynamics do not depend on how
    many tasks share the bank. Deterministic given (tasks, config, seed).
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if not tasks:
        raise ValueError("task bank is empty")
    if initial_logits is None:
        params = initial_policy(tasks, config, seed)
    else:
        params = PolicyParams(logits=np.array(initial_logits, dtype=np.float64, copy=True))
    _check_bank(params, tasks)

    batch_size = config.tasks_per_step or len(tasks)
    visit_queue: list[int] = []
    epoch = 0

    trace = TrainingTrace()
    for step in range(steps):
        # Visit tasks in epoch-shuffled order, like minibatching over a dataset.
        while len(visit_queue) < batch_size:
            order = seed.stream(_EPOCH_STREAM_TAG, epoch).permutation(len(tasks))
            visit_queue.extend(int(i) for i in order)
            epoch += 1
        visited, visit_queue = visit_queue[:batch_size], visit_queue[batch_size:]

        batch = rollout(
            params, tasks, config.group_size, config.injected_noise_p, seed, step, visited
        )
        results = group_results(batch, config)
        for _ in range(config.inner_epochs):
            _, grads = _per_task_objective_grads(batch, params.logits, config, results)
            params.logits += config.learning_rate * grads
        if not np.isfinite(params.logits).all():
            raise FloatingPointError(f"non-finite policy parameters at step {step}")
        params.step_count += 1

        weights = [res.weight for res in results]
        live = [w for w in weights if w != 0.0]
        observed = [r for tr in batch.per_task for r in tr.rewards.observed_rewards]
        trace.steps.append(step)
        trace.accuracy.append(greedy_accuracy(params, tasks))
        trace.entropy.append(policy_entropy(params))
        trace.mean_weight.append(sum(live) / len(live) if live else 0.0)
        trace.gated_fraction.append(1.0 - len(live) / len(weights))
        trace.mean_observed_reward.append(sum(observed) / len(observed))
    return trace


_DIFFICULTY_TAGS = {1: "hard", 2: "medium", 3: "easy"}


def make_toy_bank(
    num_tasks: int = 64,
    num_responses: int = 8,
    correct_counts: Sequence[int] = (1, 1, 1, 2, 3),
    seed: RngSeed = RngSeed(0xBA5E),
) -> list[SyntheticTask]:
    """Deterministic bank of synthetic tasks with 1 to 3 correct responses each.

    Task i draws its correct count from correct_counts (the default skews
    toward single-correct tasks, where one false positive hurts most) and
    scatters the correct responses uniformly, all from stream (seed, i).
    """
    if num_tasks < 1:
        raise ValueError(f"num_tasks must be >= 1, got {num_tasks}")
    if not correct_counts:
        raise ValueError("correct_counts must be non-empty")
    if any(not 1 <= c <= num_responses - 1 for c in correct_counts):
        raise ValueError("each correct count must leave at least one incorrect response")
    tasks = []
    for i in range(num_tasks):
        stream = seed.stream(i)
        count = int(correct_counts[int(stream.integers(len(correct_counts)))])
        correct = stream.permutation(num_responses)[:count]
        mask = np.zeros(num_responses, dtype=bool)
        mask[correct] = True
        tasks.append(
            SyntheticTask(
                task_id=f"task-{i:03d}",
                correct_mask=tuple(mask),
                difficulty=_DIFFICULTY_TAGS.get(count, f"{count}-correct"),
            )
        )
    return tasks
