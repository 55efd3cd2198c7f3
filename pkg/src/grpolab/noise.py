"""Seeded generation of latent true rewards and symmetric observation noise.

All randomness flows through counter-based Philox streams derived from a
single master seed, so every draw reproduces bit-for-bit across runs and
platforms. Streams are split per (step, task) so rollouts may execute
concurrently without sharing generator state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(x: int) -> int:
    """splitmix64 finalizer: a bijective 64-bit scrambler."""
    x = (x + _GAMMA) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


@dataclass(frozen=True)
class RngSeed:
    """Master seed for a run; the root of every derived stream."""

    seed: int

    def __post_init__(self) -> None:
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    def stream(self, *path: int) -> np.random.Generator:
        """Derive an independent Philox stream for an integer path.

        State transition, exactly: starting from ``state = seed``, each path
        component folds in as ``state = mix64(state ^ mix64(component))``,
        and the 128-bit Philox key is ``[mix64(state), mix64(state ^ GAMMA)]``
        where ``mix64`` is the splitmix64 finalizer and GAMMA its increment
        0x9E3779B97F4A7C15. Identical (seed, path) pairs yield identical
        streams on every platform; distinct paths yield independent ones.
        """
        state = self.seed
        for component in path:
            if not isinstance(component, (int, np.integer)) or component < 0:
                raise ValueError(f"stream path components must be non-negative integers, got {component!r}")
            state = _mix64(state ^ _mix64(int(component)))
        key = np.array([_mix64(state), _mix64(state ^ _GAMMA)], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class LatentRewardGroup:
    """True rewards, their noisy observations, and which entries flipped."""

    true_rewards: tuple[int, ...]
    observed_rewards: tuple[int, ...]
    flip_mask: tuple[bool, ...]
    p_injected: float

    def __post_init__(self) -> None:
        if not len(self.true_rewards) == len(self.observed_rewards) == len(self.flip_mask):
            raise ValueError("true_rewards, observed_rewards and flip_mask must have equal lengths")
        for true, observed, flipped in zip(self.true_rewards, self.observed_rewards, self.flip_mask):
            if true not in (0, 1) or observed not in (0, 1):
                raise ValueError("rewards must be exactly 0 or 1")
            if (true != observed) != flipped:
                raise ValueError("flip_mask must mark exactly the positions where observed != true")

    def __len__(self) -> int:
        return len(self.true_rewards)


def sample_true_rewards(success_prob: float, n: int, rng: np.random.Generator) -> list[int]:
    """Draw n i.i.d. Bernoulli(success_prob) latent rewards."""
    if not 0.0 <= success_prob <= 1.0:
        raise ValueError(f"success_prob must lie in [0, 1], got {success_prob}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [int(u < success_prob) for u in rng.random(n)]


def apply_symmetric_noise(
    true_rewards: Sequence[int], p: float, rng: np.random.Generator
) -> LatentRewardGroup:
    """Flip each reward independently with probability p.

    Always consumes len(true_rewards) uniforms from the stream, even at p=0,
    so downstream draws stay aligned across noise settings.
    """
    if not 0.0 <= p < 0.5:
        raise ValueError(f"flip probability must lie in [0, 0.5), got {p}")
    flips = rng.random(len(true_rewards)) < p
    true = tuple(int(r) for r in true_rewards)
    observed = tuple(r ^ 1 if f else r for r, f in zip(true, flips))
    return LatentRewardGroup(true, observed, tuple(bool(f) for f in flips), p)


def forward_mean(t: float, p: float) -> float:
    """Expected observed mean (1-p)t + p(1-t); inverse of the true-mean estimate."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if not 0.0 <= p < 0.5:
        raise ValueError(f"flip probability must lie in [0, 0.5), got {p}")
    return (1.0 - p) * t + p * (1.0 - t)
