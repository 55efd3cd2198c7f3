"""Independent checks for the weighting kernels.

The Monte-Carlo scan and the exhaustive enumeration here deliberately avoid
the closed forms they are checking: the scan locates the best group weight
by brute-force grid search over simulated reward pairs, and the covariance
check sums the exact four-outcome joint distribution.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .advantage import DEFAULT_EPSILON, NoiseSpec, optimal_weight_from_mean, reward_covariance
from .noise import RngSeed, forward_mean


@dataclass(frozen=True)
class WeightScanResult:
    """Grid-scan minimizer of the empirical reweighting loss vs. the closed form."""

    t: float
    p: float
    scanned_w: float
    predicted_w: float
    samples: int

    @property
    def gap(self) -> float:
        return abs(self.scanned_w - self.predicted_w)


def mc_weight_scan(
    t: float,
    p: float,
    samples: int = 1_000_000,
    grid_step: float = 0.01,
    epsilon: float = DEFAULT_EPSILON,
    seed: RngSeed = RngSeed(0x0DDC0FFEE),
) -> WeightScanResult:
    """Locate argmin_w of the empirical E[(w a - a*)^2] by grid scan.

    Simulates latent Bernoulli(t) rewards, flips each with probability p, and
    standardizes both sides with their population parameters. The scan covers
    w in [0, 1] at grid_step resolution.
    """
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    noise = NoiseSpec(p=p, epsilon=epsilon)
    stream = seed.stream(int(t * 1_000_000), int(p * 1_000_000))
    r_true = stream.random(samples) < t
    flips = stream.random(samples) < p
    r_obs = np.logical_xor(r_true, flips)

    mean_obs = forward_mean(t, p)
    sigma_r = np.sqrt(mean_obs * (1.0 - mean_obs) + epsilon)
    sigma_t = np.sqrt(t * (1.0 - t) + epsilon)
    a = (r_obs.astype(np.float64) - mean_obs) / sigma_r
    a_star = (r_true.astype(np.float64) - t) / sigma_t

    grid = np.arange(0.0, 1.0 + grid_step / 2, grid_step)
    losses = np.array([np.mean((w * a - a_star) ** 2) for w in grid])
    scanned = float(grid[int(np.argmin(losses))])
    predicted = optimal_weight_from_mean(mean_obs, noise)
    return WeightScanResult(t=t, p=p, scanned_w=scanned, predicted_w=predicted, samples=samples)


def enumerated_reward_covariance(t: float, p: float) -> float:
    """Cov(observed, true) summed over the exact four-outcome joint distribution."""
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    if not 0.0 <= p < 0.5:
        raise ValueError(f"flip probability must lie in [0, 0.5), got {p}")
    e_joint = 0.0
    e_obs = 0.0
    e_true = 0.0
    for r_true in (0, 1):
        for flip in (0, 1):
            prob = (t if r_true else 1.0 - t) * (p if flip else 1.0 - p)
            r_obs = r_true ^ flip
            e_joint += prob * r_obs * r_true
            e_obs += prob * r_obs
            e_true += prob * r_true
    return e_joint - e_obs * e_true


def covariance_grid_error(
    t_values: Sequence[float], p_values: Sequence[float], epsilon: float = DEFAULT_EPSILON
) -> float:
    """Max |closed form - enumeration| of the reward covariance over a (t, p) grid."""
    worst = 0.0
    for t in t_values:
        for p in p_values:
            closed = reward_covariance(t, NoiseSpec(p=p, epsilon=epsilon))
            worst = max(worst, abs(closed - enumerated_reward_covariance(t, p)))
    return worst
