"""Kernel tests: worked examples frozen against independent oracles, plus
property tests for the invariants the kernels must satisfy."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grpolab import (
    DEFAULT_EPSILON,
    Method,
    NoiseSpec,
    RewardGroup,
    compute_advantages,
    dr_grpo_weight,
    estimate_true_mean,
    forward_mean,
    group_stats,
    mismatch_deviation,
    optimal_weight,
    pos_neg_advantages,
    reward_covariance,
    standardized_advantages,
    surrogate_loss_in_w,
)

# Strategy for a non-degenerate (n, k) composition.
composition = st.integers(min_value=2, max_value=64).flatmap(
    lambda n: st.tuples(st.just(n), st.integers(min_value=1, max_value=n - 1))
)
noise_p = st.floats(min_value=0.0, max_value=0.49, allow_nan=False)


def brute_force_standardize(rewards, epsilon):
    """Independent oracle: direct mean/sigma evaluation in float64."""
    arr = np.asarray(rewards, dtype=np.float64)
    mean = arr.mean()
    sigma = math.sqrt(mean * (1.0 - mean) + epsilon)
    return ((arr - mean) / sigma).tolist() if sigma > 0 else [0.0] * len(rewards)


class TestRewardGroup:
    def test_rejects_short_group(self):
        with pytest.raises(ValueError):
            RewardGroup((1,))

    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            RewardGroup((1, 0, 2))
        with pytest.raises(ValueError):
            RewardGroup((1, 0.5, 0))

    def test_counts(self):
        group = RewardGroup([1, 0, 1, 1], task_id="t")
        assert (group.n, group.k) == (4, 3)


class TestGroupStats:
    def test_balanced_group(self):
        stats = group_stats(RewardGroup((1, 0, 1, 0)), epsilon=0.0)
        assert stats.mean == 0.5
        assert stats.sigma == 0.5

    def test_degenerate_group_epsilon_floor(self):
        stats = group_stats(RewardGroup((0, 0, 0, 0)), epsilon=1e-8)
        assert stats.mean == 0.0
        assert stats.sigma == pytest.approx(1e-4, abs=0.0)

    def test_unbalanced_group(self):
        stats = group_stats(RewardGroup((1, 0, 0, 0, 0, 0, 0, 0)), epsilon=0.0)
        assert stats.mean == 0.125
        assert stats.sigma == pytest.approx(math.sqrt(0.109375), rel=1e-12)

    def test_rejects_negative_epsilon(self):
        with pytest.raises(ValueError):
            group_stats(RewardGroup((1, 0)), epsilon=-1e-9)


class TestStandardizedAdvantages:
    def test_balanced(self):
        group = RewardGroup((1, 0, 1, 0))
        assert standardized_advantages(group, group_stats(group, 0.0)) == [1.0, -1.0, 1.0, -1.0]

    def test_constant_group_all_zero(self):
        group = RewardGroup((1, 1, 1, 1))
        assert standardized_advantages(group, group_stats(group, 1e-8)) == [0.0, 0.0, 0.0, 0.0]

    def test_unbalanced_matches_closed_forms(self):
        group = RewardGroup((1, 0, 0, 0, 0, 0, 0, 0))
        adv = standardized_advantages(group, group_stats(group, 0.0))
        assert adv[0] == pytest.approx(math.sqrt(7), rel=1e-12)
        assert adv[1] == pytest.approx(-1 / math.sqrt(7), rel=1e-12)
        assert adv == pytest.approx(brute_force_standardize(group.rewards, 0.0), rel=1e-12)

    def test_rejects_foreign_stats(self):
        group = RewardGroup((1, 0, 1, 0))
        other = group_stats(RewardGroup((1, 1, 1, 0)), 0.0)
        with pytest.raises(ValueError):
            standardized_advantages(group, other)

    @given(rewards=st.lists(st.integers(0, 1), min_size=2, max_size=64))
    def test_zero_mean(self, rewards):
        group = RewardGroup(tuple(rewards))
        adv = standardized_advantages(group, group_stats(group, DEFAULT_EPSILON))
        assert abs(sum(adv) / len(adv)) <= 1e-9

    @given(nk=composition)
    def test_near_unit_variance(self, nk):
        n, k = nk
        group = RewardGroup((1,) * k + (0,) * (n - k))
        adv = standardized_advantages(group, group_stats(group, 1e-8))
        var = float(np.var(adv))
        assert 1.0 - 1e-4 <= var <= 1.0


class TestPosNegAdvantages:
    def test_balanced_sixteen(self):
        assert pos_neg_advantages(16, 8) == (1.0, -1.0)

    def test_balanced_eight(self):
        assert pos_neg_advantages(8, 4) == (1.0, -1.0)

    def test_single_success(self):
        a_pos, a_neg = pos_neg_advantages(8, 1)
        assert a_pos == pytest.approx(2.645751, abs=1e-6)
        assert a_neg == pytest.approx(-0.377964, abs=1e-6)

    def test_rejects_constant_compositions(self):
        with pytest.raises(ValueError):
            pos_neg_advantages(8, 0)
        with pytest.raises(ValueError):
            pos_neg_advantages(8, 8)

    @given(nk=composition)
    def test_matches_standardization(self, nk):
        n, k = nk
        a_pos, a_neg = pos_neg_advantages(n, k)
        expected = brute_force_standardize((1,) * k + (0,) * (n - k), 0.0)
        assert a_pos == pytest.approx(expected[0], rel=1e-9)
        assert a_neg == pytest.approx(expected[-1], rel=1e-9)


def brute_force_deviation(n, k):
    """Independent oracle: deviation between the observed group (k successes,
    one of them false) and the corrected group, from directly standardized
    values with a tiny epsilon floor for constant groups. The mismatch sample
    moves from the positive class to the corrected negative class; the other
    k-1 positives and n-k negatives keep their class."""
    eps = 1e-30
    observed = brute_force_standardize((1,) * k + (0,) * (n - k), eps)
    corrected = brute_force_standardize((1,) * (k - 1) + (0,) * (n - k + 1), eps)
    obs_pos, obs_neg = observed[0], observed[-1]
    cor_pos, cor_neg = corrected[0], corrected[-1]
    mismatch = abs(obs_pos - cor_neg)
    true_pos = (k - 1) * abs(obs_pos - cor_pos) if k >= 2 else 0.0
    true_neg = (n - k) * abs(obs_neg - cor_neg) if k < n else 0.0
    return mismatch + true_pos + true_neg


class TestMismatchDeviation:
    def test_balanced_eight(self):
        rep = mismatch_deviation(8, 4)
        assert rep.mismatch_term == pytest.approx(1.774597, abs=1e-6)
        assert rep.true_pos_term == pytest.approx(0.872983, abs=1e-6)
        assert rep.true_neg_term == pytest.approx(0.901613, abs=1e-6)
        assert rep.total == pytest.approx(3.549193, abs=1e-6)
        assert rep.total == pytest.approx(brute_force_deviation(8, 4), rel=1e-9)

    def test_single_success_degenerate_truth(self):
        rep = mismatch_deviation(8, 1)
        assert rep.a_pos_true == 0.0 and rep.a_neg_true == 0.0
        assert rep.mismatch_term == pytest.approx(2.645751, abs=1e-6)
        assert rep.true_pos_term == 0.0
        assert rep.total == pytest.approx(5.291503, abs=1e-6)
        assert rep.total == pytest.approx(brute_force_deviation(8, 1), rel=1e-9)

    def test_u_shape_sixteen(self):
        totals = {k: mismatch_deviation(16, k).total for k in range(1, 16)}
        assert min(totals, key=totals.get) == 8
        assert totals[2] > totals[8]
        assert totals[15] > totals[8]

    def test_rejects_k_zero(self):
        with pytest.raises(ValueError):
            mismatch_deviation(8, 0)

    def test_all_observed_positive(self):
        rep = mismatch_deviation(8, 8)
        assert rep.a_pos == 0.0 and rep.a_neg == 0.0
        assert rep.total == pytest.approx(brute_force_deviation(8, 8), rel=1e-9)

    @given(nk=composition)
    def test_total_is_sum_of_terms(self, nk):
        n, k = nk
        rep = mismatch_deviation(n, k)
        assert rep.total == pytest.approx(
            rep.mismatch_term + rep.true_pos_term + rep.true_neg_term, abs=1e-9
        )
        assert min(rep.mismatch_term, rep.true_pos_term, rep.true_neg_term) >= 0.0


class TestEstimateTrueMean:
    def test_boundary_is_exact_not_clipped(self):
        est = estimate_true_mean(0.2, NoiseSpec(p=0.2))
        assert est.t == 0.0
        assert not est.clipped

    def test_half_is_fixed_point(self):
        for p in (0.0, 0.1, 0.25, 0.49):
            assert estimate_true_mean(0.5, NoiseSpec(p=p)).t == pytest.approx(0.5, abs=1e-12)

    def test_affine_inversion(self):
        est = estimate_true_mean(0.6, NoiseSpec(p=0.1))
        assert est.t == pytest.approx(0.625, abs=1e-12)
        assert forward_mean(est.t, 0.1) == pytest.approx(0.6, abs=1e-12)

    def test_clipped_flag(self):
        assert estimate_true_mean(0.1, NoiseSpec(p=0.2)).clipped
        assert estimate_true_mean(0.95, NoiseSpec(p=0.2)).clipped
        assert not estimate_true_mean(0.5, NoiseSpec(p=0.2)).clipped

    def test_rejects_out_of_range_mean(self):
        with pytest.raises(ValueError):
            estimate_true_mean(1.5, NoiseSpec(p=0.1))


class TestNoiseSpec:
    def test_rejects_half_and_above(self):
        with pytest.raises(ValueError):
            NoiseSpec(p=0.5)
        with pytest.raises(ValueError):
            NoiseSpec(p=-0.01)

    def test_rejects_non_positive_epsilon(self):
        with pytest.raises(ValueError):
            NoiseSpec(p=0.1, epsilon=0.0)


class TestOptimalWeight:
    def test_gated_composition(self):
        assert optimal_weight(16, 3, NoiseSpec(p=0.20)) == 0.0

    def test_noiseless_balanced_is_one(self):
        w = optimal_weight(8, 4, NoiseSpec(p=0.0, epsilon=1e-8))
        assert abs(w - 1.0) <= 1e-6

    def test_balanced_equals_attenuation_bound(self):
        w = optimal_weight(8, 4, NoiseSpec(p=0.1, epsilon=1e-15))
        assert w == pytest.approx(0.8, abs=1e-9)

    @given(nk=composition, p=noise_p)
    def test_symmetry_in_k(self, nk, p):
        n, k = nk
        noise = NoiseSpec(p=p)
        assert optimal_weight(n, k, noise) == pytest.approx(
            optimal_weight(n, n - k, noise), abs=1e-12
        )

    @given(n=st.integers(2, 64), k=st.integers(0, 64), p=noise_p)
    def test_bound(self, n, k, p):
        k = min(k, n)
        w = optimal_weight(n, k, NoiseSpec(p=p))
        assert 0.0 <= w <= 1.0 - 2.0 * p + 1e-12

    @given(nk=composition, p=noise_p)
    def test_gating_is_exact(self, nk, p):
        n, k = nk
        w = optimal_weight(n, k, NoiseSpec(p=p))
        mean = k / n
        if mean <= p or mean >= 1.0 - p:
            assert w == 0.0
        else:
            assert w > 0.0

    @given(nk=composition)
    @settings(max_examples=50)
    def test_monotone_attenuation_in_p(self, nk):
        n, k = nk
        grid = [i * 0.49 / 40 for i in range(41)]
        weights = [optimal_weight(n, k, NoiseSpec(p=p)) for p in grid]
        assert all(a >= b - 1e-12 for a, b in zip(weights, weights[1:]))

    @given(nk=composition)
    def test_noiseless_recovery_bound(self, nk):
        n, k = nk
        eps = 1e-8
        mean = k / n
        w = optimal_weight(n, k, NoiseSpec(p=0.0, epsilon=eps))
        assert abs(w - 1.0) <= 10.0 * eps / (mean * (1.0 - mean))


class TestDrGrpoWeight:
    def test_balanced_is_max(self):
        assert dr_grpo_weight(16, 8, epsilon=0.0) == 0.5
        grid = [dr_grpo_weight(16, k, epsilon=0.0) for k in range(17)]
        assert max(grid) == 0.5

    def test_plot_scaling(self):
        assert dr_grpo_weight(16, 8, plot_scale=0.9) == pytest.approx(0.9, abs=1e-12)

    def test_unbalanced_value(self):
        assert dr_grpo_weight(16, 2, epsilon=0.0) == pytest.approx(math.sqrt(0.125 * 0.875), rel=1e-12)


class TestComputeAdvantages:
    def test_grpo_balanced(self):
        result = compute_advantages(RewardGroup((1, 0, 1, 0)), Method.GRPO, NoiseSpec(p=0.0))
        assert result.weight == 1.0
        assert result.advantages == pytest.approx([1.0, -1.0, 1.0, -1.0], abs=1e-7)

    def test_sgrpo_gated_group_is_silent(self):
        group = RewardGroup((1,) * 3 + (0,) * 13)
        result = compute_advantages(group, Method.S_GRPO, NoiseSpec(p=0.2))
        assert result.weight == 0.0
        assert all(result.weight * a == 0.0 for a in result.advantages)

    def test_dr_grpo_recovers_mean_subtracted_reward(self):
        group = RewardGroup((1, 0, 1, 0))
        stats = group_stats(group, epsilon=0.0)
        weight = dr_grpo_weight(group.n, group.k, epsilon=0.0)
        adv = standardized_advantages(group, stats)
        assert [weight * a for a in adv] == [0.5, -0.5, 0.5, -0.5]
        # default epsilon keeps the identity within the floor-induced slack
        result = compute_advantages(group, Method.DR_GRPO, NoiseSpec(p=0.0))
        effective = [result.weight * a for a in result.advantages]
        assert effective == pytest.approx([0.5, -0.5, 0.5, -0.5], abs=1e-9)

    @given(
        rewards=st.lists(st.integers(0, 1), min_size=2, max_size=32),
        method=st.sampled_from(list(Method)),
        p=noise_p,
        data=st.data(),
    )
    def test_permutation_equivariance(self, rewards, method, p, data):
        perm = data.draw(st.permutations(range(len(rewards))))
        noise = NoiseSpec(p=p)
        base = compute_advantages(RewardGroup(tuple(rewards)), method, noise)
        shuffled = compute_advantages(
            RewardGroup(tuple(rewards[i] for i in perm)), method, noise
        )
        assert shuffled.weight == base.weight
        assert shuffled.advantages == tuple(base.advantages[i] for i in perm)


class TestSurrogateLossInW:
    def test_zero_weight(self):
        assert surrogate_loss_in_w(0.0, 0.3) == 1.0

    def test_minimum_at_covariance(self):
        for cov in (0.2, 0.5, 0.8):
            assert surrogate_loss_in_w(cov, cov) == pytest.approx(1.0 - cov * cov, abs=1e-12)

    def test_grid_scan_minimum(self):
        cov = 0.8
        assert surrogate_loss_in_w(0.8, cov) == pytest.approx(0.36, abs=1e-12)
        assert surrogate_loss_in_w(0.8, cov) < surrogate_loss_in_w(0.7, cov) == pytest.approx(0.37, abs=1e-12)
        assert surrogate_loss_in_w(0.8, cov) < surrogate_loss_in_w(0.9, cov) == pytest.approx(0.37, abs=1e-12)
        grid = [i * 0.01 for i in range(101)]
        assert min(grid, key=lambda w: surrogate_loss_in_w(w, cov)) == pytest.approx(0.8)


class TestRewardCovariance:
    def test_deterministic_truth_has_no_covariance(self):
        assert reward_covariance(0.0, NoiseSpec(p=0.1)) == 0.0
        assert reward_covariance(1.0, NoiseSpec(p=0.1)) == 0.0

    def test_covariance_vanishes_toward_pure_noise(self):
        values = [reward_covariance(0.5, NoiseSpec(p=p)) for p in (0.4, 0.45, 0.49, 0.499)]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert values[-1] < 1e-3

    def test_four_outcome_enumeration(self):
        t, p = 0.5, 0.1
        assert reward_covariance(t, NoiseSpec(p=p)) == pytest.approx(0.2, abs=1e-12)
        # exhaustive joint: P(r*=1) = t, observed flips with probability p
        e_joint = t * (1 - p)
        e_obs = (1 - p) * t + p * (1 - t)
        assert reward_covariance(t, NoiseSpec(p=p)) == pytest.approx(
            e_joint - e_obs * t, abs=1e-12
        )
