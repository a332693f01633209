"""Oracle self-consistency: enumeration, pushforward, and MI numerics."""

import math

import numpy as np
import pytest

from repunif.distributions import InstanceSpec, Pmf, make_instance, tv_distance
from repunif.exact import (
    brute_force_mean_statistic,
    exact_mean_tv,
    exact_pushforward,
    mutual_info_pair,
    pair_joint,
    rational_pmfs,
    reduction_check,
)
from repunif.rng import stream
from repunif.stats import collision_statistic, tv_statistic


def uniform(n):
    return make_instance(InstanceSpec.uniform(), n)


class TestBruteForce:
    def test_uniform_examples(self):
        assert brute_force_mean_statistic(uniform(2), 2, tv_statistic) == pytest.approx(0.25, abs=1e-15)
        assert brute_force_mean_statistic(uniform(3), 1, tv_statistic) == pytest.approx(2 / 3, abs=1e-15)

    def test_point_mass(self):
        p = make_instance(InstanceSpec.heavy(1.0), 6)
        for m in (1, 3, 5):
            assert brute_force_mean_statistic(p, m, tv_statistic) == pytest.approx(1 - 1 / 6, abs=1e-15)

    def test_symmetric_and_ordered_paths_agree(self):
        rng = stream(55, 0)
        for _ in range(5):
            n = int(rng.integers(2, 4))
            m = int(rng.integers(1, 5))
            raw = rng.random(n) + 0.05
            p = Pmf(raw / raw.sum())
            sym = brute_force_mean_statistic(p, m, tv_statistic, assume_symmetric=True)
            ordered = brute_force_mean_statistic(p, m, tv_statistic, assume_symmetric=False)
            assert sym == pytest.approx(ordered, abs=1e-13)

    def test_enumeration_guard(self):
        with pytest.raises(ValueError):
            brute_force_mean_statistic(uniform(100), 100, tv_statistic)
        with pytest.raises(ValueError):
            brute_force_mean_statistic(uniform(10), 10, tv_statistic, assume_symmetric=False)

    def test_collision_mean_known_formula(self):
        # E[collisions] = C(m,2) * sum p_i^2
        p = Pmf(np.array([0.5, 0.3, 0.2]))
        m = 4
        expected = math.comb(m, 2) * float(np.sum(p.probs**2))
        assert brute_force_mean_statistic(p, m, collision_statistic) == pytest.approx(expected, abs=1e-12)

    def test_marginal_oracle_agrees(self):
        rng = stream(56, 0)
        for _ in range(5):
            n = int(rng.integers(2, 5))
            m = int(rng.integers(1, 6))
            raw = rng.random(n) + 0.05
            p = Pmf(raw / raw.sum())
            assert exact_mean_tv(p, m) == pytest.approx(
                brute_force_mean_statistic(p, m, tv_statistic), abs=1e-12
            )


class TestPushforward:
    def test_uniform_2_maps_to_uniform_12(self):
        push = exact_pushforward(uniform(2), uniform(2))
        assert np.max(np.abs(push.probs - 1 / 12)) <= 1e-15

    def test_single_element_domain(self):
        push = exact_pushforward(uniform(1), uniform(1))
        assert push.n == 6
        assert np.max(np.abs(push.probs - 1 / 6)) <= 1e-15

    def test_far_pair_margin(self):
        q = Pmf(np.array([0.75, 0.25]))
        p = Pmf(np.array([0.25, 0.75]))
        push = exact_pushforward(q, p)
        dist = tv_distance(push, uniform(12))
        assert dist == pytest.approx(7 / 30, abs=1e-12)
        assert dist >= tv_distance(p, q) / 3 - 1e-12

    def test_total_mass_one(self):
        rng = stream(57, 0)
        for _ in range(10):
            n = int(rng.integers(1, 6))
            raw_q = rng.random(n) + 0.02
            raw_p = rng.random(n) + 0.02
            q = Pmf(raw_q / raw_q.sum())
            p = Pmf(raw_p / raw_p.sum())
            push = exact_pushforward(q, p)
            assert push.n == 6 * n
            assert math.fsum(push.probs.tolist()) == pytest.approx(1.0, abs=1e-12)

    def test_mismatched_domains(self):
        with pytest.raises(ValueError):
            exact_pushforward(uniform(2), uniform(3))

    def test_rational_family_enumeration(self):
        fam = rational_pmfs(2, 4)
        # denominators 1..4 on two elements: 0,1/4,1/3,1/2,2/3,3/4,1 as first entry
        firsts = sorted(set(float(p.probs[0]) for p in fam))
        assert firsts == pytest.approx([0, 0.25, 1 / 3, 0.5, 2 / 3, 0.75, 1.0])

    def test_small_scan_passes(self):
        scan = reduction_check(2, 6)
        assert scan.passed
        assert scan.max_uniform_error <= 1e-12
        assert scan.min_margin >= -1e-12


class TestPairJoint:
    def test_equal_biases_give_identical_conditionals(self):
        d = pair_joint(0.7, 0.15, 0.15)
        assert np.array_equal(d.joint[0], d.joint[1])

    def test_zero_bias_is_independent_poissons(self):
        d = pair_joint(1.0, 0.0, 0.0)
        a = np.arange(d.truncation + 1)
        expected = np.exp(-2.0) / np.outer(
            np.array([math.factorial(int(x)) for x in a], dtype=float),
            np.array([math.factorial(int(x)) for x in a], dtype=float),
        )
        assert np.allclose(d.joint[0], expected, rtol=1e-10, atol=1e-300)

    def test_marginals_are_poisson_mixtures(self):
        from scipy import stats as sps

        lam, eps = 0.8, 0.3
        d = pair_joint(lam, 0.1, eps)
        a = np.arange(d.truncation + 1)
        mix = 0.5 * (sps.poisson.pmf(a, lam * (1 + eps)) + sps.poisson.pmf(a, lam * (1 - eps)))
        row_marginal = d.joint[1].sum(axis=1)
        assert np.allclose(row_marginal, mix, atol=1e-13)
        col_marginal = d.joint[1].sum(axis=0)
        assert np.allclose(col_marginal, mix, atol=1e-13)

    def test_tail_mass_under_tolerance(self):
        d = pair_joint(1.0, 0.05, 0.2, tail_tol=1e-14)
        assert 0 <= d.tail_mass <= 1e-14
        for j in d.joint:
            assert abs(j.sum() - (1 - d.tail_mass)) <= 1e-13

    def test_truncation_cap(self):
        with pytest.raises(ValueError):
            pair_joint(10**6, 0.0, 0.1, tail_tol=1e-300)

    def test_validates_inputs(self):
        with pytest.raises(ValueError):
            pair_joint(1.0, 0.3, 0.2)
        with pytest.raises(ValueError):
            pair_joint(0.0, 0.1, 0.2)


class TestMutualInfo:
    def test_zero_delta_is_exactly_zero(self):
        mi = mutual_info_pair(pair_joint(0.5, 0.2, 0.2))
        assert mi.value == 0.0
        assert mi.error_budget <= 1e-12

    def test_nonnegative_and_below_one_bit(self):
        for lam in (0.2, 1.0):
            for pair in ((0.0, 0.3), (0.1, 0.2)):
                mi = mutual_info_pair(pair_joint(lam, *pair))
                assert 0.0 <= mi.value <= math.log(2)

    def test_monotone_in_delta(self):
        lam, eps = 0.6, 0.25
        values = [
            mutual_info_pair(pair_joint(lam, eps - delta, eps)).value
            for delta in (0.0, 0.01, 0.02, 0.05, 0.1)
        ]
        assert values == sorted(values)

    def test_quadratic_scaling_spot(self):
        lam, eps, delta = 0.5, 0.2, 0.02
        full = mutual_info_pair(pair_joint(lam, eps - delta, eps)).value
        half_delta = mutual_info_pair(pair_joint(lam, eps - delta / 2, eps)).value
        half_lam = mutual_info_pair(pair_joint(lam / 2, eps - delta, eps)).value
        assert 2.5 <= full / half_delta <= 6.0
        assert 2.5 <= full / half_lam <= 6.0

    def test_bound_rhs_uses_caller_constant(self):
        d = pair_joint(0.5, 0.1, 0.2)
        mi = mutual_info_pair(d, bound_const=3.0)
        assert mi.bound_rhs == pytest.approx(3.0 * (0.2 * 0.1 * 0.5) ** 2)
