import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pmc_adapt.errors import DegeneratePair, NonMonotone, WrongDimension
from pmc_adapt.kernels import DiscreteKernel, KernelFamily, make_independent_kernel, make_rw_normal_kernel
from pmc_adapt.kullback import (
    MonteCarloEvaluator,
    PairSample,
    divergence_surface,
    entropy_criterion,
    f_update,
    fixed_point_iterate,
    pairs_from_weighted_sample,
    sample_pairs,
)
from pmc_adapt.oracle import DiscreteInstance, ExactEvaluator, exact_alpha_max, exact_entropy, exact_f
from pmc_adapt.rng import RngStream
from pmc_adapt.targets import make_mvn_target

from conftest import VALID_FIXTURES

SYM = DiscreteInstance.from_lists([0.5, 0.5], [[[0.9, 0.1], [0.1, 0.9]], [[0.1, 0.9], [0.9, 0.1]]])
TARGET = make_mvn_target([0.0, 0.0], [[2.0, 0.5], [0.5, 1.0]])


def enumerated_pairs(inst):
    omega, _, xs, ys = inst.support_pairs()
    return PairSample(xs, ys, omega / omega.sum())


def random_starts(D, n, seed):
    u = -np.log(RngStream(seed).uniform(n, D))
    return u / u.sum(axis=1, keepdims=True)


class TestCriterion:
    def test_single_kernel(self):
        k = make_rw_normal_kernel(np.eye(2))
        pairs = sample_pairs(TARGET, 2000, RngStream(0))
        expected = np.mean(k.log_density(pairs.x, pairs.y))
        assert entropy_criterion(pairs, KernelFamily([k]), [1.0]) == pytest.approx(expected, rel=1e-12)

    def test_perfect_kernels(self):
        fam = KernelFamily([make_independent_kernel(TARGET)] * 3)
        pairs = sample_pairs(TARGET, 2000, RngStream(1))
        expected = np.mean(TARGET.log_density(pairs.y))
        assert entropy_criterion(pairs, fam, [0.2, 0.3, 0.5]) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("name", VALID_FIXTURES)
    def test_exact_enumeration(self, instance, name):
        inst = instance(name)
        pairs = enumerated_pairs(inst)
        a = random_starts(inst.D, 1, 3)[0]
        assert entropy_criterion(pairs, inst.family(), a) == pytest.approx(exact_entropy(inst, a), abs=1e-12)
        np.testing.assert_allclose(f_update(pairs, inst.family(), a), exact_f(inst, a), atol=1e-12)

    def test_four_pair_f(self):
        pairs = enumerated_pairs(SYM)
        np.testing.assert_allclose(f_update(pairs, SYM.family(), [0.3, 0.7]), exact_f(SYM, [0.3, 0.7]), atol=1e-12)

    def test_f_single_and_identical(self):
        pairs = sample_pairs(TARGET, 500, RngStream(2))
        k = make_rw_normal_kernel(np.eye(2))
        np.testing.assert_array_equal(f_update(pairs, KernelFamily([k]), [1.0]), [1.0])
        a = np.array([0.1, 0.6, 0.3])
        np.testing.assert_allclose(f_update(pairs, KernelFamily([k, k, k]), a), a, atol=1e-15)

    def test_degenerate_pair(self):
        fam = KernelFamily([DiscreteKernel([[1.0, 0.0], [0.0, 1.0]])])
        with pytest.raises(DegeneratePair):
            entropy_criterion(PairSample(np.array([0]), np.array([1])), fam, [1.0])

    @given(st.permutations(list(range(40))))
    @settings(max_examples=25, deadline=None)
    def test_order_independent(self, perm):
        inst = DiscreteInstance.from_lists([0.2, 0.3, 0.5], [np.full((3, 3), 1 / 3), [[0.7, 0.2, 0.1], [0.1, 0.7, 0.2], [0.2, 0.1, 0.7]]])
        pairs = sample_pairs(inst.target(), 40, RngStream(5))
        perm = np.array(perm)
        shuffled = PairSample(pairs.x[perm], pairs.y[perm])
        a = [0.35, 0.65]
        assert entropy_criterion(shuffled, inst.family(), a) == entropy_criterion(pairs, inst.family(), a)
        np.testing.assert_array_equal(f_update(shuffled, inst.family(), a), f_update(pairs, inst.family(), a))


class TestWeightedPairs:
    def test_product_weights(self):
        pts = np.arange(5.0)[:, None]
        w = np.array([0.1, 0.2, 0.3, 0.4, 0.0])
        pairs = pairs_from_weighted_sample(pts, w, RngStream(0))
        expected = w * w[pairs.y[:, 0].astype(int)]
        np.testing.assert_allclose(pairs.weights, expected / expected.sum())

    def test_evaluator_drops_zero_weight_pairs(self):
        fam = KernelFamily([make_rw_normal_kernel(np.eye(1))])
        pairs = PairSample(np.zeros((3, 1)), np.array([[0.0], [1.0], [2.0]]), np.array([0.5, 0.5, 0.0]))
        ev = MonteCarloEvaluator(pairs, fam)
        expected = 0.5 * (fam[0].log_density(np.zeros((1, 1)), np.zeros((1, 1)))[0] + fam[0].log_density(np.zeros((1, 1)), np.ones((1, 1)))[0])
        assert ev.entropy([1.0]) == pytest.approx(expected)


class TestFixedPoint:
    def test_identical_kernels(self):
        k = DiscreteKernel([[0.6, 0.4], [0.3, 0.7]])
        inst = DiscreteInstance.from_lists([0.5, 0.5], [k.matrix, k.matrix])
        res = fixed_point_iterate(ExactEvaluator(inst), [0.3, 0.7])
        assert res.converged and len(res.alphas) == 2
        np.testing.assert_allclose(res.alphas[-1], [0.3, 0.7], atol=1e-15)

    def test_symmetric_limit(self):
        res = fixed_point_iterate(ExactEvaluator(SYM), [0.2, 0.8])
        assert res.converged
        np.testing.assert_allclose(res.alphas[-1], [0.5, 0.5], atol=1e-8)

    @pytest.mark.parametrize("name", ["two_state_asymmetric", "three_state_d3", "eight_state_d4"])
    def test_multi_start(self, instance, name):
        inst = instance(name)
        target = exact_alpha_max(inst)
        for a0 in random_starts(inst.D, 10, 17):
            res = fixed_point_iterate(ExactEvaluator(inst), a0, max_iter=100000, tol=1e-13)
            assert res.converged
            np.testing.assert_allclose(res.alphas[-1], target, atol=1e-8)
            assert np.all(np.diff(res.entropies) >= -1e-12)

    def test_monte_carlo_matches_exact_enumeration(self, instance):
        inst = instance("two_state_asymmetric")
        ev = MonteCarloEvaluator(enumerated_pairs(inst), inst.family())
        res = fixed_point_iterate(ev, [0.5, 0.5], max_iter=100000, tol=1e-13)
        np.testing.assert_allclose(res.alphas[-1], exact_alpha_max(inst), atol=1e-8)

    def test_non_monotone_detected(self):
        class Broken:
            exact = True

            def entropy(self, a):
                return -a[0]

            def f(self, a):
                return np.array([0.9, 0.1])

        with pytest.raises(NonMonotone):
            fixed_point_iterate(Broken(), [0.5, 0.5])

    def test_boundary_start_rejected(self):
        with pytest.raises(ValueError):
            fixed_point_iterate(ExactEvaluator(SYM), [0.0, 1.0])

    def test_max_iter(self, instance):
        res = fixed_point_iterate(ExactEvaluator(instance("eight_state_d4")), [0.25] * 4, max_iter=2, tol=1e-15)
        assert not res.converged and len(res.alphas) == 3


class TestSurface:
    def test_perfect_kernels_flat(self):
        fam = KernelFamily([make_independent_kernel(TARGET)] * 3)
        surf = divergence_surface(5, sample_pairs(TARGET, 1000, RngStream(3)), fam, TARGET)
        np.testing.assert_allclose(surf.divergence, 0.0, atol=1e-12)
        assert not surf.offset_unknown

    def test_resolution_two(self):
        fam = KernelFamily([make_rw_normal_kernel(np.eye(2) * s) for s in (0.5, 1.0, 2.0)])
        surf = divergence_surface(2, sample_pairs(TARGET, 200, RngStream(4)), fam, TARGET)
        assert surf.alphas.shape == (6, 3)

    def test_offset_unknown_keeps_minimizer(self):
        fam = KernelFamily([make_rw_normal_kernel(np.eye(2) * s) for s in (0.1, 1.0, 20.0)])
        pairs = sample_pairs(TARGET, 2000, RngStream(5))
        a = divergence_surface(10, pairs, fam, TARGET)
        b = divergence_surface(10, pairs, fam, None)
        assert b.offset_unknown
        np.testing.assert_array_equal(a.argmin(), b.argmin())
        np.testing.assert_allclose(a.divergence - b.divergence, (a.divergence - b.divergence)[0], atol=1e-10)

    def test_nonnegative_for_normalized_target(self):
        fam = KernelFamily([make_rw_normal_kernel(np.eye(2) * s) for s in (0.1, 1.0, 20.0)])
        surf = divergence_surface(10, sample_pairs(TARGET, 5000, RngStream(6)), fam, TARGET)
        assert (surf.divergence > -0.05).all()

    def test_wrong_dimension(self):
        fam = KernelFamily([make_rw_normal_kernel(np.eye(2))] * 2)
        with pytest.raises(WrongDimension):
            divergence_surface(4, sample_pairs(TARGET, 10, RngStream(0)), fam)
