import numpy as np
import pytest
from numpy.testing import assert_allclose

from homarkov import (
    Alphabet,
    HigherOrderChain,
    JointDistribution,
    MultipleRecurrentClassesError,
    fill_choice_instance,
    invariant_set,
    is_invariant,
    pair_marginal_consistency,
    stationary_first_order,
    two_class_chain,
    unvisited_state_chain,
)

from oracles import nullspace_dim


class TestStationaryFirstOrder:
    def test_column_pattern_chain(self):
        # all rows equal forces pi to equal the common row
        a = Alphabet(("1", "2", "3"))
        rows = np.array([[0.0, 0.5, 0.5]] * 3)
        pi = stationary_first_order(HigherOrderChain(a, 1, rows))
        assert_allclose(pi.mass, [0.0, 0.5, 0.5], atol=1e-12)

    def test_unvisited_state_exact_zero(self):
        pi = stationary_first_order(unvisited_state_chain())
        assert abs(pi.mass[0]) < 1e-12
        assert_allclose(pi.mass, [0.0, 3 / 8, 5 / 8], atol=1e-12)

    def test_identity_raises_named_error(self):
        a = Alphabet(("u", "v"))
        chain = HigherOrderChain(a, 1, np.eye(2))
        with pytest.raises(MultipleRecurrentClassesError) as exc:
            stationary_first_order(chain)
        msg = str(exc.value)
        assert "not unique" in msg and "2 recurrent classes" in msg
        assert "u" in msg and "v" in msg

    def test_rejects_higher_order(self):
        with pytest.raises(ValueError):
            stationary_first_order(two_class_chain())

    @pytest.mark.parametrize("seed", range(10))
    def test_fixed_point_property(self, seed):
        rng = np.random.default_rng(seed)
        m = int(rng.integers(2, 6))
        rows = rng.uniform(0.05, 1.0, size=(m, m))
        rows /= rows.sum(axis=1, keepdims=True)
        a = Alphabet(tuple(str(i) for i in range(m)))
        chain = HigherOrderChain(a, 1, rows)
        pi = stationary_first_order(chain)
        assert_allclose(pi.mass @ rows, pi.mass, atol=1e-12)
        assert pi.mass.min() >= 0
        assert abs(pi.mass.sum() - 1.0) < 1e-12


class TestInvariantSet:
    def test_two_class_extreme_points(self):
        points = invariant_set(two_class_chain())
        assert len(points) == 2
        s = 1.0 / 7.0
        expect_a = np.zeros(16)
        expect_a[[1, 6, 8, 11, 12]] = [2 * s, 2 * s, s, s, s]
        expect_b = np.zeros(16)
        expect_b[[2, 3, 4, 9, 14]] = [s, s, 2 * s, 2 * s, s]
        assert_allclose(points[0].mass, expect_a, atol=1e-12)
        assert_allclose(points[1].mass, expect_b, atol=1e-12)
        for p in points:
            assert is_invariant(two_class_chain(), p, tol=1e-9)

    def test_unique_when_single_class(self):
        chain, _ = fill_choice_instance()
        # the base chain is order 1 and irreducible
        points = invariant_set(chain)
        assert len(points) == 1
        assert_allclose(points[0].mass, [3 / 13, 5 / 13, 5 / 13], atol=1e-12)

    def test_count_matches_nullspace_dimension(self):
        from homarkov import lift

        for chain in (two_class_chain(), unvisited_state_chain()):
            p = np.array(lift(chain).transitions)
            dim = nullspace_dim(p.T - np.eye(len(p)))
            assert len(invariant_set(chain)) == dim

    def test_points_are_extreme_not_mixtures(self):
        points = invariant_set(two_class_chain())
        supports = [set(p.support()) for p in points]
        assert supports[0].isdisjoint(supports[1])


class TestIsInvariant:
    def test_true_on_exact_point(self):
        chain = unvisited_state_chain()
        pi = stationary_first_order(chain)
        assert is_invariant(chain, pi)

    def test_false_after_perturbation(self):
        chain = two_class_chain()
        point = invariant_set(chain)[0]
        mass = np.array(point.mass)
        mass[1] += 0.01
        mass[6] -= 0.01
        moved = JointDistribution(chain.alphabet, 2, mass)
        assert not is_invariant(chain, moved, tol=1e-6)

    def test_arity_mismatch_raises(self):
        chain = two_class_chain()
        with pytest.raises(ValueError):
            is_invariant(chain, stationary_first_order(unvisited_state_chain()))


class TestPairMarginalConsistency:
    def test_invariant_points_have_equal_marginals(self):
        for point in invariant_set(two_class_chain()):
            first, second, gap = pair_marginal_consistency(point)
            assert gap <= 1e-9
            assert_allclose(first.mass, second.mass, atol=1e-9)

    def test_asymmetric_support_reports_gap(self):
        a = Alphabet(("1", "2"))
        mu = JointDistribution(a, 2, np.array([0.0, 1.0, 0.0, 0.0]))
        first, second, gap = pair_marginal_consistency(mu)
        assert_allclose(first.mass, [1.0, 0.0])
        assert_allclose(second.mass, [0.0, 1.0])
        assert gap == 1.0

    def test_rejects_wrong_arity(self):
        a = Alphabet(("1", "2"))
        with pytest.raises(ValueError):
            pair_marginal_consistency(JointDistribution(a, 1, np.array([0.5, 0.5])))
