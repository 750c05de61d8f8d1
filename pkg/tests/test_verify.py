import numpy as np
import pytest
from numpy.testing import assert_allclose

from homarkov import (
    Alphabet,
    HigherOrderChain,
    JointDistribution,
    LumpingFunction,
    builtin_examples,
    chain_oracle,
    fill_choice_instance,
    generate_commutation_instance,
    generate_instance,
    invariant_set,
    lumped_oracle,
    markov_approximation,
    proof_structure_check,
    project_oracle,
    reduce_higher_order_lumping,
    replace_context_row,
    stationary_first_order,
    two_class_chain,
    verify_commutation,
    verify_main_theorem,
)


def positive_chain(seed, m, k=1):
    rng = np.random.default_rng(seed)
    rows = rng.uniform(0.1, 1.0, size=(m**k, m))
    rows /= rows.sum(axis=1, keepdims=True)
    a = Alphabet(tuple(str(i + 1) for i in range(m)))
    return HigherOrderChain(a, k, rows)


class TestReplaceContextRow:
    def test_replaces_exactly_one_row(self):
        chain = two_class_chain()
        out = replace_context_row(chain, ("1", "2"), [0.25, 0.25, 0.25, 0.25])
        assert_allclose(out.transitions[1], [0.25] * 4)
        rest = [i for i in range(16) if i != 1]
        assert_allclose(out.transitions[rest], np.array(chain.transitions)[rest])


class TestVerifyMainTheorem:
    def test_fill_choice_unique_with_frozen_mu(self):
        x_chain, g = fill_choice_instance()
        report = verify_main_theorem(x_chain, g, 2)
        assert report.unique
        assert report.num_recurrent_classes_of_lift == 1
        assert report.all_checks_pass
        assert report.support_indices == (1, 2, 3)
        assert_allclose(
            report.mu.mass, [0.0, 3 / 13, 3 / 13, 7 / 13], atol=1e-12
        )

    def test_zero_fill_override_breaks_uniqueness(self):
        x_chain, g = fill_choice_instance()
        report = verify_main_theorem(
            x_chain, g, 2, row_overrides={("1", "1"): [1.0, 0.0]}
        )
        assert not report.unique
        assert report.num_recurrent_classes_of_lift == 2
        assert report.mu is None
        assert not report.all_checks_pass
        assert report.decomposition.recurrent_classes == ((0,), (1, 2, 3))

    def test_first_order_mu_sums_preimages(self):
        chain = positive_chain(21, 4)
        pi = stationary_first_order(chain)
        y = Alphabet(("1", "2"))
        g = LumpingFunction(chain.alphabet, y, np.array([0, 0, 1, 1]))
        report = verify_main_theorem(chain, g, 1)
        assert report.all_checks_pass
        assert_allclose(
            report.mu.mass,
            [pi.mass[0] + pi.mass[1], pi.mass[2] + pi.mass[3]],
            atol=1e-12,
        )

    def test_rejects_higher_order_input(self):
        chain = two_class_chain()
        g = LumpingFunction(
            chain.alphabet, Alphabet(("1", "2")), np.array([0, 0, 1, 1])
        )
        with pytest.raises(ValueError, match="precondition"):
            verify_main_theorem(chain, g, 1)

    def test_rejects_multiple_recurrent_classes(self):
        a = Alphabet(("1", "2"))
        chain = HigherOrderChain(a, 1, np.eye(2))
        g = LumpingFunction(a, a, np.array([0, 1]))
        with pytest.raises(ValueError, match="single recurrent class"):
            verify_main_theorem(chain, g, 1)

    def test_rejects_nonpositive_k(self):
        x_chain, g = fill_choice_instance()
        with pytest.raises(ValueError, match="k"):
            verify_main_theorem(x_chain, g, 0)


class TestReduceHigherOrderLumping:
    def test_order_one_is_identity_reduction(self):
        chain = positive_chain(22, 3)
        y = Alphabet(("1", "2"))
        g = LumpingFunction(chain.alphabet, y, np.array([0, 1, 1]))
        lifted, g_lift = reduce_higher_order_lumping(chain, g)
        assert lifted.order == 1
        assert_allclose(lifted.transitions, chain.transitions)
        assert tuple(g_lift.index_map) == tuple(g.index_map)

    def test_merged_marginals_agree_with_direct_route(self):
        chain = positive_chain(23, 3, k=2)
        y = Alphabet(("1", "2"))
        g = LumpingFunction(chain.alphabet, y, np.array([0, 1, 1]))
        start = invariant_set(chain)[0]
        direct = project_oracle(chain_oracle(chain, start), g)

        lifted, g_lift = reduce_higher_order_lumping(chain, g)
        pi_lift = stationary_first_order(lifted)
        reduced = lumped_oracle(lifted, pi_lift, g_lift)
        for n in range(1, 5):
            assert_allclose(
                reduced.marginal(n).mass, direct.marginal(n).mass, atol=1e-12
            )

    def test_requires_single_class_lift(self):
        chain = two_class_chain()
        g = LumpingFunction(
            chain.alphabet, Alphabet(("1", "2")), np.array([0, 0, 1, 1])
        )
        with pytest.raises(ValueError, match="single recurrent class"):
            reduce_higher_order_lumping(chain, g)


class TestVerifyCommutation:
    def test_markov_oracle_commutes_exactly(self):
        chain = positive_chain(24, 4)
        oracle = chain_oracle(chain, stationary_first_order(chain))
        g = LumpingFunction(
            chain.alphabet, Alphabet(("1", "2")), np.array([0, 0, 1, 1])
        )
        agree, gap = verify_commutation(oracle, g, 1)
        assert agree and gap <= 1e-12

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_non_markov_oracle_commutes(self, seed):
        x_oracle, g, k = generate_commutation_instance(seed, 4, 2, k=min(seed + 1, 2))
        agree, gap = verify_commutation(x_oracle, g, k)
        assert agree, f"gap {gap}"

    def test_hypothesis_failure_is_loud(self):
        a = Alphabet(("1", "2"))
        chain = HigherOrderChain(a, 1, np.eye(2))
        start = JointDistribution(a, 1, np.array([0.5, 0.5]))
        oracle = chain_oracle(chain, start)
        g = LumpingFunction(a, a, np.array([0, 1]))
        with pytest.raises(ValueError, match="hypothesis failure"):
            verify_commutation(oracle, g, 1)


class TestProofStructure:
    def test_fill_choice_support_structure(self):
        x_chain, g = fill_choice_instance()
        pi = stationary_first_order(x_chain)
        oracle = lumped_oracle(x_chain, pi, g)
        approx = markov_approximation(oracle, 2)
        report = proof_structure_check(approx, oracle.marginal(2).support())
        assert report.as_tuple() == (True, True, True)
        assert report.max_escape_steps == 1

    def test_broken_fill_never_escapes(self):
        x_chain, g = fill_choice_instance()
        pi = stationary_first_order(x_chain)
        oracle = lumped_oracle(x_chain, pi, g)
        broken = replace_context_row(
            markov_approximation(oracle, 2), ("1", "1"), [1.0, 0.0]
        )
        report = proof_structure_check(broken, oracle.marginal(2).support())
        assert report.as_tuple() == (True, True, False)
        assert report.max_escape_steps is None

    def test_open_support_detected(self):
        a = Alphabet(("1", "2"))
        chain = HigherOrderChain(a, 1, np.array([[0.5, 0.5], [0.5, 0.5]]))
        report = proof_structure_check(chain, [1])
        assert report.support_closed is False
        assert report.support_communicates is True
        assert report.complement_escapes is True
        assert report.max_escape_steps == 1

    def test_rejects_empty_support(self):
        x_chain, _ = fill_choice_instance()
        with pytest.raises(ValueError):
            proof_structure_check(x_chain, [])


class TestGenerators:
    def test_instances_are_deterministic(self):
        a1, g1, _ = generate_instance(3, 5, 2, num_transient=1)
        a2, g2, _ = generate_instance(3, 5, 2, num_transient=1)
        assert np.array_equal(a1.transitions, a2.transitions)
        assert np.array_equal(g1.index_map, g2.index_map)

    def test_transient_count_honored(self):
        from homarkov import classify_first_order

        chain, _, _ = generate_instance(4, 6, 3, num_transient=2)
        decomposition = classify_first_order(chain)
        assert decomposition.num_recurrent == 1
        assert len(decomposition.transient) == 2

    def test_bad_sizes_rejected(self):
        with pytest.raises(ValueError):
            generate_instance(0, 4, 1)
        with pytest.raises(ValueError):
            generate_instance(0, 3, 3)
        with pytest.raises(ValueError):
            generate_instance(0, 3, 2, num_transient=3)

    def test_commutation_instance_shapes(self):
        oracle, g, k = generate_commutation_instance(5, 4, 2)
        assert oracle.alphabet.size == 4
        assert g.domain.size == 4 and g.codomain.size == 2
        assert k == 1
        assert abs(oracle.marginal(3).mass.sum() - 1.0) < 1e-9


class TestBuiltinExamples:
    def test_all_examples_pass(self):
        reports = builtin_examples()
        assert [r.example for r in reports] == [
            "two-class",
            "unvisited-state",
            "fill-choice",
        ]
        for report in reports:
            for check in report.checks:
                assert check.passed, f"{report.example}: {check.name} ({check.detail})"
            assert report.passed

    def test_check_counts(self):
        reports = {r.example: len(r.checks) for r in builtin_examples()}
        assert reports == {"two-class": 4, "unvisited-state": 4, "fill-choice": 4}
