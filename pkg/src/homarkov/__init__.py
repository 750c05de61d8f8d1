"""Finite-alphabet higher-order Markov chains.

Core model types, window lifting, recurrence classification, invariant
distributions, symbol merging (lumping), k-th order Markov
approximation of stationary processes, divergence-rate estimates, and
a randomized verification harness for the uniqueness of the
approximation's invariant distribution.
"""

from .chain import (
    ROW_TOL,
    ZERO_TOL,
    Alphabet,
    HigherOrderChain,
    JointDistribution,
    LumpingFunction,
    ValidationReport,
    alphabet_of,
    decode_context,
    encode_context,
    lift,
    lumping_from_pairs,
    n_step_matrix,
    product_alphabet,
    uniform_distribution,
    validate_chain,
)
from .classify import (
    ClassDecomposition,
    accessible,
    classify_first_order,
    classify_higher_order,
    is_regular,
    single_recurrent_class,
)
from .invariant import (
    MultipleRecurrentClassesError,
    invariant_set,
    is_invariant,
    pair_marginal_consistency,
    stationary_first_order,
)
from .io import (
    FORMAT_VERSION,
    ModelFile,
    ModelFormatError,
    ModelValidationError,
    load_model,
    parse_model,
    serialize_chain,
    serialize_lumping,
    serialize_model,
)
from .process import (
    TABLE_BUDGET,
    DivergenceReport,
    InfiniteDivergenceError,
    MarginalOracle,
    absolute_continuity_check,
    chain_oracle,
    lumped_oracle,
    markov_approximation,
    model_joint_table,
    project_oracle,
    relative_entropy_rate,
)
from .verify import (
    ExampleCheck,
    ExampleReport,
    ProofStructureReport,
    TheoremReport,
    builtin_examples,
    fill_choice_instance,
    generate_commutation_instance,
    generate_instance,
    proof_structure_check,
    reduce_higher_order_lumping,
    replace_context_row,
    two_class_chain,
    unvisited_state_chain,
    verify_commutation,
    verify_main_theorem,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
