"""Verification harness for the uniqueness property of lumped-chain
approximations.

The central claim checked here: take an order-1 chain with a single
recurrent class, run it from its stationary distribution, merge symbols
through a surjective map g, and build the k-th order Markov
approximation of the merged process with a strictly positive fill.
Then the approximation has a unique invariant distribution, equal to
the length-k window marginal of the merged process, and the support of
that marginal is the single recurrent class of the approximation's
window lift.  verify_main_theorem checks every part of this on a given
instance; generate_instance supplies randomized instances; the
structural facts behind the proof are checked by proof_structure_check.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .chain import (
    ROW_TOL,
    ZERO_TOL,
    Alphabet,
    HigherOrderChain,
    JointDistribution,
    LumpingFunction,
    encode_context,
    lift,
    lumping_from_pairs,
    product_alphabet,
)
from .classify import ClassDecomposition, classify_first_order, is_regular
from .invariant import invariant_set, is_invariant, stationary_first_order
from .process import (
    MarginalOracle,
    chain_oracle,
    lumped_oracle,
    markov_approximation,
    project_oracle,
    relative_entropy_rate,
)


@dataclass(frozen=True)
class TheoremReport:
    """Outcome of verify_main_theorem on one instance.

    mu is the single extreme point of the approximation's invariant set
    when unique, None otherwise.  support_indices is the support of the
    arity-k merged-process marginal (encoded context indices).
    """

    unique: bool
    num_recurrent_classes_of_lift: int
    mu: JointDistribution | None
    mu_matches_lumped_marginal: bool
    support_equals_recurrent_class: bool
    decomposition: ClassDecomposition
    support_indices: tuple[int, ...]

    @property
    def all_checks_pass(self) -> bool:
        return (
            self.unique
            and self.mu_matches_lumped_marginal
            and self.support_equals_recurrent_class
        )


def replace_context_row(
    chain: HigherOrderChain, context: Sequence[str], row: Sequence[float]
) -> HigherOrderChain:
    """Copy of the chain with one context row replaced.

    Deliberately not part of the construction API: its use here is
    building counterexamples (e.g. a fill row with a zero entry) whose
    behavior the verification harness must detect.
    """
    t = np.array(chain.transitions)
    t[encode_context(chain.alphabet, context)] = np.asarray(row, dtype=np.float64)
    return HigherOrderChain(chain.alphabet, chain.order, t)


def verify_main_theorem(
    x_chain: HigherOrderChain,
    g: LumpingFunction,
    k: int,
    fill: JointDistribution | None = None,
    row_overrides: dict[tuple[str, ...], Sequence[float]] | None = None,
    tol: float = ROW_TOL,
) -> TheoremReport:
    """Check uniqueness of the invariant distribution of the k-th order
    approximation of a merged chain, against the stated ground truth.

    Preconditions are checked and reported together: x_chain must be
    order 1 with a single recurrent class, and g must map its alphabet
    onto at least two symbols.  row_overrides, applied to the computed
    approximation before analysis, exists to exercise the failure modes
    (it can and should break the conclusion).
    """
    problems = []
    if x_chain.order != 1:
        problems.append("x_chain must be order 1")
    if g.domain.symbols != x_chain.alphabet.symbols:
        problems.append("lumping domain must match the chain alphabet")
    if k < 1:
        problems.append("approximation order k must be >= 1")
    if not problems:
        decomposition_x = classify_first_order(x_chain)
        if decomposition_x.num_recurrent != 1:
            problems.append(
                f"x_chain must have a single recurrent class, found "
                f"{decomposition_x.num_recurrent}"
            )
    if problems:
        raise ValueError("precondition violations: " + "; ".join(problems))

    pi = stationary_first_order(x_chain)
    oracle = lumped_oracle(x_chain, pi, g)
    approx = markov_approximation(oracle, k, fill)
    if row_overrides:
        for context, row in row_overrides.items():
            approx = replace_context_row(approx, context, row)

    decomposition = classify_first_order(lift(approx))
    unique = decomposition.num_recurrent == 1
    window = oracle.marginal(k)
    support = window.support()

    if unique:
        points = invariant_set(approx)
        mu = points[0]
        matches = bool(np.max(np.abs(mu.mass - window.mass)) <= tol)
        support_matches = mu.support() == support
    else:
        mu = None
        matches = False
        support_matches = False
    return TheoremReport(
        unique=unique,
        num_recurrent_classes_of_lift=decomposition.num_recurrent,
        mu=mu,
        mu_matches_lumped_marginal=matches,
        support_equals_recurrent_class=support_matches,
        decomposition=decomposition,
        support_indices=support,
    )


def reduce_higher_order_lumping(
    x_chain: HigherOrderChain, g: LumpingFunction
) -> tuple[HigherOrderChain, LumpingFunction]:
    """Reduce merging an order-l chain to the order-1 case.

    Returns the window lift of x_chain together with the lumping that
    sends each window to the image of its first coordinate: the merged
    process of the pair equals the merged process of the original.  For
    l = 1 this is the identity reduction.
    """
    if g.domain.symbols != x_chain.alphabet.symbols:
        raise ValueError("lumping domain must match the chain alphabet")
    lifted = lift(x_chain)
    if classify_first_order(lifted).num_recurrent != 1:
        raise ValueError("the window lift must have a single recurrent class")
    m = x_chain.alphabet.size
    first_coord = np.arange(lifted.alphabet.size) // m ** (x_chain.order - 1)
    lifted_map = np.asarray(g.index_map)[first_coord]
    return lifted, LumpingFunction(lifted.alphabet, g.codomain, lifted_map)


def verify_commutation(
    x_oracle: MarginalOracle,
    g: LumpingFunction,
    k: int,
    fill: JointDistribution | None = None,
    tol: float = 1e-12,
) -> tuple[bool, float]:
    """Check that approximating and merging commute.

    Route one merges the process and approximates at order k; route two
    approximates first, runs the approximating chain from its window
    marginal, then merges and approximates that.  When the first
    approximation has a single recurrent class the two resulting
    transition matrices agree; returns (agree within tol, max abs
    difference).  A hypothesis failure (several recurrent classes in
    the intermediate approximation) is an error, not a silent pass.
    """
    direct = markov_approximation(project_oracle(x_oracle, g), k, fill)

    intermediate = markov_approximation(x_oracle, k, fill)
    decomposition = classify_first_order(lift(intermediate))
    if decomposition.num_recurrent != 1:
        raise ValueError(
            "hypothesis failure: the intermediate approximation has "
            f"{decomposition.num_recurrent} recurrent classes"
        )
    window = x_oracle.marginal(k)
    m_oracle = chain_oracle(intermediate, window)
    via_chain = markov_approximation(project_oracle(m_oracle, g), k, fill)

    gap = float(np.max(np.abs(direct.transitions - via_chain.transitions)))
    return gap <= tol, gap


@dataclass(frozen=True)
class ProofStructureReport:
    """The three structural facts that force a unique invariant
    distribution, plus how many steps the longest escape needs."""

    support_communicates: bool
    support_closed: bool
    complement_escapes: bool
    max_escape_steps: int | None

    def as_tuple(self) -> tuple[bool, bool, bool]:
        return (
            self.support_communicates,
            self.support_closed,
            self.complement_escapes,
        )


def proof_structure_check(
    z_chain: HigherOrderChain,
    support: Iterable[int],
    zero_tol: float = ZERO_TOL,
) -> ProofStructureReport:
    """Check the support windows communicate, nothing leaves them, and
    every off-support window reaches the support within k steps.

    support holds encoded window indices (as from
    JointDistribution.support on the arity-k marginal).  The escape
    bound k is what a strictly positive fill guarantees: while the
    window stays off support its rows are fill rows, so within k steps
    every window is reachable, in particular a support window.
    """
    s_set = frozenset(int(i) for i in support)
    if not s_set:
        raise ValueError("support must be non-empty")
    lifted = lift(z_chain)
    adj = lifted.transitions > zero_tol
    n = lifted.alphabet.size
    succ = [np.nonzero(adj[i])[0] for i in range(n)]

    closed = all(int(w) in s_set for v in s_set for w in succ[v])

    # forward BFS from each support window, staying honest about >=1 step
    def reaches(v: int, targets: frozenset[int]) -> bool:
        seen = set()
        frontier = [int(w) for w in succ[v]]
        while frontier:
            nxt = []
            for w in frontier:
                if w in targets:
                    return True
                if w not in seen:
                    seen.add(w)
                    nxt.extend(int(u) for u in succ[w])
            frontier = nxt
        return False

    communicates = all(
        reaches(v, frozenset([w])) for v in s_set for w in s_set
    )

    # multi-source backward BFS from the support gives every window's
    # distance to the support
    dist = {v: 0 for v in s_set}
    frontier = list(s_set)
    pred = [[] for _ in range(n)]
    for v in range(n):
        for w in succ[v]:
            pred[int(w)].append(v)
    depth = 0
    while frontier:
        depth += 1
        nxt = []
        for w in frontier:
            for v in pred[w]:
                if v not in dist:
                    dist[v] = depth
                    nxt.append(v)
        frontier = nxt
    complement = [v for v in range(n) if v not in s_set]
    escapes = [dist.get(v) for v in complement]
    if complement:
        ok = all(e is not None and e <= z_chain.order for e in escapes)
        max_escape = max((e for e in escapes if e is not None), default=None)
        if any(e is None for e in escapes):
            ok = False
    else:
        ok = True
        max_escape = 0
    return ProofStructureReport(
        support_communicates=communicates,
        support_closed=closed,
        complement_escapes=ok,
        max_escape_steps=max_escape,
    )


def generate_instance(
    seed: int,
    size_x: int,
    size_y: int,
    num_transient: int = 0,
    k: int = 1,
) -> tuple[HigherOrderChain, LumpingFunction, int]:
    """Deterministic random instance for the verification harness.

    The chain is order 1 on size_x states: an all-positive (hence
    irreducible) block of size_x - num_transient states, plus transient
    states whose rows put positive mass everywhere, so they drain into
    the block and nothing returns.  g maps onto size_y symbols,
    surjective and (since size_y < size_x) non-injective.  Returns
    (chain, g, k); the instance is re-checked before being handed out.
    """
    if size_y < 2:
        raise ValueError("size_y must be >= 2")
    if size_y >= size_x:
        raise ValueError("size_y must be < size_x")
    block = size_x - num_transient
    if block < 1:
        raise ValueError("num_transient leaves no recurrent block")
    if k < 1:
        raise ValueError("k must be >= 1")
    rng = np.random.default_rng(seed)
    p = np.zeros((size_x, size_x))
    p[:block, :block] = rng.uniform(0.1, 1.0, size=(block, block))
    if num_transient:
        p[block:, :] = rng.uniform(0.1, 1.0, size=(num_transient, size_x))
    p /= p.sum(axis=1, keepdims=True)
    x_alphabet = Alphabet(tuple(str(i + 1) for i in range(size_x)))
    chain = HigherOrderChain(x_alphabet, 1, p)

    y_alphabet = Alphabet(tuple(str(i + 1) for i in range(size_y)))
    index_map = np.empty(size_x, dtype=np.int64)
    anchors = rng.choice(size_x, size=size_y, replace=False)
    index_map[:] = rng.integers(0, size_y, size=size_x)
    index_map[anchors] = np.arange(size_y)
    g = LumpingFunction(x_alphabet, y_alphabet, index_map)

    decomposition = classify_first_order(chain)
    if decomposition.num_recurrent != 1 or len(decomposition.transient) != num_transient:
        raise AssertionError("generated chain has the wrong class structure")
    return chain, g, k


def generate_commutation_instance(
    seed: int, size_x: int, size_y: int, k: int = 1
) -> tuple[MarginalOracle, LumpingFunction, int]:
    """Deterministic random instance for verify_commutation.

    The process oracle is itself a lumping of a larger chain (two extra
    hidden states), so it is generically not Markov of any finite
    order; the returned lumping merges it further onto size_y symbols.
    Because the source chain has a single recurrent class, the
    intermediate approximation in verify_commutation is guaranteed to
    satisfy the single-class hypothesis.
    """
    if not 2 <= size_y < size_x:
        raise ValueError("need 2 <= size_y < size_x")
    base, g1, _ = generate_instance(seed, size_x + 2, size_x, num_transient=0, k=k)
    pi = stationary_first_order(base)
    x_oracle = lumped_oracle(base, pi, g1)
    rng = np.random.default_rng(seed + 10_000)
    y_alphabet = Alphabet(tuple(str(i + 1) for i in range(size_y)))
    index_map = np.empty(size_x, dtype=np.int64)
    anchors = rng.choice(size_x, size=size_y, replace=False)
    index_map[:] = rng.integers(0, size_y, size=size_x)
    index_map[anchors] = np.arange(size_y)
    g2 = LumpingFunction(g1.codomain, y_alphabet, index_map)
    return x_oracle, g2, k


# ---------------------------------------------------------------------------
# builtin demonstration instances


def two_class_chain() -> HigherOrderChain:
    """Order-2 chain on 4 symbols that is regular as a symbol process
    yet whose window lift has two recurrent classes and six transient
    windows, so its invariant set has two extreme points."""
    alphabet = Alphabet(("1", "2", "3", "4"))
    rows = np.array(
        [
            [0.5, 0.5, 0.0, 0.0],  # 1,1
            [0.0, 0.0, 1.0, 0.0],  # 1,2
            [0.0, 1.0, 0.0, 0.0],  # 1,3
            [0.0, 0.0, 1.0, 0.0],  # 1,4
            [0.0, 0.0, 0.5, 0.5],  # 2,1
            [0.0, 0.5, 0.5, 0.0],  # 2,2
            [0.5, 0.0, 0.0, 0.5],  # 2,3
            [1.0, 0.0, 0.0, 0.0],  # 2,4
            [0.0, 1.0, 0.0, 0.0],  # 3,1
            [1.0, 0.0, 0.0, 0.0],  # 3,2
            [0.0, 0.5, 0.5, 0.0],  # 3,3
            [1.0, 0.0, 0.0, 0.0],  # 3,4
            [0.0, 1.0, 0.0, 0.0],  # 4,1
            [0.0, 1.0, 0.0, 0.0],  # 4,2
            [0.0, 1.0, 0.0, 0.0],  # 4,3
            [0.0, 0.0, 0.5, 0.5],  # 4,4
        ]
    )
    return HigherOrderChain(alphabet, 2, rows)


def unvisited_state_chain() -> HigherOrderChain:
    """Order-1 chain on 3 symbols whose state 1 is transient: started
    stationary it is never seen, so approximations fill its context
    rows and still match the process exactly in divergence."""
    alphabet = Alphabet(("1", "2", "3"))
    rows = np.array(
        [
            [0.4, 0.6, 0.0],
            [0.0, 0.5, 0.5],
            [0.0, 0.3, 0.7],
        ]
    )
    return HigherOrderChain(alphabet, 1, rows)


def fill_choice_instance() -> tuple[HigherOrderChain, LumpingFunction]:
    """Irreducible 3-state chain forbidding the 1->1 transition, merged
    onto 2 symbols.  The merged window (1,1) has probability zero, and
    whether the order-2 approximation keeps a unique invariant
    distribution depends entirely on the fill row it gets."""
    alphabet = Alphabet(("1", "2", "3"))
    rows = np.array(
        [
            [0.0, 0.5, 0.5],
            [0.3, 0.3, 0.4],
            [0.3, 0.4, 0.3],
        ]
    )
    chain = HigherOrderChain(alphabet, 1, rows)
    g = lumping_from_pairs(
        alphabet, Alphabet(("1", "2")), {"1": "1", "2": "2", "3": "2"}
    )
    return chain, g


@dataclass(frozen=True)
class ExampleCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class ExampleReport:
    example: str
    checks: tuple[ExampleCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _labels(alphabet: Alphabet, indices: Iterable[int]) -> str:
    return " ".join(alphabet.symbols[i] for i in indices)


def _check_two_class() -> ExampleReport:
    chain = two_class_chain()
    lifted = lift(chain)
    decomposition = classify_first_order(lifted)
    names = lifted.alphabet
    expected_rec = (
        tuple(sorted(names.index_of(s) for s in ("1,2", "2,3", "3,1", "3,4", "4,1"))),
        tuple(sorted(names.index_of(s) for s in ("1,3", "1,4", "2,1", "3,2", "4,3"))),
    )
    expected_rec = tuple(sorted(expected_rec, key=lambda c: c[0]))
    expected_tr = tuple(
        sorted(names.index_of(s) for s in ("1,1", "2,2", "2,4", "3,3", "4,2", "4,4"))
    )
    checks = [
        ExampleCheck(
            "two recurrent window classes",
            decomposition.recurrent_classes == expected_rec,
            " | ".join(
                _labels(names, cls) for cls in decomposition.recurrent_classes
            ),
        ),
        ExampleCheck(
            "six transient windows",
            decomposition.transient == expected_tr,
            _labels(names, decomposition.transient),
        ),
    ]
    witness = is_regular(chain)
    checks.append(
        ExampleCheck(
            "regular with witness <= 10",
            witness is not None and witness <= 10,
            f"witness n = {witness}",
        )
    )
    points = invariant_set(chain)
    checks.append(
        ExampleCheck(
            "invariant set has two extreme points",
            len(points) == 2 and all(is_invariant(chain, q) for q in points),
            f"{len(points)} extreme points, all invariant",
        )
    )
    return ExampleReport("two-class", tuple(checks))


def _check_unvisited_state() -> ExampleReport:
    chain = unvisited_state_chain()
    pi = stationary_first_order(chain)
    oracle = chain_oracle(chain, pi)
    approx1 = markov_approximation(oracle, 1)
    report = relative_entropy_rate(oracle, approx1, horizon=6)
    approx2 = markov_approximation(oracle, 2)
    alphabet = chain.alphabet
    row_12 = approx2.transitions[encode_context(alphabet, ("1", "2"))]
    row_22 = approx2.transitions[encode_context(alphabet, ("2", "2"))]
    checks = [
        ExampleCheck(
            "stationary mass of the transient state is zero",
            abs(pi.mass[0]) < 1e-12,
            f"pi(1) = {pi.mass[0]!r}",
        ),
        ExampleCheck(
            "unvisited context row is the uniform fill",
            np.array_equal(
                approx1.transitions[0], np.full(3, 1.0 / 3.0)
            ),
            f"row(1) = {approx1.transitions[0].tolist()}",
        ),
        ExampleCheck(
            "divergence zero at every horizon up to 6",
            all(abs(d) < 1e-12 for d in report.cesaro),
            f"max |D_n| = {max(abs(d) for d in report.cesaro):.3e}",
        ),
        ExampleCheck(
            "order-2 approximation is not order 1",
            bool(np.max(np.abs(row_12 - row_22)) > 1e-6),
            "rows for contexts (1,2) and (2,2) differ",
        ),
    ]
    return ExampleReport("unvisited-state", tuple(checks))


def _check_fill_choice() -> ExampleReport:
    x_chain, g = fill_choice_instance()
    report = verify_main_theorem(x_chain, g, 2)
    names = product_alphabet(g.codomain, 2)
    expected_class = tuple(
        sorted(names.index_of(s) for s in ("1,2", "2,1", "2,2"))
    )
    checks = [
        ExampleCheck(
            "uniform fill keeps the invariant distribution unique",
            report.unique and report.all_checks_pass,
            f"{report.num_recurrent_classes_of_lift} recurrent class",
        ),
        ExampleCheck(
            "recurrent class is the merged-process support",
            report.unique
            and report.decomposition.recurrent_classes == (expected_class,),
            _labels(names, report.support_indices),
        ),
    ]
    broken = verify_main_theorem(
        x_chain, g, 2, row_overrides={("1", "1"): [1.0, 0.0]}
    )
    window_11 = (names.index_of("1,1"),)
    checks.append(
        ExampleCheck(
            "zero-entry fill row splits the invariant set",
            (not broken.unique)
            and broken.num_recurrent_classes_of_lift == 2
            and broken.decomposition.recurrent_classes
            == (window_11, expected_class),
            f"{broken.num_recurrent_classes_of_lift} recurrent classes",
        )
    )
    pi = stationary_first_order(x_chain)
    oracle = lumped_oracle(x_chain, pi, g)
    broken_chain = replace_context_row(
        markov_approximation(oracle, 2), ("1", "1"), [1.0, 0.0]
    )
    points = invariant_set(broken_chain)
    checks.append(
        ExampleCheck(
            "broken instance has two extreme points",
            len(points) == 2
            and all(is_invariant(broken_chain, q) for q in points),
            f"{len(points)} extreme points, all invariant",
        )
    )
    return ExampleReport("fill-choice", tuple(checks))


def builtin_examples() -> list[ExampleReport]:
    """Run the three builtin demonstration instances and report every
    documented outcome as a named pass/fail check."""
    return [_check_two_class(), _check_unvisited_state(), _check_fill_choice()]
