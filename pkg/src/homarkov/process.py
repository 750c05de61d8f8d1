"""Stationary processes as marginal oracles, and their Markov approximations.

A MarginalOracle answers queries for the joint distribution of the
first n symbols of a stationary process.  Oracles are built from a
chain with an invariant start, from lumping (symbol-merging) a chain,
or by projecting an existing oracle through a lumping; the k-th order
Markov approximation and the relative entropy rate are computed from
oracle tables alone, so any stationary process with computable
marginals plugs in.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .chain import (
    ROW_TOL,
    ZERO_TOL,
    Alphabet,
    HigherOrderChain,
    JointDistribution,
    LumpingFunction,
    decode_context,
    uniform_distribution,
)
from .classify import classify_first_order
from .invariant import MultipleRecurrentClassesError, is_invariant

# Flat joint tables larger than this many entries are refused; at the
# default the largest table is ~80 MB of float64.
TABLE_BUDGET = 10**7


class InfiniteDivergenceError(ValueError):
    """A sequence with positive process mass has zero model mass, so the
    relative entropy at this arity is infinite."""

    def __init__(self, arity: int, sequence: tuple[str, ...]):
        self.arity = arity
        self.sequence = sequence
        super().__init__(
            f"infinite divergence at n={arity}: model assigns zero mass to "
            f"({','.join(sequence)}) which has positive process mass"
        )


class MarginalOracle:
    """Joint marginals p(W_0..W_{n-1}) of a stationary process.

    marginal(n) returns the arity-n joint distribution for any n up to
    horizon_cap.  Tables are memoized; instances are immutable from the
    caller's perspective and safe to query from several threads.
    """

    def __init__(
        self,
        alphabet: Alphabet,
        horizon_cap: int,
        table_fn: Callable[[int], np.ndarray],
    ):
        self.alphabet = alphabet
        self.horizon_cap = horizon_cap
        self._table_fn = table_fn
        self._memo: dict[int, JointDistribution] = {}
        self._lock = threading.Lock()

    def marginal(self, n: int) -> JointDistribution:
        if n < 1:
            raise ValueError("marginal arity must be >= 1")
        if n > self.horizon_cap:
            raise ValueError(
                f"arity {n} exceeds the oracle horizon cap {self.horizon_cap}"
            )
        with self._lock:
            hit = self._memo.get(n)
        if hit is not None:
            return hit
        dist = JointDistribution(self.alphabet, n, self._table_fn(n))
        with self._lock:
            return self._memo.setdefault(n, dist)


def _budget_horizon(base: int, entry_budget: int, weight: int = 1) -> int:
    n = 0
    entries = weight
    while entries * base <= entry_budget:
        entries *= base
        n += 1
    return n


def chain_oracle(
    chain: HigherOrderChain,
    start: JointDistribution,
    tol: float = ROW_TOL,
    entry_budget: int = TABLE_BUDGET,
) -> MarginalOracle:
    """Oracle for the stationary process generated by a chain.

    start must be an invariant arity-k distribution; stationarity of
    the resulting process depends on it, so a non-invariant start is
    rejected.  Marginals below arity k come from start itself, larger
    ones extend the table one conditional row at a time.
    """
    if not is_invariant(chain, start, tol):
        raise ValueError("start distribution is not invariant for the chain")
    cap = _budget_horizon(chain.alphabet.size, entry_budget)
    if cap < chain.order:
        raise ValueError("entry budget too small to hold the start table")
    tables: dict[int, np.ndarray] = {chain.order: np.array(start.mass)}
    lock = threading.Lock()

    def table_fn(n: int) -> np.ndarray:
        k = chain.order
        if n <= k:
            return start.leading_marginal(n).mass
        with lock:
            have = max(i for i in tables if i <= n)
            t = tables[have]
            while have < n:
                t = kernels.extend_joint(t, chain.transitions)
                have += 1
                tables[have] = t
            return t

    return MarginalOracle(chain.alphabet, cap, table_fn)


def lumped_oracle(
    chain: HigherOrderChain,
    pi: JointDistribution,
    g: LumpingFunction,
    tol: float = ROW_TOL,
    entry_budget: int = TABLE_BUDGET,
) -> MarginalOracle:
    """Oracle for the symbol-merged process Y_n = g(X_n).

    chain must be order 1 with a single recurrent class and pi its
    stationary distribution.  Marginals are computed by a forward
    recursion over hidden-state mass vectors, one per output prefix,
    costing O(|Y|^n * |X|^2) instead of enumerating x-paths.
    """
    if chain.order != 1:
        raise ValueError("lumped_oracle expects an order-1 chain")
    if g.domain.symbols != chain.alphabet.symbols:
        raise ValueError("lumping domain does not match the chain alphabet")
    decomposition = classify_first_order(chain)
    if decomposition.num_recurrent != 1:
        raise MultipleRecurrentClassesError(decomposition, chain.alphabet.symbols)
    if not is_invariant(chain, pi, tol):
        raise ValueError("pi is not stationary for the chain")
    nx = chain.alphabet.size
    ny = g.codomain.size
    gmap = np.asarray(g.index_map, dtype=np.int64)
    cap = _budget_horizon(ny, entry_budget, weight=nx)
    alphas: dict[int, np.ndarray] = {}
    lock = threading.Lock()

    def alpha_for(n: int) -> np.ndarray:
        a1 = np.zeros((ny, nx))
        a1[gmap, np.arange(nx)] = pi.mass
        with lock:
            if not alphas:
                alphas[1] = a1
            have = max(i for i in alphas if i <= n)
            a = alphas[have]
            while have < n:
                a = kernels.lump_step(a, chain.transitions, gmap, ny)
                have += 1
                alphas[have] = a
            return a

    def table_fn(n: int) -> np.ndarray:
        return alpha_for(n).sum(axis=1)

    return MarginalOracle(g.codomain, cap, table_fn)


def project_oracle(oracle: MarginalOracle, g: LumpingFunction) -> MarginalOracle:
    """Push an oracle through a lumping by aggregating its tables.

    Costs a full domain-alphabet table per query, so this is the
    general-purpose (and brute-force) route; prefer lumped_oracle when
    the source process is an order-1 chain.
    """
    if g.domain.symbols != oracle.alphabet.symbols:
        raise ValueError("lumping domain does not match the oracle alphabet")
    size_in = g.domain.size
    size_out = g.codomain.size
    gmap = np.asarray(g.index_map, dtype=np.int64)

    def table_fn(n: int) -> np.ndarray:
        return kernels.project_table(
            oracle.marginal(n).mass, gmap, size_in, size_out, n
        )

    return MarginalOracle(g.codomain, oracle.horizon_cap, table_fn)


def markov_approximation(
    oracle: MarginalOracle,
    k: int,
    fill: JointDistribution | None = None,
    zero_tol: float = ZERO_TOL,
) -> HigherOrderChain:
    """k-th order Markov approximation of a stationary process.

    Each context row is the conditional law of the next symbol given
    the last k, read off the arity-(k+1) and arity-k marginals.
    Contexts the process never visits get the fill row (uniform when
    fill is None).  The fill must be strictly positive: a zero fill
    entry can seed an extra recurrent class in the approximation and
    break uniqueness of its invariant distribution.
    """
    if k < 1:
        raise ValueError("approximation order must be >= 1")
    if oracle.horizon_cap < k + 1:
        raise ValueError(
            f"oracle horizon cap {oracle.horizon_cap} cannot supply the "
            f"arity-{k + 1} marginal"
        )
    m = oracle.alphabet.size
    if fill is None:
        fill = uniform_distribution(oracle.alphabet)
    if fill.arity != 1 or fill.alphabet.symbols != oracle.alphabet.symbols:
        raise ValueError("fill must be an arity-1 distribution on the same alphabet")
    if np.any(fill.mass <= 0.0):
        raise ValueError("fill must be strictly positive in every entry")
    pk = oracle.marginal(k).mass
    pk1 = oracle.marginal(k + 1).mass.reshape(m**k, m)
    rows = np.empty((m**k, m))
    visited = pk > zero_tol
    rows[visited] = pk1[visited] / pk[visited, None]
    rows[~visited] = fill.mass
    return HigherOrderChain(oracle.alphabet, k, rows)


def model_joint_table(
    model: HigherOrderChain, model_start: JointDistribution, n: int
) -> np.ndarray:
    """Flat arity-n joint table of the chain started from model_start."""
    if n < model.order:
        return model_start.leading_marginal(n).mass
    t = np.array(model_start.mass)
    for _ in range(n - model.order):
        t = kernels.extend_joint(t, model.transitions)
    return t


@dataclass(frozen=True)
class DivergenceReport:
    """Per-arity divergence between a process and a model chain.

    kl[i] is the relative entropy (nats) between the arity-arities[i]
    marginals, cesaro[i] the per-symbol estimate kl[i]/arities[i], and
    increments[i] the step kl[i] - kl at the previous arity (the base
    arity k uses the model start as the model marginal).
    """

    arities: tuple[int, ...]
    kl: tuple[float, ...]
    cesaro: tuple[float, ...]
    increments: tuple[float, ...]


def relative_entropy_rate(
    oracle: MarginalOracle,
    model: HigherOrderChain,
    horizon: int,
    model_start: JointDistribution | None = None,
    zero_tol: float = ZERO_TOL,
    entry_budget: int = TABLE_BUDGET,
) -> DivergenceReport:
    """Finite-horizon relative entropy estimates of a process against a
    k-th order model chain.

    Reports D_n = KL(p_n || q_n)/n for n = k+1 .. horizon, where p_n is
    the oracle marginal and q_n the model joint grown from model_start
    (default: the oracle's own arity-k marginal, under which a perfect
    model gives exactly zero).  Only sequences with process mass above
    zero_tol enter the sums; a model zero on such a sequence raises
    InfiniteDivergenceError.  These are estimates at each horizon, not
    a claim about the large-n limit.
    """
    k = model.order
    if model.alphabet.symbols != oracle.alphabet.symbols:
        raise ValueError("model alphabet does not match the oracle")
    if horizon < k + 1:
        raise ValueError(f"horizon must be at least k+1 = {k + 1}")
    if horizon > oracle.horizon_cap:
        raise ValueError(
            f"horizon {horizon} exceeds the oracle horizon cap {oracle.horizon_cap}"
        )
    if oracle.alphabet.size**horizon > entry_budget:
        raise ValueError(
            f"horizon {horizon} needs {oracle.alphabet.size**horizon} table "
            f"entries, over the budget {entry_budget}"
        )
    if model_start is None:
        model_start = oracle.marginal(k)
    if model_start.arity != k:
        raise ValueError(f"model_start must have arity {k}")

    def kl_at(n: int, q: np.ndarray) -> float:
        p = oracle.marginal(n).mass
        value, bad = kernels.kl_sum(p, q, zero_tol)
        if bad >= 0:
            raise InfiniteDivergenceError(
                n, decode_context(oracle.alphabet, n, bad)
            )
        return value

    arities = []
    kls = []
    cesaro = []
    increments = []
    prev = kl_at(k, np.array(model_start.mass))
    q = np.array(model_start.mass)
    for n in range(k + 1, horizon + 1):
        q = kernels.extend_joint(q, model.transitions)
        val = kl_at(n, q)
        arities.append(n)
        kls.append(val)
        cesaro.append(val / n)
        increments.append(val - prev)
        prev = val
    return DivergenceReport(
        tuple(arities), tuple(kls), tuple(cesaro), tuple(increments)
    )


def absolute_continuity_check(
    oracle: MarginalOracle,
    model: HigherOrderChain,
    horizon: int,
    model_start: JointDistribution | None = None,
    zero_tol: float = ZERO_TOL,
) -> tuple[bool, tuple[str, ...] | None]:
    """Check the process is absolutely continuous w.r.t. the model on
    conditionals up to the horizon.

    Scans every sequence length from k to horizon and reports the first
    sequence whose model conditional mass given its leading k-context
    is zero while the process gives the sequence positive mass (at
    length k the model mass is model_start itself).  Returns (ok,
    witness) with witness None when the check passes.
    """
    k = model.order
    if model.alphabet.symbols != oracle.alphabet.symbols:
        raise ValueError("model alphabet does not match the oracle")
    if horizon < k:
        raise ValueError(f"horizon must be at least the model order {k}")
    if horizon > oracle.horizon_cap:
        raise ValueError(
            f"horizon {horizon} exceeds the oracle horizon cap {oracle.horizon_cap}"
        )
    if model_start is None:
        model_start = oracle.marginal(k)
    if model_start.arity != k:
        raise ValueError(f"model_start must have arity {k}")
    p = oracle.marginal(k).mass
    bad = (p > zero_tol) & (model_start.mass <= zero_tol)
    if bad.any():
        i = int(np.argmax(bad))
        return False, decode_context(oracle.alphabet, k, i)
    # conditional mass of each continuation given the first k symbols:
    # grow a table of transition products starting from all-ones
    cond = np.ones(oracle.alphabet.size**k)
    for n in range(k + 1, horizon + 1):
        cond = kernels.extend_joint(cond, model.transitions)
        p = oracle.marginal(n).mass
        bad = (p > zero_tol) & (cond <= zero_tol)
        if bad.any():
            i = int(np.argmax(bad))
            return False, decode_context(oracle.alphabet, n, i)
    return True, None
