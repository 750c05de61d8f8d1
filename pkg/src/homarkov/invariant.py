"""Invariant distributions of higher-order chains.

A distribution mu over length-k windows is invariant when sliding one
step through the transition rows reproduces it.  The invariant set of
a chain is a simplex whose extreme points correspond one-to-one to the
recurrent classes of the window lift; they are computed by solving the
stationary equations restricted to each class and embedding zeros
elsewhere.
"""

from __future__ import annotations

import numpy as np

from .chain import (
    ROW_TOL,
    ZERO_TOL,
    HigherOrderChain,
    JointDistribution,
    lift,
)
from .classify import ClassDecomposition, classify_first_order


class MultipleRecurrentClassesError(ValueError):
    """Raised when a unique stationary distribution was requested but
    the chain has several recurrent classes."""

    def __init__(
        self,
        decomposition: ClassDecomposition,
        labels: tuple[str, ...] | None = None,
    ):
        self.decomposition = decomposition
        name = (lambda i: labels[i]) if labels else str
        classes = ", ".join(
            "{" + ",".join(name(i) for i in cls) + "}"
            for cls in decomposition.recurrent_classes
        )
        super().__init__(
            f"not unique: {decomposition.num_recurrent} recurrent classes ({classes})"
        )


def _solve_stationary_dense(p: np.ndarray, pivot_tol: float = 1e-12) -> np.ndarray:
    """Solve pi = pi P, sum(pi) = 1 by dense elimination.

    Builds (P^T - I), replaces the last equation with the normalization
    row, and eliminates with partial pivoting.  A pivot below pivot_tol
    means the stationary system is rank-deficient beyond the one
    normalized direction, i.e. the distribution is not unique.
    """
    n = p.shape[0]
    a = p.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    for col in range(n):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) < pivot_tol:
            raise np.linalg.LinAlgError(
                f"stationary system singular at pivot {col}"
            )
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        below = slice(col + 1, n)
        factors = a[below, col] / a[col, col]
        a[below, col:] -= np.outer(factors, a[col, col:])
        b[below] -= factors * b[col]
    x = np.zeros(n)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1 :] @ x[row + 1 :]) / a[row, row]
    return x


def stationary_first_order(
    chain: HigherOrderChain, zero_tol: float = ZERO_TOL
) -> JointDistribution:
    """Unique stationary distribution of an order-1 chain.

    Requires a single recurrent class; otherwise the stationary
    distribution is not unique and the error names the classes.
    """
    if chain.order != 1:
        raise ValueError("stationary_first_order expects an order-1 chain")
    decomposition = classify_first_order(chain, zero_tol)
    if decomposition.num_recurrent != 1:
        raise MultipleRecurrentClassesError(decomposition, chain.alphabet.symbols)
    pi = _solve_stationary_dense(np.array(chain.transitions))
    return JointDistribution(chain.alphabet, 1, pi)


def invariant_set(
    chain: HigherOrderChain, zero_tol: float = ZERO_TOL
) -> list[JointDistribution]:
    """Extreme points of the invariant-distribution simplex.

    One arity-k distribution per recurrent class of the lift, in class
    order: the stationary distribution of the lift restricted to the
    class, zero elsewhere.  Every invariant distribution of the chain
    is a convex combination of the returned points.
    """
    lifted = lift(chain)
    decomposition = classify_first_order(lifted, zero_tol)
    points = []
    n = lifted.n_contexts
    for cls in decomposition.recurrent_classes:
        idx = np.array(cls, dtype=np.int64)
        sub = np.array(lifted.transitions[np.ix_(idx, idx)])
        # a recurrent class is closed, so any mass missing from the
        # restricted rows is below the zero tolerance; renormalize it away
        sub /= sub.sum(axis=1, keepdims=True)
        pi_cls = _solve_stationary_dense(sub)
        mass = np.zeros(n)
        mass[idx] = pi_cls
        points.append(JointDistribution(chain.alphabet, chain.order, mass))
    return points


def is_invariant(
    chain: HigherOrderChain, mu: JointDistribution, tol: float = ROW_TOL
) -> bool:
    """Whether mu reproduces itself after one sliding step of the chain."""
    if mu.alphabet.symbols != chain.alphabet.symbols:
        raise ValueError("mu is over a different alphabet than the chain")
    if mu.arity != chain.order:
        raise ValueError(
            f"mu has arity {mu.arity} but the chain has order {chain.order}"
        )
    m = chain.alphabet.size
    k = chain.order
    weighted = mu.mass[:, None] * chain.transitions
    # context c = (z0, rest): sliding appends z to rest, so summing the
    # leading digit gives the mass of each successor window (rest, z)
    stepped = weighted.reshape(m, m ** (k - 1), m).sum(axis=0).reshape(-1)
    return bool(np.max(np.abs(stepped - mu.mass)) <= tol)


def pair_marginal_consistency(
    mu: JointDistribution,
) -> tuple[JointDistribution, JointDistribution, float]:
    """First and second coordinate marginals of an arity-2 distribution
    and their maximum absolute difference.

    For an invariant arity-2 distribution the two marginals agree: the
    window slides one symbol per step, so both coordinates see the same
    long-run symbol law.
    """
    if mu.arity != 2:
        raise ValueError("pair_marginal_consistency expects arity 2")
    m = mu.alphabet.size
    table = mu.mass.reshape(m, m)
    first = JointDistribution(mu.alphabet, 1, table.sum(axis=1))
    second = JointDistribution(mu.alphabet, 1, table.sum(axis=0))
    gap = float(np.max(np.abs(first.mass - second.mass)))
    return first, second, gap
