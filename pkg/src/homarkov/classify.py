"""Recurrence structure of higher-order chains.

First-order chains are classified by strongly connected components of
the positive-transition graph; a component is recurrent exactly when
no transition above the zero tolerance leaves it.  For order k > 1 the
state-level notions are defined through the window lift: symbol z' can
reach symbol z when, from every length-(k-1) prefix u, the window
(u, z') eventually emits z with positive probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import ZERO_TOL, HigherOrderChain, lift


@dataclass(frozen=True)
class ClassDecomposition:
    """Recurrent classes plus the transient remainder, by state index.

    Classes are sorted by smallest member and members ascend, so equal
    decompositions compare equal and reports are reproducible.
    """

    recurrent_classes: tuple[tuple[int, ...], ...]
    transient: tuple[int, ...]

    @property
    def num_recurrent(self) -> int:
        return len(self.recurrent_classes)


def _tarjan_scc(succ: list[list[int]]) -> list[list[int]]:
    """Strongly connected components, iterative to spare the recursion
    limit on lifted state spaces.  Components are returned with members
    ascending; the caller fixes the component order."""
    n = len(succ)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while pi < len(succ[v]):
                w = succ[v][pi]
                pi += 1
                if index[w] == -1:
                    work[-1] = (v, pi)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comp.sort()
                comps.append(comp)
            if work:
                u, _ = work[-1]
                low[u] = min(low[u], low[v])
    return comps


def _successors(matrix: np.ndarray, zero_tol: float) -> list[list[int]]:
    adj = matrix > zero_tol
    return [[int(j) for j in np.nonzero(adj[i])[0]] for i in range(adj.shape[0])]


def classify_first_order(
    chain: HigherOrderChain, zero_tol: float = ZERO_TOL
) -> ClassDecomposition:
    """Partition the states of an order-1 chain into recurrent classes
    and transient states."""
    if chain.order != 1:
        raise ValueError("classify_first_order expects an order-1 chain")
    succ = _successors(chain.transitions, zero_tol)
    comps = _tarjan_scc(succ)
    recurrent = []
    transient: list[int] = []
    for comp in comps:
        members = set(comp)
        closed = all(w in members for v in comp for w in succ[v])
        if closed:
            recurrent.append(tuple(comp))
        else:
            transient.extend(comp)
    recurrent.sort(key=lambda c: c[0])
    return ClassDecomposition(tuple(recurrent), tuple(sorted(transient)))


def _reach_after_step(matrix: np.ndarray, zero_tol: float) -> list[int]:
    """Per-node bitmask of states reachable in one or more steps.

    Works on the component condensation: each component's descendant
    set is the union of its successors' closures, computed in reverse
    topological order (Tarjan emits components in that order already).
    """
    succ = _successors(matrix, zero_tol)
    comps = _tarjan_scc(succ)
    n = len(succ)
    comp_of = [0] * n
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_of[v] = ci
    comp_mask = [0] * len(comps)
    for ci, comp in enumerate(comps):
        for v in comp:
            comp_mask[ci] |= 1 << v
    # Tarjan yields components children-first, so closures of successors
    # are final by the time a component is processed.
    closure = [0] * len(comps)
    for ci, comp in enumerate(comps):
        acc = comp_mask[ci]
        for v in comp:
            for w in succ[v]:
                cw = comp_of[w]
                if cw != ci:
                    acc |= closure[cw]
        closure[ci] = acc
    reach = [0] * n
    for v in range(n):
        acc = 0
        for w in succ[v]:
            acc |= closure[comp_of[w]]
        reach[v] = acc
    return reach


def _symbol_access_matrix(chain: HigherOrderChain, zero_tol: float) -> np.ndarray:
    """acc[a, b] True when symbol b is accessible from symbol a, i.e.
    from every prefix u the window (u, a) eventually emits b."""
    m = chain.alphabet.size
    k = chain.order
    lifted = lift(chain).transitions
    reach = _reach_after_step(lifted, zero_tol)
    n = lifted.shape[0]
    ends_in = [0] * m
    for j in range(n):
        ends_in[j % m] |= 1 << j
    acc = np.zeros((m, m), dtype=bool)
    nprefix = n // m
    full = (1 << m) - 1
    for a in range(m):
        # intersect, over all prefixes u, the set of symbols some
        # reachable window ends in
        hit_syms = full
        for u in range(nprefix):
            ru = reach[u * m + a]
            syms = 0
            for b in range(m):
                if ru & ends_in[b]:
                    syms |= 1 << b
            hit_syms &= syms
            if hit_syms == 0:
                break
        for b in range(m):
            acc[a, b] = bool(hit_syms & (1 << b))
    return acc


def accessible(
    chain: HigherOrderChain, z_from: str, z_to: str, zero_tol: float = ZERO_TOL
) -> bool:
    """Whether z_to is accessible from z_from regardless of the prefix
    the chain starts with."""
    acc = _symbol_access_matrix(chain, zero_tol)
    a = chain.alphabet.index_of(z_from)
    b = chain.alphabet.index_of(z_to)
    return bool(acc[a, b])


def classify_higher_order(
    chain: HigherOrderChain, zero_tol: float = ZERO_TOL
) -> ClassDecomposition:
    """Symbol-level decomposition of an order-k chain.

    Symbols that cannot re-access themselves are transient.  The rest
    split into mutual-access classes; a class is recurrent when no
    symbol outside it is accessible from inside.  For k=1 this agrees
    with classify_first_order.
    """
    acc = _symbol_access_matrix(chain, zero_tol)
    m = chain.alphabet.size
    selfcomm = [a for a in range(m) if acc[a, a]]
    assigned = set()
    classes = []
    for a in selfcomm:
        if a in assigned:
            continue
        cls = [b for b in selfcomm if acc[a, b] and acc[b, a]]
        assigned.update(cls)
        classes.append(tuple(sorted(cls)))
    recurrent = []
    transient = [a for a in range(m) if a not in assigned]
    for cls in classes:
        members = set(cls)
        closed = all(not acc[a, b] or b in members for a in cls for b in range(m))
        if closed:
            recurrent.append(cls)
        else:
            transient.extend(cls)
    recurrent.sort(key=lambda c: c[0])
    return ClassDecomposition(tuple(recurrent), tuple(sorted(transient)))


def is_regular(
    chain: HigherOrderChain,
    n_max: int | None = None,
    zero_tol: float = ZERO_TOL,
) -> int | None:
    """Smallest n at which every context gives every symbol positive
    probability n steps ahead, or None if none exists up to n_max.

    The search walks exact-step boolean reachability on the lift, so
    positivity is decided structurally rather than through floating
    matrix powers that could underflow.  n_max defaults to
    4 * (m**k)**2, comfortably past the worst primitivity index.
    """
    m = chain.alphabet.size
    n_states = chain.n_contexts
    if n_max is None:
        n_max = 4 * n_states * n_states
    adj = (lift(chain).transitions > zero_tol).astype(np.int64)
    last = np.zeros((n_states, m), dtype=np.int64)
    last[np.arange(n_states), np.arange(n_states) % m] = 1
    bn = adj
    for n in range(1, n_max + 1):
        if (bn @ last).all():
            return n
        if n < n_max:
            bn = ((bn @ adj) > 0).astype(np.int64)
    return None


def single_recurrent_class(
    chain: HigherOrderChain, zero_tol: float = ZERO_TOL
) -> bool:
    """True when the lift of the chain has exactly one recurrent class."""
    if chain.order == 1:
        return classify_first_order(chain, zero_tol).num_recurrent == 1
    return classify_first_order(lift(chain), zero_tol).num_recurrent == 1
