"""Independent brute-force reference implementations for the tests.

Everything here recomputes results from first principles (path
enumeration, dense boolean powers, SVD), deliberately avoiding the
package's own algorithms so agreement between the two routes means
something.
"""

from __future__ import annotations

import itertools

import numpy as np


def enum_lumped_marginal(p, pi, gmap, ny, n):
    """Marginal of Y_0..Y_{n-1} for Y = g(X) by enumerating x-paths."""
    nx = p.shape[0]
    out = np.zeros(ny**n)
    for xs in itertools.product(range(nx), repeat=n):
        mass = pi[xs[0]]
        for a, b in zip(xs, xs[1:]):
            mass *= p[a, b]
        idx = 0
        for x in xs:
            idx = idx * ny + gmap[x]
        out[idx] += mass
    return out


def enum_chain_marginal(rows, m, k, start, n):
    """Arity-n marginal of an order-k chain by enumerating sequences.

    rows is the (m**k, m) transition table, start the flat arity-k
    start table; contexts are encoded earliest-symbol-most-significant.
    """
    assert n >= k
    out = np.zeros(m**n)
    for seq in itertools.product(range(m), repeat=n):
        ctx = 0
        for z in seq[:k]:
            ctx = ctx * m + z
        mass = start[ctx]
        for t in range(k, n):
            ctx = 0
            for z in seq[t - k : t]:
                ctx = ctx * m + z
            mass *= rows[ctx, seq[t]]
        idx = 0
        for z in seq:
            idx = idx * m + z
        out[idx] += mass
    return out


def lift_rows(rows, m, k):
    """Dense first-order matrix on windows, built independently."""
    n = m**k
    p = np.zeros((n, n))
    for i in range(n):
        for z in range(m):
            j = (i % m ** (k - 1)) * m + z
            p[i, j] += rows[i, z]
    return p


def bool_power_decomposition(p, tol=1e-12):
    """Recurrent classes and transients from boolean matrix powers.

    reach[i, j] is computed by accumulating A + A^2 + ... + A^n; i is
    recurrent iff everything it reaches reaches it back, and classes
    group mutually reaching recurrent states.
    """
    n = p.shape[0]
    a = p > tol
    reach = a.copy()
    power = a.copy()
    for _ in range(n):
        power = (power.astype(np.int64) @ a.astype(np.int64)) > 0
        reach |= power
    recurrent = [
        i
        for i in range(n)
        if all(reach[j, i] for j in range(n) if reach[i, j])
    ]
    classes = []
    seen = set()
    for i in recurrent:
        if i in seen:
            continue
        cls = [
            j
            for j in recurrent
            if (reach[i, j] and reach[j, i]) or j == i
        ]
        seen.update(cls)
        classes.append(tuple(sorted(cls)))
    classes.sort(key=lambda c: c[0])
    transient = tuple(i for i in range(n) if i not in seen)
    return tuple(classes), transient


def nullspace_dim(mat, tol=1e-9):
    """Dimension of the nullspace by singular values below tol."""
    s = np.linalg.svd(mat, compute_uv=False)
    return int(np.sum(s <= tol))


def brute_symbol_accessible(rows, m, k, a, b, tol=1e-12):
    """Accessibility of symbol b from a by bounded n-step positivity.

    From every prefix window ending in a, some power n <= m**k * k of
    the window walk must put positive mass on a window ending in b.
    """
    lifted = lift_rows(rows, m, k)
    n_states = m**k
    bound = n_states * k
    for u in range(m ** (k - 1)):
        state = u * m + a
        found = False
        row = lifted[state].copy()
        for _ in range(bound):
            if sum(row[j] for j in range(n_states) if j % m == b) > tol:
                found = True
                break
            row = row @ lifted
        if not found:
            return False
    return True


def kl_by_enumeration(p_table, q_table, m, n, tol=1e-12):
    """KL divergence over arity-n tables by explicit iteration."""
    total = 0.0
    for idx in range(m**n):
        p = p_table[idx]
        if p > tol:
            total += p * np.log(p / q_table[idx])
    return total
