"""Hot array kernels with selectable backend.

Two interchangeable implementations of the table-heavy inner loops:
a vectorized pure-numpy path and a numba @njit path.  The active
backend is chosen at import time from the HOMARKOV_BACKEND environment
variable ("numba", "numpy", or "auto"; default "auto" picks numba when
it is importable).  Both implementations are kept importable so tests
and benchmarks can compare them directly.

All kernels operate on flat float64 tables indexed row-major over
symbol tuples, earliest symbol most significant.
"""

from __future__ import annotations

import math
import os

import numpy as np


# ---------------------------------------------------------------------------
# pure-numpy implementations


def _extend_joint_numpy(table: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Extend a length-L flat joint table by one symbol.

    out[s*m + z] = table[s] * rows[s mod C, z], where rows is the
    (C, m) conditional-row table and C divides L.  Appending a symbol
    only ever conditions on the trailing context digits, which is what
    the modulus picks out.
    """
    ncontexts, m = rows.shape
    reps = table.shape[0] // ncontexts
    out = table.reshape(reps, ncontexts, 1) * rows.reshape(1, ncontexts, m)
    return out.reshape(-1)


def _project_table_numpy(table, gmap, size_in, size_out, arity):
    """Aggregate a flat table over X^arity onto Y^arity through gmap."""
    idx = np.arange(table.shape[0], dtype=np.int64)
    mapped = np.zeros_like(idx)
    for t in range(arity):
        digit = (idx // size_in ** (arity - 1 - t)) % size_in
        mapped = mapped * size_out + gmap[digit]
    return np.bincount(mapped, weights=table, minlength=size_out**arity)


def _kl_sum_numpy(p: np.ndarray, q: np.ndarray, tol: float):
    """Sum p*log(p/q) over entries with p > tol.

    Returns (value, bad) where bad is the first index with p > tol but
    q <= tol (divergence undefined there), or -1 if none.
    """
    sup = p > tol
    bad = sup & (q <= tol)
    if bad.any():
        return 0.0, int(np.argmax(bad))
    ps = p[sup]
    return float(np.sum(ps * np.log(ps / q[sup]))), -1


def _lump_step_numpy(alpha, trans, gmap, size_out):
    """One step of the lumped forward recursion.

    alpha has shape (S, X) with alpha[s, x] the joint mass of output
    prefix s ending in hidden state x.  Returns shape (S*size_out, X):
    out[s*size_out + gmap[x'], x'] = sum_x alpha[s, x] * trans[x, x'].
    """
    nx = trans.shape[0]
    step = alpha @ trans
    mask = np.zeros((size_out, nx))
    mask[gmap, np.arange(nx)] = 1.0
    out = step[:, None, :] * mask[None, :, :]
    return out.reshape(-1, nx)


_NUMPY_IMPL = {
    "extend_joint": _extend_joint_numpy,
    "project_table": _project_table_numpy,
    "kl_sum": _kl_sum_numpy,
    "lump_step": _lump_step_numpy,
}


# ---------------------------------------------------------------------------
# numba implementations (straight loops; njit turns them into native code)

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

if HAS_NUMBA:

    @njit(cache=True)
    def _extend_joint_numba(table, rows):
        ncontexts, m = rows.shape
        n = table.shape[0]
        out = np.empty(n * m)
        for s in range(n):
            c = s % ncontexts
            v = table[s]
            base = s * m
            for z in range(m):
                out[base + z] = v * rows[c, z]
        return out

    @njit(cache=True)
    def _project_table_numba(table, gmap, size_in, size_out, arity):
        out = np.zeros(size_out**arity)
        strides = np.empty(arity, dtype=np.int64)
        d = 1
        for t in range(arity - 1, -1, -1):
            strides[t] = d
            d *= size_in
        for s in range(table.shape[0]):
            mapped = 0
            for t in range(arity):
                digit = (s // strides[t]) % size_in
                mapped = mapped * size_out + gmap[digit]
            out[mapped] += table[s]
        return out

    @njit(cache=True)
    def _kl_sum_numba(p, q, tol):
        total = 0.0
        for i in range(p.shape[0]):
            if p[i] > tol:
                if q[i] <= tol:
                    return 0.0, i
                total += p[i] * math.log(p[i] / q[i])
        return total, -1

    @njit(cache=True)
    def _lump_step_numba(alpha, trans, gmap, size_out):
        ns, nx = alpha.shape
        out = np.zeros((ns * size_out, nx))
        for s in range(ns):
            for x2 in range(nx):
                acc = 0.0
                for x in range(nx):
                    acc += alpha[s, x] * trans[x, x2]
                out[s * size_out + gmap[x2], x2] = acc
        return out

    _NUMBA_IMPL = {
        "extend_joint": _extend_joint_numba,
        "project_table": _project_table_numba,
        "kl_sum": _kl_sum_numba,
        "lump_step": _lump_step_numba,
    }
else:  # pragma: no cover
    _NUMBA_IMPL = None


def _select_backend() -> str:
    requested = os.environ.get("HOMARKOV_BACKEND", "auto").strip().lower()
    if requested in ("", "auto"):
        return "numba" if HAS_NUMBA else "numpy"
    if requested == "numba":
        if not HAS_NUMBA:
            raise ImportError(
                "HOMARKOV_BACKEND=numba but numba is not importable"
            )
        return "numba"
    if requested == "numpy":
        return "numpy"
    raise ValueError(
        "HOMARKOV_BACKEND must be 'numba', 'numpy', or 'auto', "
        f"got {requested!r}"
    )


BACKEND = _select_backend()
_ACTIVE = _NUMBA_IMPL if BACKEND == "numba" else _NUMPY_IMPL

extend_joint = _ACTIVE["extend_joint"]
project_table = _ACTIVE["project_table"]
kl_sum = _ACTIVE["kl_sum"]
lump_step = _ACTIVE["lump_step"]


def warmup() -> None:
    """Run every active kernel once on tiny inputs.

    With the numba backend this forces JIT compilation (or a cache
    load) up front so later timing does not include it.  Harmless on
    the numpy backend.
    """
    table = np.array([0.5, 0.5])
    rows = np.array([[0.5, 0.5], [0.25, 0.75]])
    gmap = np.array([0, 0], dtype=np.int64)
    extend_joint(table, rows)
    project_table(table, gmap, 2, 1, 1)
    kl_sum(table, table, 1e-12)
    lump_step(rows, rows, gmap, 1)
