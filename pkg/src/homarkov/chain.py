"""Core types for finite-alphabet higher-order Markov chains.

A chain of order k over an alphabet of m symbols is stored as an
(m**k, m) row-stochastic matrix.  Row indices encode the length-k
context row-major with the earliest symbol most significant, so the
row order for m=2, k=2 is (1,1), (1,2), (2,1), (2,2) when the symbols
are "1" and "2".
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

# Entries smaller than ZERO_TOL are treated as structural zeros; sums and
# row-stochasticity are checked against ROW_TOL.  Most operations accept
# overrides but these defaults are shared across the package and the CLI.
ZERO_TOL = 1e-12
ROW_TOL = 1e-9


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite symbol set; symbol order fixes all encodings."""

    symbols: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(self.symbols) == 0:
            raise ValueError("alphabet must not be empty")
        if any(not s for s in self.symbols):
            raise ValueError("alphabet symbols must be non-empty strings")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be pairwise distinct")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index_of(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise KeyError(f"symbol {symbol!r} not in alphabet") from None

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index


def alphabet_of(symbols: Iterable[str]) -> Alphabet:
    return Alphabet(tuple(symbols))


def encode_context(alphabet: Alphabet, symbols: Sequence[str]) -> int:
    """Row index of a context, earliest symbol most significant."""
    idx = 0
    for s in symbols:
        idx = idx * alphabet.size + alphabet.index_of(s)
    return idx


def decode_context(alphabet: Alphabet, k: int, index: int) -> tuple[str, ...]:
    """Inverse of encode_context for length-k contexts."""
    m = alphabet.size
    if not 0 <= index < m**k:
        raise ValueError(f"context index {index} out of range for size {m}**{k}")
    out = []
    for _ in range(k):
        out.append(alphabet.symbols[index % m])
        index //= m
    return tuple(reversed(out))


def product_alphabet(alphabet: Alphabet, k: int, sep: str = ",") -> Alphabet:
    """Alphabet over length-k symbol tuples, labeled by joining with sep.

    Tuple order matches context encoding, so index i of the product
    alphabet names the context decode_context(alphabet, k, i).
    """
    labels = tuple(
        sep.join(decode_context(alphabet, k, i)) for i in range(alphabet.size**k)
    )
    return Alphabet(labels)


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Probability mass over length-`arity` symbol tuples, stored flat.

    mass[i] is the probability of the tuple decode_context(alphabet,
    arity, i).  Entries must be nonnegative and sum to 1 within ROW_TOL;
    negative floating noise above -ROW_TOL is clamped to zero.
    """

    alphabet: Alphabet
    arity: int
    mass: np.ndarray

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be >= 1")
        m = np.asarray(self.mass, dtype=np.float64)
        expected = self.alphabet.size**self.arity
        if m.shape != (expected,):
            raise ValueError(
                f"mass must have shape ({expected},), got {m.shape}"
            )
        if m.min(initial=0.0) < -ROW_TOL:
            raise ValueError(f"negative mass entry {m.min()}")
        m = np.where(m < 0.0, 0.0, m)
        total = m.sum()
        if abs(total - 1.0) > ROW_TOL:
            raise ValueError(f"mass sums to {total}, not 1")
        object.__setattr__(self, "mass", _readonly(m))

    def prob(self, symbols: Sequence[str]) -> float:
        if len(symbols) != self.arity:
            raise ValueError(f"expected {self.arity} symbols, got {len(symbols)}")
        return float(self.mass[encode_context(self.alphabet, symbols)])

    def support(self, zero_tol: float = ZERO_TOL) -> tuple[int, ...]:
        """Indices carrying mass above zero_tol, ascending."""
        return tuple(int(i) for i in np.nonzero(self.mass > zero_tol)[0])

    def leading_marginal(self, n: int) -> "JointDistribution":
        """Marginal of the first n coordinates (sum over the rest)."""
        if not 1 <= n <= self.arity:
            raise ValueError(f"marginal arity {n} out of range 1..{self.arity}")
        if n == self.arity:
            return self
        m = self.alphabet.size
        folded = self.mass.reshape(m**n, m ** (self.arity - n)).sum(axis=1)
        return JointDistribution(self.alphabet, n, folded)


def uniform_distribution(alphabet: Alphabet, arity: int = 1) -> JointDistribution:
    n = alphabet.size**arity
    return JointDistribution(alphabet, arity, np.full(n, 1.0 / n))


@dataclass(frozen=True, eq=False)
class HigherOrderChain:
    """Order-k chain: transition rows indexed by encoded contexts.

    transitions[c, z] is the probability of emitting symbol z from
    context c.  Construction checks shape only; stochasticity is the
    job of validate_chain so that defective matrices can still be
    loaded and reported on.
    """

    alphabet: Alphabet
    order: int
    transitions: np.ndarray

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        t = np.asarray(self.transitions, dtype=np.float64)
        expected = (self.alphabet.size**self.order, self.alphabet.size)
        if t.shape != expected:
            raise ValueError(
                f"transitions must have shape {expected}, got {t.shape}"
            )
        object.__setattr__(self, "transitions", _readonly(t))

    @property
    def n_contexts(self) -> int:
        return self.alphabet.size**self.order

    def context_symbols(self, index: int) -> tuple[str, ...]:
        return decode_context(self.alphabet, self.order, index)

    def successor(self, context_index: int, symbol_index: int) -> int:
        """Encoded context after sliding one symbol into context_index."""
        m = self.alphabet.size
        return (context_index % m ** (self.order - 1)) * m + symbol_index


@dataclass(frozen=True, eq=False)
class LumpingFunction:
    """Surjective symbol map g from a domain alphabet onto a codomain.

    index_map[i] is the codomain index of domain symbol i.  The
    codomain must have at least 2 symbols and no more than the domain.
    """

    domain: Alphabet
    codomain: Alphabet
    index_map: np.ndarray

    def __post_init__(self):
        im = np.asarray(self.index_map, dtype=np.int64)
        if im.shape != (self.domain.size,):
            raise ValueError(
                f"index_map must have shape ({self.domain.size},), got {im.shape}"
            )
        if im.min() < 0 or im.max() >= self.codomain.size:
            raise ValueError("index_map entries out of codomain range")
        if self.codomain.size < 2:
            raise ValueError("codomain must have at least 2 symbols")
        if self.codomain.size > self.domain.size:
            raise ValueError("codomain must not exceed the domain in size")
        if len(set(im.tolist())) != self.codomain.size:
            missing = set(range(self.codomain.size)) - set(im.tolist())
            names = [self.codomain.symbols[i] for i in sorted(missing)]
            raise ValueError(f"map not surjective: {names} never hit")
        im = np.array(im)
        im.setflags(write=False)
        object.__setattr__(self, "index_map", im)

    def apply(self, symbol: str) -> str:
        return self.codomain.symbols[self.index_map[self.domain.index_of(symbol)]]

    def apply_sequence(self, symbols: Sequence[str]) -> tuple[str, ...]:
        return tuple(self.apply(s) for s in symbols)

    def preimage(self, codomain_symbol: str) -> tuple[str, ...]:
        y = self.codomain.index_of(codomain_symbol)
        return tuple(
            self.domain.symbols[i]
            for i in range(self.domain.size)
            if self.index_map[i] == y
        )


def lumping_from_pairs(
    domain: Alphabet, codomain: Alphabet, pairs: dict[str, str]
) -> LumpingFunction:
    im = np.empty(domain.size, dtype=np.int64)
    for i, s in enumerate(domain.symbols):
        if s not in pairs:
            raise ValueError(f"no image given for domain symbol {s!r}")
        im[i] = codomain.index_of(pairs[s])
    return LumpingFunction(domain, codomain, im)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate_chain(chain: HigherOrderChain, row_tol: float = ROW_TOL) -> ValidationReport:
    """Check shape, entry bounds, and row sums; report every violation.

    Violations name the offending context and entry so a defective row
    in a hand-written model file can be located directly.
    """
    violations: list[str] = []
    t = chain.transitions
    for c in range(chain.n_contexts):
        label = ",".join(chain.context_symbols(c))
        for z in range(chain.alphabet.size):
            v = float(t[c, z])
            if v < -row_tol or v > 1.0 + row_tol:
                violations.append(
                    f"entry out of [0,1]: context ({label}) "
                    f"symbol {chain.alphabet.symbols[z]} value {v!r}"
                )
        s = float(t[c].sum())
        if abs(s - 1.0) > row_tol:
            violations.append(f"row not stochastic: context ({label}) sums to {s!r}")
    return ValidationReport(ok=not violations, violations=tuple(violations))


def lift(chain: HigherOrderChain) -> HigherOrderChain:
    """First-order chain on length-k windows equivalent to the input.

    State (z'_0,...,z'_{k-1}) moves to (z'_1,...,z'_{k-1},z) with the
    probability the original chain emits z from that context; every
    transition violating the one-symbol shift has probability zero.
    For k=1 the result equals the input chain.
    """
    m = chain.alphabet.size
    k = chain.order
    n = m**k
    p = np.zeros((n, n))
    shift = m ** (k - 1)
    for i in range(n):
        base = (i % shift) * m
        p[i, base : base + m] = chain.transitions[i]
    return HigherOrderChain(product_alphabet(chain.alphabet, k), 1, p)


def n_step_matrix(chain: HigherOrderChain, n: int) -> np.ndarray:
    """Distribution of the symbol n steps ahead of each context.

    Returns the (m**k, m) matrix whose (c, z) entry is the probability
    that the symbol emitted at step n is z given starting context c.
    For n=1 this reproduces the transition matrix exactly.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    m = chain.alphabet.size
    lifted = lift(chain).transitions
    pn = np.linalg.matrix_power(lifted, n)
    # lifted states with the same trailing symbol collapse onto that symbol
    return pn.reshape(chain.n_contexts, chain.n_contexts // m, m).sum(axis=1)
