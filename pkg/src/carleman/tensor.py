"""Tensor-algebra primitives on the truncated Fock space.

The ambient space is H = C^d and states live on the graded sum
H + H^2 + ... + H^N (tensor powers, dimension K(N) = sum_k d^k).  The
workhorse is the symmetrized sum

    S_n(A) = sum_{i=0}^{n-1}  1^i (x) A (x) 1^(n-1-i)

which generates the product-rule dynamics of tensor powers: if
phi' = D phi then (phi^n)' = S_n(D) phi^n.  Everything is dense
complex numpy by default; `symm_sum_rect` also accepts scipy sparse
matrices, and `apply_symm_sum` applies S_n(A) without forming it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
import scipy.sparse as sp

__all__ = [
    "Operator",
    "FockVector",
    "kron",
    "kron_power",
    "symm_sum",
    "symm_sum_rect",
    "apply_symm_sum",
    "embed",
    "project_level",
    "q_inner",
    "q_norm",
    "level_offsets",
]


def kron(a, b):
    """Kronecker product with the row-major convention e_i (x) e_j -> i*dB + j.

    This is numpy's convention; it is pinned here because every index
    computation in the package (symmetrized sums, Carleman blocks, mode
    bookkeeping) relies on it.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    return np.kron(a, b)


def kron_power(v, n: int):
    """n-fold Kronecker power of a vector (or matrix). n >= 1."""
    if n < 1:
        raise ValueError("tensor power needs n >= 1")
    v = np.asarray(v)
    return reduce(np.kron, [v] * n)


def _level_of(size: int, d: int) -> int:
    """Integer k with d**k == size (k := 1 when d == 1)."""
    if d == 1:
        if size != 1:
            raise ValueError(f"dimension {size} is not a power of base 1")
        return 1
    k = int(round(math.log(size) / math.log(d)))
    for cand in (k - 1, k, k + 1):
        if cand >= 0 and d**cand == size:
            return cand
    raise ValueError(f"dimension {size} is not a power of base {d}")


def _eye(m: int, sparse: bool):
    return sp.identity(m, format="csr", dtype=complex) if sparse else np.eye(m, dtype=complex)


def _kron(a, b, sparse: bool):
    return sp.kron(a, b, format="csr") if sparse else np.kron(a, b)


def symm_sum(a, n: int):
    """Symmetrized sum S_n(A) of a square matrix A.

    S_1(A) = A and S_n(A) = sum_i 1^i (x) A (x) 1^(n-1-i) acting on the
    n-th tensor power.  Linear in A, commutes with the adjoint, and maps
    eigenpairs (lam, v) of A to (n*lam, v^n).
    """
    is_sparse = sp.issparse(a)
    if not is_sparse:
        a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"symm_sum needs a square matrix, got shape {a.shape}")
    return symm_sum_rect(a, n, base_dim=a.shape[0])


def symm_sum_rect(a, n: int, base_dim: int | None = None):
    """Symmetrized sum of a rectangular level-coupling operator.

    For A mapping H^s -> H^r (shape d^r x d^s over base dimension d),
    returns S_n(A) = sum_{i=0}^{n-1} 1^i (x) A (x) 1^(n-1-i), which maps
    H^(n-1+s) -> H^(n-1+r).  The Carleman blocks S_i(W_j) are the r = 1,
    s = j case.  `base_dim` is required whenever the shape alone is
    ambiguous (it defaults to the row count, the r = 1 reading).

    Accepts dense arrays or scipy sparse matrices and returns the same kind.
    """
    if n < 1:
        raise ValueError("symmetrized sum needs n >= 1")
    is_sparse = sp.issparse(a)
    if is_sparse:
        a = a.tocsr().astype(complex)
    else:
        a = np.asarray(a, dtype=complex)
        if a.ndim != 2:
            raise ValueError("operator must be a matrix")
        if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
            raise ValueError("operator entries must be finite")
    rows, cols = a.shape
    d = rows if base_dim is None else int(base_dim)
    if d < 1:
        raise ValueError("base dimension must be positive")
    _level_of(rows, d)  # validates rows is a power of d
    _level_of(cols, d)
    if n == 1:
        return a.copy()
    out = None
    for i in range(n):
        term = _kron(_kron(_eye(d**i, is_sparse), a, is_sparse), _eye(d ** (n - 1 - i), is_sparse), is_sparse)
        out = term if out is None else out + term
    return out


def apply_symm_sum(a, n: int, v, base_dim: int | None = None):
    """Action of S_n(A) on a vector without assembling the matrix.

    A maps H^s -> H^r (shape d^r x d^s); v must have length d^(n-1+s) and
    the result has length d^(n-1+r).  Each summand contracts A against s
    adjacent tensor slots of v.  Intended for d^n past the dense comfort
    zone (the assembled matrix would have d^(2n) entries).
    """
    if n < 1:
        raise ValueError("symmetrized sum needs n >= 1")
    a = np.asarray(a, dtype=complex)
    v = np.asarray(v, dtype=complex).ravel()
    rows, cols = a.shape
    d = rows if base_dim is None else int(base_dim)
    r = _level_of(rows, d)
    s = _level_of(cols, d)
    if v.size != d ** (n - 1 + s):
        raise ValueError(f"vector length {v.size} does not match d^(n-1+s) = {d ** (n - 1 + s)}")
    out = np.zeros(d ** (n - 1 + r), dtype=complex)
    for i in range(n):
        pre, post = d**i, d ** (n - 1 - i)
        chunk = v.reshape(pre, d**s, post)
        # contract A against the middle block of s slots
        acted = np.einsum("rc,pcq->prq", a, chunk)
        out += acted.reshape(-1)
    return out


@dataclass(frozen=True)
class Operator:
    """A complex matrix acting between tensor-power levels.

    `entries` has shape (d^target_level, d^source_level); the levels record
    where the block sits in the graded Carleman structure (W_j has
    source_level j, target_level 1; S_i(W_j) has source i+j-1, target i).
    """

    entries: np.ndarray
    source_level: int
    target_level: int
    base_dim: int

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        object.__setattr__(self, "entries", entries)
        d = self.base_dim
        if d < 1 or self.source_level < 1 or self.target_level < 1:
            raise ValueError("levels and base dimension must be positive")
        expect = (d**self.target_level, d**self.source_level)
        if entries.shape != expect:
            raise ValueError(f"entries shape {entries.shape} does not match levels, expected {expect}")
        if not np.all(np.isfinite(entries.real)) or not np.all(np.isfinite(entries.imag)):
            raise ValueError("operator entries must be finite")

    def adjoint(self) -> "Operator":
        return Operator(self.entries.conj().T, self.target_level, self.source_level, self.base_dim)

    def symmetrized(self, n: int) -> "Operator":
        """S_n of this operator, with the level bookkeeping carried along."""
        ent = symm_sum_rect(self.entries, n, base_dim=self.base_dim)
        return Operator(ent, n - 1 + self.source_level, n - 1 + self.target_level, self.base_dim)


def level_offsets(d: int, n_max: int) -> list[int]:
    """Start offsets of each level in the stacked K(N) vector (index k-1)."""
    offs = [0]
    for k in range(1, n_max + 1):
        offs.append(offs[-1] + d**k)
    return offs


@dataclass(frozen=True)
class FockVector:
    """Level-graded vector (v_1, ..., v_N) with v_k in C^(d^k).

    The Q inner product is the plain sum of per-level inner products (all
    level weights fixed to the identity).  The factorial-weighted variant
    is deliberately not implemented; passing weights raises.
    """

    levels: tuple
    base_dim: int
    weights: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.weights is not None:
            raise NotImplementedError("non-identity level weights are not supported")
        d = self.base_dim
        if d < 1:
            raise ValueError("base dimension must be positive")
        levels = tuple(np.asarray(v, dtype=complex).ravel() for v in self.levels)
        if not levels:
            raise ValueError("need at least one level")
        for k, v in enumerate(levels, start=1):
            if v.size != d**k:
                raise ValueError(f"level {k} has length {v.size}, expected {d**k}")
            if not np.all(np.isfinite(v.real)) or not np.all(np.isfinite(v.imag)):
                raise ValueError("levels must be finite")
        object.__setattr__(self, "levels", levels)

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def dim(self) -> int:
        return sum(v.size for v in self.levels)

    def stacked(self) -> np.ndarray:
        """Concatenate levels into the flat K(N) coordinate vector."""
        return np.concatenate(self.levels)

    @classmethod
    def from_stacked(cls, flat, base_dim: int, n_levels: int) -> "FockVector":
        flat = np.asarray(flat, dtype=complex).ravel()
        offs = level_offsets(base_dim, n_levels)
        if flat.size != offs[-1]:
            raise ValueError(f"flat vector length {flat.size}, expected {offs[-1]}")
        return cls(tuple(flat[offs[k - 1]:offs[k]] for k in range(1, n_levels + 1)), base_dim)

    @classmethod
    def zero(cls, base_dim: int, n_levels: int) -> "FockVector":
        return cls(tuple(np.zeros(base_dim**k, dtype=complex) for k in range(1, n_levels + 1)), base_dim)

    def norm(self) -> float:
        return math.sqrt(max(q_inner(self, self).real, 0.0))


def embed(phi, n_max: int) -> FockVector:
    """E_N(phi): the graded vector of tensor powers (phi, phi^2, ..., phi^N)."""
    if n_max < 1:
        raise ValueError("embedding level must be >= 1")
    phi = np.asarray(phi, dtype=complex).ravel()
    levels = [phi]
    for _ in range(n_max - 1):
        levels.append(np.kron(levels[-1], phi))
    return FockVector(tuple(levels), base_dim=phi.size)


def project_level(v: FockVector, k: int) -> np.ndarray:
    """The level-k component of a graded vector; inverse of embed on level 1."""
    if not 1 <= k <= v.n_levels:
        raise ValueError(f"level {k} out of range 1..{v.n_levels}")
    return v.levels[k - 1].copy()


def q_inner(u: FockVector, v: FockVector) -> complex:
    """Graded inner product sum_k <u_k, v_k>, conjugate-linear in u.

    Vectors with different level counts are compared by zero-padding the
    shorter one; mismatched base dimensions are rejected.
    """
    if u.base_dim != v.base_dim:
        raise ValueError(f"base dimension mismatch: {u.base_dim} vs {v.base_dim}")
    total = 0.0 + 0.0j
    for k in range(min(u.n_levels, v.n_levels)):
        total += np.vdot(u.levels[k], v.levels[k])
    return total


def q_norm(v: FockVector) -> float:
    return v.norm()
