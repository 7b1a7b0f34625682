"""Assembly of truncated Carleman matrices for polynomial ODE systems.

A system phi' = W_1 phi + W_2 phi^2 + ... + W_p phi^p (tensor powers) lifts
to a linear system on the graded space H + H^2 + ... + H^N with block
structure C[i, i+j-1] = S_i(W_j); blocks whose column level exceeds N are
dropped, which is the only truncation made.  C splits as A + B with A the
block diagonal Diag(S_i(W_1)) and B the coupling part.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import permutations

import numpy as np
import scipy.sparse as sp

from .tensor import FockVector, apply_symm_sum, kron_power, level_offsets, symm_sum_rect

__all__ = [
    "NonlinearSystem",
    "CarlemanSystem",
    "NotStrictlyDissipative",
    "assemble",
    "split_A_B",
    "rescale",
    "parameter_R",
    "symmetrize_input",
    "is_input_symmetric",
]

# Assembled size above which the Carleman matrix is built in CSR form.
SPARSE_CUTOFF = 4096


class NotStrictlyDissipative(ValueError):
    """Raised when R is requested but the spectrum of W_1 meets Re >= 0."""


@dataclass(frozen=True)
class NonlinearSystem:
    """Polynomial ODE u' = sum_j W_j u^j with W_j : H^j -> H.

    `coeffs[j-1]` is W_j with shape (d, d^j); zero matrices are fine for
    absent intermediate degrees.  For degree p >= 3 the W_j are expected to
    be symmetric under permutation of their input tensor factors; build
    them with `symmetrize_input` if they are not.
    """

    base_dim: int
    coeffs: tuple
    phi0: np.ndarray
    check_symmetry: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        d = self.base_dim
        if d < 1:
            raise ValueError("base dimension must be positive")
        coeffs = tuple(np.asarray(w, dtype=complex) for w in self.coeffs)
        if not coeffs:
            raise ValueError("need at least W_1")
        for j, w in enumerate(coeffs, start=1):
            if w.shape != (d, d**j):
                raise ValueError(f"W_{j} has shape {w.shape}, expected {(d, d**j)}")
            if not np.all(np.isfinite(w.real)) or not np.all(np.isfinite(w.imag)):
                raise ValueError(f"W_{j} has non-finite entries")
        phi0 = np.asarray(self.phi0, dtype=complex).ravel()
        if phi0.size != d:
            raise ValueError(f"phi0 has length {phi0.size}, expected {d}")
        if self.check_symmetry:
            for j, w in enumerate(coeffs, start=1):
                if j >= 2 and not is_input_symmetric(w, d):
                    raise ValueError(f"W_{j} is not symmetric under input-factor permutations")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "phi0", phi0)

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def W(self, j: int) -> np.ndarray:
        """Coefficient W_j (1-based degree)."""
        if not 1 <= j <= self.degree:
            raise ValueError(f"degree index {j} outside 1..{self.degree}")
        return self.coeffs[j - 1]

    def rhs(self, u) -> np.ndarray:
        """Right-hand side sum_j W_j u^j at the state u."""
        u = np.asarray(u, dtype=complex).ravel()
        out = np.zeros(self.base_dim, dtype=complex)
        power = None
        for j, w in enumerate(self.coeffs, start=1):
            power = u if power is None else np.kron(power, u)
            out += w @ power
        return out


def is_input_symmetric(w, d: int, tol: float = 1e-12) -> bool:
    """True when W: H^j -> H is invariant under permuting input factors."""
    w = np.asarray(w, dtype=complex)
    j = _input_degree(w, d)
    if j == 1:
        return True
    scale = max(1.0, np.abs(w).max())
    tens = w.reshape((d,) + (d,) * j)
    for perm in permutations(range(j)):
        axes = (0,) + tuple(1 + p for p in perm)
        if np.abs(tens - tens.transpose(axes)).max() > tol * scale:
            return False
    return True


def symmetrize_input(w, d: int) -> np.ndarray:
    """Average W: H^j -> H over permutations of its input tensor factors.

    Leaves the induced polynomial map u -> W u^j unchanged.
    """
    w = np.asarray(w, dtype=complex)
    j = _input_degree(w, d)
    if j == 1:
        return w.copy()
    tens = w.reshape((d,) + (d,) * j)
    acc = np.zeros_like(tens)
    perms = list(permutations(range(j)))
    for perm in perms:
        axes = (0,) + tuple(1 + p for p in perm)
        acc += tens.transpose(axes)
    return (acc / len(perms)).reshape(d, d**j)


def _input_degree(w: np.ndarray, d: int) -> int:
    if w.ndim != 2 or w.shape[0] != d:
        raise ValueError(f"expected a (d, d^j) matrix with d={d}, got shape {w.shape}")
    if d == 1:
        if w.shape[1] != 1:
            raise ValueError("scalar systems need 1x1 coefficients")
        return 1
    j = int(round(math.log(w.shape[1]) / math.log(d)))
    if d**j != w.shape[1]:
        raise ValueError(f"column count {w.shape[1]} is not a power of d={d}")
    return j


@dataclass(frozen=True)
class CarlemanSystem:
    """Truncated Carleman matrix with its block map.

    blocks[(i, m)] = S_i(W_{m-i+1}) maps level m to level i; the assembled
    matrix acts on stacked graded vectors of total dimension
    K(N) = sum_{k<=N} d^k.  `matrix` is dense or CSR depending on size.
    """

    base_dim: int
    level: int
    blocks: dict
    matrix: object
    system: NonlinearSystem = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def offsets(self) -> list[int]:
        return level_offsets(self.base_dim, self.level)

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else self.matrix

    def wrap(self, flat) -> FockVector:
        return FockVector.from_stacked(flat, self.base_dim, self.level)


def assemble(sys: NonlinearSystem, n_level: int, sparse: bool | None = None) -> CarlemanSystem:
    """Build the level-N truncation C_N of the Carleman lift of `sys`.

    Diagonal blocks are S_i(W_1); the coupling block from level i+j-1 down
    to level i is S_i(W_j), dropped entirely when i+j-1 > N.  With
    `sparse=None` the storage switches to CSR once K(N) > 4096.
    """
    if n_level < 1:
        raise ValueError("Carleman level must be >= 1")
    d = sys.base_dim
    offs = level_offsets(d, n_level)
    k_total = offs[-1]
    if sparse is None:
        sparse = k_total > SPARSE_CUTOFF

    blocks: dict = {}
    for i in range(1, n_level + 1):
        for j in range(1, sys.degree + 1):
            m = i + j - 1
            if m > n_level:
                break
            w = sys.W(j)
            block = sp.csr_matrix(w) if sparse else w
            blocks[(i, m)] = symm_sum_rect(block, i, base_dim=d)

    if sparse:
        grid = [[blocks.get((i, m)) for m in range(1, n_level + 1)] for i in range(1, n_level + 1)]
        matrix = sp.bmat(grid, format="csr", dtype=complex)
    else:
        matrix = np.zeros((k_total, k_total), dtype=complex)
        for (i, m), block in blocks.items():
            matrix[offs[i - 1]:offs[i], offs[m - 1]:offs[m]] = block
    return CarlemanSystem(base_dim=d, level=n_level, blocks=blocks, matrix=matrix, system=sys)


def split_A_B(cs: CarlemanSystem):
    """Split C_N = A + B into the block diagonal A = Diag(S_i(W_1)) and the rest."""
    offs = cs.offsets
    if cs.is_sparse:
        a = sp.lil_matrix(cs.matrix.shape, dtype=complex)
    else:
        a = np.zeros_like(cs.matrix)
    for i in range(1, cs.level + 1):
        block = cs.blocks.get((i, i))
        if block is not None:
            a[offs[i - 1]:offs[i], offs[i - 1]:offs[i]] = block
    if cs.is_sparse:
        a = a.tocsr()
    b = cs.matrix - a
    return a, b


def rescale(sys: NonlinearSystem, scale: float) -> NonlinearSystem:
    """Non-dimensionalizing change of variables u = M psi.

    Returns the system for psi: W_j -> M^(j-1) W_j and phi0 -> phi0 / M.
    Requires M > ||phi0|| so the new initial condition has norm < 1.
    """
    m = float(scale)
    if m <= 0:
        raise ValueError("scale must be positive")
    norm0 = float(np.linalg.norm(sys.phi0))
    if m <= norm0:
        raise ValueError(f"scale {m} must exceed ||phi0|| = {norm0}")
    coeffs = tuple(m ** (j - 1) * w for j, w in enumerate(sys.coeffs, start=1))
    return NonlinearSystem(sys.base_dim, coeffs, sys.phi0 / m)


def _re_lambda_max(w1: np.ndarray) -> float:
    """Largest real part over the eigenvalues of W_1, with a flagged fallback.

    When the eigenvector matrix is numerically singular (defective W_1) the
    spectral abscissa is ill-conditioned; fall back to the largest
    eigenvalue of the Hermitian part, which upper-bounds it, and warn.
    """
    vals, vecs = np.linalg.eig(w1)
    cond = np.linalg.cond(vecs)
    if not np.isfinite(cond) or cond > 1e8:
        warnings.warn(
            "W_1 looks non-diagonalizable (eigenvector condition number "
            f"{cond:.2e}); using the Hermitian-part spectrum instead",
            RuntimeWarning,
            stacklevel=3,
        )
        herm = 0.5 * (w1 + w1.conj().T)
        return float(np.linalg.eigvalsh(herm)[-1])
    return float(vals.real.max())


def parameter_R(sys: NonlinearSystem) -> float:
    """Nonlinearity parameter R = ||W_2|| ||phi0|| / |Re lambda_1| (quadratic systems).

    lambda_1 is the eigenvalue of W_1 with the largest real part; ||W_2||
    is the operator 2-norm.  Raises NotStrictlyDissipative when
    Re lambda_1 >= 0, where R is undefined.
    """
    if sys.degree != 2:
        raise ValueError("R is defined for quadratic systems (degree 2)")
    lam1 = _re_lambda_max(sys.W(1))
    if lam1 >= -1e-14:
        raise NotStrictlyDissipative(f"R undefined (not strictly dissipative): Re lambda_1 = {lam1:.3e}")
    w2_norm = float(np.linalg.norm(sys.W(2), 2))
    return w2_norm * float(np.linalg.norm(sys.phi0)) / abs(lam1)


def carleman_rhs_defect(sys: NonlinearSystem, u, n_level: int) -> np.ndarray:
    """Truncation defect at the top level: the dropped coupling terms.

    For the exact solution u, level N of C_N E_N(u) misses exactly the
    blocks S_N(W_j) u^(N+j-1) with j >= 2; this returns their sum (used
    by tests, zero when all W_j = 0 for j >= 2).
    """
    u = np.asarray(u, dtype=complex).ravel()
    out = np.zeros(sys.base_dim**n_level, dtype=complex)
    for j in range(2, sys.degree + 1):
        out += apply_symm_sum(sys.W(j), n_level, kron_power(u, n_level + j - 1), base_dim=sys.base_dim)
    return out
