"""Dissipativity certificates for truncated Carleman matrices.

For a quadratic system the chain of checks is: the Hermitian part
W_S = (W_1 + W_1*)/2 is negative semidefinite, the block matrix

    Lambda_1 = [[W_S, W_2], [W_2*, (1/2) S_2(W_S)]]

is negative semidefinite, and then every coupling block

    Z_k = [[(1/2) S_k(W_1), S_k(W_2)], [0, (1/2) S_{k+1}(W_1)]]

has negative semidefinite Hermitian part, which forces C_N + C_N* <= 0
at every truncation level N.  All verdicts are eigenvalue extrema of
Hermitian matrices (LAPACK Hermitian solvers only, never nonsymmetric
routines).

The sampled checks at the bottom cover the nonlinear relative bound: on
unit pairs (a, b) with <b, S_2(W_1) b> < 0 the margin

    <a, W_1 a> - (Re <a, W_2 b>)^2 / <b, (1/2) S_2(W_1) b>

stays <= 0, provided Kernel(S_2(W_1)) is contained in Kernel(W_2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .assemble import CarlemanSystem
from .tensor import symm_sum, symm_sum_rect

__all__ = [
    "Certificate",
    "DissipativityReport",
    "KernelInclusionError",
    "UnsupportedCaseError",
    "check_WS",
    "check_Lambda1",
    "assemble_Lambda1",
    "certify",
    "hermitian_part",
    "nonlinear_relative_bound",
    "relative_bound_corollary",
]

DENSE_EIG_LIMIT = 4096
_CHUNK = 2048  # sample rows evaluated at once (keeps the einsum temps small)


class KernelInclusionError(ValueError):
    """Kernel(S_2(W_1)) is not contained in Kernel(W_2)."""


class UnsupportedCaseError(ValueError):
    """The certificate's hypotheses cannot be checked for this input."""


def hermitian_part(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    return 0.5 * (a + a.conj().T)


def _lambda_max(herm: np.ndarray) -> float:
    """Largest eigenvalue of a Hermitian matrix."""
    return float(sla.eigvalsh(herm)[-1])


def check_WS(w1) -> float:
    """Largest eigenvalue of the Hermitian part of W_1 (pass means <= 0)."""
    w1 = np.asarray(w1, dtype=complex)
    if w1.ndim != 2 or w1.shape[0] != w1.shape[1]:
        raise ValueError("W_1 must be square")
    return _lambda_max(hermitian_part(w1))


def assemble_Lambda1(w1, w2) -> np.ndarray:
    """The Hermitian block matrix [[W_S, W_2], [W_2*, (1/2) S_2(W_S)]].

    The lower-right block carries the factor 1/2.  For W_S <= 0 this
    dominates the un-halved form, so it is the stronger hypothesis, and
    it is the one the level induction needs.
    """
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    d = w1.shape[0]
    if w1.shape != (d, d):
        raise ValueError("W_1 must be square")
    if w2.shape != (d, d * d):
        raise ValueError(f"W_2 has shape {w2.shape}, expected {(d, d * d)}")
    ws = hermitian_part(w1)
    s2ws = symm_sum(ws, 2)
    top = np.hstack([ws, w2])
    bottom = np.hstack([w2.conj().T, 0.5 * s2ws])
    return np.vstack([top, bottom])


def check_Lambda1(w1, w2) -> float:
    """Largest eigenvalue of Lambda_1 (pass means <= 0)."""
    return _lambda_max(assemble_Lambda1(w1, w2))


@dataclass(frozen=True)
class Certificate:
    name: str
    value: float
    tol: float
    passed: bool

    def as_record(self) -> dict:
        return {
            "certificate": self.name,
            "lambda_max": self.value,
            "tol": self.tol,
            "verdict": "pass" if self.passed else "fail",
        }


@dataclass(frozen=True)
class DissipativityReport:
    """Eigenvalue extrema per certificate with inclusive pass thresholds."""

    certificates: tuple
    tolerance: float
    implication_ok: bool = True

    def _get(self, name: str):
        for c in self.certificates:
            if c.name == name:
                return c
        return None

    @property
    def lambda_max_WS(self) -> float | None:
        c = self._get("W_S")
        return None if c is None else c.value

    @property
    def lambda_max_Lambda1(self) -> float | None:
        c = self._get("Lambda_1")
        return None if c is None else c.value

    @property
    def per_block_lambda_max(self) -> list[float]:
        return [c.value for c in self.certificates if c.name.startswith("Z_")]

    @property
    def lambda_max_full(self) -> float | None:
        c = self._get("full")
        return None if c is None else c.value

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.certificates) and self.implication_ok

    def as_records(self) -> list[dict]:
        return [c.as_record() for c in self.certificates]


def default_tolerance(matrix) -> float:
    """Inclusive eigenvalue threshold 1e-10 * max(1, ||C||_inf)."""
    if sp.issparse(matrix):
        norm_inf = float(abs(matrix).sum(axis=1).max()) if matrix.shape[0] else 0.0
    else:
        norm_inf = float(np.linalg.norm(matrix, np.inf)) if matrix.size else 0.0
    return 1e-10 * max(1.0, norm_inf)


def certify(cs: CarlemanSystem, tol: float | None = None) -> DissipativityReport:
    """Run the full certificate chain on a quadratic Carleman system.

    Evaluates lambda_max for W_S, Lambda_1, the Hermitian part of every
    Z_k block, and the full Hermitian part of C_N.  Pass is the inclusive
    comparison lambda_max <= tol (boundary eigenvalues at zero pass).
    When W_S and Lambda_1 both pass, lambda_max(full) <= 2N tol is
    asserted as well; `implication_ok` reports it (a failure there would
    point at the assembly, not at the input system).
    """
    if cs.system.degree != 2:
        raise ValueError("the certificate chain applies to quadratic systems")
    d = cs.base_dim
    if cs.dim > DENSE_EIG_LIMIT:
        raise ValueError(f"certify needs a dense eigendecomposition; K(N) = {cs.dim} is too large")
    w1 = np.asarray(cs.system.W(1))
    w2 = np.asarray(cs.system.W(2))
    matrix = cs.dense()
    if tol is None:
        tol = default_tolerance(matrix)

    ws = hermitian_part(w1)
    certs = []
    lam_ws = _lambda_max(ws)
    certs.append(Certificate("W_S", lam_ws, tol, lam_ws <= tol))
    lam_l1 = check_Lambda1(w1, w2)
    certs.append(Certificate("Lambda_1", lam_l1, tol, lam_l1 <= tol))

    # Hermitian parts of the coupling blocks Z_k, k = 1 .. N-1
    s_ws = {k: symm_sum(ws, k) for k in range(1, cs.level + 1)}
    for k in range(1, cs.level):
        s_w2 = symm_sum_rect(w2, k, base_dim=d)
        top = np.hstack([0.5 * s_ws[k], 0.5 * s_w2])
        bottom = np.hstack([0.5 * s_w2.conj().T, 0.5 * s_ws[k + 1]])
        lam_zk = _lambda_max(np.vstack([top, bottom]))
        certs.append(Certificate(f"Z_{k}", lam_zk, tol, lam_zk <= tol))

    lam_full = _lambda_max(hermitian_part(matrix))
    certs.append(Certificate("full", lam_full, tol, lam_full <= tol))

    implication_ok = True
    if lam_ws <= tol and lam_l1 <= tol:
        implication_ok = lam_full <= 2 * cs.level * tol
    return DissipativityReport(tuple(certs), tol, implication_ok)


def _null_space(a: np.ndarray, rel_cutoff: float = 1e-12) -> np.ndarray:
    """Orthonormal null-space basis via SVD with cutoff 1e-12 * sigma_max."""
    u, s, vh = np.linalg.svd(a)
    if s.size == 0 or s[0] == 0.0:
        return np.eye(a.shape[1], dtype=complex)
    cutoff = rel_cutoff * s[0]
    rank = int(np.sum(s > cutoff))
    return vh[rank:].conj().T


def _check_kernel_inclusion(w1: np.ndarray, w2: np.ndarray, tol: float) -> None:
    """Require Kernel(S_2(W_1)) subset of Kernel(W_2)."""
    s2w1 = symm_sum(w1, 2)
    null = _null_space(s2w1)
    if null.shape[1] == 0:
        return
    scale = max(1.0, float(np.linalg.norm(w2, 2)))
    worst = float(np.linalg.norm(w2 @ null, 2))
    if worst > tol * scale:
        raise KernelInclusionError(
            f"Kernel(S_2(W_1)) leaks through W_2 with norm {worst:.3e} (tol {tol * scale:.3e})"
        )


def _quadratic_forms(mat: np.ndarray, batch: np.ndarray) -> np.ndarray:
    """Re <x, M x> for each row x of the batch."""
    return np.einsum("si,ij,sj->s", batch.conj(), mat, batch, optimize=True).real


def _unit_rows(a: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(a, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return a / norms


def nonlinear_relative_bound(w1, w2, samples: int = 10_000, rng=None, tol: float = 1e-10) -> float:
    """Worst sampled margin of the nonlinear relative-bound inequality.

    Requires W_1 Hermitian negative semidefinite and the kernel inclusion
    Kernel(S_2(W_1)) subset of Kernel(W_2); violations raise
    KernelInclusionError.  Over unit pairs (a, b) with <b, S_2(W_1) b> < 0
    (random plus the coordinate bases of both spaces) returns the largest
    value of

        <a, W_1 a> - (Re <a, W_2 b>)^2 / <b, (1/2) S_2(W_1) b>

    so a negative return certifies the inequality on the sampled set.
    Pairs whose denominator sits within 1e-12 of zero are skipped; they
    carry no information beyond the kernel-inclusion check.
    """
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    d = w1.shape[0]
    d2 = w2.shape[1]
    if w2.shape[0] != d:
        raise ValueError("W_2 rows must match W_1")
    scale1 = max(1.0, float(np.linalg.norm(w1, 2)))
    if float(np.linalg.norm(w1 - w1.conj().T, 2)) > 1e-12 * scale1:
        raise ValueError("W_1 must be Hermitian")
    if _lambda_max(w1) > tol * scale1:
        raise ValueError("W_1 must be negative semidefinite")
    _check_kernel_inclusion(w1, w2, tol)

    rng = np.random.default_rng(rng)
    s2w1 = symm_sum(w1, 2)
    floor = 1e-12 * max(1.0, float(np.abs(s2w1).max()))

    worst = -np.inf
    done = 0
    while done < samples:
        m = min(_CHUNK, samples - done)
        a = _unit_rows(rng.standard_normal((m, d)) + 1j * rng.standard_normal((m, d)))
        b = _unit_rows(rng.standard_normal((m, d2)) + 1j * rng.standard_normal((m, d2)))
        quad_a = _quadratic_forms(w1, a)
        quad_b = _quadratic_forms(s2w1, b)
        cross = np.einsum("si,ij,sj->s", a.conj(), w2, b, optimize=True).real
        keep = quad_b < -floor
        if np.any(keep):
            margin = quad_a[keep] - cross[keep] ** 2 / (0.5 * quad_b[keep])
            worst = max(worst, float(margin.max()))
        done += m

    # coordinate pairs (e_i, f_j), evaluated in closed form
    diag_a = np.einsum("ii->i", w1).real
    diag_b = np.einsum("ii->i", s2w1).real
    keep = diag_b < -floor
    if np.any(keep):
        coord = diag_a[:, None] - w2[:, keep].real ** 2 / (0.5 * diag_b[keep])[None, :]
        worst = max(worst, float(coord.max()))

    if not np.isfinite(worst):
        # every direction was within the floor: S_2(W_1) = 0, hence W_1 = 0
        # and (by the kernel check) W_2 = 0; the margin degenerates to 0
        worst = 0.0
    return worst


def relative_bound_corollary(w1, w2, samples: int = 10_000, rng=None, tol: float = 1e-8) -> bool:
    """Sampled check of ||W_2 b||^2 <= |<b, (1/2) S_2(W_1) b> lambda_1|.

    lambda_1 is the smallest nonzero eigenvalue of -W_1 (relative cutoff
    1e-12).  True when every sampled b (random unit vectors plus the
    coordinate basis) satisfies the inequality up to a (1 + tol) factor;
    this implies the relative-bound margin above is nonpositive.
    """
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    d2 = w2.shape[1]
    eigs = sla.eigvalsh(-w1)  # nonnegative when W_1 <= 0
    cutoff = 1e-12 * max(1.0, float(abs(eigs).max()))
    positive = eigs[eigs > cutoff]
    if positive.size == 0:
        # -W_1 vanishes; the inequality only holds when W_2 does too
        if float(np.linalg.norm(w2, 2)) <= cutoff:
            return True
        raise UnsupportedCaseError("lambda_1 = 0 without kernel inclusion; bound undefined")
    try:
        _check_kernel_inclusion(w1, w2, tol=1e-10)
    except KernelInclusionError as exc:
        raise UnsupportedCaseError(str(exc)) from exc
    lam1 = float(positive[0])

    rng = np.random.default_rng(rng)
    s2w1 = symm_sum(w1, 2)
    ok = True
    done = 0
    while done < samples and ok:
        m = min(_CHUNK, samples - done)
        b = _unit_rows(rng.standard_normal((m, d2)) + 1j * rng.standard_normal((m, d2)))
        lhs = np.linalg.norm(b @ w2.T, axis=1) ** 2
        rhs = np.abs(0.5 * _quadratic_forms(s2w1, b) * lam1)
        ok = bool(np.all(lhs <= rhs * (1.0 + tol) + 1e-15))
        done += m

    if ok:
        # coordinate basis in closed form
        lhs = np.linalg.norm(w2, axis=0) ** 2
        rhs = np.abs(0.5 * np.einsum("ii->i", s2w1).real * lam1)
        ok = bool(np.all(lhs <= rhs * (1.0 + tol) + 1e-15))
    return ok
