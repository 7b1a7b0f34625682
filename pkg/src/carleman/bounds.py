"""Relative bounds for the off-diagonal Carleman part and the resolvent
estimates they buy.

Split C_N = A + B with A = Diag(S_m(W_1)) and B the coupling blocks.
For Hermitian strictly dissipative W_1 (largest eigenvalue lambda_1 < 0)
each nonzero degree-j term obeys ||B_j u|| <= (gamma / |lambda_1|) ||A u||
with gamma = max_j ||W_j||_2, because ||S_i(W_j)|| <= i gamma while
||A u||^2 >= sum_m m^2 lambda_1^2 ||u_m||^2.  Summing the nonzero terms
gives the relative A-bound

    a = n_terms * gamma / |lambda_1|,   b = 0.

For a < 1/2 the Neumann series yields ||R(lambda, C_N)|| <= M/(lambda-omega)
with M = 1/(1-2a), omega = b/(1-2a), via ||B R(lambda, A)|| <= 2a + b/lambda < 1.
When lambda_1 = 0 but every W_j annihilates the kernel of W_1 tensorwise,
lambda_2 (the largest strictly negative eigenvalue) takes over the
denominator; reports flag that fallback since the m^2 growth argument is
then heuristic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .assemble import NonlinearSystem, assemble, split_A_B
from .certify import UnsupportedCaseError
from .semigroup import ResolventProbe, resolvent

__all__ = [
    "RelativeBoundReport",
    "NeumannProbe",
    "PerturbedResolventReport",
    "a_bound",
    "perturbed_resolvent_bound",
    "diagonal_lower_bound_ok",
    "ring_laplacian",
    "reaction_diffusion_system",
    "reaction_diffusion_check",
]

STRICT_NEG = -1e-12


@dataclass(frozen=True)
class RelativeBoundReport:
    """Analytic relative A-bound of B plus its sampled verification."""

    gamma: float
    lambda1: float
    lambda_eff: float
    n_terms: int
    a: float
    b: float
    empirical_max_ratio: float
    closable: bool
    kernel_fallback: bool
    samples: int

    def as_record(self) -> dict:
        return {
            "gamma": self.gamma,
            "lambda1": self.lambda1,
            "lambda_eff": self.lambda_eff,
            "n_terms": self.n_terms,
            "a": self.a,
            "b": self.b,
            "empirical_max_ratio": self.empirical_max_ratio,
            "closable": self.closable,
            "kernel_fallback": self.kernel_fallback,
            "samples": self.samples,
        }


@dataclass(frozen=True)
class NeumannProbe:
    """||B R(lambda, A)|| against the 2a + b/lambda ingredient."""

    lam: float
    norm: float
    bound: float
    ok: bool

    def as_record(self) -> dict:
        return {"lambda": self.lam, "norm_BRA": self.norm, "bound": self.bound,
                "verdict": "pass" if self.ok else "fail"}


@dataclass(frozen=True)
class PerturbedResolventReport:
    """Resolvent probes of C_N against M/(lambda - omega)."""

    a: float
    b: float
    M: float | None
    omega: float | None
    applicable: bool
    probes: tuple = ()
    neumann: tuple = ()

    @property
    def passed(self) -> bool:
        return (self.applicable and len(self.probes) > 0
                and all(p.satisfied for p in self.probes)
                and all(p.ok for p in self.neumann))

    def as_record(self) -> dict:
        return {
            "a": self.a,
            "b": self.b,
            "M": self.M,
            "omega": self.omega,
            "applicable": self.applicable,
            "probes": [p.as_record() for p in self.probes],
            "neumann": [p.as_record() for p in self.neumann],
            "verdict": "pass" if self.passed else ("inapplicable" if not self.applicable else "fail"),
        }


def _hermitian_eigs(w1: np.ndarray) -> np.ndarray:
    scale = max(1.0, float(np.linalg.norm(w1, 2)))
    if float(np.linalg.norm(w1 - w1.conj().T, 2)) > 1e-12 * scale:
        raise ValueError("W_1 must be Hermitian for the relative bound")
    return sla.eigvalsh(w1)


def _kernel_annihilation(sys: NonlinearSystem, kernel: np.ndarray) -> bool:
    """True when every nonzero W_j kills the W_1 kernel tensorwise."""
    for j in range(2, sys.degree + 1):
        w = sys.W(j)
        if not np.abs(w).max() > 0:
            continue
        block = kernel
        for _ in range(j - 1):
            block = np.kron(block, kernel)
        if float(np.abs(w @ block).max()) > 1e-10 * max(1.0, float(np.abs(w).max())):
            return False
    return True


def a_bound(sys: NonlinearSystem, n_level: int, samples: int = 1000, rng=None) -> RelativeBoundReport:
    """Relative A-bound a = n_terms * gamma / |lambda_1| with sampled check.

    Requires Hermitian W_1.  Strict dissipativity (lambda_1 < -1e-12)
    uses lambda_1; a vanishing lambda_1 is supported only when every
    nonzero W_j annihilates Kernel(W_1) tensorwise, in which case
    lambda_2 takes over and the report flags the fallback.  The sampled
    ratio max ||B u|| / ||A u|| over random graded vectors never exceeds
    a (up to roundoff) in the strict case.
    """
    w1 = np.asarray(sys.W(1), dtype=complex)
    eigs = _hermitian_eigs(w1)
    lam1 = float(eigs[-1])
    if lam1 > -STRICT_NEG:  # positive beyond roundoff
        raise ValueError(f"W_1 must be dissipative, largest eigenvalue {lam1:.3e} > 0")

    norms = [float(np.linalg.norm(sys.W(j), 2)) for j in range(2, sys.degree + 1)]
    nonzero = [g for g in norms if g > 0.0]
    gamma = max(nonzero, default=0.0)
    n_terms = len(nonzero)

    kernel_fallback = False
    if lam1 < STRICT_NEG:
        lam_eff = abs(lam1)
    else:
        negative = eigs[eigs < STRICT_NEG]
        if n_terms == 0:
            lam_eff = abs(float(negative[-1])) if negative.size else 0.0
        elif negative.size == 0:
            raise UnsupportedCaseError("W_1 vanishes; no eigenvalue can play lambda_1")
        else:
            vals, vecs = sla.eigh(w1)
            kernel = vecs[:, vals >= STRICT_NEG]
            if not _kernel_annihilation(sys, kernel):
                raise UnsupportedCaseError("lambda_1 = 0 without kernel inclusion; bound undefined")
            lam_eff = abs(float(negative[-1]))
            kernel_fallback = True

    a = 0.0 if n_terms == 0 else n_terms * gamma / lam_eff

    cs = assemble(sys, n_level, sparse=False)
    mat_a, mat_b = split_A_B(cs)
    rng = np.random.default_rng(rng)
    worst = 0.0
    for _ in range(samples):
        u = rng.standard_normal(cs.dim) + 1j * rng.standard_normal(cs.dim)
        au = float(np.linalg.norm(mat_a @ u))
        if au <= 1e-12 * float(np.linalg.norm(u)):
            continue
        worst = max(worst, float(np.linalg.norm(mat_b @ u)) / au)

    return RelativeBoundReport(
        gamma=gamma, lambda1=lam1, lambda_eff=lam_eff, n_terms=n_terms,
        a=a, b=0.0, empirical_max_ratio=worst, closable=a < 1.0,
        kernel_fallback=kernel_fallback, samples=samples,
    )


def perturbed_resolvent_bound(sys: NonlinearSystem, n_level: int, lambdas,
                              samples: int = 1000, rng=None, tol: float = 1e-8) -> PerturbedResolventReport:
    """Probe ||R(lambda, C_N)|| <= M/(lambda - omega) under the a < 1/2 regime.

    Also checks the Neumann ingredient ||B R(lambda, A)|| <= 2a + b/lambda < 1
    at every grid point.  With a >= 1/2 the criterion is inapplicable and
    the report says so instead of raising.
    """
    rep = a_bound(sys, n_level, samples=samples, rng=rng)
    a, b = rep.a, rep.b
    if not a < 0.5:
        return PerturbedResolventReport(a=a, b=b, M=None, omega=None, applicable=False)
    big_m = 1.0 / (1.0 - 2.0 * a)
    omega = b / (1.0 - 2.0 * a)

    cs = assemble(sys, n_level, sparse=False)
    mat_a, mat_b = split_A_B(cs)
    eye = np.eye(cs.dim, dtype=complex)
    probes = []
    neumann = []
    for lam in lambdas:
        lam = float(lam)
        if lam <= omega:
            raise ValueError(f"probe lambda = {lam} must exceed omega = {omega}")
        r_full = resolvent(cs, lam)
        probes.append(ResolventProbe.make(lam, float(np.linalg.norm(r_full, 2)), big_m / (lam - omega)))
        r_diag = sla.solve(lam * eye - mat_a, eye)
        norm_bra = float(np.linalg.norm(mat_b @ r_diag, 2))
        bound = 2.0 * a + b / lam
        neumann.append(NeumannProbe(lam, norm_bra, bound, norm_bra <= bound * (1.0 + tol) and bound < 1.0))
    return PerturbedResolventReport(a=a, b=b, M=big_m, omega=omega, applicable=True,
                                    probes=tuple(probes), neumann=tuple(neumann))


def diagonal_lower_bound_ok(sys: NonlinearSystem, n_level: int, samples: int = 1000,
                            rng=None, tol: float = 1e-10) -> bool:
    """Check ||A u||^2 >= sum_m m^2 lambda_1^2 ||u_m||^2 on random graded vectors."""
    w1 = np.asarray(sys.W(1), dtype=complex)
    lam1 = float(_hermitian_eigs(w1)[-1])
    cs = assemble(sys, n_level, sparse=False)
    mat_a, _ = split_A_B(cs)
    offs = cs.offsets
    rng = np.random.default_rng(rng)
    for _ in range(samples):
        u = rng.standard_normal(cs.dim) + 1j * rng.standard_normal(cs.dim)
        lhs = float(np.linalg.norm(mat_a @ u)) ** 2
        rhs = sum(
            m**2 * lam1**2 * float(np.linalg.norm(u[offs[m - 1]:offs[m]])) ** 2
            for m in range(1, n_level + 1)
        )
        if lhs < rhs * (1.0 - tol):
            return False
    return True


def ring_laplacian(d: int) -> np.ndarray:
    """Periodic 3-point Laplacian stencil on d grid points."""
    if d < 3:
        raise ValueError("the periodic stencil needs d >= 3")
    lap = -2.0 * np.eye(d)
    idx = np.arange(d)
    lap[idx, (idx + 1) % d] = 1.0
    lap[idx, (idx - 1) % d] = 1.0
    return lap


def reaction_diffusion_system(d: int = 8, alpha: float = 1.0, coupling: float = 0.4,
                              phi0=None) -> NonlinearSystem:
    """Cubic reaction-diffusion model: W_1 = Laplacian - alpha, W_3 diagonal.

    The cubic term couples each site to its own cube, entry `coupling`
    at (i; i,i,i), so ||W_3||_2 = coupling exactly and the input factors
    are trivially permutation-symmetric.  W_2 = 0.
    """
    if alpha <= 0:
        raise ValueError("need alpha > 0")
    w1 = (ring_laplacian(d) - alpha * np.eye(d)).astype(complex)
    w2 = np.zeros((d, d * d), dtype=complex)
    w3 = np.zeros((d, d**3), dtype=complex)
    for i in range(d):
        w3[i, (i * d + i) * d + i] = coupling
    if phi0 is None:
        phi0 = np.zeros(d, dtype=complex)
    return NonlinearSystem(d, (w1, w2, w3), phi0)


def reaction_diffusion_check(alpha: float, wp_norm: float) -> bool:
    """Strict threshold ||W_p|| < alpha / 2 for the 1-integrated criterion."""
    if alpha <= 0:
        raise ValueError("need alpha > 0")
    return wp_norm < alpha / 2.0
