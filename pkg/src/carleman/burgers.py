"""Fourier-spectral discretization of the hyperviscous Burgers equation

    u_t = (-u^2)_x / 2 + nu * Laplacian^M u

on the circle, in the complex-exponential basis e_k = exp(ikx)/sqrt(2 pi).
A cutoff-n discretization keeps input modes |k| <= n; quadratic products
populate modes up to 2n, so the state space carries all |k| <= 2n
(dimension 4n+1) and W_2 maps pairs of banded modes into that space with
entries -i p / (2 sqrt(2 pi)) at p = m + n'.  W_1 is the full diagonal
-nu k^(2M) over |k| <= 2n: keeping the damping on the upper band is what
makes the Lambda_1 certificate hold (zero diagonal entries facing
nonzero W_2 rows would always admit a positive eigenvalue).

The double sum K_M controls the nonlinear cross term; nu >= sqrt(K_M)
certifies dissipativity of every such discretization, uniformly in n.
`pseudospectral_reference` integrates the mode ODE directly (convolution
form), independent of the Carleman machinery, for use as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .assemble import NonlinearSystem
from .certify import Certificate, DissipativityReport, check_WS, default_tolerance, hermitian_part, nonlinear_relative_bound
from .convergence import ConvergenceRun, FamilyMember, level_sweep, restriction_defect
from .oracle import OracleSolution, rk4_path
from .tensor import symm_sum

__all__ = [
    "SpectralDiscretization",
    "build_discretization",
    "initial_condition",
    "is_real_field",
    "compute_KM",
    "viscosity_threshold",
    "certify_spectral",
    "nesting_defect",
    "cross_bound_max",
    "pseudospectral_reference",
    "family_member",
    "burgers_family",
    "level_error_study",
]

# RK4 absolute-stability interval on the negative real axis is about
# (-2.785, 0); stay inside it with margin when capping the step.
RK4_STABILITY = 2.5


@dataclass(frozen=True)
class SpectralDiscretization:
    """Mode-space operators of the cutoff-n hyperviscous Burgers equation.

    State coordinates are Fourier modes k = -2n .. 2n (index k + 2n), so
    the ambient dimension is 4n+1.  `w1` is the full dissipation diagonal
    -nu k^(2M); `w2` carries the advection convolution with both inputs
    restricted to |k| <= n.
    """

    n: int
    M: int
    nu: float
    w1: np.ndarray
    w2: np.ndarray

    @property
    def dim(self) -> int:
        return 4 * self.n + 1

    def mode_index(self, k: int) -> int:
        if abs(k) > 2 * self.n:
            raise ValueError(f"mode {k} outside |k| <= {2 * self.n}")
        return k + 2 * self.n

    @property
    def modes(self) -> np.ndarray:
        """Mode numbers by coordinate, -2n .. 2n."""
        return np.arange(-2 * self.n, 2 * self.n + 1)

    @property
    def input_band(self) -> np.ndarray:
        """Coordinates of the input modes |k| <= n."""
        return np.arange(self.n, 3 * self.n + 1)

    def as_system(self, phi0) -> NonlinearSystem:
        return NonlinearSystem(self.dim, (self.w1, self.w2), phi0)


def build_discretization(n: int, M: int, nu: float) -> SpectralDiscretization:
    """Assemble W_1 and W_2 for cutoff n, hyperviscosity order M, viscosity nu.

    M must be odd and positive (the sign of nu * Laplacian^M is
    dissipative only then); n >= 1 and nu > 0.
    """
    if M < 1 or M % 2 == 0:
        raise ValueError(f"hyperviscosity order must be odd and positive, got M = {M}")
    if n < 1:
        raise ValueError("need mode cutoff n >= 1")
    if not nu > 0:
        raise ValueError("viscosity must be positive")
    d = 4 * n + 1
    ks = np.arange(-2 * n, 2 * n + 1)
    w1 = np.diag(-nu * ks.astype(float) ** (2 * M)).astype(complex)
    w2 = np.zeros((d, d * d), dtype=complex)
    coef = -1j / (2.0 * math.sqrt(2.0 * math.pi))
    for m in range(-n, n + 1):
        for np_ in range(-n, n + 1):
            p = m + np_
            if p == 0:
                continue
            row = p + 2 * n
            col = (m + 2 * n) * d + (np_ + 2 * n)
            w2[row, col] = coef * p
    return SpectralDiscretization(n=n, M=M, nu=float(nu), w1=w1, w2=w2)


def is_real_field(u, dim: int, tol: float = 1e-12) -> bool:
    """True when the coefficients satisfy a_{-k} = conj(a_k)."""
    u = np.asarray(u, dtype=complex).ravel()
    if u.size != dim:
        raise ValueError(f"state has length {u.size}, expected {dim}")
    scale = max(1.0, float(np.abs(u).max()))
    return bool(np.abs(u - u[::-1].conj()).max() <= tol * scale)


def initial_condition(disc: SpectralDiscretization, modes: dict | None = None,
                      norm: float | None = None) -> np.ndarray:
    """Real-field initial data from mode amplitudes {k >= 0: a_k}.

    Conjugate symmetry is filled in (a_{-k} = conj(a_k)); a_0 must be
    real.  All keys must sit in the input band |k| <= n.  With `norm`
    given, the vector is rescaled to that 2-norm.  Default: unit
    amplitude on k = +-1.
    """
    if modes is None:
        modes = {1: 1.0}
    u = np.zeros(disc.dim, dtype=complex)
    for k, amp in modes.items():
        k = int(k)
        if k < 0:
            raise ValueError("specify amplitudes for k >= 0; the conjugate modes are filled in")
        if k > disc.n:
            raise ValueError(f"mode {k} outside the input band |k| <= {disc.n}")
        amp = complex(amp)
        if k == 0:
            if abs(amp.imag) > 1e-15 * max(1.0, abs(amp)):
                raise ValueError("a_0 must be real for a real field")
            u[disc.mode_index(0)] = amp.real
        else:
            u[disc.mode_index(k)] = amp
            u[disc.mode_index(-k)] = amp.conjugate()
    if norm is not None:
        cur = float(np.linalg.norm(u))
        if cur == 0.0:
            raise ValueError("cannot rescale zero initial data")
        u *= norm / cur
    return u


def compute_KM(M: int, cutoff_P: int = 200, cutoff_m: int | None = None) -> tuple[float, float]:
    """Partial double sum (1/4 pi) sum_p sum_m p^2 / (m^2M + (p-m)^2M), with tail.

    The sum runs over 0 < |p| <= cutoff_P and |m| <= cutoff_m (default
    2 cutoff_P); p and -p contribute equally.  The inner sum decays like
    p^(3-2M), so the returned tail estimate integrates C p^(3-2M) beyond
    the cutoff with C twice the last computed inner-sum ratio.  Finite
    only for M > 2 (at M <= 2 the p-series diverges and the call is
    rejected).
    """
    if M <= 2:
        raise ValueError(f"K_M diverges for M <= 2, got M = {M}")
    if cutoff_P < 2:
        raise ValueError("need cutoff_P >= 2")
    if cutoff_m is None:
        cutoff_m = 2 * cutoff_P
    two_m = 2 * M
    m = np.arange(-cutoff_m, cutoff_m + 1, dtype=float)
    total = 0.0
    last_inner = 0.0
    for p in range(1, cutoff_P + 1):
        inner = float(np.sum(p**2 / (np.abs(m) ** two_m + np.abs(p - m) ** two_m)))
        total += inner
        last_inner = inner
    value = 2.0 * total / (4.0 * math.pi)
    s = two_m - 3  # inner sums behave like p^(3-2M) = p^(-s)
    c_tail = 2.0 * last_inner / cutoff_P ** (-s)
    tail = 2.0 * c_tail * cutoff_P ** (1 - s) / ((s - 1) * 4.0 * math.pi)
    return value, tail


def viscosity_threshold(M: int, cutoff_P: int = 200, cutoff_m: int | None = None) -> float:
    """sqrt(K_M + tail): viscosities at or above it certify every cutoff."""
    value, tail = compute_KM(M, cutoff_P, cutoff_m)
    return math.sqrt(value + tail)


def _pair_band(disc: SpectralDiscretization) -> np.ndarray:
    """Flat indices of the input-band pairs inside the d^2 tensor square."""
    d = disc.dim
    band = disc.input_band
    return (band[:, None] * d + band[None, :]).ravel()


def _lambda1_restricted(disc: SpectralDiscretization) -> np.ndarray:
    """[[W_S, W_2], [W_2*, S_2(W_S)/2]] over state modes x input-band pairs."""
    ws = hermitian_part(disc.w1)
    pairs = _pair_band(disc)
    w2r = disc.w2[:, pairs]
    s2 = symm_sum(ws, 2)[np.ix_(pairs, pairs)]
    top = np.hstack([ws, w2r])
    bottom = np.hstack([w2r.conj().T, 0.5 * s2])
    return np.vstack([top, bottom])


def _kernel_leak(disc: SpectralDiscretization) -> float:
    """Largest |W_2| column entry over the null modes of the diagonal S_2(W_1).

    The diagonal of S_2(W_1) vanishes exactly on e_0 (x) e_0, so kernel
    inclusion reduces to that column of W_2 being zero.
    """
    diag1 = np.real(np.diag(disc.w1))
    s2diag = diag1[:, None] + diag1[None, :]
    cutoff = 1e-12 * max(1.0, float(np.abs(s2diag).max()))
    null_cols = np.flatnonzero(np.abs(s2diag).ravel() <= cutoff)
    if null_cols.size == 0:
        return 0.0
    return float(np.abs(disc.w2[:, null_cols]).max())


def nesting_defect(disc: SpectralDiscretization) -> float:
    """Restriction mismatch between this cutoff and the next (n -> n+1).

    Exact nesting means: with inputs confined to the |k| <= n band, the
    cutoff-(n+1) operators agree with the cutoff-n ones after embedding
    the outputs into the shared mode basis.
    """
    bigger = build_discretization(disc.n + 1, disc.M, disc.nu)
    small = family_member(disc, ambient_n=disc.n + 1)
    big = family_member(bigger, ambient_n=disc.n + 1)
    return restriction_defect(small, big)


def certify_spectral(disc: SpectralDiscretization, samples: int = 10_000,
                     rng=None, tol: float | None = None) -> DissipativityReport:
    """Dissipativity certificates for one spectral discretization.

    Records W_S <= 0, the restricted block matrix Lambda_1 over
    H_2n (+) H_n^2, kernel inclusion of S_2(W_1) into W_2, the sampled
    nonlinear relative bound, and the nesting defect against cutoff n+1.
    """
    lam1 = _lambda1_restricted(disc)
    if tol is None:
        tol = default_tolerance(lam1)
    certs = []
    v = check_WS(disc.w1)
    certs.append(Certificate("W_S", v, tol, v <= tol))
    v = float(sla.eigvalsh(lam1)[-1])
    certs.append(Certificate("Lambda_1", v, tol, v <= tol))
    v = _kernel_leak(disc)
    certs.append(Certificate("kernel", v, tol, v <= tol))
    v = nonlinear_relative_bound(disc.w1, disc.w2, samples=samples, rng=rng)
    certs.append(Certificate("relative_bound", v, tol, v <= tol))
    v = nesting_defect(disc)
    certs.append(Certificate("nesting", v, 1e-12, v <= 1e-12))
    return DissipativityReport(tuple(certs), tol)


def cross_bound_max(disc: SpectralDiscretization, samples: int = 10_000, rng=None) -> float:
    """Worst sampled cross-term ratio (Re<a, W_2 b>)^2 / |<b, S_2(W_1) b>/2|.

    Samples unit a orthogonal to e_0 and unit b over the input-band
    pairs; the double-sum constant bounds the result by K_M / nu.
    """
    rng = np.random.default_rng(rng)
    d = disc.dim
    pairs = _pair_band(disc)
    w2r = disc.w2[:, pairs]
    diag1 = np.real(np.diag(disc.w1))
    s2diag = (diag1[:, None] + diag1[None, :]).ravel()[pairs]
    floor = 1e-12 * max(1.0, float(np.abs(s2diag).max()))
    worst = 0.0
    chunk = 2048
    done = 0
    while done < samples:
        mcount = min(chunk, samples - done)
        a = rng.standard_normal((mcount, d)) + 1j * rng.standard_normal((mcount, d))
        a[:, disc.mode_index(0)] = 0.0
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        b = rng.standard_normal((mcount, pairs.size)) + 1j * rng.standard_normal((mcount, pairs.size))
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        cross = np.einsum("si,ij,sj->s", a.conj(), w2r, b, optimize=True).real
        denom = 0.5 * np.einsum("sj,j,sj->s", b.conj(), s2diag, b).real
        keep = denom < -floor
        if np.any(keep):
            worst = max(worst, float((cross[keep] ** 2 / np.abs(denom[keep])).max()))
        done += mcount
    return worst


def pseudospectral_reference(disc: SpectralDiscretization, u0, times, h: float = 1e-3) -> OracleSolution:
    """RK4 on the mode ODE a_p' = -nu p^2M a_p - (i p / 2 sqrt(2 pi)) (a * a)_p.

    The convolution runs over the input band |m|, |n'| <= n only, which
    matches the assembled W_2 exactly; upper-band modes are damped and
    sourced but never feed back.  The step is capped at the linear
    stability limit RK4_STABILITY / (nu (2n)^2M); the effective step and
    whether the cap bit are recorded in the solution metadata.  u0 must
    vanish outside the input band; conjugate symmetry is checked and
    recorded, not assumed.
    """
    u0 = np.asarray(u0, dtype=complex).ravel()
    d = disc.dim
    if u0.size != d:
        raise ValueError(f"initial state has length {u0.size}, expected {d}")
    outside = np.ones(d, dtype=bool)
    outside[disc.input_band] = False
    if np.any(np.abs(u0[outside]) > 0):
        raise ValueError(f"initial data must be supported on |k| <= {disc.n}")
    times = np.asarray(times, dtype=float)

    ps = disc.modes.astype(float)
    diag = -disc.nu * ps ** (2 * disc.M)
    coef = -1j / (2.0 * math.sqrt(2.0 * math.pi)) * ps
    band = disc.input_band

    def rhs(a):
        ar = a[band]
        conv = np.convolve(ar, ar)  # full: exactly the 4n+1 output modes
        return diag * a + coef * conv

    lam_max = disc.nu * float(2 * disc.n) ** (2 * disc.M)
    h_eff = min(h, RK4_STABILITY / lam_max)
    states, h_used = rk4_path(rhs, u0, times, h_eff)
    return OracleSolution(
        times=times, states=states, h=h_used, order=4,
        meta={
            "backend": "pseudospectral-rk4",
            "h_requested": h,
            "stability_limited": bool(h_eff < h),
            "real_field": is_real_field(u0, d),
        },
    )


def family_member(disc: SpectralDiscretization, ambient_n: int,
                  phi0: np.ndarray | None = None, label: float | None = None) -> FamilyMember:
    """Wrap a discretization as a member of the nested cutoff family.

    The shared ambient basis is the mode range of cutoff `ambient_n`
    (|k| <= 2 ambient_n); the injection aligns mode numbers.
    """
    if ambient_n < disc.n:
        raise ValueError("ambient cutoff must be at least the member cutoff")
    if phi0 is None:
        phi0 = np.zeros(disc.dim, dtype=complex)
    shift = 2 * (ambient_n - disc.n)
    return FamilyMember(
        system=disc.as_system(phi0),
        injection=np.arange(disc.dim) + shift,
        ambient_dim=4 * ambient_n + 1,
        label=float(disc.n) if label is None else float(label),
        input_support=disc.input_band,
    )


def burgers_family(ns=(2, 4, 8), M: int = 3, nu: float | None = None,
                   norm: float = 0.5, decay: float = 0.5,
                   cutoff_P: int = 200) -> list[FamilyMember]:
    """Nested cutoff family, each member holding its band projection of
    one smooth field.

    The shared field has real mode amplitudes decay^k (k >= 1, conjugate
    symmetric), normalized to `norm` over the largest band; member n
    keeps the modes |k| <= n, so coarse members genuinely miss the tail
    and successive solutions differ.  With `nu` omitted, 1.1 times the
    certified viscosity threshold is used, so every member sits in the
    dissipative regime.
    """
    ns = sorted(int(n) for n in ns)
    if ns[0] < 1:
        raise ValueError("cutoffs must be >= 1")
    if not 0.0 < decay < 1.0:
        raise ValueError("decay must sit in (0, 1) for a smooth summable profile")
    if nu is None:
        nu = 1.1 * viscosity_threshold(M, cutoff_P)
    ambient_n = ns[-1]
    # normalize over the full profile, then truncate per member
    full_sq = sum(2.0 * decay ** (2 * k) for k in range(1, ambient_n + 1))
    scale = norm / math.sqrt(full_sq)
    members = []
    for n in ns:
        disc = build_discretization(n, M, nu)
        phi0 = initial_condition(disc, {k: scale * decay**k for k in range(1, n + 1)})
        members.append(family_member(disc, ambient_n, phi0=phi0))
    return members


def level_error_study(disc: SpectralDiscretization, phi0, n_max: int = 3,
                      t: float = 0.5, h: float = 1e-3) -> ConvergenceRun:
    """Level sweep of the Carleman error against the pseudo-spectral reference."""
    phi0 = np.asarray(phi0, dtype=complex).ravel()
    if float(np.linalg.norm(phi0)) >= 1.0:
        raise ValueError("rescale the initial data below unit norm first; the "
                         "reference solver tracks the unscaled discretization")
    sys = disc.as_system(phi0)

    def oracle(work, times, step):
        return pseudospectral_reference(disc, work.phi0, times, step)

    return level_sweep(sys, n_max, t, h=h, oracle=oracle)
