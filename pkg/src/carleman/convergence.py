"""Empirical convergence studies: error against the Carleman level N and
against nested spatial discretizations.

Level sweeps compare the evolved truncation with an independent oracle
solution: e_1(N) is the ambient-norm error of the level-1 component and
eta_j(N) the error of level j against the oracle's j-th tensor power.
For strictly dissipative quadratic systems the decay bound

    ||eta_1|| <= ||phi0|| R^N (1 - exp(Re(lambda_1) t))^N,
    ||eta_j|| <= ||phi0||^j R^(N+1-j),   R = ||W_2|| ||phi0|| / |Re lambda_1|

is tabulated alongside.  Discretization sweeps embed the members of a
nested family into the largest ambient space and record successive
solution differences (a Cauchy-style diagnostic; no rate is asserted).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .assemble import NonlinearSystem, NotStrictlyDissipative, assemble, parameter_R, rescale
from .oracle import OracleSolution, integrate
from .semigroup import evolve
from .tensor import embed, kron_power

__all__ = [
    "ConvergenceRun",
    "FamilyMember",
    "level_sweep",
    "bound_curve",
    "eta_bound",
    "discretization_sweep",
    "restriction_defect",
    "fit_ratio",
    "run_to_csv",
]

CSV_COLUMNS = ("sweep_var", "e1", "eta2", "eta3", "bound_eta1", "R", "fitted_ratio")
FIT_FLOOR = 1e-14


@dataclass(frozen=True)
class ConvergenceRun:
    """Per-point error records of one sweep, plus fit and bound columns."""

    sweep: np.ndarray
    e1: np.ndarray
    eta2: np.ndarray
    eta3: np.ndarray
    bound_eta1: np.ndarray
    R: float | None
    fitted_ratio: float | None
    horizon: float
    scale: float = 1.0
    flags: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("sweep", "e1", "eta2", "eta3", "bound_eta1"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.size != self.sweep.size:
                raise ValueError(f"column {name} length mismatch")
        finite = self.e1[np.isfinite(self.e1)]
        if np.any(finite < 0):
            raise ValueError("errors must be nonnegative")


def fit_ratio(sweep, errors) -> float | None:
    """Geometric decay ratio from least squares on log(errors).

    Points at or below the numerical floor (1e-14) are excluded so they
    do not bias the fit; with fewer than two usable points there is no
    fit and None is returned.
    """
    sweep = np.asarray(sweep, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = np.isfinite(errors) & (errors > FIT_FLOOR)
    if np.count_nonzero(keep) < 2:
        return None
    slope, _ = np.polyfit(sweep[keep], np.log(errors[keep]), 1)
    return float(np.exp(slope))


def _re_lambda1(sys: NonlinearSystem) -> float:
    return float(np.linalg.eigvals(sys.W(1)).real.max())


def bound_curve(sys: NonlinearSystem, n_level: int, t: float) -> float:
    """Decay bound ||phi0|| R^N (1 - exp(Re(lambda_1) t))^N for eta_1.

    Raises NotStrictlyDissipative (via R) when Re lambda_1 >= 0.
    """
    r = parameter_R(sys)
    lam1 = _re_lambda1(sys)
    phi_norm = float(np.linalg.norm(sys.phi0))
    return phi_norm * r**n_level * (1.0 - np.exp(lam1 * t)) ** n_level


def eta_bound(sys: NonlinearSystem, n_level: int, j: int) -> float:
    """Decay bound ||phi0||^j R^(N+1-j) for the level-j error, 1 < j <= N."""
    if not 1 < j <= n_level:
        raise ValueError(f"need 1 < j <= N, got j = {j}, N = {n_level}")
    r = parameter_R(sys)
    if r >= 1.0:
        warnings.warn(f"R = {r:.3f} >= 1: bound is formal only (non-contractive regime)",
                      RuntimeWarning, stacklevel=2)
    phi_norm = float(np.linalg.norm(sys.phi0))
    return phi_norm**j * r ** (n_level + 1 - j)


def level_sweep(sys: NonlinearSystem, n_max: int, t: float, h: float = 1e-3,
                oracle=None, n_eta: int = 3) -> ConvergenceRun:
    """Errors of the truncated Carleman solution for N = 1 .. n_max.

    The oracle defaults to direct RK4 integration of the nonlinear
    system; any callable (sys, times, h) -> OracleSolution may be
    substituted (e.g. a pseudo-spectral reference).  If ||phi0|| >= 1 the
    system is first rescaled by M = 2 ||phi0|| and all reported errors
    refer to the rescaled variables; the scale is recorded.
    """
    if n_max < 1:
        raise ValueError("need n_max >= 1")
    t = float(t)
    flags: list[str] = []
    scale = 1.0
    work = sys
    phi_norm = float(np.linalg.norm(sys.phi0))
    if phi_norm >= 1.0:
        scale = 2.0 * phi_norm
        work = rescale(sys, scale)
        flags.append(f"rescaled by M = {scale:.6g}")

    oracle_fn = oracle if oracle is not None else integrate
    grid = np.array([0.0, t]) if t > 0 else np.array([0.0])
    sol = oracle_fn(work, grid, h)
    u_t = np.asarray(sol.states[-1], dtype=complex)

    r_value: float | None
    try:
        r_value = parameter_R(work)
    except (NotStrictlyDissipative, ValueError) as exc:
        r_value = None
        flags.append(f"bound column omitted: {exc}")
    lam1 = _re_lambda1(work) if r_value is not None else None
    phi_norm_w = float(np.linalg.norm(work.phi0))

    levels = np.arange(1, n_max + 1)
    e1 = np.empty(n_max)
    eta2 = np.full(n_max, np.nan)
    eta3 = np.full(n_max, np.nan)
    bounds = np.full(n_max, np.nan)
    u_pows = {j: kron_power(u_t, j) for j in range(2, min(n_eta, n_max) + 1)}

    for idx, n_level in enumerate(levels):
        cs = assemble(work, int(n_level))
        res = evolve(cs, embed(work.phi0, int(n_level)), grid)
        v_t = res.states[-1]
        e1[idx] = float(np.linalg.norm(v_t.levels[0] - u_t))
        for j in range(2, min(n_eta, n_level) + 1):
            err = float(np.linalg.norm(u_pows[j] - v_t.levels[j - 1]))
            if j == 2:
                eta2[idx] = err
            elif j == 3:
                eta3[idx] = err
        if r_value is not None:
            bounds[idx] = phi_norm_w * r_value**n_level * (1.0 - np.exp(lam1 * t)) ** n_level

    ratio = fit_ratio(levels, e1)
    if ratio is None:
        flags.append("insufficient points for a geometric fit")
    return ConvergenceRun(
        sweep=levels.astype(float), e1=e1, eta2=eta2, eta3=eta3, bound_eta1=bounds,
        R=r_value, fitted_ratio=ratio, horizon=t, scale=scale, flags=tuple(flags),
        meta={"h": h, "oracle_meta": dict(sol.meta)},
    )


@dataclass(frozen=True)
class FamilyMember:
    """One member of a nested discretization family.

    `injection` maps the member's coordinates into a common ambient basis
    shared by the whole family (strictly increasing index array).
    `input_support` lists the member's own coordinates that carry its
    inputs (default: all of them); spectral truncations whose operators
    map H_n into a larger codomain H_2n set it to the H_n band.  Member k
    is nested in member k+1 when, with inputs confined to member k's
    input support, both operator families agree after embedding their
    outputs into the ambient basis.
    """

    system: NonlinearSystem
    injection: np.ndarray
    ambient_dim: int
    label: float
    input_support: np.ndarray | None = None

    def __post_init__(self):
        inj = np.asarray(self.injection, dtype=int)
        if inj.size != self.system.base_dim:
            raise ValueError("injection must list one ambient index per coordinate")
        if np.any(inj < 0) or np.any(inj >= self.ambient_dim):
            raise ValueError("injection index out of ambient range")
        if np.any(np.diff(inj) <= 0):
            raise ValueError("injection must be strictly increasing")
        object.__setattr__(self, "injection", inj)
        sup = self.input_support
        sup = np.arange(inj.size) if sup is None else np.asarray(sup, dtype=int)
        if sup.size == 0 or np.any(sup < 0) or np.any(sup >= inj.size) or np.any(np.diff(sup) <= 0):
            raise ValueError("input_support must be a nonempty increasing subset of the coordinates")
        object.__setattr__(self, "input_support", sup)

    def embed_vector(self, v) -> np.ndarray:
        out = np.zeros(self.ambient_dim, dtype=complex)
        out[self.injection] = np.asarray(v, dtype=complex).ravel()
        return out


def _restricted_tensor(member: FamilyMember, ambient_support: np.ndarray, j: int) -> np.ndarray:
    """W_j with inputs confined to `ambient_support`, rows embedded in the ambient basis."""
    pos = {int(a): i for i, a in enumerate(member.injection)}
    try:
        cols = np.array([pos[int(a)] for a in ambient_support], dtype=int)
    except KeyError as exc:
        raise ValueError(
            f"family not nested: ambient index {exc} missing from member {member.label}"
        ) from exc
    d = member.system.base_dim
    if j <= member.system.degree:
        w = np.asarray(member.system.coeffs[j - 1], dtype=complex)
    else:
        w = np.zeros((d, d**j), dtype=complex)
    tens = w.reshape((d,) + (d,) * j)
    sub = tens[np.ix_(np.arange(d), *([cols] * j))].reshape(d, cols.size**j)
    out = np.zeros((member.ambient_dim, cols.size**j), dtype=complex)
    out[member.injection] = sub
    return out


def restriction_defect(small: FamilyMember, big: FamilyMember) -> float:
    """Largest entrywise mismatch between `small` and `big` on `small`'s inputs.

    Every W_j of both members is evaluated with input slots confined to
    the small member's input support and outputs embedded into the
    common ambient basis; nesting means the results coincide.  Initial
    data is deliberately not compared: members of a Trotter-Kato family
    hold different band-limited projections of one field.
    """
    amb_support = small.injection[small.input_support]
    defect = 0.0
    for j in range(1, max(small.system.degree, big.system.degree) + 1):
        a = _restricted_tensor(small, amb_support, j)
        b = _restricted_tensor(big, amb_support, j)
        defect = max(defect, float(np.abs(a - b).max()))
    return defect


def discretization_sweep(family, n_level: int, t: float, nesting_tol: float = 1e-12) -> ConvergenceRun:
    """Successive solution differences across a nested discretization family.

    Every member is evolved at the same Carleman level, the level-1
    states at the horizon are embedded into the common ambient space, and
    the e1 column records || u_{k}(t) - u_{k-1}(t) || (first entry NaN).
    Members must truly be nested: any restriction mismatch beyond
    `nesting_tol` is rejected up front.
    """
    family = list(family)
    if len(family) < 2:
        raise ValueError("need at least two family members")
    ambient = {m.ambient_dim for m in family}
    if len(ambient) != 1:
        raise ValueError("family members must share one ambient dimension")
    for small, big in zip(family[:-1], family[1:]):
        defect = restriction_defect(small, big)
        if defect > nesting_tol:
            raise ValueError(f"nesting violation: restriction mismatch {defect:.3e} exceeds {nesting_tol:.0e}")

    grid = np.array([0.0, float(t)])
    embedded = []
    for member in family:
        cs = assemble(member.system, n_level)
        res = evolve(cs, embed(member.system.phi0, n_level), grid)
        embedded.append(member.embed_vector(res.states[-1].levels[0]))

    n = len(family)
    diffs = np.full(n, np.nan)
    for k in range(1, n):
        diffs[k] = float(np.linalg.norm(embedded[k] - embedded[k - 1]))
    labels = np.array([m.label for m in family], dtype=float)
    ratio = fit_ratio(labels[1:], diffs[1:])
    return ConvergenceRun(
        sweep=labels, e1=diffs, eta2=np.full(n, np.nan), eta3=np.full(n, np.nan),
        bound_eta1=np.full(n, np.nan), R=None, fitted_ratio=ratio, horizon=float(t),
        flags=("e1 column holds successive differences",),
        meta={"level": n_level},
    )


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    if not np.isfinite(x):
        return ""
    return format(x, ".17e")


def run_to_csv(run: ConvergenceRun) -> str:
    """Deterministic CSV rendering of a run (fixed columns, %.17e floats)."""
    lines = [",".join(CSV_COLUMNS)]
    for i in range(run.sweep.size):
        row = [
            _fmt(run.sweep[i]),
            _fmt(run.e1[i]),
            _fmt(run.eta2[i]),
            _fmt(run.eta3[i]),
            _fmt(run.bound_eta1[i]),
            _fmt(run.R),
            _fmt(run.fitted_ratio),
        ]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
