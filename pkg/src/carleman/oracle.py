"""Ground-truth solutions of the nonlinear system, independent of the
Carleman machinery.

The integrator is classic fixed-step RK4: deterministic, reproducible,
and fourth order, which is what the error studies need.  No adaptivity;
a state norm above 1e6 aborts the run (the dissipative regimes of
interest keep ||u|| < 1, so divergence signals a misconfigured system,
not a solver problem).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .assemble import NonlinearSystem
from .tensor import kron_power

__all__ = [
    "BlowupError",
    "OracleSolution",
    "integrate",
    "rk4_path",
    "logistic_closed_form",
    "tensor_power_derivative_check",
    "richardson_error",
    "convergence_order",
]

BLOWUP_NORM = 1e6


class BlowupError(RuntimeError):
    """The integrated state left the trust region ||u|| <= 1e6."""

    def __init__(self, t: float, norm: float):
        super().__init__(f"state norm {norm:.3e} exceeded {BLOWUP_NORM:.0e} at t = {t:.6g}; "
                         "the system is outside the dissipative regime")
        self.t = t
        self.norm = norm


@dataclass(frozen=True)
class OracleSolution:
    """Trajectory u(t) on a time grid, with integrator metadata."""

    times: np.ndarray
    states: np.ndarray  # shape (len(times), d)
    h: float
    order: int = 4
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=complex)
        if states.shape[0] != times.size:
            raise ValueError("one state per grid time required")
        if not np.all(np.isfinite(states.real)) or not np.all(np.isfinite(states.imag)):
            raise ValueError("non-finite states")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def at(self, t: float) -> np.ndarray:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-12 * max(1.0, abs(t)):
            raise ValueError(f"t = {t} is not on the solution grid")
        return self.states[i]


def rk4_path(rhs, y0: np.ndarray, times: np.ndarray, h: float, blowup: float = BLOWUP_NORM):
    """Fixed-step RK4 for y' = rhs(y), landing exactly on every grid time.

    Within each grid interval the step is span/ceil(span/h), i.e. never
    larger than h.  Returns (states, h_used) where h_used is the largest
    interior step actually taken.
    """
    if h <= 0:
        raise ValueError("step size must be positive")
    y = np.asarray(y0, dtype=complex).ravel()
    states = [y]
    h_used = 0.0
    for t0, t1 in zip(times[:-1], times[1:]):
        span = float(t1 - t0)
        nsteps = max(1, int(math.ceil(span / h - 1e-9)))
        hh = span / nsteps
        h_used = max(h_used, hh)
        for k in range(nsteps):
            k1 = rhs(y)
            k2 = rhs(y + 0.5 * hh * k1)
            k3 = rhs(y + 0.5 * hh * k2)
            k4 = rhs(y + hh * k3)
            y = y + (hh / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
            norm = float(np.linalg.norm(y))
            if not np.isfinite(norm) or norm > blowup:
                raise BlowupError(t0 + (k + 1) * hh, norm)
        states.append(y)
    return np.array(states), h_used


def integrate(sys: NonlinearSystem, times, h: float = 1e-3) -> OracleSolution:
    """Solve u' = sum_j W_j u^j by fixed-step RK4 on the given grid."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.size == 0:
        raise ValueError("empty time grid")
    if np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be strictly increasing")
    states, h_used = rk4_path(sys.rhs, sys.phi0, times, h)
    return OracleSolution(times=times, states=states, h=h, meta={"h_interior": h_used})


def logistic_closed_form(u0: float, t):
    """Exact solution of u' = -u + u^2: u(t) = u0 / (u0 + (1 - u0) e^t).

    Defined for 0 <= u0 < 1 (beyond that the solution blows up in finite
    time, which is outside the regime treated here).
    """
    if not 0.0 <= u0 < 1.0:
        raise ValueError("closed form requires 0 <= u0 < 1")
    t = np.asarray(t, dtype=float)
    out = u0 / (u0 + (1.0 - u0) * np.exp(t))
    return float(out) if out.ndim == 0 else out


def tensor_power_derivative_check(sol: OracleSolution, sys: NonlinearSystem, n: int, t: float) -> float:
    """Residual of (u^n)' = sum_i u^(i-1) (x) u' (x) u^(n-i) at a grid time.

    The left side is a central difference over the neighbouring grid
    points, so the return value is O(h^2) in the grid spacing; the right
    side inserts the exact rhs into each tensor slot.
    """
    i = int(np.argmin(np.abs(sol.times - t)))
    if i <= 0 or i >= sol.times.size - 1:
        raise ValueError("t must be interior to the solution grid")
    dt = sol.times[i + 1] - sol.times[i - 1]
    lhs = (kron_power(sol.states[i + 1], n) - kron_power(sol.states[i - 1], n)) / dt

    u = sol.states[i]
    f = sys.rhs(u)
    rhs = np.zeros(sys.base_dim**n, dtype=complex)
    for slot in range(n):
        factors = [u] * n
        factors[slot] = f
        term = factors[0]
        for v in factors[1:]:
            term = np.kron(term, v)
        rhs += term
    return float(np.linalg.norm(lhs - rhs))


def richardson_error(sys: NonlinearSystem, t: float, h: float) -> float:
    """Step-halving disagreement ||u_h(t) - u_{h/2}(t)||, an O(h^4) quantity."""
    grid = np.array([0.0, float(t)])
    u_h = integrate(sys, grid, h).states[-1]
    u_h2 = integrate(sys, grid, h / 2).states[-1]
    return float(np.linalg.norm(u_h - u_h2))


def convergence_order(hs, errors) -> float:
    """Least-squares slope of log(error) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if hs.size < 2:
        raise ValueError("need at least two step sizes")
    if np.any(errors <= 0):
        raise ValueError("errors must be positive for a log fit")
    slope, _ = np.polyfit(np.log(hs), np.log(errors), 1)
    return float(slope)
