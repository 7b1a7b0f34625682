"""Reference nonlinear integrator and closed-form checks."""

from __future__ import annotations

import numpy as np
import pytest

from carleman import (
    BlowupError,
    NonlinearSystem,
    OracleSolution,
    convergence_order,
    integrate,
    logistic_closed_form,
    rescale,
    richardson_error,
    tensor_power_derivative_check,
)
from carleman.oracle import rk4_path


# ---------------------------------------------------------------- closed form


def test_closed_form_examples():
    assert logistic_closed_form(0.5, 0.0) == 0.5
    assert logistic_closed_form(0.0, 3.0) == 0.0
    assert logistic_closed_form(0.5, 1.0) == pytest.approx(1.0 / (1.0 + np.e), abs=1e-15)


def test_closed_form_accepts_arrays():
    ts = np.array([0.0, 0.5, 1.0])
    out = logistic_closed_form(0.5, ts)
    assert out.shape == (3,)
    assert out[0] == 0.5
    assert np.all(np.diff(out) < 0)  # decays toward 0 for u0 < 1


def test_closed_form_domain():
    with pytest.raises(ValueError):
        logistic_closed_form(1.0, 1.0)
    with pytest.raises(ValueError):
        logistic_closed_form(-0.1, 1.0)


def test_closed_form_satisfies_the_equation():
    h = 1e-6
    for t in (0.2, 1.0, 3.0):
        u = logistic_closed_form(0.5, t)
        du = (logistic_closed_form(0.5, t + h) - logistic_closed_form(0.5, t - h)) / (2 * h)
        assert abs(du - (-u + u * u)) <= 1e-7, f"t = {t}"


# ---------------------------------------------------------------- integrator


def test_integrate_matches_closed_form(logistic):
    sol = integrate(logistic, [0.0, 1.0], h=1e-3)
    assert abs(sol.at(1.0)[0] - logistic_closed_form(0.5, 1.0)) <= 1e-10


def test_integrate_lands_on_grid(logistic):
    sol = integrate(logistic, [0.0, 0.35, 1.0], h=1e-3)
    assert sol.at(0.0)[0] == 0.5
    assert sol.at(0.35).shape == (1,)
    assert sol.meta["h_interior"] <= 1e-3 + 1e-15
    with pytest.raises(ValueError):
        sol.at(0.7)


def test_integrate_grid_validation(logistic):
    with pytest.raises(ValueError):
        integrate(logistic, [], h=1e-3)
    with pytest.raises(ValueError):
        integrate(logistic, [0.0, 1.0, 0.5], h=1e-3)
    with pytest.raises(ValueError):
        rk4_path(lambda y: -y, np.array([1.0]), np.array([0.0, 1.0]), h=0.0)


def test_integrate_detects_blowup():
    exploding = NonlinearSystem(1, ([[0.0]], [[1.0]]), [2.0])  # u' = u^2 from 2
    with pytest.raises(BlowupError) as info:
        integrate(exploding, [0.0, 1.0], h=1e-4)
    # the pole sits at t = 1/2; detection lands within a few steps after it
    assert 0.0 < info.value.t <= 0.5 + 1e-3
    assert info.value.norm > 1e6


def test_rescaled_system_integrates_to_scaled_solution():
    base = NonlinearSystem(1, ([[-1.0]], [[0.3]]), [2.0])
    scaled = rescale(base, 4.0)
    u = integrate(base, [0.0, 1.0], h=1e-3).at(1.0)[0]
    psi = integrate(scaled, [0.0, 1.0], h=1e-3).at(1.0)[0]
    assert abs(4.0 * psi - u) <= 1e-10


# ---------------------------------------------------------------- accuracy


def test_rk4_observed_order(logistic):
    hs = [1e-2, 5e-3, 2.5e-3]
    errors = [richardson_error(logistic, 1.0, h) for h in hs]
    assert convergence_order(hs, errors) >= 3.8


def test_richardson_error_scales_like_h4(logistic):
    coarse = richardson_error(logistic, 1.0, 2e-2)
    fine = richardson_error(logistic, 1.0, 1e-2)
    assert 8.0 <= coarse / fine <= 32.0  # nominal factor 16 for 4th order


def test_convergence_order_validation():
    with pytest.raises(ValueError):
        convergence_order([1e-2], [1e-4])
    with pytest.raises(ValueError):
        convergence_order([1e-2, 5e-3], [1e-4, 0.0])


# ---------------------------------------------------------------- solution container


def test_solution_container_validation():
    with pytest.raises(ValueError):
        OracleSolution(times=np.array([0.0, 1.0]), states=np.zeros((3, 1)), h=1e-3)
    with pytest.raises(ValueError):
        OracleSolution(times=np.array([0.0]), states=np.array([[np.nan]]), h=1e-3)


# ---------------------------------------------------------------- tensor-power flow


def test_tensor_power_derivative_identity(logistic):
    grid = np.linspace(0.0, 1.0, 201)
    sol = integrate(logistic, grid, h=1e-4)
    for n in (1, 2, 3):
        res = tensor_power_derivative_check(sol, logistic, n, 0.5)
        assert res <= 1e-4, f"n = {n}: residual {res}"


def test_tensor_power_derivative_is_second_order(logistic):
    res = {}
    for npts in (101, 201):
        grid = np.linspace(0.0, 1.0, npts)
        sol = integrate(logistic, grid, h=1e-4)
        res[npts] = tensor_power_derivative_check(sol, logistic, 2, 0.5)
    ratio = res[101] / res[201]
    assert 3.0 <= ratio <= 5.0, f"halving the spacing should quarter the residual: {ratio}"


def test_tensor_power_derivative_zero_solution():
    sys0 = NonlinearSystem(1, ([[-1.0]], [[1.0]]), [0.0])
    sol = integrate(sys0, np.linspace(0.0, 1.0, 11), h=1e-3)
    assert tensor_power_derivative_check(sol, sys0, 2, 0.5) == 0.0


def test_tensor_power_derivative_needs_interior_time(logistic):
    sol = integrate(logistic, np.linspace(0.0, 1.0, 11), h=1e-3)
    with pytest.raises(ValueError):
        tensor_power_derivative_check(sol, logistic, 2, 0.0)
    with pytest.raises(ValueError):
        tensor_power_derivative_check(sol, logistic, 2, 1.0)
