"""Hyperviscous Burgers mode truncation: operators, constants, certificates."""

from __future__ import annotations

import numpy as np
import pytest

from carleman import (
    build_discretization,
    burgers_family,
    certify_spectral,
    compute_KM,
    cross_bound_max,
    discretization_sweep,
    family_member,
    initial_condition,
    integrate,
    is_real_field,
    level_error_study,
    nesting_defect,
    pseudospectral_reference,
    restriction_defect,
    viscosity_threshold,
)

THRESHOLD_3 = 0.8842754542357626  # sqrt(K_3 + tail) at the default cutoffs
NU_SAFE = 1.1 * THRESHOLD_3


@pytest.fixture(scope="module")
def disc2():
    return build_discretization(2, 3, NU_SAFE)


# ---------------------------------------------------------------- operators


def test_dissipation_diagonal():
    disc = build_discretization(2, 3, 1.0)
    w1 = disc.w1
    assert np.abs(w1 - np.diag(np.diag(w1))).max() == 0.0
    assert w1[disc.mode_index(2), disc.mode_index(2)] == -64.0  # -nu k^(2M) = -2^6
    assert w1[disc.mode_index(0), disc.mode_index(0)] == 0.0
    assert w1[disc.mode_index(-2), disc.mode_index(-2)] == -64.0


def test_advection_entries():
    disc = build_discretization(2, 3, 1.0)
    d = disc.dim
    # output mode p = m + n' with weight -i p / (2 sqrt(2 pi))
    m, npr = 1, 1
    row = disc.mode_index(2)
    col = disc.mode_index(m) * d + disc.mode_index(npr)
    assert disc.w2[row, col] == pytest.approx(-1j / np.sqrt(2 * np.pi), abs=1e-15)
    # p = 0 is skipped entirely: the mean mode is never forced
    assert np.abs(disc.w2[disc.mode_index(0)]).max() == 0.0
    # inputs outside |k| <= n never appear
    bad_col = disc.mode_index(2) * d + disc.mode_index(0)
    assert disc.w2[:, bad_col].max() == 0.0


def test_build_validation():
    with pytest.raises(ValueError):
        build_discretization(2, 2, 1.0)  # even order is anti-dissipative
    with pytest.raises(ValueError):
        build_discretization(2, -1, 1.0)
    with pytest.raises(ValueError):
        build_discretization(0, 3, 1.0)
    with pytest.raises(ValueError):
        build_discretization(2, 3, 0.0)
    with pytest.raises(ValueError):
        build_discretization(2, 3, -0.5)


def test_mode_bookkeeping():
    disc = build_discretization(2, 3, 1.0)
    assert disc.dim == 9
    assert disc.modes.tolist() == list(range(-4, 5))
    assert disc.mode_index(0) == 4
    assert disc.mode_index(-4) == 0
    assert disc.input_band.tolist() == [2, 3, 4, 5, 6]  # modes -2 .. 2
    with pytest.raises(ValueError):
        disc.mode_index(5)


def test_real_field_predicate():
    assert is_real_field([1j, 0.5, -1j], 3)
    assert not is_real_field([1j, 0.5, 1j], 3)
    assert is_real_field(np.zeros(5), 5)
    with pytest.raises(ValueError):
        is_real_field([1.0, 2.0], 3)


def test_initial_condition_defaults(disc2):
    u = initial_condition(disc2)
    assert u[disc2.mode_index(1)] == 1.0
    assert u[disc2.mode_index(-1)] == 1.0
    assert is_real_field(u, disc2.dim)


def test_initial_condition_conjugate_fill(disc2):
    u = initial_condition(disc2, {1: 0.3 + 0.4j, 0: 0.2})
    assert u[disc2.mode_index(-1)] == 0.3 - 0.4j
    assert u[disc2.mode_index(0)] == 0.2
    assert is_real_field(u, disc2.dim)


def test_initial_condition_normalization(disc2):
    u = initial_condition(disc2, {1: 1.0, 2: 0.5}, norm=0.5)
    assert np.linalg.norm(u) == pytest.approx(0.5, abs=1e-14)


def test_initial_condition_validation(disc2):
    with pytest.raises(ValueError):
        initial_condition(disc2, {-1: 1.0})
    with pytest.raises(ValueError):
        initial_condition(disc2, {3: 1.0})  # outside the input band
    with pytest.raises(ValueError):
        initial_condition(disc2, {0: 1.0j})
    with pytest.raises(ValueError):
        initial_condition(disc2, {1: 0.0}, norm=0.5)


# ---------------------------------------------------------------- double-sum constant


def test_km_partial_sum_hand_computed():
    value, tail = compute_KM(3, cutoff_P=2, cutoff_m=1)
    # p = 1: m in {-1, 0, 1} gives 1/65 + 1 + 1
    inner1 = 2.0 + 1.0 / 65.0
    # p = 2: 4/730 + 4/64 + 2
    inner2 = 2.0 + 4.0 / 730.0 + 4.0 / 64.0
    assert value == pytest.approx(2 * (inner1 + inner2) / (4 * np.pi), rel=1e-14)
    c_tail = 2.0 * inner2 * 2**3
    expected_tail = 2.0 * c_tail * 2.0**-2 / (2 * 4 * np.pi)
    assert tail == pytest.approx(expected_tail, rel=1e-14)


def test_km_reference_values():
    value, tail = compute_KM(3, cutoff_P=200)
    assert value == pytest.approx(0.7819014387094305, rel=1e-12)
    assert tail == pytest.approx(4.164025443370958e-5, rel=1e-9)


def test_km_cutoff_stability():
    v100, _ = compute_KM(3, cutoff_P=100)
    v200, _ = compute_KM(3, cutoff_P=200)
    assert abs(v100 - v200) / v200 < 1e-3


def test_km_tail_shrinks_with_cutoff():
    tails = [compute_KM(3, cutoff_P=p)[1] for p in (50, 100, 200)]
    assert tails[0] > tails[1] > tails[2] > 0.0


def test_km_validation():
    with pytest.raises(ValueError):
        compute_KM(2)
    with pytest.raises(ValueError):
        compute_KM(1)
    with pytest.raises(ValueError):
        compute_KM(3, cutoff_P=1)


def test_viscosity_threshold_definition():
    value, tail = compute_KM(3, cutoff_P=200)
    thr = viscosity_threshold(3, cutoff_P=200)
    assert thr**2 == pytest.approx(value + tail, rel=1e-14)
    assert thr == pytest.approx(THRESHOLD_3, rel=1e-12)
    assert viscosity_threshold(5) < viscosity_threshold(3)


# ---------------------------------------------------------------- certificates


def test_certify_spectral_passes_at_safe_viscosity(disc2, rng):
    report = certify_spectral(disc2, samples=2000, rng=rng)
    assert {c.name for c in report.certificates} == {
        "W_S", "Lambda_1", "kernel", "relative_bound", "nesting",
    }
    assert report.passed
    values = {c.name: c.value for c in report.certificates}
    assert values["Lambda_1"] <= 1e-8
    assert values["kernel"] == 0.0
    assert values["nesting"] == 0.0
    assert values["relative_bound"] <= 0.0


def test_certify_spectral_fails_below_threshold(rng):
    thin = build_discretization(2, 3, 1e-6)
    report = certify_spectral(thin, samples=500, rng=rng)
    assert not report.passed
    failing = {c.name for c in report.certificates if not c.passed}
    assert failing == {"Lambda_1", "relative_bound"}


def test_nesting_defect_is_exact(disc2):
    assert nesting_defect(disc2) == 0.0


def test_diagonal_nests_across_cutoffs(disc2):
    bigger = build_discretization(3, disc2.M, disc2.nu)
    shift = 2 * (bigger.n - disc2.n)
    small_diag = np.diag(disc2.w1)
    big_diag = np.diag(bigger.w1)[shift : shift + disc2.dim]
    assert np.abs(small_diag - big_diag).max() == 0.0


def test_cross_bound_dominated_by_km(disc2):
    value, tail = compute_KM(3, cutoff_P=200)
    worst = cross_bound_max(disc2, samples=4000, rng=1)
    assert worst <= (value + tail) / disc2.nu
    assert worst == pytest.approx(0.005192566487786429, rel=1e-9)


# ---------------------------------------------------------------- reference solver


def test_pseudospectral_zero_data(disc2):
    sol = pseudospectral_reference(disc2, np.zeros(disc2.dim), [0.0, 0.1])
    assert np.abs(sol.states).max() == 0.0
    assert sol.meta["backend"] == "pseudospectral-rk4"


def test_pseudospectral_single_mode_decays_linearly():
    """A lone k = 1 mode sources only |k| = 2, which never feeds back."""
    disc = build_discretization(1, 3, 1.0)
    eps = 1e-6
    u0 = initial_condition(disc, {1: eps})
    sol = pseudospectral_reference(disc, u0, [0.0, 0.1], h=1e-4)
    a1 = sol.at(0.1)[disc.mode_index(1)]
    assert abs(a1) == pytest.approx(eps * np.exp(-0.1), rel=1e-10)


def test_pseudospectral_matches_direct_integration():
    disc = build_discretization(2, 3, NU_SAFE)
    u0 = initial_condition(disc, {1: 0.2, 2: 0.1}, norm=0.4)
    ref = pseudospectral_reference(disc, u0, [0.0, 0.1], h=5e-4)
    direct = integrate(disc.as_system(u0), [0.0, 0.1], h=5e-4)
    assert np.abs(ref.at(0.1) - direct.at(0.1)).max() <= 1e-12


def test_pseudospectral_step_cap():
    disc = build_discretization(1, 3, 1.0)  # stability limit 2.5 / 2^6
    u0 = initial_condition(disc, {1: 0.1})
    sol = pseudospectral_reference(disc, u0, [0.0, 0.5], h=0.05)
    assert sol.meta["stability_limited"]
    assert sol.h <= 2.5 / 2**6 + 1e-15
    fine = pseudospectral_reference(disc, u0, [0.0, 0.5], h=1e-3)
    assert not fine.meta["stability_limited"]


def test_pseudospectral_support_validation(disc2):
    bad = np.zeros(disc2.dim, dtype=complex)
    bad[disc2.mode_index(4)] = 0.1  # outside |k| <= n
    with pytest.raises(ValueError):
        pseudospectral_reference(disc2, bad, [0.0, 0.1])
    with pytest.raises(ValueError):
        pseudospectral_reference(disc2, np.zeros(5), [0.0, 0.1])


def test_pseudospectral_preserves_real_field_and_energy(disc2):
    u0 = initial_condition(disc2, {1: 0.3, 2: 0.2}, norm=0.5)
    sol = pseudospectral_reference(disc2, u0, np.linspace(0.0, 0.5, 6), h=1e-3)
    assert sol.meta["real_field"]
    norms = np.linalg.norm(sol.states, axis=1)
    for state in sol.states:
        assert is_real_field(state, disc2.dim)
    assert np.all(np.diff(norms) <= 1e-12), "certified regime must not gain energy"


# ---------------------------------------------------------------- nested cutoffs


def test_family_member_requires_large_ambient(disc2):
    with pytest.raises(ValueError):
        family_member(disc2, ambient_n=1)


def test_family_members_nest_exactly():
    small = build_discretization(2, 3, NU_SAFE)
    big = build_discretization(4, 3, NU_SAFE)
    defect = restriction_defect(family_member(small, 4), family_member(big, 4))
    assert defect == 0.0


def test_burgers_family_initial_data():
    fam = burgers_family(ns=(1, 2, 3), M=3, norm=0.5)
    assert [m.label for m in fam] == [1.0, 2.0, 3.0]
    norms = [np.linalg.norm(m.system.phi0) for m in fam]
    assert norms[-1] == pytest.approx(0.5, abs=1e-12)
    assert norms[0] < norms[1] < norms[2]  # coarse members miss the mode tail
    assert restriction_defect(fam[0], fam[1]) == 0.0
    assert restriction_defect(fam[1], fam[2]) == 0.0


def test_burgers_family_validation():
    with pytest.raises(ValueError):
        burgers_family(ns=(0, 2), M=3)
    with pytest.raises(ValueError):
        burgers_family(ns=(1, 2), M=3, decay=0.0)
    with pytest.raises(ValueError):
        burgers_family(ns=(1, 2), M=3, decay=1.0)


def test_burgers_family_differences_shrink():
    fam = burgers_family(ns=(1, 2, 3), M=3, norm=0.5)
    run = discretization_sweep(fam, 2, 0.5)
    assert np.isnan(run.e1[0])
    assert run.e1[2] < run.e1[1], f"differences {run.e1[1:]} must decrease"


# ---------------------------------------------------------------- level errors


def test_level_error_study_converges():
    disc = build_discretization(1, 3, NU_SAFE)
    phi0 = initial_condition(disc, {1: 1.0}, norm=0.3)
    run = level_error_study(disc, phi0, n_max=2, t=0.2, h=1e-3)
    assert run.meta["oracle_meta"]["backend"] == "pseudospectral-rk4"
    assert run.e1[1] < run.e1[0]
    assert run.e1[0] == pytest.approx(2.8529e-4, rel=1e-3)
    assert run.e1[1] <= 1e-10


def test_level_error_study_requires_small_data(disc2):
    phi0 = initial_condition(disc2, {1: 1.0}, norm=1.2)
    with pytest.raises(ValueError):
        level_error_study(disc2, phi0)
