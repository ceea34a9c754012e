import math

import numpy as np
import pytest

from rtmix.diagnostics import (
    DiagnosticsRecord,
    check_flux_domination,
    compute_record,
    energy_balance_residual,
    entropy_H,
    entropy_S,
    entropy_production_check,
    kinetic_energy,
    mixing_edges,
    optimal_background,
    perimeter,
    perimeter_interpolation_check,
    poincare_check,
    potential_energy,
    read_series,
    reference_profile,
    s_bar,
    write_series,
)
from rtmix.fields import Grid, ScalarField, VelocityField
from rtmix.riemann import FluidParams, rarefaction_profile


@pytest.fixture
def params():
    return FluidParams(rho_plus=3.0, rho_minus=2.0, g=2.0)


@pytest.fixture
def grid():
    return Grid(L=2.0, H=8.0, ny=16, nz=256)


def stratified(grid, params):
    return ScalarField(grid, np.tile(reference_profile(grid, params), (grid.ny, 1)))


def ramp_field(grid, params, w):
    # light fraction 1 -> 0 linearly over width w
    s = np.clip(0.5 - grid.z / w, 0.0, 1.0)
    rho = params.rho_minus * s + params.rho_plus * (1.0 - s)
    return ScalarField(grid, np.tile(rho, (grid.ny, 1)))


# --- energies ---------------------------------------------------------------

def test_potential_energy_reference_state(grid, params):
    assert potential_energy(stratified(grid, params), params) == pytest.approx(0.0, abs=1e-14)


def test_potential_energy_linear_ramp(params):
    w = 1.0
    fine = Grid(L=1.0, H=4.0, ny=4, nz=2048)
    val = potential_energy(ramp_field(fine, params, w), params)
    assert val == pytest.approx(params.g * w * w / 24.0, rel=1e-4)


def test_potential_energy_sampled_rarefaction(params):
    # saturating stretch attains the closed-form scale-free level
    A = params.atwood
    sol = rarefaction_profile(params)
    t = 1.5
    tau = sol.similarity_scale(t, "saturating")
    grid = Grid(L=1.0, H=6.0 * tau, ny=4, nz=4096)
    s = np.asarray(sol.at_scale(grid.z, tau))
    rho = ScalarField(grid, np.tile(params.rho_minus * s + params.rho_plus * (1 - s), (4, 1)))
    val = potential_energy(rho, params)
    expected = params.g * (A * params.g * t * t) ** 2 / (24.0 * (1.0 - A * A))
    assert val == pytest.approx(expected, rel=1e-4)


def test_kinetic_energy_zero_velocity(grid, params):
    assert kinetic_energy(stratified(grid, params), VelocityField.zeros(grid), params) == 0.0


def test_kinetic_energy_uniform_box(grid, params):
    # rho = c, |u|^2 = v^2 on a slab of height h: E_k = c v^2 h / (2 drho)
    c, v, h = 2.5, 0.3, 2.0
    rho = ScalarField.constant(grid, c)
    slab = (np.abs(grid.z) < h / 2.0).astype(float)
    u = VelocityField(grid, np.tile(v * slab, (grid.ny, 1)), np.zeros(grid.shape()))
    val = kinetic_energy(rho, u, params)
    assert val == pytest.approx(c * v * v * h / (2.0 * params.delta_rho), rel=2.0 / grid.nz * 10)


def test_kinetic_energy_quadratic_in_velocity(grid, params):
    rng = np.random.default_rng(0)
    rho = ScalarField(grid, 2.0 + rng.uniform(0, 1, grid.shape()))
    u = VelocityField(grid, rng.standard_normal(grid.shape()), rng.standard_normal(grid.shape()))
    u2 = VelocityField(grid, 2.0 * u.u_y, 2.0 * u.u_z)
    assert kinetic_energy(rho, u2, params) == pytest.approx(
        4.0 * kinetic_energy(rho, u, params), rel=1e-13
    )


# --- entropies and perimeter -------------------------------------------------

def test_entropies_vanish_on_unmixed_field(grid, params):
    f = stratified(grid, params)
    assert entropy_H(f, params) == pytest.approx(0.0, abs=1e-14)
    assert entropy_S(f, params) == pytest.approx(0.0, abs=1e-14)


def test_entropy_H_linear_ramp(params):
    w = 1.0
    fine = Grid(L=1.0, H=4.0, ny=4, nz=2048)
    assert entropy_H(ramp_field(fine, params, w), params) == pytest.approx(w / 6.0, rel=1e-4)


def test_entropies_midpoint_slab(grid, params):
    h = 2.0
    mid = 0.5 * (params.rho_plus + params.rho_minus)
    rho0 = reference_profile(grid, params).copy()
    rho0[np.abs(grid.z) < h / 2.0] = mid
    f = ScalarField(grid, np.tile(rho0, (grid.ny, 1)))
    assert entropy_H(f, params) == pytest.approx(h / 4.0, rel=1e-12)
    assert entropy_S(f, params) == pytest.approx(h * math.log(2.0), rel=1e-12)


def test_perimeter_monotone_profile_is_one(grid, params):
    # gradient form: a monotone y-independent profile has P = 1 exactly
    f = ramp_field(grid, params, 1.0)
    assert perimeter(f, params) == pytest.approx(1.0, rel=1e-10)


def test_density_rescaling_invariance(grid, params):
    rng = np.random.default_rng(1)
    mix = rng.uniform(0, 1, grid.shape())
    rho = params.rho_minus + params.delta_rho * mix
    u = VelocityField(grid, rng.standard_normal(grid.shape()), rng.standard_normal(grid.shape()))
    R = 7.3
    p2 = FluidParams(rho_plus=R * params.rho_plus, rho_minus=R * params.rho_minus, g=params.g)
    f1 = ScalarField(grid, rho)
    f2 = ScalarField(grid, R * rho)
    for fn in (potential_energy, entropy_H, entropy_S, perimeter):
        assert fn(f2, p2) == pytest.approx(fn(f1, params), rel=1e-12)
    assert kinetic_energy(f2, u, p2) == pytest.approx(kinetic_energy(f1, u, params), rel=1e-12)


# --- edges and background ------------------------------------------------------

def test_mixing_edges_reference_state_degenerate(grid, params):
    edges = mixing_edges(stratified(grid, params), params)
    assert edges.degenerate


def test_mixing_edges_of_mixed_slab(grid, params):
    h = 3.0
    mid = 0.5 * (params.rho_plus + params.rho_minus)
    rho0 = reference_profile(grid, params).copy()
    rho0[np.abs(grid.z) < h / 2.0] = mid
    f = ScalarField(grid, np.tile(rho0, (grid.ny, 1)))
    edges = mixing_edges(f, params, theta=0.01)
    assert not edges.degenerate
    assert edges.a_minus == pytest.approx(-h / 2.0, abs=grid.dz)
    assert edges.a_plus == pytest.approx(h / 2.0, abs=grid.dz)


def test_mixing_edges_theta_validation(grid, params):
    with pytest.raises(ValueError):
        mixing_edges(stratified(grid, params), params, theta=0.6)


def test_optimal_background_y_independent(grid, params):
    f = ramp_field(grid, params, 2.0)
    bg = optimal_background(f)
    assert np.allclose(bg, f.values[0, :], rtol=1e-13)


def test_optimal_background_two_value_row(grid, params):
    vals = np.empty(grid.shape())
    vals[: grid.ny // 2, :] = params.rho_minus
    vals[grid.ny // 2:, :] = params.rho_plus
    bg = optimal_background(ScalarField(grid, vals))
    expected = 2.0 * params.rho_plus * params.rho_minus / (params.rho_plus + params.rho_minus)
    assert np.allclose(bg, expected, rtol=1e-13)


def test_optimal_background_below_arithmetic_mean(grid):
    rng = np.random.default_rng(2)
    f = ScalarField(grid, 1.0 + rng.uniform(0, 2, grid.shape()))
    assert np.all(optimal_background(f) <= f.values.mean(axis=0) + 1e-14)


# --- flux domination -----------------------------------------------------------

def test_flux_domination_two_valued_equality(grid, params):
    # unmixed checkerboard: the bound is an equality (up to roundoff)
    rng = np.random.default_rng(3)
    vals = np.where(rng.uniform(size=grid.shape()) < 0.4, params.rho_minus, params.rho_plus)
    res = check_flux_domination(ScalarField(grid, vals), params)
    assert res.ok
    assert res.near_equality
    assert res.lhs == pytest.approx(res.rhs, rel=1e-12)


def test_flux_domination_smooth_strict(grid, params):
    yy, zz = np.meshgrid(grid.y, grid.z, indexing="ij")
    mix = 0.5 + 0.3 * np.sin(2 * np.pi * yy / grid.L) * np.exp(-(zz**2))
    rho = params.rho_minus + params.delta_rho * mix
    res = check_flux_domination(ScalarField(grid, rho), params)
    assert res.ok
    assert res.rhs > res.lhs * (1.0 + 1e-6)


def test_flux_domination_reference_state(grid, params):
    res = check_flux_domination(stratified(grid, params), params)
    assert res.ok
    assert res.lhs == pytest.approx(0.0, abs=1e-14)
    assert res.rhs == pytest.approx(0.0, abs=1e-14)


def test_flux_domination_random_fields(params):
    grid = Grid(L=1.0, H=2.0, ny=8, nz=32)
    rng = np.random.default_rng(4)
    for _ in range(1000):
        mix = rng.uniform(0, 1, grid.shape())
        rho = params.rho_minus + params.delta_rho * mix
        assert check_flux_domination(ScalarField(grid, rho), params).ok


# --- identity checks -------------------------------------------------------------

def test_entropy_production_frozen_field_flags_nonsolution(grid, params):
    # a static mixed field has dH/dt = 0 but a positive dissipation integral
    f = ramp_field(grid, params, 2.0)
    snaps = [(0.0, f), (0.1, f.copy()), (0.2, f.copy())]
    res = entropy_production_check(snaps, params)
    assert res.relative_H == pytest.approx(1.0, rel=1e-10)
    assert np.all(res.residual_H < 0.0)


def test_entropy_production_requires_uniform_spacing(grid, params):
    f = ramp_field(grid, params, 2.0)
    with pytest.raises(ValueError):
        entropy_production_check([(0.0, f), (0.1, f), (0.35, f)], params)
    with pytest.raises(ValueError):
        entropy_production_check([(0.0, f), (0.1, f)], params)


def test_energy_balance_residual_zero_at_start(params):
    recs = [DiagnosticsRecord(0.0, 1.0, 0.5, 0, 0, 0, 0, 0, 0, 0, 0.0)]
    assert energy_balance_residual(recs, params.g) == 0.0


def test_energy_balance_residual_tracks_linear_growth(params):
    g = params.g
    recs = [
        DiagnosticsRecord(t, 1.0 + g * t + 0.3 * t, 0.3 * t, 0, 0, 0, 0, 0, 0, 0, 0.0)
        for t in np.linspace(0, 2, 9)
    ]
    assert energy_balance_residual(recs, g) == pytest.approx(0.0, abs=1e-14)
    # a wrong sign of g shows up immediately
    assert energy_balance_residual(recs, -g) == pytest.approx(2 * g * 2.0, rel=1e-12)


def test_perimeter_interpolation_on_synthetic_series():
    # P^2 <= dS/dt * H with S = t, H = 4 t, P = sqrt(2 t) (so P^2 = 2t < 4t)
    t = np.linspace(0.0, 1.0, 21)
    recs = [
        DiagnosticsRecord(tt, 0, 0, 4 * tt, tt, math.sqrt(2 * tt), 0, 0, 0, 0, 0.0)
        for tt in t
    ]
    res = perimeter_interpolation_check(recs)
    assert res.ok_pointwise
    assert res.ok_integrated


def test_perimeter_interpolation_detects_violation():
    t = np.linspace(0.0, 1.0, 21)
    recs = [
        DiagnosticsRecord(tt, 0, 0, 0.1 * tt, 0.1 * tt, 10.0, 0, 0, 0, 0, 0.0) for tt in t
    ]
    res = perimeter_interpolation_check(recs)
    assert not res.ok_pointwise
    assert not res.ok_integrated


# --- Poincare ---------------------------------------------------------------------

def test_poincare_y_independent_is_trivial(grid, params):
    res = poincare_check(stratified(grid, params))
    assert res.ok
    assert res.lhs == pytest.approx(0.0, abs=1e-20)


def test_poincare_discrete_constant_sharp(grid):
    # the lowest transverse mode saturates the discrete constant exactly
    yy, zz = np.meshgrid(grid.y, grid.z, indexing="ij")
    f = ScalarField(grid, np.sin(2 * np.pi * yy / grid.L) * np.exp(-(zz**2)))
    res = poincare_check(f)
    assert res.ok
    assert res.lhs == pytest.approx(res.rhs_discrete, rel=1e-12)
    # and the continuum constant is (slightly) violated on the grid
    assert res.lhs > res.rhs_continuum


def test_poincare_random_fields(grid):
    rng = np.random.default_rng(5)
    for _ in range(200):
        f = ScalarField(grid, rng.standard_normal(grid.shape()))
        assert poincare_check(f).ok


# --- record plumbing ---------------------------------------------------------------

def test_compute_record_and_csv_roundtrip(tmp_path, grid, params):
    f = ramp_field(grid, params, 1.0)
    u = VelocityField.zeros(grid)
    rec = compute_record(0.5, f, u, params, balance_const=0.0)
    rec2 = compute_record(0.5, f, u, params)
    assert math.isnan(rec2.drift)
    assert rec.H >= 0 and rec.S >= 0 and rec.P >= 0 and rec.E_k >= 0
    assert rec.a_plus >= 0 >= rec.a_minus
    path = tmp_path / "series.csv"
    write_series(path, [rec])
    back = read_series(path)
    assert len(back) == 1
    assert back[0] == rec


def test_s_bar_inverts_density(grid, params):
    f = ramp_field(grid, params, 2.0)
    s = s_bar(f, params)
    rho_back = params.rho_minus * s + params.rho_plus * (1 - s)
    assert np.allclose(rho_back, f.values[0, :], rtol=1e-13)
