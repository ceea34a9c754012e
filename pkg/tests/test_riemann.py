import math

import numpy as np
import pytest
from scipy import integrate

from rtmix.riemann import (
    AlphaRow,
    FluidParams,
    TABLE_ATWOOD,
    alpha_table,
    flux_F,
    flux_F_prime,
    flux_F_prime_inverse,
    flux_G0,
    flux_G0_prime,
    flux_maximizer,
    g0_entropy_profile,
    gebhard_energy_ratio,
    mixing_flux,
    mixing_prefactors,
    profile_entropy,
    profile_potential_energy,
    rarefaction_profile,
    sharp_constant_formula,
    two_shock_profile,
)


@pytest.fixture
def params():
    return FluidParams(rho_plus=3.0, rho_minus=2.0, g=1.0)


def test_params_validation_and_atwood(params):
    assert params.atwood == pytest.approx(0.2)
    with pytest.raises(ValueError):
        FluidParams(rho_plus=1.0, rho_minus=2.0)
    with pytest.raises(ValueError):
        FluidParams(rho_plus=2.0, rho_minus=1.0, g=-1.0)


# --- flux function ---------------------------------------------------------

def test_flux_endpoint_zeros(params):
    assert flux_F(0.0, params) == 0.0
    assert flux_F(1.0, params) == 0.0


def test_flux_midpoint_is_half_atwood(params):
    assert flux_F(0.5, params) == pytest.approx(params.atwood / 2.0, rel=1e-14)


def test_flux_argmax_location(params):
    s_star = flux_maximizer(params)
    assert s_star == pytest.approx(
        math.sqrt(params.rho_minus) / (math.sqrt(params.rho_plus) + math.sqrt(params.rho_minus))
    )
    assert abs(flux_F_prime(s_star, params)) < 1e-12
    s = np.linspace(0, 1, 101)
    assert flux_F(s_star, params) >= np.max(flux_F(s, params)) - 1e-12


def test_flux_domain_error(params):
    with pytest.raises(ValueError):
        flux_F(1.2, params)
    with pytest.raises(ValueError):
        flux_F(-0.1, params)


def test_flux_density_rescaling_invariance():
    rng = np.random.default_rng(0)
    s = rng.uniform(0, 1, 50)
    p1 = FluidParams(rho_plus=3.0, rho_minus=2.0)
    p2 = FluidParams(rho_plus=30.0, rho_minus=20.0)
    assert np.allclose(flux_F(s, p1), flux_F(s, p2), rtol=1e-14)


def test_flux_concavity_random_params():
    rng = np.random.default_rng(1)
    s = np.linspace(0.01, 0.99, 199)
    h = 1e-5
    for _ in range(20):
        rm = rng.uniform(0.1, 5.0)
        p = FluidParams(rho_plus=rm * rng.uniform(1.01, 20.0), rho_minus=rm)
        second = (flux_F(s + h, p) - 2 * flux_F(s, p) + flux_F(s - h, p)) / h**2
        assert np.all(second < 0.0)


# --- derivative and its inverse -------------------------------------------

def test_fprime_inverse_roundtrip(params):
    rng = np.random.default_rng(2)
    s = rng.uniform(0.0, 1.0, 100)
    xi = flux_F_prime(s, params)
    assert np.max(np.abs(flux_F_prime_inverse(xi, params) - s)) < 1e-12


def test_fprime_inverse_edge_states(params):
    A = params.atwood
    assert flux_F_prime_inverse(-2 * A / (1 + A), params) == pytest.approx(1.0, abs=1e-12)
    assert flux_F_prime_inverse(2 * A / (1 - A), params) == pytest.approx(0.0, abs=1e-12)


def test_fprime_inverse_at_zero_gives_maximizer(params):
    assert flux_F_prime_inverse(0.0, params) == pytest.approx(flux_maximizer(params), rel=1e-12)


def test_fprime_inverse_domain_error(params):
    A = params.atwood
    with pytest.raises(ValueError):
        flux_F_prime_inverse(2 * A / (1 - A) + 0.1, params)


# --- self-similar solutions -------------------------------------------------

def test_rarefaction_edges_and_range(params):
    sol = rarefaction_profile(params)
    A = params.atwood
    assert sol.xi_left == pytest.approx(-2 * A / (1 + A))
    assert sol.xi_right == pytest.approx(2 * A / (1 - A))
    xi = np.linspace(2 * sol.xi_left, 2 * sol.xi_right, 512)
    s = sol(xi)
    assert np.all((s >= 0) & (s <= 1))
    assert sol(sol.xi_left - 0.1) == 1.0
    assert sol(sol.xi_right + 0.1) == 0.0


def test_two_shock_structure(params):
    sol = two_shock_profile(params)
    A = params.atwood
    r = math.sqrt(1 - A * A)
    assert sol.xi_left == pytest.approx(-2 * A / (1 + A + r))
    assert sol.xi_right == pytest.approx(2 * A / (1 - A + r))
    # plateau at the flux maximizer
    assert sol(0.0) == pytest.approx(flux_maximizer(params), rel=1e-12)


def test_rankine_hugoniot_speeds(params):
    # shock speeds from the jump condition reproduce the edge formulas
    A = params.atwood
    s_star = flux_maximizer(params)
    r = math.sqrt(1 - A * A)
    right_speed = flux_F(s_star, params) / s_star
    left_speed = flux_F(s_star, params) / (s_star - 1.0)
    assert right_speed == pytest.approx(2 * A / (1 - A + r), rel=1e-12)
    assert left_speed == pytest.approx(-2 * A / (1 + A + r), rel=1e-12)


def test_two_shock_inside_rarefaction_all_atwood():
    for A in np.linspace(0.001, 0.999, 200):
        p = FluidParams(rho_plus=1 + A, rho_minus=1 - A)
        rare = rarefaction_profile(p)
        shock = two_shock_profile(p)
        assert rare.xi_left < shock.xi_left < 0 < shock.xi_right < rare.xi_right


def test_small_atwood_limits():
    p = FluidParams(rho_plus=1.0025, rho_minus=0.9975)  # A = 0.0025
    pref = mixing_prefactors(p)
    assert round(pref.alpha_plus, 2) == 1.0
    assert round(-pref.alpha_minus, 2) == 1.0
    assert round(pref.alpha_tilde_plus, 2) == 0.5
    assert round(-pref.alpha_tilde_minus, 2) == 0.5


def test_free_fall_limit():
    # -alpha_- A g t^2 -> g t^2 / 2 as A -> 1
    A = 1.0 - 1e-9
    p = FluidParams(rho_plus=1 + A, rho_minus=1 - A, g=2.0)
    pref = mixing_prefactors(p)
    t = 3.0
    assert -pref.alpha_minus * A * p.g * t * t == pytest.approx(p.g * t * t / 2.0, rel=1e-6)


def test_mass_deficit_shared(params):
    rare = rarefaction_profile(params)
    shock = two_shock_profile(params)
    assert abs(rare.mass_deficit()) < 1e-8
    assert abs(shock.mass_deficit()) < 1e-8


def test_self_similarity_collapse(params):
    sol = rarefaction_profile(params)
    z = np.linspace(-0.5, 0.8, 257)
    s1 = sol.at_time(z, 1.0)
    s2 = sol.at_time(z * (0.5 * params.g * 4.0) / (0.5 * params.g), 2.0)
    assert np.max(np.abs(np.asarray(s1) - np.asarray(s2))) < 1e-12


def test_weak_form_residual(params):
    # both weak solutions satisfy the conservation law in weak form:
    # int s phi_tau + F(s) phi_z dz dtau = [int s phi dz]_{tau1}^{tau2}
    rng = np.random.default_rng(5)
    for sol in (rarefaction_profile(params), two_shock_profile(params)):
        F = lambda s: np.asarray(flux_F(s, params)) - np.asarray(flux_F(0.0, params))
        for _ in range(20):
            zc = rng.uniform(-0.3, 0.5)
            w = rng.uniform(0.2, 0.6)
            amp = rng.uniform(0.5, 2.0)
            phi = lambda z, tau: amp * np.exp(-((z - zc) ** 2) / (2 * w**2)) * (1 + 0.3 * tau)
            phi_z = lambda z, tau: phi(z, tau) * (-(z - zc) / w**2)
            phi_tau = lambda z, tau: amp * np.exp(-((z - zc) ** 2) / (2 * w**2)) * 0.3
            tau1, tau2 = 0.5, 1.5

            def z_integral(f, tau):
                pts = sorted([sol.xi_left * tau, 0.0, sol.xi_right * tau])
                val, _ = integrate.quad(
                    lambda z: f(z, tau), -3.0, 3.0, points=pts, limit=200
                )
                return val

            interior, _ = integrate.quad(
                lambda tau: z_integral(
                    lambda z, tt: float(sol(z / tt)) * phi_tau(z, tt)
                    + float(F(sol(z / tt))) * phi_z(z, tt),
                    tau,
                ),
                tau1, tau2, limit=100,
            )
            boundary = z_integral(lambda z, tt: float(sol(z / tt)) * phi(z, tt), tau2) - z_integral(
                lambda z, tt: float(sol(z / tt)) * phi(z, tt), tau1
            )
            assert interior == pytest.approx(boundary, abs=2e-7 * max(1.0, abs(boundary)))


# --- convex-hull comparison flux -------------------------------------------

def test_g0_below_f(params):
    s = np.linspace(0.01, 0.99, 99)
    assert np.all(np.asarray(flux_G0(s, params)) < np.asarray(flux_F(s, params)))


def test_g0_entropy_edges_match_two_shock(params):
    g0 = g0_entropy_profile(params)
    shock = two_shock_profile(params)
    assert g0.xi_left == pytest.approx(shock.xi_left, rel=1e-10)
    assert g0.xi_right == pytest.approx(shock.xi_right, rel=1e-10)
    # derivative endpoints carry the same speeds
    assert flux_G0_prime(0.0, params) == pytest.approx(shock.xi_right, rel=1e-12)
    assert flux_G0_prime(1.0, params) == pytest.approx(shock.xi_left, rel=1e-12)


def test_gebhard_ratio_small_atwood_and_bound():
    assert gebhard_energy_ratio(1e-9) == pytest.approx(1.0 / 24.0, rel=1e-6)
    for A in np.arange(0.01, 1.0, 0.01):
        assert gebhard_energy_ratio(A) <= 1.0 / (24.0 * (1.0 - A * A)) + 1e-15


def test_gebhard_ratio_domain():
    with pytest.raises(ValueError):
        gebhard_energy_ratio(0.0)
    with pytest.raises(ValueError):
        gebhard_energy_ratio(1.0)


# --- profile functionals ----------------------------------------------------

def test_profile_potential_energy_reference_state():
    from rtmix.interp import Profile

    s0 = Profile.stratified(half_width=4.0, n=512)
    assert profile_potential_energy(s0, g=9.8) == pytest.approx(0.0, abs=1e-14)
    assert profile_entropy(s0, lambda s: s * (1 - s)) == pytest.approx(0.0, abs=1e-14)


def test_profile_linear_ramp_entropy():
    # linear ramp of width w: int s(1-s) dz = w/6
    from rtmix.interp import Profile

    w = 2.0
    prof = Profile.from_callable(lambda z: np.clip(0.5 - z / w, 0.0, 1.0), half_width=4.0, n=8192)
    assert prof.flux_integral(lambda s: s * (1 - s)) == pytest.approx(w / 6.0, rel=1e-6)


def test_rarefaction_saturating_energy_level(params):
    # at the energy-balance-limited stretch the fan attains the closed-form
    # scale-free level 1/(24 (1 - A^2))
    A, g = params.atwood, params.g
    sol = rarefaction_profile(params)
    t = 1.7
    prof = sol.to_profile(sol.similarity_scale(t, "saturating"))
    E_p = profile_potential_energy(prof, g)
    assert E_p / (g * (A * g * t * t) ** 2) == pytest.approx(
        1.0 / (24.0 * (1.0 - A * A)), rel=1e-6
    )


def test_rarefaction_potential_moment_equals_quarter_sharp_constant_squared(params):
    # quadrature oracle: int (s - s0) xi dxi = C(F)^2 / 4
    sol = rarefaction_profile(params)
    assert sol.potential_moment() == pytest.approx(sharp_constant_formula(params) ** 2 / 4.0, rel=1e-9)


# --- prefactor table ---------------------------------------------------------

def test_alpha_table_columns(params):
    rows = alpha_table([0.2])
    r = rows[0]
    assert isinstance(r, AlphaRow)
    assert round(r.alpha_plus, 2) == 1.25
    assert round(r.alpha_tilde_plus, 2) == 0.56
    assert round(r.alpha_minus_abs, 2) == 0.83
    assert round(r.alpha_tilde_minus_abs, 2) == 0.46


@pytest.mark.parametrize(
    "A,ap,atp",
    [(0.4, 1.67, 0.66), (0.97, 33.33, 3.66)],
)
def test_alpha_table_spot_values_upper(A, ap, atp):
    r = alpha_table([A])[0]
    assert round(r.alpha_plus, 2) == ap
    assert round(r.alpha_tilde_plus, 2) == atp


@pytest.mark.parametrize(
    "A,am,atm",
    [(0.88, 0.53, 0.42), (0.08, 0.93, 0.48)],
)
def test_alpha_table_spot_values_lower(A, am, atm):
    r = alpha_table([A])[0]
    assert round(r.alpha_minus_abs, 2) == am
    assert round(r.alpha_tilde_minus_abs, 2) == atm


def test_alpha_table_ordering_property():
    # the two-shock zone is strictly inside the fan zone for every A
    rows = alpha_table(np.arange(0.001, 1.0, 0.001))
    for r in rows:
        assert r.alpha_tilde_plus < r.alpha_plus
        assert r.alpha_tilde_minus_abs < r.alpha_minus_abs


def test_alpha_table_rejects_bad_atwood():
    with pytest.raises(ValueError):
        alpha_table([0.0])
    with pytest.raises(ValueError):
        alpha_table([1.0])
