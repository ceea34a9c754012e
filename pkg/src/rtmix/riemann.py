"""Analytic comparison solutions for the homogenised mixing zone.

Averaging the two-fluid indicator over the transverse direction turns the
ideal mixing-zone evolution into a scalar conservation law

    s_tau + F(s)_z = 0,   tau = g t^2 / 2,

with concave flux F(s) = (rho_+ - rho_-) s (1-s) / (rho_+ s + rho_- (1-s))
and step data (1 for z <= 0, 0 above).  Two weak solutions matter here: the
self-similar fan (rarefaction) and a two-shock solution through the flux
maximiser; each encodes a different hypothesis on the internal structure of
the zone and yields explicit mixing-zone edges a(t) = alpha * A g t^2.  A
third flux G0, arising as a convex-hull boundary in the immiscible
construction, is included for comparison; its entropy solution shares the
two-shock edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import integrate

from .interp import AdmissibleFlux, Profile


@dataclass(frozen=True)
class FluidParams:
    """Densities of the two fluids and gravity; rho_plus > rho_minus > 0."""

    rho_plus: float
    rho_minus: float
    g: float = 1.0

    def __post_init__(self):
        if not (self.rho_plus > self.rho_minus > 0.0):
            raise ValueError("need rho_plus > rho_minus > 0")
        if self.g <= 0.0:
            raise ValueError("gravity must be positive")

    @property
    def atwood(self) -> float:
        return (self.rho_plus - self.rho_minus) / (self.rho_plus + self.rho_minus)

    @property
    def delta_rho(self) -> float:
        return self.rho_plus - self.rho_minus


def _check_unit_interval(s) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s < -1e-12) or np.any(s > 1.0 + 1e-12):
        raise ValueError("volume fraction must lie in [0, 1]")
    return np.clip(s, 0.0, 1.0)


def flux_F(s, p: FluidParams) -> np.ndarray | float:
    """Concave flux of the averaged conservation law; F(0) = F(1) = 0.

    Invariant under rescaling of both densities.
    """
    s = _check_unit_interval(s)
    den = p.rho_plus * s + p.rho_minus * (1.0 - s)
    out = p.delta_rho * s * (1.0 - s) / den
    return out if out.ndim else float(out)


def flux_F_prime(s, p: FluidParams) -> np.ndarray | float:
    s = _check_unit_interval(s)
    den = p.rho_plus * s + p.rho_minus * (1.0 - s)
    num = (1.0 - 2.0 * s) * den - s * (1.0 - s) * p.delta_rho
    out = p.delta_rho * num / den**2
    return out if out.ndim else float(out)


def flux_F_prime_inverse(xi, p: FluidParams) -> np.ndarray | float:
    """Closed-form inverse of F' on [-2A/(1+A), 2A/(1-A)].

    (F')^{-1}(xi) = (1-A)/(2A) * (sqrt((1+A)/(1-A)) / sqrt(1+xi) - 1).
    """
    A = p.atwood
    xi = np.asarray(xi, dtype=float)
    lo, hi = -2.0 * A / (1.0 + A), 2.0 * A / (1.0 - A)
    tol = 1e-12 * (1.0 + abs(hi))
    if np.any(xi < lo - tol) or np.any(xi > hi + tol):
        raise ValueError(f"xi outside the rarefaction fan [{lo}, {hi}]")
    xi = np.clip(xi, lo, hi)
    s = (1.0 - A) / (2.0 * A) * (math.sqrt((1.0 + A) / (1.0 - A)) / np.sqrt(1.0 + xi) - 1.0)
    s = np.clip(s, 0.0, 1.0)
    return s if s.ndim else float(s)


def flux_maximizer(p: FluidParams) -> float:
    """s* = sqrt(rho_-) / (sqrt(rho_+) + sqrt(rho_-)), the argmax of F."""
    rm = math.sqrt(p.rho_minus)
    rp = math.sqrt(p.rho_plus)
    return rm / (rp + rm)


def flux_G0(s, p: FluidParams) -> np.ndarray | float:
    """Convex-hull comparison flux; like F but with +sqrt(rho_+ rho_-) in
    the denominator, so G0 < F on (0, 1)."""
    s = _check_unit_interval(s)
    den = p.rho_plus * s + p.rho_minus * (1.0 - s) + math.sqrt(p.rho_plus * p.rho_minus)
    out = p.delta_rho * s * (1.0 - s) / den
    return out if out.ndim else float(out)


def flux_G0_prime(s, p: FluidParams) -> np.ndarray | float:
    s = _check_unit_interval(s)
    c = math.sqrt(p.rho_plus * p.rho_minus)
    den = p.rho_plus * s + p.rho_minus * (1.0 - s) + c
    num = (1.0 - 2.0 * s) * den - s * (1.0 - s) * p.delta_rho
    out = p.delta_rho * num / den**2
    return out if out.ndim else float(out)


def gebhard_energy_ratio(atwood: float) -> float:
    """Scale-free potential-energy level of the G0 entropy solution:
    E_p / (A^2 g^3 t^4) = (1/24) * 2 / (sqrt(1-A^2) (1 + sqrt(1-A^2))),
    which is bounded by 1 / (24 (1 - A^2))."""
    if not (0.0 < atwood < 1.0):
        raise ValueError("Atwood number must lie strictly in (0, 1)")
    r = math.sqrt(1.0 - atwood**2)
    return (1.0 / 24.0) * 2.0 / (r * (1.0 + r))


class MixingPrefactors(NamedTuple):
    alpha_minus: float
    alpha_plus: float
    alpha_tilde_minus: float
    alpha_tilde_plus: float


def mixing_prefactors(p: FluidParams) -> MixingPrefactors:
    """Edge prefactors: a(t) = alpha * A g t^2.

    alpha_+/- come from the rarefaction fan, the tilde values from the
    two-shock solution (identical to the immiscible convex-hull edges).
    """
    A = p.atwood
    r = math.sqrt(1.0 - A * A)
    return MixingPrefactors(
        alpha_minus=-1.0 / (1.0 + A),
        alpha_plus=1.0 / (1.0 - A),
        alpha_tilde_minus=-1.0 / (1.0 + A + r),
        alpha_tilde_plus=1.0 / (1.0 - A + r),
    )


def predicted_edges(p: FluidParams, t: float, shock: bool = False) -> tuple[float, float]:
    """(a_-, a_+) at time t for the fan (default) or two-shock solution."""
    pref = mixing_prefactors(p)
    scale = p.atwood * p.g * t * t
    if shock:
        return pref.alpha_tilde_minus * scale, pref.alpha_tilde_plus * scale
    return pref.alpha_minus * scale, pref.alpha_plus * scale


@dataclass(frozen=True)
class RiemannSolution:
    """Self-similar weak solution s(xi), xi = z / tau, tau = g t^2 / 2.

    Equal to 1 left of xi_left and 0 right of xi_right; kind is one of
    "rarefaction", "two_shock", "entropy_of_flux".
    """

    kind: str
    params: FluidParams
    xi_left: float
    xi_right: float
    _eval: Callable[[np.ndarray], np.ndarray]

    def __call__(self, xi) -> np.ndarray | float:
        xi = np.asarray(xi, dtype=float)
        out = self._eval(np.atleast_1d(xi))
        out = np.clip(out, 0.0, 1.0)
        return out.reshape(xi.shape) if xi.ndim else float(out[0])

    def similarity_scale(self, t: float, pace: str = "similarity") -> float:
        """The stretch tau mapping xi to z = xi * tau at time t.

        "similarity" is the conservation-law pace tau = g t^2 / 2, which
        carries the edge bounds a(t) = alpha A g t^2.  "saturating" is the
        pace tau = g t^2 / 4 at which the rarefaction makes the whole
        energy-balance/interpolation chain tight, attaining the scale-free
        energy level 1/(24 (1 - A^2)); the energy balance is what slows
        the admissible evolution to half the conservation-law stretch.
        """
        if t <= 0:
            raise ValueError("t must be positive")
        if pace == "similarity":
            return 0.5 * self.params.g * t * t
        if pace == "saturating":
            return 0.25 * self.params.g * t * t
        raise ValueError("pace must be 'similarity' or 'saturating'")

    def at_scale(self, z, tau: float) -> np.ndarray | float:
        if tau <= 0:
            raise ValueError("tau must be positive")
        return self(np.asarray(z, dtype=float) / tau)

    def at_time(self, z, t: float, pace: str = "similarity") -> np.ndarray | float:
        """Evaluate in physical coordinates at time t > 0."""
        return self.at_scale(z, self.similarity_scale(t, pace))

    def edges_at_scale(self, tau: float) -> tuple[float, float]:
        return self.xi_left * tau, self.xi_right * tau

    def edges_at_time(self, t: float, pace: str = "similarity") -> tuple[float, float]:
        return self.edges_at_scale(self.similarity_scale(t, pace))

    def to_profile(self, tau: float, n: int = 4096) -> Profile:
        """Sample at stretch tau as an interp Profile with analytic closure."""
        zl, zr = self.edges_at_scale(tau)
        half_width = 1.5 * max(abs(zl), abs(zr))
        return Profile.from_callable(
            lambda z: self.at_scale(np.asarray(z, dtype=float), tau),
            half_width=half_width,
            n=n,
            breakpoints=(zl, zr),
        )

    def mass_deficit(self) -> float:
        """integral (s - s0) dxi; vanishes for any weak solution of the
        step problem (both comparison solutions share this value)."""
        lo = min(self.xi_left, 0.0)
        hi = max(self.xi_right, 0.0)
        val, _ = integrate.quad(
            lambda x: float(self(np.array([x]))[0] if np.ndim(x) else self(x)) - (1.0 if x < 0 else 0.0),
            lo, hi, points=[self.xi_left, 0.0, self.xi_right], limit=200,
        )
        return val

    def potential_moment(self) -> float:
        """integral (s - s0) xi dxi; the scale-free potential level."""
        lo = min(self.xi_left, 0.0)
        hi = max(self.xi_right, 0.0)
        val, _ = integrate.quad(
            lambda x: (float(self(x)) - (1.0 if x < 0 else 0.0)) * x,
            lo, hi, points=[self.xi_left, 0.0, self.xi_right], limit=200,
        )
        return val


def rarefaction_profile(p: FluidParams) -> RiemannSolution:
    """The fan: s = (F')^{-1}(xi) between the edge speeds, clipped outside."""
    A = p.atwood
    xi_left = -2.0 * A / (1.0 + A)
    xi_right = 2.0 * A / (1.0 - A)

    def evaluate(xi):
        xi_c = np.clip(xi, xi_left, xi_right)
        s = np.asarray(flux_F_prime_inverse(xi_c, p))
        s = np.where(xi <= xi_left, 1.0, s)
        return np.where(xi >= xi_right, 0.0, s)

    return RiemannSolution("rarefaction", p, xi_left, xi_right, evaluate)


def two_shock_profile(p: FluidParams) -> RiemannSolution:
    """Two shocks connecting 1 -> s* -> 0 at the Rankine-Hugoniot speeds.

    s* is the flux maximiser; the plateau models a perfectly mixed core.
    """
    A = p.atwood
    r = math.sqrt(1.0 - A * A)
    xi_left = -2.0 * A / (1.0 + A + r)
    xi_right = 2.0 * A / (1.0 - A + r)
    s_star = flux_maximizer(p)

    def evaluate(xi):
        return np.where(xi <= xi_left, 1.0, np.where(xi <= xi_right, s_star, 0.0))

    return RiemannSolution("two_shock", p, xi_left, xi_right, evaluate)


def entropy_solution(
    flux_prime: Callable[[np.ndarray], np.ndarray], p: FluidParams, kind: str = "entropy_of_flux"
) -> RiemannSolution:
    """Entropy (fan) solution for an arbitrary concave flux via bisection.

    For concave fluxes the step data 1 -> 0 always resolves into a pure
    rarefaction, so inverting the decreasing derivative suffices.
    """
    fp0 = float(np.asarray(flux_prime(np.array([0.0])))[0])
    fp1 = float(np.asarray(flux_prime(np.array([1.0])))[0])

    def evaluate(xi):
        xi = np.asarray(xi, dtype=float)
        lo = np.zeros_like(xi)
        hi = np.ones_like(xi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            right = np.asarray(flux_prime(mid)) > xi
            lo = np.where(right, mid, lo)
            hi = np.where(right, hi, mid)
        s = 0.5 * (lo + hi)
        s = np.where(xi <= fp1, 1.0, s)
        s = np.where(xi >= fp0, 0.0, s)
        return s

    return RiemannSolution(kind, p, fp1, fp0, evaluate)


def g0_entropy_profile(p: FluidParams) -> RiemannSolution:
    """Entropy solution for the convex-hull flux G0; edges match the
    two-shock edges ~a(t)."""
    return entropy_solution(lambda s: np.asarray(flux_G0_prime(s, p)), p, kind="entropy_of_flux")


def mixing_flux(p: FluidParams) -> AdmissibleFlux:
    """The averaged-model flux packaged for the interpolation machinery."""
    return AdmissibleFlux(
        F=lambda s: np.asarray(flux_F(s, p)),
        F_prime=lambda s: np.asarray(flux_F_prime(s, p)),
        name="mixing",
        alpha=0.75,
    )


def g0_flux(p: FluidParams) -> AdmissibleFlux:
    return AdmissibleFlux(
        F=lambda s: np.asarray(flux_G0(s, p)),
        F_prime=lambda s: np.asarray(flux_G0_prime(s, p)),
        name="g0",
        alpha=0.75,
    )


def sharp_constant_formula(p: FluidParams) -> float:
    """Closed form of the sharp interpolation constant for the mixing flux:
    sqrt(2/3 * (rho_+ - rho_-)^2 / (rho_+ rho_-))."""
    return math.sqrt(2.0 / 3.0 * p.delta_rho**2 / (p.rho_plus * p.rho_minus))


def profile_potential_energy(s: Profile, g: float) -> float:
    """g * integral (s - s0) z dz for a profile (exact cell sums, or
    adaptive quadrature when an analytic closure is attached)."""
    if s.closure is not None:
        W = s.half_width
        pts = sorted(set([x for x in s.breakpoints if -W < x < W] + [0.0]))
        val, _ = integrate.quad(
            lambda z: (float(np.clip(s.closure(np.array([z])), 0.0, 1.0)[0]) - (1.0 if z < 0 else 0.0)) * z,
            -W, W, points=pts, limit=400, epsabs=1e-13, epsrel=1e-11,
        )
        return g * val
    return g * s.potential()


def profile_entropy(s: Profile, h: Callable[[np.ndarray], np.ndarray]) -> float:
    """integral h(s) dz for a bulk-entropy integrand h with h(0)=h(1)=0."""
    if s.closure is not None:
        W = s.half_width
        pts = [x for x in s.breakpoints if -W < x < W]
        val, _ = integrate.quad(
            lambda z: float(np.asarray(h(np.clip(s.closure(np.array([z])), 0.0, 1.0)))[0]),
            -W, W, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-11,
        )
        return val
    return s.flux_integral(h)


# Atwood numbers of the published comparison tables.
TABLE_ATWOOD = (0.0025, 0.08, 0.15, 0.2, 0.25, 0.4, 0.46, 0.6, 0.72, 0.8, 0.88, 0.97)

# Observed prefactors from the experimental/numerical literature, kept as
# reference data only (observations sit an order of magnitude below the
# conservation-law bounds): A -> (alpha_plus, -alpha_minus).
OBSERVED_ALPHA = {
    0.0025: (0.065, 0.065),
    0.08: (0.065, 0.09),
    0.15: (0.06, 0.067),
    0.2: (0.055, 0.05),
    0.25: (0.06, 0.07),
    0.4: (0.06, 0.065),
    0.46: (0.06, 0.08),
    0.6: (0.06, 0.09),
    0.72: (0.04, 0.075),
    0.8: (0.05, 0.11),
    0.88: (0.05, 0.12),
    0.97: (0.05, 0.14),
}


class AlphaRow(NamedTuple):
    atwood: float
    alpha_plus: float
    alpha_tilde_plus: float
    alpha_minus_abs: float
    alpha_tilde_minus_abs: float


def alpha_table(atwood_list) -> list[AlphaRow]:
    """Prefactor table rows (A, alpha_+, ~alpha_+, -alpha_-, -~alpha_-)."""
    rows = []
    for A in atwood_list:
        if not (0.0 < A < 1.0):
            raise ValueError("Atwood numbers must lie strictly in (0, 1)")
        # any density pair with this contrast; prefactors depend on A only
        p = FluidParams(rho_plus=1.0 + A, rho_minus=1.0 - A)
        pref = mixing_prefactors(p)
        rows.append(
            AlphaRow(
                atwood=A,
                alpha_plus=pref.alpha_plus,
                alpha_tilde_plus=pref.alpha_tilde_plus,
                alpha_minus_abs=-pref.alpha_minus,
                alpha_tilde_minus_abs=-pref.alpha_tilde_minus,
            )
        )
    return rows
