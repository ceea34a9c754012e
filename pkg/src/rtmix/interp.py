"""Scale-invariant interpolation inequality for concave fluxes.

For a concave flux F with F(0) = F(1) = 0 and mild endpoint growth, every
profile s (s -> 1 at -inf, s -> 0 at +inf) satisfies

    integral F(s) dz  <=  C(F) * (integral (s - s0) z dz)^(1/2),

with the sharp constant C(F) = (2 * integral_0^1 F'(s)^2 ds)^(1/2), where
s0 is the sharp step.  Equality holds exactly on the self-similar
fan profile z = tau * F'(s).  This module computes the constant, performs
the two profile surgeries (half-line rearrangement and monotonization)
that drive the optimisation, and evaluates the inequality on sampled or
analytic profiles.

Profiles are sampled as cell values on a uniform symmetric grid with a
cell edge at z = 0, so all integrals below are exact for the piecewise
constant interpretation; in particular the surgeries improve the
inequality ratio exactly, not just up to quadrature error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

FAR_FIELD_TOL = 1e-12
RATIO_TOL = 1e-6
TAIL_FRACTION = 1e-10


class ProfileError(ValueError):
    """Malformed profile: bad range, far field, or non-integrable tail."""


class InequalityViolation(AssertionError):
    """The interpolation ratio exceeded 1 beyond tolerance.

    Since the underlying inequality is a theorem, this indicates a bug in
    quadrature or in a profile construction.
    """


def _s0(z: np.ndarray) -> np.ndarray:
    """Sharp reference step: 1 for z < 0, 0 for z >= 0."""
    return np.where(z < 0.0, 1.0, 0.0)


@dataclass
class Profile:
    """s: R -> [0, 1] sampled as cell values on a symmetric uniform grid.

    values[i] is the cell average on [z_i - dz/2, z_i + dz/2]; the cell
    count is even so z = 0 is a cell edge.  Outside the window the profile
    equals the sharp step s0.  An optional analytic closure enables
    adaptive quadrature instead of the exact piecewise-constant sums.
    """

    values: np.ndarray
    half_width: float
    closure: Optional[Callable[[np.ndarray], np.ndarray]] = None
    breakpoints: tuple[float, ...] = ()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.values.size
        if n < 4 or n % 2 != 0:
            raise ProfileError("profile needs an even number (>= 4) of cells")
        if self.half_width <= 0:
            raise ProfileError("half_width must be positive")
        if np.any(~np.isfinite(self.values)):
            raise ProfileError("profile values must be finite")
        if self.values.min() < -1e-12 or self.values.max() > 1.0 + 1e-12:
            raise ProfileError("profile values must lie in [0, 1]")
        self.values = np.clip(self.values, 0.0, 1.0)
        if abs(self.values[0] - 1.0) > 1e-6 or abs(self.values[-1]) > 1e-6:
            raise ProfileError("profile does not reach its far-field values inside the window")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def dz(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def z(self) -> np.ndarray:
        """Cell-centre coordinates."""
        return -self.half_width + (np.arange(self.n) + 0.5) * self.dz

    @classmethod
    def stratified(cls, half_width: float = 4.0, n: int = 256) -> "Profile":
        z = -half_width + (np.arange(n) + 0.5) * (2.0 * half_width / n)
        return cls(_s0(z), half_width)

    @classmethod
    def from_samples(cls, values, half_width: float) -> "Profile":
        return cls(np.asarray(values, dtype=float), half_width)

    @classmethod
    def from_callable(
        cls,
        f: Callable[[np.ndarray], np.ndarray],
        half_width: float = 4.0,
        n: int = 4096,
        breakpoints: tuple[float, ...] = (),
        max_doublings: int = 12,
    ) -> "Profile":
        """Sample a callable, widening the window until the tails vanish.

        The window doubles until |f - s0| at the edges drops below the
        far-field tolerance and the estimated tail moment is below
        TAIL_FRACTION of the captured potential.
        """
        w = float(half_width)
        for _ in range(max_doublings):
            edges = np.array([-w, w])
            dev = np.abs(np.asarray(f(edges), dtype=float) - _s0(edges))
            z = -w + (np.arange(n) + 0.5) * (2.0 * w / n)
            vals = np.clip(np.asarray(f(z), dtype=float), 0.0, 1.0)
            pot = float(np.sum((vals - _s0(z)) * z) * (2.0 * w / n))
            tail = float(dev.max()) * w * w
            if dev.max() < FAR_FIELD_TOL and (pot == 0.0 or tail <= TAIL_FRACTION * max(pot, 1e-300)):
                return cls(vals, w, closure=f, breakpoints=breakpoints)
            w *= 2.0
        raise ProfileError("profile tails do not decay; window extension failed")

    def potential(self) -> float:
        """integral (s - s0) z dz; exact for the cell representation.

        The integrand is pointwise nonnegative for any profile, so the
        result is >= 0 with equality only at the sharp step.
        """
        z = self.z
        return float(np.sum((self.values - _s0(z)) * z) * self.dz)

    def flux_integral(self, F: Callable[[np.ndarray], np.ndarray]) -> float:
        """integral F(s) dz for F with F(0) = F(1) = 0 (exact cell sum)."""
        return float(np.sum(F(self.values)) * self.dz)


@dataclass
class AdmissibleFlux:
    """Concave flux F on [0, 1] with F(0) = F(1) = 0 and its derivative.

    growth constants (C1, C2, alpha) witness F(s) <= C1 s^alpha and
    F(s) <= C2 (1-s)^alpha with alpha > 1/2; they are estimated by
    sampling when not supplied.
    """

    F: Callable[[np.ndarray], np.ndarray]
    F_prime: Callable[[np.ndarray], np.ndarray]
    name: str = "flux"
    alpha: float = 0.75
    C1: float = field(default=0.0)
    C2: float = field(default=0.0)

    def __post_init__(self):
        if self.alpha <= 0.5:
            raise ValueError("growth exponent must exceed 1/2")
        s = np.linspace(1e-9, 1.0 - 1e-9, 2001)
        f = np.asarray(self.F(s), dtype=float)
        if not np.all(np.isfinite(f)):
            raise ValueError("flux must be finite on (0, 1)")
        if self.C1 == 0.0:
            self.C1 = float(np.max(f / s**self.alpha)) * 1.01 + 1e-12
        if self.C2 == 0.0:
            self.C2 = float(np.max(f / (1.0 - s) ** self.alpha)) * 1.01 + 1e-12
        # concavity spot check on the derivative
        fp = np.asarray(self.F_prime(s), dtype=float)
        if np.any(np.diff(fp) > 1e-9 * (1.0 + np.abs(fp[:-1]))):
            raise ValueError("flux derivative is not non-increasing; flux not concave")
        self._argmax = float(
            optimize.minimize_scalar(
                lambda x: -float(self.F(np.array([x]))[0]), bounds=(0.0, 1.0), method="bounded",
                options={"xatol": 1e-14},
            ).x
        )

    @property
    def argmax(self) -> float:
        """Maximiser of F on [0, 1]."""
        return self._argmax


def quadratic_flux() -> AdmissibleFlux:
    """h(s) = s (1 - s); sharp constant sqrt(2/3)."""
    return AdmissibleFlux(
        F=lambda s: s * (1.0 - s),
        F_prime=lambda s: 1.0 - 2.0 * s,
        name="quadratic",
        alpha=0.75,
    )


def entropy_flux() -> AdmissibleFlux:
    """h(s) = -(s log s + (1-s) log(1-s)); sharp constant pi * sqrt(2/3)."""

    def F(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(s > 0.0, s * np.log(s), 0.0)
            b = np.where(s < 1.0, (1.0 - s) * np.log(1.0 - s), 0.0)
        return -(a + b)

    def F_prime(s):
        s = np.asarray(s, dtype=float)
        eps = np.finfo(float).tiny
        return np.log((1.0 - s) + eps) - np.log(s + eps)

    return AdmissibleFlux(F=F, F_prime=F_prime, name="entropy", alpha=0.75)


def sharp_constant(flux: AdmissibleFlux) -> float:
    """C(F) = sqrt(2 * integral_0^1 F'(s)^2 ds) by adaptive quadrature.

    Relative accuracy 1e-8; endpoint singularities of F' (square
    integrable under the growth condition) are handled by the adaptive
    rule.  A divergence flag is raised when the quadrature cannot
    converge, which indicates the growth condition fails.
    """

    def integrand(s):
        return float(np.asarray(flux.F_prime(np.array([s])))[0]) ** 2

    val, err = integrate.quad(integrand, 0.0, 1.0, epsabs=0.0, epsrel=1e-10, limit=400)
    if not np.isfinite(val) or (val > 0 and err > 1e-7 * val):
        raise ValueError(f"sharp-constant quadrature did not converge for {flux.name}")
    return math.sqrt(2.0 * val)


def rearrange(profile: Profile) -> Profile:
    """Half-line symmetric-decreasing rearrangement of a profile.

    Each half of the axis is sorted so the profile decreases away from
    -inf toward 0 on the left and from 0 toward +inf on the right.  The
    value distribution on each half is preserved exactly, so every
    integral of a function of s is unchanged, while the potential
    integral (s - s0) z dz cannot increase.  The result is monotone on
    each half-line but may still jump upward at z = 0.
    """
    n = profile.n
    half = n // 2
    left = np.sort(profile.values[:half])[::-1]
    right = np.sort(profile.values[half:])[::-1]
    return Profile(np.concatenate([left, right]), profile.half_width)


def monotonize(profile: Profile, flux: AdmissibleFlux) -> Profile:
    """Clip toward the flux maximiser to make the profile globally monotone.

    With zeta = argmax F, values on z < 0 are raised to at least zeta and
    values on z > 0 capped at zeta.  For profiles monotone on each
    half-line (apply rearrange first) the result is globally
    non-increasing; the flux integral cannot decrease and the potential
    cannot increase.
    """
    zeta = flux.argmax
    n = profile.n
    half = n // 2
    vals = profile.values.copy()
    vals[:half] = np.maximum(vals[:half], zeta)
    vals[half:] = np.minimum(vals[half:], zeta)
    return Profile(vals, profile.half_width)


@dataclass(frozen=True)
class InequalityResult:
    lhs: float
    rhs: float
    ratio: float


def inequality_check(
    profile: Profile, flux: AdmissibleFlux, constant: float | None = None, use_closure: bool = True
) -> InequalityResult:
    """Evaluate lhs = integral F(s) dz against rhs = C(F) sqrt(potential).

    Returns (lhs, rhs, ratio) with ratio defined as 0 when both sides
    vanish.  Raises InequalityViolation when ratio > 1 + 1e-6 and
    ProfileError when the potential vanishes but the flux integral does
    not (a quadrature-window bug, since the inequality forces lhs = 0
    there).
    """
    C = sharp_constant(flux) if constant is None else constant
    if use_closure and profile.closure is not None:
        f = profile.closure
        W = profile.half_width
        pts = [p for p in profile.breakpoints if -W < p < W]
        lhs, _ = integrate.quad(
            lambda zz: float(np.asarray(flux.F(np.clip(f(np.array([zz])), 0.0, 1.0)))[0]),
            -W, W, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-11,
        )
        pot, _ = integrate.quad(
            lambda zz: float((np.clip(f(np.array([zz])), 0.0, 1.0)[0] - (1.0 if zz < 0 else 0.0)) * zz),
            -W, W, points=sorted(set(pts + [0.0])), limit=400, epsabs=1e-13, epsrel=1e-11,
        )
    else:
        lhs = profile.flux_integral(flux.F)
        pot = profile.potential()
    pot = max(pot, 0.0)
    rhs = C * math.sqrt(pot)
    if rhs == 0.0:
        if lhs > 1e-10:
            raise ProfileError("zero potential with nonzero flux integral; malformed profile")
        return InequalityResult(lhs=lhs, rhs=rhs, ratio=0.0)
    ratio = lhs / rhs
    if ratio > 1.0 + RATIO_TOL:
        raise InequalityViolation(f"interpolation ratio {ratio} exceeds 1 + {RATIO_TOL}")
    return InequalityResult(lhs=lhs, rhs=rhs, ratio=ratio)


def invert_derivative(flux: AdmissibleFlux, xi, iterations: int = 80) -> np.ndarray:
    """Solve F'(s) = xi for s in [0, 1] by bisection (F' is decreasing).

    Values of xi outside [F'(1), F'(0)] clip to the end states.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lo = np.zeros_like(xi)
    hi = np.ones_like(xi)
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        take_right = flux.F_prime(mid) > xi
        lo = np.where(take_right, mid, lo)
        hi = np.where(take_right, hi, mid)
    s = 0.5 * (lo + hi)
    fp1 = float(flux.F_prime(np.array([1.0]))[0])
    fp0 = float(flux.F_prime(np.array([0.0]))[0])
    s = np.where(xi <= fp1, 1.0, s)
    s = np.where(xi >= fp0, 0.0, s)
    return s


def optimal_profile(flux: AdmissibleFlux, tau: float, n: int = 4096) -> Profile:
    """The fan profile s(z) = (F')^{-1}(z / tau), the unique equality case.

    The profile is non-increasing by concavity of F, with edge states at
    z = tau F'(1) and z = tau F'(0).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    fp0 = float(np.asarray(flux.F_prime(np.array([0.0])))[0])
    fp1 = float(np.asarray(flux.F_prime(np.array([1.0])))[0])
    z_left = tau * fp1
    z_right = tau * fp0
    if np.isfinite(fp0) and np.isfinite(fp1):
        half_width = 1.5 * max(abs(z_left), abs(z_right))
    else:
        half_width = 8.0 * tau

    def closure(z):
        return invert_derivative(flux, np.asarray(z, dtype=float) / tau)

    return Profile.from_callable(
        closure,
        half_width=half_width,
        n=n,
        breakpoints=(z_left, z_right) if np.isfinite(z_left) and np.isfinite(z_right) else (),
    )


def random_profile(rng: np.random.Generator, n: int = 1024) -> Profile:
    """Random admissible profile: logistic base plus optional bumps/steps.

    Roughly a third of the draws stay monotone; the rest acquire interior
    bumps or a displaced step, all blended to the sharp far field.
    """
    W = float(rng.uniform(3.0, 8.0))
    dz = 2.0 * W / n
    z = -W + (np.arange(n) + 0.5) * dz
    width = rng.uniform(0.1, 1.2)
    shift = rng.uniform(-0.8, 0.8)
    s = 1.0 / (1.0 + np.exp((z - shift) / width))
    kind = rng.integers(0, 3)
    if kind == 1:
        for _ in range(rng.integers(1, 4)):
            amp = rng.uniform(-0.5, 0.5)
            c = rng.uniform(-0.5 * W, 0.5 * W)
            sig = rng.uniform(0.1, 0.8)
            s = s + amp * np.exp(-0.5 * ((z - c) / sig) ** 2)
    elif kind == 2:
        c = rng.uniform(-0.4 * W, 0.4 * W)
        level = rng.uniform(0.0, 1.0)
        s = np.where(np.abs(z - c) < rng.uniform(0.2, 1.0), level, s)
    s = np.clip(s, 0.0, 1.0)
    # blend to the exact far field outside 70% of the window
    t = np.clip((np.abs(z) / W - 0.7) / 0.2, 0.0, 1.0)
    m = 1.0 - t * t * (3.0 - 2.0 * t)
    s = s * m + _s0(z) * (1.0 - m)
    s[z <= -0.9 * W] = 1.0
    s[z >= 0.9 * W] = 0.0
    return Profile(s, W)
