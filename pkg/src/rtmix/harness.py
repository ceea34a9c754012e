"""Theorem-level verification on diagnostics series.

The rigorous finite-time statement is a pointwise envelope: E_p(t) <= e(t)
where e solves

    de/dt = g + (2 C)^(1/2) g^(3/4) e^(3/4),   e(0) = E_p(0),

with C the sharp interpolation constant of the mixing flux.  The envelope
grows like ((2C)^(1/2) g^(3/4) t / 4)^4 at late times, which reproduces the
scale-free energy level 1/(24 (1 - A^2)); that level is attained exactly by
the rarefaction replay and only asymptotically in general, so the
normalized ratios

    r_E = E_p / (g (A g t^2)^2),  r_H = H / (A g t^2),
    r_P = (A g t^2)^{-2} int_0^t P^2

are reported against their limit constants but never asserted.  The
crossover report likewise tracks the dissipation-dominated scalings
H ~ A g t^(3/2) and E_p ~ A^2 g^3 t^3 with their L-dependent reference
levels; the hidden constants of those bounds are not stated by the theory,
so thresholds stay with the user.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .diagnostics import DiagnosticsRecord, poincare_check
from .fields import ScalarField
from .riemann import FluidParams, mixing_prefactors, sharp_constant_formula

# limit constants of the scale-free ratios (reported, not asserted)
def limit_r_E(atwood: float) -> float:
    return 1.0 / (24.0 * (1.0 - atwood**2))


def limit_r_H(atwood: float) -> float:
    return 1.0 / (12.0 * math.sqrt(1.0 - atwood**2))


def limit_r_P(atwood: float) -> float:
    return math.pi / (36.0 * (1.0 - atwood**2))


def rk4_fixed(f: Callable[[float, float], float], t_grid: np.ndarray, y0: float, substeps: int) -> np.ndarray:
    """Classic fourth-order integration on t_grid with uniform substeps
    inside every interval."""
    y = np.empty_like(t_grid, dtype=float)
    y[0] = y0
    cur = float(y0)
    for i in range(len(t_grid) - 1):
        t = float(t_grid[i])
        h = (float(t_grid[i + 1]) - t) / substeps
        for _ in range(substeps):
            k1 = f(t, cur)
            k2 = f(t + 0.5 * h, cur + 0.5 * h * k1)
            k3 = f(t + 0.5 * h, cur + 0.5 * h * k2)
            k4 = f(t + h, cur + h * k3)
            cur += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t += h
        y[i + 1] = cur
    return y


def envelope_e(t_grid, E_p0: float, p: FluidParams) -> np.ndarray:
    """Pointwise energy envelope e(t) on the given time grid.

    Integrated with fixed-step RK4 at a substep at most a tenth of the
    smallest grid spacing; the output is strictly increasing since the
    right side is positive.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if E_p0 < 0.0:
        raise ValueError("E_p(0) must be nonnegative")
    if t_grid.ndim != 1 or len(t_grid) < 2 or np.any(np.diff(t_grid) <= 0.0):
        raise ValueError("t_grid must be increasing with at least two points")
    C = sharp_constant_formula(p)
    g = p.g
    coef = math.sqrt(2.0 * C) * g**0.75

    def rhs(_t, e):
        return g + coef * max(e, 0.0) ** 0.75

    return rk4_fixed(rhs, t_grid, E_p0, substeps=10)


@dataclass
class BoundReport:
    """Envelope verdict plus the soft scale-free ratio trajectories."""

    t: np.ndarray
    envelope: np.ndarray
    envelope_margin: np.ndarray  # e(t) - E_p(t), must stay >= -tol
    envelope_ok: bool
    h_interp_ok: bool  # H <= sqrt(2/3) (E_p/g)^(1/2) at every sample
    r_E: np.ndarray
    r_H: np.ndarray
    r_P: np.ndarray
    limit_constants: tuple[float, float, float]
    config_hash: str = ""

    def passed(self) -> bool:
        return self.envelope_ok and self.h_interp_ok


def check_theorem_main(
    records: Sequence[DiagnosticsRecord],
    p: FluidParams,
    config_hash: str = "",
    envelope_rtol: float = 1e-9,
) -> BoundReport:
    """Hard envelope check E_p <= e plus the instantaneous interpolation
    consistency H <= sqrt(2/3) sqrt(E_p / g); the limsup ratios are
    recorded as trajectories only."""
    t = np.array([r.t for r in records])
    E_p = np.array([r.E_p for r in records])
    H = np.array([r.H for r in records])
    P = np.array([r.P for r in records])

    env = envelope_e(t, max(E_p[0], 0.0), p) if len(t) >= 2 else np.array([max(E_p[0], 0.0)])
    margin = env - E_p
    scale = np.maximum(np.abs(env), 1e-300)
    envelope_ok = bool(np.all(margin >= -envelope_rtol * scale))

    with np.errstate(invalid="ignore", divide="ignore"):
        h_bound = math.sqrt(2.0 / 3.0) * np.sqrt(np.maximum(E_p, 0.0) / p.g)
    h_scale = np.maximum(h_bound, 1e-300)
    h_interp_ok = bool(np.all(H <= h_bound + 1e-6 * h_scale + 1e-14))

    A, g = p.atwood, p.g
    with np.errstate(invalid="ignore", divide="ignore"):
        scale_t = A * g * t**2
        r_E = np.where(t > 0, E_p / (g * scale_t**2), np.nan)
        r_H = np.where(t > 0, H / scale_t, np.nan)
    cum_P2 = np.concatenate([[0.0], np.cumsum(0.5 * (P[1:] ** 2 + P[:-1] ** 2) * np.diff(t))])
    with np.errstate(invalid="ignore", divide="ignore"):
        r_P = np.where(t > 0, cum_P2 / scale_t**2, np.nan)

    return BoundReport(
        t=t,
        envelope=env,
        envelope_margin=margin,
        envelope_ok=envelope_ok,
        h_interp_ok=h_interp_ok,
        r_E=r_E,
        r_H=r_H,
        r_P=r_P,
        limit_constants=(limit_r_E(A), limit_r_H(A), limit_r_P(A)),
        config_hash=config_hash,
    )


@dataclass
class CrossoverReport:
    """Late-time (dissipation-dominated) scaling trajectories.

    All content is soft: the underlying bounds hide constants, so the
    report carries normalized curves, the reference crossover time
    L^2 / (1-A)^(1/2), and L-dependent reference levels, plus an estimate
    of when the t^(3/2)-normalized entropy curve flattens.
    """

    t: np.ndarray
    h_ratio_t32: np.ndarray  # H / (A g t^(3/2))
    h_ratio_t2: np.ndarray   # H / (A g t^2)
    e_ratio_t3: np.ndarray   # E_p / (A^2 g^3 t^3)
    reference_time: float    # L^2 / (1 - A)^(1/2)
    reference_level_E: float  # L^2 / (1 - A)^(3/2)
    reference_level_H: float  # L / (1 - A)^(3/4)
    horizon_reached: bool
    flattening_time: float
    chain_ratio: np.ndarray  # E_k / (L^2 g^2 (A t / (1 - A)) H)
    poincare_ok: bool
    poincare_max_ratio: float


def _flattening_time(t: np.ndarray, curve: np.ndarray, band: float = 0.15) -> float:
    """Earliest sample after which the curve stays within a relative band
    of its final value; NaN when it never settles."""
    good = np.isfinite(curve) & (t > 0)
    t, curve = t[good], curve[good]
    if len(t) < 3:
        return math.nan
    final = curve[-1]
    if final == 0.0:
        return math.nan
    inside = np.abs(curve - final) <= band * abs(final)
    for i in range(len(t)):
        if inside[i:].all():
            return float(t[i])
    return math.nan


def check_crossover(
    records: Sequence[DiagnosticsRecord],
    p: FluidParams,
    L: float,
    snapshots: Sequence[tuple[float, ScalarField]] | None = None,
) -> CrossoverReport:
    A, g = p.atwood, p.g
    t = np.array([r.t for r in records])
    H = np.array([r.H for r in records])
    E_p = np.array([r.E_p for r in records])
    E_k = np.array([r.E_k for r in records])
    with np.errstate(invalid="ignore", divide="ignore"):
        h32 = np.where(t > 0, H / (A * g * t**1.5), np.nan)
        h2 = np.where(t > 0, H / (A * g * t**2), np.nan)
        e3 = np.where(t > 0, E_p / (A**2 * g**3 * t**3), np.nan)
        chain_den = L**2 * g**2 * (A * t / (1.0 - A)) * H
        chain = np.where(chain_den > 0, E_k / chain_den, np.nan)

    t_ref = L**2 / math.sqrt(1.0 - A)
    poincare_ok = True
    poincare_max = 0.0
    if snapshots:
        for _, rho in snapshots:
            chk = poincare_check(rho)
            poincare_ok = poincare_ok and chk.ok
            if chk.rhs_discrete > 0:
                poincare_max = max(poincare_max, chk.lhs / chk.rhs_discrete)

    return CrossoverReport(
        t=t,
        h_ratio_t32=h32,
        h_ratio_t2=h2,
        e_ratio_t3=e3,
        reference_time=t_ref,
        reference_level_E=L**2 / (1.0 - A) ** 1.5,
        reference_level_H=L / (1.0 - A) ** 0.75,
        horizon_reached=bool(t[-1] >= t_ref),
        flattening_time=_flattening_time(t, h32),
        chain_ratio=chain,
        poincare_ok=poincare_ok,
        poincare_max_ratio=poincare_max,
    )


@dataclass
class RiemannComparison:
    """Measured mixing-edge ratios against the analytic prefactors.

    Observed edges sit well below both analytic solutions' predictions in
    experiments, so nothing here is asserted.
    """

    t: np.ndarray
    upper_ratio: np.ndarray  # a_+ / (A g t^2)
    lower_ratio: np.ndarray  # -a_- / (A g t^2)
    alpha_plus: float
    alpha_minus_abs: float
    alpha_tilde_plus: float
    alpha_tilde_minus_abs: float


def compare_with_riemann(records: Sequence[DiagnosticsRecord], p: FluidParams) -> RiemannComparison:
    t = np.array([r.t for r in records])
    a_plus = np.array([r.a_plus for r in records])
    a_minus = np.array([r.a_minus for r in records])
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = p.atwood * p.g * t**2
        up = np.where(t > 0, a_plus / scale, np.nan)
        lo = np.where(t > 0, -a_minus / scale, np.nan)
    pref = mixing_prefactors(p)
    return RiemannComparison(
        t=t,
        upper_ratio=up,
        lower_ratio=lo,
        alpha_plus=pref.alpha_plus,
        alpha_minus_abs=-pref.alpha_minus,
        alpha_tilde_plus=pref.alpha_tilde_plus,
        alpha_tilde_minus_abs=-pref.alpha_tilde_minus,
    )


def bound_report_csv(report: BoundReport) -> str:
    lines = ["t,E_envelope,envelope_margin,r_E,r_H,r_P"]
    for i in range(len(report.t)):
        lines.append(
            ",".join(
                format(x, ".17g")
                for x in (
                    report.t[i], report.envelope[i], report.envelope_margin[i],
                    report.r_E[i], report.r_H[i], report.r_P[i],
                )
            )
        )
    return "\n".join(lines) + "\n"


def bound_report_summary(report: BoundReport, p: FluidParams) -> str:
    cE, cH, cP = report.limit_constants
    fin = np.isfinite
    last = -1
    lines = [
        "bound verification summary",
        f"  config_hash: {report.config_hash or '(none)'}",
        f"  samples: {len(report.t)}   t_max: {report.t[last]:.6g}",
        f"  [{'PASS' if report.envelope_ok else 'FAIL'}] pointwise envelope E_p(t) <= e(t)",
        f"  [{'PASS' if report.h_interp_ok else 'FAIL'}] H(t) <= sqrt(2/3) (E_p/g)^(1/2)",
        "  soft trend report (limit constants are asymptotic; not asserted):",
        f"    r_E final {report.r_E[last] if fin(report.r_E[last]) else float('nan'):.6g}"
        f"  vs limit 1/(24(1-A^2)) = {cE:.6g}",
        f"    r_H final {report.r_H[last] if fin(report.r_H[last]) else float('nan'):.6g}"
        f"  vs limit 1/(12 sqrt(1-A^2)) = {cH:.6g}",
        f"    r_P final {report.r_P[last] if fin(report.r_P[last]) else float('nan'):.6g}"
        f"  vs limit pi/(36(1-A^2)) = {cP:.6g}",
    ]
    return "\n".join(lines) + "\n"
