"""Bulk diagnostics of the mixing zone and their identity checks.

All quantities are transverse-averaged and density-rescaling invariant:

    E_p = (1/drho) int (rho0(z) - rho) g z        (negative potential energy)
    E_k = (1/2) (1/drho) int rho |u|^2            (kinetic energy)
    H   = (1/drho^2) int (rho_+ - rho)(rho - rho_-)
    S   = - int [q log q + (1-q) log(1-q)],  q = (rho_+ - rho)/drho
    P   = (1/drho) int |grad rho|                 (averaged perimeter)

with rho0 the sharp stratified reference (heavy fluid above z = 0) and the
integral sign denoting the normalized strip integral.  H and S vanish
exactly on unmixed two-valued fields and measure the mushy-zone volume; P
is the gradient form of the interfacial area.  Along any solution the
balance E_p - E_k - g t stays constant, H and S grow at explicit
dissipation rates, and P^2 <= dS/dt * H pointwise; those identities are
recast here as runtime residual checks.

Stable-orientation runs (heavy fluid effectively below) are handled by a
signed gravity: all identities hold verbatim with g < 0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, fields as dataclass_fields
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .fields import Grid, ScalarField, VelocityField, gradient, horizontal_average, normalized_integral
from .riemann import FluidParams, flux_F, mixing_prefactors

DEFAULT_EDGE_THRESHOLD = 0.01


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One time sample of the bulk quantities."""

    t: float
    E_p: float
    E_k: float
    H: float
    S: float
    P: float
    a_minus: float
    a_plus: float
    b_minus: float
    b_plus: float
    drift: float

    @staticmethod
    def csv_header() -> str:
        return "t,E_p,E_k,H,S,P,a_minus,a_plus,b_minus,b_plus,drift"

    def csv_row(self) -> str:
        vals = [getattr(self, f.name) for f in dataclass_fields(self)]
        return ",".join(format(v, ".17g") for v in vals)


def write_series(path, records: Iterable[DiagnosticsRecord]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(DiagnosticsRecord.csv_header() + "\n")
        for r in records:
            fh.write(r.csv_row() + "\n")


def series_to_csv(records: Iterable[DiagnosticsRecord]) -> str:
    buf = io.StringIO()
    buf.write(DiagnosticsRecord.csv_header() + "\n")
    for r in records:
        buf.write(r.csv_row() + "\n")
    return buf.getvalue()


def read_series(path) -> list[DiagnosticsRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if ",".join(header) != DiagnosticsRecord.csv_header():
            raise ValueError("unexpected series CSV header")
        return [DiagnosticsRecord(*(float(x) for x in row)) for row in reader if row]


def reference_profile(grid: Grid, p: FluidParams) -> np.ndarray:
    """Sharp stratified reference rho0(z): heavy fluid for z > 0."""
    return np.where(grid.z > 0.0, p.rho_plus, p.rho_minus)


def potential_energy(rho: ScalarField, p: FluidParams, g_signed: float | None = None) -> float:
    """Negative potential energy relative to the stratified reference."""
    g = p.g if g_signed is None else g_signed
    rho0 = reference_profile(rho.grid, p)
    integrand = ScalarField(rho.grid, (rho0[None, :] - rho.values) * g * rho.grid.z[None, :])
    return normalized_integral(integrand) / p.delta_rho


def kinetic_energy(rho: ScalarField, u: VelocityField, p: FluidParams) -> float:
    uc, wc = u.center_components()
    integrand = ScalarField(rho.grid, rho.values * (uc**2 + wc**2), )
    return 0.5 * normalized_integral(integrand, warn=False) / p.delta_rho


def _fractions(rho: ScalarField, p: FluidParams) -> tuple[np.ndarray, np.ndarray]:
    q = np.clip((p.rho_plus - rho.values) / p.delta_rho, 0.0, 1.0)
    return q, 1.0 - q


def entropy_H(rho: ScalarField, p: FluidParams) -> float:
    q, qc = _fractions(rho, p)
    return normalized_integral(ScalarField(rho.grid, q * qc), warn=False)


def _xlogx(x: np.ndarray) -> np.ndarray:
    # continuity extension: x log x -> 0 at x = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0.0, x * np.log(x), 0.0)


def entropy_S(rho: ScalarField, p: FluidParams) -> float:
    q, qc = _fractions(rho, p)
    return -normalized_integral(ScalarField(rho.grid, _xlogx(q) + _xlogx(qc)), warn=False)


def perimeter(rho: ScalarField, p: FluidParams) -> float:
    """Gradient form of the averaged perimeter (the co-area level-set form
    is equivalent in the continuum and is not used on the grid)."""
    gy, gz = gradient(rho)
    mag = np.hypot(gy.values, gz.values)
    return normalized_integral(ScalarField(rho.grid, mag), warn=False) / p.delta_rho


def grad_squared_integral(rho: ScalarField) -> float:
    """Normalized integral of |grad rho|^2 (entropy production integrand)."""
    gy, gz = gradient(rho)
    return normalized_integral(ScalarField(rho.grid, gy.values**2 + gz.values**2), warn=False)


def s_bar(rho: ScalarField, p: FluidParams) -> np.ndarray:
    """Averaged light-fluid fraction profile over z."""
    rb = horizontal_average(rho)
    return np.clip((p.rho_plus - rb) / p.delta_rho, 0.0, 1.0)


class MixingEdges(NamedTuple):
    a_minus: float
    a_plus: float
    degenerate: bool


def mixing_edges(rho: ScalarField, p: FluidParams, theta: float = DEFAULT_EDGE_THRESHOLD) -> MixingEdges:
    """Outermost z where the averaged profile deviates from the reference
    by more than theta; degenerate before any such deviation exists."""
    if not (0.0 < theta < 0.5):
        raise ValueError("theta must lie in (0, 1/2)")
    z = rho.grid.z
    s = s_bar(rho, p)
    s0 = np.where(z < 0.0, 1.0, 0.0)
    mask = np.abs(s - s0) > theta
    if not mask.any():
        return MixingEdges(0.0, 0.0, True)
    zs = z[mask]
    return MixingEdges(float(zs.min()), float(zs.max()), False)


def coarsening_scales(record: DiagnosticsRecord) -> tuple[float, float]:
    """(b_-, b_+) = (-a_-/P, a_+/P): mean wavelength of internal structure."""
    if record.P <= 0.0:
        return math.nan, math.nan
    return -record.a_minus / record.P, record.a_plus / record.P


def optimal_background(rho: ScalarField) -> np.ndarray:
    """Transverse harmonic mean of the density: the background field that
    minimises the weighted deviation integral in the kinetic bound."""
    if rho.values.min() <= 0.0:
        raise ValueError("density must be positive")
    return 1.0 / horizontal_average(ScalarField(rho.grid, 1.0 / rho.values))


class FluxDomination(NamedTuple):
    lhs: float
    rhs: float
    ok: bool
    near_equality: bool


def check_flux_domination(rho: ScalarField, p: FluidParams, tol: float = 1e-10) -> FluxDomination:
    """(1/drho) int (rho - ~rho)^2 / rho  <=  int F(s_bar) dz.

    Equality holds exactly when the field is two-valued; a near-equality
    flag is reported when the field is numerically unmixed.
    """
    rho_tilde = optimal_background(rho)
    dev = (rho.values - rho_tilde[None, :]) ** 2 / rho.values
    lhs = normalized_integral(ScalarField(rho.grid, dev), warn=False) / p.delta_rho
    rhs = float(np.sum(np.asarray(flux_F(s_bar(rho, p), p))) * rho.grid.dz)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    mixed = np.minimum(rho.values - p.rho_minus, p.rho_plus - rho.values) / p.delta_rho
    near_equality = bool(np.all((mixed < 1e-6) | (mixed > 1.0 - 1e-6))) or (rhs - lhs) < 1e-6 * scale
    return FluxDomination(lhs=lhs, rhs=rhs, ok=lhs <= rhs + tol * scale + 1e-14, near_equality=near_equality)


class EntropyProductionResult(NamedTuple):
    t: np.ndarray
    residual_H: np.ndarray
    residual_S: np.ndarray
    relative_H: float
    relative_S: float


def entropy_production_check(
    snapshots: Sequence[tuple[float, ScalarField]], p: FluidParams
) -> EntropyProductionResult:
    """Compare measured dH/dt and dS/dt against their dissipation integrals

        dH/dt = (2/drho^2) int |grad rho|^2,
        dS/dt = int |grad rho|^2 / ((rho_+ - rho)(rho - rho_-)),

    using centred time differences on >= 3 uniformly spaced snapshots.
    The identities hold only along solutions; a frozen non-solution field
    shows a nonzero dissipation integral with zero measured rate.
    """
    if len(snapshots) < 3:
        raise ValueError("need at least three snapshots")
    times = np.array([t for t, _ in snapshots])
    dts = np.diff(times)
    if not np.allclose(dts, dts[0], rtol=1e-8, atol=1e-12):
        raise ValueError("snapshots must be uniformly spaced in time")
    dt = float(dts[0])
    H = np.array([entropy_H(r, p) for _, r in snapshots])
    S = np.array([entropy_S(r, p) for _, r in snapshots])

    prod_H = []
    prod_S = []
    for _, r in snapshots:
        gy, gz = gradient(r)
        g2 = gy.values**2 + gz.values**2
        prod_H.append(2.0 / p.delta_rho**2 * normalized_integral(ScalarField(r.grid, g2), warn=False))
        denom = np.maximum((p.rho_plus - r.values) * (r.values - p.rho_minus), 1e-14 * p.delta_rho**2)
        prod_S.append(normalized_integral(ScalarField(r.grid, g2 / denom), warn=False))
    prod_H = np.array(prod_H)
    prod_S = np.array(prod_S)

    dH = (H[2:] - H[:-2]) / (2.0 * dt)
    dS = (S[2:] - S[:-2]) / (2.0 * dt)
    res_H = dH - prod_H[1:-1]
    res_S = dS - prod_S[1:-1]
    rel_H = float(np.max(np.abs(res_H)) / max(np.max(np.abs(prod_H[1:-1])), 1e-300))
    rel_S = float(np.max(np.abs(res_S)) / max(np.max(np.abs(prod_S[1:-1])), 1e-300))
    return EntropyProductionResult(times[1:-1], res_H, res_S, rel_H, rel_S)


def energy_balance_residual(records: Sequence[DiagnosticsRecord], g_signed: float) -> float:
    """max over samples of |(E_p - E_k - g t) - (E_p(0) - E_k(0))|."""
    if not records:
        raise ValueError("empty series")
    const = records[0].E_p - records[0].E_k
    drifts = [(r.E_p - r.E_k - g_signed * r.t) - const for r in records]
    return float(np.max(np.abs(drifts)))


class PerimeterInterpolation(NamedTuple):
    ok_pointwise: bool
    ok_integrated: bool
    max_pointwise_excess: float
    max_integrated_excess: float


def perimeter_interpolation_check(
    records: Sequence[DiagnosticsRecord], rtol: float = 1e-6
) -> PerimeterInterpolation:
    """Verify P^2 <= dS/dt * H pointwise and int_0^t P^2 <= S(t) H(t).

    dS/dt uses centred differences in the interior and one-sided ones at
    the ends; tolerances scale with the quantities involved.
    """
    t = np.array([r.t for r in records])
    P = np.array([r.P for r in records])
    S = np.array([r.S for r in records])
    H = np.array([r.H for r in records])
    if len(records) < 3:
        return PerimeterInterpolation(True, True, 0.0, 0.0)
    dS = np.gradient(S, t)
    lhs_pt = P[1:-1] ** 2
    rhs_pt = dS[1:-1] * H[1:-1]
    scale_pt = np.maximum(np.maximum(lhs_pt, np.abs(rhs_pt)), 1e-300)
    excess_pt = (lhs_pt - rhs_pt) / scale_pt
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (P[1:] ** 2 + P[:-1] ** 2) * np.diff(t))])
    rhs_int = S * H
    scale_int = np.maximum(np.maximum(cum, rhs_int), 1e-300)
    excess_int = (cum - rhs_int) / scale_int
    return PerimeterInterpolation(
        ok_pointwise=bool(np.all(excess_pt <= rtol)),
        ok_integrated=bool(np.all(excess_int <= rtol)),
        max_pointwise_excess=float(excess_pt.max(initial=-np.inf)),
        max_integrated_excess=float(excess_int.max(initial=-np.inf)),
    )


class PoincareCheck(NamedTuple):
    lhs: float
    rhs_discrete: float
    rhs_continuum: float
    ok: bool


def poincare_check(rho: ScalarField) -> PoincareCheck:
    """Transverse Poincare inequality for mean-zero deviations.

    The continuum constant (L/2pi)^2 is violated on any finite grid by an
    O(ny^-2) margin at the lowest mode, so the assertion uses the sharp
    discrete constant (L / (2 ny sin(pi/ny)))^2 for the forward-difference
    gradient; the continuum bound is reported alongside.
    """
    g = rho.grid
    dev = rho.values - horizontal_average(rho)[None, :]
    lhs = normalized_integral(ScalarField(g, dev**2), warn=False)
    dy_forward = (np.roll(rho.values, -1, axis=0) - rho.values) / g.dy
    grad2 = normalized_integral(ScalarField(g, dy_forward**2), warn=False)
    c_discrete = (g.L / (2.0 * g.ny * math.sin(math.pi / g.ny))) ** 2
    c_continuum = (g.L / (2.0 * math.pi)) ** 2
    rhs_d = c_discrete * grad2
    rhs_c = c_continuum * grad2
    scale = max(lhs, rhs_d, 1e-300)
    return PoincareCheck(lhs=lhs, rhs_discrete=rhs_d, rhs_continuum=rhs_c, ok=lhs <= rhs_d + 1e-10 * scale)


def compute_record(
    t: float,
    rho: ScalarField,
    u: VelocityField | None,
    p: FluidParams,
    g_signed: float | None = None,
    theta: float = DEFAULT_EDGE_THRESHOLD,
    balance_const: float | None = None,
) -> DiagnosticsRecord:
    """Assemble one diagnostics sample; drift is NaN until the balance
    constant (E_p(0) - E_k(0)) is supplied."""
    g = p.g if g_signed is None else g_signed
    E_p = potential_energy(rho, p, g_signed=g)
    E_k = 0.0 if u is None else kinetic_energy(rho, u, p)
    H = entropy_H(rho, p)
    S = entropy_S(rho, p)
    P = perimeter(rho, p)
    edges = mixing_edges(rho, p, theta)
    if P > 0.0:
        b_minus, b_plus = -edges.a_minus / P, edges.a_plus / P
    else:
        b_minus, b_plus = math.nan, math.nan
    drift = math.nan if balance_const is None else (E_p - E_k - g * t) - balance_const
    return DiagnosticsRecord(
        t=t, E_p=E_p, E_k=E_k, H=H, S=S, P=P,
        a_minus=edges.a_minus, a_plus=edges.a_plus,
        b_minus=b_minus, b_plus=b_plus, drift=drift,
    )


def scale_free_ratios(record: DiagnosticsRecord, p: FluidParams) -> tuple[float, float]:
    """(r_E, r_H) = (E_p / (g (A g t^2)^2), H / (A g t^2)) at one sample."""
    if record.t <= 0.0:
        return math.nan, math.nan
    scale = p.atwood * p.g * record.t**2
    return record.E_p / (p.g * scale**2), record.H / scale


def predicted_edge_ratios(p: FluidParams) -> tuple[float, float, float, float]:
    """(alpha_+, -alpha_-, ~alpha_+, -~alpha_-) for edge-overlay reports."""
    pref = mixing_prefactors(p)
    return pref.alpha_plus, -pref.alpha_minus, pref.alpha_tilde_plus, -pref.alpha_tilde_minus
