"""Time integration of the coupled density/velocity system on the strip.

The density obeys an advection-diffusion law with unit diffusivity; the
velocity obeys the variable-density Euler equations with the extra
diffusion-transport coupling term:

    rho_t + u . grad rho - lap rho = 0,
    u_t = -(u . grad) u + (grad rho . grad) u / rho - grad p / rho - g e_z,
    div u = 0.

Discretisation: MAC staggering (u_y on y-faces, u_z on z-faces, scalars at
centres), flux-form advection of rho with a third-order upwind-biased face
reconstruction, centred second-order momentum terms, explicit five-point
diffusion, and a Heun predictor-corrector wrapped around an exact
variable-coefficient pressure projection

    div( grad p / rho ) = div u* / dt,

solved by preconditioned conjugate gradients (constant-coefficient
FFT/DCT solve as the preconditioner).  Boundary conditions at z = +/-H:
zero normal velocity, free-slip tangential closure, zero normal gradient
for rho and p (mean-zero pressure gauge); these mimic the quiescent far
field, and valid runs stop before the mixing zone reaches the walls.

Stable-orientation runs pass a negative g_signed; the equations and every
balance identity hold verbatim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .config import RunConfig
from .diagnostics import DiagnosticsRecord, compute_record
from .fields import Grid, ScalarField, VelocityField, divergence
from .riemann import FluidParams

MAX_PRINCIPLE_RTOL = 1e-6  # eps_mp = 1e-6 * (rho_plus - rho_minus)
PROJECTION_RTOL = 1e-11
DEFAULT_SAFETY = 0.8
DEFAULT_CFL_ADV = 0.5


class SolverError(RuntimeError):
    """Field blow-up or maximum-principle violation during a step."""


class ProjectionError(RuntimeError):
    """Pressure solve failed to converge; carries iteration diagnostics."""

    def __init__(self, iterations: int, residual: float, target: float):
        super().__init__(
            f"pressure projection did not converge: residual {residual:.3e} "
            f"after {iterations} iterations (target {target:.3e})"
        )
        self.iterations = iterations
        self.residual = residual
        self.target = target


@dataclass(frozen=True)
class PerturbationSpec:
    """Initial interface displacement: kind in {single_mode, multi_mode,
    random_seeded}; amplitude and width in length units; width >= 2 dz."""

    kind: str = "single_mode"
    amplitude: float = 0.05
    width: float = 0.25
    mode: int = 1
    nmodes: int = 8
    seed: int = 0

    def displacement(self, y: np.ndarray, L: float) -> np.ndarray:
        k0 = 2.0 * math.pi / L
        if self.kind == "single_mode":
            return self.amplitude * np.cos(k0 * self.mode * y)
        if self.kind == "multi_mode":
            eta = np.zeros_like(y)
            for m in range(1, self.nmodes + 1):
                eta += np.cos(k0 * m * y + 0.7 * m * m)
            peak = np.max(np.abs(eta))
            return self.amplitude * eta / (peak if peak > 0 else 1.0)
        if self.kind == "random_seeded":
            rng = np.random.default_rng(self.seed)
            eta = np.zeros_like(y)
            for m in range(1, self.nmodes + 1):
                amp = rng.standard_normal()
                phase = rng.uniform(0.0, 2.0 * math.pi)
                eta += amp * np.cos(k0 * m * y + phase)
            peak = np.max(np.abs(eta))
            return self.amplitude * eta / (peak if peak > 0 else 1.0)
        raise ValueError(f"unknown perturbation kind {self.kind!r}")


@dataclass
class SimState:
    t: float
    rho: ScalarField
    u: VelocityField
    p_field: ScalarField


def init_state(grid: Grid, p: FluidParams, pert: PerturbationSpec) -> SimState:
    """Stratified state (heavy above) with a tanh interface displaced by
    the perturbation; velocity starts at rest."""
    if pert.width < 2.0 * grid.dz:
        raise ValueError(f"interface width {pert.width} < 2 dz = {2.0 * grid.dz}")
    eta = pert.displacement(grid.y, grid.L)
    zz = grid.z[None, :] - eta[:, None]
    rho = p.rho_minus + p.delta_rho * 0.5 * (1.0 + np.tanh(zz / pert.width))
    return SimState(
        t=0.0,
        rho=ScalarField(grid, rho),
        u=VelocityField.zeros(grid),
        p_field=ScalarField.constant(grid, 0.0),
    )


# ---------------------------------------------------------------------------
# spatial operators (arrays are (ny, nz); axis 0 periodic, axis 1 walls)

def _zpad_mirror(v: np.ndarray, n: int) -> np.ndarray:
    """Even (Neumann) extension across both walls by n ghost columns."""
    left = v[:, n - 1::-1] if n > 1 else v[:, :1]
    right = v[:, :-(n + 1):-1] if n > 1 else v[:, -1:]
    return np.concatenate([left, v, right], axis=1)


def _laplacian(v: np.ndarray, dy: float, dz: float) -> np.ndarray:
    lap_y = (np.roll(v, -1, axis=0) - 2.0 * v + np.roll(v, 1, axis=0)) / dy**2
    vz = _zpad_mirror(v, 1)
    lap_z = (vz[:, 2:] - 2.0 * vz[:, 1:-1] + vz[:, :-2]) / dz**2
    return lap_y + lap_z


def _upwind_face(um1, u0, up1, up2, vel):
    """Third-order upwind-biased face value between cells 0 and +1."""
    pos = (-um1 + 5.0 * u0 + 2.0 * up1) / 6.0
    neg = (2.0 * u0 + 5.0 * up1 - up2) / 6.0
    return np.where(vel > 0.0, pos, neg)


def _rho_tendency(rho: np.ndarray, u: VelocityField, grid: Grid) -> np.ndarray:
    """Conservative advection (solenoidal face velocities) plus diffusion."""
    dy, dz, nz = grid.dy, grid.dz, grid.nz
    # y fluxes at faces j+1/2
    fy = u.u_y * _upwind_face(
        np.roll(rho, 1, axis=0), rho, np.roll(rho, -1, axis=0), np.roll(rho, -2, axis=0), u.u_y
    )
    div_y = (fy - np.roll(fy, 1, axis=0)) / dy
    # z fluxes at interior faces k+1/2, k = 0..nz-2; wall fluxes vanish
    re = _zpad_mirror(rho, 2)
    face = _upwind_face(re[:, 1:nz], re[:, 2:nz + 1], re[:, 3:nz + 2], re[:, 4:nz + 3], u.u_z[:, :nz - 1])
    fz = u.u_z[:, :nz - 1] * face
    zero = np.zeros((grid.ny, 1))
    fz_full = np.concatenate([zero, fz, zero], axis=1)
    div_z = (fz_full[:, 1:] - fz_full[:, :-1]) / dz
    return -(div_y + div_z) + _laplacian(rho, dy, dz)


def _velocity_tendency(
    rho: np.ndarray, u: VelocityField, grid: Grid, g_signed: float
) -> tuple[np.ndarray, np.ndarray]:
    """Advection + density-diffusion coupling + gravity (no pressure)."""
    dy, dz, ny, nz = grid.dy, grid.dz, grid.ny, grid.nz
    uy, uz = u.u_y, u.u_z
    zero = np.zeros((ny, 1))

    # --- u_y tendency at y-faces ---
    dudy = (np.roll(uy, -1, axis=0) - np.roll(uy, 1, axis=0)) / (2.0 * dy)
    uyp = _zpad_mirror(uy, 1)  # free-slip tangential closure
    dudz = (uyp[:, 2:] - uyp[:, :-2]) / (2.0 * dz)
    uz_below = np.concatenate([zero, uz[:, :-1]], axis=1)
    wc = 0.5 * (uz + uz_below)  # u_z at centres
    w_at_uy = 0.5 * (wc + np.roll(wc, -1, axis=0))
    rho_fy = 0.5 * (rho + np.roll(rho, -1, axis=0))
    drdy_f = (np.roll(rho, -1, axis=0) - rho) / dy
    rp = _zpad_mirror(rho, 1)
    drdz_c = (rp[:, 2:] - rp[:, :-2]) / (2.0 * dz)
    drdz_f = 0.5 * (drdz_c + np.roll(drdz_c, -1, axis=0))
    tend_uy = -(uy * dudy + w_at_uy * dudz) + (drdy_f * dudy + drdz_f * dudz) / rho_fy

    # --- u_z tendency at interior z-faces (top wall row stays zero) ---
    uzp = np.concatenate([zero, uz], axis=1)  # prepend bottom wall face
    dwdz = (uzp[:, 2:nz + 1] - uzp[:, 0:nz - 1]) / (2.0 * dz)
    dwdy = ((np.roll(uz, -1, axis=0) - np.roll(uz, 1, axis=0)) / (2.0 * dy))[:, :nz - 1]
    uyc = 0.5 * (uy + np.roll(uy, 1, axis=0))  # u_y at centres
    v_at_uz = 0.5 * (uyc[:, :nz - 1] + uyc[:, 1:])
    rho_fz = 0.5 * (rho[:, :nz - 1] + rho[:, 1:])
    drdz_fz = (rho[:, 1:] - rho[:, :nz - 1]) / dz
    drdy_c = (np.roll(rho, -1, axis=0) - np.roll(rho, 1, axis=0)) / (2.0 * dy)
    drdy_fz = 0.5 * (drdy_c[:, :nz - 1] + drdy_c[:, 1:])
    uz_int = uz[:, :nz - 1]
    tend_int = (
        -(v_at_uz * dwdy + uz_int * dwdz)
        + (drdy_fz * dwdy + drdz_fz * dwdz) / rho_fz
        - g_signed
    )
    tend_uz = np.concatenate([tend_int, zero], axis=1)
    return tend_uy, tend_uz


# ---------------------------------------------------------------------------
# pressure projection

class PoissonSolver:
    """PCG for  -div( grad q / rho ) = b  with periodic-y / Neumann-z
    closure and mean-zero gauge.

    The preconditioner is the exact inverse of the constant-coefficient
    operator (coefficient = mean of 1/rho), applied spectrally: DCT in z,
    FFT in y.  Density contrast only enters through the Krylov iteration,
    so iteration counts stay small at moderate Atwood number.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        ny, nz = grid.ny, grid.nz
        m = np.arange(ny // 2 + 1)
        k = np.arange(nz)
        ly = 4.0 * np.sin(np.pi * m / ny) ** 2 / grid.dy**2
        lz = (2.0 - 2.0 * np.cos(np.pi * k / nz)) / grid.dz**2
        lam = ly[:, None] + lz[None, :]
        lam[0, 0] = np.inf  # gauge: drop the constant mode
        self._inv_lam = 1.0 / lam
        self._last_q: np.ndarray | None = None
        self._prev_q: np.ndarray | None = None

    def _apply(self, q: np.ndarray, w_yf: np.ndarray, w_zf: np.ndarray) -> np.ndarray:
        g = self.grid
        gy = (np.roll(q, -1, axis=0) - q) / g.dy
        fy = w_yf * gy
        div_y = (fy - np.roll(fy, 1, axis=0)) / g.dy
        gz = (q[:, 1:] - q[:, :-1]) / g.dz
        fz = w_zf * gz
        zero = np.zeros((g.ny, 1))
        fz_full = np.concatenate([zero, fz, zero], axis=1)
        div_z = (fz_full[:, 1:] - fz_full[:, :-1]) / g.dz
        return -(div_y + div_z)

    def _precondition(self, r: np.ndarray, w0: float) -> np.ndarray:
        s = scipy.fft.dct(r, type=2, axis=1, norm="ortho")
        s = np.fft.rfft(s, axis=0, norm="ortho")
        s *= self._inv_lam
        s = np.fft.irfft(s, n=self.grid.ny, axis=0, norm="ortho")
        return scipy.fft.idct(s, type=2, axis=1, norm="ortho") / w0

    def solve(
        self,
        rho: np.ndarray,
        b: np.ndarray,
        rtol: float = PROJECTION_RTOL,
        max_iter: int = 500,
        warm_start: bool = True,
    ) -> np.ndarray:
        w = 1.0 / rho
        w_yf = 0.5 * (w + np.roll(w, -1, axis=0))
        w_zf = 0.5 * (w[:, :-1] + w[:, 1:])
        w0 = float(w.mean())

        b = b - b.mean()
        bnorm = math.sqrt(float(np.sum(b * b)))
        target = rtol * bnorm
        if bnorm == 0.0:
            return np.zeros_like(b)

        # initial guess: the better of zero, the last pressure, and its
        # linear-in-time extrapolation (consecutive solves are smooth)
        x = np.zeros_like(b)
        r = b
        r2 = float(np.sum(r * r))
        if warm_start and self._last_q is not None:
            candidates = [self._last_q]
            if self._prev_q is not None:
                candidates.append(2.0 * self._last_q - self._prev_q)
            for cand in candidates:
                r_cand = b - self._apply(cand, w_yf, w_zf)
                r_cand2 = float(np.sum(r_cand * r_cand))
                if r_cand2 < r2:
                    x, r, r2 = cand, r_cand, r_cand2
        rnorm = math.sqrt(r2)
        if rnorm <= target:
            x = x - x.mean()
            self._prev_q, self._last_q = self._last_q, x
            return x
        z = self._precondition(r, w0)
        p = z.copy()
        rz = float(np.sum(r * z))
        it = 0
        for it in range(1, max_iter + 1):
            Ap = self._apply(p, w_yf, w_zf)
            pAp = float(np.sum(p * Ap))
            if pAp <= 0.0 or rz == 0.0:
                break
            alpha = rz / pAp
            x = x + alpha * p
            r = r - alpha * Ap
            rnorm = math.sqrt(float(np.sum(r * r)))
            if rnorm <= target:
                x = x - x.mean()
                self._prev_q, self._last_q = self._last_q, x
                return x
            z = self._precondition(r, w0)
            rz_new = float(np.sum(r * z))
            p = z + (rz_new / rz) * p
            rz = rz_new
        raise ProjectionError(it, math.sqrt(float(np.sum(r * r))), target)


def pressure_projection(
    u_star: VelocityField,
    rho: ScalarField,
    dt: float = 1.0,
    poisson: PoissonSolver | None = None,
) -> tuple[VelocityField, ScalarField]:
    """Project u* onto the discretely divergence-free space.

    Solves div(grad p / rho) = div u* / dt and corrects
    u = u* - dt grad p / rho; the corrected field is divergence-free to
    the solver tolerance, wall-normal velocity stays zero, and p carries
    the mean-zero gauge.
    """
    grid = u_star.grid
    if poisson is None:
        poisson = PoissonSolver(grid)
    div_star = divergence(u_star).values
    q = poisson.solve(rho.values, -div_star / dt)
    w = 1.0 / rho.values
    w_yf = 0.5 * (w + np.roll(w, -1, axis=0))
    w_zf = 0.5 * (w[:, :-1] + w[:, 1:])
    u_y = u_star.u_y - dt * w_yf * (np.roll(q, -1, axis=0) - q) / grid.dy
    u_z = u_star.u_z.copy()
    u_z[:, :-1] -= dt * w_zf * (q[:, 1:] - q[:, :-1]) / grid.dz
    u_z[:, -1] = 0.0
    return VelocityField(grid, u_y, u_z), ScalarField(grid, q)


# ---------------------------------------------------------------------------
# time stepping

def cfl_dt(state: SimState, safety: float = DEFAULT_SAFETY, cfl_adv: float = DEFAULT_CFL_ADV) -> float:
    """dt = safety * min(advective, diffusive) limit with unit diffusivity:
    diffusive limit min(dy, dz)^2 / 4 in two dimensions."""
    g = state.rho.grid
    dmin = min(g.dy, g.dz)
    umax = max(float(np.max(np.abs(state.u.u_y))), float(np.max(np.abs(state.u.u_z))))
    dt_diff = dmin * dmin / 4.0
    dt_adv = cfl_adv * dmin / umax if umax > 0.0 else math.inf
    return safety * min(dt_adv, dt_diff)


def _check_state(rho: np.ndarray, uy: np.ndarray, uz: np.ndarray, p: FluidParams, t: float) -> None:
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(uy)) and np.all(np.isfinite(uz))):
        raise SolverError(f"non-finite field at t = {t}")
    eps = MAX_PRINCIPLE_RTOL * p.delta_rho
    if rho.min() < p.rho_minus - eps or rho.max() > p.rho_plus + eps:
        raise SolverError(
            f"maximum principle violated at t = {t}: rho in "
            f"[{rho.min():.9g}, {rho.max():.9g}] vs [{p.rho_minus}, {p.rho_plus}] +/- {eps:.3g}"
        )


def step(
    state: SimState,
    dt: float,
    p: FluidParams,
    g_signed: float | None = None,
    poisson: PoissonSolver | None = None,
) -> SimState:
    """One Heun (predictor-corrector) step with a projection per stage."""
    grid = state.rho.grid
    gs = p.g if g_signed is None else g_signed
    if poisson is None:
        poisson = PoissonSolver(grid)
    rho_n = state.rho.values
    u_n = state.u

    drho1 = _rho_tendency(rho_n, u_n, grid)
    tuy1, tuz1 = _velocity_tendency(rho_n, u_n, grid, gs)
    rho_1 = rho_n + dt * drho1
    u_star = VelocityField(grid, u_n.u_y + dt * tuy1, u_n.u_z + dt * tuz1)
    u_1, _ = pressure_projection(u_star, ScalarField(grid, rho_1), dt, poisson)

    drho2 = _rho_tendency(rho_1, u_1, grid)
    tuy2, tuz2 = _velocity_tendency(rho_1, u_1, grid, gs)
    rho_new = rho_n + 0.5 * dt * (drho1 + drho2)
    u_star2 = VelocityField(
        grid,
        u_n.u_y + 0.5 * dt * (tuy1 + tuy2),
        u_n.u_z + 0.5 * dt * (tuz1 + tuz2),
    )
    u_new, p_new = pressure_projection(u_star2, ScalarField(grid, rho_new), dt, poisson)

    t_new = state.t + dt
    _check_state(rho_new, u_new.u_y, u_new.u_z, p, t_new)
    return SimState(t=t_new, rho=ScalarField(grid, rho_new), u=u_new, p_field=p_new)


# ---------------------------------------------------------------------------
# run loop

@dataclass
class RunResult:
    config: RunConfig
    records: list[DiagnosticsRecord]
    snapshots: list[tuple[float, ScalarField]]
    final_state: SimState
    stop_reason: str
    rho_min: float
    rho_max: float


def run(config: RunConfig, keep_snapshots: bool = True) -> RunResult:
    """Integrate per the configuration, sampling diagnostics on a uniform
    grid of times; stops at t_end or when a mixing edge reaches 0.9 H."""
    grid = Grid(L=config.L, H=config.H, ny=config.ny, nz=config.nz)
    p = FluidParams(rho_plus=config.rho_plus, rho_minus=config.rho_minus, g=config.g)
    pert = PerturbationSpec(
        kind=config.pert_kind,
        amplitude=config.pert_amplitude,
        width=config.pert_width,
        mode=config.pert_mode,
        nmodes=config.pert_nmodes,
        seed=config.pert_seed,
    )
    gs = config.g_signed
    state = init_state(grid, p, pert)
    poisson = PoissonSolver(grid)

    first = compute_record(0.0, state.rho, state.u, p, g_signed=gs, theta=config.edge_threshold)
    balance_const = first.E_p - first.E_k
    records = [
        compute_record(
            0.0, state.rho, state.u, p, g_signed=gs,
            theta=config.edge_threshold, balance_const=balance_const,
        )
    ]
    snapshots: list[tuple[float, ScalarField]] = []
    snap_on = keep_snapshots and config.snapshot_every > 0.0
    if snap_on:
        snapshots.append((0.0, state.rho.copy()))

    rho_min = float(state.rho.values.min())
    rho_max = float(state.rho.values.max())
    stop_reason = "t_end"
    edge_stop = 0.9 * config.H

    sample_idx = 1
    snap_idx = 1
    eps_t = 1e-12
    while state.t < config.t_end - eps_t:
        next_sample = sample_idx * config.sample_interval
        next_events = [config.t_end, next_sample]
        if snap_on:
            next_events.append(snap_idx * config.snapshot_every)
        t_next = min(x for x in next_events if x > state.t + eps_t)
        dt = min(cfl_dt(state), t_next - state.t)
        state = step(state, dt, p, g_signed=gs, poisson=poisson)
        rho_min = min(rho_min, float(state.rho.values.min()))
        rho_max = max(rho_max, float(state.rho.values.max()))

        if abs(state.t - next_sample) <= eps_t or state.t >= config.t_end - eps_t:
            rec = compute_record(
                state.t, state.rho, state.u, p, g_signed=gs,
                theta=config.edge_threshold, balance_const=balance_const,
            )
            records.append(rec)
            if abs(state.t - next_sample) <= eps_t:
                sample_idx += 1
            if rec.a_plus >= edge_stop or -rec.a_minus >= edge_stop:
                stop_reason = "edges"
        if snap_on and abs(state.t - snap_idx * config.snapshot_every) <= eps_t:
            snapshots.append((state.t, state.rho.copy()))
            snap_idx += 1
        if stop_reason == "edges":
            break

    return RunResult(
        config=config,
        records=records,
        snapshots=snapshots,
        final_state=state,
        stop_reason=stop_reason,
        rho_min=rho_min,
        rho_max=rho_max,
    )
