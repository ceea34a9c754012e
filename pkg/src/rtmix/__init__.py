"""Desk-scale laboratory for miscible Rayleigh-Taylor mixing.

A 2D strip solver for the coupled density/velocity system, bulk
diagnostics (energies, mixing entropies, averaged perimeter, mixing-zone
edges), analytic Riemann comparison solutions with their edge prefactors,
a sharp interpolation inequality, and a harness that verifies the
resulting mixing-zone bounds on simulation output.
"""

__version__ = "0.1.0"

from .config import ConfigError, RunConfig, load_config, parse_config
from .fields import (
    Grid,
    ScalarField,
    VelocityField,
    divergence,
    gradient,
    horizontal_average,
    laplacian,
    normalized_integral,
    read_snapshot,
    write_snapshot,
)
from .riemann import (
    FluidParams,
    RiemannSolution,
    alpha_table,
    flux_F,
    flux_F_prime,
    flux_F_prime_inverse,
    flux_G0,
    g0_entropy_profile,
    gebhard_energy_ratio,
    mixing_prefactors,
    profile_entropy,
    profile_potential_energy,
    rarefaction_profile,
    sharp_constant_formula,
    two_shock_profile,
)
from .interp import (
    AdmissibleFlux,
    Profile,
    entropy_flux,
    inequality_check,
    monotonize,
    optimal_profile,
    quadratic_flux,
    rearrange,
    sharp_constant,
)
from .diagnostics import (
    DiagnosticsRecord,
    check_flux_domination,
    coarsening_scales,
    energy_balance_residual,
    entropy_H,
    entropy_S,
    entropy_production_check,
    kinetic_energy,
    mixing_edges,
    optimal_background,
    perimeter,
    perimeter_interpolation_check,
    potential_energy,
)
from .solver import (
    PerturbationSpec,
    SimState,
    SolverError,
    cfl_dt,
    init_state,
    pressure_projection,
    run,
    step,
)
from .harness import (
    BoundReport,
    check_crossover,
    check_theorem_main,
    compare_with_riemann,
    envelope_e,
)
