//! Canonical partition functions of one-dimensional systems computed three
//! ways: exact sums over numerically converged level sets, classical
//! phase-space integrals, and a semiclassical trace over equilibria and
//! periodic orbits of the inverted-potential flow obtained by rotating time
//! to the imaginary axis. Thermodynamic observables (free energy, internal
//! energy, entropy, heat capacity) are derived from any of the three.

pub mod dynamics;
pub mod error;
pub mod model;
pub mod oracles;
pub mod orbits;
pub mod semiclassical;
pub mod thermo;

pub use dynamics::{
    abbreviated_action, flow_with_tangent, period_of_energy, shell_data, turning_points,
    EnergyShellData, TangentState, VbarWell,
};
pub use error::{Error, Result};
pub use oracles::{
    classical_z_euclidean, grid_spectrum, harmonic_levels, ln_erfc, quartic_uv_classical_z,
    quartic_uv_exact_z, quartic_uv_levels, spin_exact_z, spin_levels, z_from_levels, GridInfo,
    SpectrumResult,
};
pub use orbits::{
    classify_equilibria, equilibrium_contributions, find_librations, vbar_wells, AmplitudeMode,
    Equilibrium, EquilibriumKind, LibrationOpts, OrbitContribution, OrbitKind, DEFAULT_TRM_FLOOR,
};
pub use semiclassical::{
    assemble_trace, c_sc_analytic, higher_order_coeffs, quartic_uv_z_higher,
    quartic_uv_z_quadratic, sc_harmonic_z, sc_trace_z, single_well_ln_z, single_well_z,
    spin_orbit_data, spin_z_sc, u_sc_analytic, HigherOrderCoeffs, QuarticQuadratic, SpinOrbitData,
    TraceBreakdown, ZMethod, ZResult,
};
pub use model::{
    build_potential, fit_frequency, qp_from_uv, uv_from_qp, Potential, SystemKind, SystemSpec,
    Temperature, UVPoint, DEFAULT_HBAR, DEFAULT_KB,
};
pub use thermo::{
    reduce, t_grid, thermo_from_z, ReducedPoint, ThermoPoint, DEFAULT_REL_STEP,
};
