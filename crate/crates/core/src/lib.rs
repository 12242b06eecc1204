//! Fourier pseudospectral discretisation and Strang splitting for the
//! periodic nonlinear Klein-Gordon equation, with tooling to measure how
//! the discretisation error depends on the nonlinearity strength.
//!
//! ```
//! use tsfp_core::{energy, evolve, initial_state, Observers, ProblemSpec, StepperConfig};
//!
//! let spec = ProblemSpec::paper_real(2, 0.5, 0.0).with_t0(0.1);
//! let grid = spec.grid(32).unwrap();
//! let e0 = energy(&spec, &initial_state(&spec, &grid).unwrap());
//! let (end, _) = evolve(&spec, &grid, &StepperConfig::new(0.01), &Observers::default()).unwrap();
//! assert!((energy(&spec, &end) - e0).abs() < 1e-6 * e0);
//! ```

pub mod error;
pub mod harness;
pub mod integrator;
pub mod model;
pub mod spectral;

pub use error::{Error, Result};
pub use integrator::{
    evolve, evolve_from, from_psi, linear_flow_psi, linear_flow_uv, nonlinear_flow_psi,
    nonlinear_flow_uv, strang_step, strang_step_psi, to_psi, Composition, EnergySample,
    Formulation, NormSample, ObserverLog, Observers, PsiState, StatePair, StepPlan, StepperConfig,
    BLOW_UP_AMPLITUDE,
};
pub use model::{
    dispersion, energy, initial_state, oscillatory_domain, plane_wave_solution, DispersionResult,
    Domain, EquationKind, InitialPreset, ProblemSpec,
};
pub use spectral::{
    apply_symbol, differentiate, forward, inverse, make_grid, resample, sobolev_norm, Field,
    SpectralGrid, Spectrum,
};
