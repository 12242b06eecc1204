//! Problem definitions, initial data, energies and plane-wave dispersion.
//!
//! Two equations are supported on a periodic interval:
//!
//! * [`EquationKind::RealWeak`]:
//!   `u_tt - u_xx + u + eps^p u^{p+1} = 0` in physical time `t`, run up to
//!   `T_eps = T0 / eps^beta`.
//! * [`EquationKind::ComplexOscillatory`]:
//!   `nu_ss + eps^{-2 beta} (1 - d_xx) nu + eps^{p - 2 beta} |nu|^p nu = 0`
//!   in rescaled time `s = eps^beta t`, run up to `s = T0`, with initial
//!   velocity `eps^{-beta} u_1`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::StatePair;
use crate::spectral::{differentiate, forward, inverse, Field, SpectralGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquationKind {
    RealWeak,
    ComplexOscillatory,
}

impl EquationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EquationKind::RealWeak => "real-weak",
            EquationKind::ComplexOscillatory => "complex-oscillatory",
        }
    }
}

/// Computational interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Domain {
    Interval {
        a: f64,
        b: f64,
    },
    /// `[-8 - eps^-beta, 8 + eps^-beta]`, wide enough for waves travelling
    /// at speed `O(eps^-beta)` to stay clear of the periodic wrap by `s = 1`.
    OscillatoryWindow,
}

/// Initial data presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum InitialPreset {
    /// `u0 = 3/2 sin(2x)`, `u1 = 5 / (1 + cos^2 x)`.
    PaperReal,
    /// `u0 = (2 + i) exp(-x^2 / 2)`, `u1 = sech(x^2)`.
    PaperComplex,
    /// `A exp(i xi x)` with `xi` the wavenumber of grid mode `mode`, moving
    /// with the positive dispersion branch.
    PlaneWave {
        amplitude: f64,
        mode: i64,
    },
    /// `u0 = cos(mu_m (x - a))`, `u1 = 0`.
    SingleModeLinear {
        mode: i64,
    },
    Zero,
}

impl InitialPreset {
    pub fn is_complex(&self) -> bool {
        matches!(
            self,
            InitialPreset::PaperComplex | InitialPreset::PlaneWave { .. }
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub kind: EquationKind,
    pub p: u32,
    pub epsilon: f64,
    pub beta: f64,
    pub domain: Domain,
    pub t0: f64,
    pub initial: InitialPreset,
}

impl ProblemSpec {
    /// Real equation on `[0, 2 pi]` with the trigonometric initial data.
    pub fn paper_real(p: u32, epsilon: f64, beta: f64) -> Self {
        ProblemSpec {
            kind: EquationKind::RealWeak,
            p,
            epsilon,
            beta,
            domain: Domain::Interval {
                a: 0.0,
                b: 2.0 * PI,
            },
            t0: 1.0,
            initial: InitialPreset::PaperReal,
        }
    }

    /// Oscillatory complex equation on its epsilon-dependent window with the
    /// Gaussian/sech initial data.
    pub fn paper_complex(p: u32, epsilon: f64, beta: f64) -> Self {
        ProblemSpec {
            kind: EquationKind::ComplexOscillatory,
            p,
            epsilon,
            beta,
            domain: Domain::OscillatoryWindow,
            t0: 1.0,
            initial: InitialPreset::PaperComplex,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_t0(mut self, t0: f64) -> Self {
        self.t0 = t0;
        self
    }

    pub fn with_domain(mut self, a: f64, b: f64) -> Self {
        self.domain = Domain::Interval { a, b };
        self
    }

    pub fn with_initial(mut self, initial: InitialPreset) -> Self {
        self.initial = initial;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::param(
                "epsilon",
                format!("must lie in (0, 1], got {}", self.epsilon),
            ));
        }
        if self.p < 1 {
            return Err(Error::param("p", "must be a positive integer"));
        }
        if !(self.beta >= 0.0 && self.beta <= self.p as f64) {
            return Err(Error::param(
                "beta",
                format!("must lie in [0, p] = [0, {}], got {}", self.p, self.beta),
            ));
        }
        if !(self.t0.is_finite() && self.t0 >= 0.0) {
            return Err(Error::param(
                "t0",
                format!("must be nonnegative, got {}", self.t0),
            ));
        }
        if let Domain::Interval { a, b } = self.domain {
            if !(a.is_finite() && b.is_finite()) || b <= a {
                return Err(Error::InvalidDomain { a, b });
            }
        }
        if self.kind == EquationKind::RealWeak && self.initial.is_complex() {
            return Err(Error::InvalidPreset(format!(
                "{:?} is complex-valued but the real equation needs real data",
                self.initial
            )));
        }
        if let InitialPreset::PlaneWave { amplitude, .. } = self.initial {
            if !(amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(Error::InvalidPreset(format!(
                    "plane-wave amplitude must be nonnegative, got {amplitude}"
                )));
            }
        }
        Ok(())
    }

    /// Concrete `(a, b)`.
    pub fn interval(&self) -> (f64, f64) {
        match self.domain {
            Domain::Interval { a, b } => (a, b),
            Domain::OscillatoryWindow => oscillatory_domain(self.beta, self.epsilon),
        }
    }

    /// Grid on this problem's interval with `n` nodes.
    pub fn grid(&self, n: usize) -> Result<Arc<SpectralGrid>> {
        let (a, b) = self.interval();
        SpectralGrid::new(a, b, n)
    }

    /// Grid on this problem's interval with spacing closest to `h`.
    pub fn grid_with_spacing(&self, h: f64) -> Result<Arc<SpectralGrid>> {
        let (a, b) = self.interval();
        SpectralGrid::with_spacing(a, b, h)
    }

    /// Final time in the equation's own time variable.
    pub fn horizon(&self) -> f64 {
        match self.kind {
            EquationKind::RealWeak => self.t0 / self.epsilon.powf(self.beta),
            EquationKind::ComplexOscillatory => self.t0,
        }
    }

    /// Factor multiplying `zeta_l` in the linear mode frequencies.
    pub fn frequency_scale(&self) -> f64 {
        match self.kind {
            EquationKind::RealWeak => 1.0,
            EquationKind::ComplexOscillatory => self.epsilon.powf(-self.beta),
        }
    }

    /// Coefficient of the power nonlinearity.
    pub fn nonlinear_coefficient(&self) -> f64 {
        match self.kind {
            EquationKind::RealWeak => self.epsilon.powi(self.p as i32),
            EquationKind::ComplexOscillatory => self.epsilon.powf(self.p as f64 - 2.0 * self.beta),
        }
    }

    /// The pointwise nonlinearity without its coefficient: `u^{p+1}` for the
    /// real equation, `|u|^p u` for the complex one.
    pub fn nonlinearity(&self, u: Complex64) -> Complex64 {
        match self.kind {
            EquationKind::RealWeak => u.powu(self.p + 1),
            EquationKind::ComplexOscillatory => u * u.norm().powi(self.p as i32),
        }
    }
}

/// `(-8 - eps^-beta, 8 + eps^-beta)`.
pub fn oscillatory_domain(beta: f64, epsilon: f64) -> (f64, f64) {
    let half = 8.0 + epsilon.powf(-beta);
    (-half, half)
}

/// Nodal initial data `(u^0, v^0)` at time zero.
pub fn initial_state(spec: &ProblemSpec, grid: &Arc<SpectralGrid>) -> Result<StatePair> {
    spec.validate()?;
    let (a, b) = spec.interval();
    let expected = SpectralGrid::new(a, b, grid.len())?;
    grid.check_domain(&expected)?;

    let velocity_scale = match spec.kind {
        EquationKind::RealWeak => 1.0,
        EquationKind::ComplexOscillatory => spec.epsilon.powf(-spec.beta),
    };
    let check_mode = |mode: i64| -> Result<f64> {
        let half = (grid.len() / 2) as i64;
        if mode.abs() >= half {
            return Err(Error::InvalidPreset(format!(
                "mode {mode} is not representable on {} nodes (need |mode| < {half})",
                grid.len()
            )));
        }
        Ok(grid.mu(mode).expect("checked above"))
    };

    let (u, v) = match spec.initial {
        InitialPreset::PaperReal => (
            Field::from_real_fn(grid.clone(), |x| 1.5 * (2.0 * x).sin()),
            Field::from_real_fn(grid.clone(), |x| {
                velocity_scale * 5.0 / (1.0 + x.cos().powi(2))
            }),
        ),
        InitialPreset::PaperComplex => (
            Field::from_fn(grid.clone(), |x| {
                Complex64::new(2.0, 1.0) * (-x * x / 2.0).exp()
            }),
            Field::from_real_fn(grid.clone(), |x| velocity_scale / (x * x).cosh()),
        ),
        InitialPreset::PlaneWave { amplitude, mode } => {
            let xi = check_mode(mode)?;
            let omega = dispersion(spec, xi, amplitude).omega;
            let wave = move |x: f64| Complex64::from_polar(amplitude, xi * x);
            (
                Field::from_fn(grid.clone(), wave),
                Field::from_fn(grid.clone(), move |x| Complex64::new(0.0, -omega) * wave(x)),
            )
        }
        InitialPreset::SingleModeLinear { mode } => {
            let mu = check_mode(mode)?;
            (
                Field::from_real_fn(grid.clone(), |x| (mu * (x - a)).cos()),
                Field::zeros(grid.clone()),
            )
        }
        InitialPreset::Zero => (Field::zeros(grid.clone()), Field::zeros(grid.clone())),
    };
    Ok(StatePair::new(u, v, 0.0))
}

/// Exact solution at `time` for the plane-wave preset: the initial wave
/// with its phase advanced by `omega * time`.
pub fn plane_wave_solution(
    spec: &ProblemSpec,
    grid: &Arc<SpectralGrid>,
    time: f64,
) -> Result<StatePair> {
    let InitialPreset::PlaneWave { amplitude, mode } = spec.initial else {
        return Err(Error::InvalidPreset(
            "exact solutions exist only for plane waves".into(),
        ));
    };
    let start = initial_state(spec, grid)?;
    let xi = grid.mu(mode).expect("validated by initial_state");
    let phase = Complex64::from_polar(1.0, -dispersion(spec, xi, amplitude).omega * time);
    let (u, v) = start.into_fields();
    let shift = |f: Field| {
        let values = f.values().iter().map(|z| z * phase).collect();
        Field::new(f.grid().clone(), values)
    };
    Ok(StatePair::new(shift(u), shift(v), time))
}

/// Conserved energy of the continuous problem evaluated on the nodal state.
///
/// `d_x u` is computed spectrally and every integral uses the periodic
/// trapezoid rule.
pub fn energy(spec: &ProblemSpec, state: &StatePair) -> f64 {
    let u = state.u();
    let v = state.v();
    let ux = inverse(&differentiate(&forward(u)));
    let p = spec.p as i32;

    let kinetic = v.integrate(|z| z.norm_sqr());
    let gradient = ux.integrate(|z| z.norm_sqr());
    let mass = u.integrate(|z| z.norm_sqr());
    match spec.kind {
        EquationKind::RealWeak => {
            let potential = u.integrate(|z| z.re.powi(p + 2));
            kinetic
                + gradient
                + mass
                + 2.0 * spec.nonlinear_coefficient() / (p + 2) as f64 * potential
        }
        EquationKind::ComplexOscillatory => {
            let potential = u.integrate(|z| z.norm().powi(p + 2));
            let linear_weight = spec.epsilon.powf(-2.0 * spec.beta);
            kinetic
                + linear_weight * (gradient + mass)
                + 2.0 * spec.nonlinear_coefficient() / (p + 2) as f64 * potential
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionResult {
    pub omega: f64,
    pub group_velocity: f64,
}

/// Positive branch of the plane-wave dispersion relation
/// `omega = s sqrt(1 + xi^2 + eps^p A^p)` and its group velocity, with
/// `s = 1` for the real equation and `s = eps^-beta` for the oscillatory one.
pub fn dispersion(spec: &ProblemSpec, xi: f64, amplitude: f64) -> DispersionResult {
    let root =
        (1.0 + xi * xi + spec.epsilon.powi(spec.p as i32) * amplitude.powi(spec.p as i32)).sqrt();
    let scale = spec.frequency_scale();
    DispersionResult {
        omega: scale * root,
        group_velocity: scale * xi / root,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;
    use approx::assert_relative_eq;

    fn real(p: u32, eps: f64) -> ProblemSpec {
        ProblemSpec::paper_real(p, eps, 0.0)
    }

    #[test]
    fn paper_real_initial_data() {
        let spec = real(2, 1.0);
        let g = make_grid(0.0, 2.0 * PI, 8).unwrap();
        let s = initial_state(&spec, &g).unwrap();
        // x_2 = pi / 2
        assert!(s.u().values()[2].norm() < 1e-15);
        assert_relative_eq!(s.v().values()[0].re, 2.5, epsilon = 1e-15);
        assert_eq!(s.time(), 0.0);
    }

    #[test]
    fn zero_preset() {
        let spec = real(2, 0.5).with_initial(InitialPreset::Zero);
        let g = make_grid(0.0, 2.0 * PI, 16).unwrap();
        let s = initial_state(&spec, &g).unwrap();
        assert_eq!(s.u().max_abs(), 0.0);
        assert_eq!(s.v().max_abs(), 0.0);
    }

    #[test]
    fn plane_wave_initial_data() {
        let spec = ProblemSpec::paper_complex(3, 0.5, 1.0)
            .with_domain(0.0, 2.0 * PI)
            .with_initial(InitialPreset::PlaneWave {
                amplitude: 1.0,
                mode: 1,
            });
        let g = make_grid(0.0, 2.0 * PI, 16).unwrap();
        let s = initial_state(&spec, &g).unwrap();
        let omega2 = dispersion(&spec, 1.0, 1.0).omega;
        for (x, (u, v)) in g
            .nodes()
            .iter()
            .zip(s.u().values().iter().zip(s.v().values()))
        {
            let e = Complex64::new(x.cos(), x.sin());
            assert!((u - e).norm() < 1e-15);
            assert!((v - Complex64::new(0.0, -omega2) * e).norm() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_solution_advances_phase() {
        let spec = ProblemSpec::paper_complex(3, 0.5, 1.0)
            .with_domain(0.0, 2.0 * PI)
            .with_initial(InitialPreset::PlaneWave {
                amplitude: 1.0,
                mode: 2,
            });
        let g = make_grid(0.0, 2.0 * PI, 16).unwrap();
        let start = plane_wave_solution(&spec, &g, 0.0).unwrap();
        assert_eq!(
            start.u().max_diff(initial_state(&spec, &g).unwrap().u()),
            0.0
        );

        let omega = dispersion(&spec, 2.0, 1.0).omega;
        let t = 0.3;
        let later = plane_wave_solution(&spec, &g, t).unwrap();
        for (x, u) in g.nodes().iter().zip(later.u().values()) {
            assert!((u - Complex64::from_polar(1.0, 2.0 * x - omega * t)).norm() < 1e-14);
        }
        assert_eq!(later.time(), t);
        assert!(plane_wave_solution(&real(2, 1.0), &g, 1.0).is_err());
    }

    #[test]
    fn oscillatory_velocity_is_rescaled() {
        let eps: f64 = 0.5;
        let spec = ProblemSpec::paper_complex(3, eps, 2.0);
        let g = spec.grid(64).unwrap();
        let s = initial_state(&spec, &g).unwrap();
        for (x, v) in g.nodes().iter().zip(s.v().values()) {
            assert_relative_eq!(v.re, 4.0 / (x * x).cosh(), epsilon = 1e-14);
        }
    }

    #[test]
    fn preset_errors() {
        let g = make_grid(0.0, 2.0 * PI, 8).unwrap();
        let spec = ProblemSpec::paper_complex(3, 1.0, 1.0)
            .with_domain(0.0, 2.0 * PI)
            .with_initial(InitialPreset::PlaneWave {
                amplitude: 1.0,
                mode: 4,
            });
        assert!(matches!(
            initial_state(&spec, &g),
            Err(Error::InvalidPreset(_))
        ));
        let spec = real(2, 1.0).with_initial(InitialPreset::PaperComplex);
        assert!(matches!(
            initial_state(&spec, &g),
            Err(Error::InvalidPreset(_))
        ));
        let other = make_grid(0.0, 1.0, 8).unwrap();
        assert!(matches!(
            initial_state(&real(2, 1.0), &other),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn validation() {
        assert!(real(2, 1.0).validate().is_ok());
        assert!(real(2, 0.0).validate().is_err());
        assert!(real(2, 1.5).validate().is_err());
        assert!(ProblemSpec::paper_real(2, 0.5, 3.0).validate().is_err());
        assert!(ProblemSpec::paper_real(2, 0.5, 2.0).validate().is_ok());
        assert!(real(0, 0.5).validate().is_err());
    }

    #[test]
    fn energy_of_trivial_states() {
        let spec = real(2, 1.0);
        let g = make_grid(0.0, 2.0 * PI, 16).unwrap();
        let zero = StatePair::new(Field::zeros(g.clone()), Field::zeros(g.clone()), 0.0);
        assert_eq!(energy(&spec, &zero), 0.0);
        let unit_v = StatePair::new(
            Field::zeros(g.clone()),
            Field::from_real_fn(g.clone(), |_| 1.0),
            0.0,
        );
        assert_relative_eq!(energy(&spec, &unit_v), 2.0 * PI, epsilon = 1e-14);
    }

    #[test]
    fn paper_real_energy_matches_quadrature_oracle() {
        // Adaptive quadrature of the energy integrand in 30-digit arithmetic.
        const E0: f64 = 124.611_089_746_653_92;
        let spec = real(2, 1.0);
        let g = make_grid(0.0, 2.0 * PI, 1024).unwrap();
        let s = initial_state(&spec, &g).unwrap();
        assert_relative_eq!(energy(&spec, &s), E0, max_relative = 1e-13);
    }

    #[test]
    fn oscillatory_energy_rescales_real_energy() {
        // E_3(0) = eps^{-2 beta} E_1(0) for the same data
        let eps: f64 = 0.5;
        let beta = 1.0;
        let osc = ProblemSpec::paper_complex(3, eps, beta);
        let plain = ProblemSpec {
            beta: 0.0,
            ..osc.clone()
        }
        .with_domain(-10.0, 10.0);
        let osc = osc.with_domain(-10.0, 10.0);
        let g = osc.grid(256).unwrap();
        let e3 = energy(&osc, &initial_state(&osc, &g).unwrap());
        let e1 = energy(&plain, &initial_state(&plain, &g).unwrap());
        assert_relative_eq!(e3, eps.powf(-2.0 * beta) * e1, max_relative = 1e-13);
    }

    #[test]
    fn dispersion_examples() {
        let d = dispersion(&real(2, 0.3), 0.0, 0.0);
        assert_eq!(d.omega, 1.0);
        assert_eq!(d.group_velocity, 0.0);

        let d = dispersion(&real(3, 1.0), 1.0, 1.0);
        assert_relative_eq!(d.omega, 3f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(d.group_velocity, 1.0 / 3f64.sqrt(), epsilon = 1e-15);

        let osc = ProblemSpec::paper_complex(3, 0.5, 2.0);
        assert_relative_eq!(dispersion(&osc, 0.0, 0.0).omega, 4.0, epsilon = 1e-15);
    }

    #[test]
    fn oscillatory_frequency_is_rescaled_real_frequency() {
        for &(eps, beta) in &[(0.5, 1.0), (0.25, 2.0), (0.9, 3.0)] {
            let osc = ProblemSpec::paper_complex(3, eps, beta);
            let plain = ProblemSpec {
                kind: EquationKind::RealWeak,
                ..osc.clone()
            };
            for xi in [0.0, 0.7, 3.0] {
                let w2 = dispersion(&osc, xi, 1.3).omega;
                let w1 = dispersion(&plain, xi, 1.3).omega;
                assert_relative_eq!(w2, w1 / eps.powf(beta), max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn group_velocity_matches_centered_differences() {
        for spec in [real(3, 0.7), ProblemSpec::paper_complex(3, 0.5, 1.5)] {
            let xi = 1.3;
            let exact = dispersion(&spec, xi, 0.8).group_velocity;
            let fd = |d: f64| {
                (dispersion(&spec, xi + d, 0.8).omega - dispersion(&spec, xi - d, 0.8).omega)
                    / (2.0 * d)
            };
            let e1 = (fd(1e-2) - exact).abs();
            let e2 = (fd(1e-3) - exact).abs();
            let slope = (e1 / e2).log10();
            assert!((slope - 2.0).abs() < 0.1, "slope {slope}");
        }
    }

    #[test]
    fn window_examples() {
        assert_eq!(oscillatory_domain(2.0, 1.0), (-9.0, 9.0));
        assert_eq!(oscillatory_domain(0.0, 0.01), (-9.0, 9.0));
        assert_eq!(oscillatory_domain(1.0, 0.5), (-10.0, 10.0));
    }

    #[test]
    fn paper_real_spectrum_is_conjugate_symmetric() {
        let g = make_grid(0.0, 2.0 * PI, 32).unwrap();
        let s = initial_state(&real(2, 1.0), &g).unwrap();
        for f in [s.u(), s.v()] {
            let c = forward(f);
            for l in 1..16 {
                assert!((c.coeff(l).unwrap() - c.coeff(-l).unwrap().conj()).norm() < 1e-14);
            }
            assert!(c.coeff(-16).unwrap().im.abs() < 1e-14);
        }
    }

    #[test]
    fn energy_is_nonnegative_for_complex_kind_and_even_p() {
        let g = make_grid(-9.0, 9.0, 64).unwrap();
        let spec = ProblemSpec::paper_complex(3, 1.0, 0.0);
        assert!(energy(&spec, &initial_state(&spec, &g).unwrap()) > 0.0);
        let g = make_grid(0.0, 2.0 * PI, 64).unwrap();
        let spec = real(2, 0.5);
        assert!(energy(&spec, &initial_state(&spec, &g).unwrap()) > 0.0);
    }
}
