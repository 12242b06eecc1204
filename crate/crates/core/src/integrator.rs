//! Exact subflows, Strang compositions and the time-evolution driver.
//!
//! The wave equation is split into the linear flow `T` (solved exactly per
//! Fourier mode) and the nonlinear flow `V` (solved exactly pointwise, since
//! it leaves `u` unchanged). Two equivalent state representations exist for
//! the real equation:
//!
//! * the pair `(u, v)` with `v = u_t`, and
//! * `psi = u - i <nabla>^{-1} v`, where `T` is the phase `e^{i t <nabla>}`.
//!
//! The free functions in this module operate on nodal states and are the
//! literal building blocks of [`strang_step`]. [`evolve`] runs the same
//! scheme with the state kept in Fourier space, which needs only two FFTs
//! per step.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{energy, initial_state, EquationKind, ProblemSpec};
use crate::spectral::{
    apply_symbol, forward, inverse, sobolev_norm, Field, SpectralGrid, Spectrum,
};

/// Amplitude above which a run is treated as blown up.
pub const BLOW_UP_AMPLITUDE: f64 = 1e12;

/// Solution and time derivative at one time level.
#[derive(Debug, Clone)]
pub struct StatePair {
    u: Field,
    v: Field,
    time: f64,
}

impl StatePair {
    pub fn new(u: Field, v: Field, time: f64) -> Self {
        assert!(
            u.grid().same_as(v.grid()),
            "u and v must live on the same grid"
        );
        StatePair { u, v, time }
    }

    pub fn u(&self) -> &Field {
        &self.u
    }

    pub fn v(&self) -> &Field {
        &self.v
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.u.grid()
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn into_fields(self) -> (Field, Field) {
        (self.u, self.v)
    }

    pub fn max_abs(&self) -> f64 {
        self.u.max_abs().max(self.v.max_abs())
    }

    pub fn max_imag(&self) -> f64 {
        self.u.max_imag().max(self.v.max_imag())
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// Largest nodal deviation from `other`, relative to this state's size.
    pub fn relative_diff(&self, other: &StatePair) -> f64 {
        let diff = self.u.max_diff(&other.u).max(self.v.max_diff(&other.v));
        diff / self.max_abs().max(f64::MIN_POSITIVE)
    }
}

/// Complex variable `psi = u - i <nabla>^{-1} v`.
#[derive(Debug, Clone)]
pub struct PsiState {
    psi: Field,
    time: f64,
}

impl PsiState {
    pub fn new(psi: Field, time: f64) -> Self {
        PsiState { psi, time }
    }

    pub fn psi(&self) -> &Field {
        &self.psi
    }

    pub fn time(&self) -> f64 {
        self.time
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Composition {
    /// `T(dt/2) V(dt) T(dt/2)`.
    #[default]
    Tvt,
    /// `V(dt/2) T(dt) V(dt/2)`.
    Vtv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    #[default]
    Uv,
    Psi,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperConfig {
    /// Step in the equation's own time variable: `tau` in `t` for the real
    /// equation, `k = eps^beta tau` in `s` for the oscillatory one.
    pub dt: f64,
    pub composition: Composition,
    pub formulation: Formulation,
}

impl StepperConfig {
    pub fn new(dt: f64) -> Self {
        StepperConfig {
            dt,
            composition: Composition::default(),
            formulation: Formulation::default(),
        }
    }

    pub fn with_composition(mut self, composition: Composition) -> Self {
        self.composition = composition;
        self
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> Self {
        self.formulation = formulation;
        self
    }

    pub fn validate(&self, spec: &ProblemSpec) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::param(
                "dt",
                format!("must be positive, got {}", self.dt),
            ));
        }
        check_formulation(spec, self.formulation)
    }
}

fn check_formulation(spec: &ProblemSpec, formulation: Formulation) -> Result<()> {
    if formulation == Formulation::Psi && spec.kind == EquationKind::ComplexOscillatory {
        return Err(Error::UnsupportedFormulation(
            "the psi formulation assumes real-valued u; use the (u, v) formulation for the complex equation"
                .into(),
        ));
    }
    Ok(())
}

/// `psi = u - i <nabla>^{-1} v`.
pub fn to_psi(state: &StatePair, spec: &ProblemSpec) -> Result<PsiState> {
    check_formulation(spec, Formulation::Psi)?;
    let v_hat = apply_symbol(&forward(state.v()), -1.0);
    let w = inverse(&v_hat);
    let psi = state
        .u()
        .values()
        .iter()
        .zip(w.values())
        .map(|(u, w)| u - Complex64::i() * w)
        .collect();
    Ok(PsiState::new(
        Field::new(state.grid().clone(), psi),
        state.time(),
    ))
}

/// `u = (psi + conj psi) / 2`, `v = (i/2) <nabla> (psi - conj psi)`.
pub fn from_psi(state: &PsiState) -> StatePair {
    let grid = state.psi.grid().clone();
    let u = state
        .psi
        .values()
        .iter()
        .map(|z| Complex64::new(z.re, 0.0))
        .collect();
    // (i/2)(psi - conj psi) = -Im psi
    let minus_im = Field::new(
        grid.clone(),
        state
            .psi
            .values()
            .iter()
            .map(|z| Complex64::new(-z.im, 0.0))
            .collect(),
    );
    let v = inverse(&apply_symbol(&forward(&minus_im), 1.0));
    StatePair::new(Field::new(grid, u), v, state.time)
}

/// Exact flow of `u_t = v, v_t = -Omega^2 u` over time `t`, where
/// `Omega_l = zeta_l` (real equation) or `zeta_l / eps^beta` (oscillatory).
pub fn linear_flow_uv(state: &StatePair, t: f64, spec: &ProblemSpec) -> StatePair {
    let mut u_hat = forward(state.u());
    let mut v_hat = forward(state.v());
    let rot = Rotation::new(state.grid(), spec.frequency_scale(), t);
    rot.apply(u_hat.coeffs_mut(), v_hat.coeffs_mut());
    StatePair::new(inverse(&u_hat), inverse(&v_hat), state.time() + t)
}

/// Exact flow of `u_t = 0, v_t = -c f(u)`: `v <- v - t c f(u)` pointwise.
pub fn nonlinear_flow_uv(state: &StatePair, t: f64, spec: &ProblemSpec) -> StatePair {
    let c = spec.nonlinear_coefficient();
    let v = state
        .u()
        .values()
        .iter()
        .zip(state.v().values())
        .map(|(&u, &v)| v - t * c * spec.nonlinearity(u))
        .collect();
    StatePair::new(
        state.u().clone(),
        Field::new(state.grid().clone(), v),
        state.time() + t,
    )
}

/// `psi <- e^{i t <nabla>} psi`.
pub fn linear_flow_psi(state: &PsiState, t: f64) -> PsiState {
    let mut hat = forward(&state.psi);
    for (c, z) in hat.coeffs_mut().iter_mut().zip(state.psi.grid().symbols()) {
        *c *= Complex64::from_polar(1.0, t * z);
    }
    PsiState::new(inverse(&hat), state.time + t)
}

/// `psi <- psi + eps^p t i <nabla>^{-1} [((psi + conj psi) / 2)^{p+1}]`.
pub fn nonlinear_flow_psi(state: &PsiState, t: f64, spec: &ProblemSpec) -> Result<PsiState> {
    check_formulation(spec, Formulation::Psi)?;
    let grid = state.psi.grid().clone();
    let g = Field::new(
        grid.clone(),
        state
            .psi
            .values()
            .iter()
            .map(|z| spec.nonlinearity(Complex64::new(z.re, 0.0)))
            .collect(),
    );
    let f = inverse(&apply_symbol(&forward(&g), -1.0));
    // the smoothing operator maps real data to real data; drop FFT residue
    let scale = spec.nonlinear_coefficient() * t;
    let psi = state
        .psi
        .values()
        .iter()
        .zip(f.values())
        .map(|(p, f)| Complex64::new(p.re, p.im + scale * f.re))
        .collect();
    Ok(PsiState::new(Field::new(grid, psi), state.time + t))
}

/// One Strang step of `psi` with step `dt` (which may be negative).
pub fn strang_step_psi(
    state: &PsiState,
    dt: f64,
    composition: Composition,
    spec: &ProblemSpec,
) -> Result<PsiState> {
    let out = match composition {
        Composition::Tvt => {
            let s = linear_flow_psi(state, dt / 2.0);
            let s = nonlinear_flow_psi(&s, dt, spec)?;
            linear_flow_psi(&s, dt / 2.0)
        }
        Composition::Vtv => {
            let s = nonlinear_flow_psi(state, dt / 2.0, spec)?;
            let s = linear_flow_psi(&s, dt);
            nonlinear_flow_psi(&s, dt / 2.0, spec)?
        }
    };
    Ok(PsiState::new(out.psi, state.time + dt))
}

/// One Strang step of size `config.dt` built from the nodal subflows.
///
/// `config.dt` is used as given, so a negative step runs the scheme
/// backwards; [`StepperConfig::validate`] is not applied here.
pub fn strang_step(
    state: &StatePair,
    config: &StepperConfig,
    spec: &ProblemSpec,
) -> Result<StatePair> {
    check_formulation(spec, config.formulation)?;
    let dt = config.dt;
    let out = match config.formulation {
        Formulation::Uv => match config.composition {
            Composition::Tvt => {
                let s = linear_flow_uv(state, dt / 2.0, spec);
                let s = nonlinear_flow_uv(&s, dt, spec);
                linear_flow_uv(&s, dt / 2.0, spec)
            }
            Composition::Vtv => {
                let s = nonlinear_flow_uv(state, dt / 2.0, spec);
                let s = linear_flow_uv(&s, dt, spec);
                nonlinear_flow_uv(&s, dt / 2.0, spec)
            }
        },
        Formulation::Psi => {
            let psi = to_psi(state, spec)?;
            from_psi(&strang_step_psi(&psi, dt, config.composition, spec)?)
        }
    };
    Ok(out.with_time(state.time() + dt))
}

/// Per-mode rotation tables for the linear flow over a fixed time.
#[derive(Debug, Clone)]
struct Rotation {
    cos: Vec<f64>,
    sin_over_omega: Vec<f64>,
    omega_sin: Vec<f64>,
}

impl Rotation {
    fn new(grid: &SpectralGrid, scale: f64, t: f64) -> Self {
        let n = grid.len();
        let mut rot = Rotation {
            cos: Vec::with_capacity(n),
            sin_over_omega: Vec::with_capacity(n),
            omega_sin: Vec::with_capacity(n),
        };
        for &zeta in grid.symbols() {
            let omega = scale * zeta;
            let (s, c) = (t * omega).sin_cos();
            rot.cos.push(c);
            rot.sin_over_omega.push(s / omega);
            rot.omega_sin.push(omega * s);
        }
        rot
    }

    fn apply(&self, u: &mut [Complex64], v: &mut [Complex64]) {
        for k in 0..u.len() {
            let (uk, vk) = (u[k], v[k]);
            u[k] = uk * self.cos[k] + vk * self.sin_over_omega[k];
            v[k] = vk * self.cos[k] - uk * self.omega_sin[k];
        }
    }
}

/// Strang stepper acting on Fourier coefficients.
///
/// For the `(u, v)` formulation `first`/`second` hold `(u^, v^)`; for the
/// `psi` formulation `first` holds `psi^` and `second` is unused.
struct Propagator {
    spec: ProblemSpec,
    grid: Arc<SpectralGrid>,
    dt: f64,
    composition: Composition,
    formulation: Formulation,
    coefficient: f64,
    half: Rotation,
    full: Rotation,
    phase_half: Vec<Complex64>,
    phase_full: Vec<Complex64>,
    nodal: Vec<Complex64>,
}

impl Propagator {
    fn new(spec: &ProblemSpec, grid: &Arc<SpectralGrid>, dt: f64, config: &StepperConfig) -> Self {
        let scale = spec.frequency_scale();
        let phase = |t: f64| -> Vec<Complex64> {
            grid.symbols()
                .iter()
                .map(|z| Complex64::from_polar(1.0, t * z))
                .collect()
        };
        Propagator {
            spec: spec.clone(),
            grid: grid.clone(),
            dt,
            composition: config.composition,
            formulation: config.formulation,
            coefficient: spec.nonlinear_coefficient(),
            half: Rotation::new(grid, scale, dt / 2.0),
            full: Rotation::new(grid, scale, dt),
            phase_half: phase(dt / 2.0),
            phase_full: phase(dt),
            nodal: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Advances one step; returns the largest nodal `|u|` seen.
    fn step(&mut self, first: &mut [Complex64], second: &mut [Complex64]) -> f64 {
        let dt = self.dt;
        match (self.formulation, self.composition) {
            (Formulation::Uv, Composition::Tvt) => {
                self.half.apply(first, second);
                let peak = self.kick_uv(first, second, dt);
                self.half.apply(first, second);
                peak
            }
            (Formulation::Uv, Composition::Vtv) => {
                let a = self.kick_uv(first, second, dt / 2.0);
                self.full.apply(first, second);
                let b = self.kick_uv(first, second, dt / 2.0);
                a.max(b)
            }
            (Formulation::Psi, Composition::Tvt) => {
                multiply(first, &self.phase_half);
                let peak = self.kick_psi(first, dt);
                multiply(first, &self.phase_half);
                peak
            }
            (Formulation::Psi, Composition::Vtv) => {
                let a = self.kick_psi(first, dt / 2.0);
                multiply(first, &self.phase_full);
                let b = self.kick_psi(first, dt / 2.0);
                a.max(b)
            }
        }
    }

    /// `v^ <- v^ - t c F[f(u)]`.
    fn kick_uv(&mut self, u_hat: &[Complex64], v_hat: &mut [Complex64], t: f64) -> f64 {
        self.nodal.copy_from_slice(u_hat);
        self.grid.inverse_in_place(&mut self.nodal);
        let mut peak = 0.0f64;
        for z in self.nodal.iter_mut() {
            peak = peak.max(z.norm());
            *z = self.spec.nonlinearity(*z);
        }
        self.grid.forward_in_place(&mut self.nodal);
        let w = t * self.coefficient;
        for (v, g) in v_hat.iter_mut().zip(&self.nodal) {
            *v -= g * w;
        }
        peak_or_nan(peak, &self.nodal)
    }

    /// `psi^ <- psi^ + i t c F[f(Re psi)] / zeta`.
    fn kick_psi(&mut self, psi_hat: &mut [Complex64], t: f64) -> f64 {
        self.nodal.copy_from_slice(psi_hat);
        self.grid.inverse_in_place(&mut self.nodal);
        let mut peak = 0.0f64;
        for z in self.nodal.iter_mut() {
            peak = peak.max(z.re.abs());
            *z = self.spec.nonlinearity(Complex64::new(z.re, 0.0));
        }
        self.grid.forward_in_place(&mut self.nodal);
        let w = Complex64::new(0.0, t * self.coefficient);
        for ((p, g), zeta) in psi_hat.iter_mut().zip(&self.nodal).zip(self.grid.symbols()) {
            *p += g * w / *zeta;
        }
        peak_or_nan(peak, &self.nodal)
    }
}

fn multiply(x: &mut [Complex64], phase: &[Complex64]) {
    for (a, b) in x.iter_mut().zip(phase) {
        *a *= b;
    }
}

// `f64::max` drops NaN, so surface non-finite data explicitly.
fn peak_or_nan(peak: f64, data: &[Complex64]) -> f64 {
    if peak.is_finite() && data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        peak
    } else {
        f64::NAN
    }
}

/// Fourier-space state used by [`evolve`].
struct SpectralState {
    first: Vec<Complex64>,
    second: Vec<Complex64>,
}

impl SpectralState {
    fn from_pair(state: &StatePair, spec: &ProblemSpec, formulation: Formulation) -> Result<Self> {
        Ok(match formulation {
            Formulation::Uv => SpectralState {
                first: forward(state.u()).into_coeffs(),
                second: forward(state.v()).into_coeffs(),
            },
            Formulation::Psi => SpectralState {
                first: forward(to_psi(state, spec)?.psi()).into_coeffs(),
                second: Vec::new(),
            },
        })
    }

    fn to_pair(&self, grid: &Arc<SpectralGrid>, formulation: Formulation, time: f64) -> StatePair {
        match formulation {
            Formulation::Uv => StatePair::new(
                inverse(&Spectrum::new(grid.clone(), self.first.clone())),
                inverse(&Spectrum::new(grid.clone(), self.second.clone())),
                time,
            ),
            Formulation::Psi => {
                let psi = inverse(&Spectrum::new(grid.clone(), self.first.clone()));
                from_psi(&PsiState::new(psi, time))
            }
        }
    }
}

/// What to record while evolving.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Observers {
    /// Record the energy every this many steps (plus the first and last).
    pub energy_every: Option<usize>,
    /// Record `||u||_1` and `||v||_0` every this many steps.
    pub norms_every: Option<usize>,
    /// Store the state at the first time level at or after each time.
    pub snapshot_times: Vec<f64>,
}

impl Observers {
    pub fn energy(every: usize) -> Self {
        Observers {
            energy_every: Some(every.max(1)),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergySample {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSample {
    pub step: usize,
    pub time: f64,
    pub u_h1: f64,
    pub v_l2: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ObserverLog {
    pub energy: Vec<EnergySample>,
    pub norms: Vec<NormSample>,
    pub snapshots: Vec<StatePair>,
    pub steps: usize,
}

impl ObserverLog {
    /// `max_n |E(t_n) - E(0)| / E(0)` over the recorded samples.
    pub fn max_relative_energy_drift(&self) -> Option<f64> {
        let e0 = self.energy.first()?.energy;
        Some(
            self.energy
                .iter()
                .map(|s| (s.energy - e0).abs() / e0.abs().max(f64::MIN_POSITIVE))
                .fold(0.0, f64::max),
        )
    }
}

/// Step sizes that cover `[0, horizon]`: `count` steps of `dt` and possibly
/// one trailing short step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlan {
    pub count: usize,
    pub dt: f64,
    pub tail: Option<f64>,
}

impl StepPlan {
    pub fn new(horizon: f64, dt: f64) -> Self {
        if horizon <= 0.0 {
            return StepPlan {
                count: 0,
                dt,
                tail: None,
            };
        }
        let ratio = horizon / dt;
        let nearest = ratio.round();
        if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
            return StepPlan {
                count: nearest as usize,
                dt,
                tail: None,
            };
        }
        let count = ratio.floor() as usize;
        let tail = horizon - count as f64 * dt;
        StepPlan {
            count,
            dt,
            tail: Some(tail),
        }
    }

    pub fn total_steps(&self) -> usize {
        self.count + usize::from(self.tail.is_some())
    }
}

/// Runs the problem from its initial data up to its horizon.
pub fn evolve(
    spec: &ProblemSpec,
    grid: &Arc<SpectralGrid>,
    config: &StepperConfig,
    observers: &Observers,
) -> Result<(StatePair, ObserverLog)> {
    let start = initial_state(spec, grid)?;
    evolve_from(spec, start, spec.horizon(), config, observers)
}

/// Runs `state` forward by `duration`.
pub fn evolve_from(
    spec: &ProblemSpec,
    state: StatePair,
    duration: f64,
    config: &StepperConfig,
    observers: &Observers,
) -> Result<(StatePair, ObserverLog)> {
    spec.validate()?;
    config.validate(spec)?;
    let grid = state.grid().clone();
    let t_start = state.time();
    let plan = StepPlan::new(duration, config.dt);

    let mut log = ObserverLog::default();
    let mut pending: Vec<f64> = observers.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();

    let mut spectral = SpectralState::from_pair(&state, spec, config.formulation)?;
    let mut main = Propagator::new(spec, &grid, plan.dt, config);

    let total = plan.total_steps();
    let time_at = |n: usize| -> f64 {
        if n <= plan.count {
            t_start + n as f64 * plan.dt
        } else {
            t_start + duration
        }
    };

    let observe =
        |n: usize, spectral: &SpectralState, log: &mut ObserverLog, pending: &mut Vec<f64>| {
            let last = n == total;
            let wants_energy = observers
                .energy_every
                .is_some_and(|k| n.is_multiple_of(k) || last);
            let wants_norms = observers
                .norms_every
                .is_some_and(|k| n.is_multiple_of(k) || last);
            let tol = 1e-9 * plan.dt;
            let wants_snapshot = pending.last().is_some_and(|&t| time_at(n) >= t - tol);
            if !(wants_energy || wants_norms || wants_snapshot) {
                return;
            }
            let pair = spectral.to_pair(&grid, config.formulation, time_at(n));
            if wants_energy {
                log.energy.push(EnergySample {
                    step: n,
                    time: pair.time(),
                    energy: energy(spec, &pair),
                });
            }
            if wants_norms {
                log.norms.push(NormSample {
                    step: n,
                    time: pair.time(),
                    u_h1: sobolev_norm(&forward(pair.u()), 1.0),
                    v_l2: sobolev_norm(&forward(pair.v()), 0.0),
                });
            }
            if wants_snapshot {
                while pending.last().is_some_and(|&t| time_at(n) >= t - tol) {
                    pending.pop();
                }
                log.snapshots.push(pair);
            }
        };

    observe(0, &spectral, &mut log, &mut pending);
    for n in 1..=total {
        let peak = if n <= plan.count {
            main.step(&mut spectral.first, &mut spectral.second)
        } else {
            let tail = plan
                .tail
                .expect("tail step exists when total exceeds count");
            let mut short = Propagator::new(spec, &grid, tail, config);
            short.step(&mut spectral.first, &mut spectral.second)
        };
        if !peak.is_finite() || peak > BLOW_UP_AMPLITUDE {
            return Err(Error::BlowUp {
                step: n,
                time: time_at(n),
                reason: if peak.is_finite() {
                    format!("max |u| = {peak:.3e} exceeds {BLOW_UP_AMPLITUDE:.0e}")
                } else {
                    "non-finite values".into()
                },
            });
        }
        observe(n, &spectral, &mut log, &mut pending);
    }
    log.steps = total;
    if total == 0 {
        return Ok((state, log));
    }

    let out = spectral.to_pair(&grid, config.formulation, time_at(total));
    if !out.is_finite() || out.max_abs() > BLOW_UP_AMPLITUDE {
        return Err(Error::BlowUp {
            step: total,
            time: out.time(),
            reason: format!("final state amplitude {:.3e}", out.max_abs()),
        });
    }
    Ok((out, log))
}
