//! Error measurement against references and (epsilon x refinement) sweeps.

use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::reference::{
    reference_solution, ReferenceCache, ReferenceResolution, ReferenceSolution,
};
use crate::error::{Error, Result};
use crate::integrator::{evolve, Composition, Formulation, Observers, StatePair, StepperConfig};
use crate::model::ProblemSpec;
use crate::spectral::{forward, resample, sobolev_norm, Field};
use num_complex::Complex64;

/// Errors of one run at the final time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub epsilon: f64,
    pub beta: f64,
    /// Realised mesh size of the run.
    pub h: f64,
    pub dt: f64,
    pub sigma: f64,
    /// `||u - u_ref||_sigma`.
    pub error_u: f64,
    /// `||v - v_ref||_{sigma - 1}`.
    pub error_v: f64,
    pub observed_order: Option<f64>,
    pub wallclock_seconds: f64,
}

/// How the distance between a coarse run and its reference is measured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorNorm {
    /// Zero-pad the coarse spectra onto the reference grid and take the
    /// `H^sigma` norm of the coefficient difference.
    #[default]
    Spectral,
    /// Sample the reference at the coarse nodes and take the discrete `H^1`
    /// norm `h sum |e_j|^2 + h sum |(e_{j+1} - e_j) / h|^2` there (plain
    /// discrete `L^2` for the velocity). Only `sigma = 1` is supported, and
    /// the coarse nodes must be a subset of the reference nodes.
    Nodal,
}

impl ErrorNorm {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorNorm::Spectral => "spectral",
            ErrorNorm::Nodal => "nodal",
        }
    }
}

/// Compares a coarse final state with a reference by zero-padding the
/// coarse spectra onto the reference grid.
pub fn measure_error(
    spec: &ProblemSpec,
    dt: f64,
    numerical: &StatePair,
    reference: &ReferenceSolution,
    sigma: f64,
) -> Result<ErrorReport> {
    measure_error_with(spec, dt, numerical, reference, sigma, ErrorNorm::Spectral)
}

pub fn measure_error_with(
    spec: &ProblemSpec,
    dt: f64,
    numerical: &StatePair,
    reference: &ReferenceSolution,
    sigma: f64,
    norm: ErrorNorm,
) -> Result<ErrorReport> {
    let (error_u, error_v) = match norm {
        ErrorNorm::Spectral => {
            let fine = reference.grid();
            let u = resample(&forward(numerical.u()), fine)?;
            let v = resample(&forward(numerical.v()), fine)?;
            (
                sobolev_norm(&u.sub(&reference.u_hat)?, sigma),
                sobolev_norm(&v.sub(&reference.v_hat)?, sigma - 1.0),
            )
        }
        ErrorNorm::Nodal => {
            if sigma != 1.0 {
                return Err(Error::param(
                    "sigma",
                    format!("the nodal norm needs sigma = 1, got {sigma}"),
                ));
            }
            let stride = nodal_stride(numerical, reference)?;
            let h = numerical.grid().h();
            let gap = |fine: &Field, coarse: &Field| -> Vec<Complex64> {
                fine.values()
                    .iter()
                    .step_by(stride)
                    .zip(coarse.values())
                    .map(|(r, c)| r - c)
                    .collect()
            };
            let eu = gap(reference.state.u(), numerical.u());
            let ev = gap(reference.state.v(), numerical.v());
            let l2 = |e: &[Complex64]| h * e.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let n = eu.len();
            let diff = h
                * (0..n)
                    .map(|j| ((eu[(j + 1) % n] - eu[j]) / h).norm_sqr())
                    .sum::<f64>();
            ((l2(&eu) + diff).sqrt(), l2(&ev).sqrt())
        }
    };
    Ok(ErrorReport {
        epsilon: spec.epsilon,
        beta: spec.beta,
        h: numerical.grid().h(),
        dt,
        sigma,
        error_u,
        error_v,
        observed_order: None,
        wallclock_seconds: 0.0,
    })
}

fn nodal_stride(numerical: &StatePair, reference: &ReferenceSolution) -> Result<usize> {
    let coarse = numerical.grid();
    let fine = reference.grid();
    coarse.check_domain(fine)?;
    if coarse.len() > fine.len() || !fine.len().is_multiple_of(coarse.len()) {
        return Err(Error::UnsupportedResample {
            from: coarse.len(),
            to: fine.len(),
        });
    }
    Ok(fine.len() / coarse.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    /// Refine `h` at the reference step.
    Spatial,
    /// Refine `dt` at the reference mesh size.
    Temporal,
}

impl SweepAxis {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::Spatial => "spatial",
            SweepAxis::Temporal => "temporal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub base: ProblemSpec,
    pub axis: SweepAxis,
    pub epsilons: Vec<f64>,
    /// Mesh sizes or steps, strictly decreasing.
    pub values: Vec<f64>,
    pub reference: ReferenceResolution,
    pub sigma: f64,
    #[serde(default)]
    pub composition: Composition,
    #[serde(default)]
    pub formulation: Formulation,
    #[serde(default)]
    pub norm: ErrorNorm,
}

impl SweepSpec {
    pub fn new(
        base: ProblemSpec,
        axis: SweepAxis,
        epsilons: Vec<f64>,
        values: Vec<f64>,
        reference: ReferenceResolution,
    ) -> Self {
        SweepSpec {
            base,
            axis,
            epsilons,
            values,
            reference,
            sigma: 1.0,
            composition: Composition::default(),
            formulation: Formulation::default(),
            norm: ErrorNorm::default(),
        }
    }

    pub fn with_norm(mut self, norm: ErrorNorm) -> Self {
        self.norm = norm;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_composition(mut self, composition: Composition) -> Self {
        self.composition = composition;
        self
    }

    pub fn with_formulation(mut self, formulation: Formulation) -> Self {
        self.formulation = formulation;
        self
    }

    pub fn problem(&self, epsilon: f64) -> ProblemSpec {
        self.base.clone().with_epsilon(epsilon)
    }

    pub fn validate(&self) -> Result<()> {
        for &eps in &self.epsilons {
            self.problem(eps).validate()?;
        }
        if self.values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::param("values", "refinement values must be positive"));
        }
        if self.values.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::param(
                "values",
                "refinement values must be strictly decreasing",
            ));
        }
        let finest = self.values.iter().copied().fold(f64::INFINITY, f64::min);
        let reference = match self.axis {
            SweepAxis::Spatial => self.reference.h,
            SweepAxis::Temporal => self.reference.dt,
        };
        if !self.values.is_empty() && reference >= finest {
            return Err(Error::param(
                "reference",
                format!("reference {reference:e} must be finer than every refinement value (finest {finest:e})"),
            ));
        }
        if self.norm == ErrorNorm::Nodal && self.sigma != 1.0 {
            return Err(Error::param("sigma", "the nodal norm needs sigma = 1"));
        }
        if !(self.reference.h > 0.0 && self.reference.dt > 0.0) {
            return Err(Error::param(
                "reference",
                "reference h and dt must be positive",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellStatus {
    Ok,
    BlowUp,
    Failed,
}

impl CellStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::BlowUp => "blow-up",
            CellStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub epsilon: f64,
    pub axis_value: f64,
    pub status: CellStatus,
    pub report: Option<ErrorReport>,
    pub message: Option<String>,
}

impl SweepCell {
    pub fn error_u(&self) -> Option<f64> {
        self.report.as_ref().map(|r| r.error_u)
    }

    pub fn order(&self) -> Option<f64> {
        self.report.as_ref().and_then(|r| r.observed_order)
    }

    fn failed(epsilon: f64, axis_value: f64, err: &Error) -> Self {
        SweepCell {
            epsilon,
            axis_value,
            status: match err {
                Error::BlowUp { .. } => CellStatus::BlowUp,
                _ => CellStatus::Failed,
            },
            report: None,
            message: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// `cells[i][j]` is epsilon `i` at refinement value `j`.
    pub cells: Vec<Vec<SweepCell>>,
    /// Column-wise maximum of `error_u` over epsilon.
    pub e_inf: Vec<Option<f64>>,
    /// Reference key per epsilon.
    pub reference_keys: Vec<Option<String>>,
}

impl SweepResult {
    pub fn row(&self, epsilon_index: usize) -> &[SweepCell] {
        &self.cells[epsilon_index]
    }

    /// Error column `j` as `(epsilon, error_u)` over usable cells.
    pub fn column(&self, j: usize) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter_map(|row| row.get(j))
            .filter_map(|c| c.error_u().map(|e| (c.epsilon, e)))
            .collect()
    }

    pub fn all_ok(&self) -> bool {
        self.cells
            .iter()
            .flatten()
            .all(|c| c.status == CellStatus::Ok)
    }

    /// Orders from `e_inf` using the same formula as the rows.
    pub fn e_inf_orders(&self) -> Vec<Option<f64>> {
        let mut out = vec![None];
        for (e, x) in self.e_inf.windows(2).zip(self.spec.values.windows(2)) {
            out.push(match (e[0], e[1]) {
                (Some(a), Some(b)) => observed_order(x[0], a, x[1], b),
                _ => None,
            });
        }
        out.truncate(self.e_inf.len());
        out
    }
}

/// `log(e0 / e1) / log(x0 / x1)`.
pub fn observed_order(x0: f64, e0: f64, x1: f64, e1: f64) -> Option<f64> {
    if e0 > 0.0 && e1 > 0.0 && x0 > 0.0 && x1 > 0.0 && x0 != x1 {
        Some((e0 / e1).ln() / (x0 / x1).ln())
    } else {
        None
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if usable.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = usable.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = usable.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData {
            needed: 2,
            found: 1,
        });
    }
    Ok(sxy / sxx)
}

/// Runs one cell: a coarse run measured against `reference`.
pub fn run_cell(
    spec: &SweepSpec,
    problem: &ProblemSpec,
    axis_value: f64,
    reference: &ReferenceSolution,
) -> Result<ErrorReport> {
    let (h, dt) = match spec.axis {
        SweepAxis::Spatial => (axis_value, spec.reference.dt),
        SweepAxis::Temporal => (spec.reference.h, axis_value),
    };
    let start = Instant::now();
    let grid = problem.grid_with_spacing(h)?;
    let config = StepperConfig::new(dt)
        .with_composition(spec.composition)
        .with_formulation(spec.formulation);
    let (state, _) = evolve(problem, &grid, &config, &Observers::default())?;
    let mut report = measure_error_with(problem, dt, &state, reference, spec.sigma, spec.norm)?;
    report.wallclock_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs every (epsilon, refinement) cell. Failed cells are recorded with a
/// status instead of aborting the sweep.
pub fn sweep(spec: &SweepSpec, cache: &ReferenceCache) -> Result<SweepResult> {
    spec.validate()?;

    let references: Vec<Result<Arc<ReferenceSolution>>> = spec
        .epsilons
        .par_iter()
        .map(|&eps| {
            reference_solution(
                &spec.problem(eps),
                spec.reference,
                spec.composition,
                spec.formulation,
                cache,
            )
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..spec.epsilons.len())
        .flat_map(|i| (0..spec.values.len()).map(move |j| (i, j)))
        .collect();
    let flat: Vec<SweepCell> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let eps = spec.epsilons[i];
            let value = spec.values[j];
            let outcome = references[i]
                .as_ref()
                .map_err(|e| Error::param("reference", e.to_string()))
                .and_then(|r| run_cell(spec, &spec.problem(eps), value, r));
            match outcome {
                Ok(report) => SweepCell {
                    epsilon: eps,
                    axis_value: value,
                    status: CellStatus::Ok,
                    report: Some(report),
                    message: None,
                },
                Err(err) => {
                    // a failed reference already explains itself
                    let err = match &references[i] {
                        Err(reference_err) => reference_err_for_cell(reference_err),
                        Ok(_) => err,
                    };
                    SweepCell::failed(eps, value, &err)
                }
            }
        })
        .collect();

    let mut cells: Vec<Vec<SweepCell>> = Vec::with_capacity(spec.epsilons.len());
    let mut it = flat.into_iter();
    for _ in &spec.epsilons {
        cells.push(it.by_ref().take(spec.values.len()).collect());
    }
    fill_orders(&mut cells, &spec.values);
    let e_inf = column_max(&cells, spec.values.len());
    let reference_keys = references
        .iter()
        .map(|r| r.as_ref().ok().map(|s| s.key.clone()))
        .collect();

    Ok(SweepResult {
        spec: spec.clone(),
        cells,
        e_inf,
        reference_keys,
    })
}

fn reference_err_for_cell(err: &Error) -> Error {
    match err {
        Error::BlowUp { step, time, reason } => Error::BlowUp {
            step: *step,
            time: *time,
            reason: format!("reference run: {reason}"),
        },
        other => Error::param("reference", other.to_string()),
    }
}

fn fill_orders(cells: &mut [Vec<SweepCell>], values: &[f64]) {
    for row in cells.iter_mut() {
        for j in 1..row.len() {
            let prev = row[j - 1].error_u();
            if let (Some(e0), Some(report)) = (prev, row[j].report.as_mut()) {
                report.observed_order =
                    observed_order(values[j - 1], e0, values[j], report.error_u);
            }
        }
    }
}

fn column_max(cells: &[Vec<SweepCell>], width: usize) -> Vec<Option<f64>> {
    (0..width)
        .map(|j| {
            cells
                .iter()
                .filter_map(|row| row.get(j).and_then(SweepCell::error_u))
                .fold(None, |acc: Option<f64>, e| {
                    Some(acc.map_or(e, |a| a.max(e)))
                })
        })
        .collect()
}

/// Least-squares dependence of the error on epsilon at one refinement value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingEstimate {
    pub slope: f64,
    /// `p - beta`, the exponent of epsilon in the temporal error bound.
    pub expected: f64,
    pub cells_used: usize,
}

/// Slope of `log(error_u)` against `log(epsilon)` in column `column`.
pub fn epsilon_scaling_check(result: &SweepResult, column: usize) -> Result<ScalingEstimate> {
    let points = result.column(column);
    let usable = points.iter().filter(|(_, e)| *e > 0.0).count();
    if usable < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            found: usable,
        });
    }
    let slope = loglog_slope(&points)?;
    Ok(ScalingEstimate {
        slope,
        expected: result.spec.base.p as f64 - result.spec.base.beta,
        cells_used: usable,
    })
}

/// How a reported error reacts to refining the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "verdict")]
pub enum Consistency {
    /// Relative change below 1%.
    Consistent {
        relative_change: f64,
    },
    Inconsistent {
        relative_change: f64,
    },
    /// Error at or below `1e-8`, where roundoff and reference error dominate.
    RoundoffDominated {
        error: f64,
    },
    Unavailable,
}

/// Below this the self-consistency test is not meaningful.
pub const ROUNDOFF_FLOOR: f64 = 1e-8;

/// Re-runs the sweep against a reference refined along the sweep axis
/// (half the step for temporal sweeps, half the mesh size for spatial
/// ones) and classifies every cell.
pub fn reference_self_consistency(
    result: &SweepResult,
    cache: &ReferenceCache,
) -> Result<Vec<Vec<Consistency>>> {
    let mut finer = result.spec.clone();
    match finer.axis {
        SweepAxis::Temporal => finer.reference.dt /= 2.0,
        SweepAxis::Spatial => finer.reference.h /= 2.0,
    }
    let again = sweep(&finer, cache)?;
    Ok(result
        .cells
        .iter()
        .zip(&again.cells)
        .map(|(row, row2)| {
            row.iter()
                .zip(row2)
                .map(|(a, b)| match (a.error_u(), b.error_u()) {
                    (Some(e), _) if e <= ROUNDOFF_FLOOR => {
                        Consistency::RoundoffDominated { error: e }
                    }
                    (Some(e), Some(f)) => {
                        let relative_change = (e - f).abs() / e;
                        if relative_change < 0.01 {
                            Consistency::Consistent { relative_change }
                        } else {
                            Consistency::Inconsistent { relative_change }
                        }
                    }
                    _ => Consistency::Unavailable,
                })
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::reference::ReferenceResolution;
    use crate::spectral::{make_grid, Spectrum};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn identical_states_have_zero_error() {
        let spec = ProblemSpec::paper_real(2, 1.0, 0.0).with_t0(0.05);
        let cache = ReferenceCache::new();
        let res = ReferenceResolution::new(PI / 16.0, 0.01);
        let r = reference_solution(&spec, res, Composition::Tvt, Formulation::Uv, &cache).unwrap();
        let report = measure_error(&spec, 0.01, &r.state, &r, 1.0).unwrap();
        assert_eq!(report.error_u, 0.0);
        assert_eq!(report.error_v, 0.0);
    }

    #[test]
    fn truncated_reference_error_is_tail_norm() {
        let fine = make_grid(0.0, 2.0 * PI, 32).unwrap();
        let coarse = make_grid(0.0, 2.0 * PI, 8).unwrap();
        let mut hat = Spectrum::zeros(fine.clone());
        for l in -16..16i64 {
            let c = 1.0 / (1.0 + (l * l) as f64);
            *hat.coeff_mut(l).unwrap() = Complex64::new(c, 0.5 * c);
        }
        let state = StatePair::new(
            crate::spectral::inverse(&hat),
            Field::zeros(fine.clone()),
            0.0,
        );
        let reference = ReferenceSolution {
            key: "synthetic".into(),
            u_hat: hat.clone(),
            v_hat: Spectrum::zeros(fine.clone()),
            state,
        };
        let mut low = Spectrum::zeros(coarse.clone());
        for l in -4..4 {
            *low.coeff_mut(l).unwrap() = hat.coeff(l).unwrap();
        }
        let numerical = StatePair::new(
            crate::spectral::inverse(&low),
            Field::zeros(coarse.clone()),
            0.0,
        );
        let spec = ProblemSpec::paper_real(2, 1.0, 0.0);
        let report = measure_error(&spec, 0.1, &numerical, &reference, 1.0).unwrap();
        let tail: f64 = (-16..16i64)
            .filter(|l| !(-4..4).contains(l))
            .map(|l| (1.0 + (l * l) as f64) * hat.coeff(l).unwrap().norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert_relative_eq!(report.error_u, tail, max_relative = 1e-12);
        assert_eq!(report.error_v, 0.0);
    }

    #[test]
    fn nodal_norm_of_a_sampled_mode() {
        // a single mode sampled on the coarse nodes has an exact discrete norm
        let fine = make_grid(0.0, 2.0 * PI, 32).unwrap();
        let coarse = make_grid(0.0, 2.0 * PI, 8).unwrap();
        let wave = |x: f64| Complex64::new((2.0 * x).cos(), 0.0);
        let reference = ReferenceSolution::from_state(
            "mode".into(),
            StatePair::new(
                Field::from_fn(fine.clone(), wave),
                Field::from_fn(fine, wave),
                0.0,
            ),
        );
        let numerical = StatePair::new(
            Field::zeros(coarse.clone()),
            Field::zeros(coarse.clone()),
            0.0,
        );
        let spec = ProblemSpec::paper_real(2, 1.0, 0.0);
        let r =
            measure_error_with(&spec, 0.1, &numerical, &reference, 1.0, ErrorNorm::Nodal).unwrap();
        let h = coarse.h();
        let fd = (2.0 * (h).sin() / h).powi(2);
        assert_relative_eq!(r.error_u, (PI * (1.0 + fd)).sqrt(), max_relative = 1e-12);
        assert_relative_eq!(r.error_v, PI.sqrt(), max_relative = 1e-12);

        assert!(
            measure_error_with(&spec, 0.1, &numerical, &reference, 2.0, ErrorNorm::Nodal).is_err()
        );
        let odd = make_grid(0.0, 2.0 * PI, 12).unwrap();
        let bad = StatePair::new(Field::zeros(odd.clone()), Field::zeros(odd), 0.0);
        assert!(matches!(
            measure_error_with(&spec, 0.1, &bad, &reference, 1.0, ErrorNorm::Nodal),
            Err(Error::UnsupportedResample { .. })
        ));
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let spec = ProblemSpec::paper_real(2, 1.0, 0.0).with_t0(0.0);
        let cache = ReferenceCache::new();
        let r = reference_solution(
            &spec,
            ReferenceResolution::new(PI / 8.0, 0.1),
            Composition::Tvt,
            Formulation::Uv,
            &cache,
        )
        .unwrap();
        let other = make_grid(0.0, 1.0, 8).unwrap();
        let s = StatePair::new(Field::zeros(other.clone()), Field::zeros(other), 0.0);
        assert!(matches!(
            measure_error(&spec, 0.1, &s, &r, 1.0),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn order_of_synthetic_quadratic_sequence_is_exact() {
        let c = 3.7;
        let taus = [0.1, 0.05, 0.025, 0.0125];
        for w in taus.windows(2) {
            let o = observed_order(w[0], c * w[0] * w[0], w[1], c * w[1] * w[1]).unwrap();
            assert_relative_eq!(o, 2.0, epsilon = 1e-12);
        }
        let pts: Vec<(f64, f64)> = taus.iter().map(|&t| (t, c * t * t)).collect();
        assert_relative_eq!(loglog_slope(&pts).unwrap(), 2.0, epsilon = 1e-12);
        assert!(observed_order(0.1, 0.0, 0.05, 1.0).is_none());
    }

    fn tiny_sweep(axis: SweepAxis) -> SweepSpec {
        let base = ProblemSpec::paper_real(2, 1.0, 0.0).with_t0(0.1);
        let (values, reference) = match axis {
            SweepAxis::Temporal => (
                vec![0.05, 0.025],
                ReferenceResolution::new(PI / 8.0, 0.00625),
            ),
            SweepAxis::Spatial => (
                vec![PI / 4.0, PI / 8.0],
                ReferenceResolution::new(PI / 16.0, 0.01),
            ),
        };
        SweepSpec::new(base, axis, vec![1.0, 0.5, 0.25], values, reference)
    }

    #[test]
    fn single_cell_sweep_matches_direct_measurement() {
        let mut spec = tiny_sweep(SweepAxis::Temporal);
        spec.epsilons.truncate(1);
        spec.values.truncate(1);
        let cache = ReferenceCache::new();
        let result = sweep(&spec, &cache).unwrap();
        let problem = spec.problem(1.0);
        let r = reference_solution(
            &problem,
            spec.reference,
            spec.composition,
            spec.formulation,
            &cache,
        )
        .unwrap();
        let grid = problem.grid_with_spacing(spec.reference.h).unwrap();
        let (state, _) = evolve(
            &problem,
            &grid,
            &StepperConfig::new(0.05),
            &Observers::default(),
        )
        .unwrap();
        let direct = measure_error(&problem, 0.05, &state, &r, 1.0).unwrap();
        let cell = result.cells[0][0].report.unwrap();
        assert_eq!(cell.error_u, direct.error_u);
        assert_eq!(cell.error_v, direct.error_v);
        assert!(cell.observed_order.is_none());
    }

    #[test]
    fn e_inf_is_column_max_and_orders_fill() {
        let cache = ReferenceCache::new();
        for axis in [SweepAxis::Temporal, SweepAxis::Spatial] {
            let result = sweep(&tiny_sweep(axis), &cache).unwrap();
            assert!(result.all_ok());
            for j in 0..2 {
                let max = result.column(j).iter().map(|p| p.1).fold(0.0, f64::max);
                assert_eq!(result.e_inf[j], Some(max));
            }
            for row in &result.cells {
                assert!(row[0].order().is_none());
                assert!(row[1].order().is_some());
            }
        }
    }

    #[test]
    fn validation_rejects_bad_sweeps() {
        let mut s = tiny_sweep(SweepAxis::Temporal);
        s.values = vec![0.025, 0.05];
        assert!(s.validate().is_err());
        let mut s = tiny_sweep(SweepAxis::Temporal);
        s.reference.dt = 0.05;
        assert!(s.validate().is_err());
        let mut s = tiny_sweep(SweepAxis::Spatial);
        s.reference.h = PI / 8.0;
        assert!(s.validate().is_err());
        let mut s = tiny_sweep(SweepAxis::Spatial);
        s.epsilons.push(0.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn failed_cells_do_not_poison_the_sweep() {
        // p = 1 with large data runs away for the biggest epsilon only.
        let base = ProblemSpec::paper_real(1, 1.0, 0.0)
            .with_t0(40.0)
            .with_initial(crate::model::InitialPreset::PaperReal);
        let mut spec = SweepSpec::new(
            base,
            SweepAxis::Temporal,
            vec![1.0, 1e-3],
            vec![0.5, 0.25],
            ReferenceResolution::new(PI / 8.0, 0.125),
        );
        spec.base.t0 = 40.0;
        let result = sweep(&spec, &ReferenceCache::new()).unwrap();
        let statuses: Vec<CellStatus> = result.cells.iter().flatten().map(|c| c.status).collect();
        assert!(statuses.contains(&CellStatus::Ok), "{statuses:?}");
        assert!(!result.all_ok(), "{statuses:?}");
        assert!(result.cells[0].iter().all(|c| c.message.is_some()));
    }

    #[test]
    fn scaling_check_needs_three_cells() {
        let cache = ReferenceCache::new();
        let result = sweep(&tiny_sweep(SweepAxis::Temporal), &cache).unwrap();
        assert!(epsilon_scaling_check(&result, 0).is_ok());
        let mut two = tiny_sweep(SweepAxis::Temporal);
        two.epsilons.truncate(2);
        let result = sweep(&two, &cache).unwrap();
        assert!(matches!(
            epsilon_scaling_check(&result, 0),
            Err(Error::InsufficientData {
                needed: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn flat_errors_have_zero_slope() {
        let pts = [(1.0, 3.0), (0.5, 3.0), (0.25, 3.0)];
        assert_eq!(loglog_slope(&pts).unwrap(), 0.0);
    }
}
