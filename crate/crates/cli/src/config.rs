//! Flat `key = value` run configuration.
//!
//! ```text
//! # comments start with '#'
//! problem.kind = real-weak
//! problem.epsilon = 1/4
//! domain.b = 2*pi
//! sweep.values = geom(0.1, 1/2, 7)
//! ```
//!
//! Numbers accept `pi` multiples (`pi/4`, `2*pi`, `-pi`), fractions and the
//! usual float syntax. Lists are comma separated or `geom(start, ratio, count)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use tsfp_core::harness::{ErrorNorm, ReferenceResolution, SweepAxis, SweepSpec};
use tsfp_core::{
    Composition, Domain, EquationKind, Formulation, InitialPreset, ProblemSpec, StepperConfig,
};

pub const KEYS: &[&str] = &[
    "problem.kind",
    "problem.p",
    "problem.epsilon",
    "problem.beta",
    "problem.preset",
    "preset.amplitude",
    "preset.mode",
    "domain.a",
    "domain.b",
    "grid.n",
    "grid.h",
    "time.dt",
    "time.t0",
    "splitting.composition",
    "splitting.formulation",
    "sweep.epsilons",
    "sweep.values",
    "sweep.sigma",
    "sweep.norm",
    "reference.h",
    "reference.dt",
    "reference.cache",
    "output.path",
    "observe.every",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    SweepSpace,
    SweepTime,
    DispersionCheck,
    EnergyDrift,
}

/// Where a value came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
enum Origin {
    File(PathBuf, usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File(path, line) => write!(f, "{}:{line}", path.display()),
            Origin::Flag => f.write_str("command line"),
        }
    }
}

/// Unvalidated key/value pairs, file first and flags on top.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

impl RawConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (index, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let origin = Origin::File(path.to_path_buf(), index + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}: expected `key = value`, got `{line}`"))?;
            let key = key.trim();
            check_key(key).with_context(|| origin.to_string())?;
            if raw.entries.contains_key(key) {
                bail!("{origin}: key `{key}` given twice");
            }
            raw.entries
                .insert(key.to_string(), (value.trim().to_string(), origin));
        }
        Ok(raw)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, path)
    }

    /// Sets `key` from the command line, replacing any file value.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        check_key(key)?;
        self.entries
            .insert(key.to_string(), (value.into(), Origin::Flag));
        Ok(())
    }

    /// `key=value` as given to `--set`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects key=value, got `{pair}`"))?;
        self.set(key.trim(), value.trim())
    }

    fn get(&self, key: &str) -> Option<&(String, Origin)> {
        debug_assert!(KEYS.contains(&key), "undocumented key {key}");
        self.entries.get(key)
    }

    fn typed<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some((value, origin)) => parse(value)
                .map(Some)
                .with_context(|| format!("{origin}: invalid value `{value}` for `{key}`")),
        }
    }
}

fn check_key(key: &str) -> Result<()> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        bail!("unknown key `{key}` (known keys: {})", KEYS.join(", "))
    }
}

fn parse_term(text: &str) -> Result<f64> {
    let t = text.trim();
    if let Some(coeff) = t.strip_suffix("pi") {
        let coeff = coeff.trim().trim_end_matches('*').trim();
        let c = match coeff {
            "" | "+" => 1.0,
            "-" => -1.0,
            other => other
                .parse::<f64>()
                .map_err(|_| anyhow!("`{t}` is not a number"))?,
        };
        return Ok(c * PI);
    }
    t.parse::<f64>()
        .map_err(|_| anyhow!("`{t}` is not a number"))
}

/// `1e-5`, `pi/64`, `2*pi`, `1/16`, `-pi`.
pub fn parse_number(text: &str) -> Result<f64> {
    let value = match text.split_once('/') {
        Some((num, den)) => parse_term(num)? / parse_term(den)?,
        None => parse_term(text)?,
    };
    if !value.is_finite() {
        bail!("`{text}` is not finite");
    }
    Ok(value)
}

/// Comma separated numbers, or `geom(start, ratio, count)`.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    let t = text.trim();
    if let Some(args) = t.strip_prefix("geom(").and_then(|r| r.strip_suffix(')')) {
        let parts: Vec<&str> = args.split(',').collect();
        let [start, ratio, count] = parts[..] else {
            bail!("geom takes (start, ratio, count)");
        };
        let start = parse_number(start)?;
        let ratio = parse_number(ratio)?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| anyhow!("`{count}` is not a count"))?;
        return Ok((0..count).map(|j| start * ratio.powi(j as i32)).collect());
    }
    t.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_number)
        .collect()
}

fn parse_usize(text: &str) -> Result<usize> {
    text.trim()
        .parse()
        .map_err(|_| anyhow!("`{text}` is not a nonnegative integer"))
}

fn parse_kind(text: &str) -> Result<EquationKind> {
    match text.trim() {
        "real-weak" | "real" => Ok(EquationKind::RealWeak),
        "complex-oscillatory" | "complex" => Ok(EquationKind::ComplexOscillatory),
        other => bail!("`{other}` is not an equation kind (real-weak, complex-oscillatory)"),
    }
}

pub fn parse_composition(text: &str) -> Result<Composition> {
    match text.trim() {
        "tvt" => Ok(Composition::Tvt),
        "vtv" => Ok(Composition::Vtv),
        other => bail!("`{other}` is not a composition (tvt, vtv)"),
    }
}

pub fn parse_formulation(text: &str) -> Result<Formulation> {
    match text.trim() {
        "uv" => Ok(Formulation::Uv),
        "psi" => Ok(Formulation::Psi),
        other => bail!("`{other}` is not a formulation (uv, psi)"),
    }
}

fn parse_norm(text: &str) -> Result<ErrorNorm> {
    match text.trim() {
        "spectral" => Ok(ErrorNorm::Spectral),
        "nodal" => Ok(ErrorNorm::Nodal),
        other => bail!("`{other}` is not an error norm (spectral, nodal)"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PresetName {
    PaperReal,
    PaperComplex,
    PlaneWave,
    SingleMode,
    Zero,
}

fn parse_preset(text: &str) -> Result<PresetName> {
    match text.trim() {
        "paper-real" => Ok(PresetName::PaperReal),
        "paper-complex" => Ok(PresetName::PaperComplex),
        "plane-wave" => Ok(PresetName::PlaneWave),
        "single-mode" => Ok(PresetName::SingleMode),
        "zero" => Ok(PresetName::Zero),
        other => bail!(
            "`{other}` is not a preset (paper-real, paper-complex, plane-wave, single-mode, zero)"
        ),
    }
}

/// Spatial resolution as requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Resolution {
    Nodes(usize),
    Spacing(f64),
}

/// Fully validated run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub problem: ProblemSpec,
    pub resolution: Resolution,
    pub stepper: StepperConfig,
    pub sweep: Option<SweepSpec>,
    pub reference_cache: Option<PathBuf>,
    pub output: PathBuf,
    pub observe_every: usize,
}

impl RunConfig {
    pub fn grid(&self) -> tsfp_core::Result<std::sync::Arc<tsfp_core::SpectralGrid>> {
        match self.resolution {
            Resolution::Nodes(n) => self.problem.grid(n),
            Resolution::Spacing(h) => self.problem.grid_with_spacing(h),
        }
    }

    pub fn build(command: Command, raw: &RawConfig) -> Result<Self> {
        let kind = raw
            .typed("problem.kind", parse_kind)?
            .unwrap_or(EquationKind::RealWeak);
        let p = raw.typed("problem.p", parse_usize)?.unwrap_or(2);
        let p = u32::try_from(p).map_err(|_| anyhow!("`problem.p` is too large"))?;
        let epsilon = raw.typed("problem.epsilon", parse_number)?.unwrap_or(1.0);
        let beta = raw.typed("problem.beta", parse_number)?.unwrap_or(0.0);

        let mut problem = match kind {
            EquationKind::RealWeak => ProblemSpec::paper_real(p, epsilon, beta),
            EquationKind::ComplexOscillatory => ProblemSpec::paper_complex(p, epsilon, beta),
        };
        if command == Command::DispersionCheck {
            problem = problem.with_domain(0.0, 2.0 * PI);
        }
        let a = raw.typed("domain.a", parse_number)?;
        let b = raw.typed("domain.b", parse_number)?;
        match (a, b) {
            (Some(a), Some(b)) => problem = problem.with_domain(a, b),
            (None, None) => {}
            _ => bail!("`domain.a` and `domain.b` must be given together"),
        }

        let default_preset = match (command, kind) {
            (Command::DispersionCheck, _) => PresetName::PlaneWave,
            (_, EquationKind::RealWeak) => PresetName::PaperReal,
            (_, EquationKind::ComplexOscillatory) => PresetName::PaperComplex,
        };
        let preset = raw
            .typed("problem.preset", parse_preset)?
            .unwrap_or(default_preset);
        let amplitude = raw.typed("preset.amplitude", parse_number)?;
        let mode = raw.typed("preset.mode", |s| {
            s.trim()
                .parse::<i64>()
                .map_err(|_| anyhow!("`{s}` is not an integer"))
        })?;
        if preset != PresetName::PlaneWave && amplitude.is_some() {
            bail!("`preset.amplitude` only applies to problem.preset = plane-wave");
        }
        if !matches!(preset, PresetName::PlaneWave | PresetName::SingleMode) && mode.is_some() {
            bail!("`preset.mode` only applies to plane-wave and single-mode presets");
        }
        problem.initial = match preset {
            PresetName::PaperReal => InitialPreset::PaperReal,
            PresetName::PaperComplex => InitialPreset::PaperComplex,
            PresetName::PlaneWave => InitialPreset::PlaneWave {
                amplitude: amplitude.unwrap_or(1.0),
                mode: mode.unwrap_or(1),
            },
            PresetName::SingleMode => InitialPreset::SingleModeLinear {
                mode: mode.unwrap_or(1),
            },
            PresetName::Zero => InitialPreset::Zero,
        };
        if command == Command::DispersionCheck
            && !matches!(problem.initial, InitialPreset::PlaneWave { .. })
        {
            bail!("`problem.preset` must be plane-wave for dispersion-check");
        }
        if let Some(t0) = raw.typed("time.t0", parse_number)? {
            problem = problem.with_t0(t0);
        }
        problem
            .validate()
            .map_err(|e| anyhow!("`{}`: {e}", key_for_problem_error(&e)))?;

        let n = raw.typed("grid.n", parse_usize)?;
        let h = raw.typed("grid.h", parse_number)?;
        let resolution = match (n, h) {
            (Some(_), Some(_)) => bail!("give only one of `grid.n` and `grid.h`"),
            (Some(n), None) => Resolution::Nodes(n),
            (None, Some(h)) => Resolution::Spacing(h),
            (None, None) => match (command, problem.domain) {
                (Command::DispersionCheck, _) => Resolution::Nodes(16),
                (_, Domain::OscillatoryWindow) => Resolution::Spacing(1.0 / 16.0),
                _ => Resolution::Nodes(128),
            },
        };

        let composition = raw
            .typed("splitting.composition", parse_composition)?
            .unwrap_or_default();
        let formulation = raw
            .typed("splitting.formulation", parse_formulation)?
            .unwrap_or_default();
        let dt = raw.typed("time.dt", parse_number)?.unwrap_or(0.01);
        let stepper = StepperConfig::new(dt)
            .with_composition(composition)
            .with_formulation(formulation);
        stepper.validate(&problem).map_err(|e| match e {
            tsfp_core::Error::UnsupportedFormulation(_) => anyhow!("`splitting.formulation`: {e}"),
            _ => anyhow!("`time.dt`: {e}"),
        })?;

        let mut config = RunConfig {
            command,
            problem,
            resolution,
            stepper,
            sweep: None,
            reference_cache: raw.typed("reference.cache", |s| Ok(PathBuf::from(s)))?,
            output: raw
                .typed("output.path", |s| Ok(PathBuf::from(s)))?
                .unwrap_or_else(|| PathBuf::from("tsfp-out")),
            observe_every: raw.typed("observe.every", parse_usize)?.unwrap_or(1).max(1),
        };
        config
            .grid()
            .map_err(|e| anyhow!("`grid.n`/`grid.h`: {e}"))?;

        if matches!(command, Command::SweepSpace | Command::SweepTime) {
            config.sweep = Some(config.build_sweep(raw)?);
        } else {
            for key in [
                "sweep.epsilons",
                "sweep.values",
                "sweep.sigma",
                "sweep.norm",
                "reference.h",
                "reference.dt",
            ] {
                if raw.get(key).is_some() {
                    bail!("`{key}` only applies to sweep-space and sweep-time");
                }
            }
        }
        Ok(config)
    }

    fn build_sweep(&self, raw: &RawConfig) -> Result<SweepSpec> {
        let axis = match self.command {
            Command::SweepSpace => SweepAxis::Spatial,
            _ => SweepAxis::Temporal,
        };
        let epsilons = raw
            .typed("sweep.epsilons", parse_list)?
            .unwrap_or_else(|| vec![self.problem.epsilon]);
        let grid_h = self.grid().map_err(|e| anyhow!("`grid.h`: {e}"))?.h();
        let values = match raw.typed("sweep.values", parse_list)? {
            Some(v) => v,
            None => match axis {
                SweepAxis::Temporal => (0..7).map(|j| 0.1 / 2f64.powi(j)).collect(),
                SweepAxis::Spatial => (0..4).map(|j| 8.0 * grid_h / 2f64.powi(j)).collect(),
            },
        };
        let finest = values.iter().copied().fold(f64::INFINITY, f64::min);
        let reference_h = raw
            .typed("reference.h", parse_number)?
            .unwrap_or(match axis {
                SweepAxis::Temporal => grid_h,
                SweepAxis::Spatial => finest / 2.0,
            });
        let reference_dt = raw.typed("reference.dt", parse_number)?.unwrap_or(1e-5);
        let mut sweep = SweepSpec::new(
            self.problem.clone(),
            axis,
            epsilons,
            values,
            ReferenceResolution::new(reference_h, reference_dt),
        )
        .with_composition(self.stepper.composition)
        .with_formulation(self.stepper.formulation);
        if let Some(sigma) = raw.typed("sweep.sigma", parse_number)? {
            sweep = sweep.with_sigma(sigma);
        }
        if let Some(norm) = raw.typed("sweep.norm", parse_norm)? {
            sweep = sweep.with_norm(norm);
        }
        sweep.validate().map_err(|e| {
            let msg = e.to_string();
            let key = if msg.contains("values") {
                "sweep.values"
            } else if msg.contains("reference") {
                "reference.h/reference.dt"
            } else if msg.contains("sigma") {
                "sweep.sigma"
            } else {
                "sweep.epsilons"
            };
            anyhow!("`{key}`: {msg}")
        })?;
        Ok(sweep)
    }
}

/// The config key responsible for a problem validation error.
fn key_for_problem_error(err: &tsfp_core::Error) -> &'static str {
    match err {
        tsfp_core::Error::InvalidParameter { name: "t0", .. } => "time.t0",
        tsfp_core::Error::InvalidParameter {
            name: "epsilon", ..
        } => "problem.epsilon",
        tsfp_core::Error::InvalidParameter { name: "beta", .. } => "problem.beta",
        tsfp_core::Error::InvalidParameter { name: "p", .. } => "problem.p",
        tsfp_core::Error::InvalidDomain { .. } => "domain.a/domain.b",
        _ => "problem.preset",
    }
}
