//! Fine-resolution reference solutions and their on-disk cache.
//!
//! Spectrum files are little-endian: a 40-byte header
//! `magic[8] | N: u64 | a: f64 | b: f64 | time: f64` followed by `N`
//! `(re, im)` pairs of `f64`, ordered by mode `l = -N/2, ..., N/2 - 1`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::integrator::{evolve, Composition, Formulation, Observers, StatePair, StepperConfig};
use crate::model::ProblemSpec;
use crate::spectral::{forward, inverse, SpectralGrid, Spectrum};

pub const SPECTRUM_MAGIC: &[u8; 8] = b"TSFPSPC1";
pub const SPECTRUM_HEADER_LEN: usize = 40;

/// Mesh size and step used for a reference run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceResolution {
    pub h: f64,
    pub dt: f64,
}

impl ReferenceResolution {
    pub fn new(h: f64, dt: f64) -> Self {
        ReferenceResolution { h, dt }
    }
}

/// Final state of a fine run, in nodal and spectral form.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub key: String,
    pub state: StatePair,
    pub u_hat: Spectrum,
    pub v_hat: Spectrum,
}

impl ReferenceSolution {
    pub fn grid(&self) -> &Arc<SpectralGrid> {
        self.state.grid()
    }

    /// Wraps a known state, such as an exact solution.
    pub fn from_state(key: String, state: StatePair) -> Self {
        let u_hat = forward(state.u());
        let v_hat = forward(state.v());
        ReferenceSolution {
            key,
            state,
            u_hat,
            v_hat,
        }
    }

    fn from_spectra(key: String, u_hat: Spectrum, v_hat: Spectrum, time: f64) -> Self {
        let state = StatePair::new(inverse(&u_hat), inverse(&v_hat), time);
        ReferenceSolution {
            key,
            state,
            u_hat,
            v_hat,
        }
    }
}

/// Content address of a reference run.
pub fn reference_key(
    spec: &ProblemSpec,
    resolution: ReferenceResolution,
    composition: Composition,
    formulation: Formulation,
) -> String {
    let (a, b) = spec.interval();
    let canonical = format!(
        "{}|p={}|eps={:e}|beta={:e}|a={:e}|b={:e}|t0={:e}|init={:?}|h={:e}|dt={:e}|{:?}|{:?}",
        spec.kind.as_str(),
        spec.p,
        spec.epsilon,
        spec.beta,
        a,
        b,
        spec.t0,
        spec.initial,
        resolution.h,
        resolution.dt,
        composition,
        formulation,
    );
    hex_digest(canonical.as_bytes())
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Reference solutions keyed by [`reference_key`], optionally backed by a
/// directory of spectrum files. Reads may happen concurrently.
#[derive(Debug, Default)]
pub struct ReferenceCache {
    entries: RwLock<HashMap<String, Arc<ReferenceSolution>>>,
    dir: Option<PathBuf>,
}

impl ReferenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cache that also persists spectra under `dir`.
    pub fn with_dir(dir: impl Into<PathBuf>) -> Self {
        ReferenceCache {
            entries: RwLock::default(),
            dir: Some(dir.into()),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<Arc<ReferenceSolution>> {
        self.entries
            .read()
            .expect("cache lock poisoned")
            .get(key)
            .cloned()
    }

    fn insert(&self, solution: ReferenceSolution) -> Arc<ReferenceSolution> {
        let mut entries = self.entries.write().expect("cache lock poisoned");
        entries
            .entry(solution.key.clone())
            .or_insert_with(|| Arc::new(solution))
            .clone()
    }

    fn paths(&self, key: &str) -> Option<(PathBuf, PathBuf)> {
        self.dir.as_ref().map(|d| {
            (
                d.join(format!("{key}.u.spec")),
                d.join(format!("{key}.v.spec")),
            )
        })
    }
}

/// Final state of `spec` computed at `resolution`, reusing `cache`.
pub fn reference_solution(
    spec: &ProblemSpec,
    resolution: ReferenceResolution,
    composition: Composition,
    formulation: Formulation,
    cache: &ReferenceCache,
) -> Result<Arc<ReferenceSolution>> {
    let key = reference_key(spec, resolution, composition, formulation);
    if let Some(hit) = cache.get(&key) {
        return Ok(hit);
    }
    if let Some((u_path, v_path)) = cache.paths(&key) {
        if u_path.exists() && v_path.exists() {
            let (u_hat, time) = read_spectrum(&u_path)?;
            let (v_hat, _) = read_spectrum(&v_path)?;
            let solution = ReferenceSolution::from_spectra(key, u_hat, v_hat, time);
            return Ok(cache.insert(solution));
        }
    }

    let grid = spec.grid_with_spacing(resolution.h)?;
    let config = StepperConfig::new(resolution.dt)
        .with_composition(composition)
        .with_formulation(formulation);
    let (state, _) = evolve(spec, &grid, &config, &Observers::default())?;
    let solution = ReferenceSolution::from_state(key.clone(), state);

    if let Some((u_path, v_path)) = cache.paths(&key) {
        if let Some(dir) = u_path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let time = solution.state.time();
        write_spectrum(&u_path, &solution.u_hat, time)?;
        write_spectrum(&v_path, &solution.v_hat, time)?;
    }
    Ok(cache.insert(solution))
}

/// Writes `spectrum` in the binary cache format.
pub fn write_spectrum(path: &Path, spectrum: &Spectrum, time: f64) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let bytes = encode_spectrum(spectrum, time);
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn encode_spectrum(spectrum: &Spectrum, time: f64) -> Vec<u8> {
    let grid = spectrum.grid();
    let n = grid.len();
    let mut out = Vec::with_capacity(SPECTRUM_HEADER_LEN + 16 * n);
    out.extend_from_slice(SPECTRUM_MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&grid.a().to_le_bytes());
    out.extend_from_slice(&grid.b().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    let half = (n / 2) as i64;
    for l in -half..half {
        let c = spectrum.coeff(l).expect("mode within grid");
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

/// Reads a spectrum file; returns the spectrum and its time stamp.
pub fn read_spectrum(path: &Path) -> Result<(Spectrum, f64)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode_spectrum(&bytes).map_err(|reason| Error::MalformedSpectrum {
        path: path.to_path_buf(),
        reason,
    })
}

pub fn decode_spectrum(bytes: &[u8]) -> std::result::Result<(Spectrum, f64), String> {
    if bytes.len() < SPECTRUM_HEADER_LEN {
        return Err(format!("{} bytes is shorter than the header", bytes.len()));
    }
    if &bytes[..8] != SPECTRUM_MAGIC {
        return Err("bad magic".into());
    }
    let word = |i: usize| -> [u8; 8] { bytes[i..i + 8].try_into().expect("8-byte slice") };
    let n = u64::from_le_bytes(word(8)) as usize;
    let a = f64::from_le_bytes(word(16));
    let b = f64::from_le_bytes(word(24));
    let time = f64::from_le_bytes(word(32));
    let expected = SPECTRUM_HEADER_LEN + 16 * n;
    if bytes.len() != expected {
        return Err(format!(
            "expected {expected} bytes for N = {n}, found {}",
            bytes.len()
        ));
    }
    let grid = SpectralGrid::new(a, b, n).map_err(|e| e.to_string())?;
    let mut spectrum = Spectrum::zeros(grid);
    let half = (n / 2) as i64;
    for (i, l) in (-half..half).enumerate() {
        let off = SPECTRUM_HEADER_LEN + 16 * i;
        let re = f64::from_le_bytes(word(off));
        let im = f64::from_le_bytes(word(off + 8));
        *spectrum.coeff_mut(l).expect("mode within grid") = Complex64::new(re, im);
    }
    Ok((spectrum, time))
}
