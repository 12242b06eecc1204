//! Periodic one-dimensional Fourier pseudospectral machinery.
//!
//! A [`SpectralGrid`] on `[a, b)` with `N` nodes carries the wavenumbers
//! `mu_l = 2 pi l / (b - a)` and the symbols `zeta_l = sqrt(1 + mu_l^2)` of
//! `<nabla> = sqrt(1 - Laplacian)` for `l` in `{-N/2, ..., N/2 - 1}`.
//!
//! Spectra are stored in FFT order: slot `k` holds mode `l = k` for
//! `k < N/2` and mode `l = k - N` otherwise. The lone Nyquist mode
//! `l = -N/2` therefore lives in slot `N/2`. Use [`SpectralGrid::mode`] and
//! [`SpectralGrid::slot`] to move between the two indexings.
//!
//! The forward transform carries the `1/N` factor, so the coefficients are
//! the interpolation coefficients `z~_l = (1/N) sum_j z_j e^{-i mu_l (x_j - a)}`
//! and the inverse is the plain sum `sum_l z~_l e^{i mu_l (x_j - a)}`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Uniform periodic grid together with its Fourier data and FFT plans.
pub struct SpectralGrid {
    a: f64,
    b: f64,
    n: usize,
    h: f64,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    symbols: Vec<f64>,
    fft_forward: Arc<dyn Fft<f64>>,
    fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("n", &self.n)
            .field("h", &self.h)
            .finish_non_exhaustive()
    }
}

/// Builds the grid on `[a, b)` with `n` nodes.
pub fn make_grid(a: f64, b: f64, n: usize) -> Result<Arc<SpectralGrid>> {
    SpectralGrid::new(a, b, n)
}

impl SpectralGrid {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Arc<Self>> {
        if !(a.is_finite() && b.is_finite()) || b <= a {
            return Err(Error::InvalidDomain { a, b });
        }
        if n < 4 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid { n });
        }
        let len = b - a;
        let h = len / n as f64;
        let nodes = (0..n).map(|j| a + j as f64 * h).collect();
        let wavenumbers: Vec<f64> = (0..n)
            .map(|k| 2.0 * std::f64::consts::PI * mode_of(k, n) as f64 / len)
            .collect();
        let symbols = wavenumbers
            .iter()
            .map(|mu| (1.0 + mu * mu).sqrt())
            .collect();

        let mut planner = FftPlanner::new();
        let fft_forward = planner.plan_fft_forward(n);
        let fft_inverse = planner.plan_fft_inverse(n);

        Ok(Arc::new(SpectralGrid {
            a,
            b,
            n,
            h,
            nodes,
            wavenumbers,
            symbols,
            fft_forward,
            fft_inverse,
        }))
    }

    /// Grid whose spacing is as close as possible to `h` on `[a, b)`.
    ///
    /// The node count is `(b - a) / h` rounded to the nearest even integer,
    /// so the realised spacing may differ slightly from `h` when `h` does not
    /// divide the domain.
    pub fn with_spacing(a: f64, b: f64, h: f64) -> Result<Arc<Self>> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::param(
                "h",
                format!("mesh size must be positive, got {h}"),
            ));
        }
        if b <= a {
            return Err(Error::InvalidDomain { a, b });
        }
        let n = nodes_for_spacing(b - a, h);
        Self::new(a, b, n)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Mesh size `h = (b - a) / N`.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn domain_length(&self) -> f64 {
        self.b - self.a
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Wavenumbers `mu_l` in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Symbols `zeta_l = sqrt(1 + mu_l^2)` in FFT storage order.
    pub fn symbols(&self) -> &[f64] {
        &self.symbols
    }

    /// Mode index `l` held in storage slot `k`.
    pub fn mode(&self, slot: usize) -> i64 {
        mode_of(slot, self.n)
    }

    /// Storage slot of mode `l`, if `l` lies in `{-N/2, ..., N/2 - 1}`.
    pub fn slot(&self, mode: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if mode < -half || mode >= half {
            None
        } else if mode >= 0 {
            Some(mode as usize)
        } else {
            Some((mode + self.n as i64) as usize)
        }
    }

    pub fn mu(&self, mode: i64) -> Option<f64> {
        self.slot(mode).map(|k| self.wavenumbers[k])
    }

    pub fn zeta(&self, mode: i64) -> Option<f64> {
        self.slot(mode).map(|k| self.symbols[k])
    }

    /// Same interval and node count.
    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        self.n == other.n && self.same_domain(other)
    }

    pub fn same_domain(&self, other: &SpectralGrid) -> bool {
        self.a == other.a && self.b == other.b
    }

    pub(crate) fn check_domain(&self, other: &SpectralGrid) -> Result<()> {
        if self.same_domain(other) {
            Ok(())
        } else {
            Err(Error::DomainMismatch {
                a0: self.a,
                b0: self.b,
                a1: other.a,
                b1: other.b,
            })
        }
    }

    /// Nodal values to interpolation coefficients, in place.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "buffer length must match the grid");
        self.fft_forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Interpolation coefficients to nodal values, in place.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.n, "buffer length must match the grid");
        self.fft_inverse.process(buf);
    }
}

fn mode_of(slot: usize, n: usize) -> i64 {
    if slot < n / 2 {
        slot as i64
    } else {
        slot as i64 - n as i64
    }
}

/// Even node count whose spacing on a domain of length `len` is closest to `h`.
pub fn nodes_for_spacing(len: f64, h: f64) -> usize {
    let raw = len / h;
    let n = 2.0 * (raw / 2.0).round();
    (n as usize).max(4)
}

/// Nodal values on a grid.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<SpectralGrid>,
    values: Vec<Complex64>,
}

impl Field {
    pub fn new(grid: Arc<SpectralGrid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.len(), "field length must match the grid");
        Field { grid, values }
    }

    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Field { grid, values }
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: Arc<SpectralGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes().iter().map(|&x| f(x)).collect();
        Field { grid, values }
    }

    pub fn from_real_fn(grid: Arc<SpectralGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// Largest nodal distance to `other`.
    pub fn max_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Trapezoidal (exact periodic) quadrature `h * sum_j f(z_j)`.
    pub fn integrate(&self, f: impl Fn(Complex64) -> f64) -> f64 {
        self.grid.h() * self.values.iter().map(|&z| f(z)).sum::<f64>()
    }
}

/// Interpolation coefficients of a field, in FFT storage order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    grid: Arc<SpectralGrid>,
    coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn new(grid: Arc<SpectralGrid>, coeffs: Vec<Complex64>) -> Self {
        assert_eq!(
            coeffs.len(),
            grid.len(),
            "spectrum length must match the grid"
        );
        Spectrum { grid, coeffs }
    }

    pub fn zeros(grid: Arc<SpectralGrid>) -> Self {
        let coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        Spectrum { grid, coeffs }
    }

    /// Spectrum with a single nonzero mode. Panics if `mode` is off the grid.
    pub fn single_mode(grid: Arc<SpectralGrid>, mode: i64, value: Complex64) -> Self {
        let mut s = Self::zeros(grid);
        *s.coeff_mut(mode).expect("mode outside the grid") = value;
        s
    }

    pub fn grid(&self) -> &Arc<SpectralGrid> {
        &self.grid
    }

    /// Coefficients in FFT storage order.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, mode: i64) -> Option<Complex64> {
        self.grid.slot(mode).map(|k| self.coeffs[k])
    }

    pub fn coeff_mut(&mut self, mode: i64) -> Option<&mut Complex64> {
        self.grid.slot(mode).map(move |k| &mut self.coeffs[k])
    }

    /// Coefficient-wise difference. Both spectra must live on the same grid.
    pub fn sub(&self, other: &Spectrum) -> Result<Spectrum> {
        self.grid.check_domain(&other.grid)?;
        if self.grid.len() != other.grid.len() {
            return Err(Error::UnsupportedResample {
                from: other.grid.len(),
                to: self.grid.len(),
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| x - y)
            .collect();
        Ok(Spectrum::new(self.grid.clone(), coeffs))
    }

    pub fn max_abs_diff(&self, other: &Spectrum) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Nodal values to interpolation coefficients.
pub fn forward(field: &Field) -> Spectrum {
    let mut coeffs = field.values.clone();
    field.grid.forward_in_place(&mut coeffs);
    Spectrum {
        grid: field.grid.clone(),
        coeffs,
    }
}

/// Interpolation coefficients to nodal values.
pub fn inverse(spectrum: &Spectrum) -> Field {
    let mut values = spectrum.coeffs.clone();
    spectrum.grid.inverse_in_place(&mut values);
    Field {
        grid: spectrum.grid.clone(),
        values,
    }
}

/// Multiplies every coefficient by `zeta_l^alpha`.
///
/// `alpha = 1` is `<nabla>`, `alpha = -1` its inverse and `alpha = 2` is
/// `1 - Laplacian`. Since `zeta_l >= 1` no exponent can divide by zero.
pub fn apply_symbol(spectrum: &Spectrum, alpha: f64) -> Spectrum {
    let zeta = spectrum.grid.symbols();
    let coeffs = spectrum
        .coeffs
        .iter()
        .zip(zeta)
        .map(|(c, z)| c * symbol_power(*z, alpha))
        .collect();
    Spectrum {
        grid: spectrum.grid.clone(),
        coeffs,
    }
}

fn symbol_power(zeta: f64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        zeta
    } else if alpha == -1.0 {
        1.0 / zeta
    } else {
        zeta.powf(alpha)
    }
}

/// Spectral first derivative: multiplies mode `l` by `i mu_l`.
pub fn differentiate(spectrum: &Spectrum) -> Spectrum {
    let mu = spectrum.grid.wavenumbers();
    let coeffs = spectrum
        .coeffs
        .iter()
        .zip(mu)
        .map(|(c, m)| c * Complex64::new(0.0, *m))
        .collect();
    Spectrum {
        grid: spectrum.grid.clone(),
        coeffs,
    }
}

/// `sqrt(sum_l (1 + mu_l^2)^sigma |c_l|^2)`.
///
/// This is the discrete analogue of the periodic `H^sigma` norm with no
/// `(b - a)` weight; `sigma = 0` gives the plain coefficient 2-norm.
pub fn sobolev_norm(spectrum: &Spectrum, sigma: f64) -> f64 {
    let mu = spectrum.grid.wavenumbers();
    let sum: f64 = spectrum
        .coeffs
        .iter()
        .zip(mu)
        .map(|(c, m)| {
            let w = 1.0 + m * m;
            let weight = if sigma == 0.0 { 1.0 } else { w.powf(sigma) };
            weight * c.norm_sqr()
        })
        .sum();
    sum.sqrt()
}

/// Zero-pads `spectrum` onto the finer grid `target` over the same domain.
pub fn resample(spectrum: &Spectrum, target: &Arc<SpectralGrid>) -> Result<Spectrum> {
    let source = &spectrum.grid;
    source.check_domain(target)?;
    if target.len() < source.len() {
        return Err(Error::UnsupportedResample {
            from: source.len(),
            to: target.len(),
        });
    }
    let mut out = Spectrum::zeros(target.clone());
    for (k, c) in spectrum.coeffs.iter().enumerate() {
        let slot = target
            .slot(source.mode(k))
            .expect("coarse modes fit inside the fine index set");
        out.coeffs[slot] = *c;
    }
    Ok(out)
}
