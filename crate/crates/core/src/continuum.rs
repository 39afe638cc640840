//! Single-particle localization in continuous one-dimensional space:
//! collapse onto a shape `f`, random momentum kicks, and the Gaussian closed
//! forms.
//!
//! Density operators follow the convention `rho(x, x') ~ psi^*(x) psi(x')`.
//! Position integrals use the trapezoid rule; momentum-grid distributions
//! and gridded collapse shapes are normalized by plain Riemann sums, which
//! keeps discrete Parseval identities exact.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::parallel;

/// Relative amplitude below which a function counts as vanished.
pub const AMPLITUDE_CUTOFF: f64 = 1e-8;

const NORM_TOL: f64 = 1e-8;
/// Allowed drift of a continuum density operator's trace from 1.
pub const TRACE_TOL: f64 = 1e-6;
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Offsets beyond which a collapse shape is dropped from banded sums.
const BAND_CUTOFF: f64 = 1e-12;

/// Uniform grid of `points` positions from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    min: f64,
    max: f64,
    points: usize,
}

impl Grid {
    pub fn new(min: f64, max: f64, points: usize) -> Result<Self> {
        if points < 2 {
            return Err(invalid("a grid needs at least two points"));
        }
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(invalid(format!("grid bounds [{min}, {max}] are invalid")));
        }
        Ok(Self { min, max, points })
    }

    pub fn symmetric(half_width: f64, points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, points)
    }

    /// `1024` points on `[-10 (sigma0 + l), 10 (sigma0 + l)]`.
    pub fn for_collapse(sigma0: f64, l: f64) -> Result<Self> {
        Self::symmetric(10.0 * (sigma0 + l), 1024)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / (self.points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.min + i as f64 * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.points).map(|i| self.x(i)).collect()
    }

    fn trapezoid_weight(&self, i: usize) -> f64 {
        if i == 0 || i + 1 == self.points {
            0.5 * self.spacing()
        } else {
            self.spacing()
        }
    }

    /// Trapezoid rule for samples on this grid.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| v * self.trapezoid_weight(i))
            .sum()
    }

    fn same_as(&self, other: &Grid) -> bool {
        self.points == other.points
            && (self.min - other.min).abs() <= 1e-12 * self.spacing()
            && (self.max - other.max).abs() <= 1e-12 * self.spacing()
    }
}

/// Normalized wavefunction sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionGrid {
    grid: Grid,
    amplitudes: Vec<Complex64>,
}

impl WavefunctionGrid {
    /// Requires unit norm (trapezoid, within 1e-8) and boundary amplitudes
    /// below 1e-8 of the peak.
    pub fn new(grid: Grid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.points() {
            return Err(Error::DimensionMismatch {
                expected: grid.points(),
                found: amplitudes.len(),
            });
        }
        let density: Vec<f64> = amplitudes.iter().map(|z| z.norm_sqr()).collect();
        let norm = grid.integrate(&density);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("wavefunction norm {norm} differs from 1")));
        }
        let peak = amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let edge = amplitudes[0].norm().max(amplitudes[amplitudes.len() - 1].norm());
        if edge >= AMPLITUDE_CUTOFF * peak {
            return Err(invalid(format!(
                "wavefunction reaches the grid edge ({:.2e} of peak)",
                edge / peak
            )));
        }
        Ok(Self { grid, amplitudes })
    }

    /// `(2 pi)^{-1/4} sigma0^{-1/2} exp(-x^2 / 4 sigma0^2)`, renormalized on the grid.
    pub fn gaussian(sigma0: f64, grid: Grid) -> Result<Self> {
        if !(sigma0 > 0.0) {
            return Err(invalid(format!("width {sigma0} must be positive")));
        }
        let raw: Vec<Complex64> = grid
            .positions()
            .iter()
            .map(|&x| Complex64::new(gaussian_amplitude(x, sigma0), 0.0))
            .collect();
        Self::new(grid, renormalize(&grid, raw))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Index range where `|psi|` is at least 1e-8 of its peak.
    fn support(&self) -> (usize, usize) {
        let peak = self.amplitudes.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let keep = |z: &Complex64| z.norm() >= AMPLITUDE_CUTOFF * peak;
        let lo = self.amplitudes.iter().position(keep).unwrap_or(0);
        let hi = self.amplitudes.iter().rposition(keep).unwrap_or(0);
        (lo, hi)
    }
}

fn gaussian_amplitude(x: f64, width: f64) -> f64 {
    (2.0 * PI).powf(-0.25) / width.sqrt() * (-x * x / (4.0 * width * width)).exp()
}

fn renormalize(grid: &Grid, values: Vec<Complex64>) -> Vec<Complex64> {
    let norm = grid
        .integrate(&values.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>())
        .sqrt();
    values.into_iter().map(|z| z / norm).collect()
}

/// Shape `f(x)` of the wavepacket left by a collapse, centered at `x = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum CollapseShape {
    /// `(2 pi)^{-1/4} l^{-1/2} exp(-x^2 / 4 l^2)`.
    Gaussian { width: f64 },
    /// Samples on a uniform grid, linearly interpolated and zero outside it.
    Gridded { grid: Grid, values: Vec<Complex64> },
}

impl CollapseShape {
    pub fn gaussian(width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(invalid(format!("collapse width {width} must be positive")));
        }
        Ok(Self::Gaussian { width })
    }

    /// Requires `sum |f|^2 dx = 1` within 1e-8.
    pub fn gridded(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.points() {
            return Err(Error::DimensionMismatch {
                expected: grid.points(),
                found: values.len(),
            });
        }
        let norm: f64 = values.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("collapse shape norm {norm} differs from 1")));
        }
        Ok(Self::Gridded { grid, values })
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        match self {
            Self::Gaussian { width } => Complex64::new(gaussian_amplitude(x, *width), 0.0),
            Self::Gridded { grid, values } => {
                if x < grid.min() || x > grid.max() {
                    return Complex64::default();
                }
                let s = (x - grid.min()) / grid.spacing();
                let i = (s.floor() as usize).min(grid.points() - 2);
                let t = s - i as f64;
                values[i] * (1.0 - t) + values[i + 1] * t
            }
        }
    }

    fn peak(&self) -> f64 {
        match self {
            Self::Gaussian { width } => gaussian_amplitude(0.0, *width),
            Self::Gridded { values, .. } => values.iter().map(|z| z.norm()).fold(0.0, f64::max),
        }
    }

    /// Distance from the origin beyond which `f` is negligible.
    fn reach(&self) -> f64 {
        match self {
            Self::Gaussian { width } => width * (4.0 * (1.0 / BAND_CUTOFF).ln()).sqrt(),
            Self::Gridded { grid, .. } => grid.min().abs().max(grid.max().abs()),
        }
    }

    /// RMS width of `|f|^2`; equals `l` for the Gaussian.
    pub fn rms_width(&self) -> f64 {
        match self {
            Self::Gaussian { width } => *width,
            Self::Gridded { grid, values } => {
                let dx = grid.spacing();
                let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
                for (i, z) in values.iter().enumerate() {
                    let x = grid.x(i);
                    let w = z.norm_sqr() * dx;
                    m0 += w;
                    m1 += w * x;
                    m2 += w * x * x;
                }
                let mean = m1 / m0;
                (m2 / m0 - mean * mean).max(0.0).sqrt()
            }
        }
    }

    /// Full width at half maximum of `|f|`.
    pub fn fwhm(&self) -> f64 {
        match self {
            Self::Gaussian { width } => 4.0 * width * 2f64.ln().sqrt(),
            Self::Gridded { grid, values } => {
                let mag: Vec<f64> = values.iter().map(|z| z.norm()).collect();
                let (top, peak) = mag
                    .iter()
                    .copied()
                    .enumerate()
                    .fold((0, 0.0), |a, (i, v)| if v > a.1 { (i, v) } else { a });
                let half = peak / 2.0;
                let crossing = |range: &mut dyn Iterator<Item = usize>, step: isize| -> f64 {
                    for i in range {
                        let j = (i as isize + step) as usize;
                        if mag[j] < half {
                            let t = (mag[i] - half) / (mag[i] - mag[j]);
                            return grid.x(i) + t * (grid.x(j) - grid.x(i));
                        }
                    }
                    if step > 0 {
                        grid.max()
                    } else {
                        grid.min()
                    }
                };
                let right = crossing(&mut (top..mag.len() - 1), 1);
                let left = crossing(&mut (1..=top).rev(), -1);
                right - left
            }
        }
    }

    /// `int f^*(x) f(x + d) dx`; analytic `exp(-d^2 / 8 l^2)` for the
    /// Gaussian, a lag sum for gridded shapes (interpolated between lags).
    pub fn autocorrelation(&self, d: f64) -> Complex64 {
        match self {
            Self::Gaussian { width } => Complex64::new((-d * d / (8.0 * width * width)).exp(), 0.0),
            Self::Gridded { grid, values } => {
                let dx = grid.spacing();
                let s = d / dx;
                let lo = s.floor();
                let t = s - lo;
                let lag = |m: i64| -> Complex64 {
                    let n = values.len() as i64;
                    let mut acc = Complex64::default();
                    for i in 0..n {
                        let j = i + m;
                        if (0..n).contains(&j) {
                            acc += values[i as usize].conj() * values[j as usize];
                        }
                    }
                    acc * dx
                };
                let a = lag(lo as i64);
                if t == 0.0 {
                    a
                } else {
                    a * (1.0 - t) + lag(lo as i64 + 1) * t
                }
            }
        }
    }

    /// Samples `f(k dx)` for `|k| <= K`, `K` the band half-width in steps.
    fn offsets(&self, dx: f64) -> (usize, Vec<Complex64>) {
        let k = (self.reach() / dx).ceil() as usize;
        let table = (0..=2 * k)
            .map(|i| self.eval((i as f64 - k as f64) * dx))
            .collect();
        (k, table)
    }

    fn leak(&self, grid: &Grid, x0: f64) -> f64 {
        let peak = self.peak();
        match self {
            Self::Gaussian { .. } => {
                if x0 < grid.min() || x0 > grid.max() {
                    return 1.0;
                }
                let edge = self
                    .eval(grid.min() - x0)
                    .norm()
                    .max(self.eval(grid.max() - x0).norm());
                edge / peak
            }
            Self::Gridded { grid: own, values } => values
                .iter()
                .enumerate()
                .filter(|(i, _)| {
                    let x = own.x(*i) + x0;
                    x < grid.min() || x > grid.max()
                })
                .map(|(_, z)| z.norm() / peak)
                .fold(0.0, f64::max),
        }
    }
}

/// Kick probability density `p(k)` on `k_j = k0 + j dk`.
#[derive(Debug, Clone, PartialEq)]
pub struct KickDistribution {
    k0: f64,
    dk: f64,
    weights: Vec<f64>,
}

impl KickDistribution {
    /// Requires non-negative weights with `sum p dk = 1` within 1e-8.
    pub fn new(k0: f64, dk: f64, weights: Vec<f64>) -> Result<Self> {
        if !(dk > 0.0) || !dk.is_finite() || !k0.is_finite() {
            return Err(invalid(format!("kick grid k0={k0}, dk={dk} is invalid")));
        }
        if weights.is_empty() {
            return Err(invalid("kick distribution needs at least one bin"));
        }
        if let Some(p) = weights.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(invalid(format!("kick density {p} must be non-negative")));
        }
        let total: f64 = weights.iter().sum::<f64>() * dk;
        if (total - 1.0).abs() > NORM_TOL {
            return Err(invalid(format!("kick density integrates to {total}, not 1")));
        }
        Ok(Self { k0, dk, weights })
    }

    /// Rescales arbitrary non-negative samples to unit integral.
    pub fn from_samples(k0: f64, dk: f64, samples: Vec<f64>) -> Result<Self> {
        let total: f64 = samples.iter().sum::<f64>() * dk;
        if !(total > 0.0) || !total.is_finite() {
            return Err(invalid("kick samples must have a positive finite integral"));
        }
        Self::new(k0, dk, samples.into_iter().map(|p| p / total).collect())
    }

    /// `exp(-(k - center)^2 / 2 s^2)` on `points` bins spanning `center +- 8 s`.
    pub fn gaussian(center: f64, s: f64, points: usize) -> Result<Self> {
        if !(s > 0.0) || points < 2 {
            return Err(invalid("Gaussian kick spectrum needs s > 0 and two bins"));
        }
        let dk = 16.0 * s / points as f64;
        let k0 = center - 8.0 * s;
        let samples = (0..points)
            .map(|j| {
                let k = k0 + j as f64 * dk - center;
                (-k * k / (2.0 * s * s)).exp()
            })
            .collect();
        Self::from_samples(k0, dk, samples)
    }

    /// Flat density on `[-kmax, kmax]`, bin centers at `-kmax + (j + 1/2) dk`.
    pub fn uniform(kmax: f64, points: usize) -> Result<Self> {
        if !(kmax > 0.0) || points == 0 {
            return Err(invalid("uniform kick spectrum needs kmax > 0 and bins"));
        }
        let dk = 2.0 * kmax / points as f64;
        Self::new(-kmax + dk / 2.0, dk, vec![1.0 / (2.0 * kmax); points])
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    pub fn dk(&self) -> f64 {
        self.dk
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn k(&self, j: usize) -> f64 {
        self.k0 + j as f64 * self.dk
    }

    /// `int p(k) exp(-i k d) dk`.
    pub fn characteristic(&self, d: f64) -> Complex64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, p)| Complex64::from_polar(p * self.dk, -self.k(j) * d))
            .sum()
    }
}

/// `rho(x_i, x_j)` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumDensityOperator {
    grid: Grid,
    matrix: DMatrix<Complex64>,
}

impl ContinuumDensityOperator {
    /// Requires Hermiticity within 1e-10, non-negative diagonal and unit
    /// trapezoid trace within 1e-6.
    pub fn new(grid: Grid, matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != grid.points() || matrix.ncols() != grid.points() {
            return Err(Error::DimensionMismatch {
                expected: grid.points(),
                found: matrix.nrows(),
            });
        }
        let rho = Self { grid, matrix };
        let n = grid.points();
        for i in 0..n {
            for j in i..n {
                let d = (rho.matrix[(i, j)] - rho.matrix[(j, i)].conj()).norm();
                if d > HERMITICITY_TOL {
                    return Err(invalid(format!("density operator not Hermitian ({d:.2e})")));
                }
            }
            if rho.matrix[(i, i)].re < -HERMITICITY_TOL {
                return Err(invalid("density operator has a negative diagonal"));
            }
        }
        let trace = rho.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(invalid(format!("density operator trace {trace} differs from 1")));
        }
        Ok(rho)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    /// `rho(x, x)`.
    pub fn diagonal(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// `int rho(x, x) dx`.
    pub fn trace(&self) -> f64 {
        self.grid.integrate(&self.diagonal())
    }

    /// `|rho(x_i, x_j)| / sqrt(rho(x_i, x_i) rho(x_j, x_j))`.
    pub fn coherence(&self, i: usize, j: usize) -> f64 {
        let d = (self.matrix[(i, i)].re * self.matrix[(j, j)].re).sqrt();
        if d > 0.0 {
            self.matrix[(i, j)].norm() / d
        } else {
            0.0
        }
    }

    /// `int int |rho(x, x')|^2 dx dx'`.
    pub fn purity(&self) -> f64 {
        let n = self.grid.points();
        let mut acc = 0.0;
        for j in 0..n {
            for i in 0..n {
                acc += self.matrix[(i, j)].norm_sqr()
                    * self.grid.trapezoid_weight(i)
                    * self.grid.trapezoid_weight(j);
            }
        }
        acc
    }
}

/// `p(x0, f) = |int f^*(x - x0) psi(x) dx|^2`.
pub fn collapse_probability(psi: &WavefunctionGrid, f: &CollapseShape, x0: f64) -> Result<f64> {
    let grid = psi.grid();
    let leak = f.leak(grid, x0);
    if leak >= AMPLITUDE_CUTOFF {
        return Err(invalid(format!(
            "collapse shape at x0 = {x0} leaks past the grid ({leak:.2e} of peak)"
        )));
    }
    let overlap: Complex64 = psi
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(i, a)| f.eval(grid.x(i) - x0).conj() * a * grid.trapezoid_weight(i))
        .sum();
    Ok(overlap.norm_sqr())
}

/// Density operator after a collapse of unknown location,
/// `rho(x, x') = int p(x0) f^*(x - x0) f(x' - x0) dx0 / int p(x0) dx0`.
///
/// `x0` runs over the wavefunction grid, which must contain the support of
/// `psi` padded by five widths of `f`. Sums are restricted to the band where
/// `f` is non-negligible; the result is renormalized to unit trace and the
/// raw trace is logged.
pub fn collapse_density_operator(
    psi: &WavefunctionGrid,
    f: &CollapseShape,
) -> Result<ContinuumDensityOperator> {
    let grid = *psi.grid();
    let n = grid.points();
    let dx = grid.spacing();
    let (lo, hi) = psi.support();
    let pad = 5.0 * f.rms_width();
    if grid.x(lo) - pad < grid.min() || grid.x(hi) + pad > grid.max() {
        return Err(invalid(format!(
            "x0 range [{}, {}] does not cover the wavefunction support [{}, {}] padded by {pad}",
            grid.min(),
            grid.max(),
            grid.x(lo),
            grid.x(hi)
        )));
    }
    let (k, table) = f.offsets(dx);
    let k = k as isize;
    let shape = |offset: isize| -> Complex64 {
        if offset.abs() > k {
            Complex64::default()
        } else {
            table[(offset + k) as usize]
        }
    };
    let amps = psi.amplitudes();

    // p(x0_m) with trapezoid weights in x and x0 folded in
    let weights: Vec<f64> = parallel::map_indexed(n, |m| {
        let from = (m as isize - k).max(0) as usize;
        let to = ((m as isize + k) as usize).min(n - 1);
        let overlap: Complex64 = (from..=to)
            .map(|i| shape(i as isize - m as isize).conj() * amps[i] * grid.trapezoid_weight(i))
            .sum();
        overlap.norm_sqr() * grid.trapezoid_weight(m)
    });
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(invalid("collapse probability vanishes everywhere on the grid"));
    }

    let rows: Vec<Vec<(usize, Complex64)>> = parallel::map_indexed(n, |i| {
        let i = i as isize;
        let jlo = (i - 2 * k).max(0);
        let jhi = (i + 2 * k).min(n as isize - 1);
        let mut row = Vec::with_capacity((jhi - jlo + 1) as usize);
        for j in jlo..=jhi {
            let mlo = (i.max(j) - k).max(0);
            let mhi = (i.min(j) + k).min(n as isize - 1);
            let mut acc = Complex64::default();
            for m in mlo..=mhi {
                acc += shape(i - m).conj() * shape(j - m) * weights[m as usize];
            }
            if acc != Complex64::default() {
                row.push((j as usize, acc / total));
            }
        }
        row
    });
    let mut matrix = DMatrix::<Complex64>::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row {
            matrix[(i, j)] = v;
        }
    }
    let raw = grid.integrate(&matrix.diagonal().iter().map(|z| z.re).collect::<Vec<_>>());
    log::info!("collapse density operator: raw trace {raw:.12}");
    matrix /= Complex64::new(raw, 0.0);
    ContinuumDensityOperator::new(grid, matrix)
}

/// Closed forms for a Gaussian wavefunction of width `sigma0` collapsing
/// onto a Gaussian shape of width `l`, with `sigma^2 = sigma0^2 + l^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCollapse {
    pub sigma0: f64,
    pub l: f64,
    pub sigma: f64,
}

impl GaussianCollapse {
    /// `p(x0) = (2 sigma0 l / sigma^2) exp(-x0^2 / 2 sigma^2)`.
    pub fn probability(&self, x0: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        2.0 * self.sigma0 * self.l / s2 * (-x0 * x0 / (2.0 * s2)).exp()
    }

    /// Exact `rho(x, x')`.
    pub fn density(&self, x: f64, xp: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let l2 = self.l * self.l;
        let t = s2 + l2;
        let d = x - xp;
        (2.0 * PI * t).sqrt().recip()
            * (-(x * x + xp * xp) / (4.0 * t)).exp()
            * (-d * d * s2 / (8.0 * l2 * t)).exp()
    }

    /// `rho(x, x') / sqrt(rho(x, x) rho(x', x'))`.
    pub fn coherence(&self, d: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let l2 = self.l * self.l;
        (-d * d * s2 / (8.0 * l2 * (s2 + l2))).exp()
    }

    /// Limit `sigma0 >> l`: `psi^*(x) psi(x') exp(-(x - x')^2 / 8 l^2)`.
    pub fn density_limit(&self, x: f64, xp: f64) -> f64 {
        let d = x - xp;
        gaussian_amplitude(x, self.sigma0)
            * gaussian_amplitude(xp, self.sigma0)
            * (-d * d / (8.0 * self.l * self.l)).exp()
    }
}

pub fn gaussian_collapse_closed_form(sigma0: f64, l: f64) -> Result<GaussianCollapse> {
    if !(sigma0 > 0.0) || !(l > 0.0) || !sigma0.is_finite() || !l.is_finite() {
        return Err(invalid(format!("widths sigma0={sigma0}, l={l} must be positive")));
    }
    Ok(GaussianCollapse {
        sigma0,
        l,
        sigma: (sigma0 * sigma0 + l * l).sqrt(),
    })
}

/// `rho(x, x') = [int p(k) exp(-i k (x - x')) dk] psi^*(x) psi(x')`.
///
/// The kick grid must resolve every separation on the x grid:
/// `2 pi / dk >= 2 (x_max - x_min)`.
pub fn kick_density_operator(
    psi: &WavefunctionGrid,
    p: &KickDistribution,
) -> Result<ContinuumDensityOperator> {
    let grid = *psi.grid();
    let span = grid.max() - grid.min();
    if 2.0 * PI / p.dk() < 2.0 * span {
        return Err(invalid(format!(
            "kick grid spacing {} aliases separations up to {span}; need dk <= {}",
            p.dk(),
            PI / span
        )));
    }
    let n = grid.points();
    let dx = grid.spacing();
    let zero = p.characteristic(0.0);
    let chi: Vec<Complex64> = parallel::map_indexed(2 * n - 1, |s| {
        p.characteristic((s as f64 - (n - 1) as f64) * dx) / zero
    });
    let a = psi.amplitudes();
    let matrix = DMatrix::from_fn(n, n, |i, j| chi[i + n - 1 - j] * a[i].conj() * a[j]);
    ContinuumDensityOperator::new(grid, matrix)
}

/// `f(x) = (2 pi)^{-1/2} int exp(-i k x) sqrt(p(k)) dk` by FFT.
///
/// The spectrum is zero-padded to at least 1024 bins (a power of two), which
/// refines the x grid without changing its extent `2 pi / dk`. The result
/// lives on `x_m = (m - n/2) dx`, `dx = 2 pi / (n dk)`.
pub fn kernel_from_kick_spectrum(p: &KickDistribution) -> Result<CollapseShape> {
    let n = p.weights().len().max(1024).next_power_of_two();
    let dk = p.dk();
    let dx = 2.0 * PI / (n as f64 * dk);
    let half = (n / 2) as f64;
    let mut buffer: Vec<Complex64> = (0..n)
        .map(|j| {
            let amp = p.weights().get(j).map_or(0.0, |w| w.sqrt());
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(amp * sign, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);
    let scale = dk / (2.0 * PI).sqrt();
    let values: Vec<Complex64> = buffer
        .iter()
        .enumerate()
        .map(|(m, z)| {
            let x = (m as f64 - half) * dx;
            z * Complex64::from_polar(scale, -p.k0() * x)
        })
        .collect();
    let grid = Grid::new(-half * dx, (n as f64 - 1.0 - half) * dx, n)?;
    CollapseShape::gridded(grid, values)
}

/// Sup-norm of `rho(x, x') - psi^*(x) psi(x') g(x - x')` over `|x - x'| <= band`,
/// relative to the peak of `|rho|`.
pub fn factorization_residual(
    rho: &ContinuumDensityOperator,
    psi: &WavefunctionGrid,
    g: impl Fn(f64) -> Complex64,
    band: f64,
) -> Result<f64> {
    if !rho.grid().same_as(psi.grid()) {
        return Err(invalid("density operator and wavefunction use different grids"));
    }
    let grid = rho.grid();
    let n = grid.points();
    let dx = grid.spacing();
    let width = (band / dx + 1e-9).floor() as usize;
    let a = psi.amplitudes();
    let peak = rho.matrix().iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(width)..=(i + width).min(n - 1) {
            let model = a[i].conj() * a[j] * g(grid.x(i) - grid.x(j));
            worst = worst.max((rho.get(i, j) - model).norm());
        }
    }
    Ok(worst / peak)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = Grid::new(-1.0, 1.0, 5).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.x(4), 1.0);
        assert!((g.integrate(&[1.0; 5]) - 2.0).abs() < 1e-15);
        assert!(Grid::new(1.0, 1.0, 5).is_err());
        assert!(Grid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn wavefunction_invariants() {
        let g = Grid::symmetric(10.0, 512).unwrap();
        assert!(WavefunctionGrid::gaussian(1.0, g).is_ok());
        // wide packet touches the edge
        assert!(WavefunctionGrid::gaussian(4.0, g).is_err());
        assert!(WavefunctionGrid::new(g, vec![Complex64::default(); 512]).is_err());
    }

    #[test]
    fn gaussian_shape_is_normalized() {
        let f = CollapseShape::gaussian(0.7).unwrap();
        let g = Grid::symmetric(10.0, 2001).unwrap();
        let dens: Vec<f64> = g.positions().iter().map(|&x| f.eval(x).norm_sqr()).collect();
        assert!((g.integrate(&dens) - 1.0).abs() < 1e-12);
        assert!((f.fwhm() - 4.0 * 0.7 * 2f64.ln().sqrt()).abs() < 1e-15);
    }

    #[test]
    fn gridded_interpolation() {
        let grid = Grid::new(0.0, 1.0, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v = vec![Complex64::new(h, 0.0), Complex64::new(0.0, h)];
        let f = CollapseShape::gridded(grid, v).unwrap();
        assert_eq!(f.eval(0.5), Complex64::new(h / 2.0, h / 2.0));
        assert_eq!(f.eval(1.5), Complex64::default());
    }

    #[test]
    fn kick_distribution_validation() {
        assert!(KickDistribution::new(0.0, 0.5, vec![1.0, 1.0]).is_ok());
        assert!(KickDistribution::new(0.0, 0.5, vec![1.0, 0.5]).is_err());
        assert!(KickDistribution::new(0.0, 0.5, vec![2.5, -0.5]).is_err());
        let u = KickDistribution::uniform(2.0, 8).unwrap();
        assert!((u.characteristic(0.0) - 1.0).norm() < 1e-15);
    }

    #[test]
    fn closed_form_values() {
        let c = gaussian_collapse_closed_form(1.0, 1.0).unwrap();
        assert!((c.sigma - 2f64.sqrt()).abs() < 1e-15);
        assert!((c.probability(0.0) - 1.0).abs() < 1e-15);
        let a = gaussian_collapse_closed_form(3.0, 0.5).unwrap();
        let b = gaussian_collapse_closed_form(0.5, 3.0).unwrap();
        assert_eq!(a.sigma, b.sigma);
        assert!(gaussian_collapse_closed_form(0.0, 1.0).is_err());
        assert!(gaussian_collapse_closed_form(1.0, -1.0).is_err());
    }

    #[test]
    fn density_closed_form_is_normalized() {
        let c = gaussian_collapse_closed_form(2.0, 0.5).unwrap();
        let g = Grid::symmetric(40.0, 4001).unwrap();
        let diag: Vec<f64> = g.positions().iter().map(|&x| c.density(x, x)).collect();
        assert!((g.integrate(&diag) - 1.0).abs() < 1e-12);
        let d = 1.3;
        let ratio = c.density(0.2, 0.2 + d) / (c.density(0.2, 0.2) * c.density(0.2 + d, 0.2 + d)).sqrt();
        assert!((ratio - c.coherence(d)).abs() < 1e-14);
    }
}
