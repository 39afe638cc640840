use num_complex::Complex64;

use super::{jump_operator_momentum, number_operator, Boundary, FockBasis, SparseOperator};
use crate::error::{invalid, Error, Result};
use crate::parallel;

const NORM_TOL: f64 = 1e-10;

/// Finite-support amplitude profile `f(i)` of a localizing event.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationKernel {
    offsets: Vec<i64>,
    amplitudes: Vec<Complex64>,
}

impl LocalizationKernel {
    pub fn new(offsets: Vec<i64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if offsets.len() != amplitudes.len() {
            return Err(invalid("kernel offsets and amplitudes differ in length"));
        }
        if offsets.is_empty() {
            return Err(invalid("kernel needs at least one offset"));
        }
        let mut sorted = offsets.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("kernel offsets must be distinct"));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(invalid("kernel amplitudes must be finite"));
        }
        Ok(Self {
            offsets,
            amplitudes,
        })
    }

    pub fn real(offsets: Vec<i64>, amplitudes: &[f64]) -> Result<Self> {
        Self::new(
            offsets,
            amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect(),
        )
    }

    /// `f(i) = delta_{i0}`: collapse onto a single site.
    pub fn delta() -> Self {
        Self::real(vec![0], &[1.0]).unwrap()
    }

    /// `f(0) = 1/sqrt(2)`, `f(+-1) = 1/2`.
    pub fn three_point() -> Self {
        Self::real(vec![-1, 0, 1], &[0.5, std::f64::consts::FRAC_1_SQRT_2, 0.5]).unwrap()
    }

    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// `f(offset)`, zero outside the support.
    pub fn amplitude(&self, offset: i64) -> Complex64 {
        self.offsets
            .iter()
            .position(|&o| o == offset)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }

    /// `sum_i |f(i)|^2`.
    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_squared() - 1.0).abs() <= NORM_TOL
    }

    pub fn ensure_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::UnnormalizedKernel {
                norm: self.norm_squared(),
            })
        }
    }

    /// Rescaled copy with unit norm.
    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_squared().sqrt();
        if norm == 0.0 {
            return Err(invalid("cannot normalize an all-zero kernel"));
        }
        Ok(Self {
            offsets: self.offsets.clone(),
            amplitudes: self.amplitudes.iter().map(|a| a / norm).collect(),
        })
    }

    /// Amplitudes folded onto a ring of `sites` sites: entry `d` holds
    /// `sum_k f(d + k M)`.
    pub fn folded(&self, sites: usize) -> Vec<Complex64> {
        let m = sites as i64;
        let mut out = vec![Complex64::default(); sites];
        for (&o, &a) in self.offsets.iter().zip(&self.amplitudes) {
            out[o.rem_euclid(m) as usize] += a;
        }
        out
    }

    /// Site weights `w_j = f(j - center)` for a jump centered at `center`.
    ///
    /// Periodic chains fold offsets modulo `M`; hard-wall chains drop offsets
    /// that land outside the chain (no renormalization).
    pub fn site_weights(&self, sites: usize, center: usize, boundary: Boundary) -> Vec<Complex64> {
        let m = sites as i64;
        let mut w = vec![Complex64::default(); sites];
        for (&o, &a) in self.offsets.iter().zip(&self.amplitudes) {
            let j = center as i64 + o;
            match boundary {
                Boundary::Periodic => w[j.rem_euclid(m) as usize] += a,
                Boundary::HardWall => {
                    if (0..m).contains(&j) {
                        w[j as usize] += a;
                    }
                }
            }
        }
        w
    }
}

/// Probability distribution `g(p)` of quasimomentum kicks over the first
/// Brillouin zone `p = -floor(M/2), ..., ceil(M/2) - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct KickSpectrum {
    weights: Vec<f64>,
}

impl KickSpectrum {
    /// `weights[i]` is `g(p)` for `p = i - floor(M/2)`.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("kick spectrum needs at least one entry"));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(invalid("kick probabilities must be finite and non-negative"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("kick probabilities sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform(sites: usize) -> Self {
        Self {
            weights: vec![1.0 / sites as f64; sites],
        }
    }

    pub fn sites(&self) -> usize {
        self.weights.len()
    }

    /// `(p, g(p))` pairs in zone order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, f64)> + '_ {
        let offset = (self.weights.len() / 2) as i64;
        self.weights
            .iter()
            .enumerate()
            .map(move |(i, &w)| (i as i64 - offset, w))
    }
}

/// `L_l = sum_j f(j - l) n_j`.
pub fn jump_operator_kernel(
    basis: &FockBasis,
    kernel: &LocalizationKernel,
    center: usize,
    boundary: Boundary,
) -> Result<SparseOperator> {
    kernel.ensure_normalized()?;
    basis.check_site(center)?;
    let w = kernel.site_weights(basis.sites(), center, boundary);
    Ok(weighted_number_sum(basis, &w))
}

/// Diagonal operator `sum_j w_j n_j`.
pub(crate) fn weighted_number_sum(basis: &FockBasis, w: &[Complex64]) -> SparseOperator {
    SparseOperator::from_diagonal(basis.states().iter().map(|s| {
        s.iter()
            .zip(w)
            .map(|(&n, &wj)| wj * n as f64)
            .sum::<Complex64>()
    }))
}

/// `{n_0, ..., n_{M-1}}`.
pub fn site_local_jumps(basis: &FockBasis) -> Vec<SparseOperator> {
    parallel::map_indexed(basis.sites(), |i| number_operator(basis, i).expect("site in range"))
}

/// Kernel jump operators centered on every site.
pub fn kernel_jumps(
    basis: &FockBasis,
    kernel: &LocalizationKernel,
    boundary: Boundary,
) -> Result<Vec<SparseOperator>> {
    kernel.ensure_normalized()?;
    Ok(parallel::map_indexed(basis.sites(), |l| {
        weighted_number_sum(basis, &kernel.site_weights(basis.sites(), l, boundary))
    }))
}

/// Dissipator channels `(r g(p), L_p)` for a light-scattering kick spectrum.
/// A uniform spectrum reproduces the site-local dissipator.
pub fn kick_dissipators(
    basis: &FockBasis,
    spectrum: &KickSpectrum,
    rate: f64,
) -> Result<Vec<(f64, SparseOperator)>> {
    if spectrum.sites() != basis.sites() {
        return Err(Error::DimensionMismatch {
            expected: basis.sites(),
            found: spectrum.sites(),
        });
    }
    spectrum
        .iter()
        .filter(|&(_, g)| g > 0.0)
        .map(|(p, g)| Ok((rate * g, jump_operator_momentum(basis, p)?)))
        .collect()
}
