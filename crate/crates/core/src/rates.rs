//! Closed-form damping rates: kernel factors, fluctuating-potential noise
//! and its Lindblad form, and the heuristic condensate damping estimate.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lattice::{weighted_number_sum, FockBasis, LocalizationKernel, SparseOperator};

/// Tolerance for spectrum symmetry and positivity checks, relative to the largest entry.
const NOISE_TOL: f64 = 1e-10;

/// `f^2-bar = sum_i |f(-i) - f(1 - i)|^2` for a kernel on the infinite line.
pub fn fbar_squared(kernel: &LocalizationKernel) -> Result<f64> {
    kernel.ensure_normalized()?;
    let lo = kernel.offsets().iter().min().copied().unwrap_or(0);
    let hi = kernel.offsets().iter().max().copied().unwrap_or(0);
    Ok(((lo - 1)..=hi)
        .map(|o| (kernel.amplitude(o) - kernel.amplitude(o + 1)).norm_sqr())
        .sum())
}

/// `f^2-bar` for a kernel folded onto a ring of `sites` sites.
pub fn fbar_squared_ring(kernel: &LocalizationKernel, sites: usize) -> Result<f64> {
    kernel.ensure_normalized()?;
    if sites == 0 {
        return Err(invalid("ring needs at least one site"));
    }
    Ok(ring_difference_sum(&kernel.folded(sites)))
}

/// `sum_l |g_{-l} - g_{1-l}|^2` with indices mod `M`.
fn ring_difference_sum(g: &[Complex64]) -> f64 {
    let m = g.len();
    (0..m)
        .map(|l| (g[(m - l) % m] - g[(m + 1 - l) % m]).norm_sqr())
        .sum()
}

/// Which localizing events damp the center-of-mass velocity.
#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    SiteLocal,
    Kernel(LocalizationKernel),
}

/// Velocity damping constant: `2 r` for site-local events, `f^2-bar r` for a kernel.
pub fn cm_damping_rate(rate: f64, kind: &EventKind) -> Result<f64> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return Err(invalid(format!("event rate {rate} must be non-negative")));
    }
    match kind {
        EventKind::SiteLocal => Ok(2.0 * rate),
        EventKind::Kernel(k) => Ok(fbar_squared(k)? * rate),
    }
}

/// Homogeneous fluctuating potential on a ring of `M` sites with correlation
/// time `tau_c`.
///
/// Stored as the spectrum `S_k = <|V~_k|^2>`, `k = 0..M`; the equal-time
/// correlations are `c_d = <V_j V_{j+d}> = M^{-1} sum_k S_k e^{2 pi i d k / M}`.
/// Real potentials need `S_k = S_{M-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    tau_c: f64,
    spectrum: Vec<f64>,
}

impl NoiseModel {
    pub fn from_spectrum(tau_c: f64, spectrum: Vec<f64>) -> Result<Self> {
        if !(tau_c >= 0.0) || !tau_c.is_finite() {
            return Err(invalid(format!("correlation time {tau_c} must be non-negative")));
        }
        if spectrum.is_empty() {
            return Err(invalid("noise spectrum needs at least one mode"));
        }
        if let Some(s) = spectrum.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(invalid(format!("spectral weight {s} must be non-negative")));
        }
        let m = spectrum.len();
        let scale = spectrum.iter().cloned().fold(0.0, f64::max);
        for k in 1..m {
            if (spectrum[k] - spectrum[m - k]).abs() > NOISE_TOL * scale {
                return Err(invalid(format!(
                    "spectrum must satisfy S_k = S_(M-k) for a real potential (k = {k})"
                )));
            }
        }
        Ok(Self { tau_c, spectrum })
    }

    /// From correlations `c_d = <V_j V_{j+d}>`, `d = 0..M`; the circulant
    /// matrix they define must be symmetric and positive semidefinite.
    pub fn from_correlations(tau_c: f64, correlations: &[f64]) -> Result<Self> {
        let m = correlations.len();
        if m == 0 {
            return Err(invalid("noise correlations need at least one entry"));
        }
        let scale = correlations.iter().map(|c| c.abs()).fold(0.0, f64::max);
        for d in 1..m {
            if (correlations[d] - correlations[m - d]).abs() > NOISE_TOL * scale.max(1e-300) {
                return Err(invalid(format!("correlations must satisfy c_d = c_(M-d) (d = {d})")));
            }
        }
        // eigenvalues of the circulant are the spectral weights
        let spectrum: Vec<f64> = (0..m)
            .map(|k| {
                correlations
                    .iter()
                    .enumerate()
                    .map(|(d, c)| c * (TAU * (d * k) as f64 / m as f64).cos())
                    .sum::<f64>()
            })
            .collect();
        let floor = -NOISE_TOL * scale.max(1e-300) * m as f64;
        if let Some(s) = spectrum.iter().find(|s| **s < floor) {
            return Err(invalid(format!(
                "correlation matrix is not positive semidefinite (eigenvalue {s:.3e})"
            )));
        }
        Self::from_spectrum(tau_c, spectrum.into_iter().map(|s| s.max(0.0)).collect())
    }

    /// Spectrum `v^2` for every mode: uncorrelated sites of variance `v^2`.
    pub fn flat(sites: usize, tau_c: f64, variance: f64) -> Result<Self> {
        Self::from_spectrum(tau_c, vec![variance; sites])
    }

    pub fn sites(&self) -> usize {
        self.spectrum.len()
    }

    pub fn tau_c(&self) -> f64 {
        self.tau_c
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// `c_d`, `d = 0..M`.
    pub fn correlations(&self) -> Vec<f64> {
        let m = self.sites();
        (0..m)
            .map(|d| {
                self.spectrum
                    .iter()
                    .enumerate()
                    .map(|(k, s)| s * (TAU * (d * k) as f64 / m as f64).cos())
                    .sum::<f64>()
                    / m as f64
            })
            .collect()
    }

    /// `<V_i V_j>`.
    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let m = self.sites();
        let d = (j + m - i % m) % m;
        self.correlations()[d]
    }
}

/// `gamma = (4 tau_c / M) sum_k S_k sin^2(pi k / M)`.
pub fn gamma_from_spectrum(noise: &NoiseModel) -> f64 {
    let m = noise.sites() as f64;
    4.0 * noise.tau_c() / m
        * noise
            .spectrum()
            .iter()
            .enumerate()
            .map(|(k, s)| s * (PI * k as f64 / m).sin().powi(2))
            .sum::<f64>()
}

/// `gamma = (tau_c / M) sum_i <(V_i - V_{i+1})^2>`.
pub fn gamma_from_realspace(noise: &NoiseModel) -> f64 {
    let m = noise.sites();
    let c = noise.correlations();
    let bond = |i: usize| {
        let j = (i + 1) % m;
        // <V_i^2> + <V_j^2> - <V_i V_j> - <V_j V_i>
        2.0 * c[0] - c[(j + m - i) % m] - c[(i + m - j) % m]
    };
    noise.tau_c() / m as f64 * (0..m).map(bond).sum::<f64>()
}

/// Lindblad form of a noise model: rate `r = tau_c / M` and operators
/// `L_l = sum_j g_{j-l} n_j`, with `g_l = M^{-1/2} sum_k sqrt(S_k) e^{2 pi i k l / M}`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseLindblad {
    pub rate: f64,
    /// `g_l` for `l = 0..M`, indices mod `M`.
    pub kernel: Vec<Complex64>,
}

impl NoiseLindblad {
    /// `L_l` for `l = 0..M` on a ring.
    pub fn jump_operators(&self, basis: &FockBasis) -> Result<Vec<SparseOperator>> {
        let m = self.kernel.len();
        if basis.sites() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: basis.sites(),
            });
        }
        Ok((0..m)
            .map(|l| {
                let w: Vec<Complex64> = (0..m).map(|j| self.kernel[(j + m - l) % m]).collect();
                weighted_number_sum(basis, &w)
            })
            .collect())
    }

    /// `(r, L_l)` pairs ready for a master-equation run.
    pub fn channels(&self, basis: &FockBasis) -> Result<Vec<(f64, SparseOperator)>> {
        Ok(self
            .jump_operators(basis)?
            .into_iter()
            .map(|l| (self.rate, l))
            .collect())
    }

    /// `sum_l g^*_{j'-l} g_{j-l}`, which equals `M <V_j V_j'>`.
    pub fn kernel_correlation(&self, j: usize, jp: usize) -> Complex64 {
        let m = self.kernel.len();
        (0..m)
            .map(|l| self.kernel[(jp + m - l) % m].conj() * self.kernel[(j + m - l) % m])
            .sum()
    }

    /// `r sum_l |g_{-l} - g_{1-l}|^2`.
    pub fn velocity_damping(&self) -> f64 {
        self.rate * ring_difference_sum(&self.kernel)
    }

    /// Same dissipator written as a normalized kernel and an effective rate
    /// `r sum_l |g_l|^2`.
    pub fn normalized(&self) -> Result<(f64, LocalizationKernel)> {
        let norm: f64 = self.kernel.iter().map(|z| z.norm_sqr()).sum();
        if !(norm > 0.0) {
            return Err(invalid("noise spectrum vanishes; there is no kernel to normalize"));
        }
        let offsets = (0..self.kernel.len() as i64).collect();
        let amps = self.kernel.iter().map(|z| z / norm.sqrt()).collect();
        Ok((self.rate * norm, LocalizationKernel::new(offsets, amps)?))
    }
}

/// Lindblad rate and kernel for `noise` on the ring described by `basis`.
pub fn lindblad_from_noise(noise: &NoiseModel, basis: &FockBasis) -> Result<NoiseLindblad> {
    let m = noise.sites();
    if basis.sites() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: basis.sites(),
        });
    }
    let kernel = (0..m)
        .map(|l| {
            noise
                .spectrum()
                .iter()
                .enumerate()
                .map(|(k, s)| Complex64::from_polar(s.sqrt(), TAU * (k * l) as f64 / m as f64))
                .sum::<Complex64>()
                / (m as f64).sqrt()
        })
        .collect();
    Ok(NoiseLindblad {
        rate: noise.tau_c() / m as f64,
        kernel,
    })
}

/// Quadratic fit of the high-momentum fraction against lattice depth (recoil units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NHighFit {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for NHighFit {
    fn default() -> Self {
        Self {
            c0: 0.01,
            c1: 0.018,
            c2: 0.0019,
        }
    }
}

impl NHighFit {
    /// `c0 + c1 V + c2 V^2`, clamped to `[0, 1]`.
    pub fn eval(&self, depth: f64) -> f64 {
        (self.c0 + self.c1 * depth + self.c2 * depth * depth).clamp(0.0, 1.0)
    }
}

pub fn n_high_fit(depth: f64, fit: &NHighFit) -> Result<f64> {
    if !(depth >= 0.0) || !depth.is_finite() {
        return Err(invalid(format!("lattice depth {depth} must be non-negative")));
    }
    Ok(fit.eval(depth))
}

/// Inputs of the heuristic condensate damping estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BecEstimateInput {
    pub interaction: f64,
    pub hopping: f64,
    pub atoms: f64,
    pub sites: f64,
    pub n_high: f64,
    pub tau_c: f64,
}

impl BecEstimateInput {
    /// Defaults to `N = 80` atoms on `M = 60` sites and `tau_c = 1 / J`.
    pub fn new(interaction: f64, hopping: f64, n_high: f64) -> Result<Self> {
        Self {
            interaction,
            hopping,
            atoms: 80.0,
            sites: 60.0,
            n_high,
            tau_c: 1.0 / hopping,
        }
        .validated()
    }

    pub fn with_correlation_time(mut self, tau_c: f64) -> Result<Self> {
        self.tau_c = tau_c;
        self.validated()
    }

    pub fn with_counts(mut self, atoms: f64, sites: f64) -> Result<Self> {
        self.atoms = atoms;
        self.sites = sites;
        self.validated()
    }

    fn validated(self) -> Result<Self> {
        if !(self.hopping > 0.0) || !self.hopping.is_finite() {
            return Err(invalid(format!("hopping {} must be positive", self.hopping)));
        }
        if !(0.0..=1.0).contains(&self.n_high) {
            return Err(invalid(format!("n_high {} must lie in [0, 1]", self.n_high)));
        }
        if !(self.sites > 0.0) || !(self.atoms >= 0.0) || !self.interaction.is_finite() {
            return Err(invalid("need positive site count, non-negative atoms, finite U"));
        }
        if !(self.tau_c >= 0.0) || !self.tau_c.is_finite() {
            return Err(invalid(format!("correlation time {} must be non-negative", self.tau_c)));
        }
        Ok(self)
    }
}

/// `gamma' = 2 tau_c U^2 (N n_high / M)^2`, i.e. `2 U^2 (N n_high / M)^2 / J` at the default `tau_c`.
pub fn gamma_prime_estimate(input: &BecEstimateInput) -> f64 {
    let density = input.atoms * input.n_high / input.sites;
    2.0 * input.tau_c * input.interaction * input.interaction * density * density
}

/// `gamma' = (2 tau_c U^2 / M) sum_k <|dn~_k|^2> sin^2(pi k / M)`, half the
/// velocity damping of the potential `V = U dn`.
pub fn gamma_prime_general(density_spectrum: &[f64], interaction: f64, tau_c: f64) -> Result<f64> {
    let noise = NoiseModel::from_spectrum(tau_c, density_spectrum.to_vec())?;
    let m = noise.sites() as f64;
    Ok(2.0 * tau_c * interaction * interaction / m
        * noise
            .spectrum()
            .iter()
            .enumerate()
            .map(|(k, s)| s * (PI * k as f64 / m).sin().powi(2))
            .sum::<f64>())
}

/// Real-space twin: `gamma' = (tau_c U^2 / 2M) sum_i <(dn_i - dn_{i+1})^2>`,
/// from correlations `<dn_j dn_{j+d}>`.
pub fn gamma_prime_realspace(density_correlations: &[f64], interaction: f64, tau_c: f64) -> Result<f64> {
    let noise = NoiseModel::from_correlations(tau_c, density_correlations)?;
    Ok(interaction * interaction * gamma_from_realspace(&noise) / 2.0)
}

/// Deep-lattice approximations for hopping and interaction against depth
/// `s = V / E_R`: `J = a_J s^{b_J} exp(-c_J sqrt(s))`, `U = a_U s^{b_U}`.
///
/// The hopping form is the standard harmonic/WKB estimate; the interaction
/// prefactor depends on scattering length and transverse confinement and
/// must be set for a given experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeepLatticeMapping {
    pub hopping_prefactor: f64,
    pub hopping_exponent: f64,
    pub hopping_decay: f64,
    pub interaction_prefactor: f64,
    pub interaction_exponent: f64,
}

impl Default for DeepLatticeMapping {
    fn default() -> Self {
        Self {
            hopping_prefactor: 4.0 / PI.sqrt(),
            hopping_exponent: 0.75,
            hopping_decay: 2.0,
            interaction_prefactor: 0.1,
            interaction_exponent: 0.75,
        }
    }
}

impl DeepLatticeMapping {
    pub fn hopping(&self, depth: f64) -> f64 {
        self.hopping_prefactor
            * depth.powf(self.hopping_exponent)
            * (-self.hopping_decay * depth.sqrt()).exp()
    }

    pub fn interaction(&self, depth: f64) -> f64 {
        self.interaction_prefactor * depth.powf(self.interaction_exponent)
    }
}

/// One point of a damping-versus-depth sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthPoint {
    pub depth: f64,
    pub n_high: f64,
    pub gamma_prime: f64,
}

/// `gamma'(V)` from the fit and the depth mapping, for `N` atoms on `M` sites.
pub fn gamma_prime_sweep(
    depths: &[f64],
    fit: &NHighFit,
    mapping: &DeepLatticeMapping,
    atoms: f64,
    sites: f64,
) -> Result<Vec<DepthPoint>> {
    depths
        .iter()
        .map(|&v| {
            let n_high = n_high_fit(v, fit)?;
            let input = BecEstimateInput::new(mapping.interaction(v), mapping.hopping(v), n_high)?
                .with_counts(atoms, sites)?;
            Ok(DepthPoint {
                depth: v,
                n_high,
                gamma_prime: gamma_prime_estimate(&input),
            })
        })
        .collect()
}

/// Scattering rate `r = a (Omega / Delta)^2 Gamma` and lattice depth
/// `V = a Omega^2 / Delta` of a far-detuned lattice.
pub fn light_scattering_scaling(
    rabi: f64,
    detuning: f64,
    linewidth: f64,
    prefactor: f64,
) -> Result<(f64, f64)> {
    if detuning == 0.0 || !detuning.is_finite() {
        return Err(invalid("detuning must be non-zero"));
    }
    let ratio = rabi / detuning;
    Ok((prefactor * ratio * ratio * linewidth, prefactor * rabi * rabi / detuning))
}
