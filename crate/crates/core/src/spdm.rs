//! Single-particle density matrix `G_ij = <a_i^dag a_j>` of non-interacting
//! bosons in a trap, dephased by site-local localizing events.
//!
//! The equation of motion is
//! `dG/dt = -2r (G - diag G) + i [h, G]` with `h = V - J T`, where `T` is
//! the nearest-neighbour adjacency of the window.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lattice::{Boundary, LatticeSpec};

/// Boundary density allowed by [`ground_state_spdm`], relative to the peak.
pub const BOUNDARY_LEAK_LIMIT: f64 = 1e-8;

/// Default fraction of the peak height used by the central Gaussian fit.
pub const DEFAULT_CENTRAL_FRACTION: f64 = 0.5;

const HERMITICITY_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-9;
const NEGATIVE_DENSITY_TOL: f64 = 1e-10;

/// Window of sites with hopping, trap potential and localization rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapSpec {
    lattice: LatticeSpec,
    rate: f64,
}

impl TrapSpec {
    /// Arbitrary potential on an odd-sized window.
    pub fn new(hopping: f64, potential: Vec<f64>, rate: f64, boundary: Boundary) -> Result<Self> {
        if potential.len().is_multiple_of(2) {
            return Err(invalid(format!(
                "window size {} must be odd so the trap is centered",
                potential.len()
            )));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(invalid(format!("localization rate {rate} must be non-negative")));
        }
        Ok(Self {
            lattice: LatticeSpec::new(hopping, potential, boundary)?,
            rate,
        })
    }

    /// Hard-wall window with `V(j) = curvature * j^2`, `j = -(M-1)/2 ..= (M-1)/2`.
    pub fn parabolic(window: usize, hopping: f64, curvature: f64, rate: f64) -> Result<Self> {
        if !(curvature >= 0.0) || !curvature.is_finite() {
            return Err(invalid(format!("trap curvature {curvature} must be non-negative")));
        }
        let half = window.saturating_sub(1) as f64 / 2.0;
        let potential = (0..window)
            .map(|i| {
                let j = i as f64 - half;
                curvature * j * j
            })
            .collect();
        Self::new(hopping, potential, rate, Boundary::HardWall)
    }

    /// Ring without potential.
    pub fn ring(sites: usize, hopping: f64, rate: f64) -> Result<Self> {
        Self::new(hopping, vec![0.0; sites], rate, Boundary::Periodic)
    }

    pub fn with_rate(mut self, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(invalid(format!("localization rate {rate} must be non-negative")));
        }
        self.rate = rate;
        Ok(self)
    }

    pub fn window(&self) -> usize {
        self.lattice.sites()
    }

    pub fn hopping(&self) -> f64 {
        self.lattice.hopping()
    }

    pub fn potential(&self) -> &[f64] {
        self.lattice.potential()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn boundary(&self) -> Boundary {
        self.lattice.boundary()
    }

    /// `h = V - J T`.
    pub fn single_particle_hamiltonian(&self) -> DMatrix<f64> {
        let m = self.window();
        let mut h = DMatrix::from_diagonal(&DVector::from_column_slice(self.potential()));
        if m > 1 {
            for (a, b) in self.lattice.bonds() {
                h[(a, b)] -= self.hopping();
                h[(b, a)] -= self.hopping();
            }
        }
        h
    }

    fn is_confining(&self) -> bool {
        let v = self.potential();
        v.iter().any(|x| *x != v[0])
    }
}

/// Hermitian `M_w x M_w` matrix of `<a_i^dag a_j>` with trace `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SPDMatrix {
    matrix: DMatrix<Complex64>,
    particles: f64,
}

impl SPDMatrix {
    pub fn new(matrix: DMatrix<Complex64>, particles: f64) -> Result<Self> {
        let state = Self { matrix, particles };
        if let Some(msg) = state.violation() {
            return Err(invalid(msg));
        }
        Ok(state)
    }

    /// Coherence-free state with `N / M` particles on every site.
    pub fn uniform(window: usize, particles: f64) -> Result<Self> {
        if window == 0 {
            return Err(invalid("window must contain at least one site"));
        }
        let n = Complex64::new(particles / window as f64, 0.0);
        Self::new(DMatrix::from_diagonal_element(window, window, n), particles)
    }

    pub fn window(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn particles(&self) -> f64 {
        self.particles
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.matrix[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `sum_{i != j} |G_ij|^2`.
    pub fn off_diagonal_weight(&self) -> f64 {
        let total: f64 = self.matrix.iter().map(|z| z.norm_sqr()).sum();
        let diag: f64 = self.matrix.diagonal().iter().map(|z| z.norm_sqr()).sum();
        total - diag
    }

    fn violation(&self) -> Option<String> {
        if !self.matrix.is_square() {
            return Some("matrix must be square".into());
        }
        if self.matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Some("matrix has non-finite entries".into());
        }
        let asym = max_asymmetry(&self.matrix);
        if asym > HERMITICITY_TOL {
            return Some(format!("Hermiticity error {asym:.3e} above {HERMITICITY_TOL:.0e}"));
        }
        let drift = (self.trace() - self.particles).abs();
        if drift > TRACE_TOL * self.particles.abs().max(1.0) {
            return Some(format!("trace {} differs from N = {}", self.trace(), self.particles));
        }
        let min = self.matrix.diagonal().iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
        if min < -NEGATIVE_DENSITY_TOL {
            return Some(format!("negative density {min:.3e}"));
        }
        None
    }
}

fn max_asymmetry(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

struct Generator {
    h: DMatrix<Complex64>,
    two_r: f64,
}

impl Generator {
    fn new(trap: &TrapSpec) -> Self {
        Self {
            h: trap.single_particle_hamiltonian().map(|x| Complex64::new(x, 0.0)),
            two_r: 2.0 * trap.rate(),
        }
    }

    fn apply(&self, g: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let comm = &self.h * g - g * &self.h;
        let mut out = comm * Complex64::new(0.0, 1.0);
        if self.two_r != 0.0 {
            let n = g.nrows();
            for j in 0..n {
                for i in 0..n {
                    if i != j {
                        out[(i, j)] -= g[(i, j)] * self.two_r;
                    }
                }
            }
        }
        out
    }
}

/// Time derivative of the SPDM.
///
/// On a hard-wall window, hopping terms that would reference sites outside
/// the window are absent.
pub fn spdm_rhs(state: &SPDMatrix, trap: &TrapSpec) -> Result<DMatrix<Complex64>> {
    check_window(state, trap)?;
    Ok(Generator::new(trap).apply(state.matrix()))
}

fn check_window(state: &SPDMatrix, trap: &TrapSpec) -> Result<()> {
    if state.window() != trap.window() {
        return Err(Error::DimensionMismatch {
            expected: trap.window(),
            found: state.window(),
        });
    }
    Ok(())
}

/// `N C_i^* C_j` for the lowest eigenvector `C` of the single-particle
/// Hamiltonian.
///
/// For a confining potential on a hard-wall window, the boundary density
/// must stay below [`BOUNDARY_LEAK_LIMIT`] of the peak.
pub fn ground_state_spdm(trap: &TrapSpec, particles: f64) -> Result<SPDMatrix> {
    if !(particles > 0.0) || !particles.is_finite() {
        return Err(invalid(format!("particle number {particles} must be positive")));
    }
    let eig = trap.single_particle_hamiltonian().symmetric_eigen();
    let lowest = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("window is non-empty");
    let c = eig.eigenvectors.column(lowest);
    let density: Vec<f64> = c.iter().map(|x| x * x).collect();
    if trap.boundary() == Boundary::HardWall && trap.is_confining() {
        let peak = density.iter().cloned().fold(0.0, f64::max);
        let edge = density[0].max(density[density.len() - 1]);
        let ratio = edge / peak;
        if ratio >= BOUNDARY_LEAK_LIMIT {
            return Err(Error::WindowTooSmall {
                ratio,
                limit: BOUNDARY_LEAK_LIMIT,
            });
        }
    }
    let m = trap.window();
    let matrix = DMatrix::from_fn(m, m, |i, j| Complex64::new(particles * c[i] * c[j], 0.0));
    SPDMatrix::new(matrix, particles)
}

/// One stored state of an SPDM run.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdmSnapshot {
    pub step: usize,
    pub time: f64,
    pub state: SPDMatrix,
}

/// RK4 integration of the SPDM equation of motion up to `total_time`,
/// keeping every `stride`-th step (and the last).
///
/// The step is shrunk so that an integer number of steps tiles the run.
pub fn evolve_spdm(
    state0: &SPDMatrix,
    trap: &TrapSpec,
    total_time: f64,
    dt: f64,
    stride: usize,
) -> Result<Vec<SpdmSnapshot>> {
    check_window(state0, trap)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid(format!("time step {dt} must be positive")));
    }
    if !(total_time >= 0.0) || !total_time.is_finite() {
        return Err(invalid(format!("total time {total_time} must be non-negative")));
    }
    if stride == 0 {
        return Err(invalid("snapshot stride must be positive"));
    }
    let steps = (total_time / dt - 1e-9).ceil().max(0.0) as usize;
    let h = if steps == 0 { dt } else { total_time / steps as f64 };
    let generator = Generator::new(trap);
    let half = Complex64::new(h / 2.0, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);

    let particles = state0.particles();
    let mut g = state0.matrix().clone();
    let mut out = vec![SpdmSnapshot {
        step: 0,
        time: 0.0,
        state: state0.clone(),
    }];
    let mut worst_asymmetry: f64 = 0.0;
    for step in 1..=steps {
        let k1 = generator.apply(&g);
        let k2 = generator.apply(&(&g + &k1 * half));
        let k3 = generator.apply(&(&g + &k2 * half));
        let k4 = generator.apply(&(&g + &k3 * full));
        g += (k1 + (k2 + k3) * two + k4) * sixth;
        worst_asymmetry = worst_asymmetry.max(max_asymmetry(&g));
        g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);

        if step % stride == 0 || step == steps {
            let state = SPDMatrix {
                matrix: g.clone(),
                particles,
            };
            if let Some(detail) = state.violation() {
                return Err(Error::NumericalFailure { step, detail });
            }
            out.push(SpdmSnapshot {
                step,
                time: step as f64 * h,
                state,
            });
        }
    }
    log::debug!("spdm run: {steps} steps, worst pre-symmetrization asymmetry {worst_asymmetry:.3e}");
    Ok(out)
}

/// Site densities `<n_j>`, the real diagonal of the SPDM.
pub fn density_profile(state: &SPDMatrix) -> Vec<f64> {
    state.matrix().diagonal().iter().map(|z| z.re).collect()
}

/// Shape statistics of a density profile over site positions `0..M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatnessReport {
    pub mean: f64,
    pub variance: f64,
    /// Fourth central moment over variance squared; 3 for a Gaussian.
    pub kurtosis: f64,
    /// Variance of the Gaussian whose log matches a quadratic fit to the
    /// central points; `None` when fewer than three points qualify or the
    /// fitted curvature is not negative.
    pub matched_variance: Option<f64>,
}

/// [`flatness_report_with`] at [`DEFAULT_CENTRAL_FRACTION`].
pub fn flatness_report(profile: &[f64]) -> Result<FlatnessReport> {
    flatness_report_with(profile, DEFAULT_CENTRAL_FRACTION)
}

/// Moments of `profile`, plus a Gaussian matched to the points whose density
/// is at least `central_fraction` of the peak.
pub fn flatness_report_with(profile: &[f64], central_fraction: f64) -> Result<FlatnessReport> {
    if !(central_fraction > 0.0 && central_fraction < 1.0) {
        return Err(invalid(format!(
            "central fraction {central_fraction} must lie in (0, 1)"
        )));
    }
    if profile.iter().any(|p| !p.is_finite()) {
        return Err(invalid("profile has non-finite entries"));
    }
    let (peak_at, peak) = profile
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, p)| if p > acc.1 { (i, p) } else { acc });
    if profile.len() < 3 || peak_at == 0 || peak_at == profile.len() - 1 || !(peak > 0.0) {
        return Err(invalid("profile has no interior maximum"));
    }
    let weights: Vec<f64> = profile.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    let mean = weights.iter().enumerate().map(|(i, w)| i as f64 * w).sum::<f64>() / total;
    let moment = |k: i32| {
        weights
            .iter()
            .enumerate()
            .map(|(i, w)| (i as f64 - mean).powi(k) * w)
            .sum::<f64>()
            / total
    };
    let variance = moment(2);
    let kurtosis = moment(4) / (variance * variance);

    let central: Vec<(f64, f64)> = profile
        .iter()
        .enumerate()
        .filter(|(_, &p)| p >= central_fraction * peak)
        .map(|(i, &p)| ((i as f64) - peak_at as f64, p.ln()))
        .collect();
    let matched_variance = quadratic_curvature(&central).and_then(|c| {
        if c < 0.0 {
            Some(-1.0 / (2.0 * c))
        } else {
            None
        }
    });
    Ok(FlatnessReport {
        mean,
        variance,
        kurtosis,
        matched_variance,
    })
}

/// Coefficient `c` of the least-squares fit `y = a + b x + c x^2`.
fn quadratic_curvature(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    for &(x, y) in points {
        let row = nalgebra::Vector3::new(1.0, x, x * x);
        ata += row * row.transpose();
        aty += row * y;
    }
    ata.lu().solve(&aty).map(|coef| coef[2])
}
