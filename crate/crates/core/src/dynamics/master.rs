use nalgebra::DMatrix;
use num_complex::Complex64;

use super::density::{hermiticity_error, DensityMatrix, Tolerances};
use crate::error::{invalid, Error, Result};
use crate::lattice::SparseOperator;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Hamiltonian, dissipator channels and time grid for a master-equation run.
///
/// The generator is
/// `d rho/dt = -i[H, rho] - sum_c r_c (L_c^dag L_c rho + rho L_c^dag L_c - 2 L_c rho L_c^dag)`.
#[derive(Debug, Clone)]
pub struct EvolutionSpec {
    pub hamiltonian: SparseOperator,
    /// `(rate, jump operator)` pairs; rates are non-negative.
    pub channels: Vec<(f64, SparseOperator)>,
    pub dt: f64,
    pub total_time: f64,
    /// Store a snapshot every this many steps (the final state is always stored).
    pub snapshot_stride: usize,
    pub tolerances: Tolerances,
}

impl EvolutionSpec {
    pub fn new(
        hamiltonian: SparseOperator,
        channels: Vec<(f64, SparseOperator)>,
        dt: f64,
        total_time: f64,
    ) -> Result<Self> {
        if !hamiltonian.is_square() {
            return Err(invalid("Hamiltonian must be square"));
        }
        let dim = hamiltonian.rows();
        for (r, l) in &channels {
            if !(*r >= 0.0) || !r.is_finite() {
                return Err(invalid(format!("dissipation rate {r} must be non-negative")));
            }
            if l.rows() != dim || l.cols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: l.rows().max(l.cols()),
                });
            }
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("time step {dt} must be positive")));
        }
        if !(total_time >= 0.0) || !total_time.is_finite() {
            return Err(invalid(format!("total time {total_time} must be non-negative")));
        }
        Ok(Self {
            hamiltonian,
            channels,
            dt,
            total_time,
            snapshot_stride: 10,
            tolerances: Tolerances::default(),
        })
    }

    /// Same rate for every jump operator.
    pub fn with_uniform_rate(
        hamiltonian: SparseOperator,
        rate: f64,
        jumps: Vec<SparseOperator>,
        dt: f64,
        total_time: f64,
    ) -> Result<Self> {
        Self::new(
            hamiltonian,
            jumps.into_iter().map(|l| (rate, l)).collect(),
            dt,
            total_time,
        )
    }

    pub fn snapshot_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride.max(1);
        self
    }

    pub fn tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.rows()
    }

    /// Number of fixed steps; the step is shrunk so that they tile `total_time`.
    pub fn steps(&self) -> usize {
        (self.total_time / self.dt - 1e-9).ceil().max(0.0) as usize
    }

    pub fn effective_dt(&self) -> f64 {
        match self.steps() {
            0 => self.dt,
            n => self.total_time / n as f64,
        }
    }
}

/// Default RK4 step: `min(0.005/(|J| N), 0.0025/(r N^2))`.
///
/// `|H| <= 2 |J| N`, so both bounds keep the fastest rate times `dt` at or
/// below 0.01.
pub fn default_time_step(hopping: f64, rate: f64, particles: usize) -> f64 {
    let n = particles.max(1) as f64;
    let kinetic = if hopping != 0.0 {
        0.005 / (hopping.abs() * n)
    } else {
        f64::INFINITY
    };
    let n2 = n * n;
    let dissipative = if rate > 0.0 {
        0.0025 / (rate * n2)
    } else {
        f64::INFINITY
    };
    let dt = kinetic.min(dissipative);
    if dt.is_finite() {
        dt
    } else {
        0.01
    }
}

/// Precomputed Lindblad generator. Diagonal channels collapse into a single
/// Hadamard factor; the rest are applied as sparse products.
#[derive(Debug, Clone)]
pub(crate) struct Generator {
    hamiltonian: SparseOperator,
    /// `D_ab = sum_c r_c (|l_a|^2 + |l_b|^2 - 2 l_a conj(l_b))` for diagonal channels.
    decoherence: Option<DMatrix<Complex64>>,
    general: Vec<(f64, SparseOperator, SparseOperator, SparseOperator)>,
}

impl Generator {
    pub(crate) fn new(spec: &EvolutionSpec) -> Result<Self> {
        let dim = spec.dim();
        let mut decoherence: Option<DMatrix<Complex64>> = None;
        let mut general = Vec::new();
        for (r, l) in &spec.channels {
            if *r == 0.0 {
                continue;
            }
            if l.is_diagonal() {
                let d = l.diagonal();
                let acc = decoherence.get_or_insert_with(|| DMatrix::zeros(dim, dim));
                for b in 0..dim {
                    for a in 0..dim {
                        acc[(a, b)] +=
                            (d[a].norm_sqr() + d[b].norm_sqr() - 2.0 * d[a] * d[b].conj()) * *r;
                    }
                }
            } else {
                let ld = l.adjoint();
                let ldl = ld.matmul(l)?;
                general.push((*r, l.clone(), ld, ldl));
            }
        }
        Ok(Self {
            hamiltonian: spec.hamiltonian.clone(),
            decoherence,
            general,
        })
    }

    pub(crate) fn apply(&self, rho: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let n = rho.nrows();
        let mut out = DMatrix::zeros(n, n);
        // -i (H rho - rho H)
        for &(r, c, v) in self.hamiltonian.entries() {
            let h = -I * v;
            for k in 0..n {
                out[(r, k)] += h * rho[(c, k)];
                out[(k, c)] -= h * rho[(k, r)];
            }
        }
        if let Some(d) = &self.decoherence {
            for (o, (x, dab)) in out.iter_mut().zip(rho.iter().zip(d.iter())) {
                *o -= dab * x;
            }
        }
        for (rate, l, ld, ldl) in &self.general {
            let a = sparse_left(ldl, rho);
            let b = sparse_right(rho, ldl);
            let lrl = sparse_right(&sparse_left(l, rho), ld);
            out -= (a + b - lrl * Complex64::new(2.0, 0.0)) * Complex64::new(*rate, 0.0);
        }
        out
    }
}

fn sparse_left(op: &SparseOperator, m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = m.ncols();
    let mut out = DMatrix::zeros(op.rows(), n);
    for &(r, c, v) in op.entries() {
        for k in 0..n {
            out[(r, k)] += v * m[(c, k)];
        }
    }
    out
}

fn sparse_right(m: &DMatrix<Complex64>, op: &SparseOperator) -> DMatrix<Complex64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(n, op.cols());
    for &(r, c, v) in op.entries() {
        for k in 0..n {
            out[(k, c)] += m[(k, r)] * v;
        }
    }
    out
}

/// `d rho / dt` under `spec`.
pub fn lindblad_rhs(spec: &EvolutionSpec, rho: &DensityMatrix) -> Result<DMatrix<Complex64>> {
    if rho.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: rho.dim(),
        });
    }
    Ok(Generator::new(spec)?.apply(rho.matrix()))
}

/// Stored state of a master-equation run.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub rho: DensityMatrix,
}

/// Integrates the master equation with fixed-step classical RK4.
///
/// The state is re-symmetrized after every step; each stored snapshot is
/// checked against the trace, Hermiticity and positivity tolerances.
pub fn evolve_master(rho0: &DensityMatrix, spec: &EvolutionSpec) -> Result<Vec<Snapshot>> {
    if rho0.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: rho0.dim(),
        });
    }
    let tol = spec.tolerances;
    if let Some(msg) = rho0.invariants().violation(&tol) {
        return Err(Error::NumericalFailure {
            step: 0,
            detail: format!("initial state: {msg}"),
        });
    }
    let generator = Generator::new(spec)?;
    let steps = spec.steps();
    let dt = spec.effective_dt();
    let half = Complex64::new(dt / 2.0, 0.0);
    let full = Complex64::new(dt, 0.0);
    let sixth = Complex64::new(dt / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);

    let mut rho = rho0.matrix().clone();
    let mut snapshots = vec![Snapshot {
        step: 0,
        time: 0.0,
        rho: rho0.clone(),
    }];
    let mut worst_asymmetry: f64 = 0.0;
    for step in 1..=steps {
        let k1 = generator.apply(&rho);
        let k2 = generator.apply(&(&rho + &k1 * half));
        let k3 = generator.apply(&(&rho + &k2 * half));
        let k4 = generator.apply(&(&rho + &k3 * full));
        rho += (k1 + (k2 + k3) * two + k4) * sixth;

        let asym = hermiticity_error(&rho);
        worst_asymmetry = worst_asymmetry.max(asym);
        rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);

        if step % spec.snapshot_stride == 0 || step == steps {
            let state = DensityMatrix::from_matrix_unchecked(rho.clone());
            let mut report = state.invariants();
            report.hermiticity_error = asym;
            if let Some(msg) = report.violation(&tol) {
                return Err(Error::NumericalFailure { step, detail: msg });
            }
            snapshots.push(Snapshot {
                step,
                time: step as f64 * dt,
                rho: state,
            });
        }
    }
    log::debug!("master run: {steps} steps, worst pre-symmetrization asymmetry {worst_asymmetry:.3e}");
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_step_bounds() {
        assert!((default_time_step(1.0, 0.0, 2) - 0.0025).abs() < 1e-15);
        assert!((default_time_step(1.0, 0.5, 4) - 0.0003125).abs() < 1e-15);
        assert_eq!(default_time_step(0.0, 0.0, 3), 0.01);
    }

    #[test]
    fn steps_tile_total_time() {
        let spec = EvolutionSpec::new(SparseOperator::identity(2), vec![], 0.3, 1.0).unwrap();
        assert_eq!(spec.steps(), 4);
        assert!((spec.effective_dt() - 0.25).abs() < 1e-15);
        let spec = EvolutionSpec::new(SparseOperator::identity(2), vec![], 0.25, 1.0).unwrap();
        assert_eq!(spec.steps(), 4);
    }
}
