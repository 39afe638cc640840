use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::lattice::SparseOperator;

/// Tolerances for the density-matrix invariants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|tr(rho) - 1|`
    pub trace: f64,
    /// max entry of `|rho - rho^dagger|`
    pub hermiticity: f64,
    /// smallest eigenvalue must be `>= -positivity`
    pub positivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            trace: 1e-9,
            hermiticity: 1e-12,
            positivity: 1e-8,
        }
    }
}

/// Measured invariant values of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantReport {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl InvariantReport {
    pub fn violation(&self, tol: &Tolerances) -> Option<String> {
        if !(self.trace_error <= tol.trace) {
            return Some(format!(
                "trace drift {:.3e} exceeds {:.1e}",
                self.trace_error, tol.trace
            ));
        }
        if !(self.hermiticity_error <= tol.hermiticity) {
            return Some(format!(
                "Hermiticity error {:.3e} exceeds {:.1e}",
                self.hermiticity_error, tol.hermiticity
            ));
        }
        if !(self.min_eigenvalue >= -tol.positivity) {
            return Some(format!(
                "minimum eigenvalue {:.3e} below -{:.1e}",
                self.min_eigenvalue, tol.positivity
            ));
        }
        None
    }
}

/// Hermitian, unit-trace, positive matrix in a Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Wraps `matrix` after checking the invariants with default tolerances.
    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        Self::with_tolerances(matrix, &Tolerances::default())
    }

    pub fn with_tolerances(matrix: DMatrix<Complex64>, tol: &Tolerances) -> Result<Self> {
        if !matrix.is_square() {
            return Err(invalid("density matrix must be square"));
        }
        let rho = Self { matrix };
        if let Some(msg) = rho.invariants().violation(tol) {
            return Err(Error::NumericalFailure {
                step: 0,
                detail: msg,
            });
        }
        Ok(rho)
    }

    pub(crate) fn from_matrix_unchecked(matrix: DMatrix<Complex64>) -> Self {
        Self { matrix }
    }

    /// `|psi><psi|` for a normalized state.
    pub fn from_pure(psi: &[Complex64]) -> Result<Self> {
        check_normalized(psi)?;
        let v = nalgebra::DVector::from_column_slice(psi);
        Ok(Self {
            matrix: &v * v.adjoint(),
        })
    }

    /// `|i><i|`.
    pub fn basis_projector(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(invalid(format!("basis index {index} out of range {dim}")));
        }
        let mut m = DMatrix::zeros(dim, dim);
        m[(index, index)] = Complex64::new(1.0, 0.0);
        Ok(Self { matrix: m })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[(row, col)]
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn invariants(&self) -> InvariantReport {
        InvariantReport {
            trace_error: (self.trace() - Complex64::new(1.0, 0.0)).norm(),
            hermiticity_error: self.hermiticity_error(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }
}

pub(crate) fn hermiticity_error(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn check_normalized(psi: &[Complex64]) -> Result<()> {
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(invalid(format!("state is not normalized: <psi|psi> = {norm}")));
    }
    Ok(())
}

/// `tr(op rho)`.
pub fn expectation(op: &SparseOperator, rho: &DensityMatrix) -> Result<Complex64> {
    if op.rows() != rho.dim() || op.cols() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: op.rows().max(op.cols()),
        });
    }
    Ok(op
        .entries()
        .iter()
        .map(|&(r, c, v)| v * rho.matrix[(c, r)])
        .sum())
}

/// `<psi| op |psi>` for a normalized pure state.
pub fn pure_expectation(op: &SparseOperator, psi: &[Complex64]) -> Complex64 {
    op.entries()
        .iter()
        .map(|&(r, c, v)| psi[r].conj() * v * psi[c])
        .sum()
}
