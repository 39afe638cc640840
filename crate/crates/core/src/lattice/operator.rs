use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Sparse complex matrix stored as sorted, duplicate-free `(row, col, value)` triplets.
///
/// Operators may be rectangular (e.g. annihilators mapping the `N` sector to
/// the `N - 1` sector).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOperator {
    /// Builds an operator from triplets, summing repeated positions and
    /// dropping exact zeros.
    pub fn from_triplets<I>(rows: usize, cols: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut acc: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < rows && c < cols, "entry ({r}, {c}) outside {rows}x{cols}");
            *acc.entry((r, c)).or_default() += v;
        }
        let entries = acc
            .into_iter()
            .filter(|(_, v)| *v != Complex64::new(0.0, 0.0))
            .map(|((r, c), v)| (r, c, v))
            .collect();
        Self {
            rows,
            cols,
            entries,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal((0..dim).map(|_| Complex64::new(1.0, 0.0)))
    }

    pub fn from_diagonal<I: IntoIterator<Item = Complex64>>(diag: I) -> Self {
        let values: Vec<Complex64> = diag.into_iter().collect();
        let n = values.len();
        Self::from_triplets(n, n, values.into_iter().enumerate().map(|(i, v)| (i, i, v)))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length of a square operator.
    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.rows, self.cols);
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries
            .binary_search_by(|&(r, c, _)| (r, c).cmp(&(row, col)))
            .map(|i| self.entries[i].2)
            .unwrap_or_default()
    }

    pub fn is_diagonal(&self) -> bool {
        self.entries.iter().all(|&(r, c, _)| r == c)
    }

    /// Dense diagonal of a square operator (zeros where no entry is stored).
    pub fn diagonal(&self) -> Vec<Complex64> {
        let mut d = vec![Complex64::default(); self.rows.min(self.cols)];
        for &(r, c, v) in &self.entries {
            if r == c {
                d[r] = v;
            }
        }
        d
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.cols,
            self.rows,
            self.entries.iter().map(|&(r, c, v)| (c, r, v.conj())),
        )
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_triplets(
            self.rows,
            self.cols,
            self.entries.iter().map(|&(r, c, v)| (r, c, v * factor)),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self::from_triplets(
            self.rows,
            self.cols,
            self.entries.iter().chain(other.entries.iter()).copied(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Matrix product `self * other`.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        // row index of `other` -> range of its entries
        let mut starts = vec![0usize; other.rows + 1];
        for &(r, _, _) in &other.entries {
            starts[r + 1] += 1;
        }
        for i in 0..other.rows {
            starts[i + 1] += starts[i];
        }
        let mut triplets = Vec::new();
        for &(r, k, a) in &self.entries {
            for &(_, c, b) in &other.entries[starts[k]..starts[k + 1]] {
                triplets.push((r, c, a * b));
            }
        }
        Ok(Self::from_triplets(self.rows, other.cols, triplets))
    }

    /// `[a, b] = ab - ba`.
    pub fn commutator(a: &Self, b: &Self) -> Result<Self> {
        a.matmul(b)?.sub(&b.matmul(a)?)
    }

    /// Applies the operator to a dense vector.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "vector length must equal column count");
        let mut out = vec![Complex64::default(); self.rows];
        for &(r, c, a) in &self.entries {
            out[r] += a * v[c];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.rows, self.cols);
        for &(r, c, v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }

    /// Largest entry-wise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        Ok(self
            .sub(other)?
            .entries
            .iter()
            .map(|e| e.2.norm())
            .fold(0.0, f64::max))
    }

    /// Largest entry-wise modulus of `self - self^dagger`.
    pub fn hermiticity_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.max_abs_diff(&self.adjoint()).unwrap_or(f64::INFINITY)
    }

    /// `||L L^dagger - L^dagger L||` (max entry), zero for normal operators.
    pub fn normality_error(&self) -> f64 {
        let a = self.adjoint();
        match (self.matmul(&a), a.matmul(self)) {
            (Ok(x), Ok(y)) => x.max_abs_diff(&y).unwrap_or(f64::INFINITY),
            _ => f64::INFINITY,
        }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                found: other.rows,
            });
        }
        if self.cols != other.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: other.cols,
            });
        }
        Ok(())
    }
}
