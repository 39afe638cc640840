use num_complex::Complex64;

use super::{Boundary, FockBasis, LatticeSpec, SparseOperator};
use crate::error::{invalid, Error, Result};
use crate::parallel;

/// Occupation number `n_i` as a diagonal operator.
pub fn number_operator(basis: &FockBasis, site: usize) -> Result<SparseOperator> {
    basis.check_site(site)?;
    Ok(SparseOperator::from_diagonal(
        basis
            .states()
            .iter()
            .map(|s| Complex64::new(s[site] as f64, 0.0)),
    ))
}

/// `sum_i n_i`, i.e. `N` times the identity.
pub fn total_number_operator(basis: &FockBasis) -> SparseOperator {
    SparseOperator::from_diagonal(
        (0..basis.dim()).map(|_| Complex64::new(basis.particles() as f64, 0.0)),
    )
}

/// `a_to^dagger a_from` on a fixed-`N` basis.
pub fn hop_operator(basis: &FockBasis, to: usize, from: usize) -> Result<SparseOperator> {
    basis.check_site(to)?;
    basis.check_site(from)?;
    let dim = basis.dim();
    let triplets = parallel::map_indexed(dim, |col| {
        let s = basis.state(col);
        if s[from] == 0 {
            return None;
        }
        if to == from {
            return Some((col, col, Complex64::new(s[from] as f64, 0.0)));
        }
        let mut t = s.to_vec();
        t[from] -= 1;
        t[to] += 1;
        let amp = (s[from] as f64).sqrt() * (t[to] as f64).sqrt();
        let row = basis.index_of(&t).expect("hopping preserves particle number");
        Some((row, col, Complex64::new(amp, 0.0)))
    });
    Ok(SparseOperator::from_triplets(
        dim,
        dim,
        triplets.into_iter().flatten(),
    ))
}

/// `-J sum_j (a_j^dagger a_{j+1} + h.c.) + sum_j V(j) n_j`.
pub fn hopping_hamiltonian(basis: &FockBasis, spec: &LatticeSpec) -> Result<SparseOperator> {
    if spec.sites() != basis.sites() {
        return Err(Error::DimensionMismatch {
            expected: basis.sites(),
            found: spec.sites(),
        });
    }
    let dim = basis.dim();
    let j = spec.hopping();
    let mut triplets = Vec::new();
    if j != 0.0 {
        for (a, b) in spec.bonds() {
            for op in [hop_operator(basis, a, b)?, hop_operator(basis, b, a)?] {
                triplets.extend(
                    op.entries()
                        .iter()
                        .map(|&(r, c, v)| (r, c, v * -j)),
                );
            }
        }
    }
    for (col, s) in basis.states().iter().enumerate() {
        let v: f64 = s
            .iter()
            .zip(spec.potential())
            .map(|(&n, &v)| n as f64 * v)
            .sum();
        triplets.push((col, col, Complex64::new(v, 0.0)));
    }
    Ok(SparseOperator::from_triplets(dim, dim, triplets))
}

/// `x_CM = (1/N) sum_j j n_j` with site labels `j = 1..=M`.
pub fn cm_position_operator(basis: &FockBasis) -> Result<SparseOperator> {
    if basis.particles() == 0 {
        return Err(invalid("center of mass is undefined for N = 0"));
    }
    let n = basis.particles() as f64;
    Ok(SparseOperator::from_diagonal(basis.states().iter().map(|s| {
        let x: f64 = s
            .iter()
            .enumerate()
            .map(|(j, &nj)| (j + 1) as f64 * nj as f64)
            .sum();
        Complex64::new(x / n, 0.0)
    })))
}

/// `v_CM = (iJ/N) sum_j (a_{j+1}^dagger a_j - a_j^dagger a_{j+1})` on a ring.
///
/// Equals `i [K, x_CM]` for the kinetic term `K`; only defined with periodic
/// boundaries.
pub fn cm_velocity_operator(basis: &FockBasis, spec: &LatticeSpec) -> Result<SparseOperator> {
    if spec.boundary() != Boundary::Periodic {
        return Err(invalid(
            "center-of-mass velocity requires periodic boundary conditions",
        ));
    }
    if spec.sites() != basis.sites() {
        return Err(Error::DimensionMismatch {
            expected: basis.sites(),
            found: spec.sites(),
        });
    }
    if basis.particles() == 0 {
        return Err(invalid("center of mass is undefined for N = 0"));
    }
    let prefactor = Complex64::new(0.0, spec.hopping() / basis.particles() as f64);
    let dim = basis.dim();
    let mut triplets = Vec::new();
    for (j, k) in spec.bonds() {
        let forward = hop_operator(basis, k, j)?;
        let backward = hop_operator(basis, j, k)?;
        triplets.extend(forward.entries().iter().map(|&(r, c, v)| (r, c, v * prefactor)));
        triplets.extend(backward.entries().iter().map(|&(r, c, v)| (r, c, -v * prefactor)));
    }
    Ok(SparseOperator::from_triplets(dim, dim, triplets))
}
