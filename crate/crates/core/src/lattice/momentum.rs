use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{FockBasis, SparseOperator};
use crate::error::{invalid, Result};

/// Whether `p` lies in the first Brillouin zone `-M/2 <= p < M/2`.
pub fn in_first_zone(p: i64, sites: usize) -> bool {
    let m = sites as i64;
    2 * p >= -m && 2 * p < m
}

/// Quasimomenta of the first zone in increasing order.
pub fn first_zone(sites: usize) -> impl Iterator<Item = i64> {
    let lo = -((sites / 2) as i64);
    lo..lo + sites as i64
}

/// `L_p = sum_j e^{2 pi i p j / M} n_j`, sites labelled `j = 1..=M`.
pub fn jump_operator_momentum(basis: &FockBasis, p: i64) -> Result<SparseOperator> {
    let m = basis.sites();
    if !in_first_zone(p, m) {
        return Err(invalid(format!(
            "quasimomentum {p} outside the first Brillouin zone of {m} sites"
        )));
    }
    let phases: Vec<Complex64> = (0..m)
        .map(|j| Complex64::from_polar(1.0, TAU * (p * (j as i64 + 1)) as f64 / m as f64))
        .collect();
    Ok(super::jumps::weighted_number_sum(basis, &phases))
}

/// Annihilator `a_j` as a map from `upper` (N particles) to `lower` (N - 1).
pub fn site_annihilation(
    upper: &FockBasis,
    lower: &FockBasis,
    site: usize,
) -> Result<SparseOperator> {
    check_sectors(upper, lower)?;
    upper.check_site(site)?;
    let triplets = upper.states().iter().enumerate().filter_map(|(col, s)| {
        if s[site] == 0 {
            return None;
        }
        let mut t = s.clone();
        t[site] -= 1;
        let row = lower.index_of(&t).expect("lower sector contains N-1 states");
        Some((row, col, Complex64::new((s[site] as f64).sqrt(), 0.0)))
    });
    Ok(SparseOperator::from_triplets(lower.dim(), upper.dim(), triplets))
}

/// `c_k = M^{-1/2} sum_j e^{-2 pi i k j / M} a_j` (sites `j = 1..=M`), mapping
/// the `N` sector to the `N - 1` sector. `k` may be any integer; `c_k` is
/// periodic in `k` with period `M`.
pub fn momentum_annihilation(
    upper: &FockBasis,
    lower: &FockBasis,
    k: i64,
) -> Result<SparseOperator> {
    check_sectors(upper, lower)?;
    let m = upper.sites();
    let norm = 1.0 / (m as f64).sqrt();
    let mut triplets = Vec::new();
    for j in 0..m {
        let phase = Complex64::from_polar(norm, -TAU * (k * (j as i64 + 1)) as f64 / m as f64);
        let a = site_annihilation(upper, lower, j)?;
        triplets.extend(a.entries().iter().map(|&(r, c, v)| (r, c, v * phase)));
    }
    Ok(SparseOperator::from_triplets(lower.dim(), upper.dim(), triplets))
}

/// `sum_k c^dag_{k+p} c_k` over the first zone, built from mode operators.
pub fn momentum_transfer(basis: &FockBasis, p: i64) -> Result<SparseOperator> {
    let dim = basis.dim();
    if basis.particles() == 0 {
        return Ok(SparseOperator::zeros(dim, dim));
    }
    let lower = FockBasis::with_cap(basis.sites(), basis.particles() - 1, dim.max(1))?;
    let mut sum = SparseOperator::zeros(dim, dim);
    for k in first_zone(basis.sites()) {
        let ck = momentum_annihilation(basis, &lower, k)?;
        let ckp = momentum_annihilation(basis, &lower, k + p)?;
        sum = sum.add(&ckp.adjoint().matmul(&ck)?)?;
    }
    Ok(sum)
}

/// Largest deviations in `sum_k c^dag_{k+p} c_k = L_p` (over all `p`) and in
/// `M^{-1} sum_p L_p^dag L_p = sum_i n_i^2`.
pub fn kick_identity_residuals(basis: &FockBasis) -> Result<(f64, f64)> {
    let m = basis.sites();
    let dim = basis.dim();
    let mut transfer: f64 = 0.0;
    let mut sum = SparseOperator::zeros(dim, dim);
    for p in first_zone(m) {
        let l = jump_operator_momentum(basis, p)?;
        transfer = transfer.max(momentum_transfer(basis, p)?.max_abs_diff(&l)?);
        sum = sum.add(&l.adjoint().matmul(&l)?)?;
    }
    let sum = sum.scale(Complex64::new(1.0 / m as f64, 0.0));
    let n2 = SparseOperator::from_diagonal(
        basis
            .states()
            .iter()
            .map(|s| Complex64::new(s.iter().map(|&n| (n * n) as f64).sum(), 0.0)),
    );
    Ok((transfer, sum.max_abs_diff(&n2)?))
}

fn check_sectors(upper: &FockBasis, lower: &FockBasis) -> Result<()> {
    if upper.particles() == 0 {
        return Err(invalid("cannot annihilate a particle from the vacuum sector"));
    }
    if lower.sites() != upper.sites() || lower.particles() + 1 != upper.particles() {
        return Err(invalid(format!(
            "lower basis must have M={} sites and N={} particles",
            upper.sites(),
            upper.particles() - 1
        )));
    }
    Ok(())
}
