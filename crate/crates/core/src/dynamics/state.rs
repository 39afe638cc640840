use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::lattice::{in_first_zone, FockBasis};

/// All `N` particles in the quasimomentum mode
/// `b_q^dag = M^{-1/2} sum_j e^{2 pi i q j / M} a_j^dag` (sites `j = 1..=M`).
///
/// The Fock amplitude is `sqrt(N! / prod n_j!) prod phi_j^{n_j}`.
pub fn prepare_bloch_condensate(basis: &FockBasis, q: i64) -> Result<Vec<Complex64>> {
    let m = basis.sites();
    if basis.particles() == 0 {
        return Err(invalid("a condensate needs at least one particle"));
    }
    if !in_first_zone(q, m) {
        return Err(invalid(format!(
            "quasimomentum {q} outside the first Brillouin zone of {m} sites"
        )));
    }
    let mode: Vec<Complex64> = (0..m)
        .map(|j| {
            Complex64::from_polar(
                1.0 / (m as f64).sqrt(),
                TAU * (q * (j as i64 + 1)) as f64 / m as f64,
            )
        })
        .collect();
    let n = basis.particles();
    let mut psi: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|s| {
            let mut amp = Complex64::new(multinomial(n, s).sqrt(), 0.0);
            for (phi, &nj) in mode.iter().zip(s) {
                amp *= phi.powu(nj);
            }
            amp
        })
        .collect();
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    Ok(psi)
}

/// `N! / prod n_j!` built as a product of binomials.
fn multinomial(n: usize, occupations: &[u32]) -> f64 {
    let mut remaining = n as u64;
    let mut acc = 1.0;
    for &k in occupations {
        let k = k as u64;
        let mut b = 1.0;
        for i in 0..k {
            b = b * (remaining - i) as f64 / (i + 1) as f64;
        }
        acc *= b;
        remaining -= k;
    }
    acc
}

/// The Fock state `|occupations>` as a basis vector.
pub fn fock_state(basis: &FockBasis, occupations: &[u32]) -> Result<Vec<Complex64>> {
    let idx = basis
        .index_of(occupations)
        .ok_or_else(|| invalid(format!("{occupations:?} is not in the basis")))?;
    let mut psi = vec![Complex64::default(); basis.dim()];
    psi[idx] = Complex64::new(1.0, 0.0);
    Ok(psi)
}
