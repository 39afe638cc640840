use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::density::{check_normalized, DensityMatrix};
use crate::error::{invalid, Error, Result};
use crate::lattice::SparseOperator;

/// Averages the post-event states `L_i|psi>` of one unobserved localizing
/// event, weighting each outcome by its probability `<L_i^dag L_i>`.
pub fn apply_localizing_event(
    psi: &[Complex64],
    family: &[SparseOperator],
) -> Result<DensityMatrix> {
    check_normalized(psi)?;
    let dim = psi.len();
    let mut outcomes = Vec::with_capacity(family.len());
    for l in family {
        if l.cols() != dim || l.rows() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: l.rows().max(l.cols()),
            });
        }
        let phi = l.apply(psi);
        let weight: f64 = phi.iter().map(|z| z.norm_sqr()).sum();
        outcomes.push((weight, phi));
    }
    let total: f64 = outcomes.iter().map(|o| o.0).sum();
    if !(total > 0.0) {
        return Err(invalid("every jump operator annihilates the state"));
    }
    // sum_i p_i |phi_i><phi_i| / w_i with p_i = w_i / total
    let mut rho = DMatrix::<Complex64>::zeros(dim, dim);
    for (w, phi) in outcomes {
        if w == 0.0 {
            continue;
        }
        let v = DVector::from_vec(phi);
        rho += (&v * v.adjoint()) * Complex64::new(1.0 / total, 0.0);
    }
    Ok(DensityMatrix::from_matrix_unchecked(rho))
}

/// `exp(-r t sum_i (n_i - n'_i)^2)`, the decay of the `|n><n'|` coherence
/// under site-local localizing events with no Hamiltonian.
pub fn coherence_decay_factor(n: &[u32], nprime: &[u32], rate: f64, t: f64) -> Result<f64> {
    if n.len() != nprime.len() {
        return Err(invalid(format!(
            "occupation vectors differ in length ({} vs {})",
            n.len(),
            nprime.len()
        )));
    }
    Ok((-rate * t * occupation_distance(n, nprime)).exp())
}

/// `sum_i (n_i - n'_i)^2`.
pub fn occupation_distance(n: &[u32], nprime: &[u32]) -> f64 {
    n.iter()
        .zip(nprime)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{site_local_jumps, FockBasis};

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn two_three_superposition() {
        let b = FockBasis::new(2, 5).unwrap();
        let i23 = b.index_of(&[2, 3]).unwrap();
        let i32 = b.index_of(&[3, 2]).unwrap();
        let mut psi = vec![c(0.0); b.dim()];
        psi[i23] = c(std::f64::consts::FRAC_1_SQRT_2);
        psi[i32] = c(std::f64::consts::FRAC_1_SQRT_2);
        let rho = apply_localizing_event(&psi, &site_local_jumps(&b)).unwrap();
        assert!((rho.get(i23, i23).re - 0.5).abs() < 1e-12);
        assert!((rho.get(i32, i32).re - 0.5).abs() < 1e-12);
        assert!((rho.get(i23, i32) - c(6.0 / 13.0)).norm() < 1e-12);
        assert!((rho.get(i32, i23) - c(6.0 / 13.0)).norm() < 1e-12);
        assert!((rho.trace() - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn fock_state_is_unchanged() {
        let b = FockBasis::new(3, 2).unwrap();
        let mut psi = vec![c(0.0); b.dim()];
        psi[4] = c(1.0);
        let rho = apply_localizing_event(&psi, &site_local_jumps(&b)).unwrap();
        let expected = DensityMatrix::basis_projector(b.dim(), 4).unwrap();
        assert!((rho.matrix() - expected.matrix()).norm() < 1e-15);
    }

    #[test]
    fn single_particle_coherence_destroyed() {
        let b = FockBasis::new(4, 1).unwrap();
        let amps = [c(0.1), Complex64::new(0.0, 0.7), c(-0.5), Complex64::new(0.3, 0.4)];
        let norm: f64 = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let psi: Vec<Complex64> = amps.iter().map(|z| z / norm).collect();
        let rho = apply_localizing_event(&psi, &site_local_jumps(&b)).unwrap();
        for (i, a) in psi.iter().enumerate() {
            for j in 0..4 {
                let expected = if i == j { a.norm_sqr() } else { 0.0 };
                assert!((rho.get(i, j) - c(expected)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn event_is_idempotent_on_diagonal_states() {
        // A Fock-diagonal mixture is a convex sum of Fock projectors, each a fixed point.
        let b = FockBasis::new(3, 2).unwrap();
        for k in 0..b.dim() {
            let mut psi = vec![c(0.0); b.dim()];
            psi[k] = c(1.0);
            let once = apply_localizing_event(&psi, &site_local_jumps(&b)).unwrap();
            assert!((once.get(k, k) - c(1.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn all_zero_amplitudes_rejected() {
        let b = FockBasis::new(2, 1).unwrap();
        let psi = vec![c(1.0), c(0.0)];
        let n1 = crate::lattice::number_operator(&b, 1).unwrap();
        assert!(apply_localizing_event(&psi, &[n1]).is_err());
        assert!(apply_localizing_event(&[c(1.0), c(1.0)], &[]).is_err());
    }

    #[test]
    fn decay_factor_values() {
        assert_eq!(coherence_decay_factor(&[1, 4], &[1, 4], 3.0, 7.0).unwrap(), 1.0);
        let f = coherence_decay_factor(&[2, 3], &[3, 2], 1.0, 1.0).unwrap();
        assert!((f - 0.1353352832366127).abs() < 1e-15);
        let f = coherence_decay_factor(&[5, 0], &[0, 5], 1.0, 1.0).unwrap();
        assert!((f - (-50.0f64).exp()).abs() < 1e-30);
        assert!(coherence_decay_factor(&[1], &[1, 0], 1.0, 1.0).is_err());
    }
}
