//! Fock-space scaffold and every operator the simulator needs: hopping
//! Hamiltonians, center-of-mass observables, and the number-operator jump
//! families (site-local, kernel-smeared, and momentum-kick).
//!
//! Conventions: hbar = 1, lattice constant a = 1. Sites are stored 0-based;
//! where a physical site label enters (center-of-mass position, momentum
//! phases) the label is `j + 1`, i.e. sites are numbered `1..=M`.

mod basis;
mod hamiltonian;
mod jumps;
mod momentum;
mod operator;

pub use basis::{fock_dimension, FockBasis, DEFAULT_DIMENSION_CAP};
pub use hamiltonian::{
    cm_position_operator, cm_velocity_operator, hop_operator, hopping_hamiltonian,
    number_operator, total_number_operator,
};
pub(crate) use jumps::weighted_number_sum;
pub use jumps::{
    jump_operator_kernel, kick_dissipators, site_local_jumps, kernel_jumps, KickSpectrum,
    LocalizationKernel,
};
pub use momentum::{
    first_zone, in_first_zone, jump_operator_momentum, kick_identity_residuals, momentum_annihilation,
    momentum_transfer, site_annihilation,
};
pub use operator::SparseOperator;

use crate::error::{invalid, Result};

/// Boundary condition of a one-dimensional chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Site `M - 1` couples to site `0`.
    Periodic,
    HardWall,
}

/// Parameters of a tight-binding chain: hopping `J`, on-site potential `V(j)`
/// and the boundary condition.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    sites: usize,
    hopping: f64,
    potential: Vec<f64>,
    boundary: Boundary,
}

impl LatticeSpec {
    pub fn new(hopping: f64, potential: Vec<f64>, boundary: Boundary) -> Result<Self> {
        if potential.is_empty() {
            return Err(invalid("lattice needs at least one site"));
        }
        if !hopping.is_finite() || potential.iter().any(|v| !v.is_finite()) {
            return Err(invalid("hopping and potential must be finite"));
        }
        Ok(Self {
            sites: potential.len(),
            hopping,
            potential,
            boundary,
        })
    }

    /// Chain with zero potential.
    pub fn uniform(sites: usize, hopping: f64, boundary: Boundary) -> Result<Self> {
        Self::new(hopping, vec![0.0; sites], boundary)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Nearest-neighbour bonds `(j, j + 1)`; on a ring this includes `(M - 1, 0)`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        match self.boundary {
            Boundary::Periodic => (0..self.sites).map(|j| (j, (j + 1) % self.sites)).collect(),
            Boundary::HardWall => (0..self.sites.saturating_sub(1)).map(|j| (j, j + 1)).collect(),
        }
    }
}
