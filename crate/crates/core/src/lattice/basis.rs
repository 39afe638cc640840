use std::collections::HashMap;

use crate::error::{invalid, Error, Result};

/// Default cap on the Fock-space dimension accepted by [`FockBasis::new`].
pub const DEFAULT_DIMENSION_CAP: usize = 20_000;

/// Number of ways to place `n` bosons on `m` sites, `binomial(n + m - 1, n)`.
///
/// Saturates at `usize::MAX` instead of overflowing.
pub fn fock_dimension(m: usize, n: usize) -> usize {
    if m == 0 {
        return if n == 0 { 1 } else { 0 };
    }
    // binomial(n + m - 1, k) with k = min(n, m - 1)
    let top = n + m - 1;
    let k = n.min(m - 1);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (top - i) as u128 / (i + 1) as u128;
        if acc > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    acc as usize
}

/// Ordered enumeration of the `N`-boson occupation vectors on `M` sites.
///
/// States are listed in reverse-lexicographic order: `(N, 0, ..., 0)` first,
/// `(0, ..., 0, N)` last.
#[derive(Debug, Clone)]
pub struct FockBasis {
    sites: usize,
    particles: usize,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl FockBasis {
    /// Builds the basis with the default dimension cap.
    pub fn new(sites: usize, particles: usize) -> Result<Self> {
        Self::with_cap(sites, particles, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cap(sites: usize, particles: usize, cap: usize) -> Result<Self> {
        if sites == 0 {
            return Err(invalid("a lattice needs at least one site"));
        }
        let dim = fock_dimension(sites, particles);
        if dim > cap {
            return Err(Error::Capacity {
                sites,
                particles,
                dim,
                cap,
            });
        }
        let mut states = Vec::with_capacity(dim);
        let mut current = vec![0u32; sites];
        enumerate(&mut current, 0, particles as u32, &mut states);
        debug_assert_eq!(states.len(), dim);
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self {
            sites,
            particles,
            states,
            index,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    /// Basis index of an occupation vector, if it belongs to this basis.
    pub fn index_of(&self, occupations: &[u32]) -> Option<usize> {
        self.index.get(occupations).copied()
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.sites {
            Err(invalid(format!(
                "site index {site} out of range for {} sites",
                self.sites
            )))
        } else {
            Ok(())
        }
    }
}

fn enumerate(current: &mut Vec<u32>, site: usize, remaining: u32, out: &mut Vec<Vec<u32>>) {
    if site + 1 == current.len() {
        current[site] = remaining;
        out.push(current.clone());
        return;
    }
    for n in (0..=remaining).rev() {
        current[site] = n;
        enumerate(current, site + 1, remaining - n, out);
    }
    current[site] = 0;
}
