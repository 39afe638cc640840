//! Exact master-equation integration, single localizing events, quantum
//! trajectories and observable extraction.

mod density;
mod event;
mod fit;
mod master;
mod state;
mod trajectory;

pub use density::{expectation, pure_expectation, DensityMatrix, InvariantReport, Tolerances};
pub use event::{apply_localizing_event, coherence_decay_factor, occupation_distance};
pub use fit::{fit_exponential_decay, ExponentialFit};
pub use master::{default_time_step, evolve_master, lindblad_rhs, EvolutionSpec, Snapshot};
pub use state::{fock_state, prepare_bloch_condensate};
pub use trajectory::{mcwf_sample, EnsembleSeries, TrajectoryConfig, MAX_JUMP_PROBABILITY};

use crate::error::Result;
use crate::lattice::SparseOperator;

/// A labelled observable.
#[derive(Debug, Clone)]
pub struct Observable {
    pub label: String,
    pub operator: SparseOperator,
}

impl Observable {
    pub fn new(label: impl Into<String>, operator: SparseOperator) -> Self {
        Self {
            label: label.into(),
            operator,
        }
    }

    /// `|col><row|`, whose expectation value is the matrix element `rho[row, col]`.
    pub fn coherence(dim: usize, row: usize, col: usize) -> Self {
        Self::new(
            format!("coherence:{row}:{col}"),
            SparseOperator::from_triplets(dim, dim, [(col, row, num_complex::Complex64::new(1.0, 0.0))]),
        )
    }
}

/// One row of an observable time series.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesRecord {
    pub time: f64,
    pub observable: String,
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
}

/// Expectation values of `observables` at every snapshot (standard error 0).
pub fn observe_snapshots(
    snapshots: &[Snapshot],
    observables: &[Observable],
) -> Result<Vec<TimeSeriesRecord>> {
    let mut out = Vec::with_capacity(snapshots.len() * observables.len());
    for s in snapshots {
        for o in observables {
            let v = expectation(&o.operator, &s.rho)?;
            out.push(TimeSeriesRecord {
                time: s.time,
                observable: o.label.clone(),
                re: v.re,
                im: v.im,
                stderr: 0.0,
            });
        }
    }
    Ok(out)
}

/// `(time, value)` of one observable across snapshots.
pub fn observable_series(
    snapshots: &[Snapshot],
    operator: &SparseOperator,
) -> Result<Vec<(f64, num_complex::Complex64)>> {
    snapshots
        .iter()
        .map(|s| Ok((s.time, expectation(operator, &s.rho)?)))
        .collect()
}
