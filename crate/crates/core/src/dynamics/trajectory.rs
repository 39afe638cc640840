use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::density::check_normalized;
use super::master::EvolutionSpec;
use super::{pure_expectation, Observable, TimeSeriesRecord};
use crate::error::{invalid, Error, Result};
use crate::lattice::SparseOperator;
use crate::parallel;

/// Largest jump probability allowed in a single step.
pub const MAX_JUMP_PROBABILITY: f64 = 0.1;

/// Ensemble size, master seed and step for quantum-trajectory sampling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub trajectories: usize,
    pub seed: u64,
    pub dt: f64,
}

impl TrajectoryConfig {
    pub fn new(trajectories: usize, seed: u64, dt: f64) -> Result<Self> {
        if trajectories == 0 {
            return Err(invalid("need at least one trajectory"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("time step {dt} must be positive")));
        }
        Ok(Self {
            trajectories,
            seed,
            dt,
        })
    }

    /// Independent stream for trajectory `index`, derived from the master seed.
    pub fn rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Ensemble means and standard errors at each snapshot time.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// `mean[snapshot][observable]`
    pub mean: Vec<Vec<Complex64>>,
    /// Standard error of the complex mean, `sqrt((var re + var im) / n)`.
    pub stderr: Vec<Vec<f64>>,
    pub trajectories: usize,
    pub total_jumps: u64,
}

impl EnsembleSeries {
    pub fn records(&self) -> Vec<TimeSeriesRecord> {
        let mut out = Vec::with_capacity(self.times.len() * self.labels.len());
        for (s, &t) in self.times.iter().enumerate() {
            for (o, label) in self.labels.iter().enumerate() {
                out.push(TimeSeriesRecord {
                    time: t,
                    observable: label.clone(),
                    re: self.mean[s][o].re,
                    im: self.mean[s][o].im,
                    stderr: self.stderr[s][o],
                });
            }
        }
        out
    }

    pub fn series(&self, label: &str) -> Option<Vec<(f64, Complex64, f64)>> {
        let o = self.labels.iter().position(|l| l == label)?;
        Some(
            self.times
                .iter()
                .enumerate()
                .map(|(s, &t)| (t, self.mean[s][o], self.stderr[s][o]))
                .collect(),
        )
    }
}

struct Unraveling {
    effective: SparseOperator,
    channels: Vec<(f64, SparseOperator)>,
}

impl Unraveling {
    fn new(spec: &EvolutionSpec) -> Result<Self> {
        // H_eff = H - i sum_c r_c L_c^dag L_c
        let mut effective = spec.hamiltonian.clone();
        let mut channels = Vec::new();
        for (r, l) in &spec.channels {
            if *r == 0.0 {
                continue;
            }
            let ldl = l.adjoint().matmul(l)?;
            effective = effective.add(&ldl.scale(Complex64::new(0.0, -*r)))?;
            channels.push((*r, l.clone()));
        }
        Ok(Self {
            effective,
            channels,
        })
    }

    fn drift(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = self.effective.apply(psi);
        out.iter_mut().for_each(|z| *z *= Complex64::new(0.0, -1.0));
        out
    }

    fn rk4(&self, psi: &[Complex64], dt: f64) -> Vec<Complex64> {
        let axpy = |x: &[Complex64], k: &[Complex64], h: f64| -> Vec<Complex64> {
            x.iter().zip(k).map(|(a, b)| a + b * h).collect()
        };
        let k1 = self.drift(psi);
        let k2 = self.drift(&axpy(psi, &k1, dt / 2.0));
        let k3 = self.drift(&axpy(psi, &k2, dt / 2.0));
        let k4 = self.drift(&axpy(psi, &k3, dt));
        psi.iter()
            .enumerate()
            .map(|(i, x)| x + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0))
            .collect()
    }
}

fn normalize(v: &mut [Complex64]) -> f64 {
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|z| *z /= norm);
    }
    norm
}

struct TrajectoryResult {
    values: Vec<Vec<Complex64>>,
    jumps: u64,
}

#[allow(clippy::too_many_arguments)]
fn run_trajectory(
    index: usize,
    psi0: &[Complex64],
    model: &Unraveling,
    observables: &[Observable],
    config: &TrajectoryConfig,
    steps: usize,
    dt: f64,
    stride: usize,
) -> Result<TrajectoryResult> {
    let mut rng = config.rng(index);
    let mut psi = psi0.to_vec();
    let observe = |psi: &[Complex64]| -> Vec<Complex64> {
        observables
            .iter()
            .map(|o| pure_expectation(&o.operator, psi))
            .collect()
    };
    let mut values = vec![observe(&psi)];
    let mut jumps = 0;
    let mut weights = vec![0.0; model.channels.len()];
    for step in 1..=steps {
        let mut total = 0.0;
        for (w, (r, l)) in weights.iter_mut().zip(&model.channels) {
            let lpsi = l.apply(&psi);
            *w = 2.0 * r * lpsi.iter().map(|z| z.norm_sqr()).sum::<f64>();
            total += *w;
        }
        let probability = total * dt;
        if probability > MAX_JUMP_PROBABILITY {
            return Err(Error::StepTooLarge { step, probability });
        }
        let mut next = model.rk4(&psi, dt);
        normalize(&mut next);
        let u: f64 = rng.random();
        if u < probability {
            let mut pick = rng.random::<f64>() * total;
            let mut channel = weights.len() - 1;
            for (c, w) in weights.iter().enumerate() {
                if pick < *w {
                    channel = c;
                    break;
                }
                pick -= w;
            }
            let mut jumped = model.channels[channel].1.apply(&next);
            if normalize(&mut jumped) > 0.0 {
                next = jumped;
                jumps += 1;
            }
        }
        psi = next;
        if step % stride == 0 || step == steps {
            values.push(observe(&psi));
        }
    }
    Ok(TrajectoryResult { values, jumps })
}

/// Monte Carlo wavefunction unraveling of the master equation in `spec`.
///
/// Each step propagates `psi` under `H_eff = H - i sum r L^dag L` (RK4,
/// renormalized) and jumps with probability `dt sum_c 2 r_c <L_c^dag L_c>`;
/// the factor 2 matches the `-r(L^dag L rho + rho L^dag L - 2 L rho L^dag)`
/// convention of the master equation. The step is `config.dt`; total time
/// and snapshot stride come from `spec`. Trajectory `k` draws from its own
/// ChaCha stream, and the ensemble is reduced in trajectory order.
pub fn mcwf_sample(
    psi0: &[Complex64],
    spec: &EvolutionSpec,
    config: &TrajectoryConfig,
    observables: &[Observable],
) -> Result<EnsembleSeries> {
    check_normalized(psi0)?;
    if psi0.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: psi0.len(),
        });
    }
    for o in observables {
        if o.operator.rows() != spec.dim() || o.operator.cols() != spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.dim(),
                found: o.operator.rows(),
            });
        }
    }
    let model = Unraveling::new(spec)?;
    let steps = (spec.total_time / config.dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 {
        config.dt
    } else {
        spec.total_time / steps as f64
    };
    let stride = spec.snapshot_stride.max(1);

    let results = parallel::map_indexed(config.trajectories, |k| {
        run_trajectory(k, psi0, &model, observables, config, steps, dt, stride)
    });

    let mut times: Vec<f64> = (0..=steps)
        .filter(|s| s % stride == 0)
        .map(|s| s as f64 * dt)
        .collect();
    if !steps.is_multiple_of(stride) {
        times.push(steps as f64 * dt);
    }
    let snapshots = times.len();
    let nobs = observables.len();
    let n = config.trajectories as f64;
    let mut sum = vec![vec![Complex64::default(); nobs]; snapshots];
    let mut total_jumps = 0;
    let mut finished = Vec::with_capacity(results.len());
    for r in results {
        let r = r?;
        total_jumps += r.jumps;
        for (s, row) in r.values.iter().enumerate() {
            for (o, v) in row.iter().enumerate() {
                sum[s][o] += v;
            }
        }
        finished.push(r.values);
    }
    let mean: Vec<Vec<Complex64>> = sum
        .iter()
        .map(|row| row.iter().map(|z| z / n).collect())
        .collect();
    let mut var = vec![vec![0.0; nobs]; snapshots];
    for values in &finished {
        for (s, row) in values.iter().enumerate() {
            for (o, v) in row.iter().enumerate() {
                var[s][o] += (v - mean[s][o]).norm_sqr();
            }
        }
    }
    let stderr = var
        .iter()
        .map(|row| {
            row.iter()
                .map(|v| {
                    if config.trajectories > 1 {
                        (v / (n - 1.0) / n).sqrt()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    Ok(EnsembleSeries {
        times,
        labels: observables.iter().map(|o| o.label.clone()).collect(),
        mean,
        stderr,
        trajectories: config.trajectories,
        total_jumps,
    })
}
