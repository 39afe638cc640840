//! Executes a parsed config and writes its CSV and run record.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use serde_json::json;

use locev::continuum::{self, CollapseShape, Grid, KickDistribution, WavefunctionGrid};
use locev::dynamics::{
    default_time_step, evolve_master, fit_exponential_decay, fock_state, mcwf_sample, observable_series,
    observe_snapshots, prepare_bloch_condensate, DensityMatrix, EvolutionSpec, Observable, Tolerances,
    TrajectoryConfig,
};
use locev::lattice::{
    cm_position_operator, cm_velocity_operator, hopping_hamiltonian, kernel_jumps, kick_dissipators,
    number_operator, site_local_jumps, Boundary, FockBasis, KickSpectrum, LatticeSpec, LocalizationKernel,
    SparseOperator,
};
use locev::rates::{self, DeepLatticeMapping, NHighFit, NoiseModel};
use locev::spdm::{self, TrapSpec};

use crate::config::*;
use crate::error::CliError;
use crate::output::*;

/// Table, checks and free-form summary of one experiment.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: Table,
    pub invariants: Vec<InvariantCheck>,
    pub summary: serde_json::Value,
}

/// Runs `config`, writes `<output>` and `<output minus .csv>.run.json`, and
/// returns the record. Failed invariant checks are recorded, not raised.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord, CliError> {
    let start = Instant::now();
    let out = execute(config)?;
    let duration = start.elapsed().as_secs_f64();
    let csv = Path::new(&config.output);
    write_csv(csv, &out.table)?;
    let resolved = config.resolved();
    let record = RunRecord {
        kind: config.kind.name().to_string(),
        config_hash: config_hash(&resolved),
        config: resolved,
        seed: config.seed,
        duration_seconds: duration,
        csv: config.output.clone(),
        columns: out.table.header.iter().map(|s| s.to_string()).collect(),
        rows: out.table.rows.len(),
        invariants: out.invariants,
        summary: out.summary,
        parallel: locev::parallel::is_parallel(),
        threads: rayon::current_num_threads(),
    };
    write_record(&record_path(csv), &record)?;
    Ok(record)
}

/// Runs the experiment without touching the filesystem.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let tol = &config.tolerances;
    match &config.params {
        Params::Collapse(p) => run_collapse(p, tol),
        Params::Kick(p) => run_kick(p, tol),
        Params::Master(p) => run_master(p, tol),
        Params::Trajectories(p) => run_trajectories(p, tol, config.seed),
        Params::Spdm(p) => run_spdm(p, tol),
        Params::RatesSweep(p) => run_rates_sweep(p),
        Params::DampingSweep(p) => run_damping_sweep(p),
    }
}

fn kernel_table(rho: &continuum::ContinuumDensityOperator, stride: usize) -> Table {
    let grid = rho.grid();
    let mut t = Table::new(KERNEL_HEADER);
    for i in (0..grid.points()).step_by(stride) {
        for j in (0..grid.points()).step_by(stride) {
            let z = rho.get(i, j);
            t.push(vec![Cell::F(grid.x(i)), Cell::F(grid.x(j)), Cell::F(z.re), Cell::F(z.im)]);
        }
    }
    t
}

fn hermiticity(rho: &continuum::ContinuumDensityOperator) -> f64 {
    let m = rho.matrix();
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn run_collapse(p: &CollapseParams, tol: &ToleranceOverrides) -> Result<RunOutput, CliError> {
    let grid = Grid::symmetric(p.half_width, p.points)?;
    let psi = WavefunctionGrid::gaussian(p.sigma0, grid)?;
    let rho = continuum::collapse_density_operator(&psi, &CollapseShape::gaussian(p.l)?)?;
    let closed = continuum::gaussian_collapse_closed_form(p.sigma0, p.l)?;
    let mut worst: f64 = 0.0;
    for i in 0..grid.points() {
        for j in 0..grid.points() {
            worst = worst.max((rho.get(i, j) - closed.density(grid.x(i), grid.x(j))).norm());
        }
    }
    Ok(RunOutput {
        table: kernel_table(&rho, p.stride),
        invariants: vec![
            InvariantCheck::at_most("trace", (rho.trace() - 1.0).abs(), tol.trace.unwrap_or(continuum::TRACE_TOL)),
            InvariantCheck::at_most(
                "hermiticity",
                hermiticity(&rho),
                tol.hermiticity.unwrap_or(continuum::HERMITICITY_TOL),
            ),
            InvariantCheck::at_most("closed_form_deviation", worst, 1e-6),
        ],
        summary: json!({
            "purity": rho.purity(),
            "coherence_length": closed.sigma,
        }),
    })
}

fn run_kick(p: &KickParams, tol: &ToleranceOverrides) -> Result<RunOutput, CliError> {
    let grid = Grid::symmetric(p.half_width, p.points)?;
    let psi = WavefunctionGrid::gaussian(p.sigma0, grid)?;
    let dist = match p.spectrum {
        KickShape::Gaussian { center, spread, samples } => KickDistribution::gaussian(center, spread, samples)?,
        KickShape::Uniform { kmax, samples } => KickDistribution::uniform(kmax, samples)?,
    };
    let rho = continuum::kick_density_operator(&psi, &dist)?;
    let diag = rho
        .diagonal()
        .iter()
        .zip(psi.amplitudes())
        .map(|(d, a)| (d - a.norm_sqr()).abs())
        .fold(0.0, f64::max);
    let residual = continuum::factorization_residual(&rho, &psi, |d| dist.characteristic(d), 2.0 * p.half_width)?;
    Ok(RunOutput {
        table: kernel_table(&rho, p.stride),
        invariants: vec![
            InvariantCheck::at_most("trace", (rho.trace() - 1.0).abs(), tol.trace.unwrap_or(continuum::TRACE_TOL)),
            InvariantCheck::at_most(
                "hermiticity",
                hermiticity(&rho),
                tol.hermiticity.unwrap_or(continuum::HERMITICITY_TOL),
            ),
            InvariantCheck::at_most("diagonal_change", diag, 1e-12),
            InvariantCheck::at_most("factorization_residual", residual, 1e-8),
        ],
        summary: json!({ "purity": rho.purity() }),
    })
}

fn boundary(b: &BoundaryName) -> Boundary {
    match b {
        BoundaryName::Periodic => Boundary::Periodic,
        BoundaryName::HardWall => Boundary::HardWall,
    }
}

/// Dissipator channels for a jump specification.
pub fn channels(
    basis: &FockBasis,
    bc: Boundary,
    rate: f64,
    jumps: &JumpSpec,
) -> Result<Vec<(f64, SparseOperator)>, CliError> {
    let uniform = |ops: Vec<SparseOperator>| ops.into_iter().map(|l| (rate, l)).collect();
    Ok(match jumps {
        JumpSpec::SiteLocal => uniform(site_local_jumps(basis)),
        JumpSpec::ThreePoint => uniform(kernel_jumps(basis, &LocalizationKernel::three_point(), bc)?),
        JumpSpec::Kernel { offsets, amplitudes } => {
            let k = LocalizationKernel::real(offsets.clone(), amplitudes)?;
            uniform(kernel_jumps(basis, &k, bc)?)
        }
        JumpSpec::Kick { weights } => {
            let spectrum = match weights {
                Some(w) => KickSpectrum::new(w.clone())?,
                None => KickSpectrum::uniform(basis.sites()),
            };
            kick_dissipators(basis, &spectrum, rate)?
        }
        JumpSpec::Noise { tau_c, spectrum } => {
            let noise = NoiseModel::from_spectrum(*tau_c, spectrum.clone())?;
            rates::lindblad_from_noise(&noise, basis)?.channels(basis)?
        }
    })
}

/// Closed-form center-of-mass damping on a ring of `sites` sites.
pub fn predicted_damping(jumps: &JumpSpec, rate: f64, sites: usize) -> Result<f64, CliError> {
    Ok(match jumps {
        JumpSpec::SiteLocal => rates::cm_damping_rate(rate, &rates::EventKind::SiteLocal)?,
        JumpSpec::ThreePoint => rate * rates::fbar_squared_ring(&LocalizationKernel::three_point(), sites)?,
        JumpSpec::Kernel { offsets, amplitudes } => {
            rate * rates::fbar_squared_ring(&LocalizationKernel::real(offsets.clone(), amplitudes)?, sites)?
        }
        JumpSpec::Kick { weights } => {
            let spectrum = match weights {
                Some(w) => KickSpectrum::new(w.clone())?,
                None => KickSpectrum::uniform(sites),
            };
            spectrum
                .iter()
                .map(|(p, g)| 4.0 * rate * g * (std::f64::consts::PI * p as f64 / sites as f64).sin().powi(2))
                .sum()
        }
        JumpSpec::Noise { tau_c, spectrum } => {
            rates::gamma_from_spectrum(&NoiseModel::from_spectrum(*tau_c, spectrum.clone())?)
        }
    })
}

fn observable(label: &str, basis: &FockBasis, spec: &LatticeSpec) -> Result<Observable, CliError> {
    let parts: Vec<&str> = label.split(':').collect();
    let op = match parts.as_slice() {
        ["v_cm"] => cm_velocity_operator(basis, spec)?,
        ["x_cm"] => cm_position_operator(basis)?,
        ["n", s] => number_operator(basis, s.parse().unwrap_or(usize::MAX))?,
        ["coherence", a, b] => {
            let (a, b) = (a.parse().unwrap_or(usize::MAX), b.parse().unwrap_or(usize::MAX));
            if a >= basis.dim() || b >= basis.dim() {
                return Err(locev::Error::InvalidArgument(format!(
                    "observable {label} indexes past the Fock dimension {}",
                    basis.dim()
                ))
                .into());
            }
            Observable::coherence(basis.dim(), a, b).operator
        }
        _ => return Err(CliError::Config(vec![format!("unknown observable \"{label}\"")])),
    };
    Ok(Observable::new(label, op))
}

struct LatticeSetup {
    basis: FockBasis,
    hamiltonian: SparseOperator,
    channels: Vec<(f64, SparseOperator)>,
    psi0: Vec<Complex64>,
    observables: Vec<Observable>,
    dt: f64,
}

fn setup_lattice(p: &LatticeRunParams) -> Result<LatticeSetup, CliError> {
    let l = &p.lattice;
    let basis = FockBasis::with_cap(l.sites, l.particles, MASTER_DIMENSION_CAP)?;
    let bc = boundary(&l.boundary);
    let spec = LatticeSpec::new(l.hopping, l.potential.clone().unwrap_or(vec![0.0; l.sites]), bc)?;
    let hamiltonian = hopping_hamiltonian(&basis, &spec)?;
    let channels = channels(&basis, bc, p.rate, &p.jumps)?;
    let psi0 = match &p.initial {
        InitialState::Bloch { q } => prepare_bloch_condensate(&basis, *q)?,
        InitialState::Fock { occupations } => fock_state(&basis, occupations)?,
        InitialState::Superposition { states } => {
            if states.is_empty() {
                return Err(CliError::Config(vec!["params.initial.superposition is empty".into()]));
            }
            let mut psi = vec![Complex64::new(0.0, 0.0); basis.dim()];
            for s in states {
                for (a, b) in psi.iter_mut().zip(fock_state(&basis, s)?) {
                    *a += b;
                }
            }
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            psi.iter().map(|z| z / norm).collect()
        }
    };
    let observables = p
        .observables
        .iter()
        .map(|o| observable(o, &basis, &spec))
        .collect::<Result<Vec<_>, _>>()?;
    let n = l.particles.max(1) as f64;
    // strongest channel, in units where a site-local jump has ||L||^2 = N^2
    let r_eff = channels
        .iter()
        .map(|(r, op)| r * op.entries().iter().map(|e| e.2.norm_sqr()).fold(0.0, f64::max) / (n * n))
        .fold(0.0, f64::max);
    let dt = p.dt.unwrap_or_else(|| default_time_step(l.hopping, r_eff, l.particles));
    Ok(LatticeSetup {
        basis,
        hamiltonian,
        channels,
        psi0,
        observables,
        dt,
    })
}

fn tolerances(tol: &ToleranceOverrides) -> Tolerances {
    let d = Tolerances::default();
    Tolerances {
        trace: tol.trace.unwrap_or(d.trace),
        hermiticity: tol.hermiticity.unwrap_or(d.hermiticity),
        positivity: tol.positivity.unwrap_or(d.positivity),
    }
}

fn series_table(records: impl IntoIterator<Item = locev::dynamics::TimeSeriesRecord>) -> Table {
    let mut t = Table::new(SERIES_HEADER);
    for r in records {
        t.push(vec![Cell::F(r.time), Cell::S(r.observable), Cell::F(r.re), Cell::F(r.im), Cell::F(r.stderr)]);
    }
    t
}

fn run_master(p: &LatticeRunParams, tol: &ToleranceOverrides) -> Result<RunOutput, CliError> {
    let s = setup_lattice(p)?;
    let tols = tolerances(tol);
    let spec = EvolutionSpec::new(s.hamiltonian, s.channels, s.dt, p.total_time)?
        .snapshot_stride(p.snapshot_stride)
        .tolerances(tols);
    let snaps = evolve_master(&DensityMatrix::from_pure(&s.psi0)?, &spec)?;
    let (mut trace, mut herm, mut neg) = (0.0f64, 0.0f64, 0.0f64);
    for snap in &snaps {
        let r = snap.rho.invariants();
        trace = trace.max(r.trace_error);
        herm = herm.max(r.hermiticity_error);
        neg = neg.max(-r.min_eigenvalue);
    }
    Ok(RunOutput {
        table: series_table(observe_snapshots(&snaps, &s.observables)?),
        invariants: vec![
            InvariantCheck::at_most("trace", trace, tols.trace),
            InvariantCheck::at_most("hermiticity", herm, tols.hermiticity),
            InvariantCheck::at_most("positivity", neg, tols.positivity),
        ],
        summary: json!({
            "dimension": s.basis.dim(),
            "dt": spec.effective_dt(),
            "steps": spec.steps(),
            "snapshots": snaps.len(),
        }),
    })
}

fn run_trajectories(p: &LatticeRunParams, tol: &ToleranceOverrides, seed: u64) -> Result<RunOutput, CliError> {
    let s = setup_lattice(p)?;
    let spec = EvolutionSpec::new(s.hamiltonian, s.channels, s.dt, p.total_time)?.snapshot_stride(p.snapshot_stride);
    let config = TrajectoryConfig::new(p.trajectories.unwrap_or(1000), seed, s.dt)?;
    let mut observables = s.observables.clone();
    let norm_label = "__norm";
    observables.push(Observable::new(norm_label, SparseOperator::identity(s.basis.dim())));
    let ensemble = mcwf_sample(&s.psi0, &spec, &config, &observables)?;
    let norm_err = ensemble
        .series(norm_label)
        .expect("norm tracked")
        .iter()
        .map(|(_, z, _)| (z - 1.0).norm())
        .fold(0.0, f64::max);
    let records = ensemble.records().into_iter().filter(|r| r.observable != norm_label);
    Ok(RunOutput {
        table: series_table(records),
        invariants: vec![InvariantCheck::at_most(
            "trajectory_norm",
            norm_err,
            tol.trace.unwrap_or(Tolerances::default().trace),
        )],
        summary: json!({
            "dimension": s.basis.dim(),
            "dt": config.dt,
            "trajectories": ensemble.trajectories,
            "total_jumps": ensemble.total_jumps,
        }),
    })
}

fn run_spdm(p: &SpdmParams, tol: &ToleranceOverrides) -> Result<RunOutput, CliError> {
    let (trap, initial) = match p.boundary {
        BoundaryName::HardWall => {
            let trap = TrapSpec::parabolic(p.window, p.hopping, p.curvature, p.rate)?;
            let g = spdm::ground_state_spdm(&trap, p.particles)?;
            (trap, g)
        }
        BoundaryName::Periodic => {
            let start = TrapSpec::parabolic(p.window, p.hopping, p.initial_curvature, 0.0)?;
            (
                TrapSpec::ring(p.window, p.hopping, p.rate)?,
                spdm::ground_state_spdm(&start, p.particles)?,
            )
        }
    };
    let run = spdm::evolve_spdm(&initial, &trap, p.total_time, p.dt, p.snapshot_stride)?;
    let mut table = Table::new(PROFILE_HEADER);
    let mut trace: f64 = 0.0;
    let mut leak: f64 = 0.0;
    let mut kurtosis = Vec::new();
    for snap in &run {
        let profile = spdm::density_profile(&snap.state);
        for (j, d) in profile.iter().enumerate() {
            table.push(vec![Cell::F(snap.time), Cell::I(j as i64), Cell::F(*d)]);
        }
        trace = trace.max((snap.state.trace() - p.particles).abs());
        let peak = profile.iter().cloned().fold(0.0, f64::max);
        leak = leak.max(profile[0].max(profile[profile.len() - 1]) / peak);
        if p.boundary == BoundaryName::HardWall {
            kurtosis.push(spdm::flatness_report(&profile)?.kurtosis);
        }
    }
    let last = spdm::density_profile(&run.last().expect("at least one snapshot").state);
    let mut invariants = vec![InvariantCheck::at_most(
        "trace",
        trace,
        tol.trace.unwrap_or(1e-9) * p.particles.max(1.0),
    )];
    let summary = match p.boundary {
        BoundaryName::HardWall => {
            invariants.push(InvariantCheck::at_most("boundary_density", leak, 1e-6));
            let end = spdm::flatness_report(&last)?;
            json!({
                "kurtosis": kurtosis,
                "final_variance": end.variance,
                "final_matched_variance": end.matched_variance,
            })
        }
        BoundaryName::Periodic => {
            let hi = last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = last.iter().cloned().fold(f64::INFINITY, f64::min);
            json!({ "final_density_spread": hi - lo })
        }
    };
    Ok(RunOutput { table, invariants, summary })
}

fn run_rates_sweep(p: &RatesSweepParams) -> Result<RunOutput, CliError> {
    let fit = NHighFit { c0: p.fit.c0, c1: p.fit.c1, c2: p.fit.c2 };
    let m = p.mapping;
    let mapping = DeepLatticeMapping {
        hopping_prefactor: m.hopping_prefactor,
        hopping_exponent: m.hopping_exponent,
        hopping_decay: m.hopping_decay,
        interaction_prefactor: m.interaction_prefactor,
        interaction_exponent: m.interaction_exponent,
    };
    let points = rates::gamma_prime_sweep(&p.depths, &fit, &mapping, p.atoms, p.sites)?;
    let mut table = Table::new(RATES_HEADER);
    for pt in &points {
        table.push(vec![Cell::F(pt.depth), Cell::F(pt.n_high), Cell::F(pt.gamma_prime)]);
    }
    let bad = points.iter().filter(|pt| !pt.gamma_prime.is_finite() || pt.gamma_prime < 0.0).count();
    let growth = match (points.first(), points.last()) {
        (Some(a), Some(b)) if a.gamma_prime > 0.0 => Some(b.gamma_prime / a.gamma_prime),
        _ => None,
    };
    Ok(RunOutput {
        table,
        invariants: vec![InvariantCheck::at_most("invalid_gamma_prime", bad as f64, 0.0)],
        summary: json!({
            "growth_last_over_first": growth,
            "note": "U(V) uses the configured deep-lattice mapping; growth is qualitative only",
        }),
    })
}

/// One point of a damping sweep: `(fitted, predicted)`.
pub fn damping_point(p: &DampingSweepParams, rate: f64) -> Result<(f64, f64), CliError> {
    let basis = FockBasis::with_cap(p.sites, p.particles, MASTER_DIMENSION_CAP)?;
    let lattice = LatticeSpec::uniform(p.sites, p.hopping, Boundary::Periodic)?;
    let spec = EvolutionSpec::new(
        hopping_hamiltonian(&basis, &lattice)?,
        channels(&basis, Boundary::Periodic, rate, &p.jumps)?,
        p.dt,
        p.total_time,
    )?
    .snapshot_stride(p.snapshot_stride);
    let rho0 = DensityMatrix::from_pure(&prepare_bloch_condensate(&basis, p.q)?)?;
    let snaps = evolve_master(&rho0, &spec)?;
    let series = observable_series(&snaps, &cm_velocity_operator(&basis, &lattice)?)?;
    let times: Vec<f64> = series.iter().map(|s| s.0).collect();
    let values: Vec<f64> = series.iter().map(|s| s.1.re).collect();
    let fit = fit_exponential_decay(&times, &values)?;
    Ok((fit.rate, predicted_damping(&p.jumps, rate, p.sites)?))
}

fn run_damping_sweep(p: &DampingSweepParams) -> Result<RunOutput, CliError> {
    let results = locev::parallel::map_indexed(p.rates.len(), |i| damping_point(p, p.rates[i]));
    let mut table = Table::new(DAMPING_HEADER);
    let mut worst: f64 = 0.0;
    for (r, res) in p.rates.iter().zip(results) {
        let (fitted, predicted) = res?;
        worst = worst.max(((fitted - predicted) / predicted).abs());
        table.push(vec![Cell::F(*r), Cell::F(fitted), Cell::F(predicted)]);
    }
    Ok(RunOutput {
        table,
        invariants: vec![InvariantCheck::at_most("relative_deviation", worst, 1e-2)],
        summary: json!({ "points": p.rates.len() }),
    })
}
