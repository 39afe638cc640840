//! Built-in demos that reproduce closed-form values with no config.

use num_complex::Complex64;

use locev::dynamics::{apply_localizing_event, fock_state};
use locev::lattice::{fock_dimension, kick_identity_residuals, site_local_jumps, FockBasis, LocalizationKernel};
use locev::rates::{fbar_squared, gamma_from_realspace, gamma_from_spectrum, NoiseModel};
use locev::spdm::{density_profile, evolve_spdm, flatness_report, ground_state_spdm, TrapSpec};

use crate::error::CliError;
use crate::output::InvariantCheck;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Demo {
    Eq12,
    Fbar,
    Eq28Identity,
    FlatNoiseGamma,
    Fig2,
    All,
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub name: &'static str,
    pub lines: Vec<String>,
    pub checks: Vec<InvariantCheck>,
}

impl DemoReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn run_demo(demo: Demo) -> Result<Vec<DemoReport>, CliError> {
    Ok(match demo {
        Demo::Eq12 => vec![eq12()?],
        Demo::Fbar => vec![fbar()?],
        Demo::Eq28Identity => vec![eq28_identity()?],
        Demo::FlatNoiseGamma => vec![flat_noise_gamma()?],
        Demo::Fig2 => vec![fig2()?],
        Demo::All => vec![eq12()?, fbar()?, eq28_identity()?, flat_noise_gamma()?, fig2()?],
    })
}

/// One event on `(|2,3> + |3,2>)/sqrt 2` with site-local jumps.
pub fn eq12() -> Result<DemoReport, CliError> {
    let b = FockBasis::new(2, 5)?;
    let (i, j) = (b.index_of(&[2, 3]).unwrap(), b.index_of(&[3, 2]).unwrap());
    let psi: Vec<Complex64> = fock_state(&b, &[2, 3])?
        .iter()
        .zip(fock_state(&b, &[3, 2])?)
        .map(|(a, c)| (a + c) / 2f64.sqrt())
        .collect();
    let rho = apply_localizing_event(&psi, &site_local_jumps(&b))?;
    let block = [[rho.get(i, i), rho.get(i, j)], [rho.get(j, i), rho.get(j, j)]];
    let lines = vec![
        "density matrix on {|2,3>, |3,2>}:".to_string(),
        format!("  [{:.12} {:.12}]", block[0][0].re, block[0][1].re),
        format!("  [{:.12} {:.12}]", block[1][0].re, block[1][1].re),
        format!("off-diagonal 6/13 = {:.12}", 6.0 / 13.0),
    ];
    let off = (block[0][1] - 6.0 / 13.0).norm().max((block[1][0] - 6.0 / 13.0).norm());
    let diag = (block[0][0] - 0.5).norm().max((block[1][1] - 0.5).norm());
    Ok(DemoReport {
        name: "eq12",
        lines,
        checks: vec![
            InvariantCheck::at_most("off_diagonal_error", off, 1e-12),
            InvariantCheck::at_most("diagonal_error", diag, 1e-12),
        ],
    })
}

pub fn fbar() -> Result<DemoReport, CliError> {
    let delta = fbar_squared(&LocalizationKernel::delta())?;
    let three = fbar_squared(&LocalizationKernel::three_point())?;
    let exact = 0.5 + 2.0 * (0.5f64.sqrt() - 0.5).powi(2);
    Ok(DemoReport {
        name: "fbar",
        lines: vec![
            format!("delta kernel: {delta}"),
            format!("three-point kernel: {three:.6}"),
        ],
        checks: vec![
            InvariantCheck::at_most("delta_error", (delta - 2.0).abs(), 0.0),
            InvariantCheck::at_most("three_point_error", (three - exact).abs(), 1e-6),
            InvariantCheck::at_most("three_point_vs_0.586", (three - 0.586).abs(), 5e-4),
        ],
    })
}

/// Both kick identities on every `(M, N)` basis with dimension at most 500.
pub fn eq28_identity() -> Result<DemoReport, CliError> {
    let (mut transfer, mut square, mut bases): (f64, f64, usize) = (0.0, 0.0, 0);
    for m in 1..=12 {
        for n in 0..=20 {
            if fock_dimension(m, n) > 500 {
                continue;
            }
            let (a, b) = kick_identity_residuals(&FockBasis::new(m, n)?)?;
            transfer = transfer.max(a);
            square = square.max(b);
            bases += 1;
        }
    }
    Ok(DemoReport {
        name: "eq28-identity",
        lines: vec![
            format!("bases checked: {bases}"),
            format!("max |sum_k c+_(k+p) c_k - L_p| = {transfer:.3e}"),
            format!("max |M^-1 sum_p L_p+ L_p - sum_i n_i^2| = {square:.3e}"),
        ],
        checks: vec![
            InvariantCheck::at_most("momentum_transfer", transfer, 1e-12),
            InvariantCheck::at_most("number_squares", square, 1e-12),
        ],
    })
}

pub fn flat_noise_gamma() -> Result<DemoReport, CliError> {
    let (m, tau_c, v2) = (16, 0.5, 1.3);
    let noise = NoiseModel::flat(m, tau_c, v2)?;
    let spectral = gamma_from_spectrum(&noise);
    let real = gamma_from_realspace(&noise);
    let exact = 2.0 * tau_c * v2;
    Ok(DemoReport {
        name: "flat-noise-gamma",
        lines: vec![
            format!("M={m} tau_c={tau_c} v^2={v2}"),
            format!("gamma (spectrum) = {spectral:.15}"),
            format!("gamma (real space) = {real:.15}"),
            format!("2 tau_c v^2 = {exact:.15}"),
        ],
        checks: vec![
            InvariantCheck::at_most("spectrum_error", (spectral - exact).abs(), 1e-12),
            InvariantCheck::at_most("realspace_error", (real - exact).abs(), 1e-12),
        ],
    })
}

/// Trapped SPDM under localizing events with `Omega/J = 0.1`, 41 sites,
/// `r = 0.5`, at `t = 4` and `t = 8/r`.
pub fn fig2() -> Result<DemoReport, CliError> {
    let trap = TrapSpec::parabolic(41, 1.0, 0.1, 0.5)?;
    let g = ground_state_spdm(&trap, 1.0)?;
    let start = flatness_report(&density_profile(&g))?;
    let mut lines = vec![format!(
        "t=0: kurtosis {:.4}, variance {:.4}",
        start.kurtosis, start.variance
    )];
    let mut checks = Vec::new();
    for t in [4.0, 8.0 / trap.rate()] {
        let run = evolve_spdm(&g, &trap, t, 0.005, usize::MAX)?;
        let state = &run.last().expect("final snapshot").state;
        let end = flatness_report(&density_profile(state))?;
        let matched = end.matched_variance.unwrap_or(f64::NAN);
        lines.push(format!(
            "t={t}: kurtosis {:.4}, variance {:.4}, matched central Gaussian variance {:.4}, trace {:.12}",
            end.kurtosis,
            end.variance,
            matched,
            state.trace()
        ));
        checks.push(InvariantCheck::at_most(format!("kurtosis_below_3_t{t}"), end.kurtosis, 3.0));
        checks.push(InvariantCheck::at_least(
            format!("matched_minus_variance_t{t}"),
            matched - end.variance,
            0.0,
        ));
        checks.push(InvariantCheck::at_most(format!("trace_error_t{t}"), (state.trace() - 1.0).abs(), 1e-9));
    }
    Ok(DemoReport { name: "fig2", lines, checks })
}
