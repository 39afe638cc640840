use locev::dynamics::*;
use locev::lattice::*;
use locev::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn uniform_superposition(dim: usize) -> Vec<Complex64> {
    vec![c(1.0 / (dim as f64).sqrt()); dim]
}

fn max_norm(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn empty(dim: usize) -> SparseOperator {
    SparseOperator::zeros(dim, dim)
}

#[test]
fn rhs_vanishes_on_fock_projector() {
    let b = FockBasis::new(3, 2).unwrap();
    let spec =
        EvolutionSpec::with_uniform_rate(empty(b.dim()), 0.7, site_local_jumps(&b), 0.01, 1.0)
            .unwrap();
    for k in 0..b.dim() {
        let rho = DensityMatrix::basis_projector(b.dim(), k).unwrap();
        assert_eq!(lindblad_rhs(&spec, &rho).unwrap().norm(), 0.0);
    }
}

#[test]
fn rhs_on_two_three_coherence() {
    let b = FockBasis::new(2, 5).unwrap();
    let (i, j) = (b.index_of(&[2, 3]).unwrap(), b.index_of(&[3, 2]).unwrap());
    let mut psi = vec![c(0.0); b.dim()];
    psi[i] = c(0.6);
    psi[j] = c(0.8);
    let rho = DensityMatrix::from_pure(&psi).unwrap();
    let spec =
        EvolutionSpec::with_uniform_rate(empty(b.dim()), 1.0, site_local_jumps(&b), 0.01, 1.0)
            .unwrap();
    let d = lindblad_rhs(&spec, &rho).unwrap();
    assert!((d[(i, j)] + rho.get(i, j) * 2.0).norm() < 1e-14);
    assert!((d[(j, i)] + rho.get(j, i) * 2.0).norm() < 1e-14);
    assert_eq!(d[(i, i)], c(0.0));
}

#[test]
fn von_neumann_term_is_traceless() {
    let b = FockBasis::new(4, 2).unwrap();
    let spec = LatticeSpec::new(1.0, vec![0.3, 0.0, -0.2, 0.5], Boundary::HardWall).unwrap();
    let h = hopping_hamiltonian(&b, &spec).unwrap();
    let ev = EvolutionSpec::new(h, vec![], 0.01, 1.0).unwrap();
    let rho = DensityMatrix::from_pure(&uniform_superposition(b.dim())).unwrap();
    let d = lindblad_rhs(&ev, &rho).unwrap();
    assert!(d.trace().norm() < 1e-14);
    assert!(d.norm() > 0.1);
}

#[test]
fn rhs_dimension_mismatch() {
    let spec = EvolutionSpec::new(SparseOperator::identity(3), vec![], 0.01, 1.0).unwrap();
    let rho = DensityMatrix::basis_projector(2, 0).unwrap();
    assert!(matches!(
        lindblad_rhs(&spec, &rho),
        Err(locev::Error::DimensionMismatch { .. })
    ));
    assert!(EvolutionSpec::new(SparseOperator::identity(3), vec![(-1.0, empty(3))], 0.01, 1.0).is_err());
    assert!(EvolutionSpec::new(SparseOperator::identity(3), vec![], 0.0, 1.0).is_err());
}

#[test]
fn eigenstate_is_stationary_without_dissipation() {
    let b = FockBasis::new(4, 1).unwrap();
    let spec = LatticeSpec::uniform(4, 1.0, Boundary::Periodic).unwrap();
    let h = hopping_hamiltonian(&b, &spec).unwrap();
    let eig = h.to_dense().symmetric_eigen();
    let psi: Vec<Complex64> = eig.eigenvectors.column(0).iter().copied().collect();
    let rho0 = DensityMatrix::from_pure(&psi).unwrap();
    let ev = EvolutionSpec::new(h, vec![], 0.01, 10.0).unwrap();
    let snaps = evolve_master(&rho0, &ev).unwrap();
    let last = &snaps.last().unwrap().rho;
    assert!(max_norm(&(last.matrix() - rho0.matrix())) < 1e-10);
    assert!((snaps.last().unwrap().time - 10.0).abs() < 1e-12);
}

#[test]
fn coherence_between_two_three_and_three_two_decays_at_point_four() {
    let b = FockBasis::new(2, 5).unwrap();
    let (i, j) = (b.index_of(&[2, 3]).unwrap(), b.index_of(&[3, 2]).unwrap());
    let mut psi = vec![c(0.0); b.dim()];
    psi[i] = c(std::f64::consts::FRAC_1_SQRT_2);
    psi[j] = c(std::f64::consts::FRAC_1_SQRT_2);
    let rho0 = DensityMatrix::from_pure(&psi).unwrap();
    let ev = EvolutionSpec::with_uniform_rate(empty(b.dim()), 0.2, site_local_jumps(&b), 0.005, 5.0)
        .unwrap()
        .snapshot_stride(50);
    let snaps = evolve_master(&rho0, &ev).unwrap();
    let times: Vec<f64> = snaps.iter().map(|s| s.time).collect();
    let values: Vec<f64> = snaps.iter().map(|s| s.rho.get(i, j).re).collect();
    let fit = fit_exponential_decay(&times, &values).unwrap();
    assert!((fit.rate - 0.4).abs() < 1e-6, "rate {}", fit.rate);
    for s in &snaps {
        assert!((s.rho.get(i, i).re - 0.5).abs() < 1e-14);
        assert!((s.rho.get(j, j).re - 0.5).abs() < 1e-14);
    }
}

#[test]
fn populations_constant_under_diagonal_dissipators() {
    let b = FockBasis::new(3, 3).unwrap();
    let jumps = kernel_jumps(&b, &LocalizationKernel::three_point(), Boundary::Periodic).unwrap();
    let psi = uniform_superposition(b.dim());
    let rho0 = DensityMatrix::from_pure(&psi).unwrap();
    let ev = EvolutionSpec::with_uniform_rate(empty(b.dim()), 0.5, jumps, 0.005, 2.0).unwrap();
    for s in evolve_master(&rho0, &ev).unwrap() {
        for k in 0..b.dim() {
            assert!((s.rho.get(k, k) - rho0.get(k, k)).norm() < 1e-14);
        }
    }
}

#[test]
fn every_element_follows_closed_form_without_hamiltonian() {
    let r = 0.25;
    let b = FockBasis::new(3, 2).unwrap();
    let psi = uniform_superposition(b.dim());
    let rho0 = DensityMatrix::from_pure(&psi).unwrap();
    let t = 2.0 / r;
    let ev = EvolutionSpec::with_uniform_rate(empty(b.dim()), r, site_local_jumps(&b), 0.002, t)
        .unwrap()
        .snapshot_stride(1000);
    let last = evolve_master(&rho0, &ev).unwrap().pop().unwrap();
    for a in 0..b.dim() {
        for bb in 0..b.dim() {
            let f = coherence_decay_factor(b.state(a), b.state(bb), r, last.time).unwrap();
            let expected = rho0.get(a, bb) * f;
            let rel = (last.rho.get(a, bb) - expected).norm() / expected.norm();
            assert!(rel <= 1e-8, "({a},{bb}) rel {rel}");
        }
    }
}

fn velocity_decay_rate(jumps: Vec<SparseOperator>, r: f64) -> (f64, f64) {
    let (m, n) = (6, 2);
    let b = FockBasis::new(m, n).unwrap();
    let spec = LatticeSpec::uniform(m, 1.0, Boundary::Periodic).unwrap();
    let k = hopping_hamiltonian(&b, &spec).unwrap();
    let v = cm_velocity_operator(&b, &spec).unwrap();
    let x = cm_position_operator(&b).unwrap();
    let psi = prepare_bloch_condensate(&b, 1).unwrap();
    let rho0 = DensityMatrix::from_pure(&psi).unwrap();
    let ev = EvolutionSpec::with_uniform_rate(k, r, jumps.clone(), 0.01, 5.0)
        .unwrap()
        .snapshot_stride(25);
    let snaps = evolve_master(&rho0, &ev).unwrap();
    let series = observable_series(&snaps, &v).unwrap();
    let times: Vec<f64> = series.iter().map(|p| p.0).collect();
    let values: Vec<f64> = series.iter().map(|p| p.1.re).collect();
    let fit = fit_exponential_decay(&times, &values).unwrap();

    // dissipative contribution to d<x_CM>/dt, evaluated on the evolved state
    let diss = EvolutionSpec::with_uniform_rate(SparseOperator::zeros(b.dim(), b.dim()), r, jumps, 0.01, 1.0)
        .unwrap();
    let drho = lindblad_rhs(&diss, &snaps[3].rho).unwrap();
    let dx: Complex64 = x
        .entries()
        .iter()
        .map(|&(row, col, val)| val * drho[(col, row)])
        .sum();
    (fit.rate, dx.norm())
}

#[test]
fn site_local_events_damp_velocity_at_twice_the_rate() {
    let b = FockBasis::new(6, 2).unwrap();
    let (rate, dx) = velocity_decay_rate(site_local_jumps(&b), 0.1);
    assert!(((rate - 0.2) / 0.2).abs() < 1e-3, "rate {rate}");
    assert!(dx < 1e-14);
}

#[test]
fn kernel_events_damp_velocity_at_fbar_squared_rate() {
    let b = FockBasis::new(6, 2).unwrap();
    let jumps = kernel_jumps(&b, &LocalizationKernel::three_point(), Boundary::Periodic).unwrap();
    let (rate, dx) = velocity_decay_rate(jumps, 0.1);
    let expected = 0.1 * (0.5 + 2.0 * (std::f64::consts::FRAC_1_SQRT_2 - 0.5).powi(2));
    assert!(((rate - expected) / expected).abs() < 1e-2, "rate {rate}");
    assert!(dx < 1e-14);
}

#[test]
fn particle_number_is_conserved() {
    let b = FockBasis::new(4, 2).unwrap();
    let spec = LatticeSpec::new(1.0, vec![0.0, 0.4, -0.1, 0.2], Boundary::Periodic).unwrap();
    let h = hopping_hamiltonian(&b, &spec).unwrap();
    let mut channels: Vec<(f64, SparseOperator)> =
        site_local_jumps(&b).into_iter().map(|l| (0.2, l)).collect();
    channels.extend(kick_dissipators(&b, &KickSpectrum::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap(), 0.3).unwrap());
    let ev = EvolutionSpec::new(h, channels, 0.005, 3.0).unwrap();
    let rho0 = DensityMatrix::from_pure(&prepare_bloch_condensate(&b, 1).unwrap()).unwrap();
    let total = total_number_operator(&b);
    for (_, n) in observable_series(&evolve_master(&rho0, &ev).unwrap(), &total).unwrap() {
        assert!((n.re - 2.0).abs() < 1e-9);
    }
}

#[test]
fn numerical_failure_reports_step() {
    // A huge step makes RK4 blow up on a fast Hamiltonian.
    let b = FockBasis::new(3, 2).unwrap();
    let spec = LatticeSpec::uniform(3, 50.0, Boundary::Periodic).unwrap();
    let h = hopping_hamiltonian(&b, &spec).unwrap();
    let jumps = site_local_jumps(&b);
    let ev = EvolutionSpec::with_uniform_rate(h, 3.0, jumps, 0.5, 5.0)
        .unwrap()
        .snapshot_stride(1);
    let rho0 = DensityMatrix::from_pure(&prepare_bloch_condensate(&b, 1).unwrap()).unwrap();
    match evolve_master(&rho0, &ev) {
        Err(locev::Error::NumericalFailure { step, .. }) => assert!(step >= 1),
        other => panic!("expected numerical failure, got {other:?}"),
    }
}

#[test]
fn trajectories_without_jumps_follow_schroedinger() {
    let b = FockBasis::new(4, 2).unwrap();
    let spec = LatticeSpec::uniform(4, 1.0, Boundary::Periodic).unwrap();
    let h = hopping_hamiltonian(&b, &spec).unwrap();
    let psi0 = {
        let mut p = prepare_bloch_condensate(&b, 1).unwrap();
        p[0] += c(0.3);
        let norm = p.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        p.iter().map(|z| z / norm).collect::<Vec<_>>()
    };
    let obs = vec![Observable::coherence(b.dim(), 0, 1)];
    let ev = EvolutionSpec::with_uniform_rate(h.clone(), 0.0, site_local_jumps(&b), 0.002, 2.0)
        .unwrap()
        .snapshot_stride(100);
    let cfg = TrajectoryConfig::new(16, 7, 0.002).unwrap();
    let ens = mcwf_sample(&psi0, &ev, &cfg, &obs).unwrap();
    assert_eq!(ens.total_jumps, 0);
    let exact = evolve_master(&DensityMatrix::from_pure(&psi0).unwrap(), &ev).unwrap();
    let exact = observable_series(&exact, &obs[0].operator).unwrap();
    for (s, (t, val)) in exact.iter().enumerate() {
        assert!((ens.times[s] - t).abs() < 1e-12);
        assert!(ens.stderr[s][0] < 1e-15);
        assert!((ens.mean[s][0] - val).norm() < 1e-9);
    }
}

#[test]
fn trajectory_coherence_matches_closed_form() {
    let r = 0.3;
    let b = FockBasis::new(2, 5).unwrap();
    let (i, j) = (b.index_of(&[2, 3]).unwrap(), b.index_of(&[3, 2]).unwrap());
    let mut psi = vec![c(0.0); b.dim()];
    psi[i] = c(std::f64::consts::FRAC_1_SQRT_2);
    psi[j] = c(std::f64::consts::FRAC_1_SQRT_2);
    let ev = EvolutionSpec::with_uniform_rate(empty(b.dim()), r, site_local_jumps(&b), 0.005, 3.0)
        .unwrap()
        .snapshot_stride(100);
    let cfg = TrajectoryConfig::new(2000, 2024, 0.005).unwrap();
    let obs = vec![Observable::coherence(b.dim(), i, j)];
    let ens = mcwf_sample(&psi, &ev, &cfg, &obs).unwrap();
    for (t, mean, se) in ens.series(&obs[0].label).unwrap().into_iter().skip(1) {
        let exact = 0.5 * (-2.0 * r * t).exp();
        assert!((mean.re - exact).abs() <= 3.0 * se, "t={t} mean={mean} exact={exact} se={se}");
    }
}

#[test]
fn trajectory_seed_determinism() {
    let b = FockBasis::new(3, 2).unwrap();
    let spec = LatticeSpec::uniform(3, 1.0, Boundary::Periodic).unwrap();
    let h = hopping_hamiltonian(&b, &spec).unwrap();
    let ev = EvolutionSpec::with_uniform_rate(h, 0.2, site_local_jumps(&b), 0.01, 1.0).unwrap();
    let psi0 = prepare_bloch_condensate(&b, 1).unwrap();
    let obs = vec![Observable::new("v", cm_velocity_operator(&b, &spec).unwrap())];
    let cfg = TrajectoryConfig::new(50, 99, 0.01).unwrap();
    let a = mcwf_sample(&psi0, &ev, &cfg, &obs).unwrap();
    let bb = mcwf_sample(&psi0, &ev, &cfg, &obs).unwrap();
    assert_eq!(a, bb);
    let other = mcwf_sample(&psi0, &ev, &TrajectoryConfig::new(50, 100, 0.01).unwrap(), &obs).unwrap();
    assert_ne!(a.mean, other.mean);
}

#[test]
fn oversized_step_is_rejected() {
    let b = FockBasis::new(2, 5).unwrap();
    let ev = EvolutionSpec::with_uniform_rate(empty(b.dim()), 1.0, site_local_jumps(&b), 0.1, 1.0)
        .unwrap();
    let psi0 = fock_state(&b, &[2, 3]).unwrap();
    let cfg = TrajectoryConfig::new(2, 1, 0.1).unwrap();
    assert!(matches!(
        mcwf_sample(&psi0, &ev, &cfg, &[]),
        Err(locev::Error::StepTooLarge { .. })
    ));
}

fn random_density(dim: usize, seed: &[f64]) -> DensityMatrix {
    // mixture of two random pure states
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (w, chunk) in [(0.7, 0usize), (0.3, 1usize)] {
        let v: Vec<Complex64> = (0..dim)
            .map(|k| {
                let a = seed[(2 * k + chunk * 2 * dim) % seed.len()];
                let b = seed[(2 * k + 1 + chunk * 2 * dim) % seed.len()];
                Complex64::new(a, b)
            })
            .collect();
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-3);
        let v = nalgebra::DVector::from_vec(v.iter().map(|z| z / norm).collect());
        m += (&v * v.adjoint()) * c(w);
    }
    let tr = m.trace();
    DensityMatrix::new(m / tr).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rhs_is_hermitian_and_traceless(
        seed in prop::collection::vec(-1.0f64..1.0, 40),
        r in 0.0f64..2.0,
        j in -2.0f64..2.0,
    ) {
        let b = FockBasis::new(3, 2).unwrap();
        let spec = LatticeSpec::uniform(3, j, Boundary::Periodic).unwrap();
        let h = hopping_hamiltonian(&b, &spec).unwrap();
        let mut channels: Vec<(f64, SparseOperator)> =
            kernel_jumps(&b, &LocalizationKernel::three_point(), Boundary::Periodic)
                .unwrap()
                .into_iter()
                .map(|l| (r, l))
                .collect();
        // a non-diagonal channel exercises the general path
        channels.push((r, hop_operator(&b, 0, 1).unwrap()));
        let ev = EvolutionSpec::new(h, channels, 0.01, 1.0).unwrap();
        let rho = random_density(b.dim(), &seed);
        let d = lindblad_rhs(&ev, &rho).unwrap();
        prop_assert!(d.trace().norm() < 1e-12);
        prop_assert!(max_norm(&(&d - d.adjoint())) < 1e-12);
    }

    #[test]
    fn snapshots_keep_invariants(
        seed in prop::collection::vec(-1.0f64..1.0, 40),
        r in 0.0f64..1.0,
    ) {
        let b = FockBasis::new(3, 2).unwrap();
        let spec = LatticeSpec::uniform(3, 1.0, Boundary::Periodic).unwrap();
        let h = hopping_hamiltonian(&b, &spec).unwrap();
        let ev = EvolutionSpec::with_uniform_rate(h, r, site_local_jumps(&b), 0.01, 1.0)
            .unwrap()
            .snapshot_stride(20);
        let rho0 = random_density(b.dim(), &seed);
        let snaps = evolve_master(&rho0, &ev).unwrap();
        for s in &snaps {
            let inv = s.rho.invariants();
            prop_assert!(inv.trace_error <= 1e-9);
            prop_assert!(inv.min_eigenvalue >= -1e-8);
        }
    }
}
