use locev::lattice::Boundary;
use locev::spdm::*;
use locev::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn fig2_trap() -> TrapSpec {
    TrapSpec::parabolic(41, 1.0, 0.1, 0.5).unwrap()
}

#[test]
fn ground_state_is_stationary() {
    let trap = fig2_trap().with_rate(0.0).unwrap();
    let g = ground_state_spdm(&trap, 1.0).unwrap();
    assert!(spdm_rhs(&g, &trap).unwrap().iter().all(|z| z.norm() < 1e-10));
    let run = evolve_spdm(&g, &trap, 10.0, 0.01, 100).unwrap();
    let p0 = density_profile(&g);
    for s in &run {
        for (a, b) in density_profile(&s.state).iter().zip(&p0) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn trapped_ground_state_is_nearly_gaussian() {
    let g = ground_state_spdm(&fig2_trap(), 1.0).unwrap();
    let r = flatness_report(&density_profile(&g)).unwrap();
    assert!((r.mean - 20.0).abs() < 1e-10);
    assert!((r.kurtosis - 3.0).abs() < 0.1, "kurtosis {}", r.kurtosis);
    let matched = r.matched_variance.unwrap();
    assert!(((matched - r.variance) / r.variance).abs() < 0.1);
}

#[test]
fn flattening_run() {
    let trap = fig2_trap();
    let g = ground_state_spdm(&trap, 1.0).unwrap();
    let run = evolve_spdm(&g, &trap, 4.0, 0.005, 20).unwrap();
    assert_eq!(run.len(), 41);
    let mut kurtosis = Vec::new();
    for s in &run {
        assert!((s.state.trace() - 1.0).abs() <= 1e-9);
        let p = density_profile(&s.state);
        let peak = p.iter().cloned().fold(0.0, f64::max);
        assert!(p[0].max(p[40]) < 1e-6 * peak);
        kurtosis.push(flatness_report(&p).unwrap().kurtosis);
    }
    // a transient rise while momentum diffuses across the band, then a
    // monotone fall below the Gaussian value
    let peak_at = kurtosis
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap()
        .0;
    assert!(peak_at > 0 && peak_at < 20, "peak at snapshot {peak_at}");
    assert!(kurtosis[peak_at..].windows(2).all(|w| w[1] < w[0]));
    let last = *kurtosis.last().unwrap();
    assert!(last < 3.0 && last < kurtosis[0]);
    let end = flatness_report(&density_profile(&run.last().unwrap().state)).unwrap();
    assert!(end.matched_variance.unwrap() > end.variance);
}

#[test]
fn flattening_persists_at_eight_over_r() {
    let trap = fig2_trap();
    let g = ground_state_spdm(&trap, 1.0).unwrap();
    let run = evolve_spdm(&g, &trap, 8.0 / trap.rate(), 0.005, 800).unwrap();
    let end = flatness_report(&density_profile(&run.last().unwrap().state)).unwrap();
    assert!(end.kurtosis < 3.0);
    assert!(end.matched_variance.unwrap() > end.variance);
}

#[test]
fn ring_reaches_homogeneous_steady_state() {
    let r = 0.5;
    let trap = TrapSpec::ring(21, 1.0, r).unwrap();
    // start from the trapped ground state, so the ring begins inhomogeneous
    let init = ground_state_spdm(&TrapSpec::parabolic(21, 1.0, 0.3, 0.0).unwrap(), 1.0).unwrap();
    let run = evolve_spdm(&init, &trap, 50.0 / r, 0.01, 500).unwrap();
    let mut prev = f64::INFINITY;
    for s in &run {
        let w = s.state.off_diagonal_weight();
        assert!(w <= prev + 1e-15);
        prev = w;
    }
    let last = &run.last().unwrap().state;
    let p = density_profile(last);
    let spread = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - p.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(spread < 1e-6, "spread {spread}");
    for i in 0..21 {
        for j in 0..21 {
            if i != j {
                assert!(last.get(i, j).norm() < 1e-6);
            }
        }
    }
}

#[test]
fn uniform_state_is_stationary_on_ring() {
    let trap = TrapSpec::ring(9, 1.3, 0.8).unwrap();
    let d = spdm_rhs(&SPDMatrix::uniform(9, 5.0).unwrap(), &trap).unwrap();
    assert!(d.iter().all(|z| z.norm() < 1e-15));
}

#[test]
fn window_mismatch_and_bad_steps() {
    let trap = fig2_trap();
    let s = SPDMatrix::uniform(5, 1.0).unwrap();
    assert!(matches!(
        spdm_rhs(&s, &trap),
        Err(locev::Error::DimensionMismatch { .. })
    ));
    let g = ground_state_spdm(&trap, 1.0).unwrap();
    assert!(evolve_spdm(&g, &trap, 1.0, 0.0, 1).is_err());
    assert!(evolve_spdm(&g, &trap, 1.0, 0.1, 0).is_err());
}

fn random_spdm(m: usize, coeffs: &[f64]) -> SPDMatrix {
    // G = sum_k w_k u_k u_k^dag from random vectors
    let mut g = DMatrix::<Complex64>::zeros(m, m);
    for k in 0..2 {
        let v = nalgebra::DVector::from_fn(m, |i, _| {
            Complex64::new(coeffs[(2 * i + 4 * m * k) % coeffs.len()], coeffs[(2 * i + 1 + 4 * m * k) % coeffs.len()])
        });
        g += &v * v.adjoint();
    }
    let tr = g.trace().re;
    let g = g * Complex64::new(3.0 / tr, 0.0);
    let g = (&g + g.adjoint()) * Complex64::new(0.5, 0.0);
    SPDMatrix::new(g, 3.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rhs_is_traceless_and_hermitian(
        coeffs in prop::collection::vec(-1.0f64..1.0, 64),
        r in 0.0f64..2.0,
        j in -2.0f64..2.0,
        curvature in 0.0f64..1.0,
        periodic in any::<bool>(),
    ) {
        let m = 7;
        let half = 3.0;
        let v: Vec<f64> = (0..m).map(|i| curvature * (i as f64 - half).powi(2)).collect();
        let boundary = if periodic { Boundary::Periodic } else { Boundary::HardWall };
        let trap = TrapSpec::new(j, v, r, boundary).unwrap();
        let d = spdm_rhs(&random_spdm(m, &coeffs), &trap).unwrap();
        prop_assert!(d.trace().norm() < 1e-13);
        let asym = (&d - d.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(asym < 1e-13);
    }

    #[test]
    fn evolution_conserves_number(
        coeffs in prop::collection::vec(-1.0f64..1.0, 64),
        r in 0.0f64..1.0,
    ) {
        let trap = TrapSpec::parabolic(7, 1.0, 0.2, r).unwrap();
        let s0 = random_spdm(7, &coeffs);
        let run = evolve_spdm(&s0, &trap, 1.0, 0.01, 25).unwrap();
        for s in &run {
            prop_assert!((density_profile(&s.state).iter().sum::<f64>() - 3.0).abs() < 1e-9);
        }
    }
}
