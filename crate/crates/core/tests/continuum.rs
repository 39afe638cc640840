use locev::continuum::*;
use locev::Complex64;

fn unit_case() -> (WavefunctionGrid, CollapseShape) {
    let grid = Grid::for_collapse(1.0, 1.0).unwrap();
    (
        WavefunctionGrid::gaussian(1.0, grid).unwrap(),
        CollapseShape::gaussian(1.0).unwrap(),
    )
}

#[test]
fn identical_shapes_overlap_fully() {
    let (psi, f) = unit_case();
    // psi and f are the same Gaussian here
    let p = collapse_probability(&psi, &f, 0.0).unwrap();
    assert!((p - 1.0).abs() < 1e-10);
}

#[test]
fn probability_matches_closed_form() {
    let grid = Grid::for_collapse(2.0, 0.5).unwrap();
    let psi = WavefunctionGrid::gaussian(2.0, grid).unwrap();
    let f = CollapseShape::gaussian(0.5).unwrap();
    let closed = gaussian_collapse_closed_form(2.0, 0.5).unwrap();
    for x0 in [-6.0, -2.5, 0.0, 1.0, 4.0] {
        let p = collapse_probability(&psi, &f, x0).unwrap();
        assert!((p - closed.probability(x0)).abs() < 1e-6, "x0={x0}");
    }
}

#[test]
fn far_collapse_is_improbable_and_leaks_are_rejected() {
    let grid = Grid::symmetric(60.0, 2048).unwrap();
    let psi = WavefunctionGrid::gaussian(1.0, grid).unwrap();
    let f = CollapseShape::gaussian(1.0).unwrap();
    assert!(collapse_probability(&psi, &f, 40.0).unwrap() < 1e-12);
    assert!(collapse_probability(&psi, &f, 58.0).is_err());
    assert!(collapse_probability(&psi, &f, 80.0).is_err());
}

#[test]
fn quadrature_converges() {
    let coarse = Grid::for_collapse(1.0, 1.0).unwrap();
    let fine = Grid::symmetric(coarse.max(), 2 * coarse.points() - 1).unwrap();
    let f = CollapseShape::gaussian(1.0).unwrap();
    for x0 in [0.0, 0.7, 2.0] {
        let a = collapse_probability(&WavefunctionGrid::gaussian(1.0, coarse).unwrap(), &f, x0).unwrap();
        let b = collapse_probability(&WavefunctionGrid::gaussian(1.0, fine).unwrap(), &f, x0).unwrap();
        assert!((a - b).abs() < 1e-6);
    }
}

#[test]
fn density_operator_matches_exact_gaussian_form() {
    let (psi, f) = unit_case();
    let rho = collapse_density_operator(&psi, &f).unwrap();
    let closed = gaussian_collapse_closed_form(1.0, 1.0).unwrap();
    let grid = *rho.grid();
    let mut worst: f64 = 0.0;
    for i in 0..grid.points() {
        for j in 0..grid.points() {
            let exact = closed.density(grid.x(i), grid.x(j));
            worst = worst.max((rho.get(i, j) - exact).norm());
        }
    }
    assert!(worst < 1e-6, "worst {worst}");
    // a collapse onto the wavefunction's own shape still mixes the state
    let purity = rho.purity();
    assert!(purity < 0.9, "purity {purity}");
}

#[test]
fn density_operator_invariants() {
    let grid = Grid::for_collapse(3.0, 0.6).unwrap();
    let psi = WavefunctionGrid::gaussian(3.0, grid).unwrap();
    let rho = collapse_density_operator(&psi, &CollapseShape::gaussian(0.6).unwrap()).unwrap();
    assert!((rho.trace() - 1.0).abs() < 1e-6);
    assert!(rho.diagonal().iter().all(|d| *d >= 0.0));
    let n = grid.points();
    for i in (0..n).step_by(7) {
        for j in (0..n).step_by(5) {
            assert!((rho.get(i, j) - rho.get(j, i).conj()).norm() < 1e-10);
        }
    }
}

#[test]
fn narrow_range_is_rejected() {
    let grid = Grid::symmetric(10.0, 512).unwrap();
    let psi = WavefunctionGrid::gaussian(1.0, grid).unwrap();
    assert!(collapse_density_operator(&psi, &CollapseShape::gaussian(1.0).unwrap()).is_err());
}

fn wide_case() -> (WavefunctionGrid, CollapseShape, ContinuumDensityOperator) {
    let grid = Grid::symmetric(210.0, 2049).unwrap();
    let psi = WavefunctionGrid::gaussian(20.0, grid).unwrap();
    let f = CollapseShape::gaussian(1.0).unwrap();
    let rho = collapse_density_operator(&psi, &f).unwrap();
    (psi, f, rho)
}

#[test]
fn wide_wavefunction_factorizes() {
    let (psi, f, rho) = wide_case();
    let envelope = |d: f64| Complex64::new((-d * d / 8.0).exp(), 0.0);
    let res = factorization_residual(&rho, &psi, envelope, 3.0).unwrap();
    assert!(res < 0.03, "residual {res}");
    let centre = rho.grid().points() / 2;
    let dx = rho.grid().spacing();
    for lag in 1..=15 {
        let d = lag as f64 * dx;
        let c = rho.coherence(centre, centre + lag);
        let expected = (-d * d / 8.0).exp();
        assert!(((c - expected) / expected).abs() < 0.02, "d={d}");
        assert!((f.autocorrelation(d).re - expected).abs() < 1e-15);
    }
    // the diagonal is substantially |psi|^2
    let peak = psi.amplitudes().iter().map(|z| z.norm_sqr()).fold(0.0, f64::max);
    for (d, a) in rho.diagonal().iter().zip(psi.amplitudes()) {
        assert!((d - a.norm_sqr()).abs() < 0.02 * peak);
    }
}

#[test]
fn equal_widths_do_not_factorize() {
    let (psi, f) = unit_case();
    let rho = collapse_density_operator(&psi, &f).unwrap();
    let envelope = |d: f64| f.autocorrelation(d);
    let res = factorization_residual(&rho, &psi, envelope, 3.0).unwrap();
    assert!(res > 0.2, "residual {res}");
}

#[test]
fn kicks_preserve_the_diagonal_exactly() {
    let grid = Grid::symmetric(12.0, 256).unwrap();
    let psi = WavefunctionGrid::gaussian(1.2, grid).unwrap();
    let p = KickDistribution::gaussian(0.3, 0.8, 256).unwrap();
    let rho = kick_density_operator(&psi, &p).unwrap();
    for (d, a) in rho.diagonal().iter().zip(psi.amplitudes()) {
        assert!((d - a.norm_sqr()).abs() < 1e-15);
    }
    let res = factorization_residual(&rho, &psi, |d| p.characteristic(d), 24.0).unwrap();
    assert!(res < 1e-10);
}

#[test]
fn single_bin_kick_keeps_coherence() {
    let grid = Grid::symmetric(12.0, 128).unwrap();
    let psi = WavefunctionGrid::gaussian(1.2, grid).unwrap();
    let p = KickDistribution::new(1.5, 0.01, vec![100.0]).unwrap();
    let rho = kick_density_operator(&psi, &p).unwrap();
    assert!((rho.purity() - 1.0).abs() < 1e-8);
    for j in 0..128 {
        assert!((rho.coherence(64, j) - 1.0).abs() < 1e-10);
    }
}

#[test]
fn gaussian_kicks_give_gaussian_envelope() {
    let s = 0.5;
    let grid = Grid::symmetric(15.0, 301).unwrap();
    let psi = WavefunctionGrid::gaussian(1.5, grid).unwrap();
    let p = KickDistribution::gaussian(0.0, s, 400).unwrap();
    let rho = kick_density_operator(&psi, &p).unwrap();
    for lag in 0..40 {
        let d = lag as f64 * grid.spacing();
        let c = rho.coherence(150, 150 + lag);
        assert!((c - (-s * s * d * d / 2.0).exp()).abs() < 1e-10, "d={d}");
    }
}

#[test]
fn coarse_kick_grid_is_rejected() {
    let grid = Grid::symmetric(12.0, 64).unwrap();
    let psi = WavefunctionGrid::gaussian(1.2, grid).unwrap();
    let p = KickDistribution::uniform(2.0, 8).unwrap();
    assert!(kick_density_operator(&psi, &p).is_err());
}

#[test]
fn kernel_from_gaussian_spectrum() {
    let s = 0.8;
    let p = KickDistribution::gaussian(0.0, s, 256).unwrap();
    let f = kernel_from_kick_spectrum(&p).unwrap();
    // sqrt of a Gaussian with variance s^2 transforms to a Gaussian amplitude with l = 1/(2s)
    let l = 1.0 / (2.0 * s);
    let exact = CollapseShape::gaussian(l).unwrap();
    if let CollapseShape::Gridded { grid, values } = &f {
        let norm: f64 = values.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.spacing();
        assert!((norm - 1.0).abs() < 1e-12);
        for (i, v) in values.iter().enumerate() {
            // the spectrum is truncated at 8 s, where sqrt(p) ~ 1e-7 of its peak
            assert!((v.norm() - exact.eval(grid.x(i)).re).abs() < 1e-7);
        }
    } else {
        panic!("expected a gridded shape");
    }
    assert!(((f.rms_width() - l) / l).abs() < 1e-6);
}

#[test]
fn kernel_width_scales_inversely_with_spread() {
    let narrow = kernel_from_kick_spectrum(&KickDistribution::gaussian(0.0, 0.5, 512).unwrap()).unwrap();
    let broad = kernel_from_kick_spectrum(&KickDistribution::gaussian(0.0, 1.0, 512).unwrap()).unwrap();
    let ratio = broad.fwhm() / narrow.fwhm();
    assert!((ratio - 0.5).abs() < 0.025, "ratio {ratio}");
    let flat_a = kernel_from_kick_spectrum(&KickDistribution::uniform(1.0, 64).unwrap()).unwrap();
    let flat_b = kernel_from_kick_spectrum(&KickDistribution::uniform(2.0, 64).unwrap()).unwrap();
    let ratio = flat_b.fwhm() / flat_a.fwhm();
    assert!((ratio - 0.5).abs() < 0.025, "ratio {ratio}");
}

#[test]
fn uniform_spectrum_gives_sinc() {
    let kmax = 1.0;
    let p = KickDistribution::uniform(kmax, 64).unwrap();
    let f = kernel_from_kick_spectrum(&p).unwrap();
    // |f(x)| = |sin(kmax x) / x| / sqrt(pi kmax) for the continuous band
    for x in [0.3, 1.0, 2.5, 4.0, 7.0] {
        let expected = (1.0 / (std::f64::consts::PI * kmax)).sqrt() * ((kmax * x).sin() / x).abs();
        assert!((f.eval(x).norm() - expected).abs() < 5e-3, "x={x}");
    }
}

#[test]
fn autocorrelation_round_trip() {
    let p = KickDistribution::gaussian(0.4, 0.7, 200).unwrap();
    let f = kernel_from_kick_spectrum(&p).unwrap();
    let dx = match &f {
        CollapseShape::Gridded { grid, .. } => grid.spacing(),
        _ => unreachable!(),
    };
    for lag in [0i32, 1, 5, 20, 60] {
        let d = lag as f64 * dx;
        let a = f.autocorrelation(d);
        assert!((a - p.characteristic(d)).norm() < 1e-8, "lag {lag}");
    }
}
