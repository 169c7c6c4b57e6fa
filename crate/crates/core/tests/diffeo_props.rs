mod support;

use gravdeco::diffeo::{
    identity, make_bump_displacement, make_translation_ramp, pushforward_potential, pushforward_wavefunction,
    smoothstep,
};
use gravdeco::evolve::Potential;
use gravdeco::grid::{gaussian_packet, inner_product, Grid, WaveFunction};
use gravdeco::{Complex64, Error};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::linear_interp;

fn line() -> Grid {
    Grid::new(vec![512], vec![40.0]).unwrap()
}

fn packet(grid: &Grid, c: f64, p: f64) -> WaveFunction {
    gaussian_packet(grid, &[c], 1.0, &[p]).unwrap()
}

fn analytic_packet(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI).powf(-0.25) * (-x * x / 4.0).exp()
}

#[test]
fn identity_leaves_everything_unchanged() {
    let grid = line();
    let psi = packet(&grid, 0.3, 0.7);
    let phi = identity(&grid);
    let out = pushforward_wavefunction(&psi, &phi, 5.0).unwrap();
    assert_eq!(out.wavefunction.amplitudes(), psi.amplitudes());
    let v = Potential::point_mass_on(&grid, vec![2.0], 1.0).unwrap();
    assert_eq!(pushforward_potential(&v, &phi, 5.0, &grid).unwrap(), v);
}

#[test]
fn ramp_gates_and_endpoints() {
    let grid = line();
    assert_eq!(smoothstep(1.0, 1.0, 3.0), 0.0);
    assert_eq!(smoothstep(2.0, 1.0, 3.0), 0.5);
    assert_eq!(smoothstep(3.0, 1.0, 3.0), 1.0);
    let phi = make_translation_ramp(&grid, vec![4.0], 1.0, 3.0).unwrap();
    assert_eq!(phi.forward(&[2.0], 0.5), vec![2.0]);
    assert_eq!(phi.forward(&[2.0], 3.5), vec![6.0]);
    assert_eq!(phi.jacobian_det(&[2.0], 2.0), 1.0);
    let psi = packet(&grid, 0.0, 0.4);
    let before = pushforward_wavefunction(&psi, &phi, 1.0).unwrap();
    assert_eq!(before.wavefunction.amplitudes(), psi.amplitudes());
    let zero = make_translation_ramp(&grid, vec![0.0], 1.0, 3.0).unwrap();
    assert_eq!(zero.forward(&[2.0], 2.0), vec![2.0]);
    assert!(matches!(make_translation_ramp(&grid, vec![20.0], 1.0, 3.0), Err(Error::Domain(_))));
}

#[test]
fn aligned_translation_is_a_permutation() {
    let grid = line();
    let dx = grid.spacing(0);
    let psi = packet(&grid, 0.0, 0.9);
    let phi = make_translation_ramp(&grid, vec![37.0 * dx], 0.0, 1.0).unwrap();
    let out = pushforward_wavefunction(&psi, &phi, 1.0).unwrap();
    assert_eq!(out.norm_drift, 0.0);
    let n = psi.amplitudes().len();
    for i in 0..n {
        assert_eq!(out.wavefunction.amplitudes()[(i + 37) % n], psi.amplitudes()[i]);
    }
}

#[test]
fn one_sided_translation_destroys_overlap() {
    let grid = line();
    let a = packet(&grid, 0.0, 0.3);
    let b = packet(&grid, 0.1, 0.3);
    assert!(inner_product(&a, &b).unwrap().norm() >= 0.9);
    let phi = make_translation_ramp(&grid, vec![15.03], 0.0, 1.0).unwrap();
    let pushed = pushforward_wavefunction(&a, &phi, 1.0).unwrap().wavefunction;
    assert!(inner_product(&pushed, &b).unwrap().norm() <= 1e-3);
}

#[test]
fn translations_compose() {
    let grid = line();
    let psi = packet(&grid, -1.0, 0.6);
    let (d1, d2) = (2.37, -5.11);
    let p1 = make_translation_ramp(&grid, vec![d1], 0.0, 1.0).unwrap();
    let p2 = make_translation_ramp(&grid, vec![d2], 0.0, 1.0).unwrap();
    let p12 = make_translation_ramp(&grid, vec![d1 + d2], 0.0, 1.0).unwrap();
    let two =
        pushforward_wavefunction(&pushforward_wavefunction(&psi, &p1, 1.0).unwrap().wavefunction, &p2, 1.0).unwrap();
    let one = pushforward_wavefunction(&psi, &p12, 1.0).unwrap();
    for (a, b) in two.wavefunction.amplitudes().iter().zip(one.wavefunction.amplitudes()) {
        assert!((a - b).norm() <= 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn joint_pushforward_preserves_inner_products(
        ca in -3.0f64..3.0, cb in -3.0f64..3.0, pa in -1.0f64..1.0, pb in -1.0f64..1.0,
        shift in -12.0f64..12.0, peak in -2.0f64..2.0, t in 0.0f64..2.0,
    ) {
        let grid = line();
        let a = packet(&grid, ca, pa);
        let b = packet(&grid, cb, pb);
        let before = inner_product(&a, &b).unwrap();
        for phi in [
            make_translation_ramp(&grid, vec![shift], 0.5, 1.5).unwrap(),
            make_bump_displacement(&grid, vec![0.5], 5.0, vec![peak], 0.5, 1.5).unwrap(),
        ] {
            let pa = pushforward_wavefunction(&a, &phi, t).unwrap();
            let pb = pushforward_wavefunction(&b, &phi, t).unwrap();
            prop_assert!(pa.norm_drift <= 1e-6);
            prop_assert!((pa.wavefunction.norm() - 1.0).abs() <= 1e-6);
            let after = inner_product(&pa.wavefunction, &pb.wavefunction).unwrap();
            prop_assert!((after - before).norm() <= 1e-6, "{} vs {}", after, before);
        }
    }
}

#[test]
fn bump_inverse_residual_at_random_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let line = line();
    let plane = Grid::new(vec![64, 64], vec![20.0, 20.0]).unwrap();
    let bumps = [
        (make_bump_displacement(&line, vec![1.0], 4.0, vec![2.0], 0.0, 1.0).unwrap(), 40.0),
        (make_bump_displacement(&plane, vec![1.0, -0.5], 5.0, vec![1.5, 1.0], 0.0, 1.0).unwrap(), 20.0),
    ];
    for (phi, extent) in &bumps {
        for _ in 0..1000 {
            let y: Vec<f64> = (0..phi.dim()).map(|_| rng.random_range(-extent / 2.0..extent / 2.0)).collect();
            let t = rng.random_range(0.0..1.5);
            let x = phi.inverse(&y, t).unwrap();
            let back = phi.forward(&x, t);
            let residual = back.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(residual <= 1e-10, "residual {residual:e}");
            assert!(phi.jacobian_det(&x, t) > 0.0);
        }
    }
}

#[test]
fn bump_is_trivial_outside_support() {
    let plane = Grid::new(vec![64, 64], vec![20.0, 20.0]).unwrap();
    let phi = make_bump_displacement(&plane, vec![1.0, -0.5], 5.0, vec![1.5, 1.0], 0.0, 1.0).unwrap();
    for x in [[7.0, 0.0], [1.0, 4.6], [-9.0, -9.0]] {
        assert_eq!(phi.forward(&x, 1.0), x.to_vec());
    }
    let flat = make_bump_displacement(&plane, vec![1.0, -0.5], 5.0, vec![0.0, 0.0], 0.0, 1.0).unwrap();
    assert_eq!(flat.forward(&[1.5, -0.5], 1.0), vec![1.5, -0.5]);
}

#[test]
fn steep_bump_is_rejected() {
    let grid = line();
    assert!(matches!(
        make_bump_displacement(&grid, vec![0.0], 2.0, vec![1.5], 0.0, 1.0),
        Err(Error::NonInvertibleDiffeo(_))
    ));
}

#[test]
fn bump_pushforward_agrees_with_fine_grid_oracles() {
    let grid = line();
    let fine = Grid::new(vec![2048], vec![40.0]).unwrap();
    let psi = packet(&grid, 0.0, 0.0);
    let psi_fine = packet(&fine, 0.0, 0.0);
    let phi = make_bump_displacement(&grid, vec![0.5], 4.0, vec![1.5], 0.0, 1.0).unwrap();
    let out = pushforward_wavefunction(&psi, &phi, 1.0).unwrap();
    assert!(out.norm_drift <= 1e-6);
    assert!((out.wavefunction.norm() - 1.0).abs() <= 1e-6);

    // linear interpolation of 4x denser samples
    for i in 0..grid.len() {
        let y = grid.position(i);
        let x = phi.inverse(&y, 1.0).unwrap();
        let expected = linear_interp(&fine, psi_fine.amplitudes(), x[0]) / phi.jacobian_det(&x, 1.0).sqrt();
        assert!((out.wavefunction.amplitudes()[i] - expected).norm() <= 1e-4);
    }

    // overlap with the untransformed packet by quadrature on the fine grid
    let pushed_fine: Vec<f64> = (0..fine.len())
        .map(|i| {
            let x = phi.inverse(&fine.position(i), 1.0).unwrap();
            analytic_packet(x[0]) / phi.jacobian_det(&x, 1.0).sqrt()
        })
        .collect();
    let oracle: f64 =
        pushed_fine.iter().enumerate().map(|(i, v)| v * analytic_packet(fine.position(i)[0])).sum::<f64>()
            * fine.cell_volume();
    let overlap = inner_product(&out.wavefunction, &psi).unwrap();
    assert!((overlap - Complex64::new(oracle, 0.0)).norm() <= 1e-6);
    assert!(overlap.norm() < 1.0 - 1e-3);
}

#[test]
fn translated_point_mass_moves_its_source() {
    let grid = line();
    let v = Potential::point_mass_on(&grid, vec![3.0], 1.5).unwrap();
    let phi = make_translation_ramp(&grid, vec![5.0], 0.0, 1.0).unwrap();
    let moved = pushforward_potential(&v, &phi, 2.0, &grid).unwrap();
    let expected = Potential::point_mass(vec![8.0], 1.5, 2.0 * grid.spacing(0)).unwrap();
    for (a, b) in moved.sample(&grid).unwrap().iter().zip(expected.sample(&grid).unwrap()) {
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn bump_pushforward_of_tabulated_potential_is_pullback() {
    let grid = Grid::new(vec![1024], vec![40.0]).unwrap();
    let well = |x: f64| -(-x * x / 8.0).exp() + 0.3 * (-(x - 3.0).powi(2) / 2.0).exp();
    let values = (0..grid.len()).map(|i| well(grid.position(i)[0])).collect();
    let v = Potential::tabulated(grid.clone(), values).unwrap();
    let phi = make_bump_displacement(&grid, vec![2.0], 6.0, vec![2.0], 0.0, 1.0).unwrap();
    let pushed = pushforward_potential(&v, &phi, 0.7, &grid).unwrap().sample(&grid).unwrap();
    for (i, value) in pushed.iter().enumerate() {
        let x = phi.inverse(&grid.position(i), 0.7).unwrap();
        assert!((value - well(x[0])).abs() <= 1e-8);
    }
}
