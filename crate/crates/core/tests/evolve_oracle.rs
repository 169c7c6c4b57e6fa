mod support;

use gravdeco::evolve::{energy, evolve, step, EvolutionConfig, Potential, SplitStepPropagator};
use gravdeco::grid::{gaussian_packet, inner_product, normalize, Grid, WaveFunction};
use gravdeco::Complex64;
use support::{dense_propagate, free_width, l2_distance};

const N: usize = 64;
const L: f64 = 20.0;

fn small_grid() -> Grid {
    Grid::new(vec![N], vec![L]).unwrap()
}

fn moving_packet(grid: &Grid) -> WaveFunction {
    let psi = WaveFunction::from_fn(grid.clone(), "psi0", |x| {
        let d = x[0] + 1.0;
        Complex64::from_polar((-d * d / 4.0).exp(), 0.8 * d)
    })
    .unwrap();
    normalize(&psi).unwrap()
}

fn split_step_error(dt: f64, t_end: f64) -> f64 {
    let grid = small_grid();
    let v = Potential::point_mass_on(&grid, vec![2.0], 1.0).unwrap();
    let psi0 = moving_packet(&grid);
    let cfg = EvolutionConfig { dt, t_end, mass: 1.0, snapshot_stride: 1_000_000 };
    let got = evolve(&psi0, &v, &cfg).unwrap();
    let exact = dense_propagate(N, L, 1.0, &v.sample(&grid).unwrap(), psi0.amplitudes(), t_end);
    l2_distance(&grid, got.last().amplitudes(), &exact)
}

#[test]
fn split_step_matches_dense_propagator() {
    let err = split_step_error(0.005, 1.0);
    assert!(err <= 1e-4, "L2 error {err:e}");
}

#[test]
fn halving_dt_is_second_order() {
    let coarse = split_step_error(0.01, 1.0);
    let fine = split_step_error(0.005, 1.0);
    let ratio = coarse / fine;
    assert!((3.0..=5.0).contains(&ratio), "ratio {ratio} ({coarse:e} -> {fine:e})");
}

#[test]
fn free_gaussian_width_follows_dispersion_law() {
    let grid = Grid::new(vec![512], vec![40.0]).unwrap();
    let (sigma0, mass) = (1.0, 1.0);
    let t = 2.0 * mass * sigma0 * sigma0;
    let psi0 = gaussian_packet(&grid, &[0.0], sigma0, &[0.0]).unwrap();
    let cfg = EvolutionConfig { dt: 0.01, t_end: t, mass, snapshot_stride: 1000 };
    let traj = evolve(&psi0, &Potential::zero(&grid), &cfg).unwrap();
    let width = traj.last().position_spread(0);
    let expected = free_width(sigma0, mass, t);
    assert!(((width - expected) / expected).abs() < 1e-3, "{width} vs {expected}");
}

#[test]
fn norm_is_conserved_over_ten_thousand_steps() {
    let grid = Grid::new(vec![256], vec![40.0]).unwrap();
    let v = Potential::point_mass_on(&grid, vec![3.0], 1.0).unwrap();
    let psi0 = gaussian_packet(&grid, &[0.0], 1.0, &[1.0]).unwrap();
    let prop = SplitStepPropagator::new(&grid, &v, 1.0, 0.01).unwrap();
    let mut data = psi0.amplitudes().to_vec();
    for _ in 0..10_000 {
        prop.advance(&mut data);
    }
    let norm = psi0.with_amplitudes(data).unwrap().norm();
    assert!((norm - 1.0).abs() <= 1e-8, "norm {norm}");
}

#[test]
fn backward_steps_undo_forward_steps() {
    let grid = Grid::new(vec![256], vec![40.0]).unwrap();
    let v = Potential::point_mass_on(&grid, vec![-2.0], 2.0).unwrap();
    let psi0 = gaussian_packet(&grid, &[1.0], 1.0, &[-0.7]).unwrap();
    let fwd = SplitStepPropagator::new(&grid, &v, 1.0, 0.01).unwrap();
    let bwd = SplitStepPropagator::new(&grid, &v, 1.0, -0.01).unwrap();
    let mut data = psi0.amplitudes().to_vec();
    for _ in 0..500 {
        fwd.advance(&mut data);
    }
    for _ in 0..500 {
        bwd.advance(&mut data);
    }
    assert!(l2_distance(&grid, &data, psi0.amplitudes()) <= 1e-8);
}

#[test]
fn energy_is_conserved() {
    let grid = Grid::new(vec![256], vec![40.0]).unwrap();
    let v = Potential::point_mass_on(&grid, vec![4.0], 1.0).unwrap();
    let psi0 = gaussian_packet(&grid, &[0.0], 1.0, &[1.0]).unwrap();
    let cfg = EvolutionConfig { dt: 0.001, t_end: 4.0, mass: 1.0, snapshot_stride: 100 };
    let traj = evolve(&psi0, &v, &cfg).unwrap();
    let e0 = energy(&psi0, &v, 1.0).unwrap();
    for (t, psi) in traj.snapshots() {
        let e = energy(psi, &v, 1.0).unwrap();
        assert!(((e - e0) / e0).abs() <= 1e-6, "t = {t}: {e} vs {e0}");
    }
}

#[test]
fn constant_potential_only_rotates_the_phase() {
    let grid = Grid::new(vec![256], vec![40.0]).unwrap();
    let c = -0.3;
    let psi0 = gaussian_packet(&grid, &[0.0], 1.0, &[0.4]).unwrap();
    let cfg = EvolutionConfig { dt: 0.01, t_end: 2.0, mass: 1.0, snapshot_stride: 50 };
    let free = evolve(&psi0, &Potential::zero(&grid), &cfg).unwrap();
    let shifted = evolve(&psi0, &Potential::constant(&grid, c).unwrap(), &cfg).unwrap();
    for ((t, a), (_, b)) in free.snapshots().iter().zip(shifted.snapshots()) {
        let expected: Vec<Complex64> = a.amplitudes().iter().map(|z| z * Complex64::from_polar(1.0, -c * t)).collect();
        assert!(l2_distance(&grid, b.amplitudes(), &expected) < 1e-10);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x.norm_sqr() - y.norm_sqr()).abs() < 1e-12);
        }
    }
}

#[test]
fn zero_duration_keeps_only_the_initial_state() {
    let grid = small_grid();
    let psi0 = moving_packet(&grid);
    let cfg = EvolutionConfig { dt: 0.01, t_end: 0.0, mass: 1.0, snapshot_stride: 1 };
    let traj = evolve(&psi0, &Potential::zero(&grid), &cfg).unwrap();
    assert_eq!(traj.len(), 1);
    assert_eq!(traj.last().amplitudes(), psi0.amplitudes());
}

#[test]
fn coincident_sources_give_identical_trajectories() {
    let grid = Grid::new(vec![256], vec![40.0]).unwrap();
    let psi0 = gaussian_packet(&grid, &[0.0], 1.0, &[0.2]).unwrap();
    let cfg = EvolutionConfig { dt: 0.01, t_end: 1.0, mass: 2.0, snapshot_stride: 10 };
    let a = evolve(&psi0, &Potential::point_mass_on(&grid, vec![5.0], 1.0).unwrap(), &cfg).unwrap();
    let b = evolve(&psi0, &Potential::point_mass_on(&grid, vec![5.0], 1.0).unwrap(), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_free_step_keeps_center() {
    let grid = Grid::new(vec![256], vec![40.0]).unwrap();
    let psi0 = gaussian_packet(&grid, &[0.0], 1.0, &[0.0]).unwrap();
    let cfg = EvolutionConfig { dt: 0.05, t_end: 0.05, mass: 1.0, snapshot_stride: 1 };
    let psi1 = step(&psi0, &Potential::zero(&grid), &cfg).unwrap();
    assert!((psi1.norm() - 1.0).abs() < 1e-12);
    assert!(psi1.mean_position(0, 0.0).abs() < 1e-12);
    assert!((inner_product(&psi1, &psi1).unwrap().re - 1.0).abs() < 1e-12);
}
