use std::sync::Arc;

use faber_phase::fields::{initial_field, seeded_rng, smooth_random_field};
use faber_phase::objective::Objective;
use faber_phase::optimize::{
    asymmetry, certify_minimizer, is_admissible, minimize, minimize_from, project_admissible, project_values,
    symmetrize, InitialField, OptimizerConfig,
};
use faber_phase::{BallDomain, CoefficientFamily, Grid, PhaseField, Potential, ScalarField};
use proptest::prelude::*;

fn disk(m: usize) -> Arc<Grid> {
    Grid::cartesian(BallDomain::new(2, 1.0).unwrap(), m).unwrap()
}

fn objective(grid: &Arc<Grid>, eps: f64, gamma: f64) -> Objective {
    let family = CoefficientFamily::default_for(2, 1.0).unwrap();
    Objective::new(grid, eps, gamma, Potential::double_obstacle(), family, 1e-10).unwrap()
}

fn config(eps: f64, gamma: f64, init: InitialField) -> OptimizerConfig {
    OptimizerConfig { eps, gamma, m: 0.25, max_iter: 2000, tol: 1e-6, init, seed: 3 }
}

/// Mass of `clamp(f + mu, 0, 1)` off the fixed cells, scanned on a fine
/// grid of shifts.
fn scan_shift(f: &[f64], weights: &[f64], fixed: &[bool], target: f64) -> f64 {
    let mass = |mu: f64| -> f64 {
        f.iter().zip(weights).zip(fixed).filter(|(_, z)| !**z).map(|((v, w), _)| w * (v + mu).clamp(0.0, 1.0)).sum()
    };
    let mut best = (f64::INFINITY, 0.0);
    for k in 0..=400_000 {
        let mu = -3.0 + 4.0 * k as f64 / 400_000.0;
        let gap = (mass(mu) - target).abs();
        if gap < best.0 {
            best = (gap, mu);
        }
    }
    best.1
}

#[test]
fn projection_of_constant_two() {
    let grid = disk(24);
    let f = ScalarField::constant(grid.clone(), 2.0).unwrap();
    let phi = project_admissible(&f, 0.5).unwrap();
    let layer = grid.boundary_layer();
    let mu = scan_shift(f.values(), grid.weights(), &layer, 0.5 * grid.domain().volume());
    for (i, v) in phi.values().iter().enumerate() {
        let expected = if layer[i] { 0.0 } else { (2.0 + mu).clamp(0.0, 1.0) };
        assert!((v - expected).abs() < 1e-4);
    }
    assert!((phi.field().weighted_mean() - 0.5).abs() <= 1e-10);
    let interior = phi.values().iter().zip(&layer).find(|(_, l)| !**l).unwrap().0;
    assert!(*interior > 0.5);
}

#[test]
fn projection_matches_scan_on_random_fields() {
    let grid = disk(20);
    let layer = grid.boundary_layer();
    let mut rng = seeded_rng(2);
    use rand::Rng;
    for _ in 0..5 {
        let f: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let out = project_values(&f, grid.weights(), &layer, 0.4, grid.domain().volume()).unwrap();
        let mu = scan_shift(&f, grid.weights(), &layer, 0.4 * grid.domain().volume());
        for i in 0..f.len() {
            if !layer[i] {
                assert!((out[i] - (f[i] + mu).clamp(0.0, 1.0)).abs() < 1e-4);
            }
        }
    }
}

fn weighted_dist(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_idempotent_and_nonexpansive(
        f in prop::collection::vec(-1.0f64..2.0, 12),
        g in prop::collection::vec(-1.0f64..2.0, 12),
        w in prop::collection::vec(0.1f64..2.0, 12),
        m in 0.05f64..0.7,
    ) {
        let mut fixed = vec![false; 12];
        fixed[0] = true;
        fixed[11] = true;
        let volume: f64 = w.iter().sum();
        let pf = project_values(&f, &w, &fixed, m, volume).unwrap();
        let pg = project_values(&g, &w, &fixed, m, volume).unwrap();
        let again = project_values(&pf, &w, &fixed, m, volume).unwrap();
        prop_assert!(weighted_dist(&w, &pf, &again) < 1e-12);
        let open: Vec<bool> = fixed.iter().map(|z| !z).collect();
        let restrict = |v: &[f64]| v.iter().zip(&open).map(|(x, o)| if *o { *x } else { 0.0 }).collect::<Vec<_>>();
        prop_assert!(weighted_dist(&w, &pf, &pg) <= weighted_dist(&w, &restrict(&f), &restrict(&g)) + 1e-12);
        let mass: f64 = pf.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / volume;
        prop_assert!((mass - m).abs() <= 1e-10);
    }
}

#[test]
fn symmetry_emerges_from_offset_start() {
    let grid = disk(48);
    let obj = objective(&grid, 0.05, 0.01);
    let out = minimize(&obj, &config(0.05, 0.01, InitialField::OffsetBump)).unwrap();
    assert!(out.trace.rows[0].asym > 5e-2);
    let rows = &out.trace.rows;
    assert!(rows.windows(2).all(|w| w[1].j < w[0].j));
    let cert = certify_minimizer(out.phi.field(), &out.evaluation.eigenpair.eigenfunction, &obj, 0.1, None).unwrap();
    assert!(cert.asymmetry <= 1e-2, "{cert:?}");
    assert!(cert.eigen_asymmetry <= 1e-2, "{cert:?}");
    assert!(is_admissible(out.phi.field(), 0.25));
}

#[test]
fn stationary_start_does_not_move() {
    let grid = disk(32);
    let obj = objective(&grid, 0.08, 0.05);
    let first = minimize(&obj, &config(0.08, 0.05, InitialField::RadialBump)).unwrap();
    assert!(first.trace.converged);
    let again = minimize_from(&obj, first.phi.clone(), &config(0.08, 0.05, InitialField::RadialBump)).unwrap();
    let (j0, j1) = (again.trace.rows[0].j, again.trace.rows.last().unwrap().j);
    assert!((j0 - j1).abs() <= 1e-6 * j0.abs(), "{j0} {j1}");
}

#[test]
fn larger_gamma_lowers_energy() {
    let grid = Grid::radial(BallDomain::new(2, 1.0).unwrap(), 200).unwrap();
    let energies: Vec<f64> = [0.003, 0.01, 0.03]
        .iter()
        .map(|&gamma| {
            let obj = objective(&grid, 0.05, gamma);
            minimize(&obj, &config(0.05, gamma, InitialField::RadialBump)).unwrap().evaluation.breakdown.total
        })
        .collect();
    assert!(energies.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-6)), "{energies:?}");
}

#[test]
fn interface_width_halves_with_eps_for_strong_regularization() {
    let grid = Grid::radial(BallDomain::new(2, 1.0).unwrap(), 400).unwrap();
    let widths: Vec<f64> = [0.04, 0.02]
        .iter()
        .map(|&eps| {
            let obj = objective(&grid, eps, 1.0);
            let mut cfg = config(eps, 1.0, InitialField::RadialBump);
            cfg.max_iter = 20_000;
            minimize(&obj, &cfg).unwrap().phi.field().interface_measure(0.1).unwrap()
        })
        .collect();
    let ratio = widths[1] / widths[0];
    assert!((0.35..=0.65).contains(&ratio), "{widths:?}");
}

#[test]
fn certificate_trivial_cases() {
    let grid = disk(32);
    let obj = objective(&grid, 0.05, 0.01);
    let sym = initial_field(&grid, InitialField::RadialBump, 0.25, 0).unwrap();
    let star = symmetrize(sym.field()).unwrap();
    let cert = certify_minimizer(&star, &star, &obj, 0.1, Some(1.0)).unwrap();
    assert_eq!(cert.asymmetry, 0.0);
    let chi = ScalarField::from_fn(grid.clone(), |p| (p[0].hypot(p[1]) < 0.5) as u8 as f64).unwrap();
    let cert = certify_minimizer(&chi, &chi, &obj, 0.1, Some(1.0)).unwrap();
    assert_eq!(cert.interface_measure, 0.0);
    assert_eq!(cert.bound_holds, Some(true));
}

#[test]
fn rearrangement_does_not_increase_objective() {
    let grid = disk(32);
    let obj = objective(&grid, 0.05, 0.01);
    let mut rng = seeded_rng(17);
    for _ in 0..10 {
        let phi = smooth_random_field(&grid, 0.3, &mut rng).unwrap();
        let star = PhaseField::new(symmetrize(phi.field()).unwrap(), 0.3).unwrap();
        let j = obj.evaluate(phi.field(), None).unwrap();
        let js = obj.evaluate(star.field(), None).unwrap();
        let slack = 1e-3 * j.eigenpair.lambda + 1e-2 * obj.gamma * j.breakdown.total;
        assert!(js.j() <= j.j() + slack);
        assert!(asymmetry(star.field()).unwrap() == 0.0);
    }
}
