mod common;

use std::f64::consts::FRAC_PI_2;

use faber_phase::profile::{
    gamma_check, log_log_slope, profile_rho, recovery_sequence, solve_profile, Approach,
};
use faber_phase::{BallDomain, CoefficientFamily, Error, Grid, Potential, ScalarField, SharpShape};
use proptest::prelude::*;

fn logistic(t: f64) -> f64 {
    1.0 / (1.0 + (-t / 2f64.sqrt()).exp())
}

#[test]
fn double_well_profile_is_logistic() {
    let sol = solve_profile(&Potential::double_well(), 20.0).unwrap();
    assert!((sol.eval(1.0) - logistic(1.0)).abs() < 1e-6);
    for k in -200..=200 {
        let t = k as f64 * 0.1;
        assert!((sol.eval(t) - logistic(t)).abs() < 1e-6, "t={t}");
    }
    for approach in [sol.to_zero, sol.to_one] {
        let Approach::Asymptotic(tail) = approach else { panic!("{approach:?}") };
        assert!((tail.a - 1.0 / 2f64.sqrt()).abs() < 1e-2, "{tail:?}");
        assert!(tail.residual <= 5e-2);
    }
}

#[test]
fn double_obstacle_profile_is_sine() {
    let sol = solve_profile(&Potential::double_obstacle(), 20.0).unwrap();
    let (Approach::Hits(t0), Approach::Hits(t1)) = (sol.to_zero, sol.to_one) else { panic!() };
    assert!((t1 - FRAC_PI_2).abs() < 1e-4, "{t1}");
    assert!((t0 + FRAC_PI_2).abs() < 1e-4, "{t0}");
    for k in -1000..=1000 {
        let t = k as f64 * FRAC_PI_2 / 1000.0;
        assert!((sol.eval(t) - 0.5 * (1.0 + t.sin())).abs() < 1e-6, "t={t}");
    }
    assert_eq!(sol.eval(2.0), 1.0);
    assert_eq!(sol.eval(-2.0), 0.0);
}

#[test]
fn ode_residual_on_open_region() {
    for psi in [Potential::double_well(), Potential::double_obstacle()] {
        let sol = solve_profile(&psi, 20.0).unwrap();
        let h = sol.step;
        for k in 1..sol.eta.len() - 1 {
            let (a, b, c) = (sol.eta[k - 1], sol.eta[k], sol.eta[k + 1]);
            let open = |v: f64| v > 1e-6 && v < 1.0 - 1e-6;
            if !(open(a) && open(b) && open(c)) {
                continue;
            }
            let d = (c - a) / (2.0 * h);
            assert!((d - (2.0 * psi.psi(b).unwrap()).sqrt()).abs() <= 1e-6, "{} at {k}", psi.name());
        }
    }
}

#[test]
fn rho_is_continuous_at_seams() {
    let sol = solve_profile(&Potential::double_well(), 20.0).unwrap();
    let eps: f64 = 1e-4;
    let r = eps.sqrt();
    for seam in [-2.0 * r, -r, r, 2.0 * r] {
        let below = profile_rho(&sol, eps, seam * (1.0 - 1e-12) - 1e-15);
        let above = profile_rho(&sol, eps, seam * (1.0 + 1e-12) + 1e-15);
        let gap = (profile_rho(&sol, eps, seam) - below).abs().max((above - below).abs());
        assert!(gap <= 1e-9, "seam {seam}: {gap}");
    }
}

proptest! {
    #[test]
    fn rho_monotone_in_unit_interval(a in -0.5f64..0.5, b in -0.5f64..0.5, eps in 1e-4f64..0.1) {
        let sol = solve_profile(&Potential::double_well(), 20.0).unwrap();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (profile_rho(&sol, eps, lo), profile_rho(&sol, eps, hi));
        prop_assert!((0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
        prop_assert!(x <= y);
    }
}

#[test]
fn recovery_converges_in_l1() {
    let grid = Grid::radial(BallDomain::new(2, 1.0).unwrap(), 4000).unwrap();
    let ball = SharpShape::Ball { r: 0.5 };
    let chi = ScalarField::from_fn(grid.clone(), |p| ball.contains(p) as u8 as f64).unwrap();
    for psi in [Potential::double_well(), Potential::double_obstacle()] {
        let sol = solve_profile(&psi, 20.0).unwrap();
        let eps = [0.04, 0.02, 0.01];
        let errors: Vec<f64> = eps
            .iter()
            .map(|&e| {
                let phi = recovery_sequence(&ball, e, &grid, &sol).unwrap();
                assert!((phi.weighted_mean() - 0.25).abs() <= 2.0 * e);
                let d: Vec<f64> = phi.values().iter().zip(chi.values()).map(|(a, b)| a - b).collect();
                chi.with_values(d).unwrap().l1_norm()
            })
            .collect();
        assert!(log_log_slope(&eps, &errors).unwrap() >= 0.9, "{errors:?}");
    }
}

#[test]
fn recovery_rejects_shapes_near_boundary() {
    let grid = Grid::radial(BallDomain::new(2, 1.0).unwrap(), 400).unwrap();
    let sol = solve_profile(&Potential::double_obstacle(), 20.0).unwrap();
    let err = recovery_sequence(&SharpShape::Ball { r: 0.9 }, 0.04, &grid, &sol).unwrap_err();
    assert!(matches!(err, Error::ShapeTooClose { .. }));
}

#[test]
fn gamma_check_trends() {
    let grid = Grid::radial(BallDomain::new(2, 1.0).unwrap(), 2000).unwrap();
    let family = CoefficientFamily::default_for(2, 1.0).unwrap();
    let psi = Potential::double_obstacle();
    let report = gamma_check(&SharpShape::Ball { r: 0.5 }, &[0.04, 0.02, 0.01], &grid, 1.0, &psi, &family, 1e-9).unwrap();
    assert!(report.eigen_gap_decreasing);
    let last = report.rows.last().unwrap();
    assert!(last.energy_gap <= 2e-2);
    assert!((last.lambda_zero - common::disk_lambda(0.5)).abs() / last.lambda_zero < 1e-3);
    assert!(report.rows.iter().all(|r| r.lambda_eps < r.lambda_zero));
}
