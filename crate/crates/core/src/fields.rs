//! Seeded random and analytic starting fields.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use crate::error::{Error, Result};
use crate::grid::{Grid, PhaseField, ScalarField};
use crate::optimize::{project_admissible, InitialField};

/// xoshiro256** seeded through splitmix64.
pub fn seeded_rng(seed: u64) -> Xoshiro256StarStar {
    Xoshiro256StarStar::seed_from_u64(seed)
}

const RADIAL_MODES: usize = 4;
const ANGULAR_MODES: usize = 3;

/// Low-order Fourier noise in `(r, theta)` around 1/2, clamped to the box
/// and projected to mass `m`. Radial grids only use the radial modes.
pub fn smooth_random_field(grid: &Arc<Grid>, m: f64, rng: &mut impl Rng) -> Result<PhaseField> {
    let radius = grid.domain().radius();
    let angular = if matches!(grid.as_ref(), Grid::Radial(_)) { 0 } else { ANGULAR_MODES };
    let coeffs: Vec<(usize, usize, f64, f64)> = (0..RADIAL_MODES)
        .flat_map(|k| (0..=angular).map(move |l| (k, l)))
        .map(|(k, l)| {
            let scale = 0.6 / (1.0 + (k + l) as f64);
            (k, l, rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
        })
        .collect();
    let f = ScalarField::from_fn(grid.clone(), |p| {
        let r = p[0].hypot(p[1]) / radius;
        let theta = p[1].atan2(p[0]);
        let noise: f64 = coeffs
            .iter()
            .map(|&(k, l, a, b)| {
                let radial = (k as f64 * PI * r).cos();
                radial * (a * (l as f64 * theta).cos() + b * (l as f64 * theta).sin())
            })
            .sum();
        (0.5 + noise).clamp(0.0, 1.0)
    })?;
    project_admissible(&f, m)
}

fn bump(center: [f64; 2], width: f64) -> impl Fn([f64; 2]) -> f64 {
    move |p| {
        let d = (p[0] - center[0]).hypot(p[1] - center[1]) / width;
        if d < 1.0 {
            0.5 * (1.0 + (PI * d).cos())
        } else {
            0.0
        }
    }
}

/// Starting field for the optimizer, projected to mass `m`.
pub fn initial_field(grid: &Arc<Grid>, kind: InitialField, m: f64, seed: u64) -> Result<PhaseField> {
    let radius = grid.domain().radius();
    let width = 0.6 * radius;
    match kind {
        InitialField::RadialBump => {
            project_admissible(&ScalarField::from_fn(grid.clone(), bump([0.0, 0.0], width))?, m)
        }
        InitialField::OffsetBump => {
            if matches!(grid.as_ref(), Grid::Radial(_)) {
                return Err(Error::Unsupported("offset-bump needs a Cartesian grid".into()));
            }
            let center = [0.3 * radius, 0.1 * radius];
            project_admissible(&ScalarField::from_fn(grid.clone(), bump(center, width))?, m)
        }
        InitialField::SeededNoise => smooth_random_field(grid, m, &mut seeded_rng(seed)),
    }
}
