//! Projected gradient descent for `J` over admissible phase fields
//! `{0 <= phi <= 1, mean(phi) = m, phi = 0 on the boundary layer}`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::{weighted_sum, Grid, PhaseField, ScalarField, MASS_TOL};
use crate::objective::{Evaluation, Objective};
use crate::rearrange::{rearrange, rearrange_weighted};

pub const ARMIJO: f64 = 1e-4;
pub const BACKTRACK: f64 = 0.5;
const MIN_STEP_FACTOR: f64 = 1e-12;
/// Cap on step growth relative to the initial step.
const MAX_STEP_FACTOR: f64 = 1e3;

/// Euclidean projection of `values` onto the box-and-mean set with
/// `fixed_zero` entries held at 0: `clamp(f + mu, 0, 1)` with `mu` found by
/// bisection, then solved exactly on the final free set. The mean is
/// `sum w_i f_i / volume`.
pub fn project_values(
    values: &[f64],
    weights: &[f64],
    fixed_zero: &[bool],
    m: f64,
    volume: f64,
) -> Result<Vec<f64>> {
    if !(m > 0.0 && m < 1.0) {
        return Err(invalid("m", format!("must lie in (0, 1), got {m}")));
    }
    let open: f64 = weights.iter().zip(fixed_zero).filter(|(_, z)| !**z).map(|(w, _)| w).sum();
    if m * volume >= open {
        return Err(Error::InfeasibleMass {
            target: m,
            max: open / volume,
        });
    }
    let target = m * volume;
    let mass = |mu: f64| -> f64 {
        values
            .iter()
            .zip(weights)
            .zip(fixed_zero)
            .filter(|(_, z)| !**z)
            .map(|((v, w), _)| w * (v + mu).clamp(0.0, 1.0))
            .sum()
    };
    let (lo_f, hi_f) = values
        .iter()
        .zip(fixed_zero)
        .filter(|(_, z)| !**z)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), (v, _)| (a.min(*v), b.max(*v)));
    let (mut lo, mut hi) = (-hi_f, 1.0 - lo_f);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * (1.0 + lo.abs()) {
            break;
        }
    }
    let mut mu = 0.5 * (lo + hi);
    // exact solve on the free set of this mu
    let (mut fixed_mass, mut free_w, mut free_v) = (0.0, 0.0, 0.0);
    for ((v, w), z) in values.iter().zip(weights).zip(fixed_zero) {
        if *z {
            continue;
        }
        let s = v + mu;
        if s >= 1.0 {
            fixed_mass += w;
        } else if s > 0.0 {
            free_w += w;
            free_v += w * v;
        }
    }
    if free_w > 0.0 {
        let exact = (target - fixed_mass - free_v) / free_w;
        if (mass(exact) - target).abs() <= (mass(mu) - target).abs() {
            mu = exact;
        }
    }
    Ok(values
        .iter()
        .zip(fixed_zero)
        .map(|(v, z)| if *z { 0.0 } else { (v + mu).clamp(0.0, 1.0) })
        .collect())
}

pub fn project_admissible(f: &ScalarField, m: f64) -> Result<PhaseField> {
    let grid = f.grid();
    let out = project_values(f.values(), grid.weights(), &grid.boundary_layer(), m, grid.domain().volume())?;
    PhaseField::new(f.with_values(out)?, m)
}

/// Symmetric-decreasing rearrangement appropriate for the grid.
pub fn symmetrize(f: &ScalarField) -> Result<ScalarField> {
    if f.grid().has_equal_weights() {
        rearrange(f)
    } else {
        rearrange_weighted(f)
    }
}

/// `||f - f*||_{L^1}`.
pub fn asymmetry(f: &ScalarField) -> Result<f64> {
    let star = symmetrize(f)?;
    let diff: Vec<f64> = f.values().iter().zip(star.values()).map(|(a, b)| (a - b).abs()).collect();
    Ok(weighted_sum(f.grid().weights(), &diff))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialField {
    RadialBump,
    OffsetBump,
    SeededNoise,
}

impl std::str::FromStr for InitialField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radial-bump" => Ok(Self::RadialBump),
            "offset-bump" => Ok(Self::OffsetBump),
            "seeded-noise" => Ok(Self::SeededNoise),
            _ => Err(invalid("init", format!("unknown initial field {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizerConfig {
    pub eps: f64,
    pub gamma: f64,
    pub m: f64,
    pub max_iter: usize,
    /// Stop when the projected-gradient norm falls below this.
    pub tol: f64,
    pub init: InitialField,
    pub seed: u64,
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps", self.eps), ("gamma", self.gamma), ("tol", self.tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive, got {v}")));
            }
        }
        if !(self.m > 0.0 && self.m < 1.0) {
            return Err(invalid("m", format!("must lie in (0, 1), got {}", self.m)));
        }
        if self.max_iter == 0 {
            return Err(invalid("max-iter", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iter: usize,
    pub j: f64,
    pub lambda1: f64,
    pub energy: f64,
    pub step: f64,
    pub pgnorm: f64,
    pub asym: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OptimizerTrace {
    pub rows: Vec<TraceRow>,
    pub converged: bool,
}

impl OptimizerTrace {
    pub const CSV_HEADER: &'static str = "iter,J,lambda1,E,step,pgnorm,asym";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:.12e},{:.12e},{:.12e},{:.6e},{:.6e},{:.6e}\n",
                r.iter, r.j, r.lambda1, r.energy, r.step, r.pgnorm, r.asym
            ));
        }
        out
    }
}

/// Result of a minimization run.
#[derive(Debug, Clone)]
pub struct Minimizer {
    pub phi: PhaseField,
    pub evaluation: Evaluation,
    pub trace: OptimizerTrace,
}

fn projected_gradient_norm(phi: &[f64], grad: &[f64], grid: &Grid, m: f64, tau: f64) -> Result<f64> {
    let trial: Vec<f64> = phi.iter().zip(grad).map(|(p, g)| p - tau * g).collect();
    let proj = project_values(&trial, grid.weights(), &grid.boundary_layer(), m, grid.domain().volume())?;
    let d: Vec<f64> = phi.iter().zip(&proj).map(|(a, b)| (a - b) * (a - b)).collect();
    Ok(weighted_sum(grid.weights(), &d).sqrt() / tau)
}

/// Minimizes `J` from `start` by projected gradient steps with Armijo
/// backtracking along the projection arc.
pub fn minimize_from(objective: &Objective, start: PhaseField, config: &OptimizerConfig) -> Result<Minimizer> {
    config.validate()?;
    let grid = objective.grid().clone();
    let weights = grid.weights();
    let layer = grid.boundary_layer();
    let m = config.m;
    let volume = grid.domain().volume();
    let tau_ref = 1.0 / objective.family.beta(objective.eps)?;
    let mut tau = tau_ref;

    let mut phi = start;
    let mut eval = objective.evaluate(phi.field(), None)?;
    let mut trace = OptimizerTrace::default();
    let mut step_taken = 0.0;
    for iter in 0..=config.max_iter {
        let grad = objective.first_variation(phi.field(), &eval.eigenpair)?;
        let pgnorm = projected_gradient_norm(phi.values(), grad.values(), &grid, m, tau_ref)?;
        trace.rows.push(TraceRow {
            iter,
            j: eval.j(),
            lambda1: eval.eigenpair.lambda,
            energy: eval.breakdown.total,
            step: step_taken,
            pgnorm,
            asym: asymmetry(phi.field())? / grid.domain().volume(),
        });
        if pgnorm <= config.tol {
            trace.converged = true;
            break;
        }
        if iter == config.max_iter {
            break;
        }
        let j0 = eval.j();
        let mut accepted = None;
        while tau >= MIN_STEP_FACTOR * tau_ref {
            let trial: Vec<f64> = phi.values().iter().zip(grad.values()).map(|(p, g)| p - tau * g).collect();
            let next = project_values(&trial, weights, &layer, m, volume)?;
            let dir: Vec<f64> = next.iter().zip(phi.values()).map(|(a, b)| a - b).collect();
            let slope: f64 = weighted_sum(
                weights,
                &dir.iter().zip(grad.values()).map(|(d, g)| d * g).collect::<Vec<_>>(),
            );
            let field = phi.field().with_values(next)?;
            let cand = objective.evaluate(&field, Some(&eval.eigenpair.eigenfunction))?;
            if cand.j() <= j0 + ARMIJO * slope && cand.j() < j0 {
                accepted = Some((PhaseField::new(field, m)?, cand));
                break;
            }
            tau *= BACKTRACK;
        }
        let Some((next_phi, next_eval)) = accepted else {
            // no decrease representable in floating point: stationary
            trace.converged = true;
            break;
        };
        step_taken = tau;
        phi = next_phi;
        eval = next_eval;
        tau = (2.0 * tau).min(MAX_STEP_FACTOR * tau_ref);
    }
    Ok(Minimizer {
        phi,
        evaluation: eval,
        trace,
    })
}

pub fn minimize(objective: &Objective, config: &OptimizerConfig) -> Result<Minimizer> {
    config.validate()?;
    let start = crate::fields::initial_field(objective.grid(), config.init, config.m, config.seed)?;
    minimize_from(objective, start, config)
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// `||phi - phi*||_{L^1} / |Omega|`.
    pub asymmetry: f64,
    /// `||w - w*||_{L^1}`.
    pub eigen_asymmetry: f64,
    pub delta: f64,
    pub interface_measure: f64,
    pub alpha_delta: f64,
    pub eps: f64,
    pub gamma: f64,
    /// `C eps / (alpha_delta gamma)` once `C` is known.
    pub bound: Option<f64>,
    pub constant: Option<f64>,
    pub bound_holds: Option<bool>,
}

/// Symmetry and interface-width properties of a (candidate) minimizer.
pub fn certify_minimizer(
    phi: &ScalarField,
    eigenfunction: &ScalarField,
    objective: &Objective,
    delta: f64,
    constant: Option<f64>,
) -> Result<Certificate> {
    let alpha_delta = objective.potential.alpha_delta(delta)?;
    let interface_measure = phi.interface_measure(delta)?;
    let bound = constant.map(|c| c * objective.eps / (alpha_delta * objective.gamma));
    Ok(Certificate {
        asymmetry: asymmetry(phi)? / phi.grid().domain().volume(),
        eigen_asymmetry: asymmetry(eigenfunction)?,
        delta,
        interface_measure,
        alpha_delta,
        eps: objective.eps,
        gamma: objective.gamma,
        bound,
        constant,
        bound_holds: bound.map(|b| interface_measure <= b),
    })
}

/// Whether `phi` satisfies every constraint of the admissible set.
pub fn is_admissible(phi: &ScalarField, m: f64) -> bool {
    let grid = phi.grid();
    phi.values().iter().all(|v| (0.0..=1.0).contains(v))
        && (0..grid.len()).all(|i| !grid.is_boundary_layer(i) || phi.values()[i] == 0.0)
        && (phi.weighted_mean() - m).abs() <= MASS_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BallDomain;

    #[test]
    fn two_cell_projection() {
        let out = project_values(&[0.2, 0.8], &[1.0, 1.0], &[false, false], 0.6, 2.0).unwrap();
        assert!((out[0] - 0.3).abs() < 1e-14 && (out[1] - 0.9).abs() < 1e-14, "{out:?}");
    }

    #[test]
    fn clamped_constant_projection() {
        // f = 2 on four cells, one held at zero: mu solves 3 clamp(2 + mu) = 2
        let out = project_values(&[2.0; 4], &[1.0; 4], &[true, false, false, false], 0.5, 4.0).unwrap();
        assert_eq!(out[0], 0.0);
        for v in &out[1..] {
            assert!((v - 2.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn infeasible_mass() {
        let err = project_values(&[0.5; 4], &[1.0; 4], &[true, false, false, false], 0.8, 4.0).unwrap_err();
        assert!(matches!(err, Error::InfeasibleMass { .. }));
        assert!(project_values(&[0.5; 2], &[1.0; 2], &[false; 2], 1.0, 2.0).is_err());
    }

    #[test]
    fn admissible_fixed_by_projection() {
        let g = Grid::cartesian(BallDomain::new(2, 1.0).unwrap(), 32).unwrap();
        let f = ScalarField::from_fn(g.clone(), |p| (0.7 - p[0].hypot(p[1])).clamp(0.0, 1.0)).unwrap();
        let phi = project_admissible(&f, 0.2).unwrap();
        let again = project_admissible(phi.field(), 0.2).unwrap();
        for (a, b) in phi.values().iter().zip(again.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(is_admissible(phi.field(), 0.2));
    }

    #[test]
    fn parse_initial_field() {
        assert_eq!("offset-bump".parse::<InitialField>().unwrap(), InitialField::OffsetBump);
        assert!("bump".parse::<InitialField>().is_err());
    }
}
