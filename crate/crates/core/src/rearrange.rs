//! Discrete symmetric-decreasing rearrangement and checkers for the
//! classical rearrangement identities and inequalities.
//!
//! On an equal-weight grid the rearrangement sorts the values decreasingly
//! and assigns them to cells ordered by distance from the origin (ties by
//! cell index). This is exact: it permutes values, so every identity that
//! only depends on the distribution of values holds to rounding. Radial
//! grids have unequal shell weights; [`rearrange_weighted`] redistributes the
//! layer-cake measure instead and is only approximate pointwise.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::stencil::{Stiffness, Trace};

/// Cells sorted by increasing distance from the origin.
#[derive(Debug, Clone)]
pub struct RearrangementPlan {
    order: Vec<usize>,
}

impl RearrangementPlan {
    pub fn for_grid(grid: &Grid) -> Self {
        let order = match grid {
            Grid::Radial(g) => (0..g.len()).collect(),
            Grid::Cartesian(g) => {
                let mut order: Vec<usize> = (0..g.len()).collect();
                order.sort_by_key(|&i| (g.doubled_distance_sq(i), i));
                order
            }
        };
        Self { order }
    }

    /// Plan for an abstract set of equal-measure cells already listed by
    /// increasing distance.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &i in &order {
            if i >= seen.len() || std::mem::replace(&mut seen[i], true) {
                return Err(crate::error::invalid("order", "not a permutation"));
            }
        }
        Ok(Self { order })
    }

    pub fn identity(len: usize) -> Self {
        Self {
            order: (0..len).collect(),
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Rearranges non-negative values over equal-measure cells.
    pub fn apply(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.order.len() {
            return Err(Error::FieldMismatch {
                expected: self.order.len(),
                got: values.len(),
            });
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
            return Err(Error::NegativeValue { index, value });
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let mut out = vec![0.0; values.len()];
        for (&cell, v) in self.order.iter().zip(sorted) {
            out[cell] = v;
        }
        Ok(out)
    }
}

/// Exact rearrangement on an equal-weight grid.
pub fn rearrange(f: &ScalarField) -> Result<ScalarField> {
    if !f.grid().has_equal_weights() {
        return Err(Error::UnequalWeights);
    }
    let plan = RearrangementPlan::for_grid(f.grid());
    f.with_values(plan.apply(f.values())?)
}

/// Rearrangement that works on any grid. On radial grids shell `k` receives
/// the average of the decreasing distribution function over its measure
/// interval, which preserves the integral exactly and fixes already
/// decreasing profiles.
pub fn rearrange_weighted(f: &ScalarField) -> Result<ScalarField> {
    if f.grid().has_equal_weights() {
        return rearrange(f);
    }
    if let Some((index, &value)) = f.values().iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(Error::NegativeValue { index, value });
    }
    let weights = f.grid().weights();
    let mut pairs: Vec<(f64, f64)> = f.values().iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut out = Vec::with_capacity(weights.len());
    let mut src = 0;
    let mut src_left = pairs.first().map_or(0.0, |p| p.1);
    for &w in weights {
        let mut need = w;
        let mut acc = 0.0;
        while need > 0.0 && src < pairs.len() {
            let take = need.min(src_left);
            acc += take * pairs[src].0;
            need -= take;
            src_left -= take;
            if src_left <= 1e-15 * w {
                src += 1;
                src_left = pairs.get(src).map_or(0.0, |p| p.1);
            }
        }
        // rounding leftovers are charged to the last source value
        if need > 0.0 {
            acc += need * pairs.last().map_or(0.0, |p| p.0);
        }
        out.push(acc / w);
    }
    f.with_values(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    /// `|lhs - rhs| <= slack`
    Equal,
    /// `lhs <= rhs + slack`
    AtMost,
}

/// Outcome of a single rearrangement check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub relation: Relation,
    pub slack: f64,
    pub holds: bool,
}

impl CheckReport {
    fn new(name: impl Into<String>, lhs: f64, rhs: f64, relation: Relation, slack: f64) -> Self {
        let holds = match relation {
            Relation::Equal => (lhs - rhs).abs() <= slack,
            Relation::AtMost => lhs <= rhs + slack,
        };
        Self {
            name: name.into(),
            lhs,
            rhs,
            relation,
            slack,
            holds,
        }
    }
}

/// Absolute slack of the exact discrete checks.
pub const EXACT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    Inf,
}

/// Convex maps with `F(0) = 0` used for nonexpansivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvexMap {
    Abs,
    Square,
}

impl ConvexMap {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            ConvexMap::Abs => x.abs(),
            ConvexMap::Square => x * x,
        }
    }
}

fn norm(values: &[f64], p: Norm, cell_weight: f64) -> f64 {
    match p {
        Norm::L1 => cell_weight * values.iter().map(|v| v.abs()).sum::<f64>(),
        Norm::L2 => (cell_weight * values.iter().map(|v| v * v).sum::<f64>()).sqrt(),
        Norm::Inf => values.iter().fold(0.0, |m, v| m.max(v.abs())),
    }
}

/// `||f*||_p = ||f||_p` on equal cells of measure `cell_weight`; relative
/// tolerance 1e-13.
pub fn check_norm_preservation(
    plan: &RearrangementPlan,
    f: &[f64],
    p: Norm,
    cell_weight: f64,
) -> Result<CheckReport> {
    let star = plan.apply(f)?;
    let (a, b) = (norm(&star, p, cell_weight), norm(f, p, cell_weight));
    Ok(CheckReport::new(format!("norm {p:?}"), a, b, Relation::Equal, 1e-13 * b.max(1e-300)))
}

/// `sum f g <= sum f* g*`.
pub fn check_hardy_littlewood(plan: &RearrangementPlan, f: &[f64], g: &[f64]) -> Result<CheckReport> {
    let (fs, gs) = (plan.apply(f)?, plan.apply(g)?);
    let lhs = dot(f, g);
    let rhs = dot(&fs, &gs);
    Ok(CheckReport::new(
        "hardy-littlewood",
        lhs,
        rhs,
        Relation::AtMost,
        EXACT_SLACK * rhs.abs().max(1.0),
    ))
}

/// `sum F(f* - g*) <= sum F(f - g)`.
pub fn check_nonexpansivity(
    plan: &RearrangementPlan,
    f: &[f64],
    g: &[f64],
    map: ConvexMap,
) -> Result<CheckReport> {
    let (fs, gs) = (plan.apply(f)?, plan.apply(g)?);
    let lhs: f64 = fs.iter().zip(&gs).map(|(a, b)| map.eval(a - b)).sum();
    let rhs: f64 = f.iter().zip(g).map(|(a, b)| map.eval(a - b)).sum();
    Ok(CheckReport::new(
        format!("nonexpansivity {map:?}"),
        lhs,
        rhs,
        Relation::AtMost,
        EXACT_SLACK * rhs.abs().max(1.0),
    ))
}

/// `#{f* > t} = #{f > t}` for each threshold; reports the total mismatch.
pub fn check_level_sets(plan: &RearrangementPlan, f: &[f64], thresholds: &[f64]) -> Result<CheckReport> {
    let star = plan.apply(f)?;
    let mismatch: usize = thresholds
        .iter()
        .map(|&t| {
            let a = star.iter().filter(|&&v| v > t).count();
            let b = f.iter().filter(|&&v| v > t).count();
            a.abs_diff(b)
        })
        .sum();
    Ok(CheckReport::new("level sets", mismatch as f64, 0.0, Relation::Equal, 0.0))
}

/// `(Phi o f)* = Phi o f*` bitwise for non-decreasing `Phi` with `Phi(0) = 0`.
pub fn check_composition(
    plan: &RearrangementPlan,
    f: &[f64],
    name: &str,
    phi: impl Fn(f64) -> f64,
) -> Result<CheckReport> {
    let composed: Vec<f64> = f.iter().map(|&v| phi(v)).collect();
    let left = plan.apply(&composed)?;
    let right: Vec<f64> = plan.apply(f)?.into_iter().map(&phi).collect();
    let differing = left.iter().zip(&right).filter(|(a, b)| a != b).count();
    Ok(CheckReport::new(
        format!("composition {name}"),
        differing as f64,
        0.0,
        Relation::Equal,
        0.0,
    ))
}

/// `sum Psi(f*) = sum Psi(f)` for `Psi` with `Psi(0) = 0`.
pub fn check_integral_identity(
    plan: &RearrangementPlan,
    f: &[f64],
    name: &str,
    psi: impl Fn(f64) -> f64,
) -> Result<CheckReport> {
    let star = plan.apply(f)?;
    let a: f64 = star.iter().map(|&v| psi(v)).sum();
    let b: f64 = f.iter().map(|&v| psi(v)).sum();
    Ok(CheckReport::new(
        format!("integral {name}"),
        a,
        b,
        Relation::Equal,
        EXACT_SLACK * b.abs().max(1.0),
    ))
}

/// All exact checks for one pair of non-negative fields on equal cells.
pub fn exact_suite(
    plan: &RearrangementPlan,
    f: &[f64],
    g: &[f64],
    cell_weight: f64,
) -> Result<Vec<CheckReport>> {
    let max = f.iter().fold(0.0f64, |m, &v| m.max(v));
    let cut = 0.5 * max;
    let thresholds: Vec<f64> = (0..=20).map(|k| max * k as f64 / 20.0).collect();
    Ok(vec![
        check_norm_preservation(plan, f, Norm::L1, cell_weight)?,
        check_norm_preservation(plan, f, Norm::L2, cell_weight)?,
        check_norm_preservation(plan, f, Norm::Inf, cell_weight)?,
        check_level_sets(plan, f, &thresholds)?,
        check_composition(plan, f, "s^2", |s| s * s)?,
        check_composition(plan, f, "min(s,c)", move |s| s.min(cut))?,
        check_integral_identity(plan, f, "s^3+s", |s| s * s * s + s)?,
        check_hardy_littlewood(plan, f, g)?,
        check_nonexpansivity(plan, f, g, ConvexMap::Abs)?,
        check_nonexpansivity(plan, f, g, ConvexMap::Square)?,
    ])
}

/// Discrete Dirichlet energies of `f` and `f*` under the zero-trace form.
#[derive(Debug, Clone, Serialize)]
pub struct PolyaSzegoReport {
    pub energy: f64,
    pub energy_rearranged: f64,
    /// `energy - energy_rearranged`; non-negative in the continuum.
    pub gap: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Relative discretization slack of the discrete Polya-Szego check.
pub const POLYA_SZEGO_SLACK: f64 = 1e-2;

pub fn check_polya_szego(f: &ScalarField) -> Result<PolyaSzegoReport> {
    let star = rearrange(f)?;
    let k = Stiffness::full(f.grid(), Trace::Zero);
    let energy = k.energy(f.values());
    let energy_rearranged = k.energy(star.values());
    let gap = energy - energy_rearranged;
    let slack = POLYA_SZEGO_SLACK * energy;
    Ok(PolyaSzegoReport {
        energy,
        energy_rearranged,
        gap,
        slack,
        holds: gap >= -slack,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BallDomain;

    #[test]
    fn constant_is_fixed() {
        let grid = Grid::cartesian(BallDomain::new(2, 1.0).unwrap(), 20).unwrap();
        let f = ScalarField::constant(grid, 0.7).unwrap();
        assert_eq!(rearrange(&f).unwrap().values(), f.values());
    }

    #[test]
    fn rejects_negative_and_radial() {
        let grid = Grid::cartesian(BallDomain::new(2, 1.0).unwrap(), 16).unwrap();
        let f = ScalarField::constant(grid, -0.1).unwrap();
        assert!(matches!(rearrange(&f), Err(Error::NegativeValue { .. })));
        let radial = Grid::radial(BallDomain::new(2, 1.0).unwrap(), 16).unwrap();
        let f = ScalarField::constant(radial, 0.5).unwrap();
        assert!(matches!(rearrange(&f), Err(Error::UnequalWeights)));
        assert!(rearrange_weighted(&f).is_ok());
    }

    #[test]
    fn two_cell_hardy_littlewood() {
        let plan = RearrangementPlan::identity(2);
        let r = check_hardy_littlewood(&plan, &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 1.0));
        assert!(r.holds);
    }

    #[test]
    fn norm_edge_cases() {
        let plan = RearrangementPlan::identity(5);
        let zero = check_norm_preservation(&plan, &[0.0; 5], Norm::L2, 1.0).unwrap();
        assert!(zero.holds && zero.lhs == 0.0);
        let one_hot = check_norm_preservation(&plan, &[0.0, 0.0, 1.0, 0.0, 0.0], Norm::L1, 0.25).unwrap();
        assert_eq!((one_hot.lhs, one_hot.rhs), (0.25, 0.25));
    }

    #[test]
    fn weighted_variant_fixes_decreasing_profiles() {
        let grid = Grid::radial(BallDomain::new(2, 1.0).unwrap(), 50).unwrap();
        let f = ScalarField::from_fn(grid, |p| (1.0 - p[0]).powi(2)).unwrap();
        let star = rearrange_weighted(&f).unwrap();
        for (a, b) in star.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_variant_preserves_integral() {
        let grid = Grid::radial(BallDomain::new(3, 1.0).unwrap(), 64).unwrap();
        let f = ScalarField::from_fn(grid, |p| (7.0 * p[0]).sin().abs()).unwrap();
        let star = rearrange_weighted(&f).unwrap();
        assert!((star.weighted_mean() - f.weighted_mean()).abs() < 1e-13);
        assert!(star.values().windows(2).all(|w| w[0] >= w[1] - 1e-14));
        let again = rearrange_weighted(&star).unwrap();
        for (a, b) in again.values().iter().zip(star.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn plan_orders_by_distance() {
        let grid = Grid::cartesian(BallDomain::new(2, 1.0).unwrap(), 30).unwrap();
        let plan = RearrangementPlan::for_grid(&grid);
        let d: Vec<f64> = plan.order().iter().map(|&i| grid.distance(i)).collect();
        assert!(d.windows(2).all(|w| w[0] <= w[1] + 1e-15));
        assert!(RearrangementPlan::from_order(vec![0, 0, 1]).is_err());
    }
}
