//! The diffuse functional `J(phi) = lambda_1(phi) + gamma E(phi)` with the
//! Ginzburg–Landau energy `E(phi) = int eps/2 |grad phi|^2 + psi(phi)/eps`,
//! its first variation, and the sharp-interface functional
//! `lambda_1(E) + gamma c0 (P(E) + contact)`.

use std::sync::Arc;

use serde::Serialize;

use crate::coefficient::CoefficientFamily;
use crate::eigen::{assemble_on, principal_eigenpair_from, sharp_eigenvalue, EigenPair};
use crate::error::{invalid, Error, Result};
use crate::grid::{sphere_area, weighted_sum, Grid, ScalarField};
use crate::potential::Potential;
use crate::shape::SharpShape;
use crate::stencil::{Stiffness, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyBreakdown {
    pub gradient: f64,
    pub potential: f64,
    /// `gradient + potential`.
    pub total: f64,
    /// `None` when only the energy was evaluated.
    pub lambda1: Option<f64>,
    pub j: Option<f64>,
}

/// Evaluates the diffuse functional for fixed `eps`, `gamma` on one grid,
/// reusing the stiffness form across calls.
#[derive(Debug, Clone)]
pub struct Objective {
    pub eps: f64,
    pub gamma: f64,
    pub potential: Potential,
    pub family: CoefficientFamily,
    pub tol: f64,
    stiffness: Arc<Stiffness>,
}

/// One evaluation of the functional together with the eigenpair behind it.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub breakdown: EnergyBreakdown,
    pub eigenpair: EigenPair,
}

impl Evaluation {
    pub fn j(&self) -> f64 {
        self.breakdown.j.unwrap_or(f64::NAN)
    }
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be positive, got {v}")))
    }
}

impl Objective {
    pub fn new(
        grid: &Arc<Grid>,
        eps: f64,
        gamma: f64,
        potential: Potential,
        family: CoefficientFamily,
        tol: f64,
    ) -> Result<Self> {
        check_positive("eps", eps)?;
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid("gamma", format!("must be non-negative, got {gamma}")));
        }
        if family.dim() != grid.domain().dim() {
            return Err(invalid("n", "coefficient family and grid disagree on the dimension"));
        }
        Ok(Self {
            eps,
            gamma,
            potential,
            family,
            tol,
            stiffness: Arc::new(Stiffness::full(grid, Trace::Zero)),
        })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.stiffness.grid()
    }

    pub fn stiffness(&self) -> &Arc<Stiffness> {
        &self.stiffness
    }

    fn check_grid(&self, phi: &ScalarField) -> Result<()> {
        if Arc::ptr_eq(phi.grid(), self.grid()) {
            Ok(())
        } else {
            Err(invalid("phi", "field lives on a different grid"))
        }
    }

    pub fn energy(&self, phi: &ScalarField) -> Result<EnergyBreakdown> {
        self.check_grid(phi)?;
        check_box(phi)?;
        let gradient = 0.5 * self.eps * self.stiffness.energy(phi.values());
        let psi: Vec<f64> = phi.values().iter().map(|&s| self.potential.psi_unchecked(s)).collect();
        let potential = weighted_sum(phi.grid().weights(), &psi) / self.eps;
        Ok(EnergyBreakdown {
            gradient,
            potential,
            total: gradient + potential,
            lambda1: None,
            j: None,
        })
    }

    pub fn eigenpair(&self, phi: &ScalarField, start: Option<&ScalarField>) -> Result<EigenPair> {
        self.check_grid(phi)?;
        let op = assemble_on(self.stiffness.clone(), phi, &self.family, self.eps)?;
        principal_eigenpair_from(&op, self.tol, start)
    }

    /// Full evaluation; `start` warm-starts the eigensolver.
    pub fn evaluate(&self, phi: &ScalarField, start: Option<&ScalarField>) -> Result<Evaluation> {
        let mut breakdown = self.energy(phi)?;
        let eigenpair = self.eigenpair(phi, start)?;
        breakdown.lambda1 = Some(eigenpair.lambda);
        breakdown.j = Some(eigenpair.lambda + self.gamma * breakdown.total);
        Ok(Evaluation {
            breakdown,
            eigenpair,
        })
    }

    /// `L^2_W` gradient `b'(phi) w^2 + gamma (eps (-Delta_h phi) + psi'(phi) / eps)`.
    pub fn first_variation(&self, phi: &ScalarField, eigenpair: &EigenPair) -> Result<ScalarField> {
        self.check_grid(phi)?;
        check_box(phi)?;
        let b = self.family.at(self.eps);
        let local = self.stiffness.gather(phi.values());
        let mut k_phi = vec![0.0; local.len()];
        self.stiffness.apply(&local, &mut k_phi);
        for (v, w) in k_phi.iter_mut().zip(self.stiffness.weights()) {
            *v /= w;
        }
        let laplace = self.stiffness.scatter(&k_phi);
        let g = phi
            .values()
            .iter()
            .zip(eigenpair.eigenfunction.values())
            .zip(&laplace)
            .map(|((&s, &w), &lap)| {
                b.derivative(s) * w * w
                    + self.gamma * (self.eps * lap + self.potential.dpsi_unchecked(s) / self.eps)
            })
            .collect();
        phi.with_values(g)
    }
}

fn check_box(phi: &ScalarField) -> Result<()> {
    match phi.values().iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::Inadmissible(format!(
            "value {} at index {i} outside [0, 1]",
            phi.values()[i]
        ))),
        None => Ok(()),
    }
}

pub fn gl_energy(phi: &impl AsRef<ScalarField>, eps: f64, psi: &Potential) -> Result<EnergyBreakdown> {
    let phi = phi.as_ref();
    let family = CoefficientFamily::default_for(phi.grid().domain().dim(), phi.grid().domain().radius())?;
    Objective::new(phi.grid(), eps, 0.0, psi.clone(), family, crate::eigen::DEFAULT_TOL)?.energy(phi)
}

pub fn j_eps(
    phi: &impl AsRef<ScalarField>,
    eps: f64,
    gamma: f64,
    psi: &Potential,
    family: &CoefficientFamily,
) -> Result<EnergyBreakdown> {
    let phi = phi.as_ref();
    let objective = Objective::new(phi.grid(), eps, gamma, psi.clone(), *family, crate::eigen::DEFAULT_TOL)?;
    Ok(objective.evaluate(phi, None)?.breakdown)
}

pub fn first_variation(
    phi: &impl AsRef<ScalarField>,
    eps: f64,
    gamma: f64,
    psi: &Potential,
    family: &CoefficientFamily,
    eigenpair: &EigenPair,
) -> Result<ScalarField> {
    let phi = phi.as_ref();
    let objective = Objective::new(phi.grid(), eps, gamma, psi.clone(), *family, crate::eigen::DEFAULT_TOL)?;
    objective.first_variation(phi, eigenpair)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpBreakdown {
    /// Infinite when the shape leaves no active cells.
    pub lambda1: f64,
    pub perimeter: f64,
    pub contact: f64,
    pub c0: f64,
    /// `c0 (perimeter + contact)`.
    pub interface: f64,
    pub j: f64,
}

pub fn j_zero(shape: &SharpShape, grid: &Arc<Grid>, gamma: f64, psi: &Potential, tol: f64) -> Result<SharpBreakdown> {
    let domain = grid.domain();
    shape.validate(domain)?;
    let lambda1 = match sharp_eigenvalue(grid, shape, tol) {
        Ok(pair) => pair.lambda,
        Err(Error::TrivialSpace) => f64::INFINITY,
        Err(e) => return Err(e),
    };
    let perimeter = shape.relative_perimeter(domain);
    let contact = shape.boundary_contact(domain);
    let interface = psi.c0() * (perimeter + contact);
    Ok(SharpBreakdown {
        lambda1,
        perimeter,
        contact,
        c0: psi.c0(),
        interface,
        j: lambda1 + gamma * interface,
    })
}

/// Discrete total variation `int |grad Psi(phi)|` with `Psi' = sqrt(2 psi)`,
/// which bounds the energy from below.
pub fn modica_mortola_bound(phi: &impl AsRef<ScalarField>, psi: &Potential) -> f64 {
    let phi = phi.as_ref();
    const TABLE: usize = 1024;
    let table: Vec<f64> = (0..=TABLE)
        .map(|k| psi.big_psi(k as f64 / TABLE as f64).unwrap_or(0.0))
        .collect();
    let big = |s: f64| {
        let x = s.clamp(0.0, 1.0) * TABLE as f64;
        let k = (x.floor() as usize).min(TABLE - 1);
        table[k] + (x - k as f64) * (table[k + 1] - table[k])
    };
    let v: Vec<f64> = phi.values().iter().map(|&s| big(s)).collect();
    match phi.grid().as_ref() {
        Grid::Radial(g) => {
            let h = g.spacing();
            let dim = g.domain().dim();
            // the last node sits half a cell inside the boundary, where Psi = 0
            (0..v.len())
                .map(|i| {
                    let next = v.get(i + 1).copied().unwrap_or(0.0);
                    let face = if i + 1 < v.len() { (i + 1) as f64 * h } else { g.domain().radius() };
                    let dist = if i + 1 < v.len() { h } else { 0.5 * h };
                    sphere_area(dim, face) * (next - v[i]).abs() * h / dist
                })
                .sum()
        }
        Grid::Cartesian(g) => {
            let h = g.spacing();
            (0..v.len())
                .map(|i| {
                    let (c, r) = g.cell(i);
                    let at = |dc: isize, dr: isize| {
                        g.index_of(c as isize + dc, r as isize + dr).map_or(0.0, |j| v[j])
                    };
                    let dx = at(1, 0) - v[i];
                    let dy = at(0, 1) - v[i];
                    dx.hypot(dy) * h
                })
                .sum()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BallDomain;

    fn grid() -> Arc<Grid> {
        Grid::cartesian(BallDomain::new(2, 1.0).unwrap(), 32).unwrap()
    }

    #[test]
    fn constant_field_has_only_potential_energy() {
        let g = grid();
        let psi = Potential::double_well();
        let phi = ScalarField::from_fn(g.clone(), |_| 0.3)
            .unwrap()
            .with_values(
                (0..g.len())
                    .map(|i| if g.is_boundary_layer(i) { 0.0 } else { 0.3 })
                    .collect(),
            )
            .unwrap();
        let e = gl_energy(&phi, 0.1, &psi).unwrap();
        let interior: f64 = (0..g.len())
            .filter(|&i| !g.is_boundary_layer(i))
            .map(|i| g.weights()[i])
            .sum();
        assert!((e.potential - interior * psi.psi(0.3).unwrap() / 0.1).abs() < 1e-12);
        assert!(e.gradient > 0.0);
        assert_eq!(e.total, e.gradient + e.potential);
    }

    #[test]
    fn indicator_has_no_potential_energy() {
        let g = grid();
        let phi = ScalarField::from_fn(g, |p| (p[0].hypot(p[1]) < 0.5) as u8 as f64).unwrap();
        for psi in [Potential::double_well(), Potential::double_obstacle()] {
            assert_eq!(gl_energy(&phi, 0.05, &psi).unwrap().potential, 0.0);
        }
    }

    #[test]
    fn zero_gamma_gives_eigenvalue() {
        let g = grid();
        let phi = ScalarField::from_fn(g.clone(), |p| (0.8 - p[0].hypot(p[1])).clamp(0.0, 1.0)).unwrap();
        let family = CoefficientFamily::default_for(2, 1.0).unwrap();
        let psi = Potential::double_obstacle();
        let out = j_eps(&phi, 0.05, 0.0, &psi, &family).unwrap();
        assert_eq!(out.j, out.lambda1);
        let one = j_eps(&phi, 0.05, 0.1, &psi, &family).unwrap();
        let two = j_eps(&phi, 0.05, 0.2, &psi, &family).unwrap();
        assert!((two.j.unwrap() - one.j.unwrap() - 0.1 * one.total).abs() < 1e-9);
    }

    #[test]
    fn pointwise_variation_without_gamma() {
        let g = grid();
        let phi = ScalarField::from_fn(g.clone(), |p| (0.8 - p[0].hypot(p[1])).clamp(0.0, 1.0)).unwrap();
        let family = CoefficientFamily::default_for(2, 1.0).unwrap();
        let obj = Objective::new(&g, 0.05, 0.0, Potential::double_obstacle(), family, 1e-9).unwrap();
        let pair = obj.eigenpair(&phi, None).unwrap();
        let grad = obj.first_variation(&phi, &pair).unwrap();
        let b = family.at(0.05);
        for i in 0..g.len() {
            let w = pair.eigenfunction.values()[i];
            assert_eq!(grad.values()[i], b.derivative(phi.values()[i]) * w * w);
            assert!(grad.values()[i] < 0.0);
        }
    }

    #[test]
    fn sharp_contact_terms() {
        let g = Grid::radial(BallDomain::new(2, 1.0).unwrap(), 400).unwrap();
        let psi = Potential::double_obstacle();
        let inner = j_zero(&SharpShape::Ball { r: 0.5 }, &g, 1.0, &psi, 1e-9).unwrap();
        assert_eq!(inner.contact, 0.0);
        let ring = SharpShape::Annulus { r_in: 0.5, r_out: 1.0 };
        let outer = j_zero(&ring, &g, 1.0, &psi, 1e-9).unwrap();
        assert!((outer.contact - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((outer.perimeter - std::f64::consts::PI).abs() < 1e-12);
    }
}
