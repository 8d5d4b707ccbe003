//! Principal eigenpair of `-Laplace + b` with homogeneous Dirichlet data.
//!
//! The discrete problem is the generalized symmetric eigenproblem
//! `(K + W B) u = lambda W u` with `K` the stiffness form, `W` the diagonal
//! quadrature weights and `B = diag(b_i)`. It is solved by inverse iteration
//! with shift 0 from the all-ones vector; each step solves one SPD system,
//! by the Thomas algorithm on radial grids and by Jacobi-preconditioned
//! conjugate gradients otherwise.

use std::sync::Arc;

use crate::coefficient::CoefficientFamily;
use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, ScalarField};
use crate::shape::SharpShape;
use crate::stencil::{Stiffness, Trace};

pub const DEFAULT_TOL: f64 = 1e-8;
const MAX_OUTER: usize = 1000;
/// Minimal number of active cells for a restricted problem to be solved.
pub const MIN_SHARP_CELLS: usize = 4;

/// The assembled operator on a fixed grid.
#[derive(Debug, Clone)]
pub struct OperatorHandle {
    stiffness: Arc<Stiffness>,
    /// `b_i` per active node.
    potential: Vec<f64>,
}

impl OperatorHandle {
    /// Operator with a given potential sampled on the full grid.
    pub fn new(stiffness: Arc<Stiffness>, potential_full: &[f64]) -> Result<Self> {
        if potential_full.len() != stiffness.grid().len() {
            return Err(Error::FieldMismatch {
                expected: stiffness.grid().len(),
                got: potential_full.len(),
            });
        }
        if let Some((i, &v)) = potential_full
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
        {
            return Err(invalid("b", format!("potential {v} at index {i} must be finite and >= 0")));
        }
        let potential = stiffness.gather(potential_full);
        Ok(Self {
            stiffness,
            potential,
        })
    }

    pub fn stiffness(&self) -> &Arc<Stiffness> {
        &self.stiffness
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.stiffness.grid()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn len(&self) -> usize {
        self.stiffness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stiffness.is_empty()
    }

    /// `out = (K + W B) u` on local vectors.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        self.stiffness.apply(u, out);
        for ((o, &wi), (&bi, &ui)) in out
            .iter_mut()
            .zip(self.stiffness.weights())
            .zip(self.potential.iter().zip(u))
        {
            *o += wi * bi * ui;
        }
    }

    /// Bilinear form `a(u, v)` on local vectors.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut out = vec![0.0; v.len()];
        self.apply(v, &mut out);
        u.iter().zip(&out).map(|(a, b)| a * b).sum()
    }

    /// Pointwise action `(-Delta_h u)_i + b_i u_i` of a full-grid vector.
    pub fn apply_pointwise(&self, full: &[f64]) -> Vec<f64> {
        let u = self.stiffness.gather(full);
        let mut out = vec![0.0; u.len()];
        self.apply(&u, &mut out);
        for (o, w) in out.iter_mut().zip(self.stiffness.weights()) {
            *o /= w;
        }
        self.stiffness.scatter(&out)
    }

    /// `a(u, u) / ||u||_W^2` for a local vector.
    pub fn rayleigh_quotient(&self, u: &[f64]) -> f64 {
        self.form(u, u) / weighted_dot(self.stiffness.weights(), u, u)
    }

    fn diagonal(&self) -> Vec<f64> {
        self.stiffness
            .diag()
            .iter()
            .zip(self.stiffness.weights())
            .zip(&self.potential)
            .map(|((d, w), b)| d + w * b)
            .collect()
    }
}

/// Operator `-Laplace + b^eps(phi)` on the whole ball.
pub fn assemble(phi: &ScalarField, family: &CoefficientFamily, eps: f64) -> Result<OperatorHandle> {
    let stiffness = Arc::new(Stiffness::full(phi.grid(), Trace::Zero));
    assemble_on(stiffness, phi, family, eps)
}

/// Same as [`assemble`] with a precomputed stiffness form.
pub fn assemble_on(
    stiffness: Arc<Stiffness>,
    phi: &ScalarField,
    family: &CoefficientFamily,
    eps: f64,
) -> Result<OperatorHandle> {
    if !Arc::ptr_eq(stiffness.grid(), phi.grid()) {
        return Err(invalid("phi", "phase field lives on a different grid"));
    }
    family.beta(eps)?;
    if let Some((i, &v)) = phi
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(0.0..=1.0).contains(*v))
    {
        return Err(Error::Inadmissible(format!("value {v} at index {i} outside [0, 1]")));
    }
    let b = family.at(eps);
    let potential: Vec<f64> = phi.values().iter().map(|&s| b.value(s)).collect();
    OperatorHandle::new(stiffness, &potential)
}

/// Principal eigenvalue with its positive, `L^2`-normalized eigenfunction.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    /// Extended by zero outside the active nodes.
    pub eigenfunction: ScalarField,
    /// `||A w - lambda w||_W / lambda` with `A = W^{-1}(K + W B)`.
    pub residual: f64,
    pub iterations: usize,
}

pub fn principal_eigenpair(op: &OperatorHandle, tol: f64) -> Result<EigenPair> {
    principal_eigenpair_from(op, tol, None)
}

/// Inverse iteration started from `start` (full grid) or from all ones.
pub fn principal_eigenpair_from(
    op: &OperatorHandle,
    tol: f64,
    start: Option<&ScalarField>,
) -> Result<EigenPair> {
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(invalid("tol", format!("must lie in (0, 1e-4], got {tol}")));
    }
    if op.is_empty() {
        return Err(Error::TrivialSpace);
    }
    let weights = op.stiffness.weights();
    let n = op.len();
    let mut x = match start {
        Some(s) if s.len() == op.grid().len() => {
            let g = op.stiffness.gather(s.values());
            if g.iter().all(|v| *v > 0.0) {
                g
            } else {
                vec![1.0; n]
            }
        }
        _ => vec![1.0; n],
    };
    normalize(weights, &mut x);
    let solver = InnerSolver::new(op);
    let inner_tol = (tol * 1e-3).max(1e-15);
    let mut lambda = op.rayleigh_quotient(&x);
    let mut residual = f64::INFINITY;
    let mut rhs = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut iterations = 0;
    while iterations < MAX_OUTER {
        iterations += 1;
        for ((r, w), xi) in rhs.iter_mut().zip(weights).zip(&x) {
            *r = w * xi;
        }
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi = xi / lambda;
        }
        solver.solve(op, &rhs, &mut y, inner_tol);
        x.copy_from_slice(&y);
        normalize(weights, &mut x);
        lambda = op.rayleigh_quotient(&x);
        residual = eigen_residual(op, &x, lambda);
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(Error::NoConvergence {
            iterations,
            residual,
        });
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    if x.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::SignIndefinite);
    }
    let eigenfunction = ScalarField::new(op.grid().clone(), op.stiffness.scatter(&x))?;
    Ok(EigenPair {
        lambda,
        eigenfunction,
        residual,
        iterations,
    })
}

/// Principal Dirichlet eigenvalue of the Laplacian on `shape ∩ Omega`:
/// unknowns outside the shape are removed and the zero boundary value is
/// placed on the shape boundary.
pub fn sharp_eigenvalue(grid: &Arc<Grid>, shape: &SharpShape, tol: f64) -> Result<EigenPair> {
    let domain = *grid.domain();
    shape.validate(&domain)?;
    if matches!(grid.as_ref(), Grid::Radial(_)) && !shape.is_radial() {
        return Err(Error::Unsupported(format!(
            "{shape} is not radially symmetric and cannot be resolved on a radial grid"
        )));
    }
    let radius = domain.radius();
    let stiffness = Stiffness::assemble(grid, Trace::Zero, |p| {
        (radius - p[0].hypot(p[1])).min(shape.signed_distance(p))
    });
    if stiffness.len() < MIN_SHARP_CELLS {
        return Err(Error::TrivialSpace);
    }
    let zeros = vec![0.0; grid.len()];
    let op = OperatorHandle::new(Arc::new(stiffness), &zeros)?;
    principal_eigenpair(&op, tol)
}

fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

fn normalize(w: &[f64], x: &mut [f64]) {
    let norm = weighted_dot(w, x, x).sqrt();
    x.iter_mut().for_each(|v| *v /= norm);
}

fn eigen_residual(op: &OperatorHandle, x: &[f64], lambda: f64) -> f64 {
    let mut ax = vec![0.0; x.len()];
    op.apply(x, &mut ax);
    let w = op.stiffness.weights();
    let sq: f64 = ax
        .iter()
        .zip(x)
        .zip(w)
        .map(|((a, xi), wi)| {
            let r = a - lambda * wi * xi;
            r * r / wi
        })
        .sum();
    sq.sqrt() / lambda
}

enum InnerSolver {
    Thomas { lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64> },
    Cg { inv_diag: Vec<f64> },
}

impl InnerSolver {
    fn new(op: &OperatorHandle) -> Self {
        let diag = op.diagonal();
        if op.stiffness.is_tridiagonal() {
            let n = diag.len();
            let mut lower = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for (k, (l, u)) in lower.iter_mut().zip(upper.iter_mut()).enumerate() {
                for (col, val) in op.stiffness.row(k) {
                    if col + 1 == k {
                        *l = val;
                    } else if col == k + 1 {
                        *u = val;
                    }
                }
            }
            InnerSolver::Thomas { lower, diag, upper }
        } else {
            InnerSolver::Cg {
                inv_diag: diag.iter().map(|d| 1.0 / d).collect(),
            }
        }
    }

    fn solve(&self, op: &OperatorHandle, rhs: &[f64], x: &mut [f64], tol: f64) {
        match self {
            InnerSolver::Thomas { lower, diag, upper } => thomas(lower, diag, upper, rhs, x),
            InnerSolver::Cg { inv_diag } => {
                pcg(|u, out| op.apply(u, out), inv_diag, rhs, x, tol, 20 * rhs.len() + 100);
            }
        }
    }
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], x: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for k in 1..n {
        let m = diag[k] - lower[k] * c[k - 1];
        c[k] = upper[k] / m;
        d[k] = (rhs[k] - lower[k] * d[k - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for k in (0..n - 1).rev() {
        x[k] = d[k] - c[k] * x[k + 1];
    }
}

/// Jacobi-preconditioned conjugate gradients; `x` holds the initial guess.
/// Returns the iteration count and final relative residual.
pub(crate) fn pcg(
    apply: impl Fn(&[f64], &mut [f64]),
    inv_diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> (usize, f64) {
    let n = b.len();
    let dot = |a: &[f64], c: &[f64]| a.iter().zip(c).map(|(p, q)| p * q).sum::<f64>();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return (0, 0.0);
    }
    let mut r = vec![0.0; n];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    let mut it = 0;
    while rel > rel_tol && it < max_iter {
        it += 1;
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for k in 0..n {
            x[k] += alpha * p[k];
            r[k] -= alpha * ap[k];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        for k in 0..n {
            z[k] = r[k] * inv_diag[k];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for k in 0..n {
            p[k] = z[k] + beta * p[k];
        }
    }
    (it, rel)
}
