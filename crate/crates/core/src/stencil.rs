//! Finite-volume stiffness forms `a0(u, v) ~ int grad u . grad v`.
//!
//! Interior faces couple neighbouring nodes with `|face| / distance`. Where a
//! neighbour lies outside the active region the Dirichlet zero is placed at
//! the actual crossing of the region boundary (found by bisection on a level
//! function), which adds `|face| / (theta h)` to the diagonal and keeps the
//! form symmetric. On radial grids the face measure `|S^{n-1}| r^{n-1}`
//! vanishes at the origin, so no condition is needed there.

use std::sync::Arc;

use crate::grid::{sphere_area, Grid};

/// Smallest admissible boundary offset, in units of the grid spacing.
const THETA_MIN: f64 = 1e-3;
const BISECTION_STEPS: usize = 60;

/// How the region boundary enters the form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trace {
    /// Homogeneous Dirichlet data on the region boundary (extension by zero).
    Zero,
    /// Interior faces only; no boundary contribution.
    Free,
}

/// Sparse symmetric stiffness matrix on the active nodes of a grid.
#[derive(Debug, Clone)]
pub struct Stiffness {
    grid: Arc<Grid>,
    dofs: Vec<usize>,
    local: Vec<Option<usize>>,
    weights: Vec<f64>,
    diag: Vec<f64>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    tridiagonal: bool,
}

impl Stiffness {
    /// Form on the whole ball.
    pub fn full(grid: &Arc<Grid>, trace: Trace) -> Self {
        let radius = grid.domain().radius();
        Self::assemble(grid, trace, move |p| radius - p[0].hypot(p[1]))
    }

    /// Form on `{level > 0}`; `level` must be non-positive outside the ball.
    pub fn assemble(grid: &Arc<Grid>, trace: Trace, level: impl Fn([f64; 2]) -> f64) -> Self {
        let n = grid.len();
        let mut local = vec![None; n];
        let mut dofs = Vec::new();
        for (i, slot) in local.iter_mut().enumerate() {
            if level(grid.point(i)) > 0.0 {
                *slot = Some(dofs.len());
                dofs.push(i);
            }
        }
        let weights = dofs.iter().map(|&i| grid.weights()[i]).collect();
        let mut diag = vec![0.0; dofs.len()];
        let mut row_ptr = Vec::with_capacity(dofs.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);

        for (k, &i) in dofs.iter().enumerate() {
            let p = grid.point(i);
            for nb in neighbours(grid, i) {
                match nb.index.and_then(|j| local[j]) {
                    Some(kj) => {
                        let c = nb.face / nb.distance;
                        diag[k] += c;
                        cols.push(kj);
                        vals.push(-c);
                    }
                    None if trace == Trace::Zero => {
                        let t = crossing(&level, p, nb.point).max(THETA_MIN);
                        let face = match grid.as_ref() {
                            Grid::Radial(g) => {
                                let r = p[0] + t * (nb.point[0] - p[0]);
                                sphere_area(g.domain().dim(), r)
                            }
                            Grid::Cartesian(_) => nb.face,
                        };
                        diag[k] += face / (t * nb.distance);
                    }
                    None => {}
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            grid: grid.clone(),
            tridiagonal: matches!(grid.as_ref(), Grid::Radial(_)),
            dofs,
            local,
            weights,
            diag,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Grid indices of the active nodes.
    pub fn dofs(&self) -> &[usize] {
        &self.dofs
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    /// Mass (quadrature) weights of the active nodes.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Radial forms couple only consecutive nodes.
    pub fn is_tridiagonal(&self) -> bool {
        self.tridiagonal
    }

    pub fn local_index(&self, grid_index: usize) -> Option<usize> {
        self.local[grid_index]
    }

    pub fn row(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[k]..self.row_ptr[k + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// `out = K u` on local vectors.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for k in 0..self.dofs.len() {
            let mut acc = self.diag[k] * u[k];
            for p in self.row_ptr[k]..self.row_ptr[k + 1] {
                acc += self.vals[p] * u[self.cols[p]];
            }
            out[k] = acc;
        }
    }

    /// `u^T K v` on local vectors.
    pub fn form(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut out = vec![0.0; u.len()];
        self.apply(v, &mut out);
        u.iter().zip(&out).map(|(a, b)| a * b).sum()
    }

    /// Restricts a full-grid vector to the active nodes.
    pub fn gather(&self, full: &[f64]) -> Vec<f64> {
        self.dofs.iter().map(|&i| full[i]).collect()
    }

    /// Extends a local vector by zero to the full grid.
    pub fn scatter(&self, local: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.grid.len()];
        for (&i, &v) in self.dofs.iter().zip(local) {
            full[i] = v;
        }
        full
    }

    /// Dirichlet energy `a0(u, u)` of a full-grid vector; values off the
    /// active set are ignored.
    pub fn energy(&self, full: &[f64]) -> f64 {
        let u = self.gather(full);
        self.form(&u, &u)
    }
}

struct Neighbour {
    index: Option<usize>,
    point: [f64; 2],
    face: f64,
    distance: f64,
}

fn neighbours(grid: &Grid, i: usize) -> Vec<Neighbour> {
    match grid {
        Grid::Radial(g) => {
            let h = g.spacing();
            let dim = g.domain().dim();
            let mut out = Vec::with_capacity(2);
            if i > 0 {
                out.push(Neighbour {
                    index: Some(i - 1),
                    point: [g.nodes()[i - 1], 0.0],
                    face: sphere_area(dim, i as f64 * h),
                    distance: h,
                });
            }
            let outer = (i + 1) as f64 * h;
            out.push(Neighbour {
                index: (i + 1 < g.len()).then_some(i + 1),
                point: [(i as f64 + 1.5) * h, 0.0],
                face: sphere_area(dim, outer),
                distance: h,
            });
            out
        }
        Grid::Cartesian(g) => {
            let h = g.spacing();
            let (c, r) = g.cell(i);
            let (c, r) = (c as isize, r as isize);
            [(c - 1, r), (c + 1, r), (c, r - 1), (c, r + 1)]
                .into_iter()
                .map(|(cc, rr)| Neighbour {
                    index: g.index_of(cc, rr),
                    point: g.lattice_center(cc, rr),
                    face: h,
                    distance: h,
                })
                .collect()
        }
    }
}

/// Fraction `t` in `(0, 1]` of the segment `p -> q` at which `level` changes
/// sign; `level(p) > 0` is assumed.
fn crossing(level: &impl Fn([f64; 2]) -> f64, p: [f64; 2], q: [f64; 2]) -> f64 {
    let at = |t: f64| [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
    if level(q) > 0.0 {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if level(at(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
