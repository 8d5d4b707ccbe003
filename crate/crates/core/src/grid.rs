//! Ball domains, their radial and Cartesian discretizations, and the scalar
//! and phase fields that live on them.
//!
//! Nodes are cell-centred: no node sits at the origin or on the boundary
//! sphere. The homogeneous Dirichlet condition is imposed through implicit
//! zeros outside the last node layer (see [`crate::stencil`]).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Absolute tolerance on the weighted mean of an admissible phase field.
pub const MASS_TOL: f64 = 1e-10;

/// The design domain `B_R(0)` in two or three dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallDomain {
    dim: usize,
    radius: f64,
}

impl BallDomain {
    pub fn new(dim: usize, radius: f64) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(invalid("n", format!("dimension must be 2 or 3, got {dim}")));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("R", format!("radius must be positive, got {radius}")));
        }
        Ok(Self { dim, radius })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.dim, self.radius)
    }

    pub fn boundary_measure(&self) -> f64 {
        sphere_area(self.dim, self.radius)
    }
}

/// Lebesgue measure of a ball of radius `r` in dimension 2 or 3.
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        2 => PI * r * r,
        _ => 4.0 / 3.0 * PI * r * r * r,
    }
}

/// Surface measure of the sphere of radius `r` (circumference for `dim = 2`).
pub fn sphere_area(dim: usize, r: f64) -> f64 {
    match dim {
        2 => 2.0 * PI * r,
        _ => 4.0 * PI * r * r,
    }
}

/// Radial discretization with nodes `r_i = (i + 1/2) h`, `h = R / N`, and
/// exact annular shell volumes as weights.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    domain: BallDomain,
    h: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    pub const MIN_NODES: usize = 8;

    pub fn new(domain: BallDomain, node_count: usize) -> Result<Self> {
        if node_count < Self::MIN_NODES {
            return Err(Error::GridTooCoarse(format!(
                "radial grid needs at least {} nodes, got {node_count}",
                Self::MIN_NODES
            )));
        }
        let h = domain.radius() / node_count as f64;
        let nodes = (0..node_count).map(|i| (i as f64 + 0.5) * h).collect();
        let weights = (0..node_count)
            .map(|i| {
                let (a, b) = (i as f64, (i + 1) as f64);
                match domain.dim() {
                    // midpoint rule for r dr is exact on each shell
                    2 => 2.0 * PI * (a + 0.5) * h * h,
                    _ => 4.0 / 3.0 * PI * (b * b * b - a * a * a) * h * h * h,
                }
            })
            .collect();
        Ok(Self {
            domain,
            h,
            nodes,
            weights,
        })
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Uniform `M x M` cell grid on `[-R, R]^2`; only cells whose centres lie in
/// the open disk are degrees of freedom.
#[derive(Debug, Clone)]
pub struct CartesianGrid {
    domain: BallDomain,
    cells_per_axis: usize,
    h: f64,
    /// (column, row) of every masked cell, in row-major order.
    cells: Vec<(usize, usize)>,
    lookup: Vec<Option<usize>>,
    weights: Vec<f64>,
    boundary_layer: Vec<bool>,
}

impl CartesianGrid {
    pub const MIN_CELLS: usize = 16;

    pub fn new(domain: BallDomain, cells_per_axis: usize) -> Result<Self> {
        if domain.dim() != 2 {
            return Err(Error::Unsupported(
                "Cartesian grids are only available in two dimensions".into(),
            ));
        }
        if cells_per_axis < Self::MIN_CELLS {
            return Err(Error::GridTooCoarse(format!(
                "Cartesian grid needs at least {} cells per axis, got {cells_per_axis}",
                Self::MIN_CELLS
            )));
        }
        let m = cells_per_axis;
        let h = 2.0 * domain.radius() / m as f64;
        let r2 = domain.radius() * domain.radius();
        let mut cells = Vec::new();
        let mut lookup = vec![None; m * m];
        for row in 0..m {
            for col in 0..m {
                let [x, y] = Self::center_of(m, h, col as isize, row as isize);
                if x * x + y * y < r2 {
                    lookup[row * m + col] = Some(cells.len());
                    cells.push((col, row));
                }
            }
        }
        let inside = |c: isize, r: isize| -> bool {
            c >= 0
                && r >= 0
                && (c as usize) < m
                && (r as usize) < m
                && lookup[r as usize * m + c as usize].is_some()
        };
        let boundary_layer = cells
            .iter()
            .map(|&(c, r)| {
                let (c, r) = (c as isize, r as isize);
                !(inside(c - 1, r) && inside(c + 1, r) && inside(c, r - 1) && inside(c, r + 1))
            })
            .collect();
        let weights = vec![h * h; cells.len()];
        Ok(Self {
            domain,
            cells_per_axis: m,
            h,
            cells,
            lookup,
            weights,
            boundary_layer,
        })
    }

    // Half-integer offsets keep the mask exactly symmetric.
    fn center_of(m: usize, h: f64, col: isize, row: isize) -> [f64; 2] {
        let half = m as f64 / 2.0;
        [
            (col as f64 + 0.5 - half) * h,
            (row as f64 + 0.5 - half) * h,
        ]
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cell(&self, index: usize) -> (usize, usize) {
        self.cells[index]
    }

    /// Index of the masked cell at `(col, row)`, if any.
    pub fn index_of(&self, col: isize, row: isize) -> Option<usize> {
        let m = self.cells_per_axis as isize;
        if col < 0 || row < 0 || col >= m || row >= m {
            return None;
        }
        self.lookup[(row * m + col) as usize]
    }

    pub fn center(&self, index: usize) -> [f64; 2] {
        let (c, r) = self.cells[index];
        Self::center_of(self.cells_per_axis, self.h, c as isize, r as isize)
    }

    /// Centre of an arbitrary lattice position, masked or not.
    pub fn lattice_center(&self, col: isize, row: isize) -> [f64; 2] {
        Self::center_of(self.cells_per_axis, self.h, col, row)
    }

    /// Squared distance from the origin in units of `(h/2)^2`; an exact
    /// integer, used for tie detection.
    pub fn doubled_distance_sq(&self, index: usize) -> u64 {
        let (c, r) = self.cells[index];
        let m = self.cells_per_axis as i64;
        let dx = 2 * c as i64 + 1 - m;
        let dy = 2 * r as i64 + 1 - m;
        (dx * dx + dy * dy) as u64
    }

    pub fn is_boundary_layer(&self, index: usize) -> bool {
        self.boundary_layer[index]
    }
}

/// Either discretization; fields hold it behind an `Arc`.
#[derive(Debug, Clone)]
pub enum Grid {
    Radial(RadialGrid),
    Cartesian(CartesianGrid),
}

impl Grid {
    pub fn radial(domain: BallDomain, node_count: usize) -> Result<Arc<Self>> {
        Ok(Arc::new(Grid::Radial(RadialGrid::new(domain, node_count)?)))
    }

    pub fn cartesian(domain: BallDomain, cells_per_axis: usize) -> Result<Arc<Self>> {
        Ok(Arc::new(Grid::Cartesian(CartesianGrid::new(
            domain,
            cells_per_axis,
        )?)))
    }

    pub fn domain(&self) -> &BallDomain {
        match self {
            Grid::Radial(g) => g.domain(),
            Grid::Cartesian(g) => g.domain(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Radial(g) => g.len(),
            Grid::Cartesian(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            Grid::Radial(g) => g.weights(),
            Grid::Cartesian(g) => g.weights(),
        }
    }

    pub fn spacing(&self) -> f64 {
        match self {
            Grid::Radial(g) => g.spacing(),
            Grid::Cartesian(g) => g.spacing(),
        }
    }

    pub fn has_equal_weights(&self) -> bool {
        matches!(self, Grid::Cartesian(_))
    }

    /// Distance of node/cell `i` from the origin.
    pub fn distance(&self, i: usize) -> f64 {
        match self {
            Grid::Radial(g) => g.nodes()[i],
            Grid::Cartesian(g) => {
                let [x, y] = g.center(i);
                x.hypot(y)
            }
        }
    }

    /// Representative point of node/cell `i`. Radial nodes are placed on the
    /// positive first axis.
    pub fn point(&self, i: usize) -> [f64; 2] {
        match self {
            Grid::Radial(g) => [g.nodes()[i], 0.0],
            Grid::Cartesian(g) => g.center(i),
        }
    }

    pub fn is_boundary_layer(&self, i: usize) -> bool {
        match self {
            Grid::Radial(g) => i + 1 == g.len(),
            Grid::Cartesian(g) => g.is_boundary_layer(i),
        }
    }

    pub fn boundary_layer(&self) -> Vec<bool> {
        (0..self.len()).map(|i| self.is_boundary_layer(i)).collect()
    }
}

/// Real values attached to every node or cell of a grid.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::FieldMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Result<Self> {
        let n = grid.len();
        Self::new(grid, vec![value; n])
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// New field on the same grid.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid)
    }

    /// `(1/|Omega|) sum_i w_i f_i`.
    pub fn weighted_mean(&self) -> f64 {
        weighted_sum(self.grid.weights(), &self.values) / self.grid.domain().volume()
    }

    /// Weighted L1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.grid
            .weights()
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.abs())
            .sum()
    }

    /// Measure of `{delta <= f <= 1 - delta}`.
    pub fn interface_measure(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta < 0.5) {
            return Err(invalid("delta", format!("must lie in (0, 1/2), got {delta}")));
        }
        Ok(self
            .grid
            .weights()
            .iter()
            .zip(&self.values)
            .filter(|(_, &v)| v >= delta && v <= 1.0 - delta)
            .map(|(w, _)| w)
            .sum())
    }

    /// CSV with header `index,r,value` (radial) or `index,x,y,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        match self.grid.as_ref() {
            Grid::Radial(g) => {
                out.push_str("index,r,value\n");
                for (i, v) in self.values.iter().enumerate() {
                    let _ = writeln!(out, "{i},{},{v}", g.nodes()[i]);
                }
            }
            Grid::Cartesian(g) => {
                out.push_str("index,x,y,value\n");
                for (i, v) in self.values.iter().enumerate() {
                    let [x, y] = g.center(i);
                    let _ = writeln!(out, "{i},{x},{y},{v}");
                }
            }
        }
        out
    }

    /// Parses the output of [`ScalarField::to_csv`] back onto `grid`.
    pub fn from_csv(grid: Arc<Grid>, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().unwrap_or_default();
        let columns = header.split(',').count();
        let mut values = vec![f64::NAN; grid.len()];
        for (lineno, line) in lines.enumerate() {
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            if parts.len() != columns {
                return Err(invalid("csv", format!("line {}: wrong column count", lineno + 2)));
            }
            let index: usize = parts[0]
                .parse()
                .map_err(|_| invalid("csv", format!("line {}: bad index", lineno + 2)))?;
            let value: f64 = parts[columns - 1]
                .parse()
                .map_err(|_| invalid("csv", format!("line {}: bad value", lineno + 2)))?;
            if index >= values.len() {
                return Err(Error::FieldMismatch {
                    expected: grid.len(),
                    got: index + 1,
                });
            }
            values[index] = value;
        }
        Self::new(grid, values)
    }
}

pub(crate) fn weighted_sum(weights: &[f64], values: &[f64]) -> f64 {
    weights.iter().zip(values).map(|(w, v)| w * v).sum()
}

/// An element of the admissible set: values in `[0, 1]`, prescribed weighted
/// mean, zero on the outermost node layer.
#[derive(Debug, Clone)]
pub struct PhaseField {
    field: ScalarField,
    mass: f64,
}

impl PhaseField {
    pub fn new(field: ScalarField, mass: f64) -> Result<Self> {
        if !(mass > 0.0 && mass < 1.0) {
            return Err(invalid("m", format!("mass must lie in (0, 1), got {mass}")));
        }
        if let Some((i, v)) = field
            .values()
            .iter()
            .enumerate()
            .find(|(_, &v)| !(0.0..=1.0).contains(&v))
        {
            return Err(Error::Inadmissible(format!(
                "value {v} at index {i} outside [0, 1]"
            )));
        }
        let grid = field.grid().clone();
        if let Some(i) = (0..grid.len()).find(|&i| grid.is_boundary_layer(i) && field.values()[i] != 0.0)
        {
            return Err(Error::Inadmissible(format!(
                "boundary layer value {} at index {i} is not zero",
                field.values()[i]
            )));
        }
        let mean = field.weighted_mean();
        if (mean - mass).abs() > MASS_TOL {
            return Err(Error::Inadmissible(format!(
                "weighted mean {mean} differs from mass {mass}"
            )));
        }
        Ok(Self { field, mass })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn values(&self) -> &[f64] {
        self.field.values()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.field.grid()
    }

    pub fn into_field(self) -> ScalarField {
        self.field
    }
}

impl AsRef<ScalarField> for PhaseField {
    fn as_ref(&self) -> &ScalarField {
        &self.field
    }
}

impl AsRef<ScalarField> for ScalarField {
    fn as_ref(&self) -> &ScalarField {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk() -> BallDomain {
        BallDomain::new(2, 1.0).unwrap()
    }

    #[test]
    fn ball_measures() {
        let d3 = BallDomain::new(3, 2.0).unwrap();
        assert!((d3.volume() - 32.0 / 3.0 * PI).abs() < 1e-12);
        assert!((d3.boundary_measure() - 16.0 * PI).abs() < 1e-12);
        assert!((disk().boundary_measure() - 2.0 * PI).abs() < 1e-15);
        assert!(BallDomain::new(4, 1.0).is_err());
        assert!(BallDomain::new(2, 0.0).is_err());
    }

    #[test]
    fn radial_grid_rejects_coarse() {
        assert!(matches!(
            RadialGrid::new(disk(), 4),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn radial_weights_sum_to_volume() {
        for dim in [2, 3] {
            let d = BallDomain::new(dim, 1.0).unwrap();
            let g = RadialGrid::new(d, 100).unwrap();
            let s: f64 = g.weights().iter().sum();
            assert!((s - d.volume()).abs() / d.volume() < 1e-12, "dim {dim}: {s}");
            assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!(g.nodes().iter().all(|&r| r > 0.0 && r < 1.0));
        }
    }

    #[test]
    fn cartesian_area_converges() {
        for m in [16, 32, 64, 128] {
            let g = CartesianGrid::new(disk(), m).unwrap();
            let area: f64 = g.weights().iter().sum();
            let rel = (area - PI).abs() / PI;
            assert!(rel <= 4.0 * g.spacing(), "M={m}: rel {rel}");
        }
    }

    #[test]
    fn cartesian_mask_dihedral_symmetry() {
        let g = CartesianGrid::new(disk(), 37).unwrap();
        let m = 37isize;
        for i in 0..g.len() {
            let (c, r) = g.cell(i);
            let (c, r) = (c as isize, r as isize);
            let images = [
                (m - 1 - c, r),
                (c, m - 1 - r),
                (m - 1 - c, m - 1 - r),
                (r, c),
                (m - 1 - r, c),
                (r, m - 1 - c),
                (m - 1 - r, m - 1 - c),
            ];
            for (ci, ri) in images {
                assert!(g.index_of(ci, ri).is_some());
            }
        }
    }

    #[test]
    fn weighted_mean_examples() {
        let grid = Grid::radial(disk(), 400).unwrap();
        let c = ScalarField::constant(grid.clone(), 0.37).unwrap();
        assert!((c.weighted_mean() - 0.37).abs() < 1e-14);
        let quarter = ScalarField::from_fn(grid.clone(), |p| (p[0] < 0.5) as u8 as f64).unwrap();
        assert!((quarter.weighted_mean() - 0.25).abs() < 2.0 / 400.0);
        let m: f64 = 0.3;
        let f = ScalarField::from_fn(grid, |p| (p[0] < m.sqrt()) as u8 as f64).unwrap();
        assert!((f.weighted_mean() - m).abs() < 2.0 / 400.0);
    }

    #[test]
    fn interface_measure_examples() {
        let grid = Grid::cartesian(disk(), 32).unwrap();
        let sharp = ScalarField::from_fn(grid.clone(), |p| (p[0] > 0.0) as u8 as f64).unwrap();
        assert_eq!(sharp.interface_measure(0.1).unwrap(), 0.0);
        let half = ScalarField::constant(grid.clone(), 0.5).unwrap();
        let total: f64 = grid.weights().iter().sum();
        assert_eq!(half.interface_measure(0.1).unwrap(), total);
        assert!(half.interface_measure(0.5).is_err());
        assert!(half.interface_measure(0.0).is_err());
    }

    #[test]
    fn phase_field_invariants() {
        let grid = Grid::radial(disk(), 64).unwrap();
        // boundary layer not zero
        let ones = ScalarField::constant(grid.clone(), 1.0).unwrap();
        assert!(PhaseField::new(ones, 0.5).is_err());
        // out of box
        let mut v = vec![0.0; 64];
        v[0] = 1.5;
        let f = ScalarField::new(grid.clone(), v).unwrap();
        assert!(PhaseField::new(f.clone(), f.weighted_mean()).is_err());
        // admissible
        let f = ScalarField::from_fn(grid.clone(), |p| (p[0] < 0.5) as u8 as f64).unwrap();
        let m = f.weighted_mean();
        assert!(PhaseField::new(f.clone(), m).is_ok());
        assert!(PhaseField::new(f, m + 1e-6).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let grid = Grid::cartesian(disk(), 16).unwrap();
        let f = ScalarField::from_fn(grid.clone(), |p| p[0] * p[0] + 0.1 * p[1]).unwrap();
        let back = ScalarField::from_csv(grid, &f.to_csv()).unwrap();
        assert_eq!(f.values(), back.values());
        assert!(f.to_csv().starts_with("index,x,y,value\n"));
    }
}
