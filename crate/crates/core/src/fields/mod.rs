//! Uniform tensor-product grids, nodal fields, finite-difference operators
//! and region quadrature.
//!
//! Nodes are stored with axis 0 varying fastest. A zero-flux grid places
//! nodes on both faces of the box (`h = extent / (points − 1)`) and imposes
//! the Neumann condition through mirrored ghost nodes; a periodic grid has
//! `h = extent / points` and wraps.

pub(crate) mod quadrature;

pub use quadrature::{
    boundary_profile, cumulative_ball_profile, whole_sum, cumulative_ball_profiles, integrate, line_sample,
    plane_disk_profiles, Ball, LineSample,
};

use crate::error::{Error, Result};
use crate::exec;

/// Boundary treatment of a [`Grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    Periodic,
    ZeroFlux,
}

impl Boundary {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::ZeroFlux => "zero-flux",
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "periodic" => Ok(Boundary::Periodic),
            "zero-flux" | "zeroflux" | "neumann" => Ok(Boundary::ZeroFlux),
            other => Err(Error::arg(format!("unknown boundary `{other}`"))),
        }
    }
}

/// Isotropic uniform grid on a box in ℝ^dim, dim ∈ {1, 2, 3}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    points: [usize; 3],
    lower: [f64; 3],
    extent: [f64; 3],
    h: f64,
    boundary: Boundary,
}

impl Grid {
    /// Grid on the box `[lower, upper]` with `points[a]` nodes along axis `a`.
    pub fn new(lower: &[f64], upper: &[f64], points: &[usize], boundary: Boundary) -> Result<Self> {
        let dim = lower.len();
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if upper.len() != dim || points.len() != dim {
            return Err(Error::InvalidGrid(
                "lower, upper and points must have the same length".into(),
            ));
        }
        let mut g = Grid {
            dim,
            points: [1; 3],
            lower: [0.0; 3],
            extent: [0.0; 3],
            h: 0.0,
            boundary,
        };
        let mut spacing = [0.0; 3];
        for a in 0..dim {
            if points[a] < 8 {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} has {} points, need at least 8",
                    points[a]
                )));
            }
            let extent = upper[a] - lower[a];
            if !(extent > 0.0 && extent.is_finite() && lower[a].is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {a} has empty or non-finite extent")));
            }
            g.points[a] = points[a];
            g.lower[a] = lower[a];
            g.extent[a] = extent;
            spacing[a] = match boundary {
                Boundary::Periodic => extent / points[a] as f64,
                Boundary::ZeroFlux => extent / (points[a] - 1) as f64,
            };
        }
        for a in 1..dim {
            if ((spacing[a] - spacing[0]) / spacing[0]).abs() > 1e-12 {
                return Err(Error::InvalidGrid(format!(
                    "anisotropic spacing: axis 0 has h = {}, axis {a} has h = {}",
                    spacing[0], spacing[a]
                )));
            }
        }
        g.h = spacing[0];
        Ok(g)
    }

    /// Cube `[lo, hi]^dim` with `points` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, points: usize, boundary: Boundary) -> Result<Self> {
        Grid::new(&vec![lo; dim], &vec![hi; dim], &vec![points; dim], boundary)
    }

    /// Box grid whose spacing is the largest value `≤ h_max` that divides
    /// every axis extent into an integer number of cells.
    pub fn with_max_spacing(
        lower: &[f64],
        upper: &[f64],
        h_max: f64,
        boundary: Boundary,
    ) -> Result<Self> {
        if !(h_max > 0.0) {
            return Err(Error::InvalidGrid("spacing must be positive".into()));
        }
        let dim = lower.len();
        if upper.len() != dim || dim == 0 {
            return Err(Error::InvalidGrid("lower and upper must have equal nonzero length".into()));
        }
        let cells0 = ((upper[0] - lower[0]) / h_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        let h = (upper[0] - lower[0]) / cells0 as f64;
        let mut points = Vec::with_capacity(dim);
        for a in 0..dim {
            let cells = (upper[a] - lower[a]) / h;
            let rounded = cells.round();
            if (cells - rounded).abs() > 1e-9 * cells.max(1.0) {
                return Err(Error::InvalidGrid(format!(
                    "axis {a} extent is not a multiple of h = {h}"
                )));
            }
            let cells = rounded as usize;
            points.push(match boundary {
                Boundary::Periodic => cells,
                Boundary::ZeroFlux => cells + 1,
            });
        }
        Grid::new(lower, upper, &points, boundary)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn points(&self) -> &[usize] {
        &self.points[..self.dim]
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent[..self.dim]
    }

    pub fn upper(&self) -> [f64; 3] {
        let mut u = [0.0; 3];
        for a in 0..self.dim {
            u[a] = self.lower[a] + self.extent[a];
        }
        u
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of the box.
    pub fn volume(&self) -> f64 {
        self.extent[..self.dim].iter().product()
    }

    /// `h^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    #[inline]
    pub fn index(&self, i: [usize; 3]) -> usize {
        i[0] + self.points[0] * (i[1] + self.points[1] * i[2])
    }

    #[inline]
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let i0 = idx % self.points[0];
        let rest = idx / self.points[0];
        [i0, rest % self.points[1], rest / self.points[1]]
    }

    #[inline]
    pub fn coord_1d(&self, axis: usize, i: usize) -> f64 {
        self.lower[axis] + i as f64 * self.h
    }

    /// Position of node `idx`; unused components are zero.
    #[inline]
    pub fn coord(&self, idx: usize) -> [f64; 3] {
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coord_1d(a, m[a]);
        }
        x
    }

    /// Index of the neighbour one step along `axis` in direction `forward`.
    ///
    /// Zero-flux grids mirror across the boundary node.
    #[inline]
    pub fn neighbor(&self, idx: usize, m: [usize; 3], axis: usize, forward: bool) -> usize {
        let n = self.points[axis];
        let i = m[axis];
        let j = match (forward, self.boundary) {
            (true, _) if i + 1 < n => i + 1,
            (false, _) if i > 0 => i - 1,
            (true, Boundary::Periodic) => 0,
            (false, Boundary::Periodic) => n - 1,
            (true, Boundary::ZeroFlux) => n - 2,
            (false, Boundary::ZeroFlux) => 1,
        };
        let stride = match axis {
            0 => 1,
            1 => self.points[0],
            _ => self.points[0] * self.points[1],
        };
        (idx as isize + (j as isize - i as isize) * stride as isize) as usize
    }

    /// Trapezoid weight of a node: `1/2` per zero-flux face the node lies on.
    #[inline]
    pub fn node_weight(&self, m: [usize; 3]) -> f64 {
        if self.boundary == Boundary::Periodic {
            return 1.0;
        }
        let mut w = 1.0;
        for a in 0..self.dim {
            if m[a] == 0 || m[a] + 1 == self.points[a] {
                w *= 0.5;
            }
        }
        w
    }

    /// Distance from `x` to the nearest face of the box.
    pub fn distance_to_boundary(&self, x: &[f64]) -> f64 {
        let up = self.upper();
        (0..self.dim)
            .map(|a| (x[a] - self.lower[a]).min(up[a] - x[a]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Grid on the hyperplane orthogonal to the last axis (dimension `dim − 1`).
    pub(crate) fn hyperplane(&self) -> Option<Grid> {
        if self.dim < 2 {
            return None;
        }
        let d = self.dim - 1;
        let mut g = *self;
        g.dim = d;
        g.points[d] = 1;
        g.lower[d] = 0.0;
        g.extent[d] = 0.0;
        Some(g)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// One real value per grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::arg(format!(
                "field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::arg(format!("non-finite value at node {i}")));
        }
        Ok(ScalarField { grid, values })
    }

    /// Field from a trusted computation; finiteness is the caller's concern.
    pub(crate) fn from_vec(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ScalarField { grid, values }
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        ScalarField::from_vec(grid, vec![value; grid.len()])
    }

    /// Samples `f` at every node position.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> f64 + Sync + Send,
    {
        ScalarField::from_vec(grid, exec::map(grid.len(), |i| f(grid.coord(i))))
    }

    /// Nodewise map of another field.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Sync + Send,
    {
        let v = &self.values;
        ScalarField::from_vec(self.grid, exec::map(v.len(), |i| f(v[i])))
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        let v = &self.values;
        exec::max(v.len(), |i| v[i].abs()).max(0.0)
    }

    /// Nodewise `self + other`.
    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        self.grid.check_same(&other.grid)?;
        let (a, b) = (&self.values, &other.values);
        Ok(ScalarField::from_vec(self.grid, exec::map(a.len(), |i| a[i] + b[i])))
    }
}

/// One `dim`-vector per grid node; components beyond `dim` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    values: Vec<[f64; 3]>,
}

impl VectorField {
    pub fn new(grid: Grid, values: Vec<[f64; 3]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::arg(format!(
                "vector field has {} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::arg(format!("non-finite vector at node {i}")));
            }
            if v[grid.dim()..].iter().any(|&c| c != 0.0) {
                return Err(Error::arg(format!(
                    "node {i} has components beyond dimension {}",
                    grid.dim()
                )));
            }
        }
        Ok(VectorField { grid, values })
    }

    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> [f64; 3] + Sync + Send,
    {
        let d = grid.dim();
        let values = exec::map(grid.len(), |i| {
            let mut v = f(grid.coord(i));
            v[d..].iter_mut().for_each(|c| *c = 0.0);
            v
        });
        VectorField { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[[f64; 3]] {
        &self.values
    }

    /// Component `c` as a scalar field.
    pub fn component(&self, c: usize) -> ScalarField {
        ScalarField::from_vec(self.grid, self.values.iter().map(|v| v[c]).collect())
    }

    /// Nodewise Euclidean norm.
    pub fn norm(&self) -> ScalarField {
        let v = &self.values;
        ScalarField::from_vec(
            self.grid,
            exec::map(v.len(), |i| (v[i][0] * v[i][0] + v[i][1] * v[i][1] + v[i][2] * v[i][2]).sqrt()),
        )
    }
}

/// Integration domain for [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Whole,
    Ball {
        center: [f64; 3],
        radius: f64,
    },
    /// Ball intersected with the slab `t1 ≤ x_last ≤ t2` across the last axis.
    SlabBall {
        center: [f64; 3],
        radius: f64,
        t1: f64,
        t2: f64,
    },
    /// The hyperplane `x_last = t3`, optionally cut to a ball.
    PlaneSlice {
        t3: f64,
        within: Option<Ball>,
    },
    /// The segment `base + s·direction`, `s ∈ [0, 1]`.
    Line {
        base: [f64; 3],
        direction: [f64; 3],
    },
}

/// Second-order central difference gradient.
pub fn gradient(field: &ScalarField) -> VectorField {
    let g = field.grid;
    let u = &field.values;
    let inv = 0.5 / g.h;
    let values = exec::map(g.len(), |i| {
        let m = g.multi_index(i);
        let mut v = [0.0; 3];
        for (a, c) in v.iter_mut().enumerate().take(g.dim) {
            *c = (u[g.neighbor(i, m, a, true)] - u[g.neighbor(i, m, a, false)]) * inv;
        }
        v
    });
    VectorField { grid: g, values }
}

/// Standard `(2·dim + 1)`-point Laplacian.
pub fn laplacian(field: &ScalarField) -> ScalarField {
    let mut out = vec![0.0; field.grid.len()];
    laplacian_into(&field.grid, &field.values, &mut out);
    ScalarField::from_vec(field.grid, out)
}

pub(crate) fn laplacian_into(g: &Grid, u: &[f64], out: &mut [f64]) {
    let inv = 1.0 / (g.h * g.h);
    let dim = g.dim;
    exec::fill(out, |i| {
        let m = g.multi_index(i);
        let mut s = -2.0 * dim as f64 * u[i];
        for a in 0..dim {
            s += u[g.neighbor(i, m, a, true)] + u[g.neighbor(i, m, a, false)];
        }
        s * inv
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn periodic_line(n: usize) -> Grid {
        Grid::cube(1, 0.0, 1.0, n, Boundary::Periodic).unwrap()
    }

    #[test]
    fn spacing_rules() {
        let g = Grid::cube(2, -1.0, 1.0, 21, Boundary::ZeroFlux).unwrap();
        assert!((g.h() - 0.1).abs() < 1e-15);
        let g = Grid::cube(2, -1.0, 1.0, 20, Boundary::Periodic).unwrap();
        assert!((g.h() - 0.1).abs() < 1e-15);
        assert_eq!(g.len(), 400);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::cube(2, 0.0, 1.0, 7, Boundary::ZeroFlux).is_err());
        assert!(Grid::cube(4, 0.0, 1.0, 8, Boundary::ZeroFlux).is_err());
        assert!(Grid::new(&[0.0, 0.0], &[1.0, 2.0], &[11, 11], Boundary::ZeroFlux).is_err());
        assert!(Grid::new(&[0.0, 0.0], &[1.0, 2.0], &[11, 21], Boundary::ZeroFlux).is_ok());
    }

    #[test]
    fn max_spacing_grid() {
        let g = Grid::with_max_spacing(&[-0.5, -0.5], &[0.5, 0.5], 0.03, Boundary::ZeroFlux).unwrap();
        assert!(g.h() <= 0.03);
        assert_eq!(g.points(), &[35, 35]);
        assert!(Grid::with_max_spacing(&[0.0, 0.0], &[1.0, 0.55], 0.1, Boundary::ZeroFlux).is_err());
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(&[0.0; 3], &[1.0, 2.0, 3.0], &[11, 21, 31], Boundary::ZeroFlux).unwrap();
        for idx in [0, 5, 230, g.len() - 1] {
            assert_eq!(g.index(g.multi_index(idx)), idx);
        }
    }

    #[test]
    fn gradient_of_constant_is_zero() {
        let g = Grid::cube(3, 0.0, 1.0, 9, Boundary::ZeroFlux).unwrap();
        let grad = gradient(&ScalarField::constant(g, 2.5));
        assert!(grad.values().iter().all(|v| v == &[0.0; 3]));
        let lap = laplacian(&ScalarField::constant(g, 2.5));
        assert!(lap.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_exact_for_linear_interior() {
        let g = Grid::cube(2, -1.0, 1.0, 17, Boundary::ZeroFlux).unwrap();
        let u = ScalarField::from_fn(g, |x| x[0]);
        let grad = gradient(&u);
        for i in 0..g.len() {
            let m = g.multi_index(i);
            if m[0] > 0 && m[0] < 16 {
                assert!((grad.values()[i][0] - 1.0).abs() < 1e-12);
                assert!(grad.values()[i][1].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn laplacian_exact_for_quadratic_interior() {
        for dim in 1..=3 {
            let g = Grid::cube(dim, -1.0, 1.0, 11, Boundary::ZeroFlux).unwrap();
            let u = ScalarField::from_fn(g, |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
            let lap = laplacian(&u);
            for i in 0..g.len() {
                let m = g.multi_index(i);
                if (0..dim).all(|a| m[a] > 0 && m[a] < 10) {
                    assert!((lap.values()[i] - 2.0 * dim as f64).abs() < 1e-10);
                }
            }
        }
    }

    // Errors against the analytic derivatives of sin(2πx) at two resolutions.
    fn derivative_errors(n: usize) -> (f64, f64) {
        let g = periodic_line(n);
        let u = ScalarField::from_fn(g, |x| (2.0 * PI * x[0]).sin());
        let grad = gradient(&u);
        let lap = laplacian(&u);
        let mut eg: f64 = 0.0;
        let mut el: f64 = 0.0;
        for i in 0..g.len() {
            let x = g.coord(i)[0];
            eg = eg.max((grad.values()[i][0] - 2.0 * PI * (2.0 * PI * x).cos()).abs());
            el = el.max((lap.values()[i] + 4.0 * PI * PI * (2.0 * PI * x).sin()).abs());
        }
        (eg, el)
    }

    #[test]
    fn second_order_on_periodic_sine() {
        let (g1, l1) = derivative_errors(32);
        let (g2, l2) = derivative_errors(64);
        let h = 1.0 / 32.0;
        assert!(g1 <= 2.0 * (2.0 * PI).powi(3) / 6.0 * h * h);
        assert!(g1 / g2 >= 3.5, "gradient error ratio {}", g1 / g2);
        assert!(l1 / l2 >= 3.5, "laplacian error ratio {}", l1 / l2);
        assert!((g1 / g2).log2() >= 1.9 && (l1 / l2).log2() >= 1.9);
    }

    #[test]
    fn periodic_neighbors_wrap() {
        let g = periodic_line(10);
        let m = g.multi_index(0);
        assert_eq!(g.neighbor(0, m, 0, false), 9);
        let m = g.multi_index(9);
        assert_eq!(g.neighbor(9, m, 0, true), 0);
    }

    #[test]
    fn zero_flux_mirror() {
        let g = Grid::cube(1, 0.0, 1.0, 10, Boundary::ZeroFlux).unwrap();
        assert_eq!(g.neighbor(0, g.multi_index(0), 0, false), 1);
        assert_eq!(g.neighbor(9, g.multi_index(9), 0, true), 8);
    }

    #[test]
    fn scalar_field_rejects_nonfinite() {
        let g = periodic_line(8);
        assert!(ScalarField::new(g, vec![f64::NAN; 8]).is_err());
        assert!(ScalarField::new(g, vec![0.0; 7]).is_err());
        assert!(VectorField::new(g, vec![[0.0, 1.0, 0.0]; 8]).is_err());
    }
}
