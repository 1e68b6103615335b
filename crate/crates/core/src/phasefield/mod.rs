//! The double-well potential, the heteroclinic profile, layer constructions,
//! manufactured forcing and the phase-field state.

mod solver;

pub use solver::solve_stationary;

use crate::error::{Error, Result};
use crate::exec;
use crate::fields::{laplacian, Grid, ScalarField};
use crate::quad;

/// `W(t) = (1 − t²)² / 2`.
#[inline]
pub fn double_well(t: f64) -> f64 {
    let a = 1.0 - t * t;
    0.5 * a * a
}

/// `W′(t) = −2t(1 − t²)`.
#[inline]
pub fn double_well_prime(t: f64) -> f64 {
    -2.0 * t * (1.0 - t * t)
}

/// `W″(t) = 6t² − 2`.
#[inline]
pub fn double_well_second(t: f64) -> f64 {
    6.0 * t * t - 2.0
}

/// The heteroclinic `q(t) = tanh t` and its derivative `1 − tanh² t`.
#[inline]
pub fn heteroclinic(t: f64) -> (f64, f64) {
    let q = t.tanh();
    (q, 1.0 - q * q)
}

/// Constants attached to the potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constants {
    /// `∫_{−1}^{1} √(2W)`.
    pub sigma: f64,
    /// `∫ (q′)²`.
    pub alpha: f64,
    /// Inflection point of `W′`.
    pub t0: f64,
}

/// Computes `σ` and `α` by adaptive quadrature.
pub fn constants() -> Result<Constants> {
    let sigma = quad::adaptive_simpson(|s| (2.0 * double_well(s)).sqrt(), -1.0, 1.0, 1e-13)?;
    let alpha = quad::adaptive_simpson(|t| heteroclinic(t).1.powi(2), -40.0, 40.0, 1e-13)?;
    Ok(Constants { sigma, alpha, t0: 1.0 / 3f64.sqrt() })
}

/// Parallel transition layers normal to `axis`, with alternating orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerSpec {
    pub axis: usize,
    /// Layer offsets along `axis`, strictly increasing.
    pub positions: Vec<f64>,
    /// Phase (`±1`) below the first layer.
    pub start: f64,
}

impl LayerSpec {
    /// Layers starting from the `−1` phase.
    pub fn new(axis: usize, positions: Vec<f64>) -> Self {
        LayerSpec { axis, positions, start: -1.0 }
    }

    /// Orientation of layer `k`: `+1` for a `−1 → +1` transition.
    pub fn orientation(&self, k: usize) -> f64 {
        let s = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
        -self.start * s
    }
}

pub(crate) fn check_resolution(grid: &Grid, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::arg(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon < 2.0 * grid.h() * (1.0 - 1e-12) {
        return Err(Error::arg(format!(
            "epsilon = {epsilon} is below the resolution floor 2h = {}",
            2.0 * grid.h()
        )));
    }
    Ok(())
}

/// Superposition of `tanh` transitions
/// `u = s·(−1 + Σ_k (−1)^k (1 + tanh((x_a − p_k)/ε)))`, clamped to `[−1, 1]`.
pub fn build_layer_stack(grid: Grid, epsilon: f64, spec: &LayerSpec) -> Result<ScalarField> {
    check_resolution(&grid, epsilon)?;
    let a = spec.axis;
    if a >= grid.dim() {
        return Err(Error::arg(format!("layer axis {a} out of range for dimension {}", grid.dim())));
    }
    if spec.start.abs() != 1.0 {
        return Err(Error::arg("layer stack must start from phase +1 or -1"));
    }
    if spec.positions.iter().any(|p| !p.is_finite()) {
        return Err(Error::arg("layer positions must be finite"));
    }
    for w in spec.positions.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::arg("layer positions must be strictly increasing"));
        }
        if w[1] - w[0] < 4.0 * epsilon {
            return Err(Error::arg(format!(
                "layers at {} and {} overlap: gap below 4ε = {}",
                w[0],
                w[1],
                4.0 * epsilon
            )));
        }
    }
    let lo = grid.lower()[a];
    let hi = grid.upper()[a];
    for &p in &spec.positions {
        if p - lo < 6.0 * epsilon || hi - p < 6.0 * epsilon {
            return Err(Error::RegionOutOfDomain(format!(
                "layer at {p} is closer than 6ε to the boundary of axis {a}"
            )));
        }
    }
    let s = -spec.start;
    let positions = spec.positions.clone();
    Ok(ScalarField::from_fn(grid, move |x| {
        let mut v = -1.0;
        for (k, &p) in positions.iter().enumerate() {
            let sign = if k.is_multiple_of(2) { 1.0 } else { -1.0 };
            v += sign * (1.0 + ((x[a] - p) / epsilon).tanh());
        }
        (s * v).clamp(-1.0, 1.0)
    }))
}

/// `tanh((|x − c| − R)/ε)`: `−1` inside the sphere, `+1` outside.
pub fn build_radial_layer(grid: Grid, epsilon: f64, center: [f64; 3], radius: f64) -> Result<ScalarField> {
    check_resolution(&grid, epsilon)?;
    if !(radius > 0.0) {
        return Err(Error::arg(format!("radius must be positive, got {radius}")));
    }
    if grid.distance_to_boundary(&center) <= radius {
        return Err(Error::RegionOutOfDomain(format!(
            "sphere of radius {radius} at {:?} leaves the domain",
            &center[..grid.dim()]
        )));
    }
    let dim = grid.dim();
    Ok(ScalarField::from_fn(grid, move |x| {
        let d = (0..dim).map(|a| (x[a] - center[a]).powi(2)).sum::<f64>().sqrt();
        ((d - radius) / epsilon).tanh()
    }))
}

/// Odd discrete heteroclinic on the lattice `k·h`, `k = 0..=n`: the solution
/// of `ε(v_{k+1} − 2v_k + v_{k−1})/h² = W′(v_k)/ε` with `v_0 = 0` and a
/// mirror condition at `k = n`.
pub fn discrete_heteroclinic(h: f64, epsilon: f64, n: usize) -> Result<Vec<f64>> {
    if !(h > 0.0 && epsilon >= 2.0 * h) || n < 2 {
        return Err(Error::arg("discrete heteroclinic needs epsilon >= 2h and n >= 2"));
    }
    let mut v: Vec<f64> = (0..=n).map(|k| (k as f64 * h / epsilon).tanh()).collect();
    let c = epsilon / (h * h);
    // Unknowns v_1..v_n; tridiagonal Newton.
    let m = n;
    let mut lower = vec![0.0; m];
    let mut diag = vec![0.0; m];
    let mut upper = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for _ in 0..100 {
        let mut res_max: f64 = 0.0;
        for j in 0..m {
            let k = j + 1;
            let left = v[k - 1];
            let right = if k == n { v[n - 1] } else { v[k + 1] };
            let r = c * (left - 2.0 * v[k] + right) - double_well_prime(v[k]) / epsilon;
            res_max = res_max.max(r.abs());
            rhs[j] = -r;
            diag[j] = -2.0 * c - double_well_second(v[k]) / epsilon;
            lower[j] = if j > 0 { c } else { 0.0 };
            upper[j] = if k == n { 0.0 } else { c };
        }
        // The mirror row couples v_n to v_{n−1} twice.
        lower[m - 1] = 2.0 * c;
        if res_max <= 64.0 * f64::EPSILON * c {
            return Ok(v);
        }
        let dv = thomas(&lower, &diag, &upper, &rhs);
        let step = dv.iter().fold(0.0f64, |a, d| a.max(d.abs()));
        for j in 0..m {
            v[j + 1] += dv[j];
        }
        if step <= 1e-14 {
            return Ok(v);
        }
    }
    Err(Error::NotConverged { iterations: 100, best_residual: f64::NAN })
}

fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let den = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / den;
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / den;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// A single flat layer normal to `axis` through the grid node plane
/// `x_axis = position`, built from [`discrete_heteroclinic`] so that the
/// discrete equation holds with `f = 0` up to rounding and exponentially
/// small boundary effects.
pub fn build_discrete_layer(grid: Grid, epsilon: f64, axis: usize, position: f64) -> Result<ScalarField> {
    check_resolution(&grid, epsilon)?;
    if axis >= grid.dim() {
        return Err(Error::arg(format!("layer axis {axis} out of range")));
    }
    let h = grid.h();
    let s = (position - grid.lower()[axis]) / h;
    let k0 = s.round();
    if (s - k0).abs() > 1e-6 || k0 < 0.0 || k0 as usize >= grid.points()[axis] {
        return Err(Error::arg(format!("layer position {position} is not a grid node of axis {axis}")));
    }
    let k0 = k0 as isize;
    let n_axis = grid.points()[axis] as isize;
    let n = (k0.max(n_axis - 1 - k0) + 2) as usize;
    let profile = discrete_heteroclinic(h, epsilon, n)?;
    Ok(ScalarField::from_fn(grid, move |x| {
        let k = ((x[axis] - position) / h).round() as isize;
        let v = profile[k.unsigned_abs()];
        if k < 0 {
            -v
        } else {
            v
        }
    }))
}

/// `εΔ_h u − W′(u)/ε − f`.
pub fn residual(u: &ScalarField, f: &ScalarField, epsilon: f64) -> Result<ScalarField> {
    u.grid().check_same(f.grid())?;
    let lap = laplacian(u);
    let (uv, fv, lv) = (u.values(), f.values(), lap.values());
    Ok(ScalarField::from_vec(
        *u.grid(),
        exec::map(uv.len(), |i| epsilon * lv[i] - double_well_prime(uv[i]) / epsilon - fv[i]),
    ))
}

/// `f = εΔ_h u − W′(u)/ε`, so that `(u, f)` solves the discrete equation.
pub fn manufactured_forcing(u: &ScalarField, epsilon: f64) -> Result<ScalarField> {
    check_resolution(u.grid(), epsilon)?;
    let lap = laplacian(u);
    let (uv, lv) = (u.values(), lap.values());
    Ok(ScalarField::from_vec(
        *u.grid(),
        exec::map(uv.len(), |i| epsilon * lv[i] - double_well_prime(uv[i]) / epsilon),
    ))
}

/// A triple `(u, f, ε)` with the max-norm of its discrete residual.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseFieldState {
    u: ScalarField,
    f: ScalarField,
    epsilon: f64,
    residual_norm: f64,
}

impl PhaseFieldState {
    pub fn new(u: ScalarField, f: ScalarField, epsilon: f64) -> Result<Self> {
        check_resolution(u.grid(), epsilon)?;
        let residual_norm = residual(&u, &f, epsilon)?.max_abs();
        if !residual_norm.is_finite() {
            return Err(Error::arg("residual is not finite"));
        }
        Ok(PhaseFieldState { u, f, epsilon, residual_norm })
    }

    /// `(u, manufactured_forcing(u))`.
    pub fn manufactured(u: ScalarField, epsilon: f64) -> Result<Self> {
        let f = manufactured_forcing(&u, epsilon)?;
        Self::new(u, f, epsilon)
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }
}
