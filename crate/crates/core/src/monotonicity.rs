//! Density ratios and term-by-term verification of the almost-monotonicity
//! identity, its slab-restricted variant and the sheet-separation integral.
//!
//! With `n = dim − 1`, `P = ⟨x − x₀, ∇u⟩`, `μ` and `ξ` the energy and
//! discrepancy densities, the identity reads
//!
//! ```text
//!   d/dr (r^{−n} μ(B_r)) = −ξ(B_r)/r^{n+1} + ε r^{−n−2} ∫_{∂B_r} P² − r^{−n−1} ∫_{B_r} P f.
//! ```
//!
//! Restricted to a slab `S = {t₁ ≤ x_last ≤ t₂}` two plane terms appear,
//! `+ρ^{−n−1}∫_{B_ρ∩{t₁}} 𝒮 − ρ^{−n−1}∫_{B_ρ∩{t₂}} 𝒮`, with
//! `𝒮 = (y_last − x₀_last)·e − ε ∂_last u·⟨y − x₀, ∇u⟩` and `e` the energy
//! density.
//!
//! The `r`-derivative on the left and the sphere integral of `P²` are both
//! obtained by differencing cumulative ball integrals in `r`. When a ghost
//! radius fits on either side of the requested range, every row uses
//! central differences.

use crate::error::{Error, Result};
use crate::exec;
use crate::fields::{cumulative_ball_profiles, plane_disk_profiles, Grid, Region, ScalarField};
use crate::fields::quadrature::{check_ball_inside, radial_derivative, uniform_step};
use crate::measures::{density_fields, diffuse_mean_curvature_norm, AnalysisParams, DensityFields};
use crate::phasefield::PhaseFieldState;
use crate::quad;

/// One radius of a [`MonotonicityReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityRow {
    pub r: f64,
    /// `r^{−n} μ(B_r)`.
    pub ratio: f64,
    /// `d/dr` of the ratio.
    pub lhs: f64,
    pub term_xi: f64,
    pub term_boundary: f64,
    pub term_forcing: f64,
    /// `lhs − (term_xi + term_boundary + term_forcing)`.
    pub residual: f64,
    /// Largest magnitude among the three terms.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub center: [f64; 3],
    pub rows: Vec<MonotonicityRow>,
    /// `max |residual| / max scale` over interior radii.
    pub aggregate_residual: f64,
}

impl MonotonicityReport {
    /// Largest term magnitude over interior radii.
    pub fn interior_scale(&self) -> f64 {
        interior(&self.rows).map(|r| r.scale).fold(0.0, f64::max)
    }

    /// Most negative boundary term relative to the largest scale (0 if none).
    pub fn min_boundary_over_scale(&self) -> f64 {
        let scale = self.rows.iter().map(|r| r.scale).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        self.rows.iter().map(|r| r.term_boundary / scale).fold(0.0, f64::min)
    }
}

fn interior<T>(rows: &[T]) -> impl Iterator<Item = &T> {
    let n = rows.len();
    rows.iter().enumerate().filter(move |(k, _)| *k > 0 && *k + 1 < n).map(|(_, r)| r)
}

fn aggregate(residuals: &[f64], scales: &[f64]) -> f64 {
    let n = residuals.len();
    let res = (1..n - 1).map(|k| residuals[k].abs()).fold(0.0, f64::max);
    let scale = (1..n - 1).map(|k| scales[k]).fold(0.0, f64::max);
    if scale > 0.0 {
        res / scale
    } else if res == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `(r, r^{−n} μ(B_r(center)))` for ascending radii.
pub fn density_ratio_profile(
    state: &PhaseFieldState,
    center: [f64; 3],
    radii: &[f64],
    supersample: usize,
) -> Result<Vec<(f64, f64)>> {
    let d = density_fields(state, 0)?;
    let n = state.grid().dim() as f64 - 1.0;
    let mu = cumulative_ball_profiles(&[&d.mu], center, radii, None, supersample)?;
    Ok(radii.iter().zip(&mu[0]).map(|(&r, &m)| (r, m / r.powf(n))).collect())
}

fn check_radii(g: &Grid, epsilon: f64, radii: &[f64]) -> Result<f64> {
    if radii.len() < 5 {
        return Err(Error::arg(format!("need at least 5 radii, got {}", radii.len())));
    }
    let dr = uniform_step(radii)?;
    let floor = (4.0 * g.h()).max(epsilon);
    if radii[0] < floor * (1.0 - 1e-12) {
        return Err(Error::arg(format!(
            "smallest radius {} is below the resolution floor max(4h, ε) = {floor}",
            radii[0]
        )));
    }
    Ok(dr)
}

/// Radii padded by a ghost step on each side when the padded ball still
/// fits; returns the padded list and the offset of the first real radius.
fn padded(g: &Grid, center: &[f64; 3], radii: &[f64], dr: f64) -> (Vec<f64>, usize) {
    let mut out = Vec::with_capacity(radii.len() + 2);
    let mut offset = 0;
    if radii[0] - dr > 0.0 {
        out.push(radii[0] - dr);
        offset = 1;
    }
    out.extend_from_slice(radii);
    let up = radii[radii.len() - 1] + dr;
    if check_ball_inside(g, center, up).is_ok() {
        out.push(up);
    }
    (out, offset)
}

/// `⟨x − x₀, ∇u⟩²` and `⟨x − x₀, ∇u⟩·f`.
fn radial_fields(state: &PhaseFieldState, d: &DensityFields, center: &[f64; 3]) -> (ScalarField, ScalarField) {
    let g = *state.grid();
    let dim = g.dim();
    let gv = d.grad.values();
    let f = state.f().values();
    let p = |i: usize| {
        let x = g.coord(i);
        (0..dim).map(|a| (x[a] - center[a]) * gv[i][a]).sum::<f64>()
    };
    let p2 = exec::map(g.len(), |i| p(i).powi(2));
    let pf = exec::map(g.len(), |i| p(i) * f[i]);
    (ScalarField::new(g, p2).expect("finite"), ScalarField::new(g, pf).expect("finite"))
}

struct Profiles {
    radii: Vec<f64>,
    ratio_d: Vec<f64>,
    ratio: Vec<f64>,
    xi: Vec<f64>,
    p2_d: Vec<f64>,
    pf: Vec<f64>,
}

fn profiles(
    state: &PhaseFieldState,
    center: [f64; 3],
    radii: &[f64],
    slab: Option<(f64, f64)>,
    supersample: usize,
) -> Result<Profiles> {
    let g = *state.grid();
    let dr = check_radii(&g, state.epsilon(), radii)?;
    check_ball_inside(&g, &center, radii[radii.len() - 1])?;
    let n = g.dim() as f64 - 1.0;
    let d = density_fields(state, 0)?;
    let (p2, pf) = radial_fields(state, &d, &center);
    let (all, offset) = padded(&g, &center, radii, dr);
    let prof = cumulative_ball_profiles(&[&d.mu, &d.xi, &p2, &pf], center, &all, slab, supersample)?;
    let ratio_all: Vec<f64> = all.iter().zip(&prof[0]).map(|(&r, &m)| m / r.powf(n)).collect();
    let ratio_d = radial_derivative(&all, &ratio_all)?;
    let p2_d = radial_derivative(&all, &prof[2])?;
    let take = |v: &[f64]| v[offset..offset + radii.len()].to_vec();
    Ok(Profiles {
        radii: radii.to_vec(),
        ratio_d: take(&ratio_d),
        ratio: take(&ratio_all),
        xi: take(&prof[1]),
        p2_d: take(&p2_d),
        pf: take(&prof[3]),
    })
}

/// Term-by-term evaluation of the almost-monotonicity identity at uniformly
/// spaced radii (at least 5, smallest at least `max(4h, ε)`).
pub fn monotonicity_report(
    state: &PhaseFieldState,
    center: [f64; 3],
    radii: &[f64],
    supersample: usize,
) -> Result<MonotonicityReport> {
    let p = profiles(state, center, radii, None, supersample)?;
    let n = state.grid().dim() as f64 - 1.0;
    let eps = state.epsilon();
    let rows: Vec<MonotonicityRow> = (0..radii.len())
        .map(|k| {
            let r = p.radii[k];
            let term_xi = -p.xi[k] / r.powf(n + 1.0);
            let term_boundary = eps * p.p2_d[k] / r.powf(n + 2.0);
            let term_forcing = -p.pf[k] / r.powf(n + 1.0);
            MonotonicityRow {
                r,
                ratio: p.ratio[k],
                lhs: p.ratio_d[k],
                term_xi,
                term_boundary,
                term_forcing,
                residual: p.ratio_d[k] - (term_xi + term_boundary + term_forcing),
                scale: term_xi.abs().max(term_boundary.abs()).max(term_forcing.abs()),
            }
        })
        .collect();
    let res: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let sc: Vec<f64> = rows.iter().map(|r| r.scale).collect();
    Ok(MonotonicityReport { center, aggregate_residual: aggregate(&res, &sc), rows })
}

/// One radius of a [`SlabReport`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabRow {
    pub r: f64,
    /// `r^{−n} μ(B_r ∩ S)`.
    pub ratio: f64,
    pub lhs: f64,
    pub term_xi: f64,
    pub term_boundary: f64,
    pub term_forcing: f64,
    /// `+r^{−n−1} ∫_{B_r ∩ {x_last = t₁}} 𝒮`.
    pub plane_t1: f64,
    /// `−r^{−n−1} ∫_{B_r ∩ {x_last = t₂}} 𝒮`.
    pub plane_t2: f64,
    pub residual: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlabReport {
    pub center: [f64; 3],
    pub t1: f64,
    pub t2: f64,
    pub rows: Vec<SlabRow>,
    pub aggregate_residual: f64,
}

/// The sheet-separation integrand `𝒮_{·,x₀}` as a nodal field.
pub fn sheet_separation_field(state: &PhaseFieldState, d: &DensityFields, center: &[f64; 3]) -> ScalarField {
    let g = *state.grid();
    let dim = g.dim();
    let last = dim - 1;
    let eps = state.epsilon();
    let gv = d.grad.values();
    let mu = d.mu.values();
    let vals = exec::map(g.len(), |i| {
        let x = g.coord(i);
        let p: f64 = (0..dim).map(|a| (x[a] - center[a]) * gv[i][a]).sum();
        (x[last] - center[last]) * mu[i] - eps * gv[i][last] * p
    });
    ScalarField::new(g, vals).expect("finite")
}

fn check_planes(g: &Grid, center: &[f64; 3], radii: &[f64], planes: &[f64]) -> Result<()> {
    let last = g.dim() - 1;
    let h = g.h();
    for &t in planes {
        let off = (t - center[last]).abs();
        for &r in radii {
            if off > r - 2.0 * h && off < r {
                return Err(Error::arg(format!(
                    "plane x_{last} = {t} passes within 2h of the pole of the ball of radius {r}"
                )));
            }
        }
    }
    Ok(())
}

/// The identity restricted to the slab `t1 ≤ x_last ≤ t2`.
pub fn slab_report(
    state: &PhaseFieldState,
    center: [f64; 3],
    radii: &[f64],
    t1: f64,
    t2: f64,
    supersample: usize,
) -> Result<SlabReport> {
    if !(t1 < t2) {
        return Err(Error::arg(format!("degenerate slab [{t1}, {t2}]")));
    }
    let g = *state.grid();
    check_radii(&g, state.epsilon(), radii)?;
    check_planes(&g, &center, radii, &[t1, t2])?;
    let p = profiles(state, center, radii, Some((t1, t2)), supersample)?;
    let n = g.dim() as f64 - 1.0;
    let eps = state.epsilon();
    let d = density_fields(state, 0)?;
    let s = sheet_separation_field(state, &d, &center);
    let last = g.dim() - 1;
    let plane = |t: f64| -> Result<Vec<f64>> {
        if (t - center[last]).abs() >= radii[radii.len() - 1] {
            return Ok(vec![0.0; radii.len()]);
        }
        Ok(plane_disk_profiles(&[&s], t, &center, radii, supersample)?.remove(0))
    };
    let s1 = plane(t1)?;
    let s2 = plane(t2)?;
    let rows: Vec<SlabRow> = (0..radii.len())
        .map(|k| {
            let r = radii[k];
            let w = r.powf(n + 1.0);
            let term_xi = -p.xi[k] / w;
            let term_boundary = eps * p.p2_d[k] / r.powf(n + 2.0);
            let term_forcing = -p.pf[k] / w;
            let plane_t1 = s1[k] / w;
            let plane_t2 = -s2[k] / w;
            let sum = term_xi + term_boundary + term_forcing + plane_t1 + plane_t2;
            SlabRow {
                r,
                ratio: p.ratio[k],
                lhs: p.ratio_d[k],
                term_xi,
                term_boundary,
                term_forcing,
                plane_t1,
                plane_t2,
                residual: p.ratio_d[k] - sum,
                scale: [term_xi, term_boundary, term_forcing, plane_t1, plane_t2]
                    .iter()
                    .fold(0.0, |m, t| m.max(t.abs())),
            }
        })
        .collect();
    let res: Vec<f64> = rows.iter().map(|r| r.residual).collect();
    let sc: Vec<f64> = rows.iter().map(|r| r.scale).collect();
    Ok(SlabReport { center, t1, t2, aggregate_residual: aggregate(&res, &sc), rows })
}

/// Subdivisions of `[d, R]` used by [`sheet_separation_integral`].
pub const SHEET_SUBDIVISIONS: usize = 64;

/// `∫_d^R ρ^{−n−1} ∫_{B_ρ(x) ∩ {y_last = t3}} |𝒮_{y,x}| dy dρ`.
pub fn sheet_separation_integral(
    state: &PhaseFieldState,
    x: [f64; 3],
    t3: f64,
    d: f64,
    r_max: f64,
    supersample: usize,
) -> Result<f64> {
    if d > r_max {
        return Err(Error::arg(format!("inner radius {d} exceeds outer radius {r_max}")));
    }
    if d < state.epsilon() * (1.0 - 1e-12) {
        return Err(Error::arg(format!("inner radius {d} is below ε = {}", state.epsilon())));
    }
    if d == r_max {
        return Ok(0.0);
    }
    let g = *state.grid();
    let n = g.dim() as f64 - 1.0;
    let dens = density_fields(state, 0)?;
    let s = sheet_separation_field(state, &dens, &x).map(f64::abs);
    let radii: Vec<f64> = (0..=SHEET_SUBDIVISIONS)
        .map(|k| d + (r_max - d) * k as f64 / SHEET_SUBDIVISIONS as f64)
        .collect();
    let prof = plane_disk_profiles(&[&s], t3, &x, &radii, supersample)?.remove(0);
    let ys: Vec<f64> = radii.iter().zip(&prof).map(|(&r, &v)| v / r.powf(n + 1.0)).collect();
    Ok(quad::trapezoid(&ys, (r_max - d) / SHEET_SUBDIVISIONS as f64))
}

/// Numerical form of the exponentially weighted comparison of density ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratedCheck {
    /// `Λ̂^{1/q0}·2^{(q0−1)/q0}`.
    pub c: f64,
    /// `exp(q0/(q0−n)·c·r0^{1−n/q0})`.
    pub factor: f64,
    /// Smallest margin over `r < r0`.
    pub min_margin: f64,
    pub holds: bool,
}

/// For every report radius `r` below the last one `r0`, checks
///
/// ```text
///   factor·(1 + ratio(r0)) − ratio(r) + factor·∫_r^{r0} ξ₊(B_ρ)/ρ^{n+1} dρ + ∫_r^{r0} |residual| dρ ≥ 0.
/// ```
///
/// The `ξ₊` integral is the contribution the identity leaves uncontrolled;
/// the residual integral is the discretization budget of the report.
pub fn integrated_monotonicity_check(
    state: &PhaseFieldState,
    report: &MonotonicityReport,
    params: &AnalysisParams,
) -> Result<IntegratedCheck> {
    let g = *state.grid();
    params.validate(g.dim())?;
    let n = g.dim() as f64 - 1.0;
    let q0 = params.q0;
    let (lambda_hat, _) = diffuse_mean_curvature_norm(state, params, &Region::Whole)?;
    let c = lambda_hat.powf(1.0 / q0) * 2f64.powf((q0 - 1.0) / q0);
    let rows = &report.rows;
    let m = rows.len();
    let r0 = rows[m - 1].r;
    let factor = (q0 / (q0 - n) * c * r0.powf(1.0 - n / q0)).exp();
    let d = density_fields(state, 0)?;
    let radii: Vec<f64> = rows.iter().map(|r| r.r).collect();
    let xp = cumulative_ball_profiles(&[&d.xi_plus], report.center, &radii, None, params.supersample)?;
    let xi_w: Vec<f64> = radii.iter().zip(&xp[0]).map(|(&r, &v)| v / r.powf(n + 1.0)).collect();
    let res: Vec<f64> = rows.iter().map(|r| r.residual.abs()).collect();
    let mut min_margin = f64::INFINITY;
    for k in 0..m - 1 {
        let xi_int = quad::trapezoid_xy(&radii[k..], &xi_w[k..]);
        let budget = quad::trapezoid_xy(&radii[k..], &res[k..]);
        let margin = factor * (1.0 + rows[m - 1].ratio) - rows[k].ratio + factor * xi_int + budget;
        min_margin = min_margin.min(margin);
    }
    Ok(IntegratedCheck { c, factor, min_margin, holds: min_margin >= 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;
    use crate::phasefield::{build_discrete_layer, build_layer_stack, build_radial_layer, LayerSpec};
    use crate::ALPHA;

    fn square(eps: f64, per_eps: f64, half: f64) -> Grid {
        Grid::with_max_spacing(&[-half, -half], &[half, half], eps / per_eps, Boundary::ZeroFlux).unwrap()
    }

    fn planar(eps: f64, per_eps: f64) -> PhaseFieldState {
        let g = square(eps, per_eps, 1.0);
        PhaseFieldState::manufactured(build_discrete_layer(g, eps, 1, 0.0).unwrap(), eps).unwrap()
    }

    fn circle(eps: f64, per_eps: f64) -> PhaseFieldState {
        let g = square(eps, per_eps, 1.0);
        PhaseFieldState::manufactured(build_radial_layer(g, eps, [0.0; 3], 0.5).unwrap(), eps).unwrap()
    }

    fn radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
        (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
    }

    #[test]
    fn constant_one_is_all_zero() {
        let g = square(0.1, 8.0, 1.0);
        let st = PhaseFieldState::manufactured(ScalarField::constant(g, 1.0), 0.1).unwrap();
        let rep = monotonicity_report(&st, [0.0; 3], &radii(0.1, 0.5, 9), 4).unwrap();
        for r in &rep.rows {
            assert_eq!([r.ratio, r.lhs, r.term_xi, r.term_boundary, r.term_forcing, r.residual], [0.0; 6]);
        }
        let slab = slab_report(&st, [0.0; 3], &radii(0.1, 0.5, 9), -0.25, 0.25, 4).unwrap();
        assert!(slab.rows.iter().all(|r| r.plane_t1 == 0.0 && r.plane_t2 == 0.0 && r.residual == 0.0));
        assert_eq!(sheet_separation_integral(&st, [0.0; 3], 0.0, 0.1, 0.5, 4).unwrap(), 0.0);
        let dr = density_ratio_profile(&st, [0.0; 3], &[0.2, 0.4], 4).unwrap();
        assert!(dr.iter().all(|&(_, v)| v == 0.0));
    }

    #[test]
    fn planar_ratio_is_twice_alpha() {
        let st = planar(0.02, 8.0);
        for (r, v) in density_ratio_profile(&st, [0.0; 3], &radii(0.1, 0.4, 7), 4).unwrap() {
            assert!((v / (2.0 * ALPHA) - 1.0).abs() < 0.02, "r = {r}: {v}");
        }
    }

    #[test]
    fn off_interface_ratio_is_exponentially_small() {
        let eps = 0.02;
        let st = planar(eps, 8.0);
        for (r, v) in density_ratio_profile(&st, [0.0, 0.3, 0.0], &radii(0.05, 0.2, 4), 4).unwrap() {
            // μ ≤ 2 sech²(d/ε)/ε ≤ 8 e^{−2d/ε}/ε on the ball, d ≥ 0.3 − r.
            let bound = 8.0 * (-2.0 * (0.3 - r) / eps).exp() / eps * std::f64::consts::PI * r;
            assert!(v <= bound, "r = {r}: {v} > {bound}");
        }
    }

    #[test]
    fn rejects_unresolved_radii() {
        let st = planar(0.05, 8.0);
        assert!(monotonicity_report(&st, [0.0; 3], &radii(0.01, 0.4, 9), 4).is_err());
        assert!(monotonicity_report(&st, [0.0; 3], &radii(0.1, 0.4, 4), 4).is_err());
        assert!(slab_report(&st, [0.0; 3], &radii(0.1, 0.4, 9), 0.2, 0.1, 4).is_err());
        assert!(sheet_separation_integral(&st, [0.0; 3], 0.0, 0.5, 0.4, 4).is_err());
    }

    #[test]
    fn identity_residual_on_planar_and_circle() {
        for (st, c) in [(planar(0.05, 8.0), [0.0; 3]), (circle(0.05, 8.0), [0.5, 0.0, 0.0])] {
            let rep = monotonicity_report(&st, c, &radii(0.1, 0.4, 25), 4).unwrap();
            assert!(rep.aggregate_residual <= 0.05, "{}", rep.aggregate_residual);
            assert!(rep.min_boundary_over_scale() >= -1e-10);
        }
    }

    #[test]
    fn circle_has_material_forcing_term() {
        let st = circle(0.05, 8.0);
        let rep = monotonicity_report(&st, [0.5, 0.0, 0.0], &radii(0.1, 0.4, 25), 4).unwrap();
        let scale = rep.interior_scale();
        assert!(rep.rows.iter().any(|r| r.term_forcing.abs() >= 0.1 * scale));
        let chk = integrated_monotonicity_check(&st, &rep, &AnalysisParams::new(2)).unwrap();
        assert!(chk.holds, "{chk:?}");
    }

    #[test]
    fn planar_forcing_column_vanishes() {
        let st = planar(0.05, 8.0);
        let rep = monotonicity_report(&st, [0.0; 3], &radii(0.1, 0.4, 13), 4).unwrap();
        let scale = rep.interior_scale();
        assert!(rep.rows.iter().all(|r| r.term_forcing.abs() <= 1e-6 * scale));
    }

    #[test]
    fn containing_slab_reproduces_plain_report() {
        let st = circle(0.05, 8.0);
        let rr = radii(0.1, 0.4, 7);
        let plain = monotonicity_report(&st, [0.0; 3], &rr, 4).unwrap();
        let slab = slab_report(&st, [0.0; 3], &rr, -0.6, 0.6, 4).unwrap();
        for (a, b) in plain.rows.iter().zip(&slab.rows) {
            assert_eq!((a.ratio, a.lhs, a.term_xi, a.term_boundary, a.term_forcing), (b.ratio, b.lhs, b.term_xi, b.term_boundary, b.term_forcing));
            assert!(b.plane_t1.abs() <= 1e-10 * b.scale && b.plane_t2.abs() <= 1e-10 * b.scale);
        }
    }

    #[test]
    fn slab_identity_on_cut_circle() {
        let st = circle(0.05, 8.0);
        let rep = slab_report(&st, [0.5, 0.0, 0.0], &radii(0.1, 0.4, 25), -0.05, 0.45, 4).unwrap();
        assert!(rep.aggregate_residual <= 0.05, "{}", rep.aggregate_residual);
        assert!(rep.rows.iter().any(|r| r.plane_t1.abs() > 0.1 * r.scale));
    }

    #[test]
    fn planar_slab_plane_terms_are_tail_small() {
        let eps = 0.02;
        let st = planar(eps, 8.0);
        let rep = slab_report(&st, [0.0; 3], &radii(0.1, 0.18, 5), -0.2, 0.2, 4).unwrap();
        let scale = rep.rows.iter().map(|r| r.scale).fold(0.0, f64::max);
        for r in &rep.rows {
            assert!(r.plane_t1.abs() + r.plane_t2.abs() <= (-0.2f64 / eps).exp() * 10.0 * scale.max(1.0));
        }
    }

    #[test]
    fn sheet_separation_discriminates_layers() {
        let eps = 0.02;
        let g = square(eps, 8.0, 0.5);
        // Two horizontal sheets 10ε apart; the midplane sees only tails.
        let stack = build_layer_stack(g, eps, &LayerSpec::new(1, vec![-0.1, 0.1])).unwrap();
        let stack = PhaseFieldState::manufactured(stack, eps).unwrap();
        let mid = sheet_separation_integral(&stack, [0.0; 3], 0.0, eps, 0.3, 4).unwrap();
        // A transversal sheet crossed by the plane.
        let vertical = build_layer_stack(g, eps, &LayerSpec::new(0, vec![0.0])).unwrap();
        let vertical = PhaseFieldState::manufactured(vertical, eps).unwrap();
        let reference = sheet_separation_integral(&vertical, [5.0 * eps, 0.0, 0.0], 0.0, eps, 0.3, 4).unwrap();
        assert!(mid <= (-5.0f64).exp() * reference, "{mid} vs {reference}");
        assert!(reference >= 10.0 * mid);
    }
}
