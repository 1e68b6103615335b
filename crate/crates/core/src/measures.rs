//! Energy and discrepancy densities, tilt excess, the diffuse mean curvature
//! norm, scalar norm reports and the first variation of the diffuse varifold.
//!
//! Where `∇u = 0` the normal `ν = ∇u/|∇u|` is undefined; every
//! `ν`-dependent integrand is set to zero there. Each such integrand carries
//! a factor `ε|∇u|²` or `|∇u|`, so this choice does not affect any integral.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec;
use crate::fields::{gradient, integrate, whole_sum, Boundary, Grid, Region, ScalarField, VectorField};
use crate::phasefield::{double_well, PhaseFieldState};

/// Tunable exponents and tolerances shared by the analyses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisParams {
    /// Exponent of the diffuse mean curvature norm; must exceed `n = dim − 1`.
    pub q0: f64,
    /// Nodes with `ε|∇u|` below this are left out of curvature quotients.
    pub grad_threshold: f64,
    /// Subcells per axis for cells cut by region boundaries.
    pub supersample: usize,
    /// Transition band `|u| < 1 − τ`.
    pub tau: f64,
}

impl AnalysisParams {
    /// Defaults for ambient dimension `dim`: `q0 = dim`.
    pub fn new(dim: usize) -> Self {
        AnalysisParams { q0: dim as f64, grad_threshold: 1e-8, supersample: 4, tau: 0.1 }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let n = dim as f64 - 1.0;
        if !(self.q0 > n && self.q0.is_finite()) {
            return Err(Error::arg(format!("q0 = {} must exceed n = {n}", self.q0)));
        }
        if !(self.grad_threshold >= 0.0) {
            return Err(Error::arg("grad_threshold must be nonnegative"));
        }
        if self.supersample == 0 {
            return Err(Error::arg("supersample must be at least 1"));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(Error::arg(format!("tau = {} must lie in (0, 1)", self.tau)));
        }
        Ok(())
    }
}

/// Pointwise densities of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityFields {
    /// `ε|∇u|²/2 + W(u)/ε`.
    pub mu: ScalarField,
    /// `ε|∇u|²/2 − W(u)/ε`.
    pub xi: ScalarField,
    pub xi_plus: ScalarField,
    /// `ε|∇u|²·√(1 − ν_e²)` for the chosen axis `e`.
    pub tilt_e: ScalarField,
    pub grad_mag: ScalarField,
    pub grad: VectorField,
    pub axis: usize,
}

pub fn density_fields(state: &PhaseFieldState, axis: usize) -> Result<DensityFields> {
    let g = *state.grid();
    if axis >= g.dim() {
        return Err(Error::arg(format!("axis {axis} out of range for dimension {}", g.dim())));
    }
    let eps = state.epsilon();
    let grad = gradient(state.u());
    let u = state.u().values();
    let gv = grad.values();
    let dim = g.dim();
    let sq = |i: usize| (0..dim).map(|a| gv[i][a] * gv[i][a]).sum::<f64>();
    let field = |f: &(dyn Fn(usize) -> f64 + Sync)| ScalarField::from_vec(g, exec::map(g.len(), f));
    let mu = field(&|i| 0.5 * eps * sq(i) + double_well(u[i]) / eps);
    let xi = field(&|i| 0.5 * eps * sq(i) - double_well(u[i]) / eps);
    let xi_plus = xi.map(|v| v.max(0.0));
    let tilt_e = field(&|i| {
        let s = sq(i);
        eps * s.sqrt() * (s - gv[i][axis] * gv[i][axis]).max(0.0).sqrt()
    });
    let grad_mag = field(&|i| sq(i).sqrt());
    Ok(DensityFields { mu, xi, xi_plus, tilt_e, grad_mag, grad, axis })
}

/// `∫_region ε|∇u|²√(1 − ν_e²)`.
pub fn tilt_excess(fields: &DensityFields, region: &Region, supersample: usize) -> Result<f64> {
    integrate(&fields.tilt_e, region, supersample)
}

/// Curvature quotient integrand and its complement on a state.
struct CurvatureSplit {
    /// `(|f|/(ε|∇u|))^{q0}·ε|∇u|²` on included nodes, else 0.
    weighted: ScalarField,
    /// `ε|∇u|²` on excluded nodes.
    excluded: ScalarField,
    /// `ε|∇u|²` everywhere.
    grad_energy: ScalarField,
}

fn curvature_split(state: &PhaseFieldState, q0: f64, threshold: f64) -> CurvatureSplit {
    let g = *state.grid();
    let eps = state.epsilon();
    let grad = gradient(state.u()).norm();
    let gm = grad.values();
    let f = state.f().values();
    let weighted = exec::map(g.len(), |i| {
        let eg = eps * gm[i];
        if eg >= threshold && eg > 0.0 {
            (f[i].abs() / eg).powf(q0) * eg * gm[i]
        } else {
            0.0
        }
    });
    let excluded = exec::map(g.len(), |i| {
        let eg = eps * gm[i];
        if eg >= threshold && eg > 0.0 {
            0.0
        } else {
            eg * gm[i]
        }
    });
    let grad_energy = exec::map(g.len(), |i| eps * gm[i] * gm[i]);
    CurvatureSplit {
        weighted: ScalarField::from_vec(g, weighted),
        excluded: ScalarField::from_vec(g, excluded),
        grad_energy: ScalarField::from_vec(g, grad_energy),
    }
}

/// `Λ̂ = ∫_region (|f|/(ε|∇u|))^{q0} ε|∇u|²` over nodes with
/// `ε|∇u| ≥ grad_threshold`, and the share of `ε|∇u|²` mass left out.
pub fn diffuse_mean_curvature_norm(
    state: &PhaseFieldState,
    params: &AnalysisParams,
    region: &Region,
) -> Result<(f64, f64)> {
    params.validate(state.grid().dim())?;
    let s = curvature_split(state, params.q0, params.grad_threshold);
    let ss = params.supersample;
    let lambda_hat = integrate(&s.weighted, region, ss)?;
    let total = integrate(&s.grad_energy, region, ss)?;
    let excluded = integrate(&s.excluded, region, ss)?;
    let fraction = if total > 0.0 { excluded / total } else { 0.0 };
    Ok((lambda_hat, fraction))
}

/// Scalar diagnostics of a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub total_energy: f64,
    pub sup_u: f64,
    pub lambda_hat: f64,
    pub sup_eps_grad: f64,
    pub xi_plus_mass: f64,
    /// `∫|ξ| / ∫μ` (zero when `μ ≡ 0`).
    pub xi_abs_over_mu: f64,
    /// `ε^{−1}∫f²`.
    pub f_l2_over_eps: f64,
    pub excluded_mass_fraction: f64,
}

impl NormReport {
    /// `(name, value)` pairs in a fixed order.
    pub fn entries(&self) -> [(&'static str, f64); 8] {
        [
            ("total_energy", self.total_energy),
            ("sup_u", self.sup_u),
            ("lambda_hat", self.lambda_hat),
            ("sup_eps_grad", self.sup_eps_grad),
            ("xi_plus_mass", self.xi_plus_mass),
            ("xi_abs_over_mu", self.xi_abs_over_mu),
            ("f_l2_over_eps", self.f_l2_over_eps),
            ("excluded_mass_fraction", self.excluded_mass_fraction),
        ]
    }
}

pub fn norm_report(state: &PhaseFieldState, params: &AnalysisParams) -> Result<NormReport> {
    let g = *state.grid();
    params.validate(g.dim())?;
    let eps = state.epsilon();
    let d = density_fields(state, 0)?;
    let total_energy = whole_sum(&g, d.mu.values());
    let xi_abs = whole_sum(&g, &d.xi.values().iter().map(|v| v.abs()).collect::<Vec<_>>());
    let xi_plus_mass = whole_sum(&g, d.xi_plus.values());
    let f = state.f().values();
    let f_l2_over_eps = whole_sum(&g, &f.iter().map(|v| v * v).collect::<Vec<_>>()) / eps;
    let (lambda_hat, excluded_mass_fraction) = diffuse_mean_curvature_norm(state, params, &Region::Whole)?;
    let gm = d.grad_mag.values();
    Ok(NormReport {
        total_energy,
        sup_u: state.u().max_abs(),
        lambda_hat,
        sup_eps_grad: eps * exec::max(gm.len(), |i| gm[i]).max(0.0),
        xi_plus_mass,
        xi_abs_over_mu: if total_energy > 0.0 { xi_abs / total_energy } else { 0.0 },
        f_l2_over_eps,
        excluded_mass_fraction,
    })
}

/// Both sides of the Hölder chain `Λ̂ ≤ C₁²·C₂^{q0−2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderCheck {
    pub q0: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// With `q0 = t(s−2)/s + 2`, compares `Λ̂` (at that exponent) against
/// `ε^{−1}(∫_A |f/(ε|∇u|)|^t)^{(s−2)/s}(∫|f|^s)^{2/s}`, where `A` is the
/// thresholded set. For `t = 0` the first factor is the measure of `A`.
pub fn corollary_holder_check(state: &PhaseFieldState, s: f64, t: f64, params: &AnalysisParams) -> Result<HolderCheck> {
    if !(s > 2.0 && s.is_finite()) {
        return Err(Error::arg(format!("s = {s} must exceed 2")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::arg(format!("t = {t} must be nonnegative")));
    }
    let g = *state.grid();
    let q0 = t * (s - 2.0) / s + 2.0;
    let n = g.dim() as f64 - 1.0;
    if q0 <= n {
        return Err(Error::arg(format!("q0 = {q0} does not exceed n = {n}")));
    }
    let eps = state.epsilon();
    let split = curvature_split(state, q0, params.grad_threshold);
    let lhs = whole_sum(&g, split.weighted.values());
    let gm = gradient(state.u()).norm();
    let gm = gm.values();
    let f = state.f().values();
    let quotient_t = exec::map(g.len(), |i| {
        let eg = eps * gm[i];
        if eg >= params.grad_threshold && eg > 0.0 {
            if t == 0.0 {
                1.0
            } else {
                (f[i].abs() / eg).powf(t)
            }
        } else {
            0.0
        }
    });
    let c2 = whole_sum(&g, &quotient_t);
    let fs = whole_sum(&g, &exec::map(g.len(), |i| f[i].abs().powf(s)));
    let rhs = c2.powf((s - 2.0) / s) * fs.powf(2.0 / s) / eps;
    Ok(HolderCheck { q0, lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-9) })
}

/// Both sides of the first-variation identity
///
/// ```text
///     ∫ (div η − ∇η(ν,ν)) dμ  =  ∫ f ⟨∇u, η⟩  +  ∫ ∇η(ν,ν) dξ
/// ```
///
/// with `∇η(a, b) = a_i b_j ∂_i η_j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstVariation {
    /// `δV(η)`.
    pub lhs: f64,
    pub rhs: f64,
    pub forcing_term: f64,
    pub discrepancy_term: f64,
    /// `|lhs − rhs| / (1 + |lhs| + |rhs|)`.
    pub residual: f64,
}

fn check_compact_support(g: &Grid, eta: &VectorField) -> Result<()> {
    if g.boundary() == Boundary::Periodic {
        return Ok(());
    }
    let margin = 4.0 * g.h() * (1.0 - 1e-9);
    for (i, v) in eta.values().iter().enumerate() {
        let x = g.coord(i);
        if g.distance_to_boundary(&x) < margin && v.iter().any(|c| *c != 0.0) {
            return Err(Error::arg(format!(
                "test field does not vanish within 4h of the boundary (node at {:?})",
                &x[..g.dim()]
            )));
        }
    }
    Ok(())
}

/// Central-difference Jacobian `J[i][j] = ∂_i η_j`.
fn jacobian(eta: &VectorField) -> Vec<[[f64; 3]; 3]> {
    let g = *eta.grid();
    let dim = g.dim();
    let comps: Vec<VectorField> = (0..dim).map(|j| gradient(&eta.component(j))).collect();
    exec::map(g.len(), |k| {
        let mut jac = [[0.0; 3]; 3];
        for (j, c) in comps.iter().enumerate() {
            for (i, row) in jac.iter_mut().enumerate().take(dim) {
                row[j] = c.values()[k][i];
            }
        }
        jac
    })
}

pub fn first_variation_identity(state: &PhaseFieldState, eta: &VectorField) -> Result<FirstVariation> {
    let g = *state.grid();
    g.check_same(eta.grid())?;
    check_compact_support(&g, eta)?;
    let d = density_fields(state, 0)?;
    let jac = jacobian(eta);
    let dim = g.dim();
    let gv = d.grad.values();
    let ev = eta.values();
    let mu = d.mu.values();
    let xi = d.xi.values();
    let f = state.f().values();
    // ∇η(ν,ν) and div η per node.
    let nn = exec::map(g.len(), |k| {
        let s: f64 = (0..dim).map(|a| gv[k][a] * gv[k][a]).sum();
        if s == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                acc += gv[k][i] * gv[k][j] * jac[k][i][j];
            }
        }
        acc / s
    });
    let lhs_density = exec::map(g.len(), |k| {
        let div: f64 = (0..dim).map(|a| jac[k][a][a]).sum();
        (div - nn[k]) * mu[k]
    });
    let forcing = exec::map(g.len(), |k| f[k] * (0..dim).map(|a| gv[k][a] * ev[k][a]).sum::<f64>());
    let disc = exec::map(g.len(), |k| nn[k] * xi[k]);
    let lhs = whole_sum(&g, &lhs_density);
    let forcing_term = whole_sum(&g, &forcing);
    let discrepancy_term = whole_sum(&g, &disc);
    let rhs = forcing_term + discrepancy_term;
    Ok(FirstVariation {
        lhs,
        rhs,
        forcing_term,
        discrepancy_term,
        residual: (lhs - rhs).abs() / (1.0 + lhs.abs() + rhs.abs()),
    })
}

/// `|δV(η)| ≤ Λ̂^{1/q0}·‖η‖_{L^{q0/(q0−1)}(μ)}`, evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualityBound {
    pub first_variation: f64,
    pub bound: f64,
    pub holds: bool,
}

pub fn duality_bound(
    state: &PhaseFieldState,
    eta: &VectorField,
    first_variation: f64,
    params: &AnalysisParams,
) -> Result<DualityBound> {
    let g = *state.grid();
    g.check_same(eta.grid())?;
    let (lambda_hat, _) = diffuse_mean_curvature_norm(state, params, &Region::Whole)?;
    let q = params.q0 / (params.q0 - 1.0);
    let d = density_fields(state, 0)?;
    let mu = d.mu.values();
    let ev = eta.values();
    let dens = exec::map(g.len(), |k| {
        let n = (ev[k][0] * ev[k][0] + ev[k][1] * ev[k][1] + ev[k][2] * ev[k][2]).sqrt();
        n.powf(q) * mu[k]
    });
    let norm = whole_sum(&g, &dens).powf(1.0 / q);
    let bound = lambda_hat.powf(1.0 / params.q0) * norm;
    Ok(DualityBound { first_variation, bound, holds: first_variation.abs() <= bound * (1.0 + 1e-6) })
}

/// Smooth test vector field supported in the box shrunk by `inset` on every
/// side: a product of `exp(−1/(1−s²))` bumps times random low-frequency
/// sinusoids, one per component. Deterministic in `seed`.
pub fn test_vector_field(grid: &Grid, seed: u64, inset: f64) -> Result<VectorField> {
    let dim = grid.dim();
    let lo = grid.lower();
    let up = grid.upper();
    let mut centre = [0.0; 3];
    let mut half = [1.0; 3];
    for a in 0..dim {
        centre[a] = 0.5 * (lo[a] + up[a]);
        half[a] = 0.5 * (up[a] - lo[a]) - inset;
        if !(half[a] > 0.0) {
            return Err(Error::arg(format!("inset {inset} leaves no support along axis {a}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = [[([0.0f64; 3], 0.0f64, 0.0f64); 2]; 3];
    for comp in modes.iter_mut().take(dim) {
        for m in comp.iter_mut() {
            let mut k = [0.0; 3];
            for kk in k.iter_mut().take(dim) {
                *kk = rng.gen_range(-3.0..3.0) * std::f64::consts::PI / half[0].max(1e-12) * 0.25;
            }
            *m = (k, rng.gen_range(0.0..std::f64::consts::TAU), rng.gen_range(-1.0..1.0));
        }
    }
    let bump = |s: f64| if s.abs() < 1.0 { (1.0 - 1.0 / (1.0 - s * s)).exp() } else { 0.0 };
    Ok(VectorField::from_fn(*grid, move |x| {
        let mut b = 1.0;
        for a in 0..dim {
            b *= bump((x[a] - centre[a]) / half[a]);
        }
        let mut v = [0.0; 3];
        if b == 0.0 {
            return v;
        }
        for (c, comp) in modes.iter().enumerate().take(dim) {
            v[c] = b * comp
                .iter()
                .map(|(k, phase, amp)| {
                    let arg: f64 = (0..dim).map(|a| k[a] * x[a]).sum::<f64>() + phase;
                    amp * arg.sin()
                })
                .sum::<f64>();
        }
        v
    }))
}

/// `μ` mass on the transition band `|u| < 1 − τ` and on its complement.
pub fn transition_region_split(state: &PhaseFieldState, params: &AnalysisParams) -> Result<(f64, f64)> {
    params.validate(state.grid().dim())?;
    let g = *state.grid();
    let d = density_fields(state, 0)?;
    let u = state.u().values();
    let mu = d.mu.values();
    let cut = 1.0 - params.tau;
    let inside = exec::map(g.len(), |i| if u[i].abs() < cut { mu[i] } else { 0.0 });
    let outside = exec::map(g.len(), |i| if u[i].abs() < cut { 0.0 } else { mu[i] });
    Ok((whole_sum(&g, &inside), whole_sum(&g, &outside)))
}
