//! Stationary solver: damped Newton on the discrete residual with an
//! energy-descent safeguard and a stabilized gradient-flow fallback.
//!
//! With node weights `w` (trapezoid weights on zero-flux grids) the operator
//! `diag(w)·Δ_h` is symmetric, and the discrete residual is the negative
//! gradient of
//!
//! ```text
//!     E(u) = h^d Σ w_i [ −(ε/2) u_i (Δ_h u)_i + W(u_i)/ε + f_i u_i ].
//! ```
//!
//! Newton steps are solved with preconditioned MINRES, which tolerates the
//! indefinite Jacobians met away from stable states, and damped by
//! backtracking on `Σ w R²`. Residual-based damping matters for layers under
//! their own curvature forcing: such states are degenerate critical points
//! of `E` (flat to third order along the radial mode), so energy descent
//! would slowly shrink the layer instead of converging. A Newton step along
//! markedly negative curvature heads for an unstable state; it is replaced
//! by a step from a shifted, positive definite system, damped by
//! backtracking on `E`. Both linear solvers use fixed-order reductions, so
//! the iteration is deterministic.

use super::{check_resolution, double_well, double_well_prime, double_well_second, PhaseFieldState};
use crate::error::{Error, Result};
use crate::exec;
use crate::fields::{laplacian_into, Grid, ScalarField};

const LINEAR_RTOL: f64 = 1e-14;
const ARMIJO: f64 = 1e-4;
const FLOW_STEPS: usize = 10;
const NEGATIVE_CURVATURE: f64 = 0.1;

struct Problem<'a> {
    grid: Grid,
    eps: f64,
    f: &'a [f64],
    w: Vec<f64>,
    cell: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    exec::sum(a.len(), |i| a[i] * b[i])
}

fn max_abs(a: &[f64]) -> f64 {
    exec::max(a.len(), |i| a[i].abs())
}

impl Problem<'_> {
    fn residual(&self, u: &[f64], out: &mut [f64]) {
        let mut lap = vec![0.0; u.len()];
        laplacian_into(&self.grid, u, &mut lap);
        let eps = self.eps;
        let f = self.f;
        exec::fill(out, |i| eps * lap[i] - double_well_prime(u[i]) / eps - f[i]);
    }

    fn energy(&self, u: &[f64], lap: &mut [f64]) -> (f64, f64) {
        laplacian_into(&self.grid, u, lap);
        let eps = self.eps;
        let terms = |i: usize| {
            [-0.5 * eps * u[i] * lap[i], double_well(u[i]) / eps, self.f[i] * u[i]]
        };
        let e = exec::sum(u.len(), |i| self.w[i] * terms(i).iter().sum::<f64>());
        let mag = exec::sum(u.len(), |i| self.w[i] * terms(i).iter().map(|t| t.abs()).sum::<f64>());
        (e * self.cell, mag * self.cell)
    }

    /// `out = w ⊙ (−εΔp + c ⊙ p)`.
    fn apply(&self, c: &[f64], p: &[f64], out: &mut [f64]) {
        let mut lap = vec![0.0; p.len()];
        laplacian_into(&self.grid, p, &mut lap);
        let eps = self.eps;
        exec::fill(out, |i| self.w[i] * (-eps * lap[i] + c[i] * p[i]));
    }

    fn diagonal(&self, c: &[f64]) -> Vec<f64> {
        let lap_diag = 2.0 * self.grid.dim() as f64 / (self.grid.h() * self.grid.h());
        exec::map(c.len(), |i| (self.w[i] * (self.eps * lap_diag + c[i])).abs().max(f64::MIN_POSITIVE))
    }
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// Preconditioned MINRES for a symmetric (possibly indefinite) operator.
fn minres<A>(apply: A, diag: &[f64], b: &[f64], max_iter: usize) -> Vec<f64>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r1 = b.to_vec();
    let mut y: Vec<f64> = (0..n).map(|i| r1[i] / diag[i]).collect();
    let beta1 = dot(&r1, &y).sqrt();
    if beta1 == 0.0 {
        return x;
    }
    let mut r2 = r1.clone();
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut w = vec![0.0; n];
    let mut w2 = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut av = vec![0.0; n];
    for it in 0..max_iter {
        let s = 1.0 / beta;
        exec::fill(&mut v, |i| s * y[i]);
        apply(&v, &mut av);
        y.copy_from_slice(&av);
        if it > 0 {
            axpy(&mut y, -beta / oldb, &r1);
        }
        let alfa = dot(&v, &y);
        axpy(&mut y, -alfa / beta, &r2);
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        exec::fill(&mut y, |i| r2[i] / diag[i]);
        oldb = beta;
        beta = dot(&r2, &y).max(0.0).sqrt();
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        // w ← (v − oldeps·w1 − delta·w2)/gamma with (w1, w2) the two previous w.
        let w1 = std::mem::replace(&mut w2, w.clone());
        exec::fill(&mut w, |i| (v[i] - oldeps * w1[i] - delta * w2[i]) * denom);
        axpy(&mut x, phi, &w);
        if phibar <= LINEAR_RTOL * beta1 || beta == 0.0 {
            break;
        }
    }
    x
}

/// Preconditioned conjugate gradients for a symmetric positive definite operator.
fn pcg<A>(apply: A, diag: &[f64], b: &[f64], max_iter: usize) -> Vec<f64>
where
    A: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = (0..n).map(|i| r[i] / diag[i]).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let r0 = dot(&r, &r).sqrt();
    if r0 == 0.0 {
        return x;
    }
    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            break;
        }
        let a = rz / pap;
        axpy(&mut x, a, &p);
        axpy(&mut r, -a, &ap);
        if dot(&r, &r).sqrt() <= LINEAR_RTOL * r0 {
            break;
        }
        exec::fill(&mut z, |i| r[i] / diag[i]);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (p, z) in p.iter_mut().zip(&z) {
            *p = z + beta * *p;
        }
    }
    x
}

struct Iterate {
    u: Vec<f64>,
    r: Vec<f64>,
    rn: f64,
}

impl Problem<'_> {
    fn iterate(&self, u: Vec<f64>) -> Iterate {
        let mut r = vec![0.0; u.len()];
        self.residual(&u, &mut r);
        let rn = max_abs(&r);
        Iterate { u, r, rn }
    }

    /// `pᵀ diag(w) J p / pᵀ diag(w) p` for the Jacobian `J = −εΔ + W″(u)/ε`.
    fn curvature(&self, it: &Iterate, p: &[f64]) -> f64 {
        let eps = self.eps;
        let c: Vec<f64> = exec::map(p.len(), |i| double_well_second(it.u[i]) / eps);
        let mut jp = vec![0.0; p.len()];
        self.apply(&c, p, &mut jp);
        let den = exec::sum(p.len(), |i| self.w[i] * p[i] * p[i]);
        if den > 0.0 {
            dot(p, &jp) / den
        } else {
            0.0
        }
    }

    fn merit(&self, r: &[f64]) -> f64 {
        exec::sum(r.len(), |i| self.w[i] * r[i] * r[i])
    }

    /// Backtracking on the residual merit `Σ w R²` along a Newton direction.
    fn merit_search(&self, it: &Iterate, p: &[f64]) -> Option<Iterate> {
        let phi0 = self.merit(&it.r);
        let mut t = 1.0;
        for _ in 0..30 {
            let next = self.iterate(exec::map(p.len(), |i| it.u[i] + t * p[i]));
            if next.rn.is_finite() && self.merit(&next.r) <= (1.0 - 2.0 * ARMIJO * t) * phi0 {
                return Some(next);
            }
            t *= 0.5;
        }
        None
    }

    /// Backtracking on `E` along `p`; `None` if `p` is not a descent direction
    /// or no acceptable step is found.
    fn line_search(&self, it: &Iterate, p: &[f64]) -> Option<Iterate> {
        let slope = -self.cell * exec::sum(p.len(), |i| self.w[i] * it.r[i] * p[i]);
        if !(slope < 0.0) {
            return None;
        }
        let mut scratch = vec![0.0; p.len()];
        let (e0, mag) = self.energy(&it.u, &mut scratch);
        let noise = 1e-13 * mag;
        let mut t = 1.0;
        for _ in 0..40 {
            let trial: Vec<f64> = exec::map(p.len(), |i| it.u[i] + t * p[i]);
            let (e, _) = self.energy(&trial, &mut scratch);
            let next = self.iterate(trial);
            if !next.rn.is_finite() {
                t *= 0.5;
                continue;
            }
            if e <= e0 + ARMIJO * t * slope {
                return Some(next);
            }
            // Below rounding of E the decrease cannot be measured; fall back
            // to monotone residual.
            if -t * slope <= noise && next.rn <= it.rn {
                return Some(next);
            }
            t *= 0.5;
        }
        None
    }

    fn newton_direction(&self, it: &Iterate, shift: f64, definite: bool) -> Vec<f64> {
        let eps = self.eps;
        let c: Vec<f64> = exec::map(it.u.len(), |i| double_well_second(it.u[i]) / eps + shift);
        let diag = self.diagonal(&c);
        let b: Vec<f64> = exec::map(it.u.len(), |i| self.w[i] * it.r[i]);
        let max_iter = 20 * it.u.len().max(100);
        let op = |p: &[f64], out: &mut [f64]| self.apply(&c, p, out);
        if definite {
            pcg(op, &diag, &b, max_iter)
        } else {
            minres(op, &diag, &b, max_iter)
        }
    }

    /// Stabilized semi-implicit gradient flow
    /// `(1/dt + S/ε − εΔ) u⁺ = u/dt + S u/ε − W′(u)/ε − f`, `S = 2`, `dt = ε`.
    fn flow(&self, mut u: Vec<f64>, steps: usize) -> Vec<f64> {
        let eps = self.eps;
        let dt = eps;
        let stab = 2.0;
        let c = vec![1.0 / dt + stab / eps; u.len()];
        let diag = self.diagonal(&c);
        for _ in 0..steps {
            let b: Vec<f64> = exec::map(u.len(), |i| {
                self.w[i] * (u[i] / dt + stab * u[i] / eps - double_well_prime(u[i]) / eps - self.f[i])
            });
            u = pcg(|p, out| self.apply(&c, p, out), &diag, &b, 20 * u.len().max(100));
        }
        u
    }
}

/// Solves `εΔ_h u − W′(u)/ε = f` from `u_init` until the max-norm residual
/// is at most `tol`. Each Newton step, and each batch of fallback
/// gradient-flow steps, counts as one iteration.
pub fn solve_stationary(
    epsilon: f64,
    f: &ScalarField,
    u_init: &ScalarField,
    tol: f64,
    max_iter: usize,
) -> Result<PhaseFieldState> {
    let grid = *f.grid();
    grid.check_same(u_init.grid())?;
    check_resolution(&grid, epsilon)?;
    if !(tol > 0.0) {
        return Err(Error::arg("solver tolerance must be positive"));
    }
    let w = exec::map(grid.len(), |i| grid.node_weight(grid.multi_index(i)));
    let pb = Problem { grid, eps: epsilon, f: f.values(), w, cell: grid.cell_volume() };
    let mut it = pb.iterate(u_init.values().to_vec());
    let mut best = it.rn;
    let mut done = 0;
    while it.rn > tol && done < max_iter {
        done += 1;
        // Newton steps are taken unless they head along a direction of
        // markedly negative curvature, i.e. toward an unstable state.
        let p = pb.newton_direction(&it, 0.0, false);
        let stable = pb.curvature(&it, &p) >= -NEGATIVE_CURVATURE / epsilon;
        let newton = if stable { pb.merit_search(&it, &p) } else { None };
        let next = newton.or_else(|| {
            let min_c = it.u.iter().map(|&v| double_well_second(v)).fold(f64::INFINITY, f64::min);
            let shift = (1.0 - min_c).max(0.0) / epsilon;
            let p = pb.newton_direction(&it, shift, true);
            pb.line_search(&it, &p)
        });
        it = match next {
            Some(n) => n,
            None => {
                log::debug!("newton stalled at residual {:.3e}; taking gradient-flow steps", it.rn);
                pb.iterate(pb.flow(it.u, FLOW_STEPS))
            }
        };
        if !it.rn.is_finite() {
            break;
        }
        best = best.min(it.rn);
        log::trace!("iteration {done}: residual {:.3e}", it.rn);
    }
    if it.rn <= tol {
        let u = ScalarField::new(grid, it.u)?;
        return PhaseFieldState::new(u, f.clone(), epsilon);
    }
    Err(Error::NotConverged { iterations: done, best_residual: best })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Boundary;
    use crate::phasefield::{build_radial_layer, manufactured_forcing};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn minres_matches_direct_solve_on_indefinite_system() {
        // diag(d) with mixed signs plus a 1-d Laplacian.
        let g = Grid::cube(1, 0.0, 1.0, 40, Boundary::ZeroFlux).unwrap();
        let w = exec::map(g.len(), |i| g.node_weight(g.multi_index(i)));
        let f = vec![0.0; g.len()];
        let pb = Problem { grid: g, eps: 0.1, f: &f, w, cell: g.cell_volume() };
        let c: Vec<f64> = (0..g.len()).map(|i| if i % 3 == 0 { -30.0 } else { 5.0 }).collect();
        let b: Vec<f64> = (0..g.len()).map(|i| ((i as f64) * 0.7).sin()).collect();
        let diag = pb.diagonal(&c);
        let x = minres(|p, out| pb.apply(&c, p, out), &diag, &b, 10_000);
        let mut ax = vec![0.0; g.len()];
        pb.apply(&c, &x, &mut ax);
        let err = ax.iter().zip(&b).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn constant_state_flows_to_plus_one() {
        let g = Grid::cube(2, 0.0, 1.0, 8, Boundary::ZeroFlux).unwrap();
        let f = ScalarField::constant(g, 0.0);
        let u0 = ScalarField::constant(g, 0.3);
        let st = solve_stationary(0.3, &f, &u0, 1e-12, 50).unwrap();
        assert!(st.u().values().iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn exact_start_needs_no_iteration() {
        let eps = 0.1;
        let g = Grid::with_max_spacing(&[-1.0, -1.0], &[1.0, 1.0], eps / 8.0, Boundary::ZeroFlux).unwrap();
        let u = build_radial_layer(g, eps, [0.0; 3], 0.5).unwrap();
        let f = manufactured_forcing(&u, eps).unwrap();
        let st = solve_stationary(eps, &f, &u, 1e-9, 0).unwrap();
        assert_eq!(st.u(), &u);
    }

    #[test]
    fn recovers_manufactured_circle_from_noise() {
        let eps = 0.1;
        let g = Grid::with_max_spacing(&[-1.0, -1.0], &[1.0, 1.0], eps / 8.0, Boundary::ZeroFlux).unwrap();
        let u = build_radial_layer(g, eps, [0.0; 3], 0.5).unwrap();
        let f = manufactured_forcing(&u, eps).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noisy: Vec<f64> = u.values().iter().map(|v| v + 0.01 * rng.gen_range(-1.0..1.0)).collect();
        let u0 = ScalarField::new(g, noisy).unwrap();
        let st = solve_stationary(eps, &f, &u0, 1e-10, 50).unwrap();
        let dev = st.u().values().iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-6, "{dev}");
        assert!(st.residual_norm() <= 1e-10);
    }

    #[test]
    fn single_iteration_far_from_solution_fails() {
        let g = Grid::cube(2, -1.0, 1.0, 33, Boundary::ZeroFlux).unwrap();
        let f = ScalarField::constant(g, 0.0);
        let u0 = ScalarField::from_fn(g, |x| 0.9 * (7.0 * x[0]).sin() * (5.0 * x[1]).cos());
        match solve_stationary(0.25, &f, &u0, 1e-14, 1) {
            Err(Error::NotConverged { iterations, best_residual }) => {
                assert_eq!(iterations, 1);
                assert!(best_residual > 1e-14);
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let g = Grid::cube(2, -1.0, 1.0, 33, Boundary::ZeroFlux).unwrap();
        let f = ScalarField::from_fn(g, |x| 0.3 * x[0]);
        let u0 = ScalarField::from_fn(g, |x| (4.0 * x[1]).tanh());
        let a = solve_stationary(0.25, &f, &u0, 1e-10, 100).unwrap();
        let b = solve_stationary(0.25, &f, &u0, 1e-10, 100).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_arguments() {
        let g = Grid::cube(2, 0.0, 1.0, 11, Boundary::ZeroFlux).unwrap();
        let f = ScalarField::constant(g, 0.0);
        assert!(solve_stationary(0.05, &f, &f, 1e-8, 10).is_err());
        assert!(solve_stationary(0.5, &f, &f, 0.0, 10).is_err());
    }
}
