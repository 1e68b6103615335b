//! Layer detection along lines and integer quantization of layer energy.

use crate::error::{Error, Result};
use crate::fields::quadrature::line_sample_raw;
use crate::fields::{Grid, LineSample};
use crate::measures::density_fields;
use crate::phasefield::{double_well, PhaseFieldState};
use crate::ALPHA;

/// A segment `base + s·direction`, `s ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSpec {
    pub base: [f64; 3],
    pub direction: [f64; 3],
}

impl LineSpec {
    pub fn length(&self) -> f64 {
        self.direction.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// Arc-length window `[start, end]` around one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerWindow {
    pub start: f64,
    pub end: f64,
}

/// Maximal runs of samples with `|u| ≤ 1 − τ`, each widened by `3ε` on both
/// sides (clipped to the line) and merged where they overlap.
pub fn detect_layers(samples: &[LineSample], tau: f64, epsilon: f64) -> Result<Vec<LayerWindow>> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::arg(format!("tau = {tau} must lie in (0, 1)")));
    }
    if !(epsilon > 0.0) {
        return Err(Error::arg("epsilon must be positive"));
    }
    let Some((first, last)) = samples.first().zip(samples.last()) else {
        return Ok(Vec::new());
    };
    let (t_lo, t_hi) = (first.t.min(last.t), first.t.max(last.t));
    let cut = 1.0 - tau;
    let mut runs: Vec<LayerWindow> = Vec::new();
    let mut open: Option<(f64, f64)> = None;
    for s in samples {
        if s.value.abs() <= cut {
            open = Some(match open {
                Some((a, _)) => (a, s.t),
                None => (s.t, s.t),
            });
        } else if let Some((a, b)) = open.take() {
            runs.push(LayerWindow { start: a.min(b), end: a.max(b) });
        }
    }
    if let Some((a, b)) = open {
        runs.push(LayerWindow { start: a.min(b), end: a.max(b) });
    }
    runs.sort_by(|a, b| a.start.total_cmp(&b.start));
    let widen = 3.0 * epsilon;
    let mut merged: Vec<LayerWindow> = Vec::new();
    for r in runs {
        let w = LayerWindow { start: (r.start - widen).max(t_lo), end: (r.end + widen).min(t_hi) };
        match merged.last_mut() {
            Some(prev) if w.start <= prev.end => prev.end = prev.end.max(w.end),
            _ => merged.push(w),
        }
    }
    Ok(merged)
}

/// `∫_a^b` of the piecewise-linear interpolant of `(ts, ys)`, `ts` ascending.
fn integrate_between(ts: &[f64], ys: &[f64], a: f64, b: f64) -> f64 {
    let mut acc = 0.0;
    for k in 0..ts.len().saturating_sub(1) {
        let (t0, t1) = (ts[k], ts[k + 1]);
        let lo = t0.max(a);
        let hi = t1.min(b);
        if hi <= lo {
            continue;
        }
        let at = |t: f64| ys[k] + (ys[k + 1] - ys[k]) * (t - t0) / (t1 - t0);
        acc += 0.5 * (at(lo) + at(hi)) * (hi - lo);
    }
    acc
}

/// Quantization diagnostics of one line.
#[derive(Debug, Clone, PartialEq)]
pub struct LineReport {
    pub line_id: usize,
    /// Number of detected transition windows.
    pub layer_count: usize,
    pub windows: Vec<LayerWindow>,
    /// `∫ μ` along the line.
    pub theta_hat: f64,
    /// `round(theta_hat / α)`, halves rounded up.
    pub nearest_k: u64,
    /// `|theta_hat − nearest_k·α| / α`.
    pub residual: f64,
    /// `∫ W(u)/ε` over each window.
    pub potential_per_layer: Vec<f64>,
    /// `∫ μ` over each window.
    pub energy_per_layer: Vec<f64>,
}

impl LineReport {
    /// Share of the line energy carried by the windows.
    pub fn window_share(&self) -> f64 {
        if self.theta_hat > 0.0 {
            self.energy_per_layer.iter().sum::<f64>() / self.theta_hat
        } else {
            1.0
        }
    }

    pub fn potential_min(&self) -> f64 {
        self.potential_per_layer.iter().copied().fold(f64::NAN, f64::min)
    }

    pub fn potential_max(&self) -> f64 {
        self.potential_per_layer.iter().copied().fold(f64::NAN, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationReport {
    pub lines: Vec<LineReport>,
    pub mean_theta: f64,
    pub mean_residual: f64,
    pub max_residual: f64,
}

/// Round-half-up of `theta / α`.
pub fn nearest_multiple(theta: f64) -> u64 {
    (theta / ALPHA + 0.5).floor().max(0.0) as u64
}

/// Smallest `N` with `N·α > theta`.
pub fn smallest_exceeding_integer(theta_hat: f64) -> Result<u64> {
    if !(theta_hat >= 0.0 && theta_hat.is_finite()) {
        return Err(Error::arg(format!("theta = {theta_hat} must be finite and nonnegative")));
    }
    Ok((theta_hat / ALPHA).floor() as u64 + 1)
}

/// Integrates `μ` along each line, detects transition windows, and measures
/// the potential energy inside each window.
pub fn quantization_check(state: &PhaseFieldState, lines: &[LineSpec], tau: f64) -> Result<QuantizationReport> {
    let g = *state.grid();
    let eps = state.epsilon();
    let d = density_fields(state, 0)?;
    let pot: Vec<f64> = state.u().values().iter().map(|&u| double_well(u) / eps).collect();
    let mut reports = Vec::with_capacity(lines.len());
    for (id, line) in lines.iter().enumerate() {
        let len = line.length();
        if !(len > 0.0) {
            return Err(Error::arg(format!("line {id} has zero length")));
        }
        let count = ((len / (0.25 * g.h())).ceil() as usize + 1).max(2);
        let u = line_sample_raw(&g, state.u().values(), line.base, line.direction, count)?;
        let mu = line_sample_raw(&g, d.mu.values(), line.base, line.direction, count)?;
        let w = line_sample_raw(&g, &pot, line.base, line.direction, count)?;
        let ts: Vec<f64> = u.iter().map(|s| s.t).collect();
        let mu_v: Vec<f64> = mu.iter().map(|s| s.value).collect();
        let w_v: Vec<f64> = w.iter().map(|s| s.value).collect();
        let windows = detect_layers(&u, tau, eps)?;
        let theta_hat = integrate_between(&ts, &mu_v, ts[0], ts[ts.len() - 1]).max(0.0);
        let nearest_k = nearest_multiple(theta_hat);
        reports.push(LineReport {
            line_id: id,
            layer_count: windows.len(),
            theta_hat,
            nearest_k,
            residual: (theta_hat - nearest_k as f64 * ALPHA).abs() / ALPHA,
            potential_per_layer: windows.iter().map(|w| integrate_between(&ts, &w_v, w.start, w.end)).collect(),
            energy_per_layer: windows.iter().map(|w| integrate_between(&ts, &mu_v, w.start, w.end)).collect(),
            windows,
        });
    }
    let n = reports.len().max(1) as f64;
    Ok(QuantizationReport {
        mean_theta: reports.iter().map(|r| r.theta_hat).sum::<f64>() / n,
        mean_residual: reports.iter().map(|r| r.residual).sum::<f64>() / n,
        max_residual: reports.iter().map(|r| r.residual).fold(0.0, f64::max),
        lines: reports,
    })
}

/// `count` full-length lines parallel to `axis`, at transverse positions
/// spread over the middle half of the box.
pub fn axis_lines(grid: &Grid, axis: usize, count: usize) -> Result<Vec<LineSpec>> {
    let dim = grid.dim();
    if axis >= dim {
        return Err(Error::arg(format!("axis {axis} out of range")));
    }
    if count == 0 {
        return Err(Error::arg("need at least one line"));
    }
    let lo = grid.lower();
    let ext = grid.extent();
    Ok((0..count)
        .map(|k| {
            let s = if count == 1 { 0.5 } else { 0.25 + 0.5 * k as f64 / (count - 1) as f64 };
            let mut base = [0.0; 3];
            let mut direction = [0.0; 3];
            for a in 0..dim {
                if a == axis {
                    base[a] = lo[a];
                    direction[a] = ext[a];
                } else {
                    // Successive transverse axes use staggered fractions so 3-d
                    // lines do not all sit on one diagonal.
                    let frac = if a < axis || a == axis + 1 { s } else { 1.0 - s };
                    base[a] = lo[a] + frac * ext[a];
                }
            }
            LineSpec { base, direction }
        })
        .collect())
}

/// `count` rays from `center` to a distance `length`, evenly spread in angle
/// (in the plane of the first two axes; along `±x` in one dimension).
pub fn radial_lines(grid: &Grid, center: [f64; 3], length: f64, count: usize) -> Result<Vec<LineSpec>> {
    if count == 0 {
        return Err(Error::arg("need at least one line"));
    }
    let dim = grid.dim();
    Ok((0..count)
        .map(|k| {
            let mut direction = [0.0; 3];
            if dim == 1 {
                direction[0] = if k % 2 == 0 { length } else { -length };
            } else {
                let phi = std::f64::consts::TAU * (k as f64 + 0.5) / count as f64;
                direction[0] = length * phi.cos();
                direction[1] = length * phi.sin();
            }
            LineSpec { base: center, direction }
        })
        .collect())
}
