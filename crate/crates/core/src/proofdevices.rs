//! The comparison function `G_δ` and its inequality ledger.
//!
//! `G_δ(r) = δ(1 + ∫_{−c₀−1}^{r} exp(−Φ(t)) dt)` with
//! `Φ(t) = ∫_{−c₀−1}^{t} φ`, `φ = (|W′| + δ) / (2(W + δ))`.

use crate::error::{Error, Result};
use crate::phasefield::{double_well, double_well_prime};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GDeltaParams {
    pub delta: f64,
    /// Sup-norm bound on the phase field.
    pub c0: f64,
    /// Quadrature nodes on `[−c₀−1, c₀+1]`.
    pub points: usize,
}

impl GDeltaParams {
    pub fn new(delta: f64, c0: f64) -> Self {
        GDeltaParams { delta, c0, points: 20_000 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(Error::arg(format!("delta = {} must lie in (0, 1/2]", self.delta)));
        }
        if !(self.c0 >= 1.0 && self.c0.is_finite()) {
            return Err(Error::arg(format!("c0 = {} must be at least 1", self.c0)));
        }
        if self.points < 3 {
            return Err(Error::arg("need at least 3 quadrature points"));
        }
        Ok(())
    }

    fn interval(&self) -> (f64, f64) {
        (-self.c0 - 1.0, self.c0 + 1.0)
    }
}

fn phi(s: f64, delta: f64) -> f64 {
    (double_well_prime(s).abs() + delta) / (2.0 * (double_well(s) + delta))
}

/// Tabulated `Φ` and `∫ exp(−Φ)` on the quadrature nodes.
#[derive(Debug, Clone)]
pub struct GDelta {
    params: GDeltaParams,
    step: f64,
    big_phi: Vec<f64>,
    outer: Vec<f64>,
}

impl GDelta {
    pub fn new(params: GDeltaParams) -> Result<Self> {
        params.validate()?;
        let (a, b) = params.interval();
        let n = params.points;
        let step = (b - a) / (n - 1) as f64;
        let node = |i: usize| if i == n - 1 { b } else { a + i as f64 * step };
        let mut big_phi = vec![0.0; n];
        let mut outer = vec![0.0; n];
        let mut prev_phi = phi(a, params.delta);
        let mut prev_e = 1.0;
        for i in 1..n {
            let x = node(i);
            let p = phi(x, params.delta);
            let dx = x - node(i - 1);
            big_phi[i] = big_phi[i - 1] + 0.5 * (prev_phi + p) * dx;
            let e = (-big_phi[i]).exp();
            outer[i] = outer[i - 1] + 0.5 * (prev_e + e) * dx;
            prev_phi = p;
            prev_e = e;
        }
        Ok(GDelta { params, step, big_phi, outer })
    }

    pub fn params(&self) -> &GDeltaParams {
        &self.params
    }

    /// `(G, G′, G″)` at `r`. Between nodes the trapezoid rule is continued
    /// over the partial step.
    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        let (a, b) = self.params.interval();
        if !(r >= a && r <= b) {
            return Err(Error::arg(format!("r = {r} outside [{a}, {b}]")));
        }
        let delta = self.params.delta;
        let n = self.big_phi.len();
        let i = (((r - a) / self.step).floor() as usize).min(n - 1);
        let xi = a + i as f64 * self.step;
        let dx = r - xi;
        let (big_phi, outer) = if dx > 0.0 {
            let p0 = phi(xi, delta);
            let p1 = phi(r, delta);
            let big = self.big_phi[i] + 0.5 * (p0 + p1) * dx;
            (big, self.outer[i] + 0.5 * ((-self.big_phi[i]).exp() + (-big).exp()) * dx)
        } else {
            (self.big_phi[i], self.outer[i])
        };
        let g1 = delta * (-big_phi).exp();
        Ok((delta * (1.0 + outer), g1, -g1 * phi(r, delta)))
    }
}

/// `(G_δ(r), G_δ′(r), G_δ″(r))`.
pub fn g_delta(r: f64, params: &GDeltaParams) -> Result<(f64, f64, f64)> {
    GDelta::new(*params)?.eval(r)
}

/// Names of the checked inequalities, in ledger order.
pub const INEQUALITIES: [&str; 4] = ["delta_le_G", "G_prime_in_0_delta", "G_second_negative", "differential_inequality"];

#[derive(Debug, Clone, PartialEq)]
pub struct GDeltaLedger {
    pub params: GDeltaParams,
    /// Minimum margin of each inequality in [`INEQUALITIES`] order.
    pub min_margins: [f64; 4],
    /// `G(c₀+1)/δ`, the measured constant in `G ≤ Cδ`.
    pub c_upper: f64,
    /// `min G′/δ³` over the samples.
    pub c_lower: f64,
}

impl GDeltaLedger {
    pub fn holds(&self, tol: f64) -> bool {
        self.min_margins.iter().all(|&m| m >= -tol)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        INEQUALITIES.iter().copied().zip(self.min_margins.iter().copied())
    }
}

/// Evaluates the four inequalities at `sample_count` equispaced points of
/// `[−c₀−1, c₀+1]` and keeps the smallest margin of each:
/// `G − δ`, `min(G′, δ − G′)`, `−G″` and `G′W′ − 2G″(W + G) − δG′`.
pub fn g_delta_ledger(params: &GDeltaParams, sample_count: usize) -> Result<GDeltaLedger> {
    if sample_count < 100 {
        return Err(Error::arg(format!("sample_count = {sample_count} is below 100")));
    }
    let table = GDelta::new(*params)?;
    let (a, b) = params.interval();
    let delta = params.delta;
    let mut m = [f64::INFINITY; 4];
    let mut min_g1 = f64::INFINITY;
    for k in 0..sample_count {
        let r = if k + 1 == sample_count { b } else { a + (b - a) * k as f64 / (sample_count - 1) as f64 };
        let (g, g1, g2) = table.eval(r)?;
        let (w, w1) = (double_well(r), double_well_prime(r));
        m[0] = m[0].min(g - delta);
        m[1] = m[1].min(g1.min(delta - g1));
        m[2] = m[2].min(-g2);
        m[3] = m[3].min(g1 * w1 - 2.0 * g2 * (w + g) - delta * g1);
        min_g1 = min_g1.min(g1);
    }
    Ok(GDeltaLedger {
        params: *params,
        min_margins: m,
        c_upper: table.eval(b)?.0 / delta,
        c_lower: min_g1 / delta.powi(3),
    })
}
