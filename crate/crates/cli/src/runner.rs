//! Executes the analyses of a [`RunConfig`] and collects tables and checks.

use std::path::Path;

use aclab_core::measures::{
    corollary_holder_check, duality_bound, first_variation_identity, norm_report, test_vector_field,
};
use aclab_core::monotonicity::{integrated_monotonicity_check, monotonicity_report, sheet_separation_integral, slab_report};
use aclab_core::proofdevices::{g_delta_ledger, GDeltaParams};
use aclab_core::quantization::{axis_lines, quantization_check, radial_lines, smallest_exceeding_integer, LineSpec};
use aclab_core::scenarios::{Profile, Scenario};
use aclab_core::{PhaseFieldState, ALPHA};
use serde_json::{json, Value};

use crate::config::{Analysis, RunConfig};
use crate::report::{diagnostics_table, Diagnostic, Kind, Table};

/// Tables, checks and analysis errors of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub tables: Vec<Table>,
    pub diagnostics: Vec<Diagnostic>,
    /// Analyses that could not be computed.
    pub errors: Vec<String>,
}

impl RunOutcome {
    /// Failed invariants and errors, plus tolerance misses when `strict`.
    pub fn failures(&self, strict: bool) -> Vec<String> {
        let mut out = self.errors.clone();
        out.extend(
            self.diagnostics
                .iter()
                .filter(|d| d.failed() && (strict || d.kind == Kind::Invariant))
                .map(Diagnostic::describe),
        );
        out
    }

    /// Tolerance misses that do not fail a non-strict run.
    pub fn warnings(&self) -> Vec<String> {
        self.diagnostics
            .iter()
            .filter(|d| d.failed() && d.kind == Kind::Tolerance)
            .map(Diagnostic::describe)
            .collect()
    }

    pub fn table(&self, file: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.file == file)
    }

    pub fn summary(&self, cfg: &RunConfig, strict: bool, metadata: Value) -> Value {
        let failures = self.failures(strict);
        let diagnostics: Vec<Value> = self
            .diagnostics
            .iter()
            .map(|d| {
                json!({
                    "analysis": d.analysis,
                    "epsilon": d.epsilon,
                    "name": d.name,
                    "value": finite(d.value),
                    "relation": d.relation,
                    "limit": d.limit.map(finite),
                    "kind": d.kind.as_str(),
                    "passed": d.passed,
                })
            })
            .collect();
        json!({
            "scenario": cfg.scenario.name,
            "epsilons": cfg.scenario.epsilons,
            "analyses": cfg.analyses.iter().map(|a| a.name()).collect::<Vec<_>>(),
            "strict": strict,
            "status": if failures.is_empty() { "pass" } else { "fail" },
            "files": self.tables.iter().map(|t| t.file.clone()).chain(["diagnostics.csv".to_string()]).collect::<Vec<_>>(),
            "failures": failures,
            "warnings": self.warnings(),
            "diagnostics": diagnostics,
            "metadata": metadata,
        })
    }

    /// Writes every table and `diagnostics.csv` into `dir`.
    pub fn write_tables(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for t in self.tables.iter().chain(std::iter::once(&diagnostics_table(&self.diagnostics))) {
            std::fs::write(dir.join(&t.file), t.to_csv())?;
        }
        Ok(())
    }
}

fn finite(v: f64) -> Value {
    // JSON has no NaN or infinity; such values appear as strings.
    if v.is_finite() {
        json!(v)
    } else {
        json!(crate::report::format_number(v))
    }
}

/// Failure to build the scenario states.
#[derive(Debug, thiserror::Error)]
#[error(transparent)]
pub struct BuildError(#[from] pub aclab_core::Error);

pub fn run(cfg: &RunConfig) -> Result<RunOutcome, BuildError> {
    let states = cfg.scenario.build()?;
    Ok(run_on_states(cfg, &states))
}

/// Runs the analyses on prebuilt states (one per `ε` of the scenario).
pub fn run_on_states(cfg: &RunConfig, states: &[PhaseFieldState]) -> RunOutcome {
    let mut out = RunOutcome { tables: Vec::new(), diagnostics: Vec::new(), errors: Vec::new() };
    let per_eps = |a: Analysis, k: usize| {
        if states.len() == 1 {
            format!("{}.csv", a.name())
        } else {
            format!("{}.eps{k}.csv", a.name())
        }
    };
    for &a in &cfg.analyses {
        log::info!("running {} on `{}`", a.name(), cfg.scenario.name);
        let result = match a {
            Analysis::Gdelta => gdelta(cfg, &mut out),
            Analysis::Sweep => sweep(cfg, states, &mut out),
            Analysis::Quantize => quantize(cfg, states, &per_eps, &mut out),
            _ => states.iter().enumerate().try_for_each(|(k, st)| {
                let file = per_eps(a, k);
                match a {
                    Analysis::Norms => norms(cfg, st, file, &mut out),
                    Analysis::Monotonicity => monotonicity(cfg, st, file, &mut out),
                    Analysis::Slab => slab(cfg, st, file, &mut out),
                    Analysis::Firstvar => firstvar(cfg, st, file, &mut out),
                    _ => unreachable!(),
                }
                .map_err(|e| (st.epsilon(), e))
            }),
        };
        if let Err((eps, e)) = result {
            let at = if eps.is_nan() { String::new() } else { format!(" at epsilon {eps}") };
            out.errors.push(format!("{}{at}: {e}", a.name()));
        }
    }
    out
}

type Step = Result<(), (f64, aclab_core::Error)>;

fn no_eps(e: aclab_core::Error) -> (f64, aclab_core::Error) {
    (f64::NAN, e)
}

fn holder_t(cfg: &RunConfig, dim: usize) -> f64 {
    cfg.holder.t.unwrap_or(if dim == 1 { 0.0 } else { cfg.holder.s })
}

fn norms(cfg: &RunConfig, st: &PhaseFieldState, file: String, out: &mut RunOutcome) -> aclab_core::Result<()> {
    let eps = Some(st.epsilon());
    let params = &cfg.scenario.params;
    let r = norm_report(st, params)?;
    let mut t = Table::new(file, &["name", "value"]);
    for (name, v) in r.entries() {
        t.push(vec![name.into(), v.into()]);
    }
    out.tables.push(t);
    let dim = st.grid().dim();
    let h = corollary_holder_check(st, cfg.holder.s, holder_t(cfg, dim), params)?;
    let name = "norms";
    out.diagnostics.push(Diagnostic::info(name, eps, "holder_q0", h.q0));
    out.diagnostics.push(Diagnostic::at_most(name, eps, "holder_lhs", h.lhs, h.rhs, Kind::Invariant).with_outcome(h.holds));
    out.diagnostics.push(Diagnostic::at_most(
        name,
        eps,
        "excluded_mass_fraction",
        r.excluded_mass_fraction,
        1e-6,
        Kind::Tolerance,
    ));
    Ok(())
}

fn domain_midpoint(s: &Scenario) -> [f64; 3] {
    let mut c = [0.0; 3];
    for (a, ca) in c.iter_mut().enumerate().take(s.dim()) {
        *ca = 0.5 * (s.lower[a] + s.upper[a]);
    }
    c
}

/// A point on the first interface of the profile, or the domain midpoint.
pub fn default_center(s: &Scenario) -> [f64; 3] {
    let mut c = domain_midpoint(s);
    match &s.profile {
        Profile::Planar { axis, position } => c[*axis] = *position,
        Profile::Stack { axis, positions } => c[*axis] = positions[0],
        Profile::Radial { center, radius } | Profile::SolvedRadial { center, radius, .. } => {
            c = *center;
            c[0] += radius;
        }
        Profile::Constant { .. } => {}
    }
    c
}

fn radii(cfg: &RunConfig) -> Vec<f64> {
    let m = &cfg.monotonicity;
    (0..m.count)
        .map(|k| if k + 1 == m.count { m.r_max } else { m.r_min + (m.r_max - m.r_min) * k as f64 / (m.count - 1) as f64 })
        .collect()
}

fn monotonicity(cfg: &RunConfig, st: &PhaseFieldState, file: String, out: &mut RunOutcome) -> aclab_core::Result<()> {
    let eps = Some(st.epsilon());
    let center = cfg.monotonicity.center.unwrap_or_else(|| default_center(&cfg.scenario));
    let params = &cfg.scenario.params;
    let rep = monotonicity_report(st, center, &radii(cfg), params.supersample)?;
    let mut t = Table::new(file, &["r", "ratio", "lhs", "term_xi", "term_boundary", "term_forcing", "residual"]);
    for r in &rep.rows {
        t.push(vec![
            r.r.into(),
            r.ratio.into(),
            r.lhs.into(),
            r.term_xi.into(),
            r.term_boundary.into(),
            r.term_forcing.into(),
            r.residual.into(),
        ]);
    }
    out.tables.push(t);
    let name = "monotonicity";
    out.diagnostics.push(Diagnostic::at_most(
        name,
        eps,
        "aggregate_residual",
        rep.aggregate_residual,
        cfg.monotonicity.tolerance,
        Kind::Tolerance,
    ));
    out.diagnostics.push(Diagnostic::at_least(
        name,
        eps,
        "min_boundary_over_scale",
        rep.min_boundary_over_scale(),
        -1e-10,
        Kind::Invariant,
    ));
    let ic = integrated_monotonicity_check(st, &rep, params)?;
    out.diagnostics.push(Diagnostic::info(name, eps, "integrated_constant", ic.c));
    out.diagnostics.push(Diagnostic::info(name, eps, "integrated_factor", ic.factor));
    out.diagnostics.push(Diagnostic::at_least(name, eps, "integrated_min_margin", ic.min_margin, 0.0, Kind::Tolerance));
    Ok(())
}

fn slab(cfg: &RunConfig, st: &PhaseFieldState, file: String, out: &mut RunOutcome) -> aclab_core::Result<()> {
    let eps = Some(st.epsilon());
    let s = &cfg.scenario;
    let dim = s.dim();
    let last = dim - 1;
    let center = cfg.monotonicity.center.unwrap_or_else(|| default_center(s));
    let m = &cfg.monotonicity;
    let t1 = cfg.slab.t1.unwrap_or(center[last] - 0.5 * m.r_min);
    let t2 = cfg.slab.t2.unwrap_or(center[last] + m.r_max + 0.5 * m.r_min);
    let rep = slab_report(st, center, &radii(cfg), t1, t2, s.params.supersample)?;
    let mut t = Table::new(
        file,
        &["r", "ratio", "lhs", "term_xi", "term_boundary", "term_forcing", "plane_t1", "plane_t2", "residual"],
    );
    for r in &rep.rows {
        t.push(vec![
            r.r.into(),
            r.ratio.into(),
            r.lhs.into(),
            r.term_xi.into(),
            r.term_boundary.into(),
            r.term_forcing.into(),
            r.plane_t1.into(),
            r.plane_t2.into(),
            r.residual.into(),
        ]);
    }
    out.tables.push(t);
    let name = "slab";
    out.diagnostics.push(Diagnostic::info(name, eps, "t1", t1));
    out.diagnostics.push(Diagnostic::info(name, eps, "t2", t2));
    out.diagnostics.push(Diagnostic::at_most(
        name,
        eps,
        "aggregate_residual",
        rep.aggregate_residual,
        cfg.slab.tolerance,
        Kind::Tolerance,
    ));
    // Seen from the first sheet of a stack along the last axis, across the
    // midplane to the second.
    if let Profile::Stack { axis, positions } = &s.profile {
        if *axis == last && positions.len() >= 2 {
            let mid = 0.5 * (positions[0] + positions[1]);
            let mut x = domain_midpoint(s);
            x[last] = positions[0];
            let v = sheet_separation_integral(st, x, mid, st.epsilon(), m.r_max, s.params.supersample)?;
            out.diagnostics.push(Diagnostic::info(name, eps, "sheet_separation_midplane", v));
        }
    }
    Ok(())
}

/// Lines crossing the interfaces of the profile.
pub fn default_lines(s: &Scenario, st: &PhaseFieldState, count: usize) -> aclab_core::Result<Vec<LineSpec>> {
    let g = st.grid();
    match &s.profile {
        Profile::Planar { axis, .. } | Profile::Stack { axis, .. } => axis_lines(g, *axis, count),
        Profile::Radial { center, .. } | Profile::SolvedRadial { center, .. } => {
            let reach = g.distance_to_boundary(&center[..g.dim()]) - g.h();
            radial_lines(g, *center, reach, count)
        }
        Profile::Constant { .. } => axis_lines(g, 0, count),
    }
}

fn quantize(
    cfg: &RunConfig,
    states: &[PhaseFieldState],
    file: &dyn Fn(Analysis, usize) -> String,
    out: &mut RunOutcome,
) -> Step {
    let name = "quantize";
    let s = &cfg.scenario;
    let mut ks: Vec<Vec<u64>> = Vec::new();
    for (k, st) in states.iter().enumerate() {
        let eps = Some(st.epsilon());
        let fail = |e| (st.epsilon(), e);
        let lines = default_lines(s, st, cfg.quantize.lines).map_err(fail)?;
        let rep = quantization_check(st, &lines, s.params.tau).map_err(fail)?;
        let mut t = Table::new(
            file(Analysis::Quantize, k),
            &["line_id", "K", "theta_hat", "nearest_k", "residual", "potential_per_layer_min", "potential_per_layer_max"],
        );
        let mut worst_potential: f64 = 0.0;
        let mut min_share: f64 = 1.0;
        for l in &rep.lines {
            t.push(vec![
                l.line_id.into(),
                l.layer_count.into(),
                l.theta_hat.into(),
                l.nearest_k.into(),
                l.residual.into(),
                l.potential_min().into(),
                l.potential_max().into(),
            ]);
            for p in &l.potential_per_layer {
                worst_potential = worst_potential.max((p / (0.5 * ALPHA) - 1.0).abs());
            }
            min_share = min_share.min(l.window_share());
        }
        out.tables.push(t);
        ks.push(rep.lines.iter().map(|l| l.nearest_k).collect());
        let d = &mut out.diagnostics;
        d.push(Diagnostic::at_most(name, eps, "max_residual", rep.max_residual, cfg.quantize.tolerance, Kind::Tolerance));
        if rep.lines.iter().any(|l| l.layer_count > 0) {
            d.push(Diagnostic::at_most(
                name,
                eps,
                "max_potential_deviation",
                worst_potential,
                cfg.quantize.potential_tolerance,
                Kind::Tolerance,
            ));
            d.push(Diagnostic::at_least(name, eps, "min_window_share", min_share, 0.98, Kind::Tolerance));
        }
        d.push(Diagnostic::info(name, eps, "mean_theta", rep.mean_theta));
        let n = smallest_exceeding_integer(rep.mean_theta).map_err(fail)?;
        d.push(Diagnostic::info(name, eps, "smallest_exceeding_integer", n as f64));
    }
    if ks.len() > 1 {
        let changed = ks.windows(2).map(|w| w[0].iter().zip(&w[1]).filter(|(a, b)| a != b).count()).sum::<usize>();
        out.diagnostics.push(Diagnostic::at_most(name, None, "nearest_k_changes", changed as f64, 0.0, Kind::Tolerance));
    }
    Ok(())
}

fn gdelta(cfg: &RunConfig, out: &mut RunOutcome) -> Step {
    let g = &cfg.gdelta;
    for (k, &delta) in g.deltas.iter().enumerate() {
        let params = GDeltaParams { delta, c0: g.c0, points: g.points };
        let ledger = g_delta_ledger(&params, g.samples).map_err(no_eps)?;
        let file = if g.deltas.len() == 1 { "gdelta.csv".to_string() } else { format!("gdelta.delta{k}.csv") };
        let mut t = Table::new(file, &["inequality", "min_margin"]);
        for (name, m) in ledger.entries() {
            t.push(vec![name.into(), m.into()]);
            out.diagnostics.push(Diagnostic::at_least("gdelta", None, &format!("{name}@delta={delta}"), m, -1e-10, Kind::Invariant));
        }
        out.tables.push(t);
        out.diagnostics.push(Diagnostic::info("gdelta", None, &format!("c_upper@delta={delta}"), ledger.c_upper));
        out.diagnostics.push(Diagnostic::info("gdelta", None, &format!("c_lower@delta={delta}"), ledger.c_lower));
    }
    Ok(())
}

fn firstvar(cfg: &RunConfig, st: &PhaseFieldState, file: String, out: &mut RunOutcome) -> aclab_core::Result<()> {
    let eps = Some(st.epsilon());
    let s = &cfg.scenario;
    let mut t = Table::new(
        file,
        &["seed", "lhs", "rhs", "forcing_term", "discrepancy_term", "residual", "duality_bound"],
    );
    let mut worst_residual: f64 = 0.0;
    let mut worst_slack = f64::INFINITY;
    let mut all_hold = true;
    for k in 0..cfg.firstvar.fields {
        let seed = s.seed.wrapping_add(k as u64);
        let eta = test_vector_field(st.grid(), seed, cfg.firstvar.inset)?;
        let fv = first_variation_identity(st, &eta)?;
        let db = duality_bound(st, &eta, fv.lhs, &s.params)?;
        t.push(vec![
            seed.into(),
            fv.lhs.into(),
            fv.rhs.into(),
            fv.forcing_term.into(),
            fv.discrepancy_term.into(),
            fv.residual.into(),
            db.bound.into(),
        ]);
        worst_residual = worst_residual.max(fv.residual);
        worst_slack = worst_slack.min(db.bound - fv.lhs.abs());
        all_hold &= db.holds;
    }
    out.tables.push(t);
    out.diagnostics.push(Diagnostic::at_most(
        "firstvar",
        eps,
        "max_residual",
        worst_residual,
        cfg.firstvar.tolerance,
        Kind::Tolerance,
    ));
    // The bound is allowed a relative slack of 1e-6.
    out.diagnostics.push(
        Diagnostic::at_least("firstvar", eps, "min_duality_slack", worst_slack, 0.0, Kind::Invariant).with_outcome(all_hold),
    );
    Ok(())
}

fn sweep(cfg: &RunConfig, states: &[PhaseFieldState], out: &mut RunOutcome) -> Step {
    let mut t = Table::new(
        "sweep.csv",
        &["epsilon", "xi_plus_mass", "xi_abs_over_mu", "lambda_hat", "sup_eps_grad", "total_energy"],
    );
    let mut xi_plus = Vec::new();
    for st in states {
        let r = norm_report(st, &cfg.scenario.params).map_err(|e| (st.epsilon(), e))?;
        t.push(vec![
            st.epsilon().into(),
            r.xi_plus_mass.into(),
            r.xi_abs_over_mu.into(),
            r.lambda_hat.into(),
            r.sup_eps_grad.into(),
            r.total_energy.into(),
        ]);
        xi_plus.push(r.xi_plus_mass);
    }
    out.tables.push(t);
    // Counted along the configured ε order; decreasing ε should shrink ξ₊.
    if xi_plus.len() > 1 {
        let order: Vec<usize> = {
            let mut idx: Vec<usize> = (0..states.len()).collect();
            idx.sort_by(|&a, &b| states[b].epsilon().total_cmp(&states[a].epsilon()));
            idx
        };
        let violations = order.windows(2).filter(|w| xi_plus[w[1]] >= xi_plus[w[0]]).count();
        out.diagnostics.push(Diagnostic::at_most(
            "sweep",
            None,
            "xi_plus_non_decreasing_steps",
            violations as f64,
            0.0,
            Kind::Tolerance,
        ));
    }
    Ok(())
}
