//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always show. Exits nonzero
//! when any criterion fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use aclab_cli::runner::{default_center, default_lines};
use aclab_core::fields::Region;
use aclab_core::measures::{
    corollary_holder_check, diffuse_mean_curvature_norm, duality_bound, first_variation_identity, norm_report,
    test_vector_field, AnalysisParams,
};
use aclab_core::monotonicity::{density_ratio_profile, monotonicity_report, sheet_separation_integral, slab_report};
use aclab_core::phasefield::constants;
use aclab_core::proofdevices::{g_delta_ledger, GDeltaParams};
use aclab_core::quantization::quantization_check;
use aclab_core::scenarios::{corpus, standard, Resolution, Scenario};
use aclab_core::{PhaseFieldState, ALPHA};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn build(s: &Scenario) -> Result<Vec<PhaseFieldState>, String> {
    s.build().map_err(|e| e.to_string())
}

fn scenario(name: &str) -> Scenario {
    standard(name).expect("corpus entry")
}

fn radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

fn require(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// σ and α against closed-form antiderivatives: `∫(1−t²) = t − t³/3` on
/// `[−1, 1]` and `∫sech⁴ = tanh − tanh³/3` on the line.
fn constants_match_oracles() -> Outcome {
    let c = constants().map_err(err)?;
    let poly = |t: f64| t - t * t * t / 3.0;
    let sigma = poly(1.0) - poly(-1.0);
    let sech = |x: f64| x.tanh() - x.tanh().powi(3) / 3.0;
    let alpha = sech(40.0) - sech(-40.0);
    let (ds, da) = ((c.sigma - sigma).abs(), (c.alpha - alpha).abs());
    require(ds <= 1e-8 && da <= 1e-8, format!("|dsigma| = {ds:.1e}, |dalpha| = {da:.1e}"))
}

fn equidistribution() -> Outcome {
    let p = AnalysisParams::new(2);
    let mut s = scenario("planar-1");
    let coarse = norm_report(&build(&s)?[0], &p).map_err(err)?.xi_abs_over_mu;
    s.resolution = Resolution::PerEpsilon(16.0);
    let fine = norm_report(&build(&s)?[0], &p).map_err(err)?.xi_abs_over_mu;
    let sweep: Vec<f64> = build(&scenario("circle-sweep"))?
        .iter()
        .map(|st| norm_report(st, &p).map(|r| r.xi_plus_mass))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    let decreasing = sweep.windows(2).all(|w| w[1] < w[0]);
    require(
        coarse <= 1e-2 && coarse / fine >= 3.0 && decreasing,
        format!(
            "|xi|/mu = {coarse:.3e} at h = eps/8, gain {:.2}x under halving; xi+ sweep {:.3e} > {:.3e} > {:.3e}",
            coarse / fine,
            sweep[0],
            sweep[1],
            sweep[2]
        ),
    )
}

fn monotonicity_identity() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for name in ["planar-1", "circle"] {
        let mut s = scenario(name);
        let center = default_center(&s);
        let coarse_state = build(&s)?.remove(0);
        let coarse = monotonicity_report(&coarse_state, center, &radii(0.1, 0.4, 25), 4).map_err(err)?;
        s.resolution = Resolution::PerEpsilon(16.0);
        let fine = monotonicity_report(&build(&s)?[0], center, &radii(0.1, 0.4, 49), 4).map_err(err)?;
        let gain = coarse.aggregate_residual / fine.aggregate_residual;
        let boundary = coarse.min_boundary_over_scale().min(fine.min_boundary_over_scale());
        ok &= coarse.aggregate_residual <= 0.05 && gain >= 2.0 && boundary >= -1e-10;
        details.push(format!(
            "{name}: residual {:.2e} -> {:.2e} ({gain:.1}x), min boundary/scale {boundary:.1e}",
            coarse.aggregate_residual, fine.aggregate_residual
        ));
    }
    require(ok, details.join("; "))
}

fn slab_and_sheets() -> Outcome {
    let s = scenario("circle");
    let st = build(&s)?.remove(0);
    let c = default_center(&s);
    let rs = radii(0.1, 0.4, 25);
    let plain = monotonicity_report(&st, c, &rs, 4).map_err(err)?;
    let slab = slab_report(&st, c, &rs, c[1] - 0.5, c[1] + 0.5, 4).map_err(err)?;
    let mut worst: f64 = 0.0;
    for (a, b) in plain.rows.iter().zip(&slab.rows) {
        let diffs = [a.ratio - b.ratio, a.lhs - b.lhs, a.term_xi - b.term_xi, a.term_boundary - b.term_boundary];
        let d = diffs.iter().fold(0.0f64, |m, x| m.max(x.abs())) / a.scale.max(a.ratio.abs());
        worst = worst.max(d.max((b.plane_t1.abs() + b.plane_t2.abs()) / a.scale));
    }
    // Seen from a point on the upper sheet, 5ε above the plane t3 = 0. The
    // reference is the same geometry with a transversal layer crossing t3.
    let eps = 0.05;
    let stack = build(&scenario("stack-2").with_epsilons(vec![eps]))?.remove(0);
    let mid = sheet_separation_integral(&stack, [0.0, 0.25, 0.0], 0.0, eps, 0.4, 4).map_err(err)?;
    let planar = build(&scenario("planar-1"))?.remove(0);
    let reference = sheet_separation_integral(&planar, [0.0, 5.0 * eps, 0.0], 0.0, eps, 0.4, 4).map_err(err)?;
    let ratio = mid / reference;
    require(
        worst <= 1e-10 && ratio <= (-5.0f64).exp(),
        format!(
            "containing slab deviates by {worst:.1e} of scale; midplane {mid:.2e} / reference {reference:.2e} = {ratio:.2e} (limit {:.2e})",
            (-5.0f64).exp()
        ),
    )
}

fn first_variation() -> Outcome {
    let s = scenario("solved-circle");
    let st = build(&s)?.remove(0);
    let p = AnalysisParams::new(2);
    let mut worst: f64 = 0.0;
    let mut bounds = true;
    for seed in 0..5 {
        let eta = test_vector_field(st.grid(), s.seed + seed, 0.1).map_err(err)?;
        let fv = first_variation_identity(&st, &eta).map_err(err)?;
        worst = worst.max(fv.residual);
        bounds &= duality_bound(&st, &eta, fv.lhs, &p).map_err(err)?.holds;
    }
    require(
        worst <= 1e-3 && bounds,
        format!("solver residual {:.1e}; max identity residual {worst:.2e}; duality bound holds on all: {bounds}", st.residual_norm()),
    )
}

fn quantization() -> Outcome {
    let cases: [(&str, u64); 6] = [
        ("planar-1", 1),
        ("planar-1-1d", 1),
        ("stack-2", 2),
        ("stack-2-1d", 2),
        ("stack-3", 3),
        ("stack-3-1d", 3),
    ];
    let mut worst_res: f64 = 0.0;
    let mut worst_pot: f64 = 0.0;
    let mut stable = true;
    for (name, k) in cases {
        let s = scenario(name).with_epsilons(vec![0.05, 0.025]);
        let mut previous: Option<Vec<u64>> = None;
        for st in build(&s)? {
            let lines = default_lines(&s, &st, 5).map_err(err)?;
            let rep = quantization_check(&st, &lines, s.params.tau).map_err(err)?;
            worst_res = worst_res.max(rep.max_residual);
            let ks: Vec<u64> = rep.lines.iter().map(|l| l.nearest_k).collect();
            stable &= ks.iter().all(|&n| n == k) && rep.lines.iter().all(|l| l.layer_count as u64 == k);
            for l in &rep.lines {
                for p in &l.potential_per_layer {
                    worst_pot = worst_pot.max((p / (0.5 * ALPHA) - 1.0).abs());
                }
            }
            if let Some(prev) = &previous {
                stable &= *prev == ks;
            }
            previous = Some(ks);
        }
    }
    require(
        worst_res <= 0.01 && worst_pot <= 0.02 && stable,
        format!("max residual {worst_res:.2e}; max potential deviation {worst_pot:.2e}; nearest_k = K and stable: {stable}"),
    )
}

fn diffuse_mean_curvature() -> Outcome {
    let p = AnalysisParams::new(2);
    let r: f64 = 0.5;
    // (|f|/(ε|∇u|))^{q0} → R^{−q0} on a layer of length 2πR and energy α.
    let target = ((1.0 / r).powf(p.q0) * ALPHA * 2.0 * PI * r).powf(1.0 / p.q0);
    let mut details = Vec::new();
    let mut ok = true;
    for st in build(&scenario("circle-sweep"))? {
        let (lh, excluded) = diffuse_mean_curvature_norm(&st, &p, &Region::Whole).map_err(err)?;
        let dev = (lh.powf(1.0 / p.q0) / target - 1.0).abs();
        let limit = [(0.05, 0.15), (0.025, 0.08)].iter().find(|(e, _)| *e == st.epsilon()).map(|&(_, l)| l);
        if let Some(l) = limit {
            ok &= dev <= l && excluded <= 1e-6;
            details.push(format!("eps {}: deviation {dev:.2e} (limit {l}), excluded {excluded:.1e}", st.epsilon()));
        }
    }
    require(ok && details.len() == 2, details.join("; "))
}

fn holder_chain() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    for s in corpus() {
        for st in build(&s)? {
            let dim = st.grid().dim();
            let t = if dim == 1 { 0.0 } else { 3.0 };
            let h = corollary_holder_check(&st, 3.0, t, &AnalysisParams::new(dim)).map_err(err)?;
            checked += 1;
            if !h.holds {
                failures.push(format!("{} eps {}", s.name, st.epsilon()));
            }
        }
    }
    require(failures.is_empty(), format!("{checked} states checked; violations: {failures:?}"))
}

fn g_delta() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut drift: f64 = 0.0;
    for delta in [0.1, 0.01] {
        let p = GDeltaParams::new(delta, 2.0);
        let a = g_delta_ledger(&p, 1000).map_err(err)?;
        let b = g_delta_ledger(&GDeltaParams { points: 2 * p.points, ..p }, 1000).map_err(err)?;
        worst = a.min_margins.iter().chain(&b.min_margins).fold(worst, |m, &x| m.min(x));
        for (x, y) in a.min_margins.iter().zip(&b.min_margins) {
            drift = drift.max((x - y).abs());
        }
    }
    require(
        worst >= -1e-10 && drift <= 1e-8,
        format!("min margin {worst:.2e}; refinement drift {drift:.1e}"),
    )
}

/// `r^{−n}` times the tail energy `sech⁴(s/ε′)/ε` of a flat layer,
/// integrated over the disk of radius `r` at distance `d` (2-d, `n = 1`).
/// `ε′ = 2/κ` carries the decay rate `κ = (2/h)·asinh(h/ε)` of the grid
/// linearization `ε²Δ_h v = 4v`; the state is the discrete heteroclinic.
fn tail_oracle(eps: f64, h: f64, d: f64, r: f64) -> f64 {
    let eps_tail = h / (h / eps).asinh();
    let m = 4000;
    let dx = 2.0 * r / m as f64;
    let mut acc = 0.0;
    for k in 0..m {
        let x = -r + (k as f64 + 0.5) * dx;
        let chord = 2.0 * (r * r - x * x).sqrt();
        acc += chord * (1.0 / ((d + x) / eps_tail).cosh()).powi(4) / eps * dx;
    }
    acc / r
}

fn density_ratios() -> Outcome {
    let rs = radii(0.1, 0.4, 13);
    let eps = 0.02;
    let s = scenario("planar-1").with_epsilons(vec![eps]);
    let planar = build(&s)?.remove(0);
    let prof = density_ratio_profile(&planar, [0.0; 3], &rs, 4).map_err(err)?;
    let flat = prof.iter().map(|(_, v)| (v / (2.0 * ALPHA) - 1.0).abs()).fold(0.0, f64::max);

    // Uniform bound over the corpus (constant-zero is not a transition state).
    let mut sup: f64 = 0.0;
    for s in corpus().into_iter().filter(|s| s.name != "constant-zero") {
        let c = default_center(&s);
        for st in build(&s)? {
            let ratios = density_ratio_profile(&st, c, &radii(0.1, 0.4, 7), 4).map_err(err)?;
            sup = ratios.iter().fold(sup, |m, (_, v)| m.max(*v));
        }
    }
    let bound = 4.0 * PI * ALPHA;

    let d = 0.3;
    let mut tail_dev: f64 = 0.0;
    let mut under_bound = true;
    let off = density_ratio_profile(&planar, [d, 0.0, 0.0], &radii(0.1, 0.2, 5), 4).map_err(err)?;
    for (r, v) in off {
        let o = tail_oracle(eps, planar.grid().h(), d, r);
        tail_dev = tail_dev.max((v / o - 1.0).abs());
        under_bound &= v <= (-(d - r) / eps).exp();
    }
    require(
        flat <= 0.02 && sup <= bound && under_bound && tail_dev <= 0.02,
        format!(
            "planar ratio within {flat:.2e} of 2 alpha; corpus sup {sup:.3} <= {bound:.3}; off-interface ratios below exp(-(d-r)/eps): {under_bound}, within {tail_dev:.2e} of the tail oracle"
        ),
    )
}

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let cfg = tmp.path().join("run.conf");
    std::fs::write(
        &cfg,
        "scenario = circle\nanalyses = norms, monotonicity, slab, quantize, gdelta, firstvar, sweep\n",
    )
    .map_err(err)?;
    let mut runs = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_aclab"))
            .args(["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()])
            .output()
            .map_err(err)?;
        if status.status.code() != Some(0) {
            return Err(format!("run {k} exited with {:?}: {}", status.status, String::from_utf8_lossy(&status.stderr)));
        }
        runs.push(csv_bodies(&out));
    }
    let same = runs[0] == runs[1];
    require(same && runs[0].len() >= 8, format!("{} CSV files byte-identical across two runs: {same}", runs[0].len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("constants", constants_match_oracles),
        ("equidistribution", equidistribution),
        ("monotonicity identity", monotonicity_identity),
        ("slab and sheet separation", slab_and_sheets),
        ("first variation", first_variation),
        ("quantization", quantization),
        ("diffuse mean curvature", diffuse_mean_curvature),
        ("hoelder chain", holder_chain),
        ("G_delta ledger", g_delta),
        ("density ratios", density_ratios),
        ("reproducibility", reproducibility),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {name} [{:.1}s]: {detail}", k + 1, t.elapsed().as_secs_f64());
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
