//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Runs sequentially with its own `main` so the verdict lines always print.

use std::io::Write;
use std::process::ExitCode;

use ftorus_lab::{run, ExperimentConfig, ExperimentId, ReportRow};

const SEED: u64 = 20240917;

struct Verdict {
    pass: bool,
    detail: String,
}

fn rows(id: ExperimentId, seed: u64) -> Result<Vec<ReportRow>, String> {
    run(&ExperimentConfig::defaults(id, seed)).map_err(|e| format!("{id} failed to run: {e}"))
}

fn find<'a>(rows: &'a [ReportRow], metric: &str) -> Result<&'a ReportRow, String> {
    rows.iter().find(|r| r.metric == metric).ok_or_else(|| format!("missing row `{metric}`"))
}

fn failing(rows: &[ReportRow]) -> Vec<String> {
    rows.iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{} n={} {}={:.3e} > {:.3e}", r.experiment, r.n, r.metric, r.value, r.bound))
        .collect()
}

/// Every row of the experiment passes; `summary` picks the headline numbers.
fn all_rows(id: ExperimentId, summary: impl Fn(&[ReportRow]) -> Result<String, String>) -> Result<Verdict, String> {
    let rows = rows(id, SEED)?;
    let bad = failing(&rows);
    let detail = summary(&rows)?;
    if bad.is_empty() {
        Ok(Verdict { pass: true, detail })
    } else {
        Ok(Verdict { pass: false, detail: format!("{detail}; failing: {}", bad.join(", ")) })
    }
}

fn max_value(rows: &[ReportRow], prefix: &str) -> f64 {
    rows.iter().filter(|r| r.metric.starts_with(prefix)).map(|r| r.value).fold(f64::NEG_INFINITY, f64::max)
}

fn intertwining() -> Result<Verdict, String> {
    all_rows(ExperimentId::Intertwining, |r| {
        Ok(format!("intertwining: max entrywise defect {:.2e} over n ∈ {{16, 32}}", max_value(r, "max_entry_defect")))
    })
}

fn rate() -> Result<Verdict, String> {
    let a = rows(ExperimentId::Rate, SEED)?;
    let b = rows(ExperimentId::Rate, SEED + 1)?;
    let mut bad = failing(&a);
    bad.extend(failing(&b));
    let ca = find(&a, "fitted_constant")?.value;
    let cb = find(&b, "fitted_constant")?.value;
    let spread = find(&a, "scaled_defect_spread")?.value;
    if !(ca.is_finite() && spread.is_finite()) {
        bad.push(format!("non-finite constant {ca} or spread {spread}"));
    }
    if !((ca - cb).abs() <= 0.1 * ca.abs()) {
        bad.push(format!("fitted constants {ca} and {cb} differ by more than 10%"));
    }
    let min_defect = a.iter().filter(|r| r.metric == "neg_defect").map(|r| -r.value).fold(f64::INFINITY, f64::min);
    let detail = format!(
        "rate: min defect {min_defect:.2e}, fitted constant {ca:.4} (second seed {cb:.4}), max/min of defect·n {spread:.3}"
    );
    Ok(Verdict { pass: bad.is_empty(), detail: if bad.is_empty() { detail } else { format!("{detail}; {}", bad.join(", ")) } })
}

fn psd_audit() -> Result<Verdict, String> {
    all_rows(ExperimentId::PsdAudit, |r| {
        let w = find(r, "naive-square/best_witness")?;
        Ok(format!("PSD audit: heat and word pass n = 4..64, naive square witness {:.3e} at n = {}", w.value, w.n))
    })
}

fn isometry() -> Result<Verdict, String> {
    all_rows(ExperimentId::Isometry, |r| {
        let last: Vec<String> = r
            .iter()
            .filter(|x| x.n == 256 && x.metric.starts_with("norm_defect") && !x.metric.contains("kendall"))
            .map(|x| format!("{}={:.4}", x.metric, x.value))
            .collect();
        Ok(format!("isometry: ε(256) {} with decreasing trend", last.join(", ")))
    })
}

fn rational_fiber() -> Result<Verdict, String> {
    let r = rows(ExperimentId::RationalFiber, SEED)?;
    let mut bad = failing(&r);
    let target = 2.0 * std::f64::consts::SQRT_2;
    let oracle = find(&r, "fiber_oracle_norm")?.value;
    let model = r
        .iter()
        .find(|x| x.metric == "model_norm" && x.n == 128)
        .ok_or("missing model_norm at n = 128")?
        .value;
    if !((oracle - target).abs() <= 1e-9) {
        bad.push(format!("fiber oracle {oracle} is not 2√2"));
    }
    if !((model - target).abs() <= 0.05) {
        bad.push(format!("model norm {model} not within 0.05 of 2√2"));
    }
    let detail = format!("rational fiber: ‖embed(f)‖ at n = 128 is {model:.6}, 2√2 = {target:.6}, fiber oracle {oracle:.6}");
    Ok(Verdict { pass: bad.is_empty(), detail: if bad.is_empty() { detail } else { format!("{detail}; {}", bad.join(", ")) } })
}

fn riesz() -> Result<Verdict, String> {
    all_rows(ExperimentId::Riesz, |r| {
        let gap = r.iter().filter(|x| x.metric.ends_with("p2_identity_gap")).map(|x| x.value).fold(0.0, f64::max);
        Ok(format!("Riesz p = 2 identity: max gap {gap:.2e} over 200 samples, heat and word, d ∈ {{1, 2}}"))
    })
}

fn multiplier() -> Result<Verdict, String> {
    all_rows(ExperimentId::Multiplier, |r| {
        Ok(format!(
            "multiplier: tail mass {:.4}, |φ−1| on ψ ≤ k {:.4}, Lip excess {:.2e}, norm excess {:.2e}",
            find(r, "tail_mass")?.value,
            find(r, "low_band_deviation")?.value,
            max_value(r, "lip_excess"),
            max_value(r, "norm_excess"),
        ))
    })
}

fn smoothing_tail() -> Result<Verdict, String> {
    let r = rows(ExperimentId::SmoothingTail, SEED)?;
    let mut bad = Vec::new();
    let sups: Vec<&ReportRow> = r.iter().filter(|x| x.metric.starts_with("tail_ratio_m") && !x.metric.contains("mean_zero")).collect();
    if sups.len() != 3 {
        bad.push(format!("expected 3 tail ratios, found {}", sups.len()));
    }
    bad.extend(sups.iter().filter(|x| !x.value.is_finite()).map(|x| format!("{} is not finite", x.metric)));
    bad.extend(failing(&r.iter().filter(|x| x.metric.starts_with("monotonicity")).cloned().collect::<Vec<_>>()));
    let shown: Vec<String> = sups.iter().map(|x| format!("{:.3e}", x.value)).collect();
    let detail = format!("smoothing tail: sup ratio for k = 2, 4, 8 is {}", shown.join(", "));
    Ok(Verdict { pass: bad.is_empty(), detail: if bad.is_empty() { detail } else { format!("{detail}; {}", bad.join(", ")) } })
}

fn covering() -> Result<Verdict, String> {
    all_rows(ExperimentId::CoveringNet, |r| {
        Ok(format!(
            "covering: 500 samples, shortfall {}, max distance {:.4} ≤ (4R+2)ε = 1.5, net size {}",
            find(r, "coverage_shortfall")?.value,
            find(r, "max_distance")?.value,
            find(r, "net_size")?.value,
        ))
    })
}

fn bridge() -> Result<Verdict, String> {
    all_rows(ExperimentId::BridgeReach, |r| {
        let reach: Vec<String> = r.iter().filter(|x| x.metric == "reach").map(|x| format!("{:.3}", x.value)).collect();
        Ok(format!(
            "bridge reach: reach(n) = {} for n = 8..128, δ-block norm {:.4}, diagonal defect {:.2e}",
            reach.join(", "),
            max_value(r, "delta_block_norm"),
            max_value(r, "delta_block_diagonal_defect"),
        ))
    })
}

fn sanity() -> Result<Verdict, String> {
    all_rows(ExperimentId::ModelSanity, |r| {
        Ok(format!(
            "model sanity: commutator vs 2sin(π/n) {:.2e}, trace orthonormality {:.2e}, higher-dim relations {:.2e}",
            max_value(r, "commutator_vs_2sin"),
            r.iter().filter(|x| x.metric.ends_with("trace_orthonormality")).map(|x| x.value).fold(0.0, f64::max),
            r.iter().filter(|x| x.metric.starts_with("higher-dim-3x2/")).map(|x| x.value).fold(0.0, f64::max),
        ))
    })
}

fn main() -> ExitCode {
    let criteria: [(usize, fn() -> Result<Verdict, String>); 11] = [
        (1, intertwining),
        (2, rate),
        (3, psd_audit),
        (4, isometry),
        (5, rational_fiber),
        (6, riesz),
        (7, multiplier),
        (8, smoothing_tail),
        (9, covering),
        (10, bridge),
        (11, sanity),
    ];
    let mut failed = 0;
    let mut out = std::io::stdout();
    for (k, check) in criteria {
        let start = std::time::Instant::now();
        let v = check().unwrap_or_else(|e| Verdict { pass: false, detail: e });
        if !v.pass {
            failed += 1;
        }
        let tag = if v.pass { "PASS" } else { "FAIL" };
        writeln!(out, "[{tag}] criterion {k}: {} ({:.1}s)", v.detail, start.elapsed().as_secs_f64()).ok();
        out.flush().ok();
    }
    writeln!(out, "acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len()).ok();
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
