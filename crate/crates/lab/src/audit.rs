use ftorus_core::lattice::{check_conditionally_negative, Modulus};
use ftorus_core::Result;

use crate::{ExperimentConfig, ExperimentId, PsiChoice, ReportRow};

/// Largest n at which the naive square length is searched for a witness.
const NAIVE_MAX_N: u64 = 16;

/// Conditional negativity over ℤ_n: heat and word must pass for every n;
/// the naive square must produce a strictly negative Gromov eigenvalue somewhere.
pub fn run_psd_audit(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::PsdAudit;
    let mut rows = Vec::new();
    for (name, psi) in [("heat", PsiChoice::Heat), ("word", PsiChoice::Word)] {
        for &n in &cfg.ns {
            let v = check_conditionally_negative(&psi.length(Modulus::Finite(n), 1), None, None)?;
            rows.push(ReportRow::check(id, n, format!("{name}/neg_min_eigenvalue"), -v.witness, cfg.tol));
        }
    }
    let mut best = (0u64, f64::INFINITY);
    for &n in cfg.ns.iter().filter(|&&n| n <= NAIVE_MAX_N) {
        let v = check_conditionally_negative(&PsiChoice::NaiveSquare.length(Modulus::Finite(n), 1), None, None)?;
        rows.push(ReportRow::info(id, n, "naive-square/min_eigenvalue", v.witness));
        if v.witness < best.1 {
            best = (n, v.witness);
        }
    }
    rows.push(ReportRow::check(id, best.0, "naive-square/best_witness", best.1, -cfg.tol));
    Ok(rows)
}
