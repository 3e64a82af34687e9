use ftorus_core::lattice::Modulus;
use ftorus_core::linalg::cis;
use ftorus_core::model::{clock_shift, embed, model_gradient_form, op_norm};
use ftorus_core::ncpoly::{gradient_form, NCPoly, TwistMatrix};
use ftorus_core::oracle::{sup_norm_oracle, OracleMode};
use ftorus_core::{Error, Result};

use crate::{ExperimentConfig, ExperimentId, ReportRow};

/// 2cos(2π(t − 1/√2)), whose maximum sits at an irrational point.
pub fn shifted_cosine() -> NCPoly {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    NCPoly::from_terms(&TwistMatrix::zero(1), &[(vec![1], cis(-s)), (vec![-1], cis(s))])
}

/// ‖f‖ − ‖π_n f‖ and ‖Γ(f,f)‖ − ‖Γ^n(π_n f, π_n f)‖ along the schedule. The
/// reference grid is a multiple of every n, so it contains each sampling set.
pub fn run_rate(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    run_rate_for(&shifted_cosine(), cfg)
}

/// [`run_rate`] for an arbitrary one-variable trigonometric polynomial.
pub fn run_rate_for(f: &NCPoly, cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::Rate;
    if cfg.d != 1 || f.dim() != 1 || !f.twist().is_zero() {
        return Err(Error::InvalidParameter("rate is a d = 1 experiment".into()));
    }
    let max_n = *cfg.ns.last().expect("validated");
    let grid = cfg.grid.unwrap_or(64 * max_n as usize);
    let norm = sup_norm_oracle(f, OracleMode::Commutative, Some(grid))?.value;
    let psi = cfg.psi.length(Modulus::Infinite, 1);
    let gamma = gradient_form(f, f, &psi)?;
    let gamma_norm = sup_norm_oracle(&gamma, OracleMode::Commutative, Some(grid))?.value;

    let mut rows = Vec::new();
    let mut scaled = Vec::new();
    for &n in &cfg.ns {
        let model = clock_shift(n)?;
        let x = embed(f, &model)?;
        let defect = norm - op_norm(&x)?;
        let g = model_gradient_form(&x, &x, &psi.with(Modulus::Finite(n), 1))?;
        let gamma_defect = gamma_norm - op_norm(&g)?;
        rows.push(ReportRow::check(id, n, "neg_defect", -defect, cfg.tol));
        rows.push(ReportRow::info(id, n, "defect_times_n", defect * n as f64));
        rows.push(ReportRow::info(id, n, "gamma_defect", gamma_defect));
        scaled.push(defect * n as f64);
    }
    let c = scaled.iter().copied().fold(0.0, f64::max) / norm.max(f64::MIN_POSITIVE);
    rows.push(ReportRow::info(id, max_n, "fitted_constant", c));
    let upper = &scaled[scaled.len() / 2..];
    let low = upper.iter().copied().fold(f64::INFINITY, f64::min);
    let high = scaled.iter().copied().fold(0.0, f64::max);
    // A polynomial whose maximum every grid hits has no defect to compare.
    let spread = if high == 0.0 { 1.0 } else { high / low };
    rows.push(ReportRow::info(id, max_n, "scaled_defect_spread", spread));
    Ok(rows)
}
