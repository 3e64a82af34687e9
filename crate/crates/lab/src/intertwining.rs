use std::sync::Arc;

use ftorus_core::lattice::{LengthFunction, Modulus};
use ftorus_core::linalg::max_abs_diff;
use ftorus_core::model::{clock_shift, embed, model_gradient_form_dense, MatrixModel};
use ftorus_core::ncpoly::{gradient_form, NCPoly, TwistMatrix};
use ftorus_core::{Error, Result};

use crate::{sample, ExperimentConfig, ExperimentId, ReportRow};

/// max |Γ^n(π_n f, π_n f) − π_n Γ(f,f)| entrywise on the diagonal model, with Γ^n
/// computed from the model generator and Γ from the Gromov form of ψ_n.
pub fn run_intertwining(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::Intertwining;
    if cfg.d != 1 {
        return Err(Error::InvalidParameter("intertwining is a d = 1 experiment".into()));
    }
    let twist = TwistMatrix::zero(1);
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        if 2 * cfg.band > n {
            return Err(Error::BandTooLarge { band: cfg.band, n });
        }
        let model = clock_shift(n)?;
        let psi = cfg.psi.length(Modulus::Finite(n), 1);
        for &amp in &cfg.amps {
            let mut worst: f64 = 0.0;
            for i in 0..cfg.samples as u64 {
                let f = sample(&twist, amp, cfg.band, cfg.seed, i, false);
                worst = worst.max(intertwining_defect(&f, &model, &psi)?);
            }
            rows.push(ReportRow::check(id, n, format!("max_entry_defect_m{amp}"), worst, cfg.tol));
        }
    }
    Ok(rows)
}

/// Entrywise max of Γ^n(π_n f, π_n f) − π_n Γ(f,f) for one symbol.
pub fn intertwining_defect(f: &NCPoly, model: &Arc<MatrixModel>, psi: &LengthFunction) -> Result<f64> {
    let x = embed(f, model)?;
    let lhs = model_gradient_form_dense(&x, &x, psi)?;
    let rhs = embed(&gradient_form(f, f, psi)?, model)?;
    Ok(max_abs_diff(&lhs.matrix, &rhs.matrix))
}
