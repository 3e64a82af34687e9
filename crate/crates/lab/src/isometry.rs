use std::sync::Arc;

use ftorus_core::lattice::Modulus;
use ftorus_core::lip::{lip_seminorm, Evaluand};
use ftorus_core::model::{clock_shift, embed, embed_symmetrized, fuzzy_generators, op_norm, MatrixModel};
use ftorus_core::ncpoly::{NCPoly, TwistMatrix};
use ftorus_core::oracle::{sup_norm_oracle, OracleMode};
use ftorus_core::{Error, Result};

use crate::{kendall_tau, sample, ExperimentConfig, ExperimentId, ReportRow, Theta};

pub(crate) fn twist_for(theta: Theta, d: usize) -> Result<TwistMatrix> {
    if theta.is_zero() {
        return Ok(TwistMatrix::zero(d));
    }
    if d != 2 {
        return Err(Error::InvalidParameter(format!("θ = {theta} needs d = 2")));
    }
    TwistMatrix::rational(theta.p as i64, theta.m)
}

/// Clock/shift model for θ = 0, fuzzy model of size m·n otherwise.
pub(crate) fn model_for(theta: Theta, n: u64) -> Result<Arc<MatrixModel>> {
    if theta.is_zero() {
        clock_shift(n)
    } else {
        fuzzy_generators(theta.p, theta.m, n)
    }
}

struct Reference {
    f: NCPoly,
    norm: f64,
    lip: f64,
}

/// ε(n) = max over self-adjoint samples of |‖ρ̂_n f‖ / ‖f‖ − 1| and the matching
/// Lip defect |L_n(ρ̂_n f) / L(f) − 1|, per amplification level.
pub fn run_isometry_defect(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::Isometry;
    let twist = twist_for(cfg.theta, cfg.d)?;
    let psi = cfg.psi.length(Modulus::Infinite, cfg.d);
    let last = *cfg.ns.last().expect("validated");
    let mut rows = Vec::new();
    for &amp in &cfg.amps {
        let mut refs = Vec::with_capacity(cfg.samples);
        for i in 0..cfg.samples as u64 {
            let f = sample(&twist, amp, cfg.band, cfg.seed, i, true);
            let mode = OracleMode::for_poly(&f)?;
            let norm = sup_norm_oracle(&f, mode, cfg.grid)?.value;
            let lip = lip_seminorm(Evaluand::Symbol(&f), &psi, cfg.grid)?.lip;
            refs.push(Reference { f, norm, lip });
        }
        let mut norm_trend = Vec::new();
        let mut lip_trend = Vec::new();
        for &n in &cfg.ns {
            let model = model_for(cfg.theta, n)?;
            let psi_n = psi.with(model.index_modulus(), cfg.d);
            let (mut en, mut el): (f64, f64) = (0.0, 0.0);
            for r in &refs {
                let x = embed_symmetrized(&r.f, &model)?;
                en = en.max((op_norm(&x)? / r.norm - 1.0).abs());
                let ln = lip_seminorm(Evaluand::Model(&x), &psi_n, None)?.lip;
                el = el.max((ln / r.lip - 1.0).abs());
            }
            let metric = format!("norm_defect_m{amp}");
            rows.push(if n == last {
                ReportRow::check(id, n, metric, en, cfg.tol)
            } else {
                ReportRow::info(id, n, metric, en)
            });
            rows.push(ReportRow::info(id, n, format!("lip_defect_m{amp}"), el));
            norm_trend.push(en);
            lip_trend.push(el);
        }
        rows.push(ReportRow::check(id, last, format!("norm_defect_m{amp}/kendall_tau"), kendall_tau(&norm_trend), -0.5));
        rows.push(ReportRow::check(id, last, format!("lip_defect_m{amp}/kendall_tau"), kendall_tau(&lip_trend), -0.5));
    }
    Ok(rows)
}

/// ‖embed(u + v + u* + v*)‖ in the fuzzy models against the fiber-oracle norm.
pub fn run_rational_fiber(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::RationalFiber;
    if cfg.theta.is_zero() {
        return Err(Error::InvalidParameter("rational-fiber needs θ ≠ 0".into()));
    }
    let twist = twist_for(cfg.theta, 2)?;
    let one = ftorus_core::linalg::ONE;
    let f = NCPoly::from_terms(
        &twist,
        &[(vec![1, 0], one), (vec![-1, 0], one), (vec![0, 1], one), (vec![0, -1], one)],
    );
    let reference = sup_norm_oracle(&f, OracleMode::for_poly(&f)?, cfg.grid)?;
    let last = *cfg.ns.last().expect("validated");
    let mut rows = vec![
        ReportRow::info(id, 0, "fiber_oracle_norm", reference.value),
        ReportRow::info(id, 0, "fiber_oracle_rel_error", reference.rel_error),
    ];
    for &n in &cfg.ns {
        let model = model_for(cfg.theta, n)?;
        let norm = op_norm(&embed(&f, &model)?)?;
        rows.push(ReportRow::info(id, n, "model_norm", norm));
        let gap = (norm - reference.value).abs();
        rows.push(if n == last {
            ReportRow::check(id, n, "gap_to_fiber_oracle", gap, cfg.tol)
        } else {
            ReportRow::info(id, n, "gap_to_fiber_oracle", gap)
        });
    }
    Ok(rows)
}
