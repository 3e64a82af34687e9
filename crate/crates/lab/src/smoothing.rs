use ftorus_core::lattice::{build_smoothing_multiplier, window_points, MultiplierSpec};
use ftorus_core::lip::{lip_seminorm, Evaluand};
use ftorus_core::model::{embed, model_multiplier, op_norm, schatten_norm};
use ftorus_core::ncpoly::Multiplier;
use ftorus_core::Result;

use crate::isometry::{model_for, twist_for};
use crate::{mean_zero, sample, ExperimentConfig, ExperimentId, ReportRow};

/// Properties (i)–(iii) of the constructed φ_{k,ε} on ℤ_n^d, then
/// L(T_φ x) ≤ (1+ε)L(x) and ‖T_φ x‖ ≤ (1+ε)‖x‖ on random model elements.
pub fn run_multiplier_contraction(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::Multiplier;
    let twist = twist_for(cfg.theta, cfg.d)?;
    let k = cfg.ks[0] as f64;
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let model = model_for(cfg.theta, n)?;
        let psi = cfg.psi.length(model.index_modulus(), cfg.d);
        let spec = build_smoothing_multiplier(&psi, k, cfg.eps, None)?;
        let (mut support_excess, mut low_dev) = (f64::NEG_INFINITY, 0.0f64);
        for g in window_points(psi.modulus(), cfg.d, None)? {
            let l = psi.eval(&g);
            let v = spec.value(&g);
            if v.norm() > 0.0 {
                support_excess = support_excess.max(l - spec.cutoff);
            }
            if l <= k {
                low_dev = low_dev.max((v - 1.0).norm());
            }
        }
        rows.push(ReportRow::check(id, n, "tail_mass", spec.tail_mass, cfg.eps));
        rows.push(ReportRow::check(id, n, "support_excess", support_excess, 0.0));
        rows.push(ReportRow::check(id, n, "low_band_deviation", low_dev, cfg.eps));
        rows.push(ReportRow::info(id, n, "cutoff", spec.cutoff));
        for &amp in &cfg.amps {
            let (mut lip_excess, mut norm_excess) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
            for i in 0..cfg.samples as u64 {
                let x = embed(&sample(&twist, amp, cfg.band, cfg.seed, i, false), &model)?;
                let tx = model_multiplier(&x, Multiplier::Spec(&spec))?;
                let l = |e| lip_seminorm(Evaluand::Model(e), &psi, None).map(|r| r.lip);
                lip_excess = lip_excess.max(l(&tx)? - (1.0 + cfg.eps) * l(&x)?);
                norm_excess = norm_excess.max(op_norm(&tx)? - (1.0 + cfg.eps) * op_norm(&x)?);
            }
            rows.push(ReportRow::check(id, n, format!("lip_excess_m{amp}"), lip_excess, cfg.tol));
            rows.push(ReportRow::check(id, n, format!("norm_excess_m{amp}"), norm_excess, cfg.tol));
        }
    }
    Ok(rows)
}

/// Product-form smoothing multiplier with η = ε/(2k+1)^d on each coordinate,
/// almost fixing {ψ₁ ≤ ψ₁(k)}.
pub fn tail_multiplier(cfg: &ExperimentConfig, n: u64, k: u64) -> Result<MultiplierSpec> {
    let model = model_for(cfg.theta, n)?;
    let psi1 = cfg.psi.length(model.index_modulus(), 1);
    let eta = cfg.eps / ((2 * k + 1) as f64).powi(cfg.d as i32);
    let one = build_smoothing_multiplier(&psi1, psi1.eval1(k as i64), eta, None)?;
    MultiplierSpec::product(&one, cfg.d)
}

/// sup over mean-zero samples of ‖x − T_φx‖/(‖x‖₂ + L(x)) and ‖x − T_φx‖/L(x̊)
/// for each cutoff k, plus a monotonicity check across the k sweep.
pub fn run_smoothing_tail(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::SmoothingTail;
    let twist = twist_for(cfg.theta, cfg.d)?;
    let mut rows = Vec::new();
    for &n in &cfg.ns {
        let model = model_for(cfg.theta, n)?;
        let psi = cfg.psi.length(model.index_modulus(), cfg.d);
        for &amp in &cfg.amps {
            let xs = (0..cfg.samples as u64)
                .map(|i| {
                    let x = embed(&mean_zero(&sample(&twist, amp, cfg.band, cfg.seed, i, false)), &model)?;
                    let l = lip_seminorm(Evaluand::Model(&x), &psi, None)?.lip;
                    Ok((x.clone(), schatten_norm(&x, 2.0)?, l))
                })
                .collect::<Result<Vec<_>>>()?;
            let mut sups = Vec::new();
            for &k in &cfg.ks {
                let spec = tail_multiplier(cfg, n, k)?;
                let (mut s1, mut s2): (f64, f64) = (0.0, 0.0);
                for (x, l2, l) in &xs {
                    let r = op_norm(&x.sub(&model_multiplier(x, Multiplier::Spec(&spec))?))?;
                    s1 = s1.max(r / (l2 + l));
                    s2 = s2.max(r / l);
                }
                rows.push(ReportRow::info(id, n, format!("cutoff_m{amp}_k{k}"), spec.cutoff));
                rows.push(ReportRow::check(id, n, format!("tail_ratio_m{amp}_k{k}"), s1, cfg.eps));
                rows.push(ReportRow::info(id, n, format!("tail_ratio_mean_zero_m{amp}_k{k}"), s2));
                sups.push(s1);
            }
            let rise = sups.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
            let scale = sups.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
            rows.push(ReportRow::check(id, n, format!("monotonicity_violation_m{amp}"), rise.max(0.0), 1e-12 * scale));
        }
    }
    Ok(rows)
}
