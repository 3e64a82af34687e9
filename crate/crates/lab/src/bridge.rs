use ftorus_core::lattice::{box_points, build_smoothing_multiplier, Modulus};
use ftorus_core::linalg::CMat;
use ftorus_core::lip::{lip_ball_sample, lip_seminorm, sup_norm, BallMode, Evaluand, LipBallSpec};
use ftorus_core::model::{
    embed, embed_symmetrized, fourier_coefficients, matrix_op_norm, model_multiplier, op_norm, ModelElement,
};
use ftorus_core::ncpoly::{apply_multiplier, derivation_components, Multiplier, NCPoly};
use ftorus_core::lattice::LengthFunction;
use ftorus_core::{Error, Result};
use num_complex::Complex64;

use crate::isometry::{model_for, twist_for};
use crate::{kendall_tau, ExperimentConfig, ExperimentId, ReportRow};

fn real(c: f64) -> Complex64 {
    Complex64::new(c, 0.0)
}

/// reach(n): the worst transfer mismatch between unit-Lip elements of the symbol
/// algebra and of the n-point model, in both directions, using the smoothing
/// multiplier that almost fixes the sample band. At the smallest n the block
/// derivation δ(a,b) = diag(v(a), v(b), (a − b)/ε) is assembled from cocycle
/// components and checked against L_n on diagonal pairs.
pub fn run_bridge_reach(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let id = ExperimentId::BridgeReach;
    if cfg.theta.is_zero() || cfg.d != 2 {
        return Err(Error::InvalidParameter("bridge-reach needs a rational θ ≠ 0 and d = 2".into()));
    }
    let twist = twist_for(cfg.theta, 2)?;
    let psi = cfg.psi.length(Modulus::Infinite, 2);
    let top = box_points(cfg.band, 2).iter().map(|k| psi.eval(k)).fold(0.0, f64::max);
    let phi = build_smoothing_multiplier(&psi, top, cfg.eps, Some(4 * cfg.band))?;
    let smooth = Multiplier::Spec(&phi);

    let mut rows = Vec::new();
    let mut reaches = Vec::new();
    for &amp in &cfg.amps {
        let ball = |mode: BallMode, psi: &LengthFunction| LipBallSpec {
            radius: cfg.radius.max(f64::MIN_POSITIVE),
            band: cfg.band,
            amp,
            count: cfg.samples,
            seed: cfg.seed,
            self_adjoint: true,
            twist: twist.clone(),
            psi: psi.clone(),
            mode,
        };
        // Symbol side: everything that does not depend on n.
        let symbols: Vec<(NCPoly, NCPoly, f64, f64)> = lip_ball_sample(&ball(BallMode::Symbol { grid: cfg.grid }, &psi))?
            .into_iter()
            .map(|a| {
                let ta = apply_multiplier(&a, smooth)?;
                let norm = sup_norm(Evaluand::Symbol(&a), cfg.grid)?;
                let resid = sup_norm(Evaluand::Symbol(&a.sub(&ta)?), cfg.grid)?;
                Ok((a, ta, norm, resid))
            })
            .collect::<Result<_>>()?;

        for (pos, &n) in cfg.ns.iter().enumerate() {
            let model = model_for(cfg.theta, n)?;
            let psi_n = cfg.psi.length(model.index_modulus(), 2);
            let mut forward: f64 = 0.0;
            for (_, ta, norm, resid) in &symbols {
                let b = normalize(embed_symmetrized(ta, &model)?, &psi_n, cfg.radius)?;
                forward = forward.max((norm - op_norm(&b)?).abs() + resid);
            }
            let mut backward: f64 = 0.0;
            for f in lip_ball_sample(&ball(BallMode::Model(model.clone()), &psi_n))? {
                let y = embed_symmetrized(&f, &model)?;
                let ty = model_multiplier(&y, smooth)?;
                let a = fourier_coefficients(&ty, cfg.band)?;
                let l = lip_seminorm(Evaluand::Symbol(&a), &psi, cfg.grid)?.lip;
                let s = sup_norm(Evaluand::Symbol(&a), cfg.grid)?;
                let scale = 1.0f64.max(l).max(s / cfg.radius);
                let resid = op_norm(&y.sub(&ty))?;
                backward = backward.max((op_norm(&y)? - s / scale).abs() + resid);
            }
            rows.push(ReportRow::info(id, n, format!("symbol_to_model_m{amp}"), forward));
            rows.push(ReportRow::info(id, n, format!("model_to_symbol_m{amp}"), backward));
            if reaches.len() <= pos {
                reaches.push(0.0f64);
            }
            reaches[pos] = reaches[pos].max(forward.max(backward));

            if pos == 0 {
                let (mut diag_defect, mut pair_norm): (f64, f64) = (0.0, 0.0);
                for (a, ta, _, _) in symbols.iter().take(5) {
                    let x = embed_symmetrized(a, &model)?;
                    let l = lip_seminorm(Evaluand::Model(&x), &psi_n, None)?.lip;
                    diag_defect = diag_defect.max((delta_block_norm(&x, &x, &psi_n, cfg.eps)? - l).abs());
                    let b = normalize(embed_symmetrized(ta, &model)?, &psi_n, cfg.radius)?;
                    pair_norm = pair_norm.max(delta_block_norm(&b, &x, &psi_n, cfg.eps)?);
                }
                rows.push(ReportRow::info(id, n, format!("delta_block_norm_m{amp}"), pair_norm));
                rows.push(ReportRow::check(id, n, format!("delta_block_diagonal_defect_m{amp}"), diag_defect, 1e-10));
            }
        }
    }
    for (&n, &r) in cfg.ns.iter().zip(&reaches) {
        rows.push(ReportRow::info(id, n, "reach", r));
    }
    let last = *cfg.ns.last().expect("validated");
    rows.push(ReportRow::check(id, last, "reach_kendall_tau", kendall_tau(&reaches), -0.5));
    rows.push(ReportRow::check(id, last, "final_reach", *reaches.last().expect("nonempty"), cfg.tol));
    Ok(rows)
}

/// x / max(1, L_n(x), ‖x‖/R).
fn normalize(x: ModelElement, psi: &LengthFunction, radius: f64) -> Result<ModelElement> {
    let l = lip_seminorm(Evaluand::Model(&x), psi, None)?.lip;
    let s = 1.0f64.max(l).max(op_norm(&x)? / radius);
    Ok(x.scale(real(1.0 / s)))
}

/// Cocycle components δ_r(x) with Σ_r δ_r(x)*δ_r(x) = Γ(x,x).
fn components(x: &ModelElement, psi: &LengthFunction) -> Result<Vec<CMat>> {
    derivation_components(&x.coefficients(), psi)?
        .iter()
        .map(|p| embed(p, &x.model).map(|e| e.matrix))
        .collect()
}

/// v(x) = [[0, δ^c(x*)*], [δ^c(x), 0]] with δ^c the column stack of components;
/// its norm is max(column, row) = L(x).
fn lip_block(x: &ModelElement, psi: &LengthFunction) -> Result<CMat> {
    let col = components(x, psi)?;
    let row = components(&x.adjoint(), psi)?;
    let size = x.size();
    let k = col.len().max(row.len());
    let mut out = CMat::zeros(size * (k + 1), size * (k + 1));
    for (r, c) in col.iter().enumerate() {
        out.view_mut((size * (r + 1), 0), (size, size)).copy_from(c);
    }
    for (r, c) in row.iter().enumerate() {
        out.view_mut((0, size * (r + 1)), (size, size)).copy_from(&c.adjoint());
    }
    Ok(out)
}

fn delta_block_norm(a: &ModelElement, b: &ModelElement, psi: &LengthFunction, eps: f64) -> Result<f64> {
    let blocks = [lip_block(a, psi)?, lip_block(b, psi)?, &a.sub(b).matrix * real(1.0 / eps)];
    let size: usize = blocks.iter().map(|m| m.nrows()).sum();
    let mut d = CMat::zeros(size, size);
    let mut at = 0;
    for m in &blocks {
        d.view_mut((at, at), (m.nrows(), m.ncols())).copy_from(m);
        at += m.nrows();
    }
    matrix_op_norm(&d)
}
