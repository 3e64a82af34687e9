use std::sync::Arc;

use ftorus_core::lattice::{box_points, build_smoothing_multiplier, Modulus};
use ftorus_core::lip::{lip_ball_sample, lip_seminorm, sup_norm, BallMode, Evaluand, LipBallSpec};
use ftorus_core::model::{clock_shift, embed_symmetrized, fourier_coefficients, op_norm, schatten_norm, MatrixModel, ModelElement};
use ftorus_core::ncpoly::{apply_multiplier, l2_norm, Multiplier, NCPoly, TwistMatrix};
use ftorus_core::{Error, Result};
use num_complex::Complex64;

use crate::{ExperimentConfig, ExperimentId, ReportRow};

#[derive(Debug, Clone)]
pub struct CoveringOutcome {
    pub rows: Vec<ReportRow>,
    /// Self-adjoint band-limited symbols in D_R, each with L ≤ 1 and ‖·‖ ≤ R.
    pub net: Vec<NCPoly>,
    /// Largest distance from a sampled model element to the embedded net.
    pub radius: f64,
    /// max(covering radius, distance from embedded net points back into D_R(model)).
    pub hausdorff: f64,
}

/// Lattice net of the self-adjoint band-`band` part of D_R(A_∞), checked against
/// sampled elements of D_R in the n-point model: every sample must lie within
/// (4R+2)ε (d = 1) or (5R+3)ε (d = 2) of an embedded net point.
pub fn run_covering_net(cfg: &ExperimentConfig) -> Result<CoveringOutcome> {
    let id = ExperimentId::CoveringNet;
    if !cfg.theta.is_zero() {
        return Err(Error::InvalidParameter("covering-net runs on the commutative models only".into()));
    }
    let (r, eps, d) = (cfg.radius, cfg.eps, cfg.d);
    let n = cfg.ns[0];
    let bound = if d == 1 { (4.0 * r + 2.0) * eps } else { (5.0 * r + 3.0) * eps };
    let twist = TwistMatrix::zero(d);
    if r == 0.0 {
        let rows = vec![
            ReportRow::check(id, n, "coverage_shortfall", 0.0, 0.0),
            ReportRow::info(id, n, "max_distance", 0.0),
            ReportRow::info(id, n, "net_size", 1.0),
        ];
        return Ok(CoveringOutcome { rows, net: vec![NCPoly::zero(&twist, 1)], radius: 0.0, hausdorff: 0.0 });
    }
    let model = clock_shift(n)?;
    if 2 * cfg.band.max(cfg.sample_band) >= n {
        return Err(Error::BandTooLarge { band: cfg.band.max(cfg.sample_band), n });
    }
    let psi = cfg.psi.length(Modulus::Infinite, d);
    let psi_n = cfg.psi.length(Modulus::Finite(n), d);

    let (net, pitch) = build_net(cfg, &twist)?;
    let mut membership: f64 = f64::NEG_INFINITY;
    for p in &net {
        let l = lip_seminorm(Evaluand::Symbol(p), &psi, cfg.grid)?.lip;
        let s = sup_norm(Evaluand::Symbol(p), cfg.grid)?;
        membership = membership.max((l - 1.0).max(s - r));
    }

    let spec = LipBallSpec {
        radius: r,
        band: cfg.sample_band,
        amp: 1,
        count: cfg.samples,
        seed: cfg.seed,
        self_adjoint: true,
        twist: twist.clone(),
        psi: psi_n.clone(),
        mode: BallMode::Model(model.clone()),
    };
    let ys = lip_ball_sample(&spec)?
        .iter()
        .map(|f| embed_symmetrized(f, &model))
        .collect::<Result<Vec<_>>>()?;

    let phi = build_smoothing_multiplier(&psi_n, cfg.ks[0] as f64, eps, None)?;
    let (mut max_dist, mut uncovered, mut smoothed_excess) = (0.0f64, 0usize, f64::NEG_INFINITY);
    for y in &ys {
        let py = fourier_coefficients(y, cfg.band)?;
        let dist = nearest(y, &py, &net, &model)?;
        max_dist = max_dist.max(dist);
        if !(dist <= bound) {
            uncovered += 1;
        }
        // The smoothed band part, rescaled by (1+ε)², is the point the net is meant to approximate.
        let z = apply_multiplier(&py, Multiplier::Spec(&phi))?.scale(Complex64::new((1.0 + eps).powi(-2), 0.0));
        let l = lip_seminorm(Evaluand::Symbol(&z), &psi, cfg.grid)?.lip;
        let s = sup_norm(Evaluand::Symbol(&z), cfg.grid)?;
        smoothed_excess = smoothed_excess.max((l - 1.0).max(s - r));
    }

    let mut back: f64 = 0.0;
    for p in &net {
        let x = embed_symmetrized(p, &model)?;
        let l = lip_seminorm(Evaluand::Model(&x), &psi_n, None)?.lip;
        let s = op_norm(&x)?;
        let scale = 1.0f64.max(l).max(s / r);
        back = back.max(s * (1.0 - 1.0 / scale));
    }
    let hausdorff = max_dist.max(back);

    let shortfall = uncovered as f64 / ys.len().max(1) as f64;
    let rows = vec![
        ReportRow::check(id, n, "coverage_shortfall", shortfall, 0.0),
        ReportRow::check(id, n, "max_distance", max_dist, bound),
        ReportRow::info(id, n, "net_size", net.len() as f64),
        ReportRow::info(id, n, "pitch", pitch),
        ReportRow::check(id, n, "membership_excess", membership, 1e-12),
        ReportRow::info(id, n, "smoothed_membership_excess", smoothed_excess),
        ReportRow::info(id, n, "net_to_ball_distance", back),
        ReportRow::info(id, n, "hausdorff_bound", hausdorff),
    ];
    Ok(CoveringOutcome { rows, net, radius: max_dist, hausdorff })
}

/// Coefficient lattice of pitch ε/(2(2m+1)^d), doubled until the point count fits
/// the budget, filtered by L ≤ 1 and ‖·‖ ≤ R.
fn build_net(cfg: &ExperimentConfig, twist: &TwistMatrix) -> Result<(Vec<NCPoly>, f64)> {
    let psi = cfg.psi.length(Modulus::Infinite, cfg.d);
    let r = cfg.radius;
    // One real coordinate for k = 0, two for each pair {k, −k}.
    let mut keys = Vec::new();
    let mut limits = Vec::new();
    for k in box_points(cfg.band, cfg.d) {
        let first = k.iter().copied().find(|&c| c != 0);
        match first {
            None => {
                keys.push(k);
                limits.push(r);
            }
            Some(c) if c > 0 => {
                let lim = r.min(1.0 / (2.0 * psi.eval(&k)).sqrt());
                keys.push(k.clone());
                limits.push(lim);
                keys.push(k);
                limits.push(lim);
            }
            _ => {}
        }
    }
    let mut pitch = cfg.eps / (2.0 * ((2 * cfg.band + 1) as f64).powi(cfg.d as i32));
    let steps = |h: f64| limits.iter().map(|&b| (b / h + 1e-9).floor() as i64).collect::<Vec<_>>();
    let count = |h: f64| steps(h).iter().map(|&s| (2 * s + 1) as f64).product::<f64>();
    while count(pitch) > cfg.budget as f64 {
        pitch *= 2.0;
    }
    let st = steps(pitch);
    let mut idx: Vec<i64> = st.iter().map(|&s| -s).collect();
    let mut net = Vec::new();
    loop {
        let mut p = NCPoly::zero(twist, 1);
        let mut i = 0;
        while i < keys.len() {
            let k = &keys[i];
            if k.iter().all(|&c| c == 0) {
                p.add_term(k, &one(Complex64::new(idx[i] as f64 * pitch, 0.0)));
                i += 1;
            } else {
                let c = Complex64::new(idx[i] as f64 * pitch, idx[i + 1] as f64 * pitch);
                let neg: Vec<i64> = k.iter().map(|&c| -c).collect();
                p.add_term(k, &one(c));
                p.add_term(&neg, &one(c.conj()));
                i += 2;
            }
        }
        p.prune();
        let l = lip_seminorm(Evaluand::Symbol(&p), &psi, cfg.grid)?.lip;
        if l <= 1.0 && sup_norm(Evaluand::Symbol(&p), cfg.grid)? <= r {
            net.push(p);
        }
        let mut j = 0;
        loop {
            if j == idx.len() {
                return Ok((net, pitch));
            }
            if idx[j] < st[j] {
                idx[j] += 1;
                break;
            }
            idx[j] = -st[j];
            j += 1;
        }
    }
}

fn one(c: Complex64) -> ftorus_core::linalg::CMat {
    ftorus_core::linalg::CMat::from_element(1, 1, c)
}

/// Exact min_p ‖y − ρ̂(p)‖, pruned by the Plancherel lower bound
/// ‖y − ρ̂(p)‖ ≥ (‖y − Py‖₂² + ‖Py − p‖₂²)^{1/2}.
fn nearest(y: &ModelElement, py: &NCPoly, net: &[NCPoly], model: &Arc<MatrixModel>) -> Result<f64> {
    let outside = (schatten_norm(y, 2.0)?.powi(2) - l2_norm(py).powi(2)).max(0.0);
    let mut lb: Vec<(f64, usize)> = net
        .iter()
        .enumerate()
        .map(|(i, p)| Ok(((outside + l2_norm(&py.sub(p)?).powi(2)).sqrt(), i)))
        .collect::<Result<_>>()?;
    lb.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = f64::INFINITY;
    for (low, i) in lb {
        if low >= best {
            break;
        }
        best = best.min(op_norm(&y.sub(&embed_symmetrized(&net[i], model)?))?);
    }
    Ok(best)
}
