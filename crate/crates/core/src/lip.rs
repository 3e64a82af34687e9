//! Lipschitz seminorms L(x) = max{‖Γ(x,x)^{1/2}‖, ‖Γ(x*,x*)^{1/2}‖} in the symbol
//! algebra (grid oracle) and in matrix models (operator norm), plus Riesz and
//! Sobolev-type empirical constants and seeded sampling of Lipschitz balls.

use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{LengthFunction, Modulus};
use crate::linalg::{frobenius, hermitian_eigenvalues, CMat};
use crate::model::{
    clock_shift, embed, embed_symmetrized, matrix_op_norm, model_gradient_form, model_multiplier, op_norm,
    MatrixModel, ModelElement,
};
use crate::ncpoly::{
    adjoint, apply_multiplier, derivation_components, gradient_form, multiply, random_poly, Multiplier, NCPoly,
    TwistMatrix,
};
use crate::oracle::{gram_sup_oracle, sup_norm_oracle, OracleMode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipReport {
    /// ‖Γ(x,x)^{1/2}‖
    pub column: f64,
    /// ‖Γ(x*,x*)^{1/2}‖
    pub row: f64,
    pub lip: f64,
    /// "oracle" or "model".
    pub mode: String,
    pub psi: String,
    pub m: usize,
    /// Relative grid error of the oracle (0 in model mode).
    #[serde(skip, default)]
    pub rel_error: f64,
}

/// What a seminorm is evaluated on.
#[derive(Debug, Clone, Copy)]
pub enum Evaluand<'a> {
    Symbol(&'a NCPoly),
    Model(&'a ModelElement),
}

fn symbol_column(f: &NCPoly, psi: &LengthFunction, grid: Option<usize>) -> Result<(f64, f64)> {
    let mode = OracleMode::for_poly(f)?;
    let parts = derivation_components(f, psi)?;
    let g = gram_sup_oracle(&parts, mode, grid)?;
    Ok((g.value.max(0.0).sqrt(), g.rel_error))
}

/// λ_max of a Hermitian PSD model element.
fn psd_top(g: &ModelElement) -> Result<f64> {
    let h = (&g.matrix + g.matrix.adjoint()) * Complex64::new(0.5, 0.0);
    Ok(matrix_op_norm(&h)?.max(0.0))
}

fn model_column(x: &ModelElement, psi: &LengthFunction) -> Result<f64> {
    let g = model_gradient_form(x, x, psi)?;
    Ok(psd_top(&g)?.sqrt())
}

/// L(x) with its column and row parts. Symbol mode uses the grid oracle over the
/// cocycle assembly Γ = Σ_r δ_r*δ_r; model mode the operator norm of Γ^n.
pub fn lip_seminorm(x: Evaluand<'_>, psi: &LengthFunction, grid: Option<usize>) -> Result<LipReport> {
    match x {
        Evaluand::Symbol(f) => {
            let (column, e1) = symbol_column(f, psi, grid)?;
            let (row, e2) = symbol_column(&adjoint(f), psi, grid)?;
            Ok(LipReport {
                column,
                row,
                lip: column.max(row),
                mode: "oracle".into(),
                psi: psi.name(),
                m: f.amplification(),
                rel_error: e1.max(e2),
            })
        }
        Evaluand::Model(e) => {
            let column = model_column(e, psi)?;
            let row = model_column(&e.adjoint(), psi)?;
            Ok(LipReport {
                column,
                row,
                lip: column.max(row),
                mode: "model".into(),
                psi: psi.name(),
                m: e.amp,
                rel_error: 0.0,
            })
        }
    }
}

/// Sup norm of the evaluand: grid oracle or operator norm.
pub fn sup_norm(x: Evaluand<'_>, grid: Option<usize>) -> Result<f64> {
    match x {
        Evaluand::Symbol(f) => Ok(sup_norm_oracle(f, OracleMode::for_poly(f)?, grid)?.value),
        Evaluand::Model(e) => op_norm(e),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszCheck {
    /// ‖A^{1/2}x‖_p
    pub lhs: f64,
    pub column: f64,
    pub row: f64,
    /// max(column, row)
    pub rhs: f64,
    pub ratio: f64,
}

fn even_exponent(p: f64) -> Result<u32> {
    if p >= 2.0 && p.fract() == 0.0 && (p as u32).is_multiple_of(2) {
        Ok(p as u32)
    } else {
        Err(Error::InvalidParameter(format!("symbol-mode Schatten norms need an even integer p or ∞, got {p}")))
    }
}

/// τ(|y|^p)^{1/p} for even p, computed exactly in the symbol algebra.
fn symbol_schatten(y: &NCPoly, p: u32) -> Result<f64> {
    let g = multiply(&adjoint(y), y)?;
    Ok(symbol_psd_power(&g, p / 2)?.powf(1.0 / p as f64))
}

/// τ(g^j) for a PSD polynomial g, clamped at zero.
fn symbol_psd_power(g: &NCPoly, j: u32) -> Result<f64> {
    let mut acc = g.clone();
    for _ in 1..j {
        acc = multiply(&acc, g)?;
    }
    Ok(acc.trace().re.max(0.0))
}

/// ‖Γ(y,y)^{1/2}‖_p = τ(Γ^{p/2})^{1/p}.
fn symbol_gamma_p(y: &NCPoly, psi: &LengthFunction, p: f64, grid: Option<usize>) -> Result<f64> {
    if p.is_infinite() {
        return Ok(symbol_column(y, psi, grid)?.0);
    }
    let k = even_exponent(p)?;
    let g = gradient_form(y, y, psi)?;
    Ok(symbol_psd_power(&g, k / 2)?.powf(1.0 / p))
}

fn psd_schatten_half(g: &ModelElement, p: f64) -> Result<f64> {
    if p.is_infinite() {
        return Ok(psd_top(g)?.sqrt());
    }
    let h = (&g.matrix + g.matrix.adjoint()) * Complex64::new(0.5, 0.0);
    let ev = hermitian_eigenvalues(&h);
    let n = ev.len() as f64;
    let s: f64 = ev.iter().map(|v| v.max(0.0).powf(p / 2.0)).sum();
    Ok((s / n).powf(1.0 / p))
}

/// Compares ‖A^{1/2}x‖_p with max{‖Γ(x,x)^{1/2}‖_p, ‖Γ(x*,x*)^{1/2}‖_p} for mean-zero x.
pub fn riesz_check(x: Evaluand<'_>, psi: &LengthFunction, p: f64, grid: Option<usize>) -> Result<RieszCheck> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be ≥ 1, got {p}")));
    }
    let (lhs, column, row) = match x {
        Evaluand::Symbol(f) => {
            check_mean_zero(frobenius(&f.mean_block()), f)?;
            let half = apply_multiplier(f, Multiplier::Power { psi, s: 0.5 })?;
            let lhs = if p.is_infinite() {
                sup_norm(Evaluand::Symbol(&half), grid)?
            } else {
                symbol_schatten(&half, even_exponent(p)?)?
            };
            let column = symbol_gamma_p(f, psi, p, grid)?;
            let row = symbol_gamma_p(&adjoint(f), psi, p, grid)?;
            (lhs, column, row)
        }
        Evaluand::Model(e) => {
            let mean = frobenius(&e.mean_block());
            if mean > 1e-10 * frobenius(&e.matrix).max(1.0) {
                return Err(Error::NonzeroMean(mean));
            }
            let half = model_multiplier(e, Multiplier::Power { psi, s: 0.5 })?;
            let lhs = crate::model::schatten_norm(&half, p)?;
            let column = psd_schatten_half(&model_gradient_form(e, e, psi)?, p)?;
            let es = e.adjoint();
            let row = psd_schatten_half(&model_gradient_form(&es, &es, psi)?, p)?;
            (lhs, column, row)
        }
    };
    let rhs = column.max(row);
    Ok(RieszCheck { lhs, column, row, rhs, ratio: lhs / rhs })
}

fn check_mean_zero(mean: f64, f: &NCPoly) -> Result<()> {
    let scale = f.terms().map(|(_, b)| frobenius(b)).fold(0.0, f64::max).max(1.0);
    if mean > 1e-10 * scale {
        return Err(Error::NonzeroMean(mean));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevRow {
    pub n: u64,
    /// max over samples of ‖x − τ(x)1‖ / L(x)
    pub constant: f64,
    pub samples: usize,
}

/// Empirical constants C(n) on clock/shift models. ψ of dimension 1 uses the
/// clock only (diagonal model); dimension 2 uses both generators with Θ = 0.
/// Sample i is drawn from the stream (seed, i), so every n sees the same symbols.
pub fn sobolev_constant(
    psi: &LengthFunction,
    ns: &[u64],
    samples: usize,
    band: u64,
    seed: u64,
) -> Result<Vec<SobolevRow>> {
    let d = psi.dim();
    if !(1..=2).contains(&d) {
        return Err(Error::InvalidParameter(format!("Sobolev sweep supports d ∈ {{1,2}}, got {d}")));
    }
    let twist = TwistMatrix::zero(d);
    let polys: Vec<NCPoly> = (0..samples)
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            random_poly(&twist, 1, band, &mut rng, false)
        })
        .collect();
    let mut out = Vec::with_capacity(ns.len());
    for &n in ns {
        if 2 * band >= n {
            return Err(Error::BandTooLarge { band, n });
        }
        let model = clock_shift(n)?;
        let psi_n = psi.with(Modulus::Finite(n), d);
        let mut best: f64 = 0.0;
        let mut used = 0;
        for f in &polys {
            let x = embed(f, &model)?;
            let l = lip_seminorm(Evaluand::Model(&x), &psi_n, None)?.lip;
            if l <= 1e-12 {
                continue;
            }
            used += 1;
            best = best.max(op_norm(&x.mean_zero())? / l);
        }
        if used == 0 {
            return Err(Error::Degenerate("every sample has L = 0".into()));
        }
        out.push(SobolevRow { n, constant: best, samples: used });
    }
    Ok(out)
}

/// Per-sample generator: stream `index` of the ChaCha8 generator seeded by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Where ball membership is measured.
#[derive(Debug, Clone)]
pub enum BallMode {
    Symbol { grid: Option<usize> },
    /// Through embed (or its symmetrization for self-adjoint samples).
    Model(Arc<MatrixModel>),
}

#[derive(Debug, Clone)]
pub struct LipBallSpec {
    pub radius: f64,
    pub band: u64,
    pub amp: usize,
    pub count: usize,
    pub seed: u64,
    pub self_adjoint: bool,
    pub twist: TwistMatrix,
    pub psi: LengthFunction,
    pub mode: BallMode,
}

const BALL_RETRIES: u64 = 8;

/// Evaluates (L, ‖·‖) of a symbol in the given mode.
pub fn lip_and_norm(f: &NCPoly, psi: &LengthFunction, mode: &BallMode, self_adjoint: bool) -> Result<(f64, f64)> {
    match mode {
        BallMode::Symbol { grid } => {
            let l = lip_seminorm(Evaluand::Symbol(f), psi, *grid)?.lip;
            Ok((l, sup_norm(Evaluand::Symbol(f), *grid)?))
        }
        BallMode::Model(model) => {
            let x = if self_adjoint { embed_symmetrized(f, model)? } else { embed(f, model)? };
            let l = lip_seminorm(Evaluand::Model(&x), psi, None)?.lip;
            Ok((l, op_norm(&x)?))
        }
    }
}

/// Seeded draws rescaled by max(L(x), ‖x‖/R) into D_R = {L ≤ 1, ‖x‖ ≤ R}.
pub fn lip_ball_sample(spec: &LipBallSpec) -> Result<Vec<NCPoly>> {
    if !(spec.radius > 0.0) {
        return Err(Error::InvalidParameter(format!("ball radius must be positive, got {}", spec.radius)));
    }
    let mut out = Vec::with_capacity(spec.count);
    for i in 0..spec.count as u64 {
        let mut drawn = None;
        for attempt in 0..BALL_RETRIES {
            let mut rng = sample_rng(spec.seed, i * BALL_RETRIES + attempt);
            let f = random_poly(&spec.twist, spec.amp, spec.band, &mut rng, spec.self_adjoint);
            let (l, nrm) = lip_and_norm(&f, &spec.psi, &spec.mode, spec.self_adjoint)?;
            let s = l.max(nrm / spec.radius);
            if s > 1e-300 && s.is_finite() {
                drawn = Some(f.scale(Complex64::new(1.0 / s, 0.0)));
                break;
            }
        }
        out.push(drawn.ok_or_else(|| Error::Degenerate(format!("sample {i}: L = ‖x‖ = 0 after retries")))?);
    }
    Ok(out)
}

/// Amplified seminorm of a ⊗ 1, which vanishes for every block a.
pub fn scalar_block_lip(a: &CMat, twist: &TwistMatrix, psi: &LengthFunction) -> Result<LipReport> {
    let f = NCPoly::block_monomial(twist, &vec![0; twist.dim()], a.clone());
    lip_seminorm(Evaluand::Symbol(&f), psi, None)
}
