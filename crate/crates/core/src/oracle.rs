//! Grid oracles for sup norms of symbols.
//!
//! Commutative: the symbol Σ f̂(k)e^{2πi⟨k,t⟩} is an m×m matrix function on 𝕋^d.
//! Rational fiber (d = 2, θ = p/q): u^j v^k ↦ u_j(q)v_{kp}(q)·e^{2πi(js+kt)}.
//! Sampling gives lower bounds; a trig polynomial of band B loses at most a
//! relative ½(πBd/G)² between grid points (Bernstein), which is reported.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{cis, hermitian_eigenvalues, kron, small_spectral_norm, CMat, ZERO};
use crate::model::{clock_power, shift_power};
use crate::ncpoly::NCPoly;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    Commutative,
    RationalFiber { p: u64, q: u64 },
}

impl OracleMode {
    /// The oracle matching a polynomial's twist, when one exists.
    pub fn for_poly(f: &NCPoly) -> Result<Self> {
        if f.twist().is_zero() {
            return Ok(OracleMode::Commutative);
        }
        match f.twist().as_rational() {
            Some((p, q)) if f.dim() == 2 => Ok(OracleMode::RationalFiber { p, q }),
            _ => Err(Error::NoOracle("twist is neither zero nor a rational d=2 rotation".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleNorm {
    /// Maximum over the grid; a lower bound of the true sup.
    pub value: f64,
    pub grid: usize,
    /// Relative gap bound between the grid maximum and the true sup.
    pub rel_error: f64,
}

pub fn default_grid(band: u64) -> usize {
    64usize.max(16 * band as usize)
}

/// Sup norm of f over the grid.
pub fn sup_norm_oracle(f: &NCPoly, mode: OracleMode, grid: Option<usize>) -> Result<OracleNorm> {
    grid_max(std::slice::from_ref(f), mode, grid, Reduce::Norm)
}

/// sup_t λ_max(Σ_r S_r(t)*S_r(t)) over the grid, i.e. the sup norm of Σ_r f_r*f_r
/// evaluated in a manifestly positive form.
pub fn gram_sup_oracle(parts: &[NCPoly], mode: OracleMode, grid: Option<usize>) -> Result<OracleNorm> {
    if parts.is_empty() {
        return Ok(OracleNorm { value: 0.0, grid: grid.unwrap_or(64), rel_error: 0.0 });
    }
    grid_max(parts, mode, grid, Reduce::Gram)
}

#[derive(Clone, Copy)]
enum Reduce {
    Norm,
    Gram,
}

fn check_mode(f: &NCPoly, mode: OracleMode) -> Result<usize> {
    match mode {
        OracleMode::Commutative => {
            if !f.twist().is_zero() {
                return Err(Error::TwistMismatch("commutative oracle needs Θ = 0".into()));
            }
            Ok(1)
        }
        OracleMode::RationalFiber { p, q } => {
            let want = crate::ncpoly::TwistMatrix::rational(p as i64, q)?;
            if f.dim() != 2 || f.twist().as_rational() != want.as_rational() {
                return Err(Error::TwistMismatch(format!("fiber oracle needs d = 2 and θ = {p}/{q}")));
            }
            Ok(want.as_rational().expect("rational").1 as usize)
        }
    }
}

/// Flattened D×D fiber blocks B_k (row-major) per monomial.
fn fiber_terms(f: &NCPoly, mode: OracleMode) -> Result<(usize, Vec<(Vec<i64>, Vec<Complex64>)>)> {
    let q = check_mode(f, mode)?;
    let dd = f.amplification() * q;
    let mut out = Vec::with_capacity(f.len());
    for (k, b) in f.terms() {
        let block = match mode {
            OracleMode::Commutative => b.clone(),
            OracleMode::RationalFiber { p, .. } => {
                let p = (p % q as u64) as i64;
                let w = clock_power(q, k[0]).mul(&shift_power(q, k[1] * p)).to_dense();
                kron(b, &w)
            }
        };
        let flat: Vec<Complex64> = (0..dd * dd).map(|i| block[(i / dd, i % dd)]).collect();
        out.push((k.clone(), flat));
    }
    Ok((dd, out))
}

fn grid_max(polys: &[NCPoly], mode: OracleMode, grid: Option<usize>, reduce: Reduce) -> Result<OracleNorm> {
    let d = polys[0].dim();
    let band = polys.iter().map(|p| p.band()).max().unwrap_or(0);
    let g = grid.unwrap_or_else(|| default_grid(band));
    if g < 8 * band as usize || g == 0 {
        return Err(Error::GridTooCoarse { grid: g, band, min: (8 * band as usize).max(1) });
    }
    let mut terms = Vec::with_capacity(polys.len());
    let mut dd = 0;
    for p in polys {
        if p.dim() != d || p.twist() != polys[0].twist() || p.amplification() != polys[0].amplification() {
            return Err(Error::TwistMismatch("oracle inputs must share twist and amplification".into()));
        }
        let (n, t) = fiber_terms(p, mode)?;
        dd = n;
        terms.push(t);
    }
    let table = Twiddle::new(g, band as i64);
    let value = match d {
        1 => eval_1d(&terms, dd, g, &table, reduce),
        2 => eval_2d(&terms, dd, g, &table, reduce),
        _ => eval_nd(&terms, d, dd, g, &table, reduce),
    };
    let rel = 0.5 * (std::f64::consts::PI * band as f64 * d as f64 / g as f64).powi(2);
    Ok(OracleNorm { value, grid: g, rel_error: rel })
}

/// e^{2πi k g/G} for |k| ≤ band and g < G, with exact integer reduction.
struct Twiddle {
    g: usize,
    band: i64,
    w: Vec<Complex64>,
}

impl Twiddle {
    fn new(g: usize, band: i64) -> Self {
        let roots: Vec<Complex64> = (0..g).map(|r| cis(r as f64 / g as f64)).collect();
        let mut w = Vec::with_capacity((2 * band as usize + 1) * g);
        for k in -band..=band {
            for t in 0..g {
                let r = (k * t as i64).rem_euclid(g as i64) as usize;
                w.push(roots[r]);
            }
        }
        Self { g, band, w }
    }

    #[inline]
    fn at(&self, k: i64, t: usize) -> Complex64 {
        self.w[(k + self.band) as usize * self.g + t]
    }
}

fn reduce_point(mats: &[Vec<Complex64>], dd: usize, reduce: Reduce) -> f64 {
    match reduce {
        Reduce::Norm => {
            let m = &mats[0];
            if dd == 1 {
                m[0].norm()
            } else {
                small_spectral_norm(&CMat::from_row_slice(dd, dd, m))
            }
        }
        Reduce::Gram => {
            if dd == 1 {
                return mats.iter().map(|m| m[0].norm_sqr()).sum();
            }
            let mut h = CMat::zeros(dd, dd);
            for m in mats {
                let s = CMat::from_row_slice(dd, dd, m);
                h += s.adjoint() * s;
            }
            hermitian_eigenvalues(&h).into_iter().fold(0.0, f64::max).max(0.0)
        }
    }
}

fn eval_1d(terms: &[Vec<(Vec<i64>, Vec<Complex64>)>], dd: usize, g: usize, tw: &Twiddle, reduce: Reduce) -> f64 {
    let mut bufs = vec![vec![ZERO; dd * dd]; terms.len()];
    let mut best: f64 = 0.0;
    for t in 0..g {
        for (buf, ts) in bufs.iter_mut().zip(terms) {
            buf.iter_mut().for_each(|z| *z = ZERO);
            for (k, b) in ts {
                let w = tw.at(k[0], t);
                for (z, x) in buf.iter_mut().zip(b) {
                    *z += w * x;
                }
            }
        }
        best = best.max(reduce_point(&bufs, dd, reduce));
    }
    best
}

fn eval_2d(terms: &[Vec<(Vec<i64>, Vec<Complex64>)>], dd: usize, g: usize, tw: &Twiddle, reduce: Reduce) -> f64 {
    let sz = dd * dd;
    // inner[p] : list of (k1, flattened G × D² partial sums over k2)
    let mut inner: Vec<Vec<(i64, Vec<Complex64>)>> = Vec::with_capacity(terms.len());
    for ts in terms {
        let mut rows: Vec<(i64, Vec<Complex64>)> = Vec::new();
        for (k, b) in ts {
            let pos = match rows.iter().position(|(k1, _)| *k1 == k[0]) {
                Some(p) => p,
                None => {
                    rows.push((k[0], vec![ZERO; g * sz]));
                    rows.len() - 1
                }
            };
            let acc = &mut rows[pos].1;
            for t2 in 0..g {
                let w = tw.at(k[1], t2);
                let slot = &mut acc[t2 * sz..(t2 + 1) * sz];
                for (z, x) in slot.iter_mut().zip(b) {
                    *z += w * x;
                }
            }
        }
        inner.push(rows);
    }
    let mut bufs = vec![vec![ZERO; sz]; terms.len()];
    let mut best: f64 = 0.0;
    for t1 in 0..g {
        for t2 in 0..g {
            for (buf, rows) in bufs.iter_mut().zip(&inner) {
                buf.iter_mut().for_each(|z| *z = ZERO);
                for (k1, acc) in rows {
                    let w = tw.at(*k1, t1);
                    for (z, x) in buf.iter_mut().zip(&acc[t2 * sz..(t2 + 1) * sz]) {
                        *z += w * x;
                    }
                }
            }
            best = best.max(reduce_point(&bufs, dd, reduce));
        }
    }
    best
}

fn eval_nd(
    terms: &[Vec<(Vec<i64>, Vec<Complex64>)>],
    d: usize,
    dd: usize,
    g: usize,
    tw: &Twiddle,
    reduce: Reduce,
) -> f64 {
    let mut bufs = vec![vec![ZERO; dd * dd]; terms.len()];
    let mut best: f64 = 0.0;
    let total = g.pow(d as u32);
    let mut t = vec![0usize; d];
    for flat in 0..total {
        let mut r = flat;
        for c in t.iter_mut().rev() {
            *c = r % g;
            r /= g;
        }
        for (buf, ts) in bufs.iter_mut().zip(terms) {
            buf.iter_mut().for_each(|z| *z = ZERO);
            for (k, b) in ts {
                let mut w = Complex64::new(1.0, 0.0);
                for (kc, tc) in k.iter().zip(&t) {
                    w *= tw.at(*kc, *tc);
                }
                for (z, x) in buf.iter_mut().zip(b) {
                    *z += w * x;
                }
            }
        }
        best = best.max(reduce_point(&bufs, dd, reduce));
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ONE;
    use crate::ncpoly::{adjoint, TwistMatrix};

    fn cosines(t: &TwistMatrix) -> NCPoly {
        let mut f = NCPoly::zero(t, 1);
        for i in 0..t.dim() {
            let u = NCPoly::generator(t, i);
            f = f.add(&u).unwrap().add(&adjoint(&u)).unwrap();
        }
        f
    }

    #[test]
    fn commutative_examples() {
        let z1 = TwistMatrix::zero(1);
        let n = sup_norm_oracle(&cosines(&z1), OracleMode::Commutative, None).unwrap();
        assert!((n.value - 2.0).abs() < 1e-14);
        let z2 = TwistMatrix::zero(2);
        let n = sup_norm_oracle(&cosines(&z2), OracleMode::Commutative, None).unwrap();
        assert!((n.value - 4.0).abs() < 1e-14);
        let z3 = TwistMatrix::zero(3);
        let n = sup_norm_oracle(&cosines(&z3), OracleMode::Commutative, Some(16)).unwrap();
        assert!((n.value - 6.0).abs() < 1e-13);
    }

    #[test]
    fn fiber_example() {
        let half = TwistMatrix::rational(1, 2).unwrap();
        let n = sup_norm_oracle(&cosines(&half), OracleMode::RationalFiber { p: 1, q: 2 }, None).unwrap();
        assert!((n.value - 8f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn fiber_with_zero_twist_matches_commutative() {
        let z2 = TwistMatrix::zero(2);
        let f = NCPoly::from_terms(&z2, &[(vec![1, 2], ONE), (vec![0, -1], Complex64::new(0.3, 2.0))]);
        let a = sup_norm_oracle(&f, OracleMode::Commutative, None).unwrap();
        let b = sup_norm_oracle(&f, OracleMode::RationalFiber { p: 0, q: 1 }, None).unwrap();
        assert!((a.value - b.value).abs() < 1e-13);
    }

    #[test]
    fn rejects_mismatch_and_coarse_grid() {
        let half = TwistMatrix::rational(1, 2).unwrap();
        let f = cosines(&half);
        assert!(matches!(sup_norm_oracle(&f, OracleMode::Commutative, None), Err(Error::TwistMismatch(_))));
        assert!(matches!(
            sup_norm_oracle(&f, OracleMode::RationalFiber { p: 1, q: 3 }, None),
            Err(Error::TwistMismatch(_))
        ));
        let z1 = TwistMatrix::zero(1);
        let g = NCPoly::monomial(&z1, &[4], ONE);
        assert!(matches!(sup_norm_oracle(&g, OracleMode::Commutative, Some(16)), Err(Error::GridTooCoarse { .. })));
        let irr = TwistMatrix::new(2, &[std::f64::consts::FRAC_1_SQRT_2]).unwrap();
        assert!(OracleMode::for_poly(&cosines(&irr)).is_err());
    }

    #[test]
    fn gram_matches_norm_squared() {
        let z1 = TwistMatrix::zero(1);
        let f = cosines(&z1);
        let n = gram_sup_oracle(std::slice::from_ref(&f), OracleMode::Commutative, None).unwrap();
        assert!((n.value - 4.0).abs() < 1e-13);
    }
}
