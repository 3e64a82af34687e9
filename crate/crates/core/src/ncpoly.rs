//! Normal-ordered twisted Laurent polynomials Σ f̂(k) ⊗ u₁^{k₁}⋯u_d^{k_d} over ℤ^d
//! with m×m block coefficients, where u_k u_l = e^{2πiθ_{kl}} u_l u_k.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::lattice::{BandMask, LengthFunction, MultiplierSpec};
use crate::linalg::{cis, frobenius, CMat, ONE, ZERO};

/// Skew-symmetric twist Θ, upper triangle reduced into [0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct TwistMatrix {
    d: usize,
    theta: Vec<f64>,
    rational: Option<(u64, u64)>,
}

impl TwistMatrix {
    pub fn zero(d: usize) -> Self {
        Self { d, theta: vec![0.0; d * d], rational: if d == 2 { Some((0, 1)) } else { None } }
    }

    /// Upper-triangle entries θ₁₂, θ₁₃, …, θ_{d−1,d} in row order.
    pub fn new(d: usize, upper: &[f64]) -> Result<Self> {
        if upper.len() != d * d.saturating_sub(1) / 2 {
            return Err(Error::DimensionMismatch { expected: d * d.saturating_sub(1) / 2, found: upper.len() });
        }
        let mut theta = vec![0.0; d * d];
        let mut it = upper.iter();
        for i in 0..d {
            for j in i + 1..d {
                let t = it.next().expect("length checked").rem_euclid(1.0);
                theta[i * d + j] = t;
                theta[j * d + i] = -t;
            }
        }
        let rational = if theta.iter().all(|&t| t == 0.0) && d == 2 { Some((0, 1)) } else { None };
        Ok(Self { d, theta, rational })
    }

    /// d = 2 with θ₁₂ = p/q.
    pub fn rational(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidParameter("denominator must be positive".into()));
        }
        let p = p.rem_euclid(q as i64) as u64;
        let g = gcd(p, q);
        let (p, q) = (p / g, q / g);
        let t = p as f64 / q as f64;
        Ok(Self { d: 2, theta: vec![0.0, t, -t, 0.0], rational: Some((p, q)) })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn theta(&self, i: usize, j: usize) -> f64 {
        self.theta[i * self.d + j]
    }

    pub fn is_zero(&self) -> bool {
        self.theta.iter().all(|&t| t == 0.0)
    }

    /// θ₁₂ = p/q in lowest terms when known.
    pub fn as_rational(&self) -> Option<(u64, u64)> {
        self.rational
    }

    /// Fractional exponent x ∈ [0,1) with u^a·u^b = e^{2πix}·u^{a+b}.
    fn product_exponent(&self, a: &[i64], b: &[i64]) -> f64 {
        if let Some((p, q)) = self.rational {
            // i = 2, j = 1: a₂b₁θ₂₁ = −a₂b₁·p/q
            let r = (-(a[1] as i128) * (b[0] as i128) * p as i128).rem_euclid(q as i128);
            return r as f64 / q as f64;
        }
        let mut x = 0.0;
        for i in 0..self.d {
            for j in 0..i {
                let s = (a[i] as i128 * b[j] as i128) as f64;
                x += (s * self.theta(i, j)).rem_euclid(1.0);
            }
        }
        x.rem_euclid(1.0)
    }

    /// Fractional exponent of the adjoint phase −Σ_{i<j} aᵢaⱼθᵢⱼ.
    fn adjoint_exponent(&self, a: &[i64]) -> f64 {
        if let Some((p, q)) = self.rational {
            let r = (-(a[0] as i128) * (a[1] as i128) * p as i128).rem_euclid(q as i128);
            return r as f64 / q as f64;
        }
        let mut x = 0.0;
        for i in 0..self.d {
            for j in i + 1..self.d {
                let s = (a[i] as i128 * a[j] as i128) as f64;
                x -= (s * self.theta(i, j)).rem_euclid(1.0);
            }
        }
        x.rem_euclid(1.0)
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

/// Scalar with u^a·u^b = phase·u^{a+b}: exp(2πi Σ_{i>j} aᵢbⱼθᵢⱼ).
pub fn normal_order_phase(a: &[i64], b: &[i64], twist: &TwistMatrix) -> Result<Complex64> {
    check_dim(twist.d, a.len())?;
    check_dim(twist.d, b.len())?;
    Ok(cis(twist.product_exponent(a, b)))
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Twisted polynomial with block coefficients indexed by ℤ^d.
#[derive(Debug, Clone, PartialEq)]
pub struct NCPoly {
    twist: TwistMatrix,
    m: usize,
    coeffs: BTreeMap<Vec<i64>, CMat>,
}

impl NCPoly {
    pub fn zero(twist: &TwistMatrix, m: usize) -> Self {
        Self { twist: twist.clone(), m, coeffs: BTreeMap::new() }
    }

    pub fn identity(twist: &TwistMatrix, m: usize) -> Self {
        Self::block_monomial(twist, &vec![0; twist.d], CMat::identity(m, m))
    }

    pub fn monomial(twist: &TwistMatrix, k: &[i64], c: Complex64) -> Self {
        Self::block_monomial(twist, k, CMat::from_element(1, 1, c))
    }

    pub fn block_monomial(twist: &TwistMatrix, k: &[i64], block: CMat) -> Self {
        assert_eq!(k.len(), twist.d, "index dimension");
        assert!(block.is_square(), "square block");
        let mut p = Self::zero(twist, block.nrows());
        p.add_term(k, &block);
        p.prune();
        p
    }

    /// The i-th generator u_{i+1}.
    pub fn generator(twist: &TwistMatrix, i: usize) -> Self {
        let mut k = vec![0; twist.d];
        k[i] = 1;
        Self::monomial(twist, &k, ONE)
    }

    /// Builds from scalar terms (m = 1).
    pub fn from_terms(twist: &TwistMatrix, terms: &[(Vec<i64>, Complex64)]) -> Self {
        let mut p = Self::zero(twist, 1);
        for (k, c) in terms {
            p.add_term(k, &CMat::from_element(1, 1, *c));
        }
        p.prune();
        p
    }

    pub fn twist(&self) -> &TwistMatrix {
        &self.twist
    }

    pub fn dim(&self) -> usize {
        self.twist.d
    }

    pub fn amplification(&self) -> usize {
        self.m
    }

    pub fn coeff(&self, k: &[i64]) -> Option<&CMat> {
        self.coeffs.get(k)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &CMat)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest |coordinate| over the support.
    pub fn band(&self) -> u64 {
        self.coeffs.keys().flat_map(|k| k.iter().map(|c| c.unsigned_abs())).max().unwrap_or(0)
    }

    /// Adds `block` to the coefficient of u^k (no pruning).
    pub fn add_term(&mut self, k: &[i64], block: &CMat) {
        assert_eq!(block.shape(), (self.m, self.m), "block shape");
        match self.coeffs.get_mut(k) {
            Some(b) => *b += block,
            None => {
                self.coeffs.insert(k.to_vec(), block.clone());
            }
        }
    }

    /// Drops blocks below 1e-14 of the largest block norm.
    pub fn prune(&mut self) {
        let max = self.coeffs.values().map(frobenius).fold(0.0, f64::max);
        let cut = 1e-14 * max;
        self.coeffs.retain(|_, b| {
            let n = frobenius(b);
            n > cut && n > 0.0
        });
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for b in out.coeffs.values_mut() {
            *b *= c;
        }
        out.prune();
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (k, b) in &other.coeffs {
            out.add_term(k, b);
        }
        out.prune();
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    /// (id⊗τ)(f): the index-0 block.
    pub fn mean_block(&self) -> CMat {
        self.coeffs.get(&vec![0; self.twist.d]).cloned().unwrap_or_else(|| CMat::zeros(self.m, self.m))
    }

    /// Normalized trace tr_m(f̂(0))/m.
    pub fn trace(&self) -> Complex64 {
        self.mean_block().trace() / self.m as f64
    }

    /// a ⊗ f: every coefficient b becomes kron(a, b).
    pub fn tensor_block(&self, a: &CMat) -> Self {
        let mut out = Self::zero(&self.twist, a.nrows() * self.m);
        for (k, b) in &self.coeffs {
            out.coeffs.insert(k.clone(), crate::linalg::kron(a, b));
        }
        out.prune();
        out
    }

    /// Largest entrywise coefficient difference.
    pub fn max_diff(&self, other: &Self) -> f64 {
        let zero = CMat::zeros(self.m, self.m);
        let mut d: f64 = 0.0;
        for k in self.coeffs.keys().chain(other.coeffs.keys()) {
            let a = self.coeffs.get(k).unwrap_or(&zero);
            let b = other.coeffs.get(k).unwrap_or(&zero);
            d = d.max(crate::linalg::max_abs_diff(a, b));
        }
        d
    }

    pub fn is_self_adjoint(&self, tol: f64) -> bool {
        self.max_diff(&adjoint(self)) <= tol
    }

    /// ½(f + f*).
    pub fn real_part(&self) -> Self {
        let mut out = self.add(&adjoint(self)).expect("same shape");
        out = out.scale(Complex64::new(0.5, 0.0));
        out
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.twist != other.twist {
            return Err(Error::TwistMismatch("different twists".into()));
        }
        if self.m != other.m {
            return Err(Error::TwistMismatch(format!("amplification {} vs {}", self.m, other.m)));
        }
        Ok(())
    }

    /// Lines `k₁ … k_d re im …` (m² complex entries, row-major) after a header.
    pub fn to_text(&self) -> String {
        let mut s = format!("# ncpoly d={} m={}\n", self.twist.d, self.m);
        let upper: Vec<String> = (0..self.twist.d)
            .flat_map(|i| (i + 1..self.twist.d).map(move |j| (i, j)))
            .map(|(i, j)| format!("{:.16e}", self.twist.theta(i, j)))
            .collect();
        s.push_str(&format!("# theta {}\n", upper.join(" ")));
        if let Some((p, q)) = self.twist.rational {
            s.push_str(&format!("# rational {p} {q}\n"));
        }
        for (k, b) in &self.coeffs {
            let mut toks: Vec<String> = k.iter().map(|c| c.to_string()).collect();
            for i in 0..self.m {
                for j in 0..self.m {
                    toks.push(format!("{:.16e}", b[(i, j)].re));
                    toks.push(format!("{:.16e}", b[(i, j)].im));
                }
            }
            s.push_str(&toks.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut d = None;
        let mut m = None;
        let mut upper: Vec<f64> = Vec::new();
        let mut rational = None;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            let bad = |msg: String| Error::Parse { line: i + 1, msg };
            if let Some(rest) = line.strip_prefix('#') {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                match toks.first().copied() {
                    Some("ncpoly") => {
                        for t in &toks[1..] {
                            if let Some(v) = t.strip_prefix("d=") {
                                d = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?);
                            } else if let Some(v) = t.strip_prefix("m=") {
                                m = Some(v.parse::<usize>().map_err(|e| bad(e.to_string()))?);
                            }
                        }
                    }
                    Some("theta") => {
                        upper = toks[1..]
                            .iter()
                            .map(|t| t.parse::<f64>())
                            .collect::<std::result::Result<_, _>>()
                            .map_err(|e| bad(e.to_string()))?;
                    }
                    Some("rational") if toks.len() == 3 => {
                        let p = toks[1].parse::<i64>().map_err(|e| bad(e.to_string()))?;
                        let q = toks[2].parse::<u64>().map_err(|e| bad(e.to_string()))?;
                        rational = Some((p, q));
                    }
                    _ => {}
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            rows.push((i + 1, line.to_string()));
        }
        let d = d.ok_or(Error::Parse { line: 1, msg: "missing header".into() })?;
        let m = m.ok_or(Error::Parse { line: 1, msg: "missing amplification".into() })?;
        let twist = match rational {
            Some((p, q)) => TwistMatrix::rational(p, q)?,
            None => TwistMatrix::new(d, &upper)?,
        };
        let mut out = Self::zero(&twist, m);
        for (line, row) in rows {
            let toks: Vec<&str> = row.split_whitespace().collect();
            if toks.len() != d + 2 * m * m {
                return Err(Error::Parse { line, msg: format!("expected {} fields, got {}", d + 2 * m * m, toks.len()) });
            }
            let k = toks[..d]
                .iter()
                .map(|t| t.parse::<i64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            let vals = toks[d..]
                .iter()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line, msg: e.to_string() })?;
            let block = CMat::from_fn(m, m, |r, c| {
                let o = 2 * (r * m + c);
                Complex64::new(vals[o], vals[o + 1])
            });
            out.add_term(&k, &block);
        }
        Ok(out)
    }
}

/// Block product with normal-order phases.
pub fn multiply(f: &NCPoly, g: &NCPoly) -> Result<NCPoly> {
    f.check_same(g)?;
    let mut out = NCPoly::zero(&f.twist, f.m);
    for (a, fa) in &f.coeffs {
        for (b, gb) in &g.coeffs {
            let c: Vec<i64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
            let ph = cis(f.twist.product_exponent(a, b));
            out.add_term(&c, &((fa * gb) * ph));
        }
    }
    out.prune();
    Ok(out)
}

/// f*: the coefficient at −a is e^{−2πiΣ_{i<j}aᵢaⱼθᵢⱼ}·f̂(a)†.
pub fn adjoint(f: &NCPoly) -> NCPoly {
    let mut out = NCPoly::zero(&f.twist, f.m);
    for (a, fa) in &f.coeffs {
        let neg: Vec<i64> = a.iter().map(|x| -x).collect();
        let ph = cis(f.twist.adjoint_exponent(a));
        out.coeffs.insert(neg, fa.adjoint() * ph);
    }
    out
}

pub fn project(f: &NCPoly, mask: &BandMask) -> NCPoly {
    let mut out = f.clone();
    out.coeffs.retain(|k, _| mask.contains(k));
    out
}

/// sqrt(Σ_k tr_m(f̂(k)*f̂(k))/m).
pub fn l2_norm(f: &NCPoly) -> f64 {
    let s: f64 = f.coeffs.values().map(|b| b.iter().map(|z| z.norm_sqr()).sum::<f64>()).sum();
    (s / f.m as f64).sqrt()
}

/// Fourier multiplier acting coefficientwise.
#[derive(Debug, Clone, Copy)]
pub enum Multiplier<'a> {
    Spec(&'a MultiplierSpec),
    /// φ(k) = e^{−tψ(k)}.
    Semigroup { psi: &'a LengthFunction, t: f64 },
    /// φ(k) = ψ(k)^s, e.g. s = ½ for A^{1/2}.
    Power { psi: &'a LengthFunction, s: f64 },
}

impl Multiplier<'_> {
    pub fn dim(&self) -> usize {
        match self {
            Multiplier::Spec(s) => s.dim,
            Multiplier::Semigroup { psi, .. } | Multiplier::Power { psi, .. } => psi.dim(),
        }
    }

    pub fn value(&self, k: &[i64]) -> Complex64 {
        match self {
            Multiplier::Spec(s) => s.value(k),
            Multiplier::Semigroup { psi, t } => Complex64::new((-t * psi.eval(k)).exp(), 0.0),
            Multiplier::Power { psi, s } => {
                let v = psi.eval(k);
                Complex64::new(if v == 0.0 { 0.0 } else { v.powf(*s) }, 0.0)
            }
        }
    }
}

pub fn apply_multiplier(f: &NCPoly, phi: Multiplier<'_>) -> Result<NCPoly> {
    check_dim(f.dim(), phi.dim())?;
    let mut out = NCPoly::zero(&f.twist, f.m);
    for (k, b) in &f.coeffs {
        let s = phi.value(k);
        if s != ZERO {
            out.coeffs.insert(k.clone(), b * s);
        }
    }
    out.prune();
    Ok(out)
}

/// Γ(f,g) = Σ_{x,y} K(x,y)·f̂(x)†ĝ(y) ⊗ (u^x)*u^y with K the Gromov form of ψ.
pub fn gradient_form(f: &NCPoly, g: &NCPoly, psi: &LengthFunction) -> Result<NCPoly> {
    f.check_same(g)?;
    check_dim(f.dim(), psi.dim())?;
    let mut out = NCPoly::zero(&f.twist, f.m);
    for (x, fx) in &f.coeffs {
        let neg: Vec<i64> = x.iter().map(|c| -c).collect();
        let adj = f.twist.adjoint_exponent(x);
        let fxa = fx.adjoint();
        for (y, gy) in &g.coeffs {
            let k = psi.gromov(x, y);
            if k == 0.0 {
                continue;
            }
            let c: Vec<i64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
            let ph = cis(adj + f.twist.product_exponent(&neg, y));
            out.add_term(&c, &((&fxa * gy) * (ph * k)));
        }
    }
    out.prune();
    Ok(out)
}

/// Derivation components δ_r(f) = Σ_x G[r,x]·f̂(x)u^x from the cocycle factor of ψ
/// on the support of f, so that Γ(f,f) = Σ_r δ_r(f)*δ_r(f).
pub fn derivation_components(f: &NCPoly, psi: &LengthFunction) -> Result<Vec<NCPoly>> {
    use crate::lattice::{cocycle_factor, GromovMatrix, LatticeIndex};
    check_dim(f.dim(), psi.dim())?;
    if f.is_empty() {
        return Ok(Vec::new());
    }
    let keys: Vec<&Vec<i64>> = f.coeffs.keys().collect();
    let n = keys.len();
    let entries = nalgebra::DMatrix::from_fn(n, n, |i, j| psi.gromov(keys[i], keys[j]));
    let indices = keys.iter().map(|k| LatticeIndex::new(k, psi.modulus())).collect();
    let g = cocycle_factor(&GromovMatrix { indices, entries }, None)?;
    let mut out = Vec::with_capacity(g.rank);
    for r in 0..g.rank {
        let mut d = NCPoly::zero(&f.twist, f.m);
        for (c, k) in keys.iter().enumerate() {
            let w = g.factor[(r, c)];
            if w != 0.0 {
                d.coeffs.insert((*k).clone(), &f.coeffs[*k] * Complex64::new(w, 0.0));
            }
        }
        out.push(d);
    }
    Ok(out)
}

/// Complex Gaussian blocks (entries with E|z|² = 1) on the box [−band, band]^d.
pub fn random_poly<R: Rng + ?Sized>(
    twist: &TwistMatrix,
    m: usize,
    band: u64,
    rng: &mut R,
    self_adjoint: bool,
) -> NCPoly {
    let mut p = NCPoly::zero(twist, m);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for k in crate::lattice::box_points(band, twist.d) {
        let block = CMat::from_fn(m, m, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        });
        p.coeffs.insert(k, block);
    }
    if self_adjoint {
        p = p.real_part();
    }
    p.prune();
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{band_projection_mask, MaskKind, Modulus};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn phase_examples() {
        let half = TwistMatrix::rational(1, 2).unwrap();
        assert!((normal_order_phase(&[0, 1], &[1, 0], &half).unwrap() - c(-1.0)).norm() < 1e-15);
        assert!((normal_order_phase(&[1, 0], &[0, 1], &half).unwrap() - ONE).norm() < 1e-15);
        let z = TwistMatrix::zero(3);
        assert_eq!(normal_order_phase(&[1, -2, 3], &[4, 5, -6], &z).unwrap(), ONE);
        assert!(normal_order_phase(&[1], &[1, 0], &half).is_err());
    }

    #[test]
    fn multiply_examples() {
        let z = TwistMatrix::zero(2);
        let (u, v) = (NCPoly::generator(&z, 0), NCPoly::generator(&z, 1));
        let uv = multiply(&u, &v).unwrap();
        assert_eq!(uv.coeff(&[1, 1]).unwrap()[(0, 0)], ONE);

        let half = TwistMatrix::rational(1, 2).unwrap();
        let (u, v) = (NCPoly::generator(&half, 0), NCPoly::generator(&half, 1));
        let vu = multiply(&v, &u).unwrap();
        assert!((vu.coeff(&[1, 1]).unwrap()[(0, 0)] - c(-1.0)).norm() < 1e-15);

        let t = TwistMatrix::new(2, &[0.3]).unwrap();
        let u = NCPoly::generator(&t, 0);
        let h = u.add(&adjoint(&u)).unwrap();
        let sq = multiply(&h, &h).unwrap();
        let expect = NCPoly::from_terms(&t, &[(vec![2, 0], ONE), (vec![0, 0], c(2.0)), (vec![-2, 0], ONE)]);
        assert!(sq.max_diff(&expect) < 1e-15);
    }

    #[test]
    fn adjoint_examples() {
        let t = TwistMatrix::new(2, &[0.3]).unwrap();
        let (u, v) = (NCPoly::generator(&t, 0), NCPoly::generator(&t, 1));
        let a = adjoint(&multiply(&u, &v).unwrap());
        assert!((a.coeff(&[-1, -1]).unwrap()[(0, 0)] - cis(-0.3)).norm() < 1e-15);
        let three = NCPoly::monomial(&t, &[1, 0], Complex64::new(3.0, 1.0));
        assert_eq!(adjoint(&three).coeff(&[-1, 0]).unwrap()[(0, 0)], Complex64::new(3.0, -1.0));
        let h = u.add(&adjoint(&u)).unwrap();
        assert!(h.is_self_adjoint(1e-15));
    }

    #[test]
    fn project_examples() {
        let z = TwistMatrix::zero(1);
        let f = NCPoly::from_terms(&z, &[(vec![0], c(2.0)), (vec![1], ONE)]);
        let mz = band_projection_mask(MaskKind::MeanZero, 0, Modulus::Infinite, 1).unwrap();
        assert_eq!(project(&f, &mz), NCPoly::generator(&z, 0));
        let p1 = band_projection_mask(MaskKind::LowBand, 1, Modulus::Infinite, 1).unwrap();
        assert!(project(&NCPoly::monomial(&z, &[2], ONE), &p1).is_empty());
        let q2 = band_projection_mask(MaskKind::Tail { coord: 0 }, 2, Modulus::Infinite, 1).unwrap();
        assert!(project(&f, &q2).is_empty());
    }

    #[test]
    fn l2_examples() {
        let z = TwistMatrix::zero(2);
        let f = NCPoly::generator(&z, 0).add(&NCPoly::generator(&z, 1)).unwrap();
        assert!((l2_norm(&f) - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(l2_norm(&NCPoly::identity(&z, 1)), 1.0);
        let mut e = CMat::zeros(2, 2);
        e[(0, 0)] = ONE;
        let g = NCPoly::block_monomial(&z, &[1, 0], e);
        assert!((l2_norm(&g) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn multiplier_examples() {
        let z = TwistMatrix::zero(1);
        let psi = LengthFunction::heat(Modulus::Infinite, 1);
        let u = NCPoly::generator(&z, 0);
        let tu = apply_multiplier(&u, Multiplier::Semigroup { psi: &psi, t: 0.7 }).unwrap();
        assert!((tu.coeff(&[1]).unwrap()[(0, 0)].re - (-0.7f64).exp()).abs() < 1e-15);
        let z2 = TwistMatrix::zero(2);
        let h = LengthFunction::heat(Modulus::Finite(8), 2);
        let m = NCPoly::monomial(&z2, &[2, -3], ONE);
        let tm = apply_multiplier(&m, Multiplier::Semigroup { psi: &h, t: 0.1 }).unwrap();
        let expect = (-0.1 * (h.eval1(2) + h.eval1(-3))).exp();
        assert!((tm.coeff(&[2, -3]).unwrap()[(0, 0)].re - expect).abs() < 1e-15);
    }

    #[test]
    fn gradient_examples() {
        let psi = LengthFunction::heat(Modulus::Infinite, 1);
        let z = TwistMatrix::zero(1);
        let u = NCPoly::generator(&z, 0);
        let g = gradient_form(&u, &u, &psi).unwrap();
        assert!(g.max_diff(&NCPoly::identity(&z, 1)) < 1e-15);
        let h = u.add(&adjoint(&u)).unwrap();
        let g = gradient_form(&h, &h, &psi).unwrap();
        let expect = NCPoly::from_terms(&z, &[(vec![0], c(2.0)), (vec![2], c(-1.0)), (vec![-2], c(-1.0))]);
        assert!(g.max_diff(&expect) < 1e-15);
        assert!(gradient_form(&NCPoly::identity(&z, 1), &h, &psi).unwrap().is_empty());

        let t = TwistMatrix::new(2, &[0.37]).unwrap();
        let psi2 = LengthFunction::heat(Modulus::Infinite, 2);
        let u = NCPoly::generator(&t, 0);
        assert!(gradient_form(&u, &u, &psi2).unwrap().max_diff(&NCPoly::identity(&t, 1)) < 1e-15);
    }

    #[test]
    fn derivation_components_assemble_gamma() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let t = TwistMatrix::new(2, &[0.21]).unwrap();
        for psi in [LengthFunction::heat(Modulus::Infinite, 2), LengthFunction::word(Modulus::Finite(16), 2)] {
            let f = random_poly(&t, 2, 2, &mut rng, false);
            let direct = gradient_form(&f, &f, &psi).unwrap();
            let mut sum = NCPoly::zero(&t, 2);
            for d in derivation_components(&f, &psi).unwrap() {
                sum = sum.add(&multiply(&adjoint(&d), &d).unwrap()).unwrap();
            }
            assert!(sum.max_diff(&direct) < 1e-9);
        }
    }

    #[test]
    fn text_roundtrip() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let t = TwistMatrix::rational(1, 2).unwrap();
        let f = random_poly(&t, 2, 2, &mut rng, true);
        assert_eq!(NCPoly::from_text(&f.to_text()).unwrap(), f);
        let t = TwistMatrix::new(3, &[0.1, 0.25, 0.7]).unwrap();
        let f = random_poly(&t, 1, 1, &mut rng, false);
        assert_eq!(NCPoly::from_text(&f.to_text()).unwrap(), f);
        assert!(matches!(NCPoly::from_text("# ncpoly d=1 m=1\n1 2\n"), Err(Error::Parse { line: 2, .. })));
    }
}
