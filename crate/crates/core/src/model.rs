//! Explicit matrix models: clock/shift, fuzzy tori and higher-dimensional
//! generators, with coefficient transport, Fourier extraction and norms.
//!
//! Generators and their monomials are generalized permutation matrices, so
//! products, traces and embeddings cost O(N) per monomial.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::lattice::{window_points, LengthFunction, Modulus};
use crate::linalg::{cis, hermitian_eigenvalues, is_hermitian, CMat, ONE, ZERO};
use crate::ncpoly::{Multiplier, NCPoly, TwistMatrix};

pub const DEFAULT_DIMENSION_CAP: usize = 4096;

/// Largest size handled by a full dense eigen-decomposition in [`op_norm`].
pub const DENSE_EIGEN_LIMIT: usize = 512;

/// Matrix with exactly one nonzero per row: M[r, cols[r]] = vals[r].
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialMatrix {
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl MonomialMatrix {
    pub fn identity(n: usize) -> Self {
        Self { cols: (0..n).collect(), vals: vec![ONE; n] }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn vals(&self) -> &[Complex64] {
        &self.vals
    }

    pub fn mul(&self, other: &Self) -> Self {
        let cols = self.cols.iter().map(|&c| other.cols[c]).collect();
        let vals = self.vals.iter().zip(&self.cols).map(|(v, &c)| v * other.vals[c]).collect();
        Self { cols, vals }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim();
        let mut cols = vec![0; n];
        let mut vals = vec![ZERO; n];
        for r in 0..n {
            cols[self.cols[r]] = r;
            vals[self.cols[r]] = self.vals[r].conj();
        }
        Self { cols, vals }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { cols: self.cols.clone(), vals: self.vals.iter().map(|v| v * c).collect() }
    }

    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim(), other.dim());
        let mut cols = Vec::with_capacity(n * m);
        let mut vals = Vec::with_capacity(n * m);
        for r in 0..n {
            for s in 0..m {
                cols.push(self.cols[r] * m + other.cols[s]);
                vals.push(self.vals[r] * other.vals[s]);
            }
        }
        Self { cols, vals }
    }

    /// Integer power; negative exponents use the adjoint (all uses are unitary).
    pub fn pow(&self, e: i64) -> Self {
        let mut base = if e < 0 { self.adjoint() } else { self.clone() };
        let mut e = e.unsigned_abs();
        let mut acc = Self::identity(self.dim());
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Normalized trace pairing tr(A·B*)/N.
    pub fn trace_pair(&self, other: &Self) -> Complex64 {
        let mut s = ZERO;
        for r in 0..self.dim() {
            if self.cols[r] == other.cols[r] {
                s += self.vals[r] * other.vals[r].conj();
            }
        }
        s / self.dim() as f64
    }

    /// Largest entrywise difference (both treated as dense).
    pub fn max_diff(&self, other: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..self.dim() {
            if self.cols[r] == other.cols[r] {
                d = d.max((self.vals[r] - other.vals[r]).norm());
            } else {
                d = d.max(self.vals[r].norm()).max(other.vals[r].norm());
            }
        }
        d
    }

    pub fn to_dense(&self) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(n, n);
        for r in 0..n {
            m[(r, self.cols[r])] = self.vals[r];
        }
        m
    }
}

/// u_j(n) = diag(ω^{jl}), ω = e^{2πi/n}.
pub fn clock_power(n: usize, j: i64) -> MonomialMatrix {
    let vals = (0..n as i64).map(|l| cis((j * l).rem_euclid(n as i64) as f64 / n as f64)).collect();
    MonomialMatrix { cols: (0..n).collect(), vals }
}

/// v_k(n) e_l = e_{l+k}.
pub fn shift_power(n: usize, k: i64) -> MonomialMatrix {
    let cols = (0..n as i64).map(|r| (r - k).rem_euclid(n as i64) as usize).collect();
    MonomialMatrix { cols, vals: vec![ONE; n] }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    ClockShift { n: u64 },
    /// θ = p/m tensored with clock/shift of size n.
    Fuzzy { p: u64, m: u64, n: u64 },
    HigherDim { n: u64, d: u64 },
}

/// Unitary generators of a fixed order with a pairwise commutation table.
#[derive(Debug, Clone)]
pub struct MatrixModel {
    dim: usize,
    order: u64,
    generators: Vec<MonomialMatrix>,
    /// exponents[r][s] = x with W_r W_s = e^{2πix} W_s W_r.
    exponents: Vec<Vec<f64>>,
    provenance: Provenance,
    powers: Vec<Vec<MonomialMatrix>>,
}

impl MatrixModel {
    fn build(
        generators: Vec<MonomialMatrix>,
        order: u64,
        exponents: Vec<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Arc<Self>> {
        let dim = generators[0].dim();
        let powers = generators
            .iter()
            .map(|g| {
                let mut row = Vec::with_capacity(order as usize);
                let mut acc = MonomialMatrix::identity(dim);
                for _ in 0..order {
                    row.push(acc.clone());
                    acc = acc.mul(g);
                }
                row
            })
            .collect();
        let model = Self { dim, order, generators, exponents, provenance, powers };
        model.check_relations(1e-12)?;
        Ok(Arc::new(model))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn generators(&self) -> &[MonomialMatrix] {
        &self.generators
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Commutation exponent x with W_r W_s = e^{2πix} W_s W_r.
    pub fn phase_exponent(&self, r: usize, s: usize) -> f64 {
        self.exponents[r][s]
    }

    /// Twist of the symbol algebra this model approximates.
    pub fn symbol_twist(&self, arity: usize) -> TwistMatrix {
        match self.provenance {
            Provenance::Fuzzy { p, m, .. } => TwistMatrix::rational(p as i64, m).expect("m > 0"),
            _ => TwistMatrix::zero(arity),
        }
    }

    pub fn index_modulus(&self) -> Modulus {
        Modulus::Finite(self.order)
    }

    /// Ordered monomial W₁^{k₁}⋯W_g^{k_g} over the first k.len() generators.
    pub fn monomial(&self, k: &[i64]) -> MonomialMatrix {
        let mut acc: Option<MonomialMatrix> = None;
        for (i, &e) in k.iter().enumerate() {
            let e = e.rem_euclid(self.order as i64) as usize;
            if e == 0 {
                continue;
            }
            let p = &self.powers[i][e];
            acc = Some(match acc {
                None => p.clone(),
                Some(a) => a.mul(p),
            });
        }
        acc.unwrap_or_else(|| MonomialMatrix::identity(self.dim))
    }

    /// Largest deviation over unitarity, declared pairwise phases and orders.
    pub fn relation_defect(&self) -> f64 {
        let id = MonomialMatrix::identity(self.dim);
        let mut worst: f64 = 0.0;
        for (r, w) in self.generators.iter().enumerate() {
            worst = worst.max(w.mul(&w.adjoint()).max_diff(&id));
            worst = worst.max(w.pow(self.order as i64).max_diff(&id));
            for (s, v) in self.generators.iter().enumerate() {
                let rhs = v.mul(w).scale(cis(self.exponents[r][s]));
                worst = worst.max(w.mul(v).max_diff(&rhs));
            }
        }
        worst
    }

    /// Unitarity, pairwise phases and orders to `tol`.
    pub fn check_relations(&self, tol: f64) -> Result<()> {
        let defect = self.relation_defect();
        if defect > tol {
            return Err(Error::RelationFailure(format!(
                "{:?}: relation defect {defect:e} exceeds {tol:e}",
                self.provenance
            )));
        }
        Ok(())
    }
}

/// u₁(n), v₁(n) with u₁v₁ = e^{2πi/n}v₁u₁.
pub fn clock_shift(n: u64) -> Result<Arc<MatrixModel>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("clock/shift needs n ≥ 2, got {n}")));
    }
    let nn = n as usize;
    let x = 1.0 / n as f64;
    MatrixModel::build(
        vec![clock_power(nn, 1), shift_power(nn, 1)],
        n,
        vec![vec![0.0, x], vec![-x, 0.0]],
        Provenance::ClockShift { n },
    )
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// U = u₁(m)⊗u₁(n), V = v_p(m)⊗v₁(n) with UV = e^{2πi(p/m + 1/n)}VU.
pub fn fuzzy_generators(p: u64, m: u64, n: u64) -> Result<Arc<MatrixModel>> {
    if m == 0 || gcd(p, m) != 1 {
        return Err(Error::InvalidParameter(format!("θ = {p}/{m} is not in lowest terms")));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!("fuzzy model needs n ≥ 2, got {n}")));
    }
    let (mm, nn) = (m as usize, n as usize);
    let u = clock_power(mm, 1).kron(&clock_power(nn, 1));
    let v = shift_power(mm, p as i64).kron(&shift_power(nn, 1));
    let x = (p as f64 / m as f64 + 1.0 / n as f64).rem_euclid(1.0);
    let order = m / gcd(m, n) * n;
    MatrixModel::build(vec![u, v], order, vec![vec![0.0, x], vec![-x, 0.0]], Provenance::Fuzzy { p, m, n })
}

/// Sizes n_k = m^{k+1}, k ≥ 1, for which the fuzzy generators span M_{m·n_k}.
pub fn admissible_sizes(m: u64) -> impl Iterator<Item = u64> {
    let m = m.max(2);
    (1u32..).map_while(move |k| m.checked_pow(k + 1))
}

/// 2d unitaries in M_{n^d} with x_r x_s = e^{2πi/n} x_s x_r for r < s and x_iⁿ = I:
/// x_{2k−1} = ζ^{k−1}·W^{⊗(k−1)}⊗U⊗I, x_{2k} = ζ^{k−1}·W^{⊗(k−1)}⊗V⊗I with W = VU⁻¹
/// and ζⁿ = ω^{n(n−1)/2} undoing Wⁿ = ω^{−n(n−1)/2}.
pub fn higher_dim_generators(n: u64, d: u64, cap: usize) -> Result<Arc<MatrixModel>> {
    if n < 2 || d == 0 {
        return Err(Error::InvalidParameter(format!("need n ≥ 2 and d ≥ 1, got n={n}, d={d}")));
    }
    let dim = (n as usize).checked_pow(d as u32).unwrap_or(usize::MAX);
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    let nn = n as usize;
    let (u, v) = (clock_power(nn, 1), shift_power(nn, 1));
    let w = v.mul(&u.adjoint());
    let zeta = cis((n - 1) as f64 / (2 * n) as f64);
    let id = MonomialMatrix::identity(nn);
    let mut gens = Vec::with_capacity(2 * d as usize);
    for k in 0..d as usize {
        for base in [&u, &v] {
            let mut acc = MonomialMatrix::identity(1);
            for slot in 0..d as usize {
                let f = if slot < k {
                    &w
                } else if slot == k {
                    base
                } else {
                    &id
                };
                acc = acc.kron(f);
            }
            gens.push(acc.scale(zeta.powi(k as i32)));
        }
    }
    let g = gens.len();
    let x = 1.0 / n as f64;
    let exponents =
        (0..g).map(|r| (0..g).map(|s| if r < s { x } else if r > s { -x } else { 0.0 }).collect()).collect();
    MatrixModel::build(gens, n, exponents, Provenance::HigherDim { n, d })
}

/// Element of M_amp ⊗ M_N, stored as an (amp·N)² matrix with block (i,j) at rows
/// i·N.., columns j·N...
#[derive(Debug, Clone)]
pub struct ModelElement {
    pub model: Arc<MatrixModel>,
    /// Number of generators the element is expanded in.
    pub arity: usize,
    pub amp: usize,
    pub matrix: CMat,
    coeffs: Option<NCPoly>,
}

impl ModelElement {
    pub fn from_matrix(model: &Arc<MatrixModel>, arity: usize, amp: usize, matrix: CMat) -> Result<Self> {
        let size = amp * model.dim;
        if matrix.shape() != (size, size) || arity == 0 || arity > model.generators.len() {
            return Err(Error::Incompatible(format!(
                "matrix {:?} with arity {arity} does not fit a model of dimension {} with {} generators",
                matrix.shape(),
                model.dim,
                model.generators.len()
            )));
        }
        Ok(Self { model: model.clone(), arity, amp, matrix, coeffs: None })
    }

    pub fn identity(model: &Arc<MatrixModel>, arity: usize, amp: usize) -> Self {
        Self::scalar_block(model, arity, &CMat::identity(amp, amp))
    }

    /// a ⊗ 1 for an amp×amp block a.
    pub fn scalar_block(model: &Arc<MatrixModel>, arity: usize, a: &CMat) -> Self {
        let matrix = crate::linalg::kron(a, &CMat::identity(model.dim, model.dim));
        let coeffs = NCPoly::block_monomial(&model.symbol_twist(arity), &vec![0; arity], a.clone());
        Self { model: model.clone(), arity, amp: a.nrows(), matrix, coeffs: Some(coeffs) }
    }

    fn with_matrix(&self, matrix: CMat) -> Self {
        Self { model: self.model.clone(), arity: self.arity, amp: self.amp, matrix, coeffs: None }
    }

    fn with_parts(&self, matrix: CMat, coeffs: Option<NCPoly>) -> Self {
        Self { model: self.model.clone(), arity: self.arity, amp: self.amp, matrix, coeffs }
    }

    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }

    /// Whether window coefficients are known without extraction.
    pub fn has_coefficients(&self) -> bool {
        self.coeffs.is_some()
    }

    pub fn adjoint(&self) -> Self {
        let coeffs = self.coeffs.as_ref().map(|c| adjoint_coeffs(&self.model, c));
        self.with_parts(self.matrix.adjoint(), coeffs)
    }

    pub fn add(&self, other: &Self) -> Self {
        let coeffs = match (&self.coeffs, &other.coeffs) {
            (Some(a), Some(b)) => a.add(b).ok(),
            _ => None,
        };
        self.with_parts(&self.matrix + &other.matrix, coeffs)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let coeffs = self.coeffs.as_ref().map(|p| p.scale(c));
        self.with_parts(&self.matrix * c, coeffs)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.with_matrix(&self.matrix * &other.matrix)
    }

    /// ½(x + x*).
    pub fn real_part(&self) -> Self {
        self.add(&self.adjoint()).scale(Complex64::new(0.5, 0.0))
    }

    /// Normalized trace tr(x)/(amp·N).
    pub fn trace(&self) -> Complex64 {
        self.matrix.trace() / self.size() as f64
    }

    /// (id⊗tr_N)(x)/N as an amp×amp block.
    pub fn mean_block(&self) -> CMat {
        let n = self.model.dim;
        CMat::from_fn(self.amp, self.amp, |i, j| {
            let mut s = ZERO;
            for r in 0..n {
                s += self.matrix[(i * n + r, j * n + r)];
            }
            s / n as f64
        })
    }

    /// x − (id⊗τ)(x)⊗1.
    pub fn mean_zero(&self) -> Self {
        let m = Self::scalar_block(&self.model, self.arity, &self.mean_block());
        self.sub(&m)
    }

    /// Coefficients over the whole window ℤ_order^arity (cached when known).
    pub fn coefficients(&self) -> NCPoly {
        match &self.coeffs {
            Some(c) => c.clone(),
            None => extract(self, None),
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        crate::linalg::max_abs_diff(&self.matrix, &other.matrix)
    }
}

/// Coefficients of x* from those of x, using (W^k)* = c_k·W^{−k}.
fn adjoint_coeffs(model: &MatrixModel, c: &NCPoly) -> NCPoly {
    let modulus = model.index_modulus();
    let mut out = NCPoly::zero(c.twist(), c.amplification());
    for (k, b) in c.terms() {
        let neg: Vec<i64> = k.iter().map(|&x| modulus.reduce(-x)).collect();
        let phase = model.monomial(k).adjoint().trace_pair(&model.monomial(&neg));
        out.add_term(&neg, &(b.adjoint() * phase));
    }
    out.prune();
    out
}

fn check_embed(f: &NCPoly, model: &MatrixModel) -> Result<()> {
    let arity = f.dim();
    if arity == 0 || arity > model.generators.len() {
        return Err(Error::Incompatible(format!(
            "polynomial in {arity} variables, model has {} generators",
            model.generators.len()
        )));
    }
    let ok = match model.provenance {
        Provenance::ClockShift { .. } | Provenance::HigherDim { .. } => f.twist().is_zero(),
        Provenance::Fuzzy { p, m, .. } => {
            arity == 2 && f.twist().as_rational() == TwistMatrix::rational(p as i64, m)?.as_rational()
        }
    };
    if !ok {
        return Err(Error::Incompatible(format!("twist does not match model {:?}", model.provenance)));
    }
    Ok(())
}

/// Σ_k f̂(k) ⊗ W^k with exponents folded mod the generator order.
pub fn embed(f: &NCPoly, model: &Arc<MatrixModel>) -> Result<ModelElement> {
    check_embed(f, model)?;
    let n = model.dim;
    let amp = f.amplification();
    let mut x = CMat::zeros(amp * n, amp * n);
    let modulus = model.index_modulus();
    let mut folded = NCPoly::zero(&model.symbol_twist(f.dim()), amp);
    for (k, b) in f.terms() {
        let w = model.monomial(k);
        for i in 0..amp {
            for j in 0..amp {
                let c = b[(i, j)];
                if c == ZERO {
                    continue;
                }
                for r in 0..n {
                    x[(i * n + r, j * n + w.cols[r])] += c * w.vals[r];
                }
            }
        }
        let kk: Vec<i64> = k.iter().map(|&c| modulus.reduce(c)).collect();
        folded.add_term(&kk, b);
    }
    folded.prune();
    Ok(ModelElement { model: model.clone(), arity: f.dim(), amp, matrix: x, coeffs: Some(folded) })
}

/// ρ̂(f) = ½(embed(f) + embed(f)*), the self-adjoint transport of a self-adjoint symbol.
pub fn embed_symmetrized(f: &NCPoly, model: &Arc<MatrixModel>) -> Result<ModelElement> {
    let x = embed(f, model)?;
    Ok(x.real_part())
}

fn extract(x: &ModelElement, band: Option<u64>) -> NCPoly {
    let model = &x.model;
    let n = model.dim;
    let pts = match band {
        Some(b) => crate::lattice::box_points(b, x.arity),
        None => window_points(model.index_modulus(), x.arity, None).expect("finite modulus"),
    };
    let mut out = NCPoly::zero(&model.symbol_twist(x.arity), x.amp);
    for k in pts {
        let w = model.monomial(&k);
        let block = CMat::from_fn(x.amp, x.amp, |i, j| {
            let mut s = ZERO;
            for r in 0..n {
                s += x.matrix[(i * n + r, j * n + w.cols[r])] * w.vals[r].conj();
            }
            s / n as f64
        });
        out.add_term(&k, &block);
    }
    out.prune();
    out
}

/// Coefficients tr(x_{ij}·(W^k)*)/N on the box [−band, band]^arity.
pub fn fourier_coefficients(x: &ModelElement, band: u64) -> Result<NCPoly> {
    if 2 * band >= x.model.order {
        return Err(Error::BandTooLarge { band, n: x.model.order });
    }
    Ok(extract(x, Some(band)))
}

/// Largest singular value.
pub fn op_norm(x: &ModelElement) -> Result<f64> {
    matrix_op_norm(&x.matrix)
}

pub fn matrix_op_norm(a: &CMat) -> Result<f64> {
    let n = a.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    if is_diagonal(a) {
        return Ok((0..n).map(|i| a[(i, i)].norm()).fold(0.0, f64::max));
    }
    let herm = is_hermitian(a, 1e-14);
    if n <= DENSE_EIGEN_LIMIT {
        if herm {
            return Ok(hermitian_eigenvalues(a).into_iter().map(f64::abs).fold(0.0, f64::max));
        }
        let g = a.adjoint() * a;
        return Ok(hermitian_eigenvalues(&g).into_iter().fold(0.0, f64::max).max(0.0).sqrt());
    }
    if herm {
        lanczos_max_abs(n, |v| a * v)
    } else {
        let ah = a.adjoint();
        Ok(lanczos_max_abs(n, |v| &ah * (a * v))?.sqrt())
    }
}

fn is_diagonal(a: &CMat) -> bool {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..n {
            if i != j && a[(i, j)] != ZERO {
                return false;
            }
        }
    }
    true
}

/// Largest |eigenvalue| of a Hermitian operator by Lanczos with full
/// reorthogonalization, stopping at relative residual 1e-12.
fn lanczos_max_abs<F: Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>>(n: usize, apply: F) -> Result<f64> {
    let max_steps = n.min(600);
    let mut basis: Vec<DMatrix<Complex64>> = Vec::with_capacity(max_steps);
    let v0 = DMatrix::from_fn(n, 1, |r, _| Complex64::new(1.0 + ((r * 7919) % 104729) as f64 / 104729.0, 0.0));
    let nrm = v0.norm();
    basis.push(v0 / Complex64::new(nrm, 0.0));
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::NAN;
    for step in 0..max_steps {
        let mut w = apply(&basis[step]);
        let a = basis[step].dotc(&w).re;
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&w);
                w -= q * c;
            }
        }
        let b = w.norm();
        let k = alpha.len();
        let t = DMatrix::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j {
                beta[i]
            } else if j + 1 == i {
                beta[j]
            } else {
                0.0
            }
        });
        let eig = nalgebra::SymmetricEigen::try_new(t, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::NoConvergence("Lanczos tridiagonal".into()))?;
        let (idx, theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(i, v)| (i, *v))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .expect("nonempty");
        let resid = (b * eig.eigenvectors[(k - 1, idx)]).abs();
        if resid <= 1e-12 * theta.abs().max(f64::MIN_POSITIVE) || b <= 1e-300 || k == n {
            return Ok(theta.abs());
        }
        if (theta.abs() - last).abs() <= 1e-14 * theta.abs() && resid <= 1e-8 * theta.abs() {
            return Ok(theta.abs());
        }
        last = theta.abs();
        beta.push(b);
        basis.push(w / Complex64::new(b, 0.0));
    }
    Err(Error::NoConvergence(format!("Lanczos after {max_steps} steps")))
}

/// (tr|x|^p / N)^{1/p}; p = ∞ is the operator norm.
pub fn schatten_norm(x: &ModelElement, p: f64) -> Result<f64> {
    matrix_schatten_norm(&x.matrix, p)
}

pub fn matrix_schatten_norm(a: &CMat, p: f64) -> Result<f64> {
    if p.is_infinite() {
        return matrix_op_norm(a);
    }
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("Schatten exponent must be ≥ 1, got {p}")));
    }
    let n = a.nrows() as f64;
    if p == 2.0 {
        return Ok((a.iter().map(|z| z.norm_sqr()).sum::<f64>() / n).sqrt());
    }
    let sv: Vec<f64> = if is_hermitian(a, 1e-14) {
        hermitian_eigenvalues(a).into_iter().map(f64::abs).collect()
    } else {
        let g = a.adjoint() * a;
        hermitian_eigenvalues(&g).into_iter().map(|v| v.max(0.0).sqrt()).collect()
    };
    Ok((sv.iter().map(|s| s.powf(p)).sum::<f64>() / n).powf(1.0 / p))
}

/// Extract, scale coefficientwise by φ, re-embed.
pub fn model_multiplier(x: &ModelElement, phi: Multiplier<'_>) -> Result<ModelElement> {
    if phi.dim() != x.arity {
        return Err(Error::DimensionMismatch { expected: x.arity, found: phi.dim() });
    }
    let c = crate::ncpoly::apply_multiplier(&x.coefficients(), phi)?;
    reembed(&x.model, x.arity, &c)
}

/// Embeds window coefficients without a twist-compatibility check.
fn reembed(model: &Arc<MatrixModel>, arity: usize, c: &NCPoly) -> Result<ModelElement> {
    let mut e = embed(c, model)?;
    e.arity = arity;
    Ok(e)
}

fn check_psi(x: &ModelElement, psi: &LengthFunction) -> Result<()> {
    if psi.dim() != x.arity {
        return Err(Error::DimensionMismatch { expected: x.arity, found: psi.dim() });
    }
    if psi.modulus() != x.model.index_modulus() {
        return Err(Error::ModulusMismatch {
            expected: x.model.index_modulus().to_string(),
            found: psi.modulus().to_string(),
        });
    }
    Ok(())
}

/// Generator A(W^k) = ψ(k)W^k of the model semigroup.
pub fn model_generator(x: &ModelElement, psi: &LengthFunction) -> Result<ModelElement> {
    check_psi(x, psi)?;
    model_multiplier(x, Multiplier::Power { psi, s: 1.0 })
}

/// Γ(x,y) = ½[A(x*)y + x*A(y) − A(x*y)] with dense products.
pub fn model_gradient_form_dense(x: &ModelElement, y: &ModelElement, psi: &LengthFunction) -> Result<ModelElement> {
    check_psi(x, psi)?;
    let xs = x.adjoint();
    let a_xs = model_generator(&xs, psi)?;
    let a_y = model_generator(y, psi)?;
    let a_xsy = model_generator(&xs.mul(y), psi)?;
    let m = (&a_xs.matrix * &y.matrix + &xs.matrix * &a_y.matrix - &a_xsy.matrix) * Complex64::new(0.5, 0.0);
    Ok(x.with_matrix(m))
}

/// Γ(x,y) = Σ_{a,b} K(a,b)·x̂(a)†ŷ(b) ⊗ (W^a)*W^b over the coefficient supports.
pub fn model_gradient_form_coeff(x: &ModelElement, y: &ModelElement, psi: &LengthFunction) -> Result<ModelElement> {
    check_psi(x, psi)?;
    let cx = x.coefficients();
    let cy = y.coefficients();
    let model = &x.model;
    let n = model.dim;
    let amp = x.amp;
    let mut out = CMat::zeros(amp * n, amp * n);
    let ys: Vec<(MonomialMatrix, &CMat, &Vec<i64>)> = cy.terms().map(|(k, b)| (model.monomial(k), b, k)).collect();
    for (a, xa) in cx.terms() {
        let wa = model.monomial(a).adjoint();
        let xa_h = xa.adjoint();
        for (wb, yb, b) in &ys {
            let k = psi.gromov(a, b);
            if k == 0.0 {
                continue;
            }
            let w = wa.mul(wb);
            let blk = (&xa_h * *yb) * Complex64::new(k, 0.0);
            for i in 0..amp {
                for j in 0..amp {
                    let c = blk[(i, j)];
                    if c == ZERO {
                        continue;
                    }
                    for r in 0..n {
                        out[(i * n + r, j * n + w.cols[r])] += c * w.vals[r];
                    }
                }
            }
        }
    }
    Ok(x.with_matrix(out))
}

/// Model gradient form, choosing the cheaper exact evaluation path.
pub fn model_gradient_form(x: &ModelElement, y: &ModelElement, psi: &LengthFunction) -> Result<ModelElement> {
    let sx = x.coeffs.as_ref().map(|c| c.len());
    let sy = y.coeffs.as_ref().map(|c| c.len());
    let size = x.size() as f64;
    let dense_cost = 3.0 * size * size * size;
    match (sx, sy) {
        (Some(a), Some(b)) if (a * b) as f64 * size * x.amp as f64 <= dense_cost => {
            model_gradient_form_coeff(x, y, psi)
        }
        _ => {
            let window = (x.model.order as f64).powi(x.arity as i32);
            if window * window * size * (x.amp as f64) < dense_cost {
                model_gradient_form_coeff(x, y, psi)
            } else {
                model_gradient_form_dense(x, y, psi)
            }
        }
    }
}

/// Rank of the Gram matrix tr(W^a(W^b)*) over all monomials in `arity` generators.
pub fn monomial_gram_rank(model: &MatrixModel, arity: usize) -> Result<usize> {
    let pts = window_points(model.index_modulus(), arity, None)?;
    let mons: Vec<MonomialMatrix> = pts.iter().map(|k| model.monomial(k)).collect();
    let m = mons.len();
    let g = CMat::from_fn(m, m, |a, b| mons[a].trace_pair(&mons[b]));
    let ev = hermitian_eigenvalues(&g);
    let top = ev.iter().copied().fold(0.0, f64::max);
    Ok(ev.iter().filter(|&&v| v > 1e-10 * top.max(1.0)).count())
}

const DUMP_MAGIC: &[u8; 4] = b"FTMX";
const DUMP_VERSION: u32 = 1;

/// Header: magic "FTMX", u32 version, u64 rows, u64 cols (little-endian), then
/// row-major (re, im) f64 pairs.
pub fn write_matrix_dump(path: &Path, a: &CMat) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 16 * a.len());
    buf.extend_from_slice(DUMP_MAGIC);
    buf.extend_from_slice(&DUMP_VERSION.to_le_bytes());
    buf.extend_from_slice(&(a.nrows() as u64).to_le_bytes());
    buf.extend_from_slice(&(a.ncols() as u64).to_le_bytes());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            buf.extend_from_slice(&a[(i, j)].re.to_le_bytes());
            buf.extend_from_slice(&a[(i, j)].im.to_le_bytes());
        }
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix_dump(path: &Path) -> Result<CMat> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    let bad = |msg: &str| Error::Parse { line: 0, msg: msg.to_string() };
    if buf.len() < 24 || &buf[..4] != DUMP_MAGIC {
        return Err(bad("not a matrix dump"));
    }
    let word = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
    if u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes")) != DUMP_VERSION {
        return Err(bad("unsupported dump version"));
    }
    let (rows, cols) = (word(8) as usize, word(16) as usize);
    if buf.len() != 24 + 16 * rows * cols {
        return Err(bad("truncated matrix dump"));
    }
    let f = |o: usize| f64::from_le_bytes(buf[o..o + 8].try_into().expect("8 bytes"));
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let o = 24 + 16 * (i * cols + j);
        Complex64::new(f(o), f(o + 8))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::{adjoint, TwistMatrix};

    #[test]
    fn clock_and_shift_examples() {
        let c = clock_power(4, 1).to_dense();
        let expect = [ONE, Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0), Complex64::new(0.0, -1.0)];
        for (i, e) in expect.iter().enumerate() {
            assert!((c[(i, i)] - e).norm() < 1e-15);
        }
        let s = shift_power(3, 1).to_dense();
        let e1 = CMat::from_fn(3, 1, |r, _| if r == 0 { ONE } else { ZERO });
        let img = &s * e1;
        assert_eq!(img[(1, 0)], ONE);
        assert_eq!(clock_power(5, 0), MonomialMatrix::identity(5));
        assert!(clock_shift(1).is_err());
    }

    #[test]
    fn fuzzy_example_phase() {
        let m = fuzzy_generators(1, 2, 8).unwrap();
        assert_eq!(m.dim(), 16);
        assert!((m.phase_exponent(0, 1) - 5.0 / 8.0).abs() < 1e-15);
        assert!(fuzzy_generators(2, 4, 8).is_err());
        assert_eq!(admissible_sizes(2).take(3).collect::<Vec<_>>(), vec![4, 8, 16]);
    }

    #[test]
    fn fuzzy_zero_theta_is_clock_shift() {
        let f = fuzzy_generators(0, 1, 6).unwrap();
        let c = clock_shift(6).unwrap();
        for (a, b) in f.generators().iter().zip(c.generators()) {
            assert!(a.max_diff(b) < 1e-15);
        }
    }

    #[test]
    fn higher_dim_small() {
        let m = higher_dim_generators(3, 2, DEFAULT_DIMENSION_CAP).unwrap();
        assert_eq!(m.dim(), 9);
        assert_eq!(m.generators().len(), 4);
        let one = higher_dim_generators(5, 1, DEFAULT_DIMENSION_CAP).unwrap();
        let c = clock_shift(5).unwrap();
        assert!(one.generators()[0].max_diff(&c.generators()[0]) < 1e-15);
        assert!(one.generators()[1].max_diff(&c.generators()[1]) < 1e-15);
        assert!(matches!(higher_dim_generators(16, 4, 4096), Err(Error::DimensionCap { .. })));
        let raw = shift_power(4, 1).mul(&clock_power(4, 1).adjoint()).pow(4);
        let want = cis(-(4.0 * 3.0 / 2.0) / 4.0);
        assert!(raw.max_diff(&MonomialMatrix::identity(4).scale(want)) < 1e-14);
    }

    #[test]
    fn embed_examples() {
        let cs = clock_shift(8).unwrap();
        let z1 = TwistMatrix::zero(1);
        let x = embed(&NCPoly::generator(&z1, 0), &cs).unwrap();
        assert!(crate::linalg::max_abs_diff(&x.matrix, &clock_power(8, 1).to_dense()) < 1e-15);
        let y = embed(&NCPoly::monomial(&z1, &[9], ONE), &cs).unwrap();
        assert!(y.max_abs_diff(&x) < 1e-14);
        let z2 = TwistMatrix::zero(2);
        let uv = NCPoly::monomial(&z2, &[1, 1], ONE);
        let e = embed(&uv, &cs).unwrap();
        let want = clock_power(8, 1).mul(&shift_power(8, 1)).to_dense();
        assert!(crate::linalg::max_abs_diff(&e.matrix, &want) < 1e-15);
        let half = TwistMatrix::rational(1, 2).unwrap();
        assert!(embed(&NCPoly::generator(&half, 0), &cs).is_err());
    }

    #[test]
    fn trace_pairings() {
        let cs = clock_shift(7).unwrap();
        let uv = cs.monomial(&[1, 1]);
        let u2v = cs.monomial(&[2, 1]);
        assert!((uv.trace_pair(&uv) - ONE).norm() < 1e-15);
        assert!(uv.trace_pair(&u2v).norm() < 1e-15);
        let id = ModelElement::identity(&cs, 2, 1);
        let c = fourier_coefficients(&id, 2).unwrap();
        assert!((c.coeff(&[0, 0]).unwrap()[(0, 0)] - ONE).norm() < 1e-15);
        assert_eq!(c.len(), 1);
        assert!(fourier_coefficients(&id, 4).is_err());
    }

    #[test]
    fn norms() {
        let cs = clock_shift(10).unwrap();
        let z1 = TwistMatrix::zero(1);
        let u = NCPoly::generator(&z1, 0);
        let h = embed(&u.add(&adjoint(&u)).unwrap(), &cs).unwrap();
        assert!((op_norm(&h).unwrap() - 2.0).abs() < 1e-14);
        let id = ModelElement::identity(&cs, 1, 2);
        for p in [1.0, 2.0, 4.0, f64::INFINITY] {
            assert!((schatten_norm(&id, p).unwrap() - 1.0).abs() < 1e-14);
        }
        let s = ModelElement::from_matrix(&clock_shift(2).unwrap(), 2, 1, shift_power(2, 1).to_dense()).unwrap();
        assert!((schatten_norm(&s, 1.0).unwrap() - 1.0).abs() < 1e-14);
        assert!(schatten_norm(&s, 0.5).is_err());
    }

    #[test]
    fn lanczos_matches_dense() {
        let n = 80;
        let a = CMat::from_fn(n, n, |i, j| Complex64::new(((i * 3 + j * 5) % 7) as f64 - 3.0, ((i + j) % 3) as f64));
        let h = &a + a.adjoint();
        let dense = hermitian_eigenvalues(&h).into_iter().map(f64::abs).fold(0.0, f64::max);
        let lz = lanczos_max_abs(n, |v| &h * v).unwrap();
        assert!((dense - lz).abs() <= 1e-9 * dense);
        let g = a.adjoint() * &a;
        let dense = hermitian_eigenvalues(&g).into_iter().fold(0.0, f64::max).sqrt();
        let ah = a.adjoint();
        let lz = lanczos_max_abs(n, |v| &ah * (&a * v)).unwrap().sqrt();
        assert!((dense - lz).abs() <= 1e-9 * dense);
    }

    #[test]
    fn multiplier_examples() {
        let cs = clock_shift(12).unwrap();
        let z2 = TwistMatrix::zero(2);
        let psi = LengthFunction::heat(Modulus::Finite(12), 2);
        let u = embed(&NCPoly::generator(&z2, 0), &cs).unwrap();
        let t = model_multiplier(&u, Multiplier::Semigroup { psi: &psi, t: 0.3 }).unwrap();
        let want = u.scale(Complex64::new((-0.3 * psi.eval(&[1, 0])).exp(), 0.0));
        assert!(t.max_abs_diff(&want) < 1e-14);
        let same = model_multiplier(&u, Multiplier::Semigroup { psi: &psi, t: 0.0 }).unwrap();
        assert!(same.max_abs_diff(&u) < 1e-14);
    }

    #[test]
    fn gradient_paths_agree() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let cs = clock_shift(9).unwrap();
        let z2 = TwistMatrix::zero(2);
        let psi = LengthFunction::heat(Modulus::Finite(9), 2);
        let f = crate::ncpoly::random_poly(&z2, 2, 2, &mut rng, false);
        let g = crate::ncpoly::random_poly(&z2, 2, 1, &mut rng, false);
        let x = embed(&f, &cs).unwrap();
        let y = embed(&g, &cs).unwrap();
        let a = model_gradient_form_dense(&x, &y, &psi).unwrap();
        let b = model_gradient_form_coeff(&x, &y, &psi).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
    }

    #[test]
    fn cached_coefficients_follow_operations() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let model = fuzzy_generators(1, 2, 6).unwrap();
        let t = TwistMatrix::rational(1, 2).unwrap();
        let x = embed(&crate::ncpoly::random_poly(&t, 2, 2, &mut rng, false), &model).unwrap();
        let y = x.real_part().sub(&x.adjoint().scale(Complex64::new(0.3, -1.0)));
        assert!(y.has_coefficients());
        let bare = ModelElement::from_matrix(&model, 2, 2, y.matrix.clone()).unwrap();
        assert!(y.coefficients().max_diff(&bare.coefficients()) < 1e-13);
    }

    #[test]
    fn dump_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let a = clock_power(5, 2).to_dense() * Complex64::new(0.5, -1.5);
        write_matrix_dump(&p, &a).unwrap();
        assert_eq!(read_matrix_dump(&p).unwrap(), a);
    }
}
