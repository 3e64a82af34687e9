//! Index arithmetic on ℤ^d and ℤ_n^d, length functions, Gromov forms and
//! smoothing multipliers.
//!
//! Residues of ℤ_n are stored in the canonical window
//! {-(⌈n/2⌉-1), …, ⌊n/2⌋}; for even n the tie at n/2 is kept as +n/2.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Modulus shared by every coordinate of an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Modulus {
    Finite(u64),
    Infinite,
}

impl Modulus {
    /// Reduces `k` into the canonical window (identity on ℤ).
    pub fn reduce(self, k: i64) -> i64 {
        match self {
            Modulus::Infinite => k,
            Modulus::Finite(n) => {
                let n = n as i64;
                let r = k.rem_euclid(n);
                if r > n / 2 {
                    r - n
                } else {
                    r
                }
            }
        }
    }

    /// Canonical window of ℤ_n, or `[-radius, radius]` on ℤ.
    pub fn window(self, radius: Option<u64>) -> Result<Vec<i64>> {
        match self {
            Modulus::Finite(n) => {
                let n = n as i64;
                Ok((-((n + 1) / 2 - 1)..=n / 2).collect())
            }
            Modulus::Infinite => {
                let r = radius.ok_or_else(|| {
                    Error::InvalidParameter("a window radius is required on ℤ".into())
                })? as i64;
                Ok((-r..=r).collect())
            }
        }
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Modulus::Finite(n) => Some(n),
            Modulus::Infinite => None,
        }
    }
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::Finite(n) => write!(f, "{n}"),
            Modulus::Infinite => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Modulus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "inf" {
            return Ok(Modulus::Infinite);
        }
        match s.parse::<u64>() {
            Ok(n) if n >= 1 => Ok(Modulus::Finite(n)),
            _ => Err(Error::InvalidParameter(format!("bad modulus {s:?}"))),
        }
    }
}

/// Element of ℤ^d or ℤ_n^d with coordinates in the canonical window.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeIndex {
    coords: Vec<i64>,
    modulus: Modulus,
}

impl LatticeIndex {
    pub fn new(coords: &[i64], modulus: Modulus) -> Self {
        let coords = coords.iter().map(|&k| modulus.reduce(k)).collect();
        Self { coords, modulus }
    }

    pub fn zero(d: usize, modulus: Modulus) -> Self {
        Self { coords: vec![0; d], modulus }
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|&c| c == 0)
    }

    pub fn neg(&self) -> Self {
        let c: Vec<i64> = self.coords.iter().map(|&k| -k).collect();
        Self::new(&c, self.modulus)
    }

    /// Group subtraction `self ⊖ other`.
    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let c: Vec<i64> = self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect();
        Ok(Self::new(&c, self.modulus))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let c: Vec<i64> = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        Ok(Self::new(&c, self.modulus))
    }

    /// Largest canonical coordinate magnitude.
    pub fn band(&self) -> u64 {
        self.coords.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0)
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                expected: self.modulus.to_string(),
                found: other.modulus.to_string(),
            });
        }
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }
}

/// Every point of `window^d` in lexicographic order.
pub fn window_points(modulus: Modulus, d: usize, radius: Option<u64>) -> Result<Vec<Vec<i64>>> {
    let w = modulus.window(radius)?;
    let mut out: Vec<Vec<i64>> = vec![Vec::with_capacity(d)];
    for _ in 0..d {
        let mut next = Vec::with_capacity(out.len() * w.len());
        for p in &out {
            for &k in &w {
                let mut q = p.clone();
                q.push(k);
                next.push(q);
            }
        }
        out = next;
    }
    Ok(out)
}

/// All points of the box `[-band, band]^d`.
pub fn box_points(band: u64, d: usize) -> Vec<Vec<i64>> {
    window_points(Modulus::Infinite, d, Some(band)).expect("radius supplied")
}

#[derive(Debug, Clone, PartialEq)]
pub enum LengthKind {
    Word,
    Heat,
    /// k² on the canonical window. Not conditionally negative on ℤ_n.
    NaiveSquare,
    /// Values ψ(|k|) for k = 0..=⌊n/2⌋ on ℤ_n.
    Custom(Vec<f64>),
}

/// Length function ψ on ℤ_n^d or ℤ^d with ψ(k) = Σᵢ ψ₁(kᵢ).
#[derive(Debug, Clone, PartialEq)]
pub struct LengthFunction {
    kind: LengthKind,
    modulus: Modulus,
    dim: usize,
}

impl LengthFunction {
    pub fn word(modulus: Modulus, dim: usize) -> Self {
        Self { kind: LengthKind::Word, modulus, dim }
    }

    pub fn heat(modulus: Modulus, dim: usize) -> Self {
        Self { kind: LengthKind::Heat, modulus, dim }
    }

    pub fn naive_square(modulus: Modulus, dim: usize) -> Self {
        Self { kind: LengthKind::NaiveSquare, modulus, dim }
    }

    pub fn custom(n: u64, dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != (n / 2 + 1) as usize {
            return Err(Error::InvalidParameter(format!(
                "custom length on ℤ_{n} needs {} values, got {}",
                n / 2 + 1,
                values.len()
            )));
        }
        if values[0] != 0.0 || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParameter("custom length needs ψ(0)=0 and ψ ≥ 0".into()));
        }
        Ok(Self { kind: LengthKind::Custom(values), modulus: Modulus::Finite(n), dim })
    }

    pub fn kind(&self) -> &LengthKind {
        &self.kind
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Same kind on another modulus or dimension.
    pub fn with(&self, modulus: Modulus, dim: usize) -> Self {
        Self { kind: self.kind.clone(), modulus, dim }
    }

    pub fn name(&self) -> String {
        let kind = match self.kind {
            LengthKind::Word => "word",
            LengthKind::Heat => "heat",
            LengthKind::NaiveSquare => "naive-square",
            LengthKind::Custom(_) => "custom",
        };
        format!("{kind}/{}/d{}", self.modulus, self.dim)
    }

    /// One-coordinate length ψ₁(k).
    pub fn eval1(&self, k: i64) -> f64 {
        let c = self.modulus.reduce(k);
        match (&self.kind, self.modulus) {
            (LengthKind::Word, _) => c.unsigned_abs() as f64,
            (LengthKind::NaiveSquare, _) => (c * c) as f64,
            (LengthKind::Heat, Modulus::Infinite) => (c * c) as f64,
            (LengthKind::Heat, Modulus::Finite(n)) => {
                let n = n as f64;
                n * n / (2.0 * PI * PI) * (1.0 - (2.0 * PI * c as f64 / n).cos())
            }
            (LengthKind::Custom(v), _) => v[c.unsigned_abs() as usize],
        }
    }

    /// ψ on raw coordinates; coordinates are reduced first.
    pub fn eval(&self, k: &[i64]) -> f64 {
        k.iter().map(|&c| self.eval1(c)).sum()
    }

    /// Gromov form ½[ψ(x) + ψ(y) − ψ(x − y)] on raw coordinates.
    pub fn gromov(&self, x: &[i64], y: &[i64]) -> f64 {
        let diff: f64 = x.iter().zip(y).map(|(a, b)| self.eval1(a - b)).sum();
        0.5 * (self.eval(x) + self.eval(y) - diff)
    }

    /// Plain `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let kind = match &self.kind {
            LengthKind::Word => "word",
            LengthKind::Heat => "heat",
            LengthKind::NaiveSquare => "naive-square",
            LengthKind::Custom(_) => "custom",
        };
        s.push_str(&format!("kind={kind}\nmodulus={}\ndim={}\n", self.modulus, self.dim));
        if let LengthKind::Custom(v) = &self.kind {
            let vals: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
            s.push_str(&format!("values={}\n", vals.join(",")));
        }
        s
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let map = parse_kv(text)?;
        let get = |key: &str| {
            map.get(key)
                .cloned()
                .ok_or_else(|| Error::Parse { line: 0, msg: format!("missing key {key}") })
        };
        let modulus: Modulus = get("modulus")?.parse()?;
        let dim: usize = get("dim")?
            .parse()
            .map_err(|_| Error::Parse { line: 0, msg: "bad dim".into() })?;
        match get("kind")?.as_str() {
            "word" => Ok(Self::word(modulus, dim)),
            "heat" => Ok(Self::heat(modulus, dim)),
            "naive-square" => Ok(Self::naive_square(modulus, dim)),
            "custom" => {
                let n = modulus
                    .finite()
                    .ok_or_else(|| Error::InvalidParameter("custom length needs finite n".into()))?;
                let values = get("values")?
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
                Self::custom(n, dim, values)
            }
            other => Err(Error::Parse { line: 0, msg: format!("unknown length kind {other:?}") }),
        }
    }
}

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse { line: i + 1, msg: format!("expected key=value, got {line:?}") })?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// ψ evaluated at a lattice index, checking modulus and dimension.
pub fn length_eval(psi: &LengthFunction, k: &LatticeIndex) -> Result<f64> {
    if k.modulus() != psi.modulus {
        return Err(Error::ModulusMismatch {
            expected: psi.modulus.to_string(),
            found: k.modulus().to_string(),
        });
    }
    if k.dim() != psi.dim {
        return Err(Error::DimensionMismatch { expected: psi.dim, found: k.dim() });
    }
    Ok(psi.eval(k.coords()))
}

/// Gromov form K over an ordered list of indices.
#[derive(Debug, Clone, PartialEq)]
pub struct GromovMatrix {
    pub indices: Vec<LatticeIndex>,
    pub entries: DMatrix<f64>,
}

pub fn gromov_matrix(psi: &LengthFunction, indices: &[LatticeIndex]) -> Result<GromovMatrix> {
    if indices.is_empty() {
        return Err(Error::EmptyIndices);
    }
    let diag = indices.iter().map(|x| length_eval(psi, x)).collect::<Result<Vec<_>>>()?;
    let n = indices.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = diag[i];
        for j in 0..i {
            let d = indices[i].sub(&indices[j])?;
            let v = 0.5 * (diag[i] + diag[j] - psi.eval(d.coords()));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(GromovMatrix { indices: indices.to_vec(), entries: k })
}

/// Default PSD tolerance 1e-10 · dim · max|K|.
pub fn default_tolerance(k: &DMatrix<f64>) -> f64 {
    1e-10 * k.nrows() as f64 * k.amax()
}

/// Eigen-decomposition with ascending eigenvalues and sign-normalized vectors
/// (largest-magnitude component positive).
pub fn sym_eigen(k: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = k.nrows();
    let eig = SymmetricEigen::try_new(k.clone(), f64::EPSILON, 100 * n.max(10))
        .ok_or_else(|| Error::NoConvergence(format!("symmetric {n}x{n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut vecs = DMatrix::zeros(n, n);
    let mut vals = Vec::with_capacity(n);
    for (c, &i) in order.iter().enumerate() {
        vals.push(eig.eigenvalues[i]);
        let col = eig.eigenvectors.column(i);
        let pivot = col.iter().copied().fold(0.0_f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let s = if pivot < 0.0 { -1.0 } else { 1.0 };
        for r in 0..n {
            vecs[(r, c)] = s * col[r];
        }
    }
    Ok((vals, vecs))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnVerdict {
    pub conditionally_negative: bool,
    /// Smallest eigenvalue of the Gromov form.
    pub witness: f64,
    pub tol: f64,
}

/// Audits conditional negativity through the Gromov form over all of ℤ_n^d
/// (or the box of the given radius on ℤ^d).
pub fn check_conditionally_negative(
    psi: &LengthFunction,
    radius: Option<u64>,
    tol: Option<f64>,
) -> Result<CnVerdict> {
    let pts = window_points(psi.modulus, psi.dim, radius)?;
    let idx: Vec<LatticeIndex> = pts.iter().map(|p| LatticeIndex::new(p, psi.modulus)).collect();
    let k = gromov_matrix(psi, &idx)?;
    let tol = tol.unwrap_or_else(|| default_tolerance(&k.entries));
    let (vals, _) = sym_eigen(&k.entries)?;
    let witness = vals[0];
    Ok(CnVerdict { conditionally_negative: witness >= -tol, witness, tol })
}

/// Factor G (rank × |indices|) with GᵀG = K; column j is the cocycle b(x_j).
#[derive(Debug, Clone, PartialEq)]
pub struct CocycleFactor {
    pub indices: Vec<LatticeIndex>,
    pub factor: DMatrix<f64>,
    pub rank: usize,
}

pub fn cocycle_factor(k: &GromovMatrix, tol: Option<f64>) -> Result<CocycleFactor> {
    let tol = tol.unwrap_or_else(|| default_tolerance(&k.entries));
    let (vals, vecs) = sym_eigen(&k.entries)?;
    if vals[0] < -tol {
        return Err(Error::NotPsd { eigenvalue: vals[0], tol });
    }
    let n = vals.len();
    let keep: Vec<usize> = (0..n).rev().filter(|&i| vals[i] > tol).collect();
    let mut g = DMatrix::zeros(keep.len(), n);
    for (r, &i) in keep.iter().enumerate() {
        let s = vals[i].sqrt();
        for c in 0..n {
            g[(r, c)] = s * vecs[(c, i)];
        }
    }
    Ok(CocycleFactor { indices: k.indices.clone(), rank: keep.len(), factor: g })
}

/// Finitely supported Fourier multiplier symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSpec {
    pub modulus: Modulus,
    pub dim: usize,
    pub symbol: BTreeMap<Vec<i64>, Complex64>,
    /// Largest canonical coordinate magnitude in the support.
    pub band: u64,
    /// Length cutoff m: the symbol vanishes where ψ > m.
    pub cutoff: f64,
    pub k: f64,
    pub eps: f64,
    pub alpha: f64,
    /// Σ_{ψ > m} e^{-ψ/α} over the window; bounds ‖T_φ‖_cb − 1.
    pub tail_mass: f64,
}

impl MultiplierSpec {
    pub fn value(&self, k: &[i64]) -> Complex64 {
        let key: Vec<i64> = k.iter().map(|&c| self.modulus.reduce(c)).collect();
        self.symbol.get(&key).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Coordinatewise product φ(k₁,…,k_d) = Πφ₁(kᵢ) of a one-dimensional symbol.
    pub fn product(one: &MultiplierSpec, d: usize) -> Result<MultiplierSpec> {
        if one.dim != 1 {
            return Err(Error::DimensionMismatch { expected: 1, found: one.dim });
        }
        let mut symbol: BTreeMap<Vec<i64>, Complex64> = BTreeMap::new();
        symbol.insert(vec![], Complex64::new(1.0, 0.0));
        for _ in 0..d {
            let mut next = BTreeMap::new();
            for (k, v) in &symbol {
                for (j, w) in &one.symbol {
                    let mut key = k.clone();
                    key.push(j[0]);
                    next.insert(key, v * w);
                }
            }
            symbol = next;
        }
        Ok(MultiplierSpec {
            modulus: one.modulus,
            dim: d,
            symbol,
            band: one.band,
            cutoff: d as f64 * one.cutoff,
            k: one.k,
            eps: one.eps,
            alpha: one.alpha,
            tail_mass: (1.0 + one.tail_mass).powi(d as i32) - 1.0,
        })
    }

    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "modulus={}\ndim={}\nband={}\ncutoff={:.16e}\nk={:.16e}\neps={:.16e}\nalpha={:.16e}\ntail_mass={:.16e}\n",
            self.modulus, self.dim, self.band, self.cutoff, self.k, self.eps, self.alpha, self.tail_mass
        );
        for (k, v) in &self.symbol {
            let ks: Vec<String> = k.iter().map(|c| c.to_string()).collect();
            s.push_str(&format!("entry={} {:.16e} {:.16e}\n", ks.join(" "), v.re, v.im));
        }
        s
    }

    pub fn from_kv(text: &str) -> Result<Self> {
        let mut fields = BTreeMap::new();
        let mut symbol = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |msg: String| Error::Parse { line: i + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            if k.trim() == "entry" {
                let toks: Vec<&str> = v.split_whitespace().collect();
                if toks.len() < 2 {
                    return Err(bad("entry needs coordinates and a value".into()));
                }
                let nums = toks.iter().map(|t| t.parse::<f64>()).collect::<std::result::Result<Vec<_>, _>>();
                let nums = nums.map_err(|e| bad(e.to_string()))?;
                let (idx, val) = nums.split_at(nums.len() - 2);
                symbol.insert(idx.iter().map(|&c| c as i64).collect::<Vec<_>>(), Complex64::new(val[0], val[1]));
            } else {
                fields.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
            }
        }
        let num = |key: &str| -> Result<f64> {
            let (line, v) = fields.get(key).ok_or_else(|| Error::Parse { line: 0, msg: format!("missing key {key}") })?;
            v.parse::<f64>().map_err(|e| Error::Parse { line: *line, msg: e.to_string() })
        };
        let modulus: Modulus = fields
            .get("modulus")
            .ok_or_else(|| Error::Parse { line: 0, msg: "missing key modulus".into() })?
            .1
            .parse()?;
        Ok(MultiplierSpec {
            modulus,
            dim: num("dim")? as usize,
            symbol,
            band: num("band")? as u64,
            cutoff: num("cutoff")?,
            k: num("k")?,
            eps: num("eps")?,
            alpha: num("alpha")?,
            tail_mass: num("tail_mass")?,
        })
    }
}

/// Smallest α (doubling then bisection, 1e-6 relative) with 1 − e^{−k/α} ≤ ε.
pub fn smoothing_alpha(k: f64, eps: f64) -> f64 {
    if k == 0.0 {
        return f64::MIN_POSITIVE;
    }
    let ok = |a: f64| 1.0 - (-k / a).exp() <= eps;
    let mut hi = 1.0;
    while !ok(hi) {
        hi *= 2.0;
    }
    let mut lo = hi / 2.0;
    while ok(lo) {
        hi = lo;
        lo /= 2.0;
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// φ(g) = e^{−ψ(g)/α}·1[ψ(g) ≤ m] with |φ − 1| ≤ ε on {ψ ≤ k} and window tail
/// Σ_{ψ > m} e^{−ψ/α} ≤ ε. `radius` bounds the window on ℤ^d.
pub fn build_smoothing_multiplier(
    psi: &LengthFunction,
    k: f64,
    eps: f64,
    radius: Option<u64>,
) -> Result<MultiplierSpec> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("ε must lie in (0,1), got {eps}")));
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::InvalidParameter(format!("k must be nonnegative, got {k}")));
    }
    let alpha = smoothing_alpha(k, eps);
    let pts = window_points(psi.modulus, psi.dim, radius)?;
    let lens: Vec<f64> = pts.iter().map(|p| psi.eval(p)).collect();
    let max_length = lens.iter().copied().fold(0.0, f64::max);

    let mut sorted: Vec<f64> = lens.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    // Candidate cutoffs are the distinct window lengths above k; scanning from
    // the top, the tail beyond a candidate is the running sum of larger values.
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(1.0);
    let mut cutoff = None;
    let mut tail = 0.0;
    let mut i = 0;
    while i < sorted.len() && sorted[i] > k && !close(sorted[i], k) {
        let v = sorted[i];
        if tail <= eps {
            cutoff = Some((v, tail));
        } else {
            break;
        }
        while i < sorted.len() && close(sorted[i], v) {
            tail += (-sorted[i] / alpha).exp();
            i += 1;
        }
    }
    let (cutoff, tail_mass) = cutoff.ok_or(Error::WindowTooSmall { max_length, k })?;

    let mut symbol = BTreeMap::new();
    let mut band = 0;
    for (p, &l) in pts.iter().zip(&lens) {
        if l <= cutoff || close(l, cutoff) {
            let v = (-l / alpha).exp();
            if v > 0.0 {
                band = band.max(p.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0));
                symbol.insert(p.clone(), Complex64::new(v, 0.0));
            }
        }
    }
    Ok(MultiplierSpec {
        modulus: psi.modulus,
        dim: psi.dim,
        symbol,
        band,
        cutoff,
        k,
        eps,
        alpha,
        tail_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    /// P_k: every coordinate in [-k, k].
    LowBand,
    /// Q_k: canonical |j| > k in the designated coordinate.
    Tail { coord: usize },
    MeanZero,
}

/// Index predicate for band projections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandMask {
    pub kind: MaskKind,
    pub k: u64,
    pub modulus: Modulus,
    pub dim: usize,
}

impl BandMask {
    pub fn contains(&self, idx: &[i64]) -> bool {
        let red = |c: i64| self.modulus.reduce(c).unsigned_abs();
        match self.kind {
            MaskKind::LowBand => idx.iter().all(|&c| red(c) <= self.k),
            MaskKind::Tail { coord } => idx.get(coord).is_some_and(|&c| red(c) > self.k),
            MaskKind::MeanZero => idx.iter().any(|&c| red(c) != 0),
        }
    }
}

pub fn band_projection_mask(kind: MaskKind, k: u64, modulus: Modulus, dim: usize) -> Result<BandMask> {
    if let (Some(n), false) = (modulus.finite(), kind == MaskKind::MeanZero) {
        if n <= 2 * k {
            return Err(Error::BandTooLarge { band: k, n });
        }
    }
    if let MaskKind::Tail { coord } = kind {
        if coord >= dim {
            return Err(Error::DimensionMismatch { expected: dim, found: coord + 1 });
        }
    }
    Ok(BandMask { kind, k, modulus, dim })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx1(k: i64, m: Modulus) -> LatticeIndex {
        LatticeIndex::new(&[k], m)
    }

    #[test]
    fn canonical_window() {
        let m = Modulus::Finite(8);
        assert_eq!(m.window(None).unwrap(), vec![-3, -2, -1, 0, 1, 2, 3, 4]);
        assert_eq!(m.reduce(-4), 4);
        assert_eq!(m.reduce(12), 4);
        assert_eq!(Modulus::Finite(5).window(None).unwrap(), vec![-2, -1, 0, 1, 2]);
        for k in -20..20 {
            assert_eq!(m.reduce(m.reduce(k)), m.reduce(k));
        }
    }

    #[test]
    fn length_examples() {
        let h4 = LengthFunction::heat(Modulus::Finite(4), 1);
        let v = length_eval(&h4, &idx1(1, Modulus::Finite(4))).unwrap();
        assert!((v - 8.0 / (PI * PI)).abs() < 1e-15);
        let w8 = LengthFunction::word(Modulus::Finite(8), 1);
        assert_eq!(length_eval(&w8, &idx1(5, Modulus::Finite(8))).unwrap(), 3.0);
        let hinf = LengthFunction::heat(Modulus::Infinite, 1);
        assert_eq!(length_eval(&hinf, &idx1(3, Modulus::Infinite)).unwrap(), 9.0);
        assert!(matches!(
            length_eval(&w8, &idx1(1, Modulus::Finite(7))),
            Err(Error::ModulusMismatch { .. })
        ));
    }

    #[test]
    fn gromov_examples() {
        let w = LengthFunction::word(Modulus::Infinite, 1);
        let k = gromov_matrix(&w, &[idx1(2, Modulus::Infinite), idx1(3, Modulus::Infinite)]).unwrap();
        assert_eq!(k.entries[(0, 1)], 2.0);
        let k = gromov_matrix(&w, &[idx1(2, Modulus::Infinite), idx1(-3, Modulus::Infinite)]).unwrap();
        assert_eq!(k.entries[(0, 1)], 0.0);
        let h = LengthFunction::heat(Modulus::Infinite, 2);
        let i = |a: i64, b: i64| LatticeIndex::new(&[a, b], Modulus::Infinite);
        let k = gromov_matrix(&h, &[i(1, 0), i(0, 1)]).unwrap();
        assert_eq!(k.entries[(0, 1)], 0.0);
        let k = gromov_matrix(&h, &[i(2, 0), i(3, 0)]).unwrap();
        assert_eq!(k.entries[(0, 1)], 6.0);
        assert_eq!(gromov_matrix(&h, &[]), Err(Error::EmptyIndices));
    }

    #[test]
    fn conditional_negativity_examples() {
        let heat8 = LengthFunction::heat(Modulus::Finite(8), 1);
        assert!(check_conditionally_negative(&heat8, None, None).unwrap().conditionally_negative);
        let word6 = LengthFunction::word(Modulus::Finite(6), 1);
        assert!(check_conditionally_negative(&word6, None, None).unwrap().conditionally_negative);
        let naive5 = LengthFunction::naive_square(Modulus::Finite(5), 1);
        let v = check_conditionally_negative(&naive5, None, None).unwrap();
        assert!(!v.conditionally_negative);
        assert!(v.witness < -1e-10);
        let word_z = LengthFunction::word(Modulus::Infinite, 1);
        assert!(check_conditionally_negative(&word_z, None, None).is_err());
        assert!(check_conditionally_negative(&word_z, Some(6), None).unwrap().conditionally_negative);
    }

    #[test]
    fn cocycle_examples() {
        let h = LengthFunction::heat(Modulus::Infinite, 1);
        let k = gromov_matrix(&h, &[idx1(1, Modulus::Infinite), idx1(2, Modulus::Infinite)]).unwrap();
        assert_eq!(k.entries, DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]));
        let g = cocycle_factor(&k, None).unwrap();
        assert_eq!(g.rank, 1);
        assert!((g.factor[(0, 1)] / g.factor[(0, 0)] - 2.0).abs() < 1e-12);

        let zero = LengthFunction::custom(6, 1, vec![0.0; 4]).unwrap();
        let idx: Vec<_> = (0..3).map(|j| idx1(j, Modulus::Finite(6))).collect();
        let g = cocycle_factor(&gromov_matrix(&zero, &idx).unwrap(), None).unwrap();
        assert_eq!(g.rank, 0);

        let w = LengthFunction::word(Modulus::Infinite, 1);
        let k = gromov_matrix(&w, &[idx1(1, Modulus::Infinite), idx1(-1, Modulus::Infinite)]).unwrap();
        let g = cocycle_factor(&k, None).unwrap();
        assert_eq!(g.rank, 2);
        let gtg = g.factor.transpose() * &g.factor;
        assert!((gtg - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn not_psd_is_rejected() {
        let naive = LengthFunction::naive_square(Modulus::Finite(5), 1);
        let idx: Vec<_> = (-2..=2).map(|j| idx1(j, Modulus::Finite(5))).collect();
        let k = gromov_matrix(&naive, &idx).unwrap();
        assert!(matches!(cocycle_factor(&k, None), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn smoothing_examples() {
        let h = LengthFunction::heat(Modulus::Infinite, 1);
        let phi = build_smoothing_multiplier(&h, 4.0, 0.25, Some(64)).unwrap();
        assert_eq!(phi.value(&[0]), Complex64::new(1.0, 0.0));
        for j in -2..=2 {
            assert!((phi.value(&[j]).re - 1.0).abs() <= 0.25);
        }
        for j in -64i64..=64 {
            if (j * j) as f64 > phi.cutoff {
                assert_eq!(phi.value(&[j]).re, 0.0);
            }
        }
        assert!(phi.tail_mass <= 0.25);
        assert!(phi.cutoff > 4.0);
        let closed = 4.0 / -(0.75f64).ln();
        assert!((phi.alpha - closed).abs() <= 2e-6 * closed);
    }

    #[test]
    fn smoothing_window_too_small() {
        let h = LengthFunction::heat(Modulus::Infinite, 1);
        assert!(matches!(
            build_smoothing_multiplier(&h, 100.0, 0.1, Some(3)),
            Err(Error::WindowTooSmall { .. })
        ));
        assert!(build_smoothing_multiplier(&h, 1.0, 1.5, Some(3)).is_err());
    }

    #[test]
    fn masks() {
        let m = Modulus::Finite(8);
        let q = band_projection_mask(MaskKind::Tail { coord: 0 }, 2, m, 1).unwrap();
        let kept: Vec<i64> = m.window(None).unwrap().into_iter().filter(|&j| q.contains(&[j])).collect();
        assert_eq!(kept, vec![-3, 3, 4]);
        let p = band_projection_mask(MaskKind::LowBand, 1, Modulus::Infinite, 2).unwrap();
        assert_eq!(box_points(3, 2).iter().filter(|x| p.contains(x)).count(), 9);
        let z = band_projection_mask(MaskKind::MeanZero, 0, m, 2).unwrap();
        assert!(!z.contains(&[0, 0]) && z.contains(&[0, 1]) && z.contains(&[8, 1]));
        assert!(band_projection_mask(MaskKind::LowBand, 4, m, 1).is_err());
    }

    #[test]
    fn kv_roundtrip() {
        let psi = LengthFunction::custom(6, 2, vec![0.0, 1.0, 1.5, 2.0]).unwrap();
        assert_eq!(LengthFunction::from_kv(&psi.to_kv()).unwrap(), psi);
        let h = LengthFunction::heat(Modulus::Finite(16), 1);
        let phi = build_smoothing_multiplier(&h, 1.0, 0.2, None).unwrap();
        assert_eq!(MultiplierSpec::from_kv(&phi.to_kv()).unwrap(), phi);
    }
}
