//! Small dense helpers over complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// e^{2πi x}.
pub fn cis(x: f64) -> Complex64 {
    let t = 2.0 * std::f64::consts::PI * x;
    Complex64::new(t.cos(), t.sin())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMat::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let s = a[(i, j)];
            if s == ZERO {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = s * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    let n = a.nrows();
    if n != a.ncols() {
        return false;
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    for i in 0..n {
        for j in 0..=i {
            if (a[(i, j)] - a[(j, i)].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Eigenvalues of a Hermitian matrix (the strict upper triangle is ignored).
pub fn hermitian_eigenvalues(a: &CMat) -> Vec<f64> {
    let n = a.nrows();
    if n == 1 {
        return vec![a[(0, 0)].re];
    }
    if n == 2 {
        let (p, q) = (a[(0, 0)].re, a[(1, 1)].re);
        let c = a[(1, 0)].norm();
        let mid = 0.5 * (p + q);
        let rad = (0.25 * (p - q) * (p - q) + c * c).sqrt();
        return vec![mid - rad, mid + rad];
    }
    a.clone().symmetric_eigenvalues().iter().copied().collect()
}

/// Largest singular value of a small matrix.
pub fn small_spectral_norm(a: &CMat) -> f64 {
    match a.shape() {
        (1, 1) => a[(0, 0)].norm(),
        (2, 2) => {
            let f = a.iter().map(|z| z.norm_sqr()).sum::<f64>();
            let det = (a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)]).norm_sqr();
            (0.5 * (f + (f * f - 4.0 * det).max(0.0).sqrt())).sqrt()
        }
        _ => {
            let g = a.adjoint() * a;
            hermitian_eigenvalues(&g).into_iter().fold(0.0, f64::max).max(0.0).sqrt()
        }
    }
}
