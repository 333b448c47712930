//! Dense helpers over nalgebra. Everything here is plumbing for the chain modules.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Pivots below this (relative to the largest entry) mark a matrix as singular.
pub const SINGULAR_TOL: f64 = 1e-13;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    if a.nrows() == 0 {
        return Some(DMatrix::zeros(0, b.ncols()));
    }
    let scale = a.amax().max(1.0);
    let lu = a.clone().lu();
    let u = lu.u();
    let min_pivot = (0..u.nrows()).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > SINGULAR_TOL * scale) {
        return None;
    }
    lu.solve(b)
}

pub fn solve_vec(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let m = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    solve(a, &m).map(|x| x.column(0).into_owned())
}

pub fn csolve(a: &CMatrix, b: &CVector) -> Option<CVector> {
    if a.nrows() == 0 {
        return Some(CVector::zeros(0));
    }
    let scale = a.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let lu = a.clone().lu();
    let u = lu.u();
    let min_pivot = (0..u.nrows()).map(|i| u[(i, i)].norm()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > SINGULAR_TOL * scale) {
        return None;
    }
    lu.solve(b)
}

pub fn inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    solve(a, &DMatrix::identity(a.nrows(), a.nrows()))
}

pub fn mat_pow(a: &DMatrix<f64>, mut n: u64) -> DMatrix<f64> {
    let mut acc = DMatrix::identity(a.nrows(), a.ncols());
    let mut base = a.clone();
    while n > 0 {
        if n & 1 == 1 {
            acc = &acc * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    acc
}

/// Principal submatrix on indices `i0..=i1` (empty if `i1 < i0`).
pub fn principal(a: &DMatrix<f64>, i0: usize, i1: Option<usize>) -> DMatrix<f64> {
    match i1 {
        Some(i1) if i1 >= i0 => a.view((i0, i0), (i1 - i0 + 1, i1 - i0 + 1)).into_owned(),
        _ => DMatrix::zeros(0, 0),
    }
}

/// Eigenvalues by real Schur decomposition (Hessenberg reduction + shifted QR).
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return alloc::vec![c(a[(0, 0)])];
    }
    let schur = nalgebra::linalg::Schur::try_new(a.clone(), f64::EPSILON, 100_000)
        .expect("Schur iteration did not converge");
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    for z in ev.iter_mut() {
        if z.im.abs() <= 1e-14 * (1.0 + z.re.abs()) {
            z.im = 0.0;
        }
    }
    ev
}

/// Sort descending by modulus, ties broken by real part then imaginary part.
pub fn sort_by_modulus(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| {
        let (ma, mb) = (a.norm(), b.norm());
        if (ma - mb).abs() > 1e-12 {
            return mb.partial_cmp(&ma).unwrap();
        }
        if (a.re - b.re).abs() > 1e-12 {
            return b.re.partial_cmp(&a.re).unwrap();
        }
        b.im.partial_cmp(&a.im).unwrap()
    });
}

/// Null vector of `a - lambda I` (right singular vector of the smallest singular value).
pub fn real_eigenvector(a: &DMatrix<f64>, lambda: f64) -> DVector<f64> {
    let n = a.nrows();
    let shifted = a - DMatrix::identity(n, n) * lambda;
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let k = (0..n)
        .min_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap())
        .unwrap();
    let mut v: DVector<f64> = v_t.row(k).transpose();
    // one step of inverse iteration tightens the residual when the eigenvalue is clustered
    let eps = 1e-14 * (1.0 + lambda.abs());
    let near = a - DMatrix::identity(n, n) * (lambda + eps);
    if let Some(w) = near.lu().solve(&v) {
        let norm = w.norm();
        if norm.is_finite() && norm > 0.0 {
            let cand = w / norm;
            let r_old = (a * &v - &v * lambda).norm();
            let r_new = (a * &cand - &cand * lambda).norm();
            if r_new < r_old {
                v = cand;
            }
        }
    }
    v
}

pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    a.clone().svd(false, false).singular_values
}

pub fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    singular_values(a).iter().copied().fold(0.0, f64::max)
}

pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn to_complex(a: &DMatrix<f64>) -> CMatrix {
    a.map(c)
}

/// Coefficients (ascending powers of q) of Π_j (1 - r_j q).
pub fn poly_from_reciprocal_roots(nodes: &[Complex64]) -> Vec<Complex64> {
    let mut p = alloc::vec![c(1.0)];
    for &r in nodes {
        let mut next = alloc::vec![c(0.0); p.len() + 1];
        for (k, &a) in p.iter().enumerate() {
            next[k] += a;
            next[k + 1] -= a * r;
        }
        p = next;
    }
    p
}

pub fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = alloc::vec![c(0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_sub(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|k| a.get(k).copied().unwrap_or_default() - b.get(k).copied().unwrap_or_default())
        .collect()
}

pub fn poly_eval(p: &[Complex64], z: Complex64) -> Complex64 {
    p.iter().rev().fold(c(0.0), |acc, &a| acc * z + a)
}

/// Drop trailing coefficients that are negligible against the largest one.
pub fn poly_trim(p: &mut Vec<Complex64>, rel: f64) {
    let scale = p.iter().map(|z| z.norm()).fold(0.0, f64::max);
    while p.len() > 1 && p.last().unwrap().norm() <= rel * scale {
        p.pop();
    }
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}
