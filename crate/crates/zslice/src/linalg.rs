//! Small dense complex-matrix helpers shared across the crate.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type CMat = Array2<Complex64>;
pub type CVec = Array1<Complex64>;

pub fn identity(n: usize) -> CMat {
    Array2::eye(n).mapv(|x: f64| Complex64::new(x, 0.0))
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|x| x.conj())
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a.dot(b) - b.dot(a)
}

/// Largest absolute entry.
pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0f64, |acc, x| acc.max(x.norm()))
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.norm()))
}

pub fn norm2_vec(v: &CVec) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Kronecker product.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.dim();
    let (rb, cb) = b.dim();
    let mut out = Array2::zeros((ra * rb, ca * cb));
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[[i, j]];
            for k in 0..rb {
                for l in 0..cb {
                    out[[i * rb + k, j * cb + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Diagonal projector keeping the lowest `dim - excluded` levels of each
/// oscillator in a tensor product with per-oscillator dimensions `dims`.
///
/// Truncated ladder algebra is exact only away from the top Fock levels;
/// identities are asserted on this corner-excluded subspace.
pub fn corner_projector(dims: &[usize], excluded: usize) -> CMat {
    let total: usize = dims.iter().product();
    let mut diag = vec![true; total];
    for (idx, keep) in diag.iter_mut().enumerate() {
        let mut rest = idx;
        for &d in dims.iter().rev() {
            let level = rest % d;
            rest /= d;
            if level + excluded >= d {
                *keep = false;
            }
        }
    }
    let mut p = Array2::zeros((total, total));
    for (i, keep) in diag.into_iter().enumerate() {
        if keep {
            p[[i, i]] = Complex64::new(1.0, 0.0);
        }
    }
    p
}

/// `P a P` for a diagonal 0/1 projector `P`.
pub fn project(p: &CMat, a: &CMat) -> CMat {
    p.dot(a).dot(p)
}
