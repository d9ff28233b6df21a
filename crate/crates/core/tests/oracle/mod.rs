#![allow(dead_code)]

pub mod jacobi;

use qkt_core::dense::{CMat, C64};

/// Spectral norm from the largest eigenvalue of `a* a`.
pub fn norm(a: &CMat) -> f64 {
    if a.rows() == 0 {
        return 0.0;
    }
    let g = a.adjoint().mul(a);
    jacobi::eigen(&g, false).values.last().copied().unwrap_or(0.0).max(0.0).sqrt()
}

/// `f(H)` for Hermitian `h`.
pub fn apply(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let e = jacobi::eigen(h, true);
    let v = e.vectors.unwrap();
    let d: Vec<C64> = e.values.iter().map(|&l| C64::new(f(l), 0.0)).collect();
    v.mul(&CMat::diagonal(&d)).mul(&v.adjoint())
}

/// Exact polar factor `x (x*x)^{-1/2}` of an invertible `x`.
pub fn polar_unitary(x: &CMat) -> CMat {
    let inv_abs = apply(&x.adjoint().mul(x), |t| 1.0 / t.sqrt());
    x.mul(&inv_abs)
}
