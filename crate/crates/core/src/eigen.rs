//! Dense Hermitian eigen-decomposition and spectral calculus, backed by
//! nalgebra's tridiagonal QR solver.

use nalgebra::DMatrix;

use crate::dense::{CMat, C64};

pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: Option<CMat>,
    pub converged: bool,
}

fn to_nalgebra(h: &CMat) -> DMatrix<C64> {
    let n = h.rows();
    // Hermitian part, so rounding asymmetries cannot matter.
    DMatrix::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5)
}

/// Eigen-decomposition of the Hermitian part of `h`.
pub fn eigen(h: &CMat, want_vectors: bool) -> Eigen {
    assert!(h.is_square(), "eigen needs a square matrix");
    let n = h.rows();
    if n == 0 {
        return Eigen {
            values: Vec::new(),
            vectors: want_vectors.then(|| CMat::zeros(0, 0)),
            converged: true,
        };
    }
    let m = to_nalgebra(h);
    if !want_vectors {
        let mut values: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        values.sort_by(f64::total_cmp);
        return Eigen {
            values,
            vectors: None,
            converged: true,
        };
    }
    let diagonal: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    match m.try_symmetric_eigen(f64::EPSILON, MAX_ITERATIONS) {
        Some(e) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| e.eigenvalues[i].total_cmp(&e.eigenvalues[j]));
            let values = order.iter().map(|&i| e.eigenvalues[i]).collect();
            let vectors = CMat::from_fn(n, n, |i, j| e.eigenvectors[(i, order[j])]);
            Eigen {
                values,
                vectors: Some(vectors),
                converged: true,
            }
        }
        None => Eigen {
            values: diagonal,
            vectors: Some(CMat::identity(n)),
            converged: false,
        },
    }
}

/// `f(H) = V diag(f(λ)) V*` for Hermitian `h`.
pub fn apply_function(h: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    apply_complex(h, |l| C64::new(f(l), 0.0))
}

/// `f(H)` for a complex-valued `f`, e.g. `exp(iθH)`.
pub fn apply_complex(h: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let eig = eigen(h, true);
    let v = eig.vectors.expect("vectors requested");
    let n = h.rows();
    let fl: Vec<C64> = eig.values.iter().map(|&l| f(l)).collect();
    let mut scaled = v.clone();
    for i in 0..n {
        for (k, &fk) in fl.iter().enumerate() {
            scaled[(i, k)] *= fk;
        }
    }
    scaled.mul(&v.adjoint())
}
