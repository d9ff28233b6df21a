#![allow(dead_code)]

//! Cyclic Jacobi eigensolver for complex Hermitian matrices, used as an
//! independent reference for the library eigensolver.
//!
//! Each rotation first removes the phase of the pivot `h_pq = g e^{iφ}` and
//! then applies the real symmetric Jacobi rotation to the `(p, q)` plane.

use qkt_core::dense::{CMat, C64, ZERO};

pub const OFF_DIAGONAL_TOL: f64 = 1e-12;
pub const MAX_SWEEPS: usize = 100;

#[derive(Clone, Debug)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: Option<CMat>,
    pub sweeps: usize,
    pub converged: bool,
}

fn off_diagonal_sq(h: &CMat) -> f64 {
    let n = h.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += h[(i, j)].norm_sqr();
            }
        }
    }
    s
}

/// Eigen-decomposition of the Hermitian part of `h`.
pub fn eigen(h: &CMat, want_vectors: bool) -> Eigen {
    assert!(h.is_square(), "eigen needs a square matrix");
    let n = h.rows();
    // Work on the Hermitian part so tiny asymmetries from rounding cannot stall.
    let mut a = CMat::from_fn(n, n, |i, j| (h[(i, j)] + h[(j, i)].conj()) * 0.5);
    let mut v = want_vectors.then(|| CMat::identity(n));
    let total = a.frobenius();
    let target = (OFF_DIAGONAL_TOL * total).powi(2);
    let mut sweeps = 0;
    let mut converged = n <= 1 || total == 0.0;

    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let phase = apq / g; // e^{iφ}
                let phase_c = phase.conj();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * g);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let t = 1.0 / (theta.abs() + (theta * theta + 1.0).sqrt());
                    if theta < 0.0 {
                        -t
                    } else {
                        t
                    }
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let hkp = a[(k, p)];
                    let hkq = a[(k, q)] * phase_c;
                    let nkp = hkp * c - hkq * s;
                    let nkq = hkp * s + hkq * c;
                    a[(k, p)] = nkp;
                    a[(k, q)] = nkq;
                    a[(p, k)] = nkp.conj();
                    a[(q, k)] = nkq.conj();
                }
                a[(p, p)] = C64::new(app - t * g, 0.0);
                a[(q, q)] = C64::new(aqq + t * g, 0.0);
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                if let Some(v) = v.as_mut() {
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)] * phase_c;
                        v[(k, p)] = vkp * c - vkq * s;
                        v[(k, q)] = vkp * s + vkq * c;
                    }
                }
            }
        }
        converged = off_diagonal_sq(&a) <= target;
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = v.map(|v| CMat::from_fn(n, n, |i, j| v[(i, order[j])]));
    Eigen {
        values,
        vectors,
        sweeps,
        converged,
    }
}
