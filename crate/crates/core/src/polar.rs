//! Polar decomposition `x = u h` of almost-invertible operators through a
//! truncated binomial series for `t^{-1/2}`, so that `u = x Q(x*x)` keeps a
//! propagation bound proportional to the degree of `Q`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{rat, Rat};
use crate::operator::BandedOperator;
use crate::quasi::{QuasiElement, QuasiKind};

pub const DEGREE_CAP: usize = 10_000;

/// Coefficients `a_0..=a_n` of `1/√(1+t) = Σ a_k t^k`.
pub fn series_coefficients(n: usize) -> Vec<f64> {
    let mut a = Vec::with_capacity(n + 1);
    a.push(1.0);
    for k in 1..=n {
        let prev = a[k - 1];
        a.push(prev * -((2 * k - 1) as f64) / ((2 * k) as f64));
    }
    a
}

/// `Σ_{k>l} |a_k| q^k` for `0 <= q < 1`, as `1/√(1−q)` minus the partial sum.
pub fn abs_tail(q: f64, l: usize) -> f64 {
    assert!((0.0..1.0).contains(&q), "tail needs 0 <= q < 1");
    let mut partial = 0.0;
    let mut term = 1.0;
    for k in 0..=l {
        if k > 0 {
            term *= q * (2 * k - 1) as f64 / (2 * k) as f64;
        }
        partial += term;
    }
    (1.0 / (1.0 - q).sqrt() - partial).max(0.0)
}

/// `Q(t) = (Σ_{k<=l} a_k z^k + C) / √t₁` with `z = (t − t₁)/t₁`, where the
/// constant `C` makes `Q(1) = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPolynomial {
    pub t1: f64,
    /// `a_0..=a_l` in the variable `z`.
    pub coefficients: Vec<f64>,
    pub constant: f64,
}

impl SeriesPolynomial {
    pub fn new(t1: f64, degree: usize) -> Self {
        let coefficients = series_coefficients(degree);
        let z1 = (1.0 - t1) / t1;
        let partial = horner(&coefficients, z1);
        // Σ_k a_k z₁^k = 1/√(1 + z₁) = √t₁.
        let constant = t1.sqrt() - partial;
        Self {
            t1,
            coefficients,
            constant,
        }
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, t: f64) -> f64 {
        let z = (t - self.t1) / self.t1;
        (horner(&self.coefficients, z) + self.constant) / self.t1.sqrt()
    }
}

fn horner(c: &[f64], z: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * z + a)
}

/// Spectral window `[lo, hi] ⊇ spec(x*x)` and the expansion point `t₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesWindow {
    pub t0: f64,
    pub hi: f64,
    pub t1: f64,
}

impl SeriesWindow {
    /// `t₀ = 1/(8N²)`, `t₁ = 2 max(N², 1)`.
    pub fn from_norm_bound(n: f64) -> Self {
        Self {
            t0: 1.0 / (8.0 * n * n),
            hi: n * n,
            t1: 2.0 * (n * n).max(1.0),
        }
    }

    /// A window fitted to a measured spectrum `[lo, hi]` of `x*x`, widened by
    /// a relative margin and centered so that `|z|` is as small as possible.
    pub fn from_spectrum(lo: f64, hi: f64, margin: f64) -> Self {
        let t0 = lo * (1.0 - margin);
        let hi = hi * (1.0 + margin);
        Self {
            t0,
            hi,
            t1: ((t0 + hi) / 2.0).max(0.5 + margin),
        }
    }

    /// Largest `|z|` over the window and the normalization point `t = 1`.
    pub fn radius(&self) -> f64 {
        [self.t0, self.hi, 1.0]
            .iter()
            .map(|&t| ((t - self.t1) / self.t1).abs())
            .fold(0.0, f64::max)
    }
}

/// Smallest `l` with `Σ_{k>l} |a_k| ρ^k < √t₁ ε/2` at the window radius `ρ`,
/// which gives `|Q(t) − t^{-1/2}| < ε` on the window, and with partial sums
/// `Σ_{k<=l} a_k t^k >= 1/2` on `[0, ρ]`.
pub fn truncation_degree(window: &SeriesWindow, eps: f64, cap: usize) -> Result<usize> {
    let rho = window.radius();
    if !(rho < 1.0 && window.t0 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "series window [{}, {}] around {} does not converge",
            window.t0, window.hi, window.t1
        )));
    }
    let target = window.t1.sqrt() * eps / 2.0;
    let total = 1.0 / (1.0 - rho).sqrt();
    let mut partial = 0.0;
    let mut term = 1.0;
    for l in 0..=cap {
        if l > 0 {
            term *= rho * (2 * l - 1) as f64 / (2 * l) as f64;
        }
        partial += term;
        if total - partial < target && partial_sums_ok(l, rho) {
            return Ok(l);
        }
    }
    let mut needed = cap;
    while abs_tail(rho, needed) >= target {
        needed *= 2;
        if needed > 64 * cap {
            break;
        }
    }
    Err(Error::DegreeCapExceeded { needed, cap })
}

fn partial_sums_ok(l: usize, rho: f64) -> bool {
    let c = series_coefficients(l);
    (0..=200).all(|i| horner(&c, rho * i as f64 / 200.0) >= 0.5)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolarMeasurements {
    /// `‖x − u h‖`
    pub x_minus_uh: f64,
    /// `‖|x| − h‖`
    pub abs_x_minus_h: f64,
    /// `‖Q(x*x) − (x*x)^{-1/2}‖` against the spectral oracle.
    pub q_error: f64,
    pub unitary_residual: f64,
    pub spectrum_lo: f64,
    pub spectrum_hi: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolarBounds {
    /// A priori bound on `‖x − uh‖`.
    pub x_minus_uh: f64,
    /// A priori bound on the unitary residual of `u`.
    pub unitary: f64,
    /// A priori bound on `‖|x| − h‖`.
    pub abs_x_minus_h: f64,
}

#[derive(Clone, Debug)]
pub struct PolarResult {
    pub u: QuasiElement,
    pub h: BandedOperator,
    pub q: SeriesPolynomial,
    pub window: SeriesWindow,
    pub eps: f64,
    pub n_bound: f64,
    pub measured: PolarMeasurements,
    pub bounds: PolarBounds,
    pub propagation_bound: Rat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum WindowChoice {
    /// `t₀ = 1/(8N²)`, `t₁ = 2 max(N², 1)`.
    NormBound,
    /// Fitted to the measured spectrum of `x*x`.
    Measured,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarOptions {
    pub window: WindowChoice,
    pub degree_cap: usize,
}

impl Default for PolarOptions {
    fn default() -> Self {
        Self {
            window: WindowChoice::NormBound,
            degree_cap: DEGREE_CAP,
        }
    }
}

/// `x = u h` with `u = x Q(x*x)`, `h = x*x Q(x*x)`.
///
/// `inverse` is an `ε`-inverse `y` of propagation `<= r`; without one, `x`
/// must be invertible with `‖x⁻¹‖ <= N`.
pub fn polar_decompose(
    x: &BandedOperator,
    eps: f64,
    r: Rat,
    n_bound: f64,
    inverse: Option<&BandedOperator>,
    options: PolarOptions,
) -> Result<PolarResult> {
    if !(eps > 0.0 && eps < 0.25) {
        return Err(Error::EpsOutOfRange { eps, range: "(0, 1/4)" });
    }
    if !(n_bound > 0.0 && n_bound.is_finite()) {
        return Err(Error::InvalidParameter(format!("N = {n_bound} must be positive")));
    }
    let prop = x.propagation();
    if prop > r {
        return Err(Error::PropagationExceeded { propagation: prop, limit: r });
    }
    let slack = 1.0 + 1e-12;
    let x_norm = x.norm();
    if x_norm > n_bound * slack {
        return Err(Error::NormBoundExceeded {
            what: "‖x‖",
            norm: x_norm,
            bound: n_bound,
        });
    }
    let xs = x.adjoint();
    let h_sq = xs.mul(x);
    let (lo, hi) = h_sq.spectrum_bounds();
    match inverse {
        Some(y) => {
            let yp = y.propagation();
            if yp > r {
                return Err(Error::PropagationExceeded { propagation: yp, limit: r });
            }
            let yn = y.norm();
            if yn > n_bound * slack {
                return Err(Error::NormBoundExceeded {
                    what: "‖y‖",
                    norm: yn,
                    bound: n_bound,
                });
            }
            for (which, prod) in [("‖xy − 1‖", x.mul(y)), ("‖yx − 1‖", y.mul(x))] {
                let d = prod.add_identity(-1.0).norm();
                if d >= eps {
                    return Err(Error::ResidualTooLarge {
                        which,
                        value: d,
                        bound: eps,
                    });
                }
            }
        }
        None => {
            if lo * n_bound * n_bound < 1.0 / slack {
                return Err(Error::NormBoundExceeded {
                    what: "‖x⁻¹‖",
                    norm: 1.0 / lo.max(0.0).sqrt(),
                    bound: n_bound,
                });
            }
        }
    }

    let window = match options.window {
        WindowChoice::NormBound => SeriesWindow::from_norm_bound(n_bound),
        WindowChoice::Measured => SeriesWindow::from_spectrum(lo, hi, 1e-6),
    };
    if lo < window.t0 || hi > window.hi * slack {
        return Err(Error::InvalidParameter(format!(
            "spectrum of x*x [{lo:e}, {hi:e}] leaves the series window [{:e}, {:e}]",
            window.t0, window.hi
        )));
    }
    let degree = truncation_degree(&window, eps, options.degree_cap)?;
    let q = SeriesPolynomial::new(window.t1, degree);
    let q_one = q.eval(1.0);
    if (q_one - 1.0).abs() > 1e-12 {
        return Err(Error::ResidualTooLarge {
            which: "|Q(1) − 1|",
            value: (q_one - 1.0).abs(),
            bound: 1e-12,
        });
    }

    let mut q_h = h_sq.hermitian_apply(|t| q.eval(t));
    // In exact arithmetic Q(x*x) is a polynomial of degree l in x*x.
    q_h = q_h.truncate(h_sq.propagation() * rat(degree as i64));
    if h_sq.scalar().is_identity() {
        q_h.set_scalar(crate::dense::CMat::identity(x.fiber()));
    }
    let u_op = x.mul(&q_h);
    let h = h_sq.mul(&q_h);

    let oracle = h_sq.hermitian_apply(|t| 1.0 / t.max(f64::MIN_POSITIVE).sqrt());
    let abs_x = h_sq.hermitian_apply(|t| t.max(0.0).sqrt());
    let measured = PolarMeasurements {
        x_minus_uh: x.sub(&u_op.mul(&h)).norm(),
        abs_x_minus_h: abs_x.sub(&h).norm(),
        q_error: q_h.sub(&oracle).norm(),
        unitary_residual: crate::quasi::residual(&u_op, QuasiKind::Unitary),
        spectrum_lo: lo,
        spectrum_hi: hi,
    };

    let d = eps;
    let sqrt_hi = window.hi.sqrt();
    let inv_sqrt_lo = 1.0 / window.t0.sqrt();
    let hq2 = 2.0 * sqrt_hi * d + window.hi * d * d;
    let bounds = PolarBounds {
        x_minus_uh: x_norm.max(f64::MIN_POSITIVE) * hq2,
        unitary: hq2.max(x_norm * x_norm * (2.0 * inv_sqrt_lo * d + d * d)),
        abs_x_minus_h: window.hi * d,
    };

    let propagation_bound = r * rat(2 * degree as i64 + 1);
    let u = QuasiElement::certify_control(u_op, QuasiKind::Unitary, bounds.unitary, propagation_bound)?;
    Ok(PolarResult {
        u,
        h,
        q,
        window,
        eps,
        n_bound,
        measured,
        bounds,
        propagation_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_coefficients() {
        let a = series_coefficients(3);
        assert_eq!(a[0], 1.0);
        assert_eq!(a[1], -0.5);
        assert_eq!(a[2], 0.375);
        assert_eq!(a[3], -0.3125);
    }

    #[test]
    fn partial_sum_at_one_half() {
        let a = series_coefficients(40);
        let s = horner(&a, 0.5);
        assert!((s - 1.0 / 1.5f64.sqrt()).abs() < 1e-7);
        assert!((s - 0.8164966).abs() < 1e-7);
    }

    #[test]
    fn tail_matches_direct_sum() {
        let q: f64 = 0.9;
        let direct: f64 = series_coefficients(4000)
            .iter()
            .enumerate()
            .skip(11)
            .map(|(k, a)| a.abs() * q.powi(k as i32))
            .sum();
        assert!((abs_tail(q, 10) - direct).abs() < 1e-10);
    }

    #[test]
    fn polynomial_is_normalized_and_accurate() {
        let w = SeriesWindow::from_norm_bound(2.0);
        let l = truncation_degree(&w, 0.05, DEGREE_CAP).unwrap();
        let q = SeriesPolynomial::new(w.t1, l);
        assert!((q.eval(1.0) - 1.0).abs() < 1e-12);
        for i in 0..=400 {
            let t = w.t0 + (w.hi - w.t0) * i as f64 / 400.0;
            assert!((q.eval(t) - 1.0 / t.sqrt()).abs() < 0.05, "t = {t}");
        }
    }

    #[test]
    fn degree_cap_is_reported() {
        let w = SeriesWindow::from_norm_bound(40.0);
        match truncation_degree(&w, 1e-3, 100) {
            Err(Error::DegreeCapExceeded { needed, cap: 100 }) => assert!(needed > 100),
            other => panic!("unexpected {other:?}"),
        }
    }
}
