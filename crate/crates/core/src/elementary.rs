//! Elementary `2 × 2` matrices over the algebra and the products built from
//! them. Entries share a fiber `m`; results have fiber `2m`.

use serde::{Deserialize, Serialize};

use crate::dense::CMat;
use crate::operator::BandedOperator;

fn grid2(a: &BandedOperator, b: &BandedOperator, c: &BandedOperator, d: &BandedOperator) -> BandedOperator {
    let entries = [[a, b], [c, d]];
    BandedOperator::from_grid(a.space().clone(), a.fiber(), 2, |i, j| Some(entries[i][j]))
}

fn ident(like: &BandedOperator) -> BandedOperator {
    BandedOperator::identity(like.space().clone(), like.fiber())
}

fn zero(like: &BandedOperator) -> BandedOperator {
    BandedOperator::zero(like.space().clone(), like.fiber())
}

/// `[[1, x], [0, 1]]`
pub fn x_mat(x: &BandedOperator) -> BandedOperator {
    grid2(&ident(x), x, &zero(x), &ident(x))
}

/// `[[1, 0], [y, 1]]`
pub fn y_mat(y: &BandedOperator) -> BandedOperator {
    grid2(&ident(y), &zero(y), y, &ident(y))
}

/// `Z(x, y) = X(x) Y(y) X(−x) Y(−y)` in closed form:
/// `[[1 + xy + xyxy, −xyx], [yxy, 1 − yx]]`.
pub fn z_mat(x: &BandedOperator, y: &BandedOperator) -> BandedOperator {
    let xy = x.mul(y);
    let yx = y.mul(x);
    let a = ident(x).add(&xy).add(&xy.mul(&xy));
    let b = xy.mul(x).scale_real(-1.0);
    let c = yx.mul(y);
    let d = ident(x).sub(&yx);
    grid2(&a, &b, &c, &d)
}

/// `Z'(x, y) = Y(−y) X(−x) Y(y) X(x)` in closed form:
/// `[[1 − xy, −xyx], [yxy, 1 + yx + yxyx]]`.
pub fn z_prime_mat(x: &BandedOperator, y: &BandedOperator) -> BandedOperator {
    let xy = x.mul(y);
    let yx = y.mul(x);
    let a = ident(x).sub(&xy);
    let b = xy.mul(x).scale_real(-1.0);
    let c = yx.mul(y);
    let d = ident(x).add(&yx).add(&yx.mul(&yx));
    grid2(&a, &b, &c, &d)
}

/// `[[0, −1], [1, 0]] ⊗ I_m` as a constant operator.
pub fn rotation(like: &BandedOperator) -> BandedOperator {
    let m = like.fiber();
    let j = CMat::from_real(2, 2, &[0.0, -1.0, 1.0, 0.0]).kron_identity(m);
    BandedOperator::from_scalar(like.space().clone(), j)
}

/// `W(u) = X(u) Y(−u*) X(u) J` in closed form:
/// `[[2u − uu*u, uu* − 1], [1 − u*u, u*]]`.
pub fn witness(u: &BandedOperator) -> BandedOperator {
    let us = u.adjoint();
    let uus = u.mul(&us);
    let usu = us.mul(u);
    let a = u.scale_real(2.0).sub(&uus.mul(u));
    let b = uus.add_identity(-1.0);
    let c = usu.scale_real(-1.0).add_identity(1.0);
    grid2(&a, &b, &c, &us)
}

/// The factors `X, Y, X, J` of the witness, multiplied out.
pub fn witness_by_factors(u: &BandedOperator) -> BandedOperator {
    let us = u.adjoint();
    BandedOperator::mul_all(&[&x_mat(u), &y_mat(&us.scale_real(-1.0)), &x_mat(u), &rotation(u)])
}

/// `T(x, y) = X(x) Z(y, −x*) Y(−x*) X(x)`.
pub fn t_mat(x: &BandedOperator, y: &BandedOperator) -> BandedOperator {
    let xs = x.adjoint().scale_real(-1.0);
    BandedOperator::mul_all(&[&x_mat(x), &z_mat(y, &xs), &y_mat(&xs), &x_mat(x)])
}

/// `T(x, y)⁻¹ = X(−x) Y(x*) Z'(−y, x*) X(−x)`.
pub fn t_inverse(x: &BandedOperator, y: &BandedOperator) -> BandedOperator {
    let xs = x.adjoint();
    let mx = x.scale_real(-1.0);
    BandedOperator::mul_all(&[&x_mat(&mx), &y_mat(&xs), &z_prime_mat(&y.scale_real(-1.0), &xs), &x_mat(&mx)])
}

/// Elementary factors in `T`: `X`, four in `Z`, `Y`, `X`.
pub const T_FACTORS: usize = 7;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorRecord {
    pub kind: String,
    pub norm: f64,
    pub propagation: String,
    pub elementary: usize,
}

impl FactorRecord {
    pub fn new(kind: impl Into<String>, op: &BandedOperator, elementary: usize) -> Self {
        Self {
            kind: kind.into(),
            norm: op.norm(),
            propagation: crate::metric::format_rat(&op.propagation()),
            elementary,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{FiniteMetricSpace, SpaceSpec};
    use std::sync::Arc;

    fn sample(seed: f64) -> BandedOperator {
        let s = Arc::new(FiniteMetricSpace::generate(&SpaceSpec::Cycle { n: 5 }).unwrap());
        let b = |a: f64, c: f64| CMat::from_rows(1, 1, vec![crate::C64::new(a, c)]);
        BandedOperator::from_blocks(
            s,
            CMat::zeros(1, 1),
            vec![((0, 1), b(0.3 * seed, 0.1)), ((1, 1), b(-0.2, 0.4 * seed)), ((3, 2), b(0.5, -0.25))],
        )
        .unwrap()
    }

    #[test]
    fn inverses_are_exact() {
        let x = sample(1.0);
        let i = BandedOperator::identity(x.space().clone(), 2);
        assert!(x_mat(&x).mul(&x_mat(&x.scale_real(-1.0))).dense_eq(&i));
        assert!(y_mat(&x).mul(&y_mat(&x.scale_real(-1.0))).dense_eq(&i));
    }

    #[test]
    fn closed_forms_match_products() {
        let x = sample(1.0);
        let y = sample(-0.7).adjoint();
        let mx = x.scale_real(-1.0);
        let my = y.scale_real(-1.0);
        let z = BandedOperator::mul_all(&[&x_mat(&x), &y_mat(&y), &x_mat(&mx), &y_mat(&my)]);
        assert!(z.sub(&z_mat(&x, &y)).norm() < 1e-12);
        let zp = BandedOperator::mul_all(&[&y_mat(&my), &x_mat(&mx), &y_mat(&y), &x_mat(&x)]);
        assert!(zp.sub(&z_prime_mat(&x, &y)).norm() < 1e-12);
        assert!(witness(&x).sub(&witness_by_factors(&x)).norm() < 1e-12);
    }

    #[test]
    fn t_inverse_inverts() {
        let x = sample(0.8);
        let y = sample(-1.3);
        let prod = t_mat(&x, &y).mul(&t_inverse(&x, &y));
        assert!(prod.add_identity(-1.0).norm() < 1e-12);
    }

    #[test]
    fn witness_of_identity() {
        let s = Arc::new(FiniteMetricSpace::generate(&SpaceSpec::Path { n: 1 }).unwrap());
        let one = BandedOperator::identity(s.clone(), 1);
        assert!(witness(&one).dense_eq(&BandedOperator::identity(s, 2)));
    }
}
