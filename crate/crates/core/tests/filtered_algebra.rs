mod oracle;

use std::sync::Arc;

use proptest::prelude::*;
use qkt_core::dense::{CMat, C64};
use qkt_core::instances::{instance_rng, random_banded};
use qkt_core::metric::{annular_two_coloring, rat, FiniteMetricSpace, Rat, SpaceSpec};
use qkt_core::support::{membership, SupportPredicate};
use qkt_core::BandedOperator;

fn space(spec: SpaceSpec) -> Arc<FiniteMetricSpace> {
    Arc::new(FiniteMetricSpace::generate(&spec).unwrap())
}

fn one(v: f64) -> CMat {
    CMat::from_real(1, 1, &[v])
}

fn shift(s: &Arc<FiniteMetricSpace>) -> BandedOperator {
    let n = s.len();
    BandedOperator::from_blocks(s.clone(), CMat::zeros(1, 1), (0..n).map(|x| ((x, (x + 1) % n), one(1.0)))).unwrap()
}

#[test]
fn multiplication_examples() {
    let s = space(SpaceSpec::Cycle { n: 8 });
    let id = BandedOperator::identity(s.clone(), 1);
    let ii = id.mul(&id);
    assert!(ii.dense_eq(&id));
    assert_eq!(ii.propagation(), rat(0));

    let sh = shift(&s);
    let sq = sh.mul(&sh);
    assert_eq!(sq.propagation(), rat(2));
    assert_eq!(sq.block(0, 2), Some(&one(1.0)));

    let zero = BandedOperator::zero(s.clone(), 1);
    let prod = sh.mul(&zero);
    assert!(!prod.has_blocks());
    assert!(prod.scalar().is_zero());
}

#[test]
fn mismatched_operands_are_rejected() {
    let s = space(SpaceSpec::Cycle { n: 8 });
    let other = space(SpaceSpec::Path { n: 8 });
    let a = BandedOperator::identity(s.clone(), 1);
    assert!(a.try_mul(&BandedOperator::identity(other, 1)).is_err());
    assert!(a.try_mul(&BandedOperator::identity(s, 2)).is_err());
}

#[test]
fn scalar_parts_multiply() {
    let s = space(SpaceSpec::Path { n: 3 });
    let a = BandedOperator::from_blocks(s.clone(), one(2.0), vec![((0, 1), one(1.0))]).unwrap();
    let b = BandedOperator::from_blocks(s, one(3.0), vec![((1, 1), one(1.0))]).unwrap();
    let ab = a.mul(&b);
    assert_eq!(ab.scalar(), &one(6.0));
    // 2·(e₁₁) + (e₀₁)·3 + e₀₁·e₁₁
    assert_eq!(ab.block(1, 1), Some(&one(2.0)));
    assert_eq!(ab.block(0, 1), Some(&one(4.0)));
}

#[test]
fn norm_examples() {
    let s = space(SpaceSpec::Cycle { n: 8 });
    assert!((BandedOperator::identity(s.clone(), 1).norm() - 1.0).abs() < 1e-12);
    assert!((shift(&s).norm() - 1.0).abs() < 1e-12);
    let d = BandedOperator::from_blocks(s, CMat::zeros(1, 1), vec![((0, 0), one(2.0))]).unwrap();
    assert!((d.norm() - 2.0).abs() < 1e-12);
}

#[test]
fn membership_examples() {
    let s = space(SpaceSpec::Path { n: 10 });
    let fams = annular_two_coloring(&s, 0, rat(3)).unwrap();
    let nbhd = SupportPredicate::thickened("A1", &s, &fams[0], rat(1));
    let id = BandedOperator::identity(s.clone(), 1);
    assert!(membership(&id, &nbhd, 0.0).ok);

    let mut rows = vec![false; 10];
    rows[..4].iter_mut().for_each(|b| *b = true);
    let delta = SupportPredicate::rows("Δ", rows, rat(2));
    let inside = BandedOperator::from_blocks(s.clone(), CMat::zeros(1, 1), vec![((3, 5), one(1.0))]).unwrap();
    assert!(membership(&inside, &delta, 0.0).ok);

    // Family 1 pieces {0..3} and {6..9}; thickening 1 keeps them apart.
    let straddle = BandedOperator::from_blocks(s, CMat::zeros(1, 1), vec![((1, 7), one(0.5))]).unwrap();
    let m = membership(&straddle, &nbhd, 1e-10);
    assert!(!m.ok);
    let worst = m.worst.unwrap();
    assert_eq!((worst.row, worst.col), (1, 7));
    assert!((worst.norm - 0.5).abs() < 1e-12);
}

#[test]
fn truncate_and_row_restrict_examples() {
    let s = space(SpaceSpec::Path { n: 4 });
    let id = BandedOperator::identity(s.clone(), 1);
    assert!(id.truncate(rat(0)).dense_eq(&id));

    let all_ones: Vec<((usize, usize), CMat)> = (0..4).flat_map(|x| (0..4).map(move |y| ((x, y), one(1.0)))).collect();
    let a = BandedOperator::from_blocks(s, CMat::zeros(1, 1), all_ones).unwrap();
    assert!(a.row_restrict(&[true; 4]).dense_eq(&a));
    let r = a.row_restrict(&[true, true, false, false]);
    for x in 2..4 {
        for y in 0..4 {
            assert_eq!(r.block(x, y), None);
        }
    }
    // All-ones 4x4 has norm 4; two of its rows have norm 2·√2.
    assert!((a.norm() - 4.0).abs() < 1e-12);
    assert!((r.norm() - 8f64.sqrt()).abs() < 1e-12);
    assert!(r.norm() <= a.norm());
}

#[test]
fn norms_match_jacobi_oracle() {
    let s = space(SpaceSpec::Cycle { n: 12 });
    for seed in 0..20 {
        let mut rng = instance_rng(seed, 0);
        let a = random_banded(&s, 2, rat(2), 0.5, 1.0 + seed as f64 * 0.1, &mut rng).add_identity(0.3);
        let expected = oracle::norm(&a.to_dense());
        assert!((a.norm() - expected).abs() <= 1e-8 * expected.max(1.0), "{} vs {expected}", a.norm());
    }
}

#[test]
fn spectral_calculus_matches_jacobi_oracle() {
    let s = space(SpaceSpec::Path { n: 9 });
    let mut rng = instance_rng(3, 0);
    let a = random_banded(&s, 2, rat(1), 0.7, 1.0, &mut rng);
    let h = a.add(&a.adjoint()).scale_real(0.5);
    let f = |t: f64| (1.0 + t * t).sqrt();
    let lib = h.hermitian_apply(f).to_dense();
    let ora = oracle::apply(&h.to_dense(), f);
    assert!(oracle::norm(&lib.sub(&ora)) < 1e-10);
}

fn operand(seed: u64, idx: u64, s: &Arc<FiniteMetricSpace>, r: Rat, fiber: usize) -> BandedOperator {
    let mut rng = instance_rng(seed, idx);
    let scalar = CMat::from_fn(fiber, fiber, |i, j| C64::new(0.2 * (i + 2 * j) as f64 - 0.3, 0.1 * i as f64));
    random_banded(s, fiber, r, 0.4, 1.5, &mut rng).add(&BandedOperator::from_scalar(s.clone(), scalar))
}

fn small_space() -> impl Strategy<Value = SpaceSpec> {
    prop_oneof![
        (2usize..=16).prop_map(|n| SpaceSpec::Cycle { n }),
        (2usize..=16).prop_map(|n| SpaceSpec::Path { n }),
        (2usize..=4, 2usize..=4).prop_map(|(rows, cols)| SpaceSpec::Grid { rows, cols }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn propagation_is_subadditive_and_adjoint_invariant(spec in small_space(), seed in any::<u64>(), ra in 0i64..4, rb in 0i64..4) {
        let s = space(spec);
        let a = operand(seed, 0, &s, rat(ra), 1);
        let b = operand(seed, 1, &s, rat(rb), 1);
        prop_assert!(a.mul(&b).propagation() <= a.propagation() + b.propagation());
        prop_assert_eq!(a.adjoint().propagation(), a.propagation());
    }

    #[test]
    fn norm_is_submultiplicative_and_adjoint_invariant(spec in small_space(), seed in any::<u64>(), fiber in 1usize..=2) {
        let s = space(spec);
        let a = operand(seed, 0, &s, rat(2), fiber);
        let b = operand(seed, 1, &s, rat(1), fiber);
        prop_assert!(a.mul(&b).norm() <= a.norm() * b.norm() + 1e-7);
        prop_assert!((a.adjoint().norm() - a.norm()).abs() < 1e-10);
    }

    #[test]
    fn row_restrictions_reassemble(spec in small_space(), seed in any::<u64>(), mask in any::<u64>()) {
        let s = space(spec);
        let a = operand(seed, 0, &s, rat(3), 2);
        let rows: Vec<bool> = (0..s.len()).map(|i| mask >> (i % 64) & 1 == 1).collect();
        let comp: Vec<bool> = rows.iter().map(|b| !b).collect();
        let parts = a.row_restrict(&rows).add(&a.row_restrict(&comp));
        prop_assert!(parts.dense_eq(&a));
        prop_assert!(a.row_restrict(&rows).norm() <= a.norm() * (1.0 + 1e-12));
        prop_assert!(a.row_restrict(&comp).norm() <= a.norm() * (1.0 + 1e-12));
    }
}
