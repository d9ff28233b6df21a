use std::sync::Arc;

use proptest::prelude::*;
use qkt_core::dense::CMat;
use qkt_core::instances::{factorizable_unitary, instance_rng, random_banded, random_hermitian, rotation_unitary, UnitarySpec};
use qkt_core::metric::{rat, FiniteMetricSpace, Rat, SpaceSpec};
use qkt_core::mv::{check_middle_exactness, connect_boundaries, pad_unitary, BoundaryConfig, Conjugator, MiddleExactness, CIA_TOL};
use qkt_core::quasi::{corner, uniform_times};
use qkt_core::support::membership;
use qkt_core::{
    annular_two_coloring, boundary_odd, build_pair, BandedOperator, ControlledMVPair, Error, FactorConfig, HomotopyPath,
    QuasiElement, QuasiKind, SupportPredicate,
};

fn space(spec: SpaceSpec) -> Arc<FiniteMetricSpace> {
    Arc::new(FiniteMetricSpace::generate(&spec).unwrap())
}

fn pair(spec: SpaceSpec, big_r: i64, r: Rat, s: Rat) -> ControlledMVPair {
    let sp = space(spec);
    let fams = annular_two_coloring(&sp, 0, rat(big_r)).unwrap();
    build_pair(sp, fams, r, s).unwrap()
}

fn path40() -> ControlledMVPair {
    pair(SpaceSpec::Path { n: 40 }, 24, rat(2), rat(11))
}

fn cycle64() -> ControlledMVPair {
    pair(SpaceSpec::Cycle { n: 64 }, 12, rat(1), Rat::new(11, 2))
}

/// A random operator with every block inside `pred`.
fn supported(p: &ControlledMVPair, pred: &SupportPredicate, seed: u64, idx: u64, norm: f64) -> BandedOperator {
    let mut rng = instance_rng(seed, idx);
    let s = p.space().clone();
    let x = random_banded(&s, 1, p.s(), 0.5, 1.0, &mut rng).filter_blocks(|a, b| pred.contains(&s, a, b));
    let n = x.norm();
    if n == 0.0 {
        x
    } else {
        x.scale_real(norm / n)
    }
}

#[test]
fn pair_examples() {
    let p = path40();
    assert_eq!(p.coercity(), 1.0);
    assert_eq!(p.big_r(), rat(24));

    let sp = space(SpaceSpec::Path { n: 40 });
    let fams = annular_two_coloring(&sp, 0, rat(24)).unwrap();
    match build_pair(sp.clone(), fams.clone(), rat(2), rat(10)) {
        Err(Error::Pair(msg)) => assert!(msg.contains("5r < s")),
        other => panic!("s = 5r must be rejected, got {other:?}"),
    }
    match build_pair(sp, fams, rat(2), rat(12)) {
        Err(Error::Pair(msg)) => assert!(msg.contains("s < R/2")),
        other => panic!("s = R/2 must be rejected, got {other:?}"),
    }
}

#[test]
fn single_point_pair() {
    let sp = space(SpaceSpec::Path { n: 1 });
    let fams = annular_two_coloring(&sp, 0, rat(13)).unwrap();
    let p = build_pair(sp.clone(), fams, rat(1), rat(6)).unwrap();
    assert!(p.families()[1].pieces.is_empty());
    let x = BandedOperator::from_blocks(sp, CMat::identity(1), vec![((0, 0), CMat::from_real(1, 1, &[0.7]))]).unwrap();
    assert!(membership(&x, p.algebra(0), 0.0).ok);
    assert!(!membership(&x, p.algebra(1), 0.0).ok);
}

#[test]
fn coercity_is_one_for_row_splitting() {
    let p = path40();
    let samples: Vec<BandedOperator> = (0..20)
        .map(|i| {
            let mut rng = instance_rng(i, 0);
            random_banded(p.space(), 1, p.r(), 0.6, 1.0, &mut rng).add_identity(0.5)
        })
        .collect();
    let c = p.measured_coercity(&samples).unwrap();
    assert!(c <= 1.0 + 1e-12, "{c}");
}

#[test]
fn cia_fixes_the_second_algebra() {
    let p = path40();
    let x = supported(&p, p.intersection(), 3, 0, 1.0);
    let (z, res) = p.cia_project(&x, &x).unwrap();
    assert!(z.dense_eq(&x));
    assert!(res.ok);
    let y = supported(&p, p.algebra(1), 3, 1, 1.0);
    assert!(p.psi(&y).dense_eq(&y));
}

#[test]
fn cia_kills_operators_off_the_second_family() {
    let p = path40();
    // Family 1 is {0..24}; family 2 is {24..39}, thickened by 11 down to 14.
    let x1 = supported(&p, p.algebra(0), 5, 0, 1.0).filter_blocks(|a, b| a < 12 && b < 12);
    assert!(x1.has_blocks());
    let x2 = supported(&p, p.algebra(1), 5, 1, 0.5);
    let (z, res) = p.cia_project(&x1, &x2).unwrap();
    assert!(!z.has_blocks());
    assert!(res.z_minus_x2 <= res.x1_minus_x2 + CIA_TOL);
    assert!(membership(&z, p.intersection(), 0.0).ok);
}

#[test]
fn cia_is_norm_decreasing_on_random_pairs() {
    let p = path40();
    for i in 0..200 {
        let common = supported(&p, p.intersection(), i, 0, 1.0);
        let delta = 0.01 + 0.3 * (i as f64 / 200.0);
        let x1 = common.add(&supported(&p, p.algebra(0), i, 1, delta));
        let x2 = common.add(&supported(&p, p.algebra(1), i, 2, delta));
        let (z, res) = p.cia_project(&x1, &x2).unwrap();
        assert!(res.ok, "{res:?}");
        assert!(z.sub(&x2).norm() <= x1.sub(&x2).norm() + 1e-10);
    }
}

#[test]
fn cia_rejects_inputs_outside_their_algebras() {
    let p = path40();
    let stray = BandedOperator::from_blocks(p.space().clone(), CMat::zeros(1, 1), vec![((0, 39), CMat::identity(1))]).unwrap();
    let zero = BandedOperator::zero(p.space().clone(), 1);
    assert!(matches!(p.cia_project(&stray, &zero), Err(Error::SupportViolation { .. })));
    assert!(matches!(p.cia_project(&zero, &stray), Err(Error::SupportViolation { .. })));
}

fn identity_unitary(p: &ControlledMVPair, eps: f64) -> (QuasiElement, HomotopyPath) {
    let one = BandedOperator::identity(p.space().clone(), 1);
    let u = QuasiElement::certify(one.clone(), QuasiKind::Unitary, eps, p.r()).unwrap();
    let path = HomotopyPath::from_operators(uniform_times(4), vec![one; 4], QuasiKind::Unitary, eps, p.r()).unwrap();
    (u, path)
}

#[test]
fn boundary_of_identity_is_trivial() {
    let p = cycle64();
    let (u, path) = identity_unitary(&p, 0.02);
    let b = boundary_odd(&u, &path, &p, &BoundaryConfig::default()).unwrap();
    assert_eq!(b.rank_class, 0);
    let e = corner(p.space().clone(), b.q.op().fiber(), b.n);
    assert!(b.q.op().sub(&e).norm() < 1e-10);
    assert!(b.piece_indices.iter().all(|&i| i == 0));
}

#[test]
fn boundary_rejects_unitaries_beyond_the_order() {
    let p = cycle64();
    let mut rng = instance_rng(2, 0);
    let spec = UnitarySpec::new(1, 0.02, rat(2));
    let inst = rotation_unitary(p.space(), &spec, None, &mut rng).unwrap();
    assert!(inst.u.op().propagation() > p.r());
    assert!(matches!(boundary_odd(&inst.u, &inst.path, &p, &BoundaryConfig::default()), Err(Error::Pair(_))));
}

fn side_sets(p: &ControlledMVPair) -> [Vec<bool>; 2] {
    let n = p.space().len();
    [0, 1].map(|i| {
        let mut mark = vec![false; n];
        for piece in p.algebra(i).piece_list().unwrap() {
            for &x in piece {
                mark[x] = true;
            }
        }
        mark
    })
}

#[test]
fn boundary_of_factorizable_unitary_vanishes() {
    let p = cycle64();
    let sides = side_sets(&p);
    for seed in 0..3 {
        let mut rng = instance_rng(seed, 0);
        let mut spec = UnitarySpec::new(1, 0.02, rat(1));
        spec.steps = 6;
        let (inst, [v1, v2]) = factorizable_unitary(p.space(), &spec, [&sides[0], &sides[1]], &mut rng).unwrap();
        assert!(membership(&v1.add_identity(-1.0), p.algebra(0), 0.0).ok);
        assert!(membership(&v2.add_identity(-1.0), p.algebra(1), 0.0).ok);
        assert!(v1.mul(&v2).sub(inst.u.op()).norm() < 1e-12);
        let b = boundary_odd(&inst.u, &inst.path, &p, &BoundaryConfig::default()).unwrap();
        assert_eq!(b.rank_class, 0);
    }
}

#[test]
fn boundary_is_well_defined_on_an_engineered_instance() {
    let p = cycle64();
    let mut rng = instance_rng(7, 0);
    let mut spec = UnitarySpec::new(1, 0.02, rat(1));
    spec.steps = 6;
    spec.rotations = 6;
    let inst = rotation_unitary(p.space(), &spec, None, &mut rng).unwrap();
    let cfg = BoundaryConfig::default();
    let a = boundary_odd(&inst.u, &inst.path, &p, &cfg).unwrap();
    let b = boundary_odd(&inst.u, &inst.resample(9).unwrap(), &p, &cfg).unwrap();
    assert_eq!(a.rank_class, b.rank_class);
    let link = connect_boundaries(&a, &b, 4).unwrap();
    assert_eq!(link.rank, link.rank_other);
    assert!(link.path.max_step() < a.q.eps().max(b.q.eps()));

    let (padded, padded_path) = pad_unitary(&inst.u, &inst.path, 1).unwrap();
    let c = boundary_odd(&padded, &padded_path, &p, &cfg).unwrap();
    assert_eq!(c.rank_class, a.rank_class);

    let norms = &a.provenance.norms;
    assert!(norms.a_minus_b < 8.0 * norms.eps_measured);
    assert!(norms.q_residual < norms.q_eps);
}

fn intersection_projection(p: &ControlledMVPair, eps: f64) -> (QuasiElement, Vec<usize>) {
    let piece = p.intersection().piece_list().unwrap()[0].clone();
    let pts = vec![piece[0], piece[1]];
    let mut q = BandedOperator::zero(p.space().clone(), 1);
    q.set_dense_on(&pts, &CMat::from_real(2, 2, &[0.98, 0.0, 0.0, 0.01]));
    (QuasiElement::certify(q, QuasiKind::Projection, eps, rat(1)).unwrap(), pts)
}

#[test]
fn middle_exactness_with_identity_conjugator() {
    let p = cycle64();
    let (q, _) = intersection_projection(&p, 0.1);
    match check_middle_exactness(&q, &q, &p, &[], 1, &FactorConfig::default()).unwrap() {
        MiddleExactness::Found { p: out, bounds, .. } => {
            let extra = out.fiber() - q.op().fiber();
            assert!(out.sub(&q.op().pad_zero(extra)).norm() < 1e-8);
            assert!(bounds.p_minus_x2 <= bounds.ceiling);
        }
        other => panic!("expected a projection, got {other:?}"),
    }
}

#[test]
fn middle_exactness_with_localized_conjugator() {
    let p = cycle64();
    let eps = 0.1;
    let (q1, pts) = intersection_projection(&p, eps);
    let mut rng = instance_rng(9, 0);
    let mut h = BandedOperator::zero(p.space().clone(), 1);
    h.set_dense_on(&pts, &random_hermitian(&mut rng, 2));
    let h = h.scale_real(0.05 / h.norm());
    let w = h.exp_i(1.0);
    let q2_op = BandedOperator::mul_all(&[&w.adjoint(), q1.op(), &w]);
    let q2_op = q2_op.add(&q2_op.adjoint()).scale_real(0.5);
    let q2 = QuasiElement::certify(q2_op, QuasiKind::Projection, eps, rat(1)).unwrap();

    let times = uniform_times(5);
    let ops: Vec<BandedOperator> = times.iter().map(|&t| h.exp_i(1.0 - t)).collect();
    let adjoint = QuasiElement::certify(w.clone(), QuasiKind::Unitary, eps, rat(1)).unwrap();
    let path = HomotopyPath::from_operators(times, ops, QuasiKind::Unitary, eps, rat(1)).unwrap();
    let cand = Conjugator { adjoint, path };
    match check_middle_exactness(&q1, &q2, &p, &[cand], 2, &FactorConfig::default()).unwrap() {
        MiddleExactness::Found { bounds, candidate, .. } => {
            assert_eq!(candidate, 0);
            assert!(bounds.conjugation_gap < 1e-12);
            assert!(bounds.p_minus_x2 <= bounds.ceiling);
        }
        other => panic!("expected a projection, got {other:?}"),
    }
}

#[test]
fn middle_exactness_rejects_rank_mismatch() {
    let p = cycle64();
    let (q, _) = intersection_projection(&p, 0.1);
    let zero = QuasiElement::certify(BandedOperator::zero(p.space().clone(), 1), QuasiKind::Projection, 0.1, rat(1)).unwrap();
    assert!(matches!(
        check_middle_exactness(&q, &zero, &p, &[], 1, &FactorConfig::default()),
        Err(Error::Pair(_))
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn psi_is_linear_idempotent_and_contractive(seed in any::<u64>(), a in -2.0f64..2.0) {
        let p = path40();
        let x = supported(&p, p.algebra(0), seed, 0, 1.0);
        let y = supported(&p, p.algebra(0), seed, 1, 1.0);
        let lhs = p.psi(&x.add(&y.scale_real(a)));
        let rhs = p.psi(&x).add(&p.psi(&y).scale_real(a));
        prop_assert!(lhs.sub(&rhs).norm() < 1e-12);
        let once = p.psi(&x);
        prop_assert!(p.psi(&once).dense_eq(&once));
        prop_assert!(once.norm() <= x.norm() + 1e-12);
        prop_assert!(membership(&once, p.intersection(), 0.0).ok);
        let full = random_banded(p.space(), 1, rat(3), 0.5, 1.0, &mut instance_rng(seed, 2));
        prop_assert!(p.psi(&full).norm() <= full.norm() + 1e-12);
    }
}
