//! Controlled Mayer-Vietoris pairs built from two-family covers, the
//! intersection projection `Ψ`, and the odd boundary map.

use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dense::CMat;
use crate::error::{Error, Result};
use crate::factorization::{factor_across, FactorConfig, MEMBERSHIP_TOL, PairFactorization, PairTrace, RowSplit, SidePredicates};
use crate::eigen;
use crate::metric::{format_rat, rat, rat_to_f64, check_family, verify_cover, CoverFamily, FiniteMetricSpace, Rat};
use crate::operator::BandedOperator;
use crate::quasi::{
    kappa0, unitary_eigen, unitary_power, uniform_times, HomotopyPath, QuasiData, QuasiElement, QuasiKind,
};
use crate::support::{membership, require_membership, SupportPredicate};

pub const CIA_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ControlledMVPair {
    space: Arc<FiniteMetricSpace>,
    families: [CoverFamily; 2],
    r: Rat,
    s: Rat,
    big_r: Rat,
    coercity: f64,
    /// Rows in `X⁽ⁱ⁾`, propagation `<= r`.
    delta: [SupportPredicate; 2],
    /// Pieces of family `i` thickened by `s`.
    algebra: [SupportPredicate; 2],
    intersection: SupportPredicate,
    split: RowSplit,
}

/// `5r < s < R/2`, with `R` the smaller disjointness of the two families.
pub fn build_pair(space: Arc<FiniteMetricSpace>, families: [CoverFamily; 2], r: Rat, s: Rat) -> Result<ControlledMVPair> {
    if r <= Rat::zero() {
        return Err(Error::Pair(format!("r = {} must be positive", format_rat(&r))));
    }
    verify_cover(&space, &families, Rat::zero()).map_err(|v| Error::Pair(format!("coloring does not cover: {v}")))?;
    for (i, fam) in families.iter().enumerate() {
        check_family(&space, fam, i, fam.r_disjoint)
            .map_err(|v| Error::Pair(format!("family {} is not {}-disjoint: {v}", i + 1, format_rat(&fam.r_disjoint))))?;
    }
    let big_r = families[0].r_disjoint.min(families[1].r_disjoint);
    if s <= r * rat(5) {
        return Err(Error::Pair(format!(
            "5r < s fails: 5r = {}, s = {}",
            format_rat(&(r * rat(5))),
            format_rat(&s)
        )));
    }
    if s * rat(2) >= big_r {
        return Err(Error::Pair(format!(
            "s < R/2 fails: s = {}, R/2 = {}",
            format_rat(&s),
            format_rat(&(big_r / rat(2)))
        )));
    }
    let n = space.len();
    let rows = families[0].union(n);
    let rows2: Vec<bool> = families[1].union(n);
    let delta = [
        SupportPredicate::rows("Δ1", rows.clone(), r),
        SupportPredicate::rows("Δ2", rows2, r),
    ];
    let algebra = [
        SupportPredicate::thickened("A_Δ1", &space, &families[0], s),
        SupportPredicate::thickened("A_Δ2", &space, &families[1], s),
    ];
    let mut meet = Vec::new();
    for p in algebra[0].piece_list().unwrap_or(&[]) {
        for q in algebra[1].piece_list().unwrap_or(&[]) {
            let both: Vec<usize> = p.iter().copied().filter(|x| q.contains(x)).collect();
            if !both.is_empty() {
                meet.push(both);
            }
        }
    }
    let intersection = SupportPredicate::pieces("A_Δ1 ∩ A_Δ2", n, meet);
    Ok(ControlledMVPair {
        space,
        families,
        r,
        s,
        big_r,
        coercity: 1.0,
        delta,
        algebra,
        intersection,
        split: RowSplit { rows },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiaResult {
    pub x1_minus_x2: f64,
    pub z_minus_x2: f64,
    pub z_minus_x1: f64,
    pub in_intersection: bool,
    pub ok: bool,
}

impl ControlledMVPair {
    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn families(&self) -> &[CoverFamily; 2] {
        &self.families
    }

    pub fn r(&self) -> Rat {
        self.r
    }

    pub fn s(&self) -> Rat {
        self.s
    }

    pub fn big_r(&self) -> Rat {
        self.big_r
    }

    pub fn coercity(&self) -> f64 {
        self.coercity
    }

    pub fn delta(&self, i: usize) -> &SupportPredicate {
        &self.delta[i]
    }

    pub fn algebra(&self, i: usize) -> &SupportPredicate {
        &self.algebra[i]
    }

    pub fn intersection(&self) -> &SupportPredicate {
        &self.intersection
    }

    pub fn splitting(&self) -> &RowSplit {
        &self.split
    }

    pub fn side_predicates(&self, r_u: Rat) -> SidePredicates {
        SidePredicates {
            stated: crate::factorization::stated_predicates(
                &self.space,
                [&self.families[0], &self.families[1]],
                r_u,
            ),
            algebra: Some(self.algebra.clone()),
        }
    }

    /// `x = x₁ + x₂` with `x₁ = χ_{X⁽¹⁾} x`.
    pub fn decompose_element(&self, x: &BandedOperator) -> Result<(BandedOperator, BandedOperator)> {
        if x.propagation() > self.r {
            return Err(Error::PropagationExceeded {
                propagation: x.propagation(),
                limit: self.r,
            });
        }
        use crate::factorization::CoerciveSplitting;
        let (x1, x2) = self.split.split(x);
        require_membership(&x1, &self.delta[0], 0.0, "x₁")?;
        require_membership(&x2, &self.delta[1], 0.0, "x₂")?;
        Ok((x1, x2))
    }

    /// Largest `‖xᵢ‖ / ‖x‖` over the samples.
    pub fn measured_coercity(&self, samples: &[BandedOperator]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for x in samples {
            let n = x.norm();
            if n == 0.0 {
                continue;
            }
            let (x1, x2) = self.decompose_element(x)?;
            worst = worst.max(x1.norm() / n).max(x2.norm() / n);
        }
        Ok(worst)
    }

    /// `Ψ(x) = Σᵢ χᵢ x χᵢ` over the thickened family-2 pieces; the scalar
    /// part passes through.
    pub fn psi(&self, x: &BandedOperator) -> BandedOperator {
        let alg = &self.algebra[1];
        let space = self.space.clone();
        x.filter_blocks(|a, b| alg.contains(&space, a, b))
    }

    pub fn cia_project(&self, x1: &BandedOperator, x2: &BandedOperator) -> Result<(BandedOperator, CiaResult)> {
        require_membership(x1, &self.algebra[0], MEMBERSHIP_TOL, "x₁")?;
        require_membership(x2, &self.algebra[1], MEMBERSHIP_TOL, "x₂")?;
        let z = self.psi(x1);
        let d = x1.sub(x2).norm();
        let z_x2 = z.sub(x2).norm();
        let z_x1 = z.sub(x1).norm();
        let in_intersection = membership(&z, &self.intersection, 0.0).ok;
        let ok = in_intersection && z_x2 <= d + CIA_TOL && z_x1 <= (self.coercity + 1.0) * d + CIA_TOL;
        Ok((
            z,
            CiaResult {
                x1_minus_x2: d,
                z_minus_x2: z_x2,
                z_minus_x1: z_x1,
                in_intersection,
                ok,
            },
        ))
    }

    /// Index of `κ₀(q) − diag(I_n, 0)` on each intersection piece.
    pub fn piece_indices(&self, kappa: &BandedOperator) -> Vec<i64> {
        self.intersection
            .piece_list()
            .unwrap_or(&[])
            .iter()
            .map(|p| kappa.block_trace_on(p).re.round() as i64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConfig {
    pub factor: FactorConfig,
    /// `q` is certified at `min(q_alpha · ε, q_eps_cap)`.
    pub q_alpha: f64,
    pub q_eps_cap: f64,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        Self {
            factor: FactorConfig::default(),
            q_alpha: 40.0,
            q_eps_cap: 0.24,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryNorms {
    /// Largest of the factorization bound and the residuals of `w₁`, `w₂`.
    pub eps_measured: f64,
    pub a_minus_b: f64,
    pub y_minus_b: f64,
    pub y_minus_a: f64,
    pub q_minus_w1: f64,
    pub q_minus_w2: f64,
    pub q_residual: f64,
    pub q_eps: f64,
    /// `q_residual / ε`
    pub lambda: f64,
    /// `propagation(q) / r`
    pub propagation_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProvenance {
    pub u: QuasiData,
    pub w1: QuasiData,
    pub w2: QuasiData,
    pub factorization: PairTrace,
    pub norms: BoundaryNorms,
}

#[derive(Clone, Debug)]
pub struct BoundaryClass {
    pub q: QuasiElement,
    pub n: usize,
    pub rank_class: i64,
    pub piece_indices: Vec<i64>,
    pub kappa: BandedOperator,
    pub provenance: BoundaryProvenance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryData {
    pub q: QuasiData,
    pub n: usize,
    pub rank_class: i64,
    pub piece_indices: Vec<i64>,
    pub provenance: BoundaryProvenance,
}

impl BoundaryClass {
    pub fn to_data(&self) -> BoundaryData {
        BoundaryData {
            q: self.q.to_data(),
            n: self.n,
            rank_class: self.rank_class,
            piece_indices: self.piece_indices.clone(),
            provenance: self.provenance.clone(),
        }
    }
}

/// `diag(u, I_m)` and the padded path.
pub fn pad_unitary(u: &QuasiElement, path: &HomotopyPath, m: usize) -> Result<(QuasiElement, HomotopyPath)> {
    let padded = QuasiElement::certify_control(u.op().pad_identity(m), QuasiKind::Unitary, u.eps(), u.r())?;
    let ops = path.samples().iter().map(|s| s.op().pad_identity(m)).collect();
    let p = HomotopyPath::from_operators(path.times().to_vec(), ops, QuasiKind::Unitary, path.start().eps(), path.start().r())?;
    Ok((padded, p))
}

/// `diag(u, u*)` with the path `diag(u_t, u_t*)`.
fn double(u: &QuasiElement, path: &HomotopyPath) -> Result<(QuasiElement, HomotopyPath)> {
    let d = |x: &BandedOperator| BandedOperator::direct_sum(&[x, &x.adjoint()]);
    let big = QuasiElement::certify_control(d(u.op()), QuasiKind::Unitary, u.eps(), u.r())?;
    let ops = path.samples().iter().map(|s| d(s.op())).collect();
    let p = HomotopyPath::from_operators(path.times().to_vec(), ops, QuasiKind::Unitary, path.start().eps(), path.start().r())?;
    Ok((big, p))
}

/// `[u] ↦ [q, n]`: factor `diag(u, u*) ≈ w₁w₂`, push `E = diag(I_n, 0)`
/// through both factors, and project into the intersection.
pub fn boundary_odd(
    u: &QuasiElement,
    path: &HomotopyPath,
    pair: &ControlledMVPair,
    config: &BoundaryConfig,
) -> Result<BoundaryClass> {
    let prop = u.op().propagation();
    if prop > pair.r {
        return Err(Error::Pair(format!(
            "order check: propagation {} of u exceeds the pair's order {}",
            format_rat(&prop),
            format_rat(&pair.r)
        )));
    }
    let (big, big_path) = double(u, path)?;
    let fact = factor_across(&big, &big_path, &pair.split, &pair.side_predicates(u.r()), &config.factor)?;
    finish_boundary(u, &fact, pair, config)
}

fn finish_boundary(
    u: &QuasiElement,
    fact: &PairFactorization,
    pair: &ControlledMVPair,
    config: &BoundaryConfig,
) -> Result<BoundaryClass> {
    let n = u.op().fiber();
    let fiber = fact.w1.op().fiber();
    let e = BandedOperator::from_scalar(pair.space.clone(), CMat::corner_projection(fiber, n));
    let w1 = fact.w1.op();
    let w2 = fact.w2.op();
    let a = BandedOperator::mul_all(&[&w1.adjoint(), &e, w1]).sub(&e);
    let b = BandedOperator::mul_all(&[w2, &e, &w2.adjoint()]).sub(&e);
    let (y, _) = pair.cia_project(&a, &b)?;
    let mut q_op = y.add(&e);
    q_op.prune();
    // Exact self-adjointness; the defect is rounding only.
    let q_op = q_op.add(&q_op.adjoint()).scale_real(0.5);

    let eps_measured = fact.achieved_bound.max(fact.w1.residual()).max(fact.w2.residual());
    let c = pair.coercity;
    let a_minus_b = a.sub(&b).norm();
    let y_minus_b = y.sub(&b).norm();
    let y_minus_a = y.sub(&a).norm();
    for (which, value, bound) in [
        ("‖a − b‖", a_minus_b, 8.0 * eps_measured),
        ("‖y − b‖", y_minus_b, 8.0 * c * eps_measured),
        ("‖y − a‖", y_minus_a, 8.0 * (c + 1.0) * eps_measured),
    ] {
        if value >= bound {
            return Err(Error::ResidualTooLarge { which, value, bound });
        }
    }
    require_membership(&q_op, &pair.intersection, 0.0, "q")?;

    let q_eps = (config.q_alpha * u.eps()).min(config.q_eps_cap);
    let q_prop = q_op.propagation();
    let q = QuasiElement::certify(q_op, QuasiKind::Projection, q_eps, q_prop)?;
    let w1_e = BandedOperator::mul_all(&[&w1.adjoint(), &e, w1]);
    let w2_e = BandedOperator::mul_all(&[w2, &e, &w2.adjoint()]);
    let k0 = kappa0(&q)?;
    let norms = BoundaryNorms {
        eps_measured,
        a_minus_b,
        y_minus_b,
        y_minus_a,
        q_minus_w1: q.op().sub(&w1_e).norm(),
        q_minus_w2: q.op().sub(&w2_e).norm(),
        q_residual: q.residual(),
        q_eps,
        lambda: q.residual() / u.eps(),
        propagation_ratio: rat_to_f64(q_prop / pair.r),
    };
    let piece_indices = pair.piece_indices(&k0.projection);
    Ok(BoundaryClass {
        n,
        rank_class: k0.rank - n as i64,
        piece_indices,
        kappa: k0.projection,
        provenance: BoundaryProvenance {
            u: u.to_data(),
            w1: fact.w1.to_data(),
            w2: fact.w2.to_data(),
            factorization: fact.trace.clone(),
            norms,
        },
        q,
    })
}

#[derive(Clone, Debug)]
pub struct ConnectingHomotopy {
    pub path: HomotopyPath,
    pub rank: i64,
    pub rank_other: i64,
    /// Pieces where the two spectral projections differ, with their ranks.
    pub regions: Vec<(Vec<usize>, i64)>,
}

/// Joins two boundary projections of equal class: straight to `κ₀(q)`,
/// a unitary conjugation onto `κ₀(q')` region by region, straight to `q'`.
/// The shorter fiber is padded with zeros.
pub fn connect_boundaries(a: &BoundaryClass, b: &BoundaryClass, samples: usize) -> Result<ConnectingHomotopy> {
    if a.n != b.n {
        return Err(Error::InvalidParameter(format!("scalar ranks differ: {} and {}", a.n, b.n)));
    }
    let fiber = a.q.op().fiber().max(b.q.op().fiber());
    let pad = |x: &BandedOperator| x.pad_zero(fiber - x.fiber());
    let (q, qp) = (pad(a.q.op()), pad(b.q.op()));
    let (k, kp) = (pad(&a.kappa), pad(&b.kappa));
    let rank = a.rank_class + a.n as i64;
    let rank_other = b.rank_class + b.n as i64;
    if rank != rank_other {
        return Err(Error::ScalarRank {
            expected: rank as usize,
            found: rank_other as usize,
        });
    }

    let mut regions = Vec::new();
    let mut conj_parts = Vec::new();
    let mut support = k.without_scalar().add(&kp.without_scalar());
    support.prune();
    let comps = support.components();
    for comp in comps {
        let dk = k.dense_on(&comp);
        let dkp = kp.dense_on(&comp);
        if dk.sub(&dkp).max_abs() == 0.0 {
            continue;
        }
        let rk = dk.trace().re.round() as i64;
        let rkp = dkp.trace().re.round() as i64;
        if rk != rkp {
            return Err(Error::Pair(format!(
                "local ranks differ on a region of {} points: {rk} and {rkp}",
                comp.len()
            )));
        }
        let v = intertwiner(&dk, &dkp)?;
        let (w, phases) = unitary_eigen(&v)?;
        regions.push((comp.clone(), rk));
        conj_parts.push((comp, w, phases));
    }

    let eps = a.q.eps().max(b.q.eps());
    let sym = |o: BandedOperator| {
        let mut h = o.add(&o.adjoint()).scale_real(0.5);
        h.prune();
        h
    };
    let conjugated = |t: f64| {
        let mut x = k.clone();
        for (comp, w, phases) in &conj_parts {
            let vt = unitary_power(w, phases, t);
            let dk = k.dense_on(comp);
            x.set_dense_on(comp, &vt.mul(&dk).mul(&vt.adjoint()));
        }
        x
    };
    let leg_q = refine_leg(samples, eps, |t| sym(q.scale_real(1.0 - t).add(&k.scale_real(t))))?;
    let mut leg_c = refine_leg(samples, eps, |t| sym(if t == 1.0 { kp.clone() } else { conjugated(t) }))?;
    let leg_p = refine_leg(samples, eps, |t| sym(kp.scale_real(1.0 - t).add(&qp.scale_real(t))))?;
    let mut ops = leg_q;
    leg_c.remove(0);
    ops.extend(leg_c);
    ops.extend(leg_p.into_iter().skip(1));
    let times = uniform_times(ops.len());
    let r = ops.iter().map(|o| o.propagation()).max().unwrap();
    let path = HomotopyPath::from_operators(times, ops, QuasiKind::Projection, eps, r)?;
    Ok(ConnectingHomotopy {
        path,
        rank,
        rank_other,
        regions,
    })
}

/// Samples `f` on a uniform grid, refining until consecutive samples are
/// closer than `eps / 2`.
fn refine_leg(samples: usize, eps: f64, f: impl Fn(f64) -> BandedOperator) -> Result<Vec<BandedOperator>> {
    let mut n = samples.max(2);
    loop {
        let ops: Vec<BandedOperator> = uniform_times(n).into_iter().map(&f).collect();
        let step = ops.windows(2).map(|w| w[1].sub(&w[0]).norm()).fold(0.0, f64::max);
        if step < 0.5 * eps {
            return Ok(ops);
        }
        if n >= MAX_LEG_SAMPLES {
            return Err(Error::HomotopyStep {
                index: n,
                step,
                bound: 0.5 * eps,
            });
        }
        let grow = ((n - 1) as f64 * step / (0.4 * eps)).ceil() as usize + 1;
        n = grow.clamp(n + 1, MAX_LEG_SAMPLES);
    }
}

const MAX_LEG_SAMPLES: usize = 2048;

/// A unitary `V` with `V P V* = P'` for projections of equal rank.
fn intertwiner(p: &CMat, pp: &CMat) -> Result<CMat> {
    let n = p.rows();
    let basis = |m: &CMat| {
        let e = eigen::eigen(m, true);
        let v = e.vectors.expect("vectors requested");
        let split = e.values.iter().filter(|&&l| l < 0.5).count();
        (v, split)
    };
    let (v, s) = basis(p);
    let (vp, sp) = basis(pp);
    if s != sp {
        return Err(Error::ScalarRank {
            expected: n - s,
            found: n - sp,
        });
    }
    // Columns are ordered by eigenvalue in both, so V' V* maps each range
    // onto the corresponding one.
    let out = vp.mul(&v.adjoint());
    Ok(out)
}

/// A candidate conjugator `C` with `C y₁ C* ≈ y₂`, and a path from `C*` to
/// the identity.
#[derive(Clone, Debug)]
pub struct Conjugator {
    pub adjoint: QuasiElement,
    pub path: HomotopyPath,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MiddleBounds {
    pub conjugation_gap: f64,
    pub x1_minus_x2: f64,
    pub p_minus_x1: f64,
    pub p_minus_x2: f64,
    pub eps_measured: f64,
    pub ceiling: f64,
}

#[derive(Clone, Debug)]
pub enum MiddleExactness {
    Found {
        p: BandedOperator,
        bounds: MiddleBounds,
        candidate: usize,
    },
    Inconclusive {
        tried: usize,
        reasons: Vec<String>,
    },
}

/// Given `y₁` in `A_Δ1` and `y₂` in `A_Δ2` with the same class in the full
/// algebra, factors a conjugator `C* ≈ w₁w₂` and projects `w₁* y₁ w₁`
/// into the intersection. The identity is tried after the candidates.
pub fn check_middle_exactness(
    y1: &QuasiElement,
    y2: &QuasiElement,
    pair: &ControlledMVPair,
    candidates: &[Conjugator],
    budget: usize,
    config: &FactorConfig,
) -> Result<MiddleExactness> {
    require_membership(y1.op(), &pair.algebra[0], MEMBERSHIP_TOL, "y₁")?;
    require_membership(y2.op(), &pair.algebra[1], MEMBERSHIP_TOL, "y₂")?;
    let r1 = kappa0(y1)?.rank;
    let r2 = kappa0(y2)?.rank;
    if r1 != r2 {
        return Err(Error::Pair(format!("rank mismatch: {r1} and {r2}")));
    }
    let m = y1.op().fiber();
    let identity = {
        let one = BandedOperator::identity(pair.space.clone(), m);
        let e = QuasiElement::certify_control(one.clone(), QuasiKind::Unitary, y1.eps(), Rat::zero())?;
        let path = HomotopyPath::from_operators(vec![0.0, 1.0], vec![one.clone(), one], QuasiKind::Unitary, y1.eps(), Rat::zero());
        path.map(|path| Conjugator { adjoint: e, path })?
    };
    let mut pool: Vec<&Conjugator> = candidates.iter().collect();
    pool.push(&identity);
    let mut reasons = Vec::new();
    for (i, cand) in pool.into_iter().enumerate().take(budget.max(1)) {
        match try_conjugator(y1, y2, pair, cand, config) {
            Ok((p, bounds)) => {
                return Ok(MiddleExactness::Found { p, bounds, candidate: i });
            }
            Err(e) => reasons.push(e.to_string()),
        }
    }
    Ok(MiddleExactness::Inconclusive {
        tried: reasons.len(),
        reasons,
    })
}

fn try_conjugator(
    y1: &QuasiElement,
    y2: &QuasiElement,
    pair: &ControlledMVPair,
    cand: &Conjugator,
    config: &FactorConfig,
) -> Result<(BandedOperator, MiddleBounds)> {
    let c_adj = cand.adjoint.op();
    let conj = BandedOperator::mul_all(&[&c_adj.adjoint(), y1.op(), c_adj]);
    let gap = conj.sub(y2.op()).norm();
    let eps = y1.eps().max(y2.eps());
    if gap >= eps {
        return Err(Error::ResidualTooLarge {
            which: "‖C y₁ C* − y₂‖",
            value: gap,
            bound: eps,
        });
    }
    let fact = factor_across(
        &cand.adjoint,
        &cand.path,
        &pair.split,
        &pair.side_predicates(cand.adjoint.r()),
        config,
    )?;
    let extra = fact.w1.op().fiber() - y1.op().fiber();
    let z1 = y1.op().pad_zero(extra);
    let z2 = y2.op().pad_zero(extra);
    let (w1, w2) = (fact.w1.op(), fact.w2.op());
    let x1 = BandedOperator::mul_all(&[&w1.adjoint(), &z1, w1]);
    let x2 = BandedOperator::mul_all(&[w2, &z2, &w2.adjoint()]);
    let (p, cia) = pair.cia_project(&x1, &x2)?;
    let eps_measured = gap.max(fact.achieved_bound);
    let ceiling = pair.coercity * cia.x1_minus_x2 + CIA_TOL;
    if cia.z_minus_x2 > ceiling || !cia.in_intersection {
        return Err(Error::ResidualTooLarge {
            which: "‖p − w₂ y₂ w₂*‖",
            value: cia.z_minus_x2,
            bound: ceiling,
        });
    }
    Ok((
        p,
        MiddleBounds {
            conjugation_gap: gap,
            x1_minus_x2: cia.x1_minus_x2,
            p_minus_x1: cia.z_minus_x1,
            p_minus_x2: cia.z_minus_x2,
            eps_measured,
            ceiling,
        },
    ))
}
