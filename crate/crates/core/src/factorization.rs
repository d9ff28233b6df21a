//! Factorization of an almost unitary homotopic to the identity into two
//! factors localized on the two sides of a coercive splitting.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::dense::CMat;
use crate::elementary::{rotation, t_inverse, t_mat, FactorRecord, T_FACTORS};
use crate::error::{Error, Result};
use crate::metric::{format_rat, rat_to_f64, Rat};
use crate::operator::BandedOperator;
use crate::polar::{polar_decompose, PolarOptions, WindowChoice, DEGREE_CAP};
use crate::quasi::{uniform_times, HomotopyPath, QuasiElement, QuasiKind};
use crate::support::{membership, Membership, SupportPredicate};

/// `x = x₁ + x₂` with `x₁` supported on the first side, `x₂` on the second,
/// and `‖xᵢ‖ <= c ‖x‖`.
pub trait CoerciveSplitting {
    fn split(&self, x: &BandedOperator) -> (BandedOperator, BandedOperator);

    fn coercity(&self) -> f64;

    /// `(Q₁, Q₂)` with `Q₁Q₂ = c ⊗ 1` and `Qᵢ − I` on side `i`.
    fn localize_constant(&self, c: &BandedOperator) -> (BandedOperator, BandedOperator);
}

/// `x₁ = χ_S x`, `x₂ = χ_{S^c} x`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowSplit {
    pub rows: Vec<bool>,
}

impl RowSplit {
    pub fn complement(&self) -> Vec<bool> {
        self.rows.iter().map(|b| !b).collect()
    }
}

impl CoerciveSplitting for RowSplit {
    fn split(&self, x: &BandedOperator) -> (BandedOperator, BandedOperator) {
        (x.row_restrict(&self.rows), x.row_restrict(&self.complement()))
    }

    fn coercity(&self) -> f64 {
        1.0
    }

    fn localize_constant(&self, c: &BandedOperator) -> (BandedOperator, BandedOperator) {
        let shift = c.add_identity(-1.0);
        let q1 = shift.row_restrict(&self.rows).add_identity(1.0);
        let q2 = shift.row_restrict(&self.complement()).add_identity(1.0);
        (q1, q2)
    }
}

/// `R(θ) ⊗ I_n` with `R(θ) = [[cos θ, −sin θ], [sin θ, cos θ]]`, so that
/// `θ = π/2` gives `[[0, −I], [I, 0]]`.
fn rotation_scalar(n: usize, theta: f64) -> CMat {
    let (s, c) = theta.sin_cos();
    CMat::from_real(2, 2, &[c, -s, s, c]).kron_identity(n)
}

/// Support predicates the factors are checked against.
#[derive(Clone, Debug)]
pub struct SidePredicates {
    /// Per side, the proof's neighborhood at the stated thickening.
    pub stated: [SupportPredicate; 2],
    /// Per side, the subalgebra of a decomposition pair, when there is one.
    pub algebra: Option<[SupportPredicate; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct NormCheck {
    pub norm: f64,
    pub inverse_norm: f64,
    /// `Π (1 + ‖argument‖)` over the elementary factors.
    pub factor_bound: f64,
    /// `(2c + 1)^p`.
    pub stated_bound: f64,
    pub elementary_factors: usize,
    pub ok: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct P1P2Trace {
    pub steps: usize,
    pub padding: usize,
    pub eps: f64,
    pub bound: f64,
    pub ceiling: f64,
    pub product_vs_s: f64,
    pub factors: Vec<FactorRecord>,
    pub membership: Vec<Membership>,
    pub norms: [NormCheck; 2],
    pub max_argument_norm: f64,
}

#[derive(Clone, Debug)]
pub struct P1P2 {
    pub p1: BandedOperator,
    pub p2: BandedOperator,
    pub p1_inv: BandedOperator,
    pub p2_inv: BandedOperator,
    /// `diag(u, I)` at the padded size.
    pub target: BandedOperator,
    pub trace: P1P2Trace,
    scaled: Scaled,
}

/// Everything needed to rebuild `P₁`, `P₂` with the arguments scaled by `t`.
#[derive(Clone, Debug)]
struct Scaled {
    x1: BandedOperator,
    x2: BandedOperator,
    y1: BandedOperator,
    y2: BandedOperator,
    m: usize,
    k: usize,
    rows: Vec<bool>,
}

impl Scaled {
    fn tilde(&self, a: &BandedOperator) -> BandedOperator {
        let one = BandedOperator::identity(a.space().clone(), self.m);
        BandedOperator::direct_sum(&[&one, a, &one])
    }

    /// `(P₁(t), P₂(t), P₁(t)⁻¹, P₂(t)⁻¹)`.
    fn build(&self, t: f64) -> [BandedOperator; 4] {
        let x1 = self.x1.scale_real(t);
        let x2 = self.x2.scale_real(t);
        let y1 = self.y1.scale_real(t);
        let y2 = self.y2.scale_real(t);
        let n = (self.k + 1) * self.m;
        let space = x1.space().clone();
        let big_u = rotation(&x1);
        let big_u_t = big_u.adjoint();
        let small_u = self.tilde(&rotation(&y1));
        let small_u_t = small_u.adjoint();

        let t_x = t_mat(&x1, &x2);
        let t_x_inv = t_inverse(&x1, &x2);
        let t_neg_inv = t_inverse(&x2.scale_real(-1.0), &x1.scale_real(-1.0));
        let t_neg = t_mat(&x2.scale_real(-1.0), &x1.scale_real(-1.0));
        let t_y = self.tilde(&t_mat(&y1, &y2));
        let t_y_inv = self.tilde(&t_inverse(&y1, &y2));
        let t_ny_inv = self.tilde(&t_inverse(&y2.scale_real(-1.0), &y1.scale_real(-1.0)));
        let t_ny = self.tilde(&t_mat(&y2.scale_real(-1.0), &y1.scale_real(-1.0)));

        let p_t = BandedOperator::from_scalar(
            space.clone(),
            rotation_scalar(n, t * FRAC_PI_2).mul(&CMat::direct_sum(&[
                &CMat::identity(self.m),
                &rotation_scalar(self.k * self.m, t * FRAC_PI_2),
                &CMat::identity(self.m),
            ])),
        );
        let split = RowSplit { rows: self.rows.clone() };
        let (q1, q2) = split.localize_constant(&p_t);
        let (q1_inv, q2_inv) = split.localize_constant(&p_t.adjoint());

        let p1 = BandedOperator::mul_all(&[&t_x, &big_u, &t_y, &big_u_t, &q1]);
        let p1_inv = BandedOperator::mul_all(&[&q1_inv, &big_u, &t_y_inv, &big_u_t, &t_x_inv]);
        let p2 = BandedOperator::mul_all(&[
            &q2, &small_u_t, &t_y_inv, &big_u_t, &t_neg_inv, &big_u, &t_y, &t_ny_inv, &small_u,
        ]);
        let p2_inv = BandedOperator::mul_all(&[
            &small_u_t, &t_ny, &t_y_inv, &big_u_t, &t_neg, &big_u, &t_y, &small_u, &q2_inv,
        ]);
        [p1, p2, p1_inv, p2_inv]
    }
}

/// Elementary factor counts of `P₁` and `P₂`.
pub const P1_FACTORS: usize = 2 * T_FACTORS;
pub const P2_FACTORS: usize = 4 * T_FACTORS;

pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// The proof's neighborhoods: pieces of the two families thickened by `21r`
/// and `35r`, with propagation at most the same.
pub fn stated_predicates(
    space: &crate::metric::FiniteMetricSpace,
    families: [&crate::metric::CoverFamily; 2],
    r: Rat,
) -> [SupportPredicate; 2] {
    let side = |i: usize, mult: i64| {
        let rho = r * crate::metric::rat(mult);
        let pieces = families[i]
            .pieces
            .iter()
            .map(|p| (0..space.len()).filter(|&x| p.iter().any(|&y| space.d(x, y) <= rho)).collect())
            .collect();
        SupportPredicate::pieces(format!("N{} ({}r)", i + 1, mult), space.len(), pieces)
            .and(SupportPredicate::Propagation(rho))
    };
    [side(0, 21), side(1, 35)]
}

fn refs(xs: &[BandedOperator]) -> Vec<&BandedOperator> {
    xs.iter().collect()
}

fn check_path(u: &QuasiElement, path: &HomotopyPath) -> Result<Vec<BandedOperator>> {
    if u.kind() != QuasiKind::Unitary || path.start().kind() != QuasiKind::Unitary {
        return Err(Error::InvalidParameter("factorization needs almost unitaries".into()));
    }
    if path.step_bound() >= u.eps() {
        return Err(Error::HomotopyStep {
            index: 0,
            step: path.step_bound(),
            bound: u.eps(),
        });
    }
    let start_gap = path.start().op().sub(u.op()).norm();
    if start_gap > 1e-12 {
        return Err(Error::InvalidParameter(format!("path starts {start_gap:e} away from u")));
    }
    let end_gap = path.end().op().add_identity(-1.0).norm();
    if end_gap > 1e-12 {
        return Err(Error::InvalidParameter(format!("path ends {end_gap:e} away from the identity")));
    }
    let mut samples: Vec<BandedOperator> = path.samples().iter().map(|s| s.op().clone()).collect();
    let last = samples.len() - 1;
    samples[last] = BandedOperator::identity(u.op().space().clone(), u.op().fiber());
    Ok(samples)
}

/// Builds invertible `P₁`, `P₂` with `‖diag(u, I) − P₁P₂‖ < 13ε`.
pub fn factor_p1p2(
    u: &QuasiElement,
    path: &HomotopyPath,
    split: &RowSplit,
    predicates: &SidePredicates,
) -> Result<P1P2> {
    let samples = check_path(u, path)?;
    let k = samples.len() - 1;
    let m = u.op().fiber();
    let (mut v, mut w) = (Vec::new(), Vec::new());
    for s in &samples {
        let (a, b) = split.split(s);
        v.push(a);
        w.push(b);
    }
    let adj = |xs: &[BandedOperator]| xs.iter().map(BandedOperator::adjoint).collect::<Vec<_>>();
    let v_adj = adj(&v[..k]);
    let w_adj = adj(&w[..k]);
    let scaled = Scaled {
        x1: BandedOperator::direct_sum(&refs(&v)),
        x2: BandedOperator::direct_sum(&refs(&w)),
        y1: BandedOperator::direct_sum(&refs(&v_adj)),
        y2: BandedOperator::direct_sum(&refs(&w_adj)),
        m,
        k,
        rows: split.rows.clone(),
    };
    let [p1, p2, p1_inv, p2_inv] = scaled.build(1.0);
    let padding = 2 * k + 2;
    let target = u.op().pad_identity((padding - 1) * m);

    let product = p1.mul(&p2);
    let bound = target.sub(&product).norm();
    let ceiling = 13.0 * u.eps();

    // S itself, for the record: T T⁻¹ U T̃ T̃⁻¹ Ũ.
    let s_op = {
        let [x1, x2, y1, y2] = [&scaled.x1, &scaled.x2, &scaled.y1, &scaled.y2];
        BandedOperator::mul_all(&[
            &t_mat(x1, x2),
            &t_inverse(&x2.scale_real(-1.0), &x1.scale_real(-1.0)),
            &rotation(x1),
            &scaled.tilde(&t_mat(y1, y2)),
            &scaled.tilde(&t_inverse(&y2.scale_real(-1.0), &y1.scale_real(-1.0))),
            &scaled.tilde(&rotation(y1)),
        ])
    };
    let product_vs_s = product.sub(&s_op).norm();

    let max_argument_norm = [&scaled.x1, &scaled.x2, &scaled.y1, &scaled.y2]
        .iter()
        .map(|a| a.norm())
        .fold(0.0, f64::max);
    let c = split.coercity();
    let norm_check = |p: &BandedOperator, p_inv: &BandedOperator, count: usize| {
        let norm = p.norm();
        let inverse_norm = p_inv.norm();
        let factor_bound = (1.0 + max_argument_norm).powi(count as i32);
        let stated_bound = (2.0 * c + 1.0).powi(count as i32);
        NormCheck {
            norm,
            inverse_norm,
            factor_bound,
            stated_bound,
            elementary_factors: count,
            ok: norm <= factor_bound.min(stated_bound) && inverse_norm <= factor_bound.min(stated_bound),
        }
    };
    let norms = [norm_check(&p1, &p1_inv, P1_FACTORS), norm_check(&p2, &p2_inv, P2_FACTORS)];

    let mut checks = Vec::new();
    for (i, (p, p_inv)) in [(&p1, &p1_inv), (&p2, &p2_inv)].into_iter().enumerate() {
        let mut preds = vec![&predicates.stated[i]];
        if let Some(a) = &predicates.algebra {
            preds.push(&a[i]);
        }
        for pred in preds {
            checks.push(membership(&p.add_identity(-1.0), pred, MEMBERSHIP_TOL));
            checks.push(membership(&p_inv.add_identity(-1.0), pred, MEMBERSHIP_TOL));
        }
    }
    for (i, m) in checks.iter().enumerate() {
        if !m.ok {
            let w = m.worst.clone().expect("violation has a witness");
            return Err(Error::SupportViolation {
                what: format!("P{}{} − I", i / (checks.len() / 2) + 1, if i % 2 == 1 { "⁻¹" } else { "" }),
                predicate: m.predicate.clone(),
                row: w.row,
                col: w.col,
                norm: w.norm,
            });
        }
    }

    let factors = vec![
        FactorRecord::new("T(x1,x2)", &t_mat(&scaled.x1, &scaled.x2), T_FACTORS),
        FactorRecord::new("T~(y1,y2)", &scaled.tilde(&t_mat(&scaled.y1, &scaled.y2)), T_FACTORS),
        FactorRecord::new(
            "T(-x2,-x1)^-1",
            &t_inverse(&scaled.x2.scale_real(-1.0), &scaled.x1.scale_real(-1.0)),
            T_FACTORS,
        ),
        FactorRecord::new(
            "T~(-y2,-y1)^-1",
            &scaled.tilde(&t_inverse(&scaled.y2.scale_real(-1.0), &scaled.y1.scale_real(-1.0))),
            T_FACTORS,
        ),
        FactorRecord::new("P1", &p1, P1_FACTORS),
        FactorRecord::new("P2", &p2, P2_FACTORS),
    ];

    let trace = P1P2Trace {
        steps: k,
        padding,
        eps: u.eps(),
        bound,
        ceiling,
        product_vs_s,
        factors,
        membership: checks,
        norms,
        max_argument_norm,
    };
    Ok(P1P2 {
        p1,
        p2,
        p1_inv,
        p2_inv,
        target,
        trace,
        scaled,
    })
}

impl P1P2 {
    /// `P₁`, `P₂` with every argument scaled by `t`; `t = 0` gives `I`.
    pub fn at(&self, t: f64) -> (BandedOperator, BandedOperator) {
        let [p1, p2, _, _] = self.scaled.build(t);
        (p1, p2)
    }

    pub fn at_with_inverses(&self, t: f64) -> [BandedOperator; 4] {
        self.scaled.build(t)
    }

    pub fn passes(&self) -> bool {
        self.trace.bound < self.trace.ceiling && self.trace.membership.iter().all(|m| m.ok)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FactorConfig {
    /// `w₁w₂` must be within `alpha_ceiling · ε` of `diag(u, I)`; the factors
    /// are certified as unitaries at the same control.
    pub alpha_ceiling: f64,
    /// Samples on each transported homotopy, `0` to skip them.
    pub homotopy_samples: usize,
    /// Accuracy of the polar series relative to `ε`.
    pub polar_eps_ratio: f64,
    pub window: WindowChoice,
}

impl Default for FactorConfig {
    fn default() -> Self {
        Self {
            alpha_ceiling: 40.0,
            homotopy_samples: 5,
            polar_eps_ratio: 1.0,
            window: WindowChoice::Measured,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PolarRecord {
    pub n_bound: f64,
    pub degree: usize,
    pub q_error: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PairTrace {
    pub p1p2: P1P2Trace,
    pub polar: [PolarRecord; 2],
    /// `‖h₁h₂ − I‖`
    pub h_correction: f64,
    pub achieved_bound: f64,
    pub ceiling: f64,
    /// `achieved_bound / ε`
    pub alpha: f64,
    /// `propagation(wᵢ) / r`
    pub propagation_ratio: [f64; 2],
    pub w_residual: [f64; 2],
    pub w_minus_identity: [f64; 2],
    pub membership: Vec<Membership>,
    pub homotopy_max_step: [f64; 2],
    pub propagation: [String; 2],
}

#[derive(Clone, Debug)]
pub struct PairFactorization {
    pub w1: QuasiElement,
    pub w2: QuasiElement,
    /// Matrix size multiple: the factors act on `diag(u, I)` with
    /// `padding · fiber(u)` rows per point.
    pub padding: usize,
    pub achieved_bound: f64,
    /// From `wᵢ` to the identity.
    pub homotopies: Option<[HomotopyPath; 2]>,
    pub trace: PairTrace,
    pub target: BandedOperator,
}

/// Polar parts `w₁` of `P₁` and `w₂` of `P₂` (the latter via `P₂*`), so
/// that `w₁w₂ ≈ diag(u, I)`.
pub fn factor_across(
    u: &QuasiElement,
    path: &HomotopyPath,
    split: &RowSplit,
    predicates: &SidePredicates,
    config: &FactorConfig,
) -> Result<PairFactorization> {
    let pp = factor_p1p2(u, path, split, predicates)?;
    let eps = u.eps();
    let polar_eps = (eps * config.polar_eps_ratio).min(0.2);
    let options = PolarOptions {
        window: config.window,
        degree_cap: DEGREE_CAP,
    };
    let polar_of = |p: &BandedOperator, p_inv: &BandedOperator| {
        let n_bound = p.norm().max(p_inv.norm());
        let r = p.propagation().max(p_inv.propagation()).max(Rat::from_integer(0));
        polar_decompose(p, polar_eps, r, n_bound, Some(p_inv), options)
    };
    let pol1 = polar_of(&pp.p1, &pp.p1_inv)?;
    let pol2 = polar_of(&pp.p2.adjoint(), &pp.p2_inv.adjoint())?;
    let w1_op = pol1.u.op().clone();
    let w2_op = pol2.u.op().adjoint();
    let h_correction = pol1.h.mul(&pol2.h).add_identity(-1.0).norm();
    let achieved_bound = pp.target.sub(&w1_op.mul(&w2_op)).norm();
    let ceiling = config.alpha_ceiling * eps;
    if achieved_bound >= ceiling {
        return Err(Error::ResidualTooLarge {
            which: "‖diag(u, I) − w₁w₂‖",
            value: achieved_bound,
            bound: ceiling,
        });
    }

    let mut checks = Vec::new();
    if let Some(alg) = &predicates.algebra {
        checks.push(membership(&w1_op.add_identity(-1.0), &alg[0], MEMBERSHIP_TOL));
        checks.push(membership(&w2_op.add_identity(-1.0), &alg[1], MEMBERSHIP_TOL));
        for (i, m) in checks.iter().enumerate() {
            if !m.ok {
                let w = m.worst.clone().expect("violation has a witness");
                return Err(Error::SupportViolation {
                    what: format!("w{} − I", i + 1),
                    predicate: m.predicate.clone(),
                    row: w.row,
                    col: w.col,
                    norm: w.norm,
                });
            }
        }
    }

    let r_u = u.r();
    let prop = [w1_op.propagation(), w2_op.propagation()];
    let w1 = QuasiElement::certify_control(w1_op.clone(), QuasiKind::Unitary, ceiling, prop[0])?;
    let w2 = QuasiElement::certify_control(w2_op.clone(), QuasiKind::Unitary, ceiling, prop[1])?;

    let homotopies = if config.homotopy_samples >= 2 {
        let times = uniform_times(config.homotopy_samples);
        let mut ops1 = Vec::new();
        let mut ops2 = Vec::new();
        for &t in times.iter().rev() {
            if t == 1.0 {
                ops1.push(w1_op.clone());
                ops2.push(w2_op.clone());
                continue;
            }
            if t == 0.0 {
                ops1.push(BandedOperator::identity(w1_op.space().clone(), w1_op.fiber()));
                ops2.push(BandedOperator::identity(w2_op.space().clone(), w2_op.fiber()));
                continue;
            }
            let [a1, a2, a1_inv, a2_inv] = pp.at_with_inverses(t);
            ops1.push(polar_of(&a1, &a1_inv)?.u.op().clone());
            ops2.push(polar_of(&a2.adjoint(), &a2_inv.adjoint())?.u.op().adjoint());
        }
        let r1 = ops1.iter().map(|o| o.propagation()).max().unwrap();
        let r2 = ops2.iter().map(|o| o.propagation()).max().unwrap();
        let h1 = HomotopyPath::from_operators(times.clone(), ops1, QuasiKind::Unitary, ceiling, r1)?;
        let h2 = HomotopyPath::from_operators(times, ops2, QuasiKind::Unitary, ceiling, r2)?;
        if let Some(alg) = &predicates.algebra {
            for (i, h) in [&h1, &h2].into_iter().enumerate() {
                for s in h.samples() {
                    crate::support::require_membership(
                        &s.op().add_identity(-1.0),
                        &alg[i],
                        MEMBERSHIP_TOL,
                        &format!("w{} homotopy sample", i + 1),
                    )?;
                }
            }
        }
        Some([h1, h2])
    } else {
        None
    };

    let ratio = |p: Rat| if r_u == Rat::from_integer(0) { 0.0 } else { rat_to_f64(p / r_u) };
    let trace = PairTrace {
        polar: [
            PolarRecord {
                n_bound: pol1.n_bound,
                degree: pol1.q.degree(),
                q_error: pol1.measured.q_error,
                residual: pol1.measured.unitary_residual,
            },
            PolarRecord {
                n_bound: pol2.n_bound,
                degree: pol2.q.degree(),
                q_error: pol2.measured.q_error,
                residual: pol2.measured.unitary_residual,
            },
        ],
        h_correction,
        achieved_bound,
        ceiling,
        alpha: achieved_bound / eps,
        propagation_ratio: [ratio(prop[0]), ratio(prop[1])],
        w_residual: [w1.residual(), w2.residual()],
        w_minus_identity: [w1_op.add_identity(-1.0).norm(), w2_op.add_identity(-1.0).norm()],
        membership: checks,
        homotopy_max_step: homotopies
            .as_ref()
            .map_or([0.0, 0.0], |[a, b]| [a.max_step(), b.max_step()]),
        propagation: [format_rat(&prop[0]), format_rat(&prop[1])],
        p1p2: pp.trace.clone(),
    };
    Ok(PairFactorization {
        w1,
        w2,
        padding: pp.trace.padding,
        achieved_bound,
        homotopies,
        trace,
        target: pp.target,
    })
}
