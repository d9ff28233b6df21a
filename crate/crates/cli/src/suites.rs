use std::collections::BTreeMap;
use std::sync::Arc;

use qkt_core::elementary::witness;
use qkt_core::instances::{
    factorizable_unitary, instance_rng, random_banded, random_invertible, random_projection, rotation_unitary, witness_unitary,
    Invertible, UnitaryInstance, UnitarySpec,
};
use qkt_core::metric::{parse_rat, rat, rat_to_f64};
use qkt_core::mv::{connect_boundaries, pad_unitary, BoundaryConfig, CIA_TOL};
use qkt_core::polar::{polar_decompose, PolarOptions, PolarResult};
use qkt_core::quasi::{kappa0, uniform_times};
use qkt_core::{
    annular_two_coloring, boundary_odd, factor_p1p2, membership, verify_cover, BandedOperator, ControlledMVPair,
    FiniteMetricSpace, HomotopyPath, QuasiElement, QuasiKind, SupportPredicate,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Geometry, Suite};
use crate::CliResult;

/// Ceiling on `‖κ₀(p)² − κ₀(p)‖`.
pub const IDEMPOTENCY_TOL: f64 = 1e-12;
/// Ceiling on `‖v₁v₂ − u‖` for factorizable unitaries.
pub const FACTOR_TOL: f64 = 1e-12;

/// Everything needed to regenerate and re-run one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub suite: Suite,
    pub geometry: Geometry,
    pub eps: f64,
    pub seed: u64,
    pub index: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl InstanceSpec {
    pub fn rng(&self) -> impl Rng {
        instance_rng(self.seed, self.suite.stream() | self.index)
    }

    fn unitary_spec(&self, default_steps: usize) -> UnitarySpec {
        let mut spec = UnitarySpec::new(1, self.eps, self.geometry.r);
        spec.steps = self.steps.unwrap_or(default_steps);
        if let Some(k) = self.rotations {
            spec.rotations = k;
        }
        spec
    }
}

/// One measured quantity against its ceiling; flags carry `0` when they
/// hold and `1` otherwise, against a ceiling of `0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub ceiling: f64,
    pub strict: bool,
    pub pass: bool,
}

impl Check {
    pub fn below(name: &str, value: f64, ceiling: f64) -> Self {
        Self {
            name: name.into(),
            value,
            ceiling,
            strict: true,
            pass: value < ceiling,
        }
    }

    pub fn at_most(name: &str, value: f64, ceiling: f64) -> Self {
        Self {
            name: name.into(),
            value,
            ceiling,
            strict: false,
            pass: value <= ceiling,
        }
    }

    pub fn flag(name: &str, holds: bool) -> Self {
        Self::at_most(name, if holds { 0.0 } else { 1.0 }, 0.0)
    }

    /// `value / ceiling`, for checks with a positive ceiling.
    pub fn ratio(&self) -> Option<f64> {
        (self.ceiling > 0.0).then(|| self.value / self.ceiling)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub index: u64,
    pub space: String,
    pub eps: f64,
    pub checks: Vec<Check>,
    /// Further measurements that carry no verdict.
    pub extra: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Default)]
struct Outcome {
    checks: Vec<Check>,
    extra: BTreeMap<String, f64>,
}

impl Outcome {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn note(&mut self, key: &str, value: f64) {
        self.extra.insert(key.into(), value);
    }
}

/// Runs one instance. Errors from the engine become failed results.
pub fn run_instance(spec: &InstanceSpec) -> InstanceResult {
    let outcome = match spec.suite {
        Suite::Witness => witness_case(spec),
        Suite::Kappa => kappa_case(spec),
        Suite::Polar => polar_case(spec),
        Suite::Factor => factor_case(spec),
        Suite::Cia => cia_case(spec),
        Suite::Boundary => boundary_case(spec),
        Suite::Trivial => trivial_case(spec),
        Suite::Cover => cover_case(spec),
    };
    let space = spec.geometry.space.to_string();
    match outcome {
        Ok(o) => InstanceResult {
            index: spec.index,
            space,
            eps: spec.eps,
            pass: !o.checks.is_empty() && o.checks.iter().all(|c| c.pass),
            checks: o.checks,
            extra: o.extra,
            error: None,
        },
        Err(e) => InstanceResult {
            index: spec.index,
            space,
            eps: spec.eps,
            checks: Vec::new(),
            extra: BTreeMap::new(),
            error: Some(e.to_string()),
            pass: false,
        },
    }
}

pub fn witness_instance(spec: &InstanceSpec) -> CliResult<QuasiElement> {
    let space = spec.geometry.build_space()?;
    Ok(witness_unitary(&space, 1, spec.eps, spec.geometry.r, &mut spec.rng())?)
}

fn witness_case(spec: &InstanceSpec) -> CliResult<Outcome> {
    let u = witness_instance(spec)?;
    let d = BandedOperator::direct_sum(&[u.op(), &u.op().adjoint()]);
    let gap = witness(u.op()).sub(&d).norm();
    let mut o = Outcome::default();
    o.check(Check::below("witness_gap", gap, 3.0 * spec.eps));
    o.note("u_residual", u.residual());
    o.note("gap_over_eps", gap / spec.eps);
    Ok(o)
}

pub fn kappa_instance(spec: &InstanceSpec) -> CliResult<QuasiElement> {
    let space = spec.geometry.build_space()?;
    Ok(random_projection(&space, 2, 1, spec.eps, spec.geometry.r, 4, &mut spec.rng())?)
}

fn kappa_case(spec: &InstanceSpec) -> CliResult<Outcome> {
    let p = kappa_instance(spec)?;
    let k = kappa0(&p)?;
    let kk = k.projection.mul(&k.projection);
    let mut o = Outcome::default();
    o.check(Check::below("kappa0_distance", k.distance, 2.0 * spec.eps));
    o.check(Check::below("idempotency", kk.sub(&k.projection).norm(), IDEMPOTENCY_TOL));
    o.note("p_residual", p.residual());
    o.note("rank", k.rank as f64);
    Ok(o)
}

pub fn polar_instance(spec: &InstanceSpec) -> CliResult<(Invertible, PolarResult)> {
    let space = spec.geometry.build_space()?;
    let inv = random_invertible(&space, 1, spec.eps, spec.geometry.r, &mut spec.rng())?;
    let res = polar_decompose(&inv.x, spec.eps, inv.r, 2.0, Some(&inv.y), PolarOptions::default())?;
    Ok((inv, res))
}

fn polar_case(spec: &InstanceSpec) -> CliResult<Outcome> {
    let (inv, res) = polar_instance(spec)?;
    let limit = inv.r * rat(2 * res.q.degree() as i64 + 1);
    let mut o = Outcome::default();
    o.check(Check::below("q_error", res.measured.q_error, spec.eps));
    o.check(Check::below("x_minus_uh", res.measured.x_minus_uh, res.bounds.x_minus_uh));
    o.check(Check::at_most(
        "propagation",
        rat_to_f64(res.u.op().propagation()),
        rat_to_f64(limit),
    ));
    o.note("degree", res.q.degree() as f64);
    o.note("u_residual", res.u.residual());
    Ok(o)
}

pub fn rotation_instance(spec: &InstanceSpec, pair: &ControlledMVPair, default_steps: usize) -> CliResult<UnitaryInstance> {
    if spec.rotations == Some(0) {
        return identity_instance(pair.space(), spec.eps, spec.geometry.r, spec.steps.unwrap_or(default_steps));
    }
    Ok(rotation_unitary(pair.space(), &spec.unitary_spec(default_steps), None, &mut spec.rng())?)
}

fn identity_instance(space: &Arc<FiniteMetricSpace>, eps: f64, r: qkt_core::Rat, steps: usize) -> CliResult<UnitaryInstance> {
    let one = BandedOperator::identity(space.clone(), 1);
    let zero = BandedOperator::zero(space.clone(), 1);
    let n = steps.max(1) + 1;
    Ok(UnitaryInstance {
        u: QuasiElement::certify(one.clone(), QuasiKind::Unitary, eps, r)?,
        path: HomotopyPath::from_operators(uniform_times(n), vec![one; n], QuasiKind::Unitary, eps, r)?,
        clusters: Vec::new(),
        thetas: Vec::new(),
        delta: 0.0,
        generator: zero.clone(),
        perturbation: zero,
    })
}

fn factor_case(spec: &InstanceSpec) -> CliResult<Outcome> {
    let pair = spec.geometry.build_pair()?;
    let inst = rotation_instance(spec, &pair, 8)?;
    let f = factor_p1p2(&inst.u, &inst.path, pair.splitting(), &pair.side_predicates(spec.geometry.r))?;
    let mut o = Outcome::default();
    o.check(Check::below("p1p2_bound", f.trace.bound, 13.0 * spec.eps));
    o.check(Check::flag("membership", f.trace.membership.iter().all(|m| m.ok)));
    o.note("bound_over_eps", f.trace.bound / spec.eps);
    o.note("steps", f.trace.steps as f64);
    Ok(o)
}

fn supported(pair: &ControlledMVPair, pred: &SupportPredicate, rng: &mut impl Rng, norm: f64) -> BandedOperator {
    let space = pair.space().clone();
    let x = random_banded(&space, 1, pair.s(), 0.5, 1.0, rng).filter_blocks(|a, b| pred.contains(&space, a, b));
    let n = x.norm();
    if n == 0.0 {
        x
    } else {
        x.scale_real(norm / n)
    }
}

fn cia_case(spec: &InstanceSpec) -> CliResult<Outcome> {
    let pair = spec.geometry.build_pair()?;
    let mut rng = spec.rng();
    let common = supported(&pair, pair.intersection(), &mut rng, 1.0);
    let d1 = rng.random_range(0.0..0.5);
    let d2 = rng.random_range(0.0..0.5);
    let x1 = common.add(&supported(&pair, pair.algebra(0), &mut rng, d1));
    let x2 = common.add(&supported(&pair, pair.algebra(1), &mut rng, d2));
    let (z, res) = pair.cia_project(&x1, &x2)?;
    let exact = membership(&z, pair.intersection(), 0.0).ok;

    let x = random_banded(pair.space(), 1, pair.r(), 0.6, 1.0, &mut rng).add_identity(rng.random_range(-1.0..1.0));
    let (y1, y2) = pair.decompose_element(&x)?;
    let xn = x.norm();
    let split = y1.norm().max(y2.norm());

    let mut o = Outcome::default();
    o.check(Check::at_most("psi_minus_x2", res.z_minus_x2, res.x1_minus_x2 + CIA_TOL));
    o.check(Check::flag("in_intersection", exact));
    o.check(Check::at_most(
        "psi_minus_x1",
        res.z_minus_x1,
        (pair.coercity() + 1.0) * res.x1_minus_x2 + CIA_TOL,
    ));
    o.check(Check::at_most("splitting", split, pair.coercity() * xn + CIA_TOL));
    o.note("x1_minus_x2", res.x1_minus_x2);
    Ok(o)
}

fn boundary_case(spec: &InstanceSpec) -> CliResult<Outcome> {
    let pair = spec.geometry.build_pair()?;
    let steps = spec.steps.unwrap_or(4);
    let inst = rotation_instance(spec, &pair, steps)?;
    let cfg = BoundaryConfig::default();
    let a = boundary_odd(&inst.u, &inst.path, &pair, &cfg)?;
    let b = boundary_odd(&inst.u, &inst.resample(steps + 2)?, &pair, &cfg)?;
    let link = connect_boundaries(&a, &b, 4)?;
    let (padded, padded_path) = pad_unitary(&inst.u, &inst.path, 1)?;
    let c = boundary_odd(&padded, &padded_path, &pair, &cfg)?;

    let norms = &a.provenance.norms;
    let mut o = Outcome::default();
    o.check(Check::flag("rank_agreement", a.rank_class == b.rank_class && link.rank == link.rank_other));
    o.check(Check::below("connecting_step", link.path.max_step(), a.q.eps().max(b.q.eps())));
    o.check(Check::flag("padding_invariance", c.rank_class == a.rank_class));
    o.check(Check::below("q_residual", norms.q_residual, norms.q_eps));
    o.note("rank_class", a.rank_class as f64);
    o.note("lambda", norms.lambda);
    o.note("alpha", a.provenance.factorization.alpha);
    o.note("propagation_ratio", norms.propagation_ratio);
    o.note("connecting_samples", link.path.len() as f64);
    Ok(o)
}

/// Points of the thickened pieces of each family.
pub fn side_sets(pair: &ControlledMVPair) -> [Vec<bool>; 2] {
    let n = pair.space().len();
    [0, 1].map(|i| {
        let mut mark = vec![false; n];
        for piece in pair.algebra(i).piece_list().unwrap_or(&[]) {
            for &x in piece {
                mark[x] = true;
            }
        }
        mark
    })
}

fn trivial_case(spec: &InstanceSpec) -> CliResult<Outcome> {
    let pair = spec.geometry.build_pair()?;
    let sides = side_sets(&pair);
    let (inst, [v1, v2]) = factorizable_unitary(pair.space(), &spec.unitary_spec(6), [&sides[0], &sides[1]], &mut spec.rng())?;
    let b = boundary_odd(&inst.u, &inst.path, &pair, &BoundaryConfig::default())?;
    let mut o = Outcome::default();
    o.check(Check::below("product_gap", v1.mul(&v2).sub(inst.u.op()).norm(), FACTOR_TOL));
    o.check(Check::flag("rank_class_zero", b.rank_class == 0));
    o.note("rank_class", b.rank_class as f64);
    o.note("lambda", b.provenance.norms.lambda);
    Ok(o)
}

fn cover_case(spec: &InstanceSpec) -> CliResult<Outcome> {
    let g = &spec.geometry;
    let space = g.build_space()?;
    let big_r = g.big_r()?;
    let families = annular_two_coloring(&space, 0, big_r)?;
    let mut o = Outcome::default();
    match verify_cover(&space, &families, g.r) {
        Ok(cert) => {
            o.check(Check::flag("cover", true));
            for (i, fam) in cert.families.iter().enumerate() {
                o.note(&format!("pieces_{}", i + 1), fam.pieces as f64);
                o.note(&format!("max_diameter_{}", i + 1), rat_to_f64(parse_rat(&fam.max_diameter)?));
                if let Some(gap) = &fam.min_gap {
                    o.note(&format!("min_gap_{}", i + 1), rat_to_f64(parse_rat(gap)?));
                }
            }
        }
        Err(_) => o.check(Check::flag("cover", false)),
    }
    Ok(o)
}
