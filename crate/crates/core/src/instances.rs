//! Seeded instance generators. Every instance draws from a ChaCha8 stream
//! selected by `(seed, index)`, so instances are reproducible one by one.
//!
//! Almost unitaries are products of rotations `exp(iθH)` with `H` supported
//! on disjoint clusters of diameter `<= r`, plus a small perturbation on the
//! same clusters; scaling `θ` and the perturbation to zero gives the path.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::{CMat, C64};
use crate::error::{Error, Result};
use crate::eigen;
use crate::metric::{FiniteMetricSpace, Rat};
use crate::operator::{dense_norm, BandedOperator};
use crate::quasi::{residual, uniform_times, HomotopyPath, QuasiElement, QuasiKind};

pub fn instance_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn random_cmat(rng: &mut impl Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Random Hermitian matrix of spectral norm 1.
pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> CMat {
    let a = random_cmat(rng, n, n);
    let h = a.add(&a.adjoint());
    let norm = dense_norm(&h);
    h.scale(C64::new(1.0 / norm, 0.0))
}

/// Disjoint clusters of diameter `<= r` and at most `max_size` points,
/// grown greedily from a shuffled order. Only points with `allowed` set
/// are used.
pub fn clusters(space: &FiniteMetricSpace, r: Rat, max_size: usize, allowed: Option<&[bool]>, rng: &mut impl Rng) -> Vec<Vec<usize>> {
    let n = space.len();
    let mut order: Vec<usize> = (0..n).filter(|&x| allowed.is_none_or(|a| a[x])).collect();
    order.shuffle(rng);
    let mut used = vec![false; n];
    let mut out = Vec::new();
    for &x in &order {
        if used[x] {
            continue;
        }
        used[x] = true;
        let mut c = vec![x];
        for &y in &order {
            if c.len() >= max_size {
                break;
            }
            if !used[y] && c.iter().all(|&z| space.d(y, z) <= r) {
                used[y] = true;
                c.push(y);
            }
        }
        c.sort_unstable();
        out.push(c);
    }
    out
}

/// Operator with a random `dense` compression on `points` and zero scalar part.
fn on_points(space: &Arc<FiniteMetricSpace>, fiber: usize, points: &[usize], dense: &CMat) -> BandedOperator {
    let mut op = BandedOperator::zero(space.clone(), fiber);
    op.set_dense_on(points, dense);
    op
}

/// Random operator with every block inside the `r`-band, scaled to norm `norm`.
pub fn random_banded(space: &Arc<FiniteMetricSpace>, fiber: usize, r: Rat, density: f64, norm: f64, rng: &mut impl Rng) -> BandedOperator {
    let n = space.len();
    let mut blocks = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if space.d(x, y) <= r && (x == y || rng.random::<f64>() < density) {
                blocks.push(((x, y), random_cmat(rng, fiber, fiber)));
            }
        }
    }
    let op = BandedOperator::from_blocks(space.clone(), CMat::zeros(fiber, fiber), blocks).expect("blocks are valid");
    let current = op.norm();
    if current == 0.0 {
        op
    } else {
        op.scale_real(norm / current)
    }
}

#[derive(Clone, Debug)]
pub struct UnitarySpec {
    pub fiber: usize,
    pub eps: f64,
    pub r: Rat,
    pub rotations: usize,
    pub cluster_size: usize,
    /// Path samples minus one.
    pub steps: usize,
    /// Largest rotation angle; by default chosen so path steps stay below `ε`.
    pub theta_max: Option<f64>,
    /// Target residual as a fraction of `ε`; `None` for an exact unitary.
    pub residual_fraction: Option<(f64, f64)>,
}

impl UnitarySpec {
    pub fn new(fiber: usize, eps: f64, r: Rat) -> Self {
        Self {
            fiber,
            eps,
            r,
            rotations: 3,
            cluster_size: 3,
            steps: 8,
            theta_max: None,
            residual_fraction: Some((0.3, 0.9)),
        }
    }
}

#[derive(Clone, Debug)]
pub struct UnitaryInstance {
    pub u: QuasiElement,
    /// From `u` to the identity.
    pub path: HomotopyPath,
    pub clusters: Vec<Vec<usize>>,
    pub thetas: Vec<f64>,
    pub delta: f64,
    pub generator: BandedOperator,
    pub perturbation: BandedOperator,
}

/// A certified `(ε, r)`-unitary with a path to the identity; rotation
/// clusters are drawn from `allowed` points.
pub fn rotation_unitary(
    space: &Arc<FiniteMetricSpace>,
    spec: &UnitarySpec,
    allowed: Option<&[bool]>,
    rng: &mut impl Rng,
) -> Result<UnitaryInstance> {
    let m = spec.fiber;
    let pool = clusters(space, spec.r, spec.cluster_size, allowed, rng);
    let chosen: Vec<Vec<usize>> = pool.into_iter().filter(|c| c.len() > 1 || spec.cluster_size == 1).take(spec.rotations).collect();
    let steps = spec.steps.max(1);
    let step_budget = 0.85 * spec.eps * steps as f64;
    let theta_max = spec.theta_max.unwrap_or(step_budget * 0.8);

    let mut generator = BandedOperator::zero(space.clone(), m);
    let mut thetas = Vec::new();
    for c in &chosen {
        let theta = theta_max * rng.random_range(0.4..1.0);
        let h = random_hermitian(rng, c.len() * m).scale(C64::new(theta, 0.0));
        generator = generator.add(&on_points(space, m, c, &h));
        thetas.push(theta);
    }
    let mut perturbation = BandedOperator::zero(space.clone(), m);
    for c in &chosen {
        perturbation = perturbation.add(&on_points(space, m, c, &random_cmat(rng, c.len() * m, c.len() * m)));
    }
    let p_norm = perturbation.norm();
    if p_norm > 0.0 {
        perturbation = perturbation.scale_real(1.0 / p_norm);
    }
    let base = generator.exp_i(1.0);

    let mut delta = 0.0;
    if let Some((lo, hi)) = spec.residual_fraction {
        if p_norm > 0.0 {
            let target = spec.eps * rng.random_range(lo..hi);
            delta = target / 2.0;
            for _ in 0..4 {
                let res = residual(&base.add(&perturbation.scale_real(delta)), QuasiKind::Unitary);
                if res <= 0.0 {
                    break;
                }
                delta *= target / res;
            }
            while residual(&base.add(&perturbation.scale_real(delta)), QuasiKind::Unitary) >= 0.95 * spec.eps {
                delta *= 0.5;
            }
        }
    }

    let path = rotation_path(&generator, &perturbation, delta, steps, spec.eps, spec.r)?;
    let u = path.start().clone();
    Ok(UnitaryInstance {
        u,
        path,
        clusters: chosen,
        thetas,
        delta,
        generator,
        perturbation,
    })
}

/// `t ↦ exp(i(1 − t)H) + (1 − t)δG` at `steps + 1` uniform times.
fn rotation_path(
    generator: &BandedOperator,
    perturbation: &BandedOperator,
    delta: f64,
    steps: usize,
    eps: f64,
    r: Rat,
) -> Result<HomotopyPath> {
    let times = uniform_times(steps + 1);
    let mut ops = Vec::new();
    for &t in &times {
        if t == 1.0 {
            ops.push(BandedOperator::identity(generator.space().clone(), generator.fiber()));
            continue;
        }
        let mut op = generator.exp_i(1.0 - t).add(&perturbation.scale_real((1.0 - t) * delta));
        op.prune();
        ops.push(op);
    }
    QuasiElement::certify(ops[0].clone(), QuasiKind::Unitary, eps, r)?;
    let path = HomotopyPath::from_operators(times, ops, QuasiKind::Unitary, eps, r)?;
    if path.step_bound() >= eps {
        return Err(Error::HomotopyStep {
            index: 0,
            step: path.max_step(),
            bound: eps,
        });
    }
    Ok(path)
}

impl UnitaryInstance {
    /// The same path sampled at `steps + 1` points.
    pub fn resample(&self, steps: usize) -> Result<HomotopyPath> {
        rotation_path(&self.generator, &self.perturbation, self.delta, steps.max(1), self.u.eps(), self.u.r())
    }
}

/// `v₁v₂` with `vᵢ` rotating inside the `s`-thickened pieces of family `i`;
/// the two sides use disjoint clusters.
pub fn factorizable_unitary(
    space: &Arc<FiniteMetricSpace>,
    spec: &UnitarySpec,
    sides: [&[bool]; 2],
    rng: &mut impl Rng,
) -> Result<(UnitaryInstance, [BandedOperator; 2])> {
    let mut taken = vec![false; space.len()];
    let mut factors = Vec::new();
    let mut generators = Vec::new();
    for side in sides {
        let allowed: Vec<bool> = side.iter().zip(&taken).map(|(&a, &t)| a && !t).collect();
        let inst = rotation_unitary(
            space,
            &UnitarySpec {
                residual_fraction: None,
                theta_max: Some(spec.theta_max.unwrap_or(0.85 * spec.eps * spec.steps as f64 * 0.4)),
                ..spec.clone()
            },
            Some(&allowed),
            rng,
        )?;
        for c in &inst.clusters {
            for &x in c {
                taken[x] = true;
            }
        }
        factors.push(inst.u.op().clone());
        generators.push(inst.generator);
    }
    let generator = generators[0].add(&generators[1]);
    let steps = spec.steps.max(1);
    let times = uniform_times(steps + 1);
    let ops: Vec<BandedOperator> = times
        .iter()
        .map(|&t| {
            if t == 1.0 {
                BandedOperator::identity(space.clone(), spec.fiber)
            } else {
                generators[0].exp_i(1.0 - t).mul(&generators[1].exp_i(1.0 - t))
            }
        })
        .collect();
    let u = QuasiElement::certify(ops[0].clone(), QuasiKind::Unitary, spec.eps, spec.r)?;
    let path = HomotopyPath::from_operators(times, ops, QuasiKind::Unitary, spec.eps, spec.r)?;
    let [v1, v2]: [BandedOperator; 2] = factors.try_into().expect("two sides");
    Ok((
        UnitaryInstance {
            u,
            path,
            clusters: Vec::new(),
            thetas: Vec::new(),
            delta: 0.0,
            generator,
            perturbation: BandedOperator::zero(space.clone(), spec.fiber),
        },
        [v1, v2],
    ))
}

/// Largest eigenvalue offset `δ` from `0` or `1`, in either direction, with
/// residual below `ε`: `δ + δ² < ε` iff `δ < (√(1 + 4ε) − 1)/2`.
pub fn projection_offset_limit(eps: f64) -> f64 {
    ((1.0 + 4.0 * eps).sqrt() - 1.0) / 2.0
}

/// `W diag(μ) W*` on random clusters with every `μ` within an admissible
/// offset of `0` or `1`, and scalar part `diag(I_k, 0)`.
pub fn random_projection(
    space: &Arc<FiniteMetricSpace>,
    fiber: usize,
    k: usize,
    eps: f64,
    r: Rat,
    count: usize,
    rng: &mut impl Rng,
) -> Result<QuasiElement> {
    let limit = projection_offset_limit(eps);
    let scalar = CMat::corner_projection(fiber, k);
    let mut op = BandedOperator::from_scalar(space.clone(), scalar);
    for c in clusters(space, r, 3, None, rng).into_iter().take(count) {
        let n = c.len() * fiber;
        let w = eigen::eigen(&random_hermitian(rng, n), true).vectors.expect("vectors requested");
        let mu: Vec<C64> = (0..n)
            .map(|_| {
                let off = limit * rng.random_range(0.05..0.95) * if rng.random::<bool>() { 1.0 } else { -1.0 };
                let base = if rng.random::<bool>() { 1.0 } else { 0.0 };
                C64::new(base + off, 0.0)
            })
            .collect();
        let dense = w.mul(&CMat::diagonal(&mu)).mul(&w.adjoint());
        let dense = dense.add(&dense.adjoint()).scale(C64::new(0.5, 0.0));
        op.set_dense_on(&c, &dense);
    }
    op.prune();
    QuasiElement::certify(op, QuasiKind::Projection, eps, r)
}

#[derive(Clone, Debug)]
pub struct Invertible {
    pub x: BandedOperator,
    pub y: BandedOperator,
    pub r: Rat,
}

/// `x = V D (I + G)`, `y = (I − G) D⁻¹ V*` with `D ∈ [0.7, 1.6]` and
/// `‖G‖` small enough that `x` is an `ε-r-2`-invertible.
pub fn random_invertible(space: &Arc<FiniteMetricSpace>, fiber: usize, eps: f64, r: Rat, rng: &mut impl Rng) -> Result<Invertible> {
    let mut spec = UnitarySpec::new(fiber, 0.2, r);
    spec.theta_max = Some(1.5);
    spec.residual_fraction = None;
    spec.rotations = space.len();
    let v = rotation_unitary(space, &spec, None, rng)?.u.into_op();
    let n = space.len();
    let d_entries: Vec<f64> = (0..n * fiber).map(|_| rng.random_range(0.7..1.6)).collect();
    let diag = |inv: bool| {
        let blocks: Vec<((usize, usize), CMat)> = (0..n)
            .map(|x| {
                let e: Vec<C64> = (0..fiber)
                    .map(|j| {
                        let d = d_entries[x * fiber + j];
                        C64::new(if inv { 1.0 / d } else { d }, 0.0)
                    })
                    .collect();
                ((x, x), CMat::diagonal(&e))
            })
            .collect();
        BandedOperator::from_blocks(space.clone(), CMat::zeros(fiber, fiber), blocks).expect("diagonal blocks")
    };
    let g_norm = (0.95 * (eps * 0.7 / 1.6).sqrt()).min(0.14);
    let g = random_banded(space, fiber, r, 0.6, g_norm, rng);
    let x = BandedOperator::mul_all(&[&v, &diag(false), &g.add_identity(1.0)]);
    let y = BandedOperator::mul_all(&[&g.scale_real(-1.0).add_identity(1.0), &diag(true), &v.adjoint()]);
    let r_all = x.propagation().max(y.propagation());
    Ok(Invertible { x, y, r: r_all })
}

/// A certified `(ε, r)`-unitary for witness checks: rotations everywhere
/// with angles up to `π`, perturbed to a residual in `[0.3ε, 0.9ε)`.
pub fn witness_unitary(space: &Arc<FiniteMetricSpace>, fiber: usize, eps: f64, r: Rat, rng: &mut impl Rng) -> Result<QuasiElement> {
    let m = fiber;
    let pool = clusters(space, r, 3, None, rng);
    let mut generator = BandedOperator::zero(space.clone(), m);
    let mut perturbation = BandedOperator::zero(space.clone(), m);
    for c in &pool {
        let theta = std::f64::consts::PI * rng.random_range(0.1..1.0);
        let h = random_hermitian(rng, c.len() * m).scale(C64::new(theta, 0.0));
        generator = generator.add(&on_points(space, m, c, &h));
        perturbation = perturbation.add(&on_points(space, m, c, &random_cmat(rng, c.len() * m, c.len() * m)));
    }
    perturbation = perturbation.scale_real(1.0 / perturbation.norm());
    let base = generator.exp_i(1.0);
    let target = eps * rng.random_range(0.3..0.9);
    let mut delta = target / 2.0;
    for _ in 0..4 {
        let res = residual(&base.add(&perturbation.scale_real(delta)), QuasiKind::Unitary);
        delta *= target / res;
    }
    while residual(&base.add(&perturbation.scale_real(delta)), QuasiKind::Unitary) >= 0.95 * eps {
        delta *= 0.5;
    }
    let mut op = base.add(&perturbation.scale_real(delta));
    op.prune();
    QuasiElement::certify(op, QuasiKind::Unitary, eps, r)
}
