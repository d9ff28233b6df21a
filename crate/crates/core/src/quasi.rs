//! Almost projections and almost unitaries with certified control `(ε, r)`,
//! homotopies between them, and their rank invariants.

use serde::{Deserialize, Serialize};

use crate::dense::{CMat, C64};
use crate::error::{Error, Result};
use crate::eigen;
use crate::metric::{rat_string, Rat};
use crate::operator::{BandedOperator, OperatorData};

pub const SELF_ADJOINT_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuasiKind {
    Projection,
    Unitary,
}

/// `‖p² − p‖`, or `max(‖u*u − 1‖, ‖uu* − 1‖)`.
pub fn residual(op: &BandedOperator, kind: QuasiKind) -> f64 {
    match kind {
        QuasiKind::Projection => op.mul(op).sub(op).norm(),
        QuasiKind::Unitary => {
            let adj = op.adjoint();
            let a = adj.mul(op).add_identity(-1.0).norm();
            let b = op.mul(&adj).add_identity(-1.0).norm();
            a.max(b)
        }
    }
}

#[derive(Clone, Debug)]
pub struct QuasiElement {
    op: BandedOperator,
    kind: QuasiKind,
    eps: f64,
    r: Rat,
    residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct QuasiData {
    pub kind: QuasiKind,
    pub eps: f64,
    #[serde(with = "rat_string")]
    pub r: Rat,
    pub residual: f64,
    pub operator: OperatorData,
}

impl QuasiElement {
    /// Certifies `op` as an `ε-r` projection or unitary, `ε ∈ (0, 1/4)`.
    pub fn certify(op: BandedOperator, kind: QuasiKind, eps: f64, r: Rat) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(Error::EpsOutOfRange { eps, range: "(0, 1/4)" });
        }
        Self::certify_control(op, kind, eps, r)
    }

    /// Like [`certify`](Self::certify) but accepts any positive `ε`. Derived
    /// controls such as `5ε` may leave `(0, 1/4)`; such elements are valid
    /// certificates but not admissible inputs for `κ₀`.
    pub fn certify_control(op: BandedOperator, kind: QuasiKind, eps: f64, r: Rat) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::EpsOutOfRange { eps, range: "(0, ∞)" });
        }
        let prop = op.propagation();
        if prop > r {
            return Err(Error::PropagationExceeded { propagation: prop, limit: r });
        }
        if kind == QuasiKind::Projection {
            let defect = op.hermitian_defect();
            if defect > SELF_ADJOINT_TOL {
                return Err(Error::NotSelfAdjoint { defect });
            }
        }
        let res = residual(&op, kind);
        if res >= eps {
            return Err(Error::ResidualTooLarge {
                which: match kind {
                    QuasiKind::Projection => "‖p² − p‖",
                    QuasiKind::Unitary => "max(‖u*u − 1‖, ‖uu* − 1‖)",
                },
                value: res,
                bound: eps,
            });
        }
        Ok(Self {
            op,
            kind,
            eps,
            r,
            residual: res,
        })
    }

    pub fn op(&self) -> &BandedOperator {
        &self.op
    }

    pub fn into_op(self) -> BandedOperator {
        self.op
    }

    pub fn kind(&self) -> QuasiKind {
        self.kind
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn r(&self) -> Rat {
        self.r
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn is_admissible(&self) -> bool {
        self.eps < 0.25
    }

    pub fn to_data(&self) -> QuasiData {
        QuasiData {
            kind: self.kind,
            eps: self.eps,
            r: self.r,
            residual: self.residual,
            operator: self.op.to_data(),
        }
    }

    /// Re-certifies serialized data against the given space.
    pub fn from_data(space: std::sync::Arc<crate::metric::FiniteMetricSpace>, data: &QuasiData) -> Result<Self> {
        let op = BandedOperator::from_data(space, &data.operator)?;
        Self::certify_control(op, data.kind, data.eps, data.r)
    }
}

/// Samples `t_0 = 0 < … < t_n = 1` of a path of certified elements sharing
/// one `(ε, r)`, with consecutive samples closer than `step_bound`.
#[derive(Clone, Debug)]
pub struct HomotopyPath {
    times: Vec<f64>,
    samples: Vec<QuasiElement>,
    step_bound: f64,
    max_step: f64,
}

impl HomotopyPath {
    pub fn new(times: Vec<f64>, samples: Vec<QuasiElement>, step_bound: f64) -> Result<Self> {
        if samples.len() < 2 || times.len() != samples.len() {
            return Err(Error::InvalidParameter("a path needs at least two timed samples".into()));
        }
        if times[0] != 0.0 || *times.last().unwrap() != 1.0 || times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("sample times must increase from 0 to 1".into()));
        }
        let first = &samples[0];
        for s in &samples {
            if s.kind != first.kind || s.eps != first.eps || s.r != first.r || s.op.fiber() != first.op.fiber() {
                return Err(Error::InvalidParameter("path samples do not share kind, control and fiber".into()));
            }
        }
        let mut max_step: f64 = 0.0;
        for (i, w) in samples.windows(2).enumerate() {
            let step = w[1].op.sub(&w[0].op).norm();
            if step >= step_bound {
                return Err(Error::HomotopyStep {
                    index: i,
                    step,
                    bound: step_bound,
                });
            }
            max_step = max_step.max(step);
        }
        Ok(Self {
            times,
            samples,
            step_bound,
            max_step,
        })
    }

    /// Certifies each operator at `(eps, r)` and measures the steps; the
    /// declared bound is the largest step, padded by a relative `1e-9`.
    pub fn from_operators(times: Vec<f64>, ops: Vec<BandedOperator>, kind: QuasiKind, eps: f64, r: Rat) -> Result<Self> {
        let samples = ops
            .into_iter()
            .map(|op| QuasiElement::certify_control(op, kind, eps, r))
            .collect::<Result<Vec<_>>>()?;
        let max_step = samples
            .windows(2)
            .map(|w| w[1].op.sub(&w[0].op).norm())
            .fold(0.0, f64::max);
        Self::new(times, samples, max_step * (1.0 + 1e-9) + f64::MIN_POSITIVE)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn samples(&self) -> &[QuasiElement] {
        &self.samples
    }

    pub fn start(&self) -> &QuasiElement {
        &self.samples[0]
    }

    pub fn end(&self) -> &QuasiElement {
        self.samples.last().unwrap()
    }

    pub fn step_bound(&self) -> f64 {
        self.step_bound
    }

    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

pub fn uniform_times(n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

#[derive(Clone, Debug)]
pub struct Kappa0 {
    pub projection: BandedOperator,
    /// Rank with the scalar part counted once: `rank κ₀(S) + tr(blocks)`.
    pub rank: i64,
    /// `‖p − κ₀(p)‖`.
    pub distance: f64,
    pub steps: usize,
}

pub const KAPPA0_TOL: f64 = 1e-12;
pub const KAPPA0_MAX_STEPS: usize = 200;

/// The spectral projection of `p` across the gap at `1/2`, by the cubic
/// iteration `x ← 3x² − 2x³`.
pub fn kappa0(p: &QuasiElement) -> Result<Kappa0> {
    if p.kind != QuasiKind::Projection {
        return Err(Error::InvalidParameter("κ₀ needs an almost projection".into()));
    }
    if !p.is_admissible() {
        return Err(Error::EpsOutOfRange {
            eps: p.eps,
            range: "(0, 1/4)",
        });
    }
    let mut x = p.op.clone();
    let mut steps = 0;
    loop {
        let x2 = x.mul(&x);
        if x2.sub(&x).norm() < KAPPA0_TOL {
            break;
        }
        if steps == KAPPA0_MAX_STEPS {
            return Err(Error::NotConverged("κ₀ cubic iteration"));
        }
        x = x2.scale_real(3.0).sub(&x2.mul(&x).scale_real(2.0));
        steps += 1;
    }
    let scalar_rank = x.scalar().trace().re;
    let block_rank = x.block_trace().re;
    let rank = scalar_rank.round() as i64 + block_rank.round() as i64;
    let distance = p.op.sub(&x).norm();
    Ok(Kappa0 {
        projection: x,
        rank,
        distance,
        steps,
    })
}

/// `rank κ₀(p) − l`, the image of `[p, l]` under the rank map.
pub fn rank_class(p: &QuasiElement, l: i64) -> Result<i64> {
    Ok(kappa0(p)?.rank - l)
}

/// A self-adjoint `q` with `‖p − q‖ < ε` and propagation `≤ r` is a
/// `5ε-r` projection, joined to `p` by the straight line.
pub fn perturb_projection(p: &QuasiElement, q: BandedOperator, r: Rat, samples: usize) -> Result<(QuasiElement, HomotopyPath)> {
    if p.kind != QuasiKind::Projection {
        return Err(Error::InvalidParameter("perturbation needs an almost projection".into()));
    }
    let defect = q.hermitian_defect();
    if defect > SELF_ADJOINT_TOL {
        return Err(Error::NotSelfAdjoint { defect });
    }
    let prop = q.propagation();
    if prop > r {
        return Err(Error::PropagationExceeded { propagation: prop, limit: r });
    }
    let dist = p.op.sub(&q).norm();
    if dist >= p.eps {
        return Err(Error::ResidualTooLarge {
            which: "‖p − q‖",
            value: dist,
            bound: p.eps,
        });
    }
    let eps = 5.0 * p.eps;
    let r_path = r.max(p.r);
    let n = samples.max(2);
    let times = uniform_times(n);
    let ops = times
        .iter()
        .map(|&t| p.op.scale_real(1.0 - t).add(&q.scale_real(t)))
        .collect();
    let path = HomotopyPath::from_operators(times, ops, QuasiKind::Projection, eps, r_path)?;
    let certified = QuasiElement::certify_control(q, QuasiKind::Projection, eps, r)?;
    Ok((certified, path))
}

pub struct StandardForm {
    pub element: QuasiElement,
    /// Constant unitary with `U κ₀(ρ(q)) U* = diag(I_k, 0)`.
    pub conjugator: CMat,
    pub path: HomotopyPath,
}

/// Conjugates `q` by a constant unitary and corrects the scalar part so it
/// reads exactly `diag(I_k, 0)`.
pub fn standard_form(q: &QuasiElement, k: usize, samples: usize) -> Result<StandardForm> {
    if q.kind != QuasiKind::Projection {
        return Err(Error::InvalidParameter("standard form needs an almost projection".into()));
    }
    let m = q.op.fiber();
    let s = q.op.scalar().clone();
    let eig = eigen::eigen(&s, true);
    let found = eig.values.iter().filter(|&&l| l >= 0.5).count();
    if found != k {
        return Err(Error::ScalarRank { expected: k, found });
    }
    let v = eig.vectors.expect("vectors requested");
    // Eigenvalues ascend, so reverse the columns to put the range first.
    let v = CMat::from_fn(m, m, |i, j| v[(i, m - 1 - j)]);
    let u = v.adjoint();
    let target = CMat::corner_projection(m, k);

    let (w, phases) = unitary_eigen(&u)?;
    let n = samples.max(2);
    let times = uniform_times(n);
    let q_op = &q.op;
    let mut ops: Vec<BandedOperator> = times
        .iter()
        .map(|&t| {
            let ut = unitary_power(&w, &phases, t);
            let c = BandedOperator::from_scalar(q_op.space().clone(), ut);
            c.mul(q_op).mul(&c.adjoint())
        })
        .collect();
    let conj = ops.last().unwrap().clone();
    let mut corrected = conj.clone();
    corrected.set_scalar(target.clone());
    ops.push(corrected.clone());
    let mut path_times: Vec<f64> = times.iter().map(|t| t * 0.5).collect();
    path_times.push(1.0);

    let eps = 9.0 * q.eps;
    let path = HomotopyPath::from_operators(path_times, ops, QuasiKind::Projection, eps, q.r)?;
    let element = QuasiElement::certify_control(corrected, QuasiKind::Projection, eps, q.r)?;
    Ok(StandardForm {
        element,
        conjugator: u,
        path,
    })
}

/// Eigen-decomposition `U = W diag(e^{iθ}) W*` of a unitary matrix, via the
/// commuting Hermitian parts `(U + U*)/2` and `(U − U*)/2i`.
pub fn unitary_eigen(u: &CMat) -> Result<(CMat, Vec<f64>)> {
    let n = u.rows();
    let adj = u.adjoint();
    let re = u.add(&adj).scale(C64::new(0.5, 0.0));
    let im = u.sub(&adj).scale(C64::new(0.0, -0.5));
    // An irrational mix separates eigenvalues that share a real part.
    let mix = re.add(&im.scale(C64::new(0.618_033_988_749_894_8, 0.0)));
    let w = eigen::eigen(&mix, true).vectors.expect("vectors requested");
    let d = w.adjoint().mul(u).mul(&w);
    let mut off: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(d[(i, j)].norm());
            }
        }
    }
    if off > 1e-8 {
        return Err(Error::NotConverged("unitary eigen-decomposition"));
    }
    let phases = (0..n).map(|i| d[(i, i)].arg()).collect();
    Ok((w, phases))
}

/// `W diag(e^{itθ}) W*`.
pub fn unitary_power(w: &CMat, phases: &[f64], t: f64) -> CMat {
    let d = CMat::diagonal(&phases.iter().map(|&p| C64::from_polar(1.0, t * p)).collect::<Vec<_>>());
    w.mul(&d).mul(&w.adjoint())
}

/// A control pair `(λ, h)`: `λ ≥ 1` and `h` non-increasing, `h ≥ 1`,
/// tabulated on an increasing grid of `ε` in `(0, 1/(4λ))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPair {
    pub lambda: f64,
    /// `(ε, h_ε)` with `ε` increasing.
    pub grid: Vec<(f64, f64)>,
}

impl ControlPair {
    pub fn new(lambda: f64, grid: Vec<(f64, f64)>) -> Result<Self> {
        if !(lambda >= 1.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("λ = {lambda} must be at least 1")));
        }
        if grid.is_empty() {
            return Err(Error::InvalidParameter("a control pair needs a non-empty grid".into()));
        }
        let limit = 1.0 / (4.0 * lambda);
        for (i, &(e, h)) in grid.iter().enumerate() {
            if !(e > 0.0 && e < limit) {
                return Err(Error::InvalidParameter(format!("grid point ε = {e} is outside (0, {limit})")));
            }
            if h < 1.0 {
                return Err(Error::InvalidParameter(format!("h = {h} at ε = {e} is below 1")));
            }
            if i > 0 {
                let (pe, ph) = grid[i - 1];
                if e <= pe {
                    return Err(Error::InvalidParameter("grid ε values must increase".into()));
                }
                if h > ph {
                    return Err(Error::InvalidParameter(format!("h increases between ε = {pe} and ε = {e}")));
                }
            }
        }
        Ok(Self { lambda, grid })
    }

    /// `h` at `ε`, read from the largest grid point `≤ ε`; this bounds a
    /// non-increasing `h` from above. `None` below the grid.
    pub fn h(&self, eps: f64) -> Option<f64> {
        self.grid.iter().rev().find(|&&(e, _)| e <= eps).map(|&(_, h)| h)
    }

    /// `(λ, h) ≤ (λ', h')`: `λ ≤ λ'` and `h ≤ h'` wherever both are tabulated
    /// below `1/(4λ')`.
    pub fn le(&self, other: &ControlPair) -> bool {
        if self.lambda > other.lambda {
            return false;
        }
        let limit = 1.0 / (4.0 * other.lambda);
        self.grid
            .iter()
            .chain(other.grid.iter())
            .filter(|&&(e, _)| e < limit)
            .all(|&(e, _)| match (self.h(e), other.h(e)) {
                (Some(a), Some(b)) => a <= b,
                _ => true,
            })
    }

    /// `(λλ', h_{λ'ε} h'_ε)`, tabulated on `other`'s grid.
    pub fn compose(&self, other: &ControlPair) -> Result<ControlPair> {
        let lambda = self.lambda * other.lambda;
        let limit = 1.0 / (4.0 * lambda);
        let grid: Vec<(f64, f64)> = other
            .grid
            .iter()
            .filter(|&&(e, _)| e < limit)
            .filter_map(|&(e, h2)| self.h(other.lambda * e).map(|h1| (e, h1 * h2)))
            .collect();
        ControlPair::new(lambda, grid)
    }
}

/// Identity-padded scalar `diag(I_k, 0)` as a constant operator.
pub fn corner(space: std::sync::Arc<crate::metric::FiniteMetricSpace>, fiber: usize, k: usize) -> BandedOperator {
    BandedOperator::from_scalar(space, CMat::corner_projection(fiber, k))
}
