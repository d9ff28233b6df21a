//! Finite-propagation operators on `ℓ²(X) ⊗ C^m`, stored as a scalar part
//! `S ⊗ 1` plus a sparse map of `m × m` blocks.
//!
//! The scalar part is what the unitization adds: `I` is the operator with
//! scalar part `I_m` and no blocks. Matrices over the algebra are operators
//! with a larger fiber, so `M_k(A)` at fiber `m` is fiber `k m`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::dense::{CMat, C64};
use crate::error::{Error, Result};
use crate::eigen;
use crate::metric::{FiniteMetricSpace, Rat};

pub type Block = (usize, usize);

#[derive(Clone, Debug)]
pub struct BandedOperator {
    space: Arc<FiniteMetricSpace>,
    fiber: usize,
    scalar: CMat,
    blocks: BTreeMap<Block, CMat>,
}

/// Serialized form; the space travels separately.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct OperatorData {
    pub fiber: usize,
    pub scalar: CMat,
    pub blocks: Vec<BlockEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct BlockEntry {
    pub row: usize,
    pub col: usize,
    pub block: CMat,
}

fn same_space(a: &Arc<FiniteMetricSpace>, b: &Arc<FiniteMetricSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

impl BandedOperator {
    pub fn zero(space: Arc<FiniteMetricSpace>, fiber: usize) -> Self {
        Self {
            space,
            fiber,
            scalar: CMat::zeros(fiber, fiber),
            blocks: BTreeMap::new(),
        }
    }

    pub fn identity(space: Arc<FiniteMetricSpace>, fiber: usize) -> Self {
        Self::from_scalar(space, CMat::identity(fiber))
    }

    /// The constant operator `S ⊗ 1`.
    pub fn from_scalar(space: Arc<FiniteMetricSpace>, scalar: CMat) -> Self {
        assert!(scalar.is_square(), "scalar part must be square");
        Self {
            space,
            fiber: scalar.rows(),
            scalar,
            blocks: BTreeMap::new(),
        }
    }

    pub fn from_blocks(
        space: Arc<FiniteMetricSpace>,
        scalar: CMat,
        blocks: impl IntoIterator<Item = (Block, CMat)>,
    ) -> Result<Self> {
        let fiber = scalar.rows();
        if !scalar.is_square() {
            return Err(Error::Shape("scalar part must be square".into()));
        }
        let mut op = Self::from_scalar(space, scalar);
        for ((x, y), b) in blocks {
            if x >= op.space.len() || y >= op.space.len() {
                return Err(Error::Shape(format!("block ({x}, {y}) outside the space")));
            }
            if b.rows() != fiber || b.cols() != fiber {
                return Err(Error::Shape(format!("block ({x}, {y}) is not {fiber}x{fiber}")));
            }
            op.add_block(x, y, &b);
        }
        op.prune();
        Ok(op)
    }

    pub fn from_data(space: Arc<FiniteMetricSpace>, data: &OperatorData) -> Result<Self> {
        if data.scalar.rows() != data.fiber {
            return Err(Error::Shape("scalar part does not match the fiber".into()));
        }
        Self::from_blocks(
            space,
            data.scalar.clone(),
            data.blocks.iter().map(|e| ((e.row, e.col), e.block.clone())),
        )
    }

    pub fn to_data(&self) -> OperatorData {
        OperatorData {
            fiber: self.fiber,
            scalar: self.scalar.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|(&(row, col), b)| BlockEntry {
                    row,
                    col,
                    block: b.clone(),
                })
                .collect(),
        }
    }

    pub fn space(&self) -> &Arc<FiniteMetricSpace> {
        &self.space
    }

    pub fn fiber(&self) -> usize {
        self.fiber
    }

    pub fn scalar(&self) -> &CMat {
        &self.scalar
    }

    pub fn blocks(&self) -> impl Iterator<Item = (Block, &CMat)> {
        self.blocks.iter().map(|(&k, v)| (k, v))
    }

    pub fn block(&self, x: usize, y: usize) -> Option<&CMat> {
        self.blocks.get(&(x, y))
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn has_blocks(&self) -> bool {
        !self.blocks.is_empty()
    }

    pub fn add_block(&mut self, x: usize, y: usize, b: &CMat) {
        self.blocks
            .entry((x, y))
            .and_modify(|e| e.add_assign(b))
            .or_insert_with(|| b.clone());
    }

    pub fn set_scalar(&mut self, s: CMat) {
        assert!(s.rows() == self.fiber && s.cols() == self.fiber);
        self.scalar = s;
    }

    /// Drops the scalar part, leaving only the blocks.
    pub fn without_scalar(&self) -> Self {
        let mut out = self.clone();
        out.scalar = CMat::zeros(self.fiber, self.fiber);
        out
    }

    pub fn prune(&mut self) {
        self.blocks.retain(|_, b| !b.is_zero());
    }

    fn check_compatible(&self, other: &Self) {
        assert!(same_space(&self.space, &other.space), "operators live on different spaces");
        assert_eq!(self.fiber, other.fiber, "fiber mismatch");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let mut out = self.clone();
        out.scalar.add_assign(&other.scalar);
        for (&(x, y), b) in &other.blocks {
            out.add_block(x, y, b);
        }
        out.prune();
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = Self {
            space: self.space.clone(),
            fiber: self.fiber,
            scalar: self.scalar.scale(s),
            blocks: self.blocks.iter().map(|(&k, b)| (k, b.scale(s))).collect(),
        };
        out.prune();
        out
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// `self + c I`.
    pub fn add_identity(&self, c: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.fiber {
            out.scalar[(i, i)] += c;
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            fiber: self.fiber,
            scalar: self.scalar.adjoint(),
            blocks: self.blocks.iter().map(|(&(x, y), b)| ((y, x), b.adjoint())).collect(),
        }
    }

    /// [`mul`](Self::mul) with mismatched spaces or fibers reported as an
    /// error instead of a panic.
    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        if !same_space(&self.space, &other.space) {
            return Err(Error::Shape("operators live on different spaces".into()));
        }
        if self.fiber != other.fiber {
            return Err(Error::Shape(format!("fiber {} against fiber {}", self.fiber, other.fiber)));
        }
        Ok(self.mul(other))
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.check_compatible(other);
        let n = self.space.len();
        let mut by_row: Vec<Vec<(usize, &CMat)>> = vec![Vec::new(); n];
        for (&(z, y), b) in &other.blocks {
            by_row[z].push((y, b));
        }
        let mut out: BTreeMap<Block, CMat> = BTreeMap::new();
        let m = self.fiber;
        for (&(x, z), a) in &self.blocks {
            for &(y, b) in &by_row[z] {
                out.entry((x, y)).or_insert_with(|| CMat::zeros(m, m)).mul_acc(a, b);
            }
        }
        let accumulate = |out: &mut BTreeMap<Block, CMat>, key: Block, value: CMat| {
            out.entry(key).and_modify(|e| e.add_assign(&value)).or_insert(value);
        };
        if !other.scalar.is_zero() {
            let id = other.scalar.is_identity();
            for (&k, a) in &self.blocks {
                accumulate(&mut out, k, if id { a.clone() } else { a.mul(&other.scalar) });
            }
        }
        if !self.scalar.is_zero() {
            let id = self.scalar.is_identity();
            for (&k, b) in &other.blocks {
                accumulate(&mut out, k, if id { b.clone() } else { self.scalar.mul(b) });
            }
        }
        let mut res = Self {
            space: self.space.clone(),
            fiber: m,
            scalar: self.scalar.mul(&other.scalar),
            blocks: out,
        };
        res.prune();
        res
    }

    pub fn mul_all(factors: &[&Self]) -> Self {
        let (first, rest) = factors.split_first().expect("at least one factor");
        rest.iter().fold((*first).clone(), |acc, f| acc.mul(f))
    }

    /// `max d(x, y)` over nonzero blocks; zero when there are none.
    pub fn propagation(&self) -> Rat {
        self.blocks
            .keys()
            .map(|&(x, y)| self.space.d(x, y))
            .max()
            .unwrap_or_else(Rat::zero)
    }

    /// Drops blocks farther apart than `r`.
    pub fn truncate(&self, r: Rat) -> Self {
        self.filter_blocks(|x, y| self.space.d(x, y) <= r)
    }

    /// Keeps blocks `(x, y)` where `keep(x, y)`; the scalar part is untouched.
    pub fn filter_blocks(&self, keep: impl Fn(usize, usize) -> bool) -> Self {
        Self {
            space: self.space.clone(),
            fiber: self.fiber,
            scalar: self.scalar.clone(),
            blocks: self
                .blocks
                .iter()
                .filter(|(&(x, y), _)| keep(x, y))
                .map(|(&k, b)| (k, b.clone()))
                .collect(),
        }
    }

    /// `χ_S · self`. The scalar part becomes diagonal blocks on `S`, so
    /// `row_restrict(S) + row_restrict(S^c)` is `self` as an operator.
    pub fn row_restrict(&self, rows: &[bool]) -> Self {
        assert_eq!(rows.len(), self.space.len());
        let mut out = Self::zero(self.space.clone(), self.fiber);
        for (&(x, y), b) in &self.blocks {
            if rows[x] {
                out.blocks.insert((x, y), b.clone());
            }
        }
        if !self.scalar.is_zero() {
            for (x, &inside) in rows.iter().enumerate() {
                if inside {
                    out.add_block(x, x, &self.scalar);
                }
            }
        }
        out.prune();
        out
    }

    /// `I ⊗ χ_S` as blocks.
    pub fn indicator(space: Arc<FiniteMetricSpace>, fiber: usize, set: &[bool]) -> Self {
        Self::identity(space, fiber).row_restrict(set)
    }

    /// Views the fiber as a `k × k` grid of `fiber / k` blocks and assembles
    /// `[entries(i, j)]`. Missing entries are zero.
    pub fn from_grid<'a>(
        space: Arc<FiniteMetricSpace>,
        inner: usize,
        k: usize,
        entries: impl Fn(usize, usize) -> Option<&'a BandedOperator>,
    ) -> Self {
        let fiber = inner * k;
        let mut scalar = CMat::zeros(fiber, fiber);
        let mut blocks: BTreeMap<Block, CMat> = BTreeMap::new();
        for i in 0..k {
            for j in 0..k {
                let Some(e) = entries(i, j) else { continue };
                assert!(same_space(&space, &e.space), "grid entry on a different space");
                assert_eq!(e.fiber, inner, "grid entry fiber mismatch");
                scalar.set_block(i * inner, j * inner, &e.scalar);
                for (&key, b) in &e.blocks {
                    blocks
                        .entry(key)
                        .or_insert_with(|| CMat::zeros(fiber, fiber))
                        .set_block(i * inner, j * inner, b);
                }
            }
        }
        Self {
            space,
            fiber,
            scalar,
            blocks,
        }
    }

    /// Entry `(i, j)` of the `k × k` grid view.
    pub fn grid_entry(&self, k: usize, i: usize, j: usize) -> Self {
        assert_eq!(self.fiber % k, 0, "fiber is not divisible by {k}");
        let inner = self.fiber / k;
        let mut out = Self {
            space: self.space.clone(),
            fiber: inner,
            scalar: self.scalar.block(i * inner, j * inner, inner, inner),
            blocks: self
                .blocks
                .iter()
                .map(|(&key, b)| (key, b.block(i * inner, j * inner, inner, inner)))
                .collect(),
        };
        out.prune();
        out
    }

    /// Block diagonal sum; fibers may differ.
    pub fn direct_sum(parts: &[&Self]) -> Self {
        let (first, _) = parts.split_first().expect("at least one summand");
        let space = first.space.clone();
        let fiber: usize = parts.iter().map(|p| p.fiber).sum();
        let scalar = CMat::direct_sum(&parts.iter().map(|p| &p.scalar).collect::<Vec<_>>());
        let mut blocks: BTreeMap<Block, CMat> = BTreeMap::new();
        let mut offset = 0;
        for p in parts {
            assert!(same_space(&space, &p.space), "summand on a different space");
            for (&key, b) in &p.blocks {
                blocks
                    .entry(key)
                    .or_insert_with(|| CMat::zeros(fiber, fiber))
                    .set_block(offset, offset, b);
            }
            offset += p.fiber;
        }
        Self {
            space,
            fiber,
            scalar,
            blocks,
        }
    }

    /// `diag(self, I_extra)`.
    pub fn pad_identity(&self, extra: usize) -> Self {
        if extra == 0 {
            return self.clone();
        }
        Self::direct_sum(&[self, &Self::identity(self.space.clone(), extra)])
    }

    /// `diag(self, 0_extra)`.
    pub fn pad_zero(&self, extra: usize) -> Self {
        if extra == 0 {
            return self.clone();
        }
        Self::direct_sum(&[self, &Self::zero(self.space.clone(), extra)])
    }

    /// Connected components of the graph on points joined by nonzero blocks.
    /// Points touched by no block are omitted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.space.len();
        let mut uf = UnionFind((0..n).collect());
        let mut touched = vec![false; n];
        for &(x, y) in self.blocks.keys() {
            touched[x] = true;
            touched[y] = true;
            uf.union(x, y);
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in (0..n).filter(|&x| touched[x]) {
            let root = uf.find(x);
            groups.entry(root).or_default().push(x);
        }
        groups.into_values().collect()
    }

    /// The compression of the operator to `ℓ²(points) ⊗ C^m`.
    pub fn dense_on(&self, points: &[usize]) -> CMat {
        let m = self.fiber;
        let mut out = CMat::zeros(points.len() * m, points.len() * m);
        let mut index = BTreeMap::new();
        for (i, &x) in points.iter().enumerate() {
            index.insert(x, i);
            out.set_block(i * m, i * m, &self.scalar);
        }
        for (i, &x) in points.iter().enumerate() {
            for (&(_, y), b) in self.blocks.range((x, 0)..=(x, usize::MAX)) {
                if let Some(&j) = index.get(&y) {
                    let mut cur = out.block(i * m, j * m, m, m);
                    cur.add_assign(b);
                    out.set_block(i * m, j * m, &cur);
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> CMat {
        let all: Vec<usize> = (0..self.space.len()).collect();
        self.dense_on(&all)
    }

    fn has_bare_points(&self, components: &[Vec<usize>]) -> bool {
        components.iter().map(Vec::len).sum::<usize>() < self.space.len()
    }

    /// Operator norm. The operator is a direct sum over block-support
    /// components, plus `S` on every untouched point.
    pub fn norm(&self) -> f64 {
        let comps = self.components();
        let mut best: f64 = 0.0;
        if self.has_bare_points(&comps) && !self.scalar.is_zero() {
            best = dense_norm(&self.scalar);
        }
        for (dense, _) in self.distinct_compressions(comps) {
            best = best.max(dense_norm(&dense));
        }
        best
    }

    /// Components grouped by identical compressions, in first-seen order.
    fn distinct_compressions(&self, comps: Vec<Vec<usize>>) -> Vec<(CMat, Vec<Vec<usize>>)> {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut out: Vec<(CMat, Vec<Vec<usize>>)> = Vec::new();
        for comp in comps {
            let dense = self.dense_on(&comp);
            let key: Vec<u64> = std::iter::once(dense.rows() as u64)
                .chain(dense.data().iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]))
                .collect();
            match index.get(&key) {
                Some(&i) => out[i].1.push(comp),
                None => {
                    index.insert(key, out.len());
                    out.push((dense, vec![comp]));
                }
            }
        }
        out
    }

    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = self.scalar.hermitian_defect();
        for (&(x, y), b) in &self.blocks {
            let d = match self.blocks.get(&(y, x)) {
                Some(t) => b.sub(&t.adjoint()).max_abs(),
                None => b.max_abs(),
            };
            worst = worst.max(d);
        }
        worst
    }

    /// `f(self)` for self-adjoint operators, computed componentwise so that
    /// the support stays inside the components of the input.
    pub fn hermitian_apply(&self, f: impl Fn(f64) -> f64) -> Self {
        self.spectral_apply(|l| C64::new(f(l), 0.0))
    }

    /// `exp(iθ self)` for self-adjoint operators.
    pub fn exp_i(&self, theta: f64) -> Self {
        self.spectral_apply(|l| C64::from_polar(1.0, theta * l))
    }

    pub fn spectral_apply(&self, f: impl Fn(f64) -> C64) -> Self {
        let m = self.fiber;
        let f_scalar = if m == 0 {
            CMat::zeros(0, 0)
        } else {
            eigen::apply_complex(&self.scalar, &f)
        };
        let mut out = Self::from_scalar(self.space.clone(), f_scalar);
        for (dense, group) in self.distinct_compressions(self.components()) {
            let fd = eigen::apply_complex(&dense, &f);
            for comp in group {
                out.set_dense_on(&comp, &fd);
            }
        }
        out
    }

    /// Replaces the compression to `points` by `dense`, keeping the scalar
    /// part; blocks touching `points` from outside are left alone.
    pub fn set_dense_on(&mut self, points: &[usize], dense: &CMat) {
        let m = self.fiber;
        for (i, &x) in points.iter().enumerate() {
            for (j, &y) in points.iter().enumerate() {
                let mut b = dense.block(i * m, j * m, m, m);
                if i == j {
                    b.sub_assign(&self.scalar);
                }
                if b.is_zero() {
                    self.blocks.remove(&(x, y));
                } else {
                    self.blocks.insert((x, y), b);
                }
            }
        }
    }

    /// Smallest and largest eigenvalue of a self-adjoint operator.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let comps = self.components();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut take = |m: &CMat| {
            if m.rows() == 0 {
                return;
            }
            let e = eigen::eigen(m, false);
            lo = lo.min(e.values[0]);
            hi = hi.max(*e.values.last().unwrap());
        };
        if self.has_bare_points(&comps) {
            take(&self.scalar);
        }
        for (dense, _) in self.distinct_compressions(comps) {
            take(&dense);
        }
        (lo, hi)
    }

    /// `Σ_x tr B(x, x)`: the trace of the block part.
    pub fn block_trace(&self) -> C64 {
        self.blocks
            .iter()
            .filter(|(&(x, y), _)| x == y)
            .map(|(_, b)| b.trace())
            .sum()
    }

    /// Block trace restricted to diagonal blocks at `points`.
    pub fn block_trace_on(&self, points: &[usize]) -> C64 {
        points
            .iter()
            .filter_map(|&x| self.blocks.get(&(x, x)))
            .map(|b| b.trace())
            .sum()
    }

    /// Exact equality of the represented operators (scalar parts may differ
    /// from their materialized diagonal-block form).
    pub fn dense_eq(&self, other: &Self) -> bool {
        self.to_dense() == other.to_dense()
    }

    pub fn max_block_abs(&self) -> f64 {
        self.blocks.values().map(CMat::max_abs).fold(self.scalar.max_abs(), f64::max)
    }
}

/// Operator norm of a dense matrix, using the spectrum directly when the
/// matrix is Hermitian.
pub fn dense_norm(a: &CMat) -> f64 {
    if a.rows() == 0 {
        return 0.0;
    }
    let scale = a.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    if a.hermitian_defect() <= 1e-14 * scale {
        let e = eigen::eigen(a, false);
        let lo = e.values.first().copied().unwrap_or(0.0);
        let hi = e.values.last().copied().unwrap_or(0.0);
        lo.abs().max(hi.abs())
    } else {
        a.spectral_norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{rat, SpaceSpec};

    fn cycle(n: usize) -> Arc<FiniteMetricSpace> {
        Arc::new(FiniteMetricSpace::generate(&SpaceSpec::Cycle { n }).unwrap())
    }

    fn c(re: f64) -> CMat {
        CMat::from_real(1, 1, &[re])
    }

    #[test]
    fn shift_has_propagation_one_and_norm_one() {
        let s = cycle(8);
        let shift = BandedOperator::from_blocks(
            s.clone(),
            CMat::zeros(1, 1),
            (0..8).map(|x| ((x, (x + 1) % 8), c(1.0))),
        )
        .unwrap();
        assert_eq!(shift.propagation(), rat(1));
        assert!((shift.norm() - 1.0).abs() < 1e-12);
        let id = shift.mul(&shift.adjoint());
        assert!(id.sub(&BandedOperator::identity(s, 1)).norm() < 1e-14);
    }

    #[test]
    fn products_add_propagation() {
        let s = cycle(10);
        let a = BandedOperator::from_blocks(s.clone(), CMat::zeros(1, 1), vec![((0, 2), c(1.0))]).unwrap();
        let b = BandedOperator::from_blocks(s, CMat::zeros(1, 1), vec![((2, 5), c(1.0))]).unwrap();
        let ab = a.mul(&b);
        assert_eq!(ab.propagation(), rat(5));
        assert_eq!(ab.block(0, 5), Some(&c(1.0)));
    }

    #[test]
    fn row_split_reassembles() {
        let s = cycle(6);
        let a = BandedOperator::from_blocks(
            s.clone(),
            CMat::from_real(1, 1, &[2.0]),
            vec![((0, 1), c(0.5)), ((3, 4), c(-1.0)), ((5, 5), c(0.25))],
        )
        .unwrap();
        let set = vec![true, true, false, false, true, false];
        let comp: Vec<bool> = set.iter().map(|b| !b).collect();
        let sum = a.row_restrict(&set).add(&a.row_restrict(&comp));
        assert!(sum.dense_eq(&a));
    }

    #[test]
    fn grid_assembly_round_trips() {
        let s = cycle(5);
        let a = BandedOperator::from_blocks(s.clone(), CMat::identity(1), vec![((0, 1), c(3.0))]).unwrap();
        let z = BandedOperator::zero(s.clone(), 1);
        let g = BandedOperator::from_grid(s, 1, 2, |i, j| match (i, j) {
            (0, 1) => Some(&a),
            (1, 0) => Some(&z),
            _ => None,
        });
        assert_eq!(g.fiber(), 2);
        assert!(g.grid_entry(2, 0, 1).dense_eq(&a));
        assert!(g.grid_entry(2, 1, 1).to_dense().is_zero());
    }

    #[test]
    fn componentwise_norm_matches_dense() {
        let s = cycle(12);
        let a = BandedOperator::from_blocks(
            s,
            CMat::from_real(1, 1, &[0.5]),
            vec![((0, 1), c(2.0)), ((1, 0), c(-1.0)), ((6, 7), c(0.3)), ((9, 9), c(1.5))],
        )
        .unwrap();
        let dense = a.to_dense();
        assert!((a.norm() - dense.spectral_norm()).abs() < 1e-12);
    }

    #[test]
    fn functional_calculus_square_root() {
        let s = cycle(6);
        let h = BandedOperator::from_blocks(
            s,
            CMat::from_real(1, 1, &[2.0]),
            vec![((0, 1), c(0.5)), ((1, 0), c(0.5)), ((3, 3), c(1.0))],
        )
        .unwrap();
        let r = h.hermitian_apply(f64::sqrt);
        assert!(r.mul(&r).sub(&h).norm() < 1e-12);
        assert!(r.block(4, 4).is_none());
    }

    #[test]
    fn data_round_trip() {
        let s = cycle(4);
        let a = BandedOperator::from_blocks(s.clone(), CMat::identity(1), vec![((0, 3), c(1.0))]).unwrap();
        let json = serde_json::to_string(&a.to_data()).unwrap();
        let back = BandedOperator::from_data(s, &serde_json::from_str(&json).unwrap()).unwrap();
        assert!(back.dense_eq(&a));
    }
}
