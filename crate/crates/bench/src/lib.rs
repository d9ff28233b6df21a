//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use qkt_core::instances::{instance_rng, random_banded, random_projection, rotation_unitary, UnitaryInstance, UnitarySpec};
use qkt_core::metric::{rat, Rat};
use qkt_core::{annular_two_coloring, build_pair, BandedOperator, ControlledMVPair, FiniteMetricSpace, QuasiElement, SpaceSpec};

pub fn cycle(n: usize) -> Arc<FiniteMetricSpace> {
    Arc::new(FiniteMetricSpace::generate(&SpaceSpec::Cycle { n }).expect("cycle"))
}

/// Random `r = 2` operator with fiber `m` on `cycle(n)`.
pub fn banded(n: usize, m: usize) -> BandedOperator {
    random_banded(&cycle(n), m, rat(2), 0.5, 1.0, &mut instance_rng(0, n as u64))
}

pub fn projection(n: usize, eps: f64) -> QuasiElement {
    random_projection(&cycle(n), 2, 1, eps, rat(2), 6, &mut instance_rng(1, n as u64)).expect("projection")
}

/// The annular pair on `cycle(n)` with `R = 12`, `r = 1`, `s = 11/2`.
pub fn pair(n: usize) -> ControlledMVPair {
    let space = cycle(n);
    let families = annular_two_coloring(&space, 0, rat(12)).expect("coloring");
    build_pair(space, families, rat(1), Rat::new(11, 2)).expect("pair")
}

pub fn unitary(pair: &ControlledMVPair, steps: usize) -> UnitaryInstance {
    let mut spec = UnitarySpec::new(1, 0.02, rat(1));
    spec.steps = steps;
    rotation_unitary(pair.space(), &spec, None, &mut instance_rng(2, steps as u64)).expect("unitary")
}
