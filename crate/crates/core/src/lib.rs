//! Controlled Mayer-Vietoris machinery for quantitative K-theory of Roe
//! algebras of finite metric spaces.

pub mod dense;
pub mod eigen;
pub mod elementary;
pub mod error;
pub mod factorization;
pub mod instances;
pub mod metric;
pub mod mv;
pub mod operator;
pub mod polar;
pub mod quasi;
pub mod support;

pub use dense::{CMat, C64};
pub use error::{Error, Result};
pub use factorization::{factor_across, factor_p1p2, CoerciveSplitting, FactorConfig, PairFactorization, RowSplit};
pub use metric::{annular_two_coloring, verify_cover, CoverFamily, FiniteMetricSpace, Rat, SpaceSpec};
pub use mv::{boundary_odd, build_pair, BoundaryClass, ControlledMVPair};
pub use operator::BandedOperator;
pub use quasi::{HomotopyPath, QuasiElement, QuasiKind};
pub use support::{membership, Membership, SupportPredicate};
