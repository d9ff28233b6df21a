//! Support predicates for subalgebras of the Roe algebra, and membership
//! checks against them. The scalar part of an operator is always exempt.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{format_rat, CoverFamily, FiniteMetricSpace, Rat};
use crate::operator::{dense_norm, BandedOperator};

#[derive(Clone, Debug, PartialEq)]
pub enum SupportPredicate {
    Full,
    /// `d(x, y) <= r`.
    Propagation(Rat),
    /// Rows in a subset, `d(x, y) <= r`.
    Rows { label: String, rows: Vec<bool>, r: Rat },
    /// `(x, y)` lies in `P × P` for one of the pieces `P`.
    Pieces {
        label: String,
        pieces: Vec<Vec<usize>>,
        /// Sorted piece indices containing each point.
        piece_of: Vec<Vec<usize>>,
    },
    Intersection(Vec<SupportPredicate>),
}

impl SupportPredicate {
    pub fn rows(label: impl Into<String>, rows: Vec<bool>, r: Rat) -> Self {
        SupportPredicate::Rows {
            label: label.into(),
            rows,
            r,
        }
    }

    pub fn pieces(label: impl Into<String>, n: usize, pieces: Vec<Vec<usize>>) -> Self {
        let mut piece_of = vec![Vec::new(); n];
        for (i, p) in pieces.iter().enumerate() {
            for &x in p {
                piece_of[x].push(i);
            }
        }
        SupportPredicate::Pieces {
            label: label.into(),
            pieces,
            piece_of,
        }
    }

    /// Pieces of `family` thickened to `{x : d(x, P) < s}`.
    pub fn thickened(label: impl Into<String>, space: &FiniteMetricSpace, family: &CoverFamily, s: Rat) -> Self {
        let pieces = family.pieces.iter().map(|p| space.open_thickening(p, s)).collect();
        Self::pieces(label, space.len(), pieces)
    }

    pub fn and(self, other: SupportPredicate) -> Self {
        match self {
            SupportPredicate::Intersection(mut v) => {
                v.push(other);
                SupportPredicate::Intersection(v)
            }
            first => SupportPredicate::Intersection(vec![first, other]),
        }
    }

    pub fn contains(&self, space: &FiniteMetricSpace, x: usize, y: usize) -> bool {
        match self {
            SupportPredicate::Full => true,
            SupportPredicate::Propagation(r) => space.d(x, y) <= *r,
            SupportPredicate::Rows { rows, r, .. } => rows[x] && space.d(x, y) <= *r,
            SupportPredicate::Pieces { piece_of, .. } => {
                let (a, b) = (&piece_of[x], &piece_of[y]);
                let (mut i, mut j) = (0, 0);
                while i < a.len() && j < b.len() {
                    match a[i].cmp(&b[j]) {
                        std::cmp::Ordering::Equal => return true,
                        std::cmp::Ordering::Less => i += 1,
                        std::cmp::Ordering::Greater => j += 1,
                    }
                }
                false
            }
            SupportPredicate::Intersection(parts) => parts.iter().all(|p| p.contains(space, x, y)),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            SupportPredicate::Full => "full".into(),
            SupportPredicate::Propagation(r) => format!("propagation <= {}", format_rat(r)),
            SupportPredicate::Rows { label, r, .. } => format!("{label} (rows, r = {})", format_rat(r)),
            SupportPredicate::Pieces { label, pieces, .. } => format!("{label} ({} pieces)", pieces.len()),
            SupportPredicate::Intersection(parts) => parts
                .iter()
                .map(|p| p.describe())
                .collect::<Vec<_>>()
                .join(" and "),
        }
    }

    /// Pieces of a piece predicate, or of the first piece predicate inside an
    /// intersection.
    pub fn piece_list(&self) -> Option<&[Vec<usize>]> {
        match self {
            SupportPredicate::Pieces { pieces, .. } => Some(pieces),
            SupportPredicate::Intersection(parts) => parts.iter().find_map(|p| p.piece_list()),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OffendingBlock {
    pub row: usize,
    pub col: usize,
    pub norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Membership {
    pub predicate: String,
    pub ok: bool,
    pub violations: usize,
    pub worst: Option<OffendingBlock>,
}

/// Blocks outside the predicate whose norm exceeds `tol` are violations.
pub fn membership(op: &BandedOperator, pred: &SupportPredicate, tol: f64) -> Membership {
    let space = op.space();
    let mut violations = 0;
    let mut worst: Option<OffendingBlock> = None;
    for ((x, y), b) in op.blocks() {
        if pred.contains(space, x, y) {
            continue;
        }
        let norm = dense_norm(b);
        if norm > tol {
            violations += 1;
        }
        if worst.as_ref().is_none_or(|w| norm > w.norm) {
            worst = Some(OffendingBlock { row: x, col: y, norm });
        }
    }
    Membership {
        predicate: pred.describe(),
        ok: violations == 0,
        violations,
        worst,
    }
}

pub fn require_membership(op: &BandedOperator, pred: &SupportPredicate, tol: f64, what: &str) -> Result<Membership> {
    let m = membership(op, pred, tol);
    if m.ok {
        return Ok(m);
    }
    let w = m.worst.clone().expect("a violation has a witness");
    Err(Error::SupportViolation {
        what: what.into(),
        predicate: m.predicate,
        row: w.row,
        col: w.col,
        norm: w.norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::CMat;
    use crate::metric::{rat, SpaceSpec};
    use std::sync::Arc;

    #[test]
    fn rows_and_pieces() {
        let s = Arc::new(FiniteMetricSpace::generate(&SpaceSpec::Path { n: 8 }).unwrap());
        let rows = SupportPredicate::rows("Δ", vec![true, true, true, false, false, false, false, false], rat(1));
        assert!(rows.contains(&s, 2, 3));
        assert!(!rows.contains(&s, 3, 2));
        assert!(!rows.contains(&s, 0, 2));
        let pieces = SupportPredicate::pieces("N", 8, vec![vec![0, 1, 2], vec![2, 3, 4]]);
        assert!(pieces.contains(&s, 2, 4));
        assert!(!pieces.contains(&s, 1, 3));
        let both = pieces.clone().and(SupportPredicate::Propagation(rat(1)));
        assert!(!both.contains(&s, 2, 4));

        let one = CMat::identity(1);
        let op = BandedOperator::from_blocks(s.clone(), CMat::identity(1), vec![((1, 3), one.scale(0.5.into()))]).unwrap();
        let m = membership(&op, &pieces, 0.0);
        assert!(!m.ok);
        assert_eq!(m.worst.unwrap().row, 1);
        let m = membership(&op, &pieces, 0.6);
        assert!(m.ok);
    }
}
