//! Finite metric spaces with exact rational distances, and covers by
//! uniformly bounded, well-separated families.

use std::collections::VecDeque;
use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};

pub type Rat = Ratio<i64>;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n)
}

pub fn rat_to_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Parses `"3"`, `"5/2"` or a terminating decimal such as `"2.75"`.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("not a rational number: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rat::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let den = 10i64.pow(frac.len() as u32);
        let f: i64 = frac.parse().map_err(|_| bad())?;
        let mag = int.abs() * den + f;
        return Ok(Rat::new(if negative { -mag } else { mag }, den));
    }
    s.parse::<i64>().map(Rat::from_integer).map_err(|_| bad())
}

pub fn format_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Serde adapter writing rationals as strings like `"5/2"`.
pub mod rat_string {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rat, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Int(i64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Int(n) => Ok(rat(n)),
            Repr::Str(s) => parse_rat(&s).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    Path { n: usize },
    Cycle { n: usize },
    /// Point `(row, col)` has index `row * cols + col`.
    Grid { rows: usize, cols: usize },
    /// Complete rooted tree, root 0, children numbered breadth-first.
    Tree { branching: usize, depth: usize },
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::Path { n } => write!(f, "path({n})"),
            SpaceSpec::Cycle { n } => write!(f, "cycle({n})"),
            SpaceSpec::Grid { rows, cols } => write!(f, "grid({rows}x{cols})"),
            SpaceSpec::Tree { branching, depth } => write!(f, "tree({branching},{depth})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteMetricSpace {
    label: String,
    points: Vec<u64>,
    dist: Vec<Rat>,
}

#[derive(Serialize, Deserialize)]
struct SpaceFile {
    label: String,
    points: Vec<u64>,
    distances: Vec<Vec<String>>,
}

impl Serialize for FiniteMetricSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.len();
        SpaceFile {
            label: self.label.clone(),
            points: self.points.clone(),
            distances: (0..n)
                .map(|i| (0..n).map(|j| format_rat(&self.d(i, j))).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteMetricSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = SpaceFile::deserialize(d)?;
        let rows = file
            .distances
            .iter()
            .map(|row| row.iter().map(|s| parse_rat(s)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        FiniteMetricSpace::from_matrix(file.label, file.points, rows).map_err(serde::de::Error::custom)
    }
}

impl FiniteMetricSpace {
    /// Validates all metric axioms, including the triangle inequality.
    pub fn from_matrix(label: impl Into<String>, points: Vec<u64>, rows: Vec<Vec<Rat>>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidMetric("the space has no points".into()));
        }
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidMetric(format!("distance matrix is not {n}x{n}")));
        }
        let mut ids = points.clone();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidMetric("point identifiers are not distinct".into()));
        }
        let space = Self {
            label: label.into(),
            points,
            dist: rows.into_iter().flatten().collect(),
        };
        space.check_axioms()?;
        Ok(space)
    }

    pub fn generate(spec: &SpaceSpec) -> Result<Self> {
        let (n, edges): (usize, Vec<(usize, usize)>) = match *spec {
            SpaceSpec::Path { n } => (n, (1..n).map(|i| (i - 1, i)).collect()),
            // Cycles on one or two points degenerate to paths.
            SpaceSpec::Cycle { n } if n < 3 => (n, (1..n).map(|i| (i - 1, i)).collect()),
            SpaceSpec::Cycle { n } => (n, (0..n).map(|i| (i, (i + 1) % n)).collect()),
            SpaceSpec::Grid { rows, cols } => {
                let mut e = Vec::new();
                for r in 0..rows {
                    for c in 0..cols {
                        let i = r * cols + c;
                        if c + 1 < cols {
                            e.push((i, i + 1));
                        }
                        if r + 1 < rows {
                            e.push((i, i + cols));
                        }
                    }
                }
                (rows * cols, e)
            }
            SpaceSpec::Tree { branching, depth } => {
                if branching == 0 {
                    return Err(Error::InvalidParameter("tree branching must be positive".into()));
                }
                let mut e = Vec::new();
                let mut level = vec![0usize];
                let mut next_id = 1;
                for _ in 0..depth {
                    let mut next = Vec::new();
                    for &p in &level {
                        for _ in 0..branching {
                            e.push((p, next_id));
                            next.push(next_id);
                            next_id += 1;
                        }
                    }
                    level = next;
                }
                (next_id, e)
            }
        };
        if n == 0 {
            return Err(Error::InvalidParameter(format!("{spec} has no points")));
        }
        Self::from_graph(spec.to_string(), n, &edges)
    }

    /// Shortest-path metric of a connected unweighted graph.
    pub fn from_graph(label: impl Into<String>, n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidMetric(format!("edge ({a}, {b}) out of range")));
            }
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut dist = vec![Rat::zero(); n * n];
        let mut hops = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            hops.iter_mut().for_each(|h| *h = usize::MAX);
            hops[src] = 0;
            queue.push_back(src);
            while let Some(x) = queue.pop_front() {
                for &y in &adj[x] {
                    if hops[y] == usize::MAX {
                        hops[y] = hops[x] + 1;
                        queue.push_back(y);
                    }
                }
            }
            for (dst, &h) in hops.iter().enumerate() {
                if h == usize::MAX {
                    return Err(Error::InvalidMetric(format!("graph is disconnected ({src} cannot reach {dst})")));
                }
                dist[src * n + dst] = rat(h as i64);
            }
        }
        Ok(Self {
            label: label.into(),
            points: (0..n as u64).collect(),
            dist,
        })
    }

    pub fn check_axioms(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            if !self.d(i, i).is_zero() {
                return Err(Error::InvalidMetric(format!("d({i},{i}) is not zero")));
            }
            for j in 0..n {
                let d = self.d(i, j);
                if i != j && !d.is_positive() {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) = {d} is not positive")));
                }
                if d != self.d(j, i) {
                    return Err(Error::InvalidMetric(format!("d({i},{j}) != d({j},{i})")));
                }
            }
        }
        for k in 0..n {
            for i in 0..n {
                let dik = self.d(i, k);
                for j in 0..n {
                    if self.d(i, j) > dik + self.d(k, j) {
                        return Err(Error::InvalidMetric(format!(
                            "triangle inequality fails for ({i}, {k}, {j})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[u64] {
        &self.points
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> Rat {
        self.dist[i * self.points.len() + j]
    }

    pub fn diameter(&self) -> Rat {
        self.dist.iter().copied().max().unwrap_or_else(Rat::zero)
    }

    /// Diameter of a subset, with a pair realizing it.
    pub fn subset_diameter(&self, set: &[usize]) -> (Rat, Option<(usize, usize)>) {
        let mut best = (Rat::zero(), None);
        for (a, &x) in set.iter().enumerate() {
            for &y in &set[a + 1..] {
                let d = self.d(x, y);
                if best.1.is_none() || d > best.0 {
                    best = (d, Some((x, y)));
                }
            }
        }
        best
    }

    /// `{x : d(x, set) < s}`; strict, so `s = 0` gives the empty set.
    pub fn open_thickening(&self, set: &[usize], s: Rat) -> Vec<usize> {
        (0..self.len())
            .filter(|&x| set.iter().any(|&y| self.d(x, y) < s))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverFamily {
    pub pieces: Vec<Vec<usize>>,
    /// Distinct pieces are at least this far apart.
    #[serde(with = "rat_string")]
    pub r_disjoint: Rat,
    #[serde(with = "rat_string")]
    pub max_diameter: Rat,
}

impl CoverFamily {
    pub fn union(&self, n: usize) -> Vec<bool> {
        let mut mark = vec![false; n];
        for piece in &self.pieces {
            for &x in piece {
                mark[x] = true;
            }
        }
        mark
    }
}

/// Two families of annuli around `basepoint`: family 1 takes the shells
/// `2kR <= d <= (2k+1)R`, family 2 the shells `(2k+1)R <= d <= (2k+2)R`.
pub fn annular_two_coloring(space: &FiniteMetricSpace, basepoint: usize, big_r: Rat) -> Result<[CoverFamily; 2]> {
    if basepoint >= space.len() {
        return Err(Error::InvalidParameter(format!("basepoint {basepoint} out of range")));
    }
    if !big_r.is_positive() {
        return Err(Error::InvalidParameter(format!("R = {big_r} must be positive")));
    }
    let reach = (0..space.len()).map(|x| space.d(basepoint, x)).max().unwrap_or_else(Rat::zero);
    let mut families = [Vec::new(), Vec::new()];
    let mut k = 0i64;
    loop {
        let lo = big_r * rat(k);
        if lo > reach {
            break;
        }
        let hi = lo + big_r;
        let shell: Vec<usize> = (0..space.len())
            .filter(|&x| {
                let d = space.d(basepoint, x);
                lo <= d && d <= hi
            })
            .collect();
        if !shell.is_empty() {
            families[(k % 2) as usize].push(shell);
        }
        k += 1;
    }
    let make = |pieces: Vec<Vec<usize>>| {
        let max_diameter = pieces
            .iter()
            .map(|p| space.subset_diameter(p).0)
            .max()
            .unwrap_or_else(Rat::zero);
        CoverFamily {
            pieces,
            r_disjoint: big_r,
            max_diameter,
        }
    };
    let [f1, f2] = families;
    Ok([make(f1), make(f2)])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyReport {
    /// `None` when the family has fewer than two pieces.
    pub min_gap: Option<String>,
    pub max_diameter: String,
    pub pieces: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCertificate {
    pub families: Vec<FamilyReport>,
}

#[derive(Clone, Debug, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum CoverViolation {
    #[error("point {point} is out of range")]
    PointOutOfRange { family: usize, piece: usize, point: usize },
    #[error("point {point} is not covered")]
    Uncovered { point: usize },
    #[error("family {family}: pieces {piece_a} and {piece_b} meet at distance {distance} < {required} ({x}, {y})")]
    TooClose {
        family: usize,
        piece_a: usize,
        piece_b: usize,
        x: usize,
        y: usize,
        distance: String,
        required: String,
    },
    #[error("family {family}: piece {piece} has diameter {distance} > {bound} ({x}, {y})")]
    TooWide {
        family: usize,
        piece: usize,
        x: usize,
        y: usize,
        distance: String,
        bound: String,
    },
}

/// Checks coverage, `r`-disjointness of distinct pieces within each family,
/// and each family's declared diameter bound.
pub fn verify_cover(
    space: &FiniteMetricSpace,
    families: &[CoverFamily],
    r: Rat,
) -> std::result::Result<CoverCertificate, CoverViolation> {
    let n = space.len();
    let mut covered = vec![false; n];
    for (f, fam) in families.iter().enumerate() {
        for (p, piece) in fam.pieces.iter().enumerate() {
            for &x in piece {
                if x >= n {
                    return Err(CoverViolation::PointOutOfRange { family: f, piece: p, point: x });
                }
                covered[x] = true;
            }
        }
    }
    if let Some(point) = covered.iter().position(|&c| !c) {
        return Err(CoverViolation::Uncovered { point });
    }
    let mut reports = Vec::new();
    for (f, fam) in families.iter().enumerate() {
        reports.push(check_family(space, fam, f, r)?);
    }
    Ok(CoverCertificate { families: reports })
}

/// `r`-disjointness and the diameter bound of one family.
pub fn check_family(
    space: &FiniteMetricSpace,
    fam: &CoverFamily,
    f: usize,
    r: Rat,
) -> std::result::Result<FamilyReport, CoverViolation> {
    let mut min_gap: Option<Rat> = None;
    for a in 0..fam.pieces.len() {
        for b in (a + 1)..fam.pieces.len() {
            for &x in &fam.pieces[a] {
                for &y in &fam.pieces[b] {
                    let d = space.d(x, y);
                    if d < r {
                        return Err(CoverViolation::TooClose {
                            family: f,
                            piece_a: a,
                            piece_b: b,
                            x,
                            y,
                            distance: format_rat(&d),
                            required: format_rat(&r),
                        });
                    }
                    min_gap = Some(min_gap.map_or(d, |g| g.min(d)));
                }
            }
        }
    }
    let mut widest = Rat::zero();
    for (p, piece) in fam.pieces.iter().enumerate() {
        let (d, pair) = space.subset_diameter(piece);
        if d > fam.max_diameter {
            let (x, y) = pair.expect("a positive diameter has a witness pair");
            return Err(CoverViolation::TooWide {
                family: f,
                piece: p,
                x,
                y,
                distance: format_rat(&d),
                bound: format_rat(&fam.max_diameter),
            });
        }
        widest = widest.max(d);
    }
    Ok(FamilyReport {
        min_gap: min_gap.map(|g| format_rat(&g)),
        max_diameter: format_rat(&widest),
        pieces: fam.pieces.len(),
    })
}
