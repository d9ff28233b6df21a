use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use qkt_core::metric::{format_rat, parse_rat, rat, rat_string};
use qkt_core::{annular_two_coloring, build_pair, ControlledMVPair, FiniteMetricSpace, Rat, SpaceSpec};
use serde::{Deserialize, Serialize};

use crate::{CliError, CliResult};

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    /// `‖diag(u, u*) − W(u)‖ < 3ε`
    Witness,
    /// `‖p − κ₀(p)‖ < 2ε`
    Kappa,
    Polar,
    /// `‖diag(u, I) − P₁P₂‖ < 13ε`
    Factor,
    Cia,
    Boundary,
    /// Boundaries of factorizable unitaries vanish.
    Trivial,
    Cover,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Witness,
        Suite::Kappa,
        Suite::Polar,
        Suite::Factor,
        Suite::Cia,
        Suite::Boundary,
        Suite::Trivial,
        Suite::Cover,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Witness => "witness",
            Suite::Kappa => "kappa",
            Suite::Polar => "polar",
            Suite::Factor => "factor",
            Suite::Cia => "cia",
            Suite::Boundary => "boundary",
            Suite::Trivial => "trivial",
            Suite::Cover => "cover",
        }
    }

    /// Keeps the random streams of different suites apart.
    pub(crate) fn stream(self) -> u64 {
        (Suite::ALL.iter().position(|&s| s == self).unwrap() as u64 + 1) << 40
    }

    pub fn needs_pair(self) -> bool {
        matches!(self, Suite::Factor | Suite::Cia | Suite::Boundary | Suite::Trivial)
    }

    pub fn default_geometry(self) -> Geometry {
        let cycle = |n| SpaceSpec::Cycle { n };
        match self {
            Suite::Witness => Geometry::plain(cycle(8), rat(1)),
            Suite::Kappa => Geometry::plain(cycle(10), rat(2)),
            Suite::Polar => Geometry::plain(cycle(16), rat(1)),
            Suite::Factor | Suite::Cia => Geometry::pair(cycle(32), rat(12), rat(1), Rat::new(11, 2)),
            Suite::Boundary | Suite::Trivial => Geometry::pair(cycle(64), rat(12), rat(1), Rat::new(11, 2)),
            Suite::Cover => Geometry {
                space: SpaceSpec::Path { n: 10 },
                big_r: Some(rat(3)),
                r: rat(3),
                s: None,
            },
        }
    }

    pub fn default_eps(self) -> f64 {
        match self {
            Suite::Witness | Suite::Polar => 0.05,
            Suite::Kappa => 0.1,
            _ => 0.02,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A space with the control parameters of an MV pair. `r` is also the
/// propagation of generated instances and, for covers, the disjointness
/// radius to verify.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub space: SpaceSpec,
    #[serde(default, with = "opt_rat", skip_serializing_if = "Option::is_none")]
    pub big_r: Option<Rat>,
    #[serde(default = "one", with = "rat_string")]
    pub r: Rat,
    #[serde(default, with = "opt_rat", skip_serializing_if = "Option::is_none")]
    pub s: Option<Rat>,
}

fn one() -> Rat {
    rat(1)
}

impl Geometry {
    pub fn plain(space: SpaceSpec, r: Rat) -> Self {
        Self { space, big_r: None, r, s: None }
    }

    pub fn pair(space: SpaceSpec, big_r: Rat, r: Rat, s: Rat) -> Self {
        Self {
            space,
            big_r: Some(big_r),
            r,
            s: Some(s),
        }
    }

    pub fn build_space(&self) -> CliResult<Arc<FiniteMetricSpace>> {
        Ok(Arc::new(FiniteMetricSpace::generate(&self.space)?))
    }

    pub fn big_r(&self) -> CliResult<Rat> {
        self.big_r
            .ok_or_else(|| CliError::Config(format!("{}: big_r is required", self.space)))
    }

    /// The annular pair around point 0.
    pub fn build_pair(&self) -> CliResult<ControlledMVPair> {
        let big_r = self.big_r()?;
        let s = self
            .s
            .ok_or_else(|| CliError::Config(format!("{}: s is required", self.space)))?;
        let space = self.build_space()?;
        let families = annular_two_coloring(&space, 0, big_r)?;
        Ok(build_pair(space, families, self.r, s)?)
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} r={}", self.space, format_rat(&self.r))?;
        if let Some(big_r) = &self.big_r {
            write!(f, " R={}", format_rat(big_r))?;
        }
        if let Some(s) = &self.s {
            write!(f, " s={}", format_rat(s))?;
        }
        Ok(())
    }
}

mod opt_rat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Rat>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => rat_string::serialize(r, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rat>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(with = "rat_string")] Rat);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

/// One suite in a config; unset fields fall back to the config defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteRun {
    pub suite: Suite,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometries: Option<Vec<Geometry>>,
    /// Rotation count of generated unitaries; `0` gives `u = I`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotations: Option<usize>,
    /// Homotopy path steps of generated unitaries.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

impl SuiteRun {
    pub fn new(suite: Suite) -> Self {
        Self {
            suite,
            samples: None,
            eps: None,
            geometries: None,
            rotations: None,
            steps: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Per-suite defaults apply when empty.
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Per-suite defaults apply when empty.
    #[serde(default)]
    pub geometries: Vec<Geometry>,
    pub suites: Vec<SuiteRun>,
}

fn default_samples() -> usize {
    20
}

/// A suite with every default resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct ResolvedSuite {
    pub suite: Suite,
    pub samples: usize,
    pub eps: Vec<f64>,
    pub geometries: Vec<Geometry>,
    pub rotations: Option<usize>,
    pub steps: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(seed: u64, suites: Vec<SuiteRun>) -> Self {
        Self {
            schema: CONFIG_SCHEMA,
            seed,
            samples: default_samples(),
            eps: Vec::new(),
            geometries: Vec::new(),
            suites,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: Self = crate::parse_json(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn resolve(&self) -> Vec<ResolvedSuite> {
        self.suites
            .iter()
            .map(|run| {
                let eps = run
                    .eps
                    .clone()
                    .filter(|e| !e.is_empty())
                    .or_else(|| Some(self.eps.clone()).filter(|e| !e.is_empty()))
                    .unwrap_or_else(|| vec![run.suite.default_eps()]);
                let geometries = run
                    .geometries
                    .clone()
                    .filter(|g| !g.is_empty())
                    .or_else(|| Some(self.geometries.clone()).filter(|g| !g.is_empty()))
                    .unwrap_or_else(|| vec![run.suite.default_geometry()]);
                ResolvedSuite {
                    suite: run.suite,
                    samples: run.samples.unwrap_or(self.samples),
                    eps,
                    geometries,
                    rotations: run.rotations,
                    steps: run.steps,
                }
            })
            .collect()
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema != CONFIG_SCHEMA {
            return Err(CliError::Config(format!("schema {} is not supported (expected {CONFIG_SCHEMA})", self.schema)));
        }
        if self.suites.is_empty() {
            return Err(CliError::Config("no suites selected".into()));
        }
        for run in self.resolve() {
            let name = run.suite;
            if run.samples == 0 {
                return Err(CliError::Config(format!("{name}: samples must be positive")));
            }
            if let Some(eps) = run.eps.iter().find(|&&e| !(e > 0.0 && e < 0.25)) {
                return Err(CliError::Config(format!("{name}: eps {eps} is outside (0, 1/4)")));
            }
            for g in &run.geometries {
                g.build_space()
                    .map_err(|e| CliError::Config(format!("{name}: {e}")))?;
                if name.needs_pair() {
                    g.build_pair()
                        .map_err(|e| CliError::Config(format!("{name}: {g}: {e}")))?;
                }
                if name == Suite::Cover {
                    g.big_r()?;
                }
            }
        }
        Ok(())
    }
}

/// `path:40`, `cycle:32`, `grid:4x5`, `tree:2x3` (branching × depth).
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceArg(pub SpaceSpec);

impl FromStr for SpaceArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (kind, args) = s.split_once(':').ok_or_else(|| format!("expected kind:size, got {s:?}"))?;
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("bad size {t:?} in {s:?}"));
        let two = || -> Result<(usize, usize), String> {
            let (a, b) = args.split_once('x').ok_or_else(|| format!("expected AxB in {s:?}"))?;
            Ok((num(a)?, num(b)?))
        };
        let spec = match kind {
            "path" => SpaceSpec::Path { n: num(args)? },
            "cycle" => SpaceSpec::Cycle { n: num(args)? },
            "grid" => {
                let (rows, cols) = two()?;
                SpaceSpec::Grid { rows, cols }
            }
            "tree" => {
                let (branching, depth) = two()?;
                SpaceSpec::Tree { branching, depth }
            }
            _ => return Err(format!("unknown space kind {kind:?}")),
        };
        Ok(SpaceArg(spec))
    }
}

/// Rational command-line argument such as `11/2` or `5.5`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RatArg(pub Rat);

impl FromStr for RatArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_rat(s).map(RatArg).map_err(|e| e.to_string())
    }
}
