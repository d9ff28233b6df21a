use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qkt_cli::config::{Geometry, RatArg, SpaceArg, Suite, SuiteRun};
use qkt_cli::{replay, run, CliError, ExperimentConfig, InstanceFile, Report};
use qkt_core::{annular_two_coloring, verify_cover, FiniteMetricSpace};

#[derive(Parser)]
#[command(name = "qkt", version, about = "Quantitative K-theory experiments on finite metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a metric space.
    Space {
        #[command(subcommand)]
        action: SpaceAction,
    },
    /// Check cover certificates.
    Cover {
        #[command(subcommand)]
        action: CoverAction,
    },
    /// Run one property suite from flags.
    Verify {
        suite: Suite,
        #[command(flatten)]
        geometry: GeometryArgs,
        #[command(flatten)]
        common: Common,
        /// Rotations per generated unitary; 0 gives the identity.
        #[arg(long)]
        rotations: Option<usize>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Run an experiment config.
    Run {
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Re-run a serialized instance.
    Replay {
        instance: PathBuf,
        /// Directory for report.json and residuals.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum SpaceAction {
    /// Print the points and distance matrix as JSON.
    Gen {
        #[arg(long)]
        space: SpaceArg,
    },
}

#[derive(Subcommand)]
enum CoverAction {
    /// Verify the annular two-coloring around a basepoint.
    Verify {
        #[arg(long)]
        space: SpaceArg,
        /// Annulus width.
        #[arg(long = "big-r")]
        big_r: RatArg,
        /// Disjointness radius to certify; defaults to the annulus width.
        #[arg(long)]
        r: Option<RatArg>,
        #[arg(long, default_value_t = 0)]
        basepoint: usize,
    },
}

#[derive(Args)]
struct GeometryArgs {
    /// `path:N`, `cycle:N`, `grid:RxC` or `tree:BxD`.
    #[arg(long)]
    space: Option<SpaceArg>,
    #[arg(long = "big-r")]
    big_r: Option<RatArg>,
    #[arg(long)]
    r: Option<RatArg>,
    #[arg(long)]
    s: Option<RatArg>,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Comma separated eps grid.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    /// Directory for report.json, residuals.csv and failing instances.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn apply(&self, config: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(eps) = &self.eps {
            config.eps = eps.clone();
            for s in &mut config.suites {
                s.eps = None;
            }
        }
        if let Some(n) = self.samples {
            config.samples = n;
            for s in &mut config.suites {
                s.samples = None;
            }
        }
    }
}

fn geometry(suite: Suite, args: &GeometryArgs) -> Geometry {
    let mut g = suite.default_geometry();
    if let Some(space) = &args.space {
        g.space = space.0.clone();
    }
    if let Some(v) = args.big_r {
        g.big_r = Some(v.0);
    }
    if let Some(v) = args.r {
        g.r = v.0;
    }
    if let Some(v) = args.s {
        g.s = Some(v.0);
    }
    g
}

fn finish(report: &Report, out: Option<&PathBuf>) -> Result<ExitCode, CliError> {
    if let Some(dir) = out {
        report.write_to(dir)?;
    }
    print_summary(report)?;
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

/// Prints to stdout; a closed pipe is not an error.
fn emit(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.write_all(b"\n")) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn print_summary(report: &Report) -> Result<(), CliError> {
    let mut text = String::new();
    for s in &report.suites {
        let verdict = if s.pass { "pass" } else { "FAIL" };
        let _ = writeln!(text, "{:<9} {:>5} instances  {verdict}", s.suite.name(), s.instances.len());
        for c in &s.summary {
            let ratio = c.max_ratio.map(|r| format!("  max value/ceiling {r:.4}")).unwrap_or_default();
            let _ = writeln!(text, "  {:<20} {:>3} failed  max {:.3e}{ratio}", c.check, c.failures, c.max_value);
        }
    }
    if let Some(file) = &report.aborted {
        let reason = file.result.as_ref().and_then(|r| r.error.clone()).unwrap_or_else(|| "bound violated".into());
        let _ = writeln!(text, "aborted at {} instance {}: {reason}", file.instance.suite, file.instance.index);
    }
    emit(text.trim_end())
}

fn execute(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Space {
            action: SpaceAction::Gen { space },
        } => {
            let s = FiniteMetricSpace::generate(&space.0).map_err(|e| CliError::Config(e.to_string()))?;
            emit(&serde_json::to_string_pretty(&s)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Cover {
            action: CoverAction::Verify { space, big_r, r, basepoint },
        } => {
            let s = FiniteMetricSpace::generate(&space.0).map_err(|e| CliError::Config(e.to_string()))?;
            if basepoint >= s.len() {
                return Err(CliError::Config(format!("basepoint {basepoint} is outside the space")));
            }
            let families = annular_two_coloring(&s, basepoint, big_r.0).map_err(|e| CliError::Config(e.to_string()))?;
            match verify_cover(&s, &families, r.map_or(big_r.0, |r| r.0)) {
                Ok(cert) => {
                    emit(&serde_json::to_string_pretty(&cert)?)?;
                    Ok(ExitCode::SUCCESS)
                }
                Err(v) => {
                    emit(&serde_json::to_string_pretty(&v)?)?;
                    eprintln!("cover violation: {v}");
                    Ok(ExitCode::from(1))
                }
            }
        }
        Command::Verify {
            suite,
            geometry: g,
            common,
            rotations,
            steps,
        } => {
            let mut run_cfg = SuiteRun::new(suite);
            run_cfg.geometries = Some(vec![geometry(suite, &g)]);
            run_cfg.rotations = rotations;
            run_cfg.steps = steps;
            let mut config = ExperimentConfig::new(0, vec![run_cfg]);
            config.samples = 10;
            common.apply(&mut config);
            config.validate()?;
            finish(&run(&config)?, common.out.as_ref())
        }
        Command::Run { config, common } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            common.apply(&mut cfg);
            cfg.validate()?;
            finish(&run(&cfg)?, common.out.as_ref())
        }
        Command::Replay { instance, out } => {
            let file = InstanceFile::load(&instance)?;
            let report = replay(&file);
            if let Some(recorded) = &file.result {
                let same = report.suites[0].instances[0] == *recorded;
                emit(if same { "replay matches the recorded result" } else { "replay differs from the recorded result" })?;
            }
            finish(&report, out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
