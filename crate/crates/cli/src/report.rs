use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, ResolvedSuite, Suite};
use crate::suites::{run_instance, InstanceResult, InstanceSpec};
use crate::{CliError, CliResult};

pub const REPORT_SCHEMA: &str = "qkt-report/1";
pub const INSTANCE_SCHEMA: &str = "qkt-instance/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub check: String,
    pub count: usize,
    pub failures: usize,
    pub max_value: f64,
    /// Largest and mean `value / ceiling`; absent for flags.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub instances: Vec<InstanceResult>,
    pub summary: Vec<CheckSummary>,
    pub errors: usize,
    pub pass: bool,
}

impl SuiteReport {
    fn new(suite: Suite, instances: Vec<InstanceResult>) -> Self {
        let mut by_check: BTreeMap<&str, Vec<&crate::suites::Check>> = BTreeMap::new();
        for inst in &instances {
            for c in &inst.checks {
                by_check.entry(&c.name).or_default().push(c);
            }
        }
        let summary = by_check
            .into_iter()
            .map(|(name, checks)| {
                let ratios: Vec<f64> = checks.iter().filter_map(|c| c.ratio()).collect();
                CheckSummary {
                    check: name.into(),
                    count: checks.len(),
                    failures: checks.iter().filter(|c| !c.pass).count(),
                    max_value: checks.iter().map(|c| c.value).fold(f64::NEG_INFINITY, f64::max),
                    max_ratio: (!ratios.is_empty()).then(|| ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
                    mean_ratio: (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64),
                }
            })
            .collect();
        let errors = instances.iter().filter(|i| i.error.is_some()).count();
        let pass = instances.iter().all(|i| i.pass);
        Self {
            suite,
            instances,
            summary,
            errors,
            pass,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &InstanceResult> {
        self.instances.iter().filter(|i| !i.pass)
    }
}

/// A self-contained instance for `replay`, with the result it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub schema: String,
    pub instance: InstanceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<InstanceResult>,
}

impl InstanceFile {
    pub fn new(instance: InstanceSpec, result: Option<InstanceResult>) -> Self {
        Self {
            schema: INSTANCE_SCHEMA.into(),
            instance,
            result,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let file: Self = crate::parse_json(&text)?;
        if file.schema != INSTANCE_SCHEMA {
            return Err(CliError::Schema(format!("schema: expected {INSTANCE_SCHEMA:?}, found {:?}", file.schema)));
        }
        Ok(file)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    /// Seconds since the Unix epoch; ignored by [`Report::canonical_json`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    pub seed: u64,
    pub suites: Vec<SuiteReport>,
    /// The first failing instance of the suite that stopped the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aborted: Option<InstanceFile>,
    pub pass: bool,
}

impl Report {
    fn new(seed: u64, suites: Vec<SuiteReport>, aborted: Option<InstanceFile>) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
        let pass = aborted.is_none() && suites.iter().all(|s| s.pass);
        Self {
            schema: REPORT_SCHEMA.into(),
            timestamp,
            seed,
            suites,
            aborted,
            pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// The report without its timestamp, for comparing runs.
    pub fn canonical_json(&self) -> String {
        let mut copy = self.clone();
        copy.timestamp = None;
        copy.to_json()
    }

    pub fn suite(&self, suite: Suite) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.suite == suite)
    }

    /// One row per check: suite, index, space, eps, check, value, ceiling,
    /// ratio, pass.
    pub fn write_csv<W: Write>(&self, out: W) -> CliResult<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["suite", "index", "space", "eps", "check", "value", "ceiling", "ratio", "pass"])?;
        for s in &self.suites {
            for inst in &s.instances {
                for c in &inst.checks {
                    w.write_record([
                        s.suite.name().to_string(),
                        inst.index.to_string(),
                        inst.space.clone(),
                        inst.eps.to_string(),
                        c.name.clone(),
                        c.value.to_string(),
                        c.ceiling.to_string(),
                        c.ratio().map(|r| r.to_string()).unwrap_or_default(),
                        c.pass.to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `report.json`, `residuals.csv` and, after an abort,
    /// `failing-instance.json` into `dir`.
    pub fn write_to(&self, dir: &Path) -> CliResult<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json())?;
        self.write_csv(std::fs::File::create(dir.join("residuals.csv"))?)?;
        if let Some(file) = &self.aborted {
            std::fs::write(dir.join("failing-instance.json"), serde_json::to_string_pretty(file)?)?;
        }
        Ok(())
    }
}

/// Instance `i` uses geometry `i mod G` and eps `⌊i / G⌋ mod E`.
pub fn expand(seed: u64, suite: &ResolvedSuite) -> Vec<InstanceSpec> {
    let g = suite.geometries.len();
    let e = suite.eps.len();
    (0..suite.samples)
        .map(|i| InstanceSpec {
            suite: suite.suite,
            geometry: suite.geometries[i % g].clone(),
            eps: suite.eps[(i / g) % e],
            seed,
            index: i as u64,
            rotations: suite.rotations,
            steps: suite.steps,
        })
        .collect()
}

/// Runs the selected suites in order. Instances run in parallel and are
/// collected by index; a suite with a failing instance stops the run.
pub fn run(config: &ExperimentConfig) -> CliResult<Report> {
    config.validate()?;
    let mut suites = Vec::new();
    let mut aborted = None;
    for suite in config.resolve() {
        let specs = expand(config.seed, &suite);
        let results: Vec<InstanceResult> = specs.par_iter().map(run_instance).collect();
        let report = SuiteReport::new(suite.suite, results);
        if let Some(bad) = report.failures().next() {
            let spec = specs[bad.index as usize].clone();
            aborted = Some(InstanceFile::new(spec, Some(bad.clone())));
        }
        suites.push(report);
        if aborted.is_some() {
            break;
        }
    }
    Ok(Report::new(config.seed, suites, aborted))
}

/// Re-runs one serialized instance.
pub fn replay(file: &InstanceFile) -> Report {
    let result = run_instance(&file.instance);
    Report::new(file.instance.seed, vec![SuiteReport::new(file.instance.suite, vec![result])], None)
}
