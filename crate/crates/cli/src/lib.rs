//! Run configuration and command implementations behind the `movsurf` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use movsurf::geometry::IdentityRecord;
use movsurf::io::{encode_snapshot, SnapshotHeader};
use movsurf::landau::{run_flow, FlowConfig, Snapshot};
use movsurf::suites::{fd_order_study, laplace_order_study, run_suite, thinfilm_study, StudyReport, Suite, Tolerances};
use movsurf::thinfilm::Extension;
use movsurf::{scenario, Error};
use serde::{Deserialize, Serialize};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "MOVSURF_OUTPUT_DIR";

pub const DEFAULT_OUTPUT_DIR: &str = "movsurf-out";

/// Residual allowed for the decomposition check along conforming flows.
pub const FLOW_CHECK_TOL: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    #[default]
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergeKind {
    Fd,
    Thinfilm,
    Laplace,
}

fn default_events() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Verify {
        suite: Suite,
        #[serde(default = "default_events")]
        events: usize,
    },
    Flow(FlowConfig),
    Converge {
        kind: ConvergeKind,
        #[serde(default)]
        steps: Option<usize>,
        #[serde(default = "default_extension")]
        extension: Extension,
    },
}

fn default_extension() -> Extension {
    Extension::Constant
}

fn default_output_dir() -> PathBuf {
    PathBuf::from(DEFAULT_OUTPUT_DIR)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub scenario: Option<String>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: Format,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            scenario: None,
            seed: None,
            tolerances: Tolerances::default(),
            output_dir: default_output_dir(),
            format: Format::Json,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("run config: {e}")))?;
        Ok(cfg)
    }

    /// Fills defaults that depend on the command and checks the invariants.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        match &mut self.command {
            Command::Verify { events, .. } => {
                if self.scenario.is_none() {
                    return Err(CliError::Usage("verify needs a scenario".into()));
                }
                if *events == 0 {
                    return Err(CliError::Usage("events must be positive".into()));
                }
            }
            Command::Flow(flow) => {
                flow.validate()?;
                match &self.scenario {
                    Some(s) if *s != flow.scenario => {
                        return Err(CliError::Usage(format!("scenario '{s}' conflicts with flow scenario '{}'", flow.scenario)))
                    }
                    _ => self.scenario = Some(flow.scenario.clone()),
                }
            }
            Command::Converge { kind, steps, .. } => {
                let (default_scenario, default_steps) = match kind {
                    ConvergeKind::Fd => ("torus-static", 3),
                    ConvergeKind::Laplace => ("torus-static", 3),
                    ConvergeKind::Thinfilm => ("sphere-expanding", 4),
                };
                self.scenario.get_or_insert_with(|| default_scenario.into());
                let n = *steps.get_or_insert(default_steps);
                if !(2..=8).contains(&n) {
                    return Err(CliError::Usage(format!("steps must lie in 2..=8, got {n}")));
                }
            }
        }
        if !matches!(self.command, Command::Flow(_)) && self.seed.is_none() {
            return Err(CliError::Usage("a seed is required for randomized suites".into()));
        }
        scenario(self.scenario.as_deref().unwrap_or_default())?;
        Ok(self)
    }

    /// Applies the environment override of the output directory.
    pub fn with_env_output(mut self) -> Self {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            self.output_dir = PathBuf::from(dir);
        }
        self
    }
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Stencil { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

/// Outcome of a command: pass flag, written files and a short summary for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    config: serde_json::Value,
    pass: bool,
    identities: &'a [IdentityRecord],
}

#[derive(Serialize)]
struct ConvergeReport<'a> {
    config: serde_json::Value,
    pass: bool,
    studies: &'a [StudyReport],
}

#[derive(Serialize)]
struct FlowReport {
    config: serde_json::Value,
    pass: bool,
    steps: usize,
    initial_energy: f64,
    final_energy: f64,
    max_decomposition_residual: f64,
    decomposition_checks: usize,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Usage(format!("output directory {}: {e}", dir.display())))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::Usage(format!("writing {}: {e}", path.display())))?;
    Ok(path)
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Resolved config as embedded in reports; the output location is not part of the run.
fn report_config(cfg: &RunConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("config serializes");
    if let Some(m) = v.as_object_mut() {
        m.remove("output_dir");
    }
    v
}

fn config_comment(cfg: &RunConfig) -> String {
    format!("# config: {}\n", report_config(cfg))
}

/// Dispatches a resolved configuration.
pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match &cfg.command {
        Command::Verify { suite, events } => cmd_verify(cfg, *suite, *events),
        Command::Flow(flow) => cmd_flow(cfg, flow),
        Command::Converge { kind, steps, extension } => cmd_converge(cfg, *kind, steps.unwrap_or(3), *extension),
    }
}

pub fn cmd_verify(cfg: &RunConfig, suite: Suite, events: usize) -> Result<Outcome, CliError> {
    let name = cfg.scenario.as_deref().unwrap_or_default();
    let surface = scenario(name)?;
    let rep = run_suite(&surface, suite, events, cfg.seed.unwrap_or_default(), &cfg.tolerances)?;
    let pass = rep.pass();
    let file = match cfg.format {
        Format::Json => {
            write_file(&cfg.output_dir, "verify.json", &to_json(&VerifyReport { config: report_config(cfg), pass, identities: &rep.records }))?
        }
        Format::Csv => {
            let mut s = config_comment(cfg);
            s.push_str("identity,residual,tol,pass\n");
            for r in &rep.records {
                let _ = writeln!(s, "{},{:e},{:e},{}", r.identity_name, r.residual, r.tol, r.pass);
            }
            write_file(&cfg.output_dir, "verify.csv", &s)?
        }
    };
    let failed: Vec<&str> = rep.records.iter().filter(|r| !r.pass).map(|r| r.identity_name.as_str()).collect();
    let mut summary = format!(
        "{name}: {} identities, max residual {:.3e}, {}",
        rep.records.len(),
        rep.max_residual(),
        if pass { "pass" } else { "FAIL" }
    );
    if !failed.is_empty() {
        let _ = write!(summary, " ({})", failed.join(", "));
    }
    Ok(Outcome { pass, files: vec![file], summary })
}

fn snapshot_file(dir: &Path, flow: &FlowConfig, snap: &Snapshot, name: &str) -> Result<PathBuf, CliError> {
    let text = encode_snapshot(&SnapshotHeader::new(flow, snap), &snap.values)?;
    write_file(dir, name, &text)
}

pub fn cmd_flow(cfg: &RunConfig, flow: &FlowConfig) -> Result<Outcome, CliError> {
    let tr = run_flow(flow)?;
    let mut files = vec![write_file(&cfg.output_dir, "energy.csv", &tr.energy_csv())?];
    for snap in &tr.snapshots {
        files.push(snapshot_file(&cfg.output_dir, flow, snap, &format!("snapshot_{:06}.csv", snap.step))?);
    }
    files.push(snapshot_file(&cfg.output_dir, flow, &tr.final_state, "final.csv")?);
    let max_check = tr.max_check_residual();
    let pass = max_check <= FLOW_CHECK_TOL;
    let initial_energy = tr.records.first().map_or(0.0, |r| r.energy_total);
    let final_energy = tr.records.last().map_or(0.0, |r| r.energy_total);
    let report = FlowReport {
        config: report_config(cfg),
        pass,
        steps: flow.steps(),
        initial_energy,
        final_energy,
        max_decomposition_residual: max_check,
        decomposition_checks: tr.checks.len(),
    };
    files.push(write_file(&cfg.output_dir, "flow.json", &to_json(&report))?);
    let summary = format!(
        "{} steps, energy {initial_energy:.6e} -> {final_energy:.6e}, {}",
        flow.steps(),
        if pass { "pass" } else { "FAIL" }
    );
    Ok(Outcome { pass, files, summary })
}

pub fn cmd_converge(cfg: &RunConfig, kind: ConvergeKind, steps: usize, extension: Extension) -> Result<Outcome, CliError> {
    let surface = scenario(cfg.scenario.as_deref().unwrap_or_default())?;
    let seed = cfg.seed.unwrap_or_default();
    let studies = match kind {
        ConvergeKind::Fd => vec![fd_order_study(&surface, steps, seed)?],
        ConvergeKind::Laplace => vec![laplace_order_study(&surface, steps)?],
        ConvergeKind::Thinfilm => thinfilm_study(&surface, steps, seed, extension)?,
    };
    let pass = studies.iter().all(|s| s.pass);
    let mut table = String::from("study,scenario,step,param,error,fitted_order\n");
    for s in &studies {
        let order = s.fitted_order.map_or_else(|| "exact".to_string(), |p| format!("{p:.4}"));
        for (k, (p, e)) in s.param.iter().zip(&s.error).enumerate() {
            let _ = writeln!(table, "{},{},{k},{p:e},{e:e},{order}", s.study, s.scenario);
        }
    }
    let file = match cfg.format {
        Format::Csv => write_file(&cfg.output_dir, "converge.csv", &(config_comment(cfg) + &table))?,
        Format::Json => write_file(&cfg.output_dir, "converge.json", &to_json(&ConvergeReport { config: report_config(cfg), pass, studies: &studies }))?,
    };
    Ok(Outcome { pass, files: vec![file], summary: table })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_config_round_trip() {
        let text = r#"{"command": {"verify": {"suite": "geometry"}}, "scenario": "plane-static", "seed": 4}"#;
        let cfg = RunConfig::from_json(text).unwrap().resolve().unwrap();
        assert_eq!(cfg.command, Command::Verify { suite: Suite::Geometry, events: 20 });
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs_are_usage_errors() {
        let cases = [
            r#"{"command": {"verify": {"suite": "geometry"}}, "scenario": "plane-static"}"#,
            r#"{"command": {"verify": {"suite": "geometry"}}, "scenario": "klein-bottle", "seed": 1}"#,
            r#"{"command": {"converge": {"kind": "fd", "steps": 1}}, "seed": 1}"#,
            r#"{"command": {"verify": {"suite": "geometry"}}, "seed": 1, "extra": 2}"#,
        ];
        for c in cases {
            let err = RunConfig::from_json(c).and_then(|c| c.resolve()).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{c}");
        }
    }
}
