//! Runs scenarios and writes their artifact directories.
//!
//! Each run owns `<root>/<name>/`:
//!
//! | file | content |
//! |---|---|
//! | `records.csv` | one row per diagnostics record |
//! | `report.json` | every check with its verdict |
//! | `schedule.json` | exponent schedule, when the experiment builds one |
//! | `manifest.json` | resolved scenario, seed, anchor |
//! | `final_u.csv` | final state of the primary trajectory |
//! | `<table>.csv` | experiment-specific tables |

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use degflow::diagnostics::{write_records_csv, RunReport};
use degflow::experiments::run_experiment;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::scenario::Scenario;

/// Environment variable naming the artifact root.
pub const OUTPUT_ENV: &str = "DEGFLOW_OUTPUT_DIR";
pub const DEFAULT_OUTPUT: &str = "runs";

pub fn output_root(explicit: Option<&Path>) -> PathBuf {
    match explicit {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUTPUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT)),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub name: String,
    pub dir: PathBuf,
    pub report: RunReport,
    pub elapsed: Duration,
}

impl RunOutcome {
    pub fn exit_code(&self) -> u8 {
        if self.report.passed {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    name: &'a str,
    anchor: &'a str,
    description: &'a str,
    experiment: &'a str,
    seed: u64,
    source: &'a str,
    version: &'a str,
    artifacts: &'a [String],
    scenario: &'a Scenario,
}

fn write(dir: &Path, file: &str, bytes: &[u8]) -> CliResult<()> {
    let path = dir.join(file);
    std::fs::write(&path, bytes).map_err(|e| CliError::io(path.display(), e))
}

fn to_bytes(f: impl FnOnce(&mut Vec<u8>) -> degflow::Result<()>, what: &str) -> CliResult<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf).map_err(|e| CliError::io(what, std::io::Error::other(e.to_string())))?;
    Ok(buf)
}

/// Runs one scenario and writes its artifacts below `root`.
pub fn run_scenario(sc: &Scenario, source: &str, root: &Path) -> CliResult<RunOutcome> {
    let input = sc.resolve()?;
    let start = Instant::now();
    let out = run_experiment(&input, &sc.experiment)?;
    let elapsed = start.elapsed();

    let dir = root.join(&sc.name);
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(dir.display(), e))?;
    let mut artifacts = Vec::new();
    let mut emit = |file: String, bytes: Vec<u8>| -> CliResult<()> {
        write(&dir, &file, &bytes)?;
        artifacts.push(file);
        Ok(())
    };

    emit(
        "records.csv".into(),
        to_bytes(|b| write_records_csv(&out.records, &out.z_exponents, b), "records.csv")?,
    )?;
    let report = serde_json::to_string_pretty(&out.report).map_err(|e| CliError::json("report.json", e))?;
    emit("report.json".into(), report.into_bytes())?;
    if let Some(s) = &out.schedule {
        emit("schedule.json".into(), s.to_json().into_bytes())?;
    }
    if let Some(u) = &out.final_u {
        emit("final_u.csv".into(), to_bytes(|b| u.write_csv(b), "final_u.csv")?)?;
    }
    for t in &out.tables {
        let file = format!("{}.csv", t.name);
        let bytes = to_bytes(|b| t.write_csv(b), &file)?;
        emit(file, bytes)?;
    }

    artifacts.push("manifest.json".into());
    let manifest = Manifest {
        name: &sc.name,
        anchor: &sc.anchor,
        description: &sc.description,
        experiment: sc.experiment.kind(),
        seed: sc.seed,
        source,
        version: env!("CARGO_PKG_VERSION"),
        artifacts: &artifacts,
        scenario: sc,
    };
    let manifest = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::json("manifest.json", e))?;
    write(&dir, "manifest.json", manifest.as_bytes())?;

    Ok(RunOutcome {
        name: sc.name.clone(),
        dir,
        report: out.report,
        elapsed,
    })
}

/// Runs scenarios on a worker pool, one run per worker. Results keep the
/// input order.
pub fn run_batch(
    scenarios: &[(Scenario, String)],
    root: &Path,
    threads: Option<usize>,
) -> CliResult<Vec<(String, CliResult<RunOutcome>)>> {
    let mut seen = HashSet::new();
    for (sc, _) in scenarios {
        if !seen.insert(sc.name.as_str()) {
            return Err(CliError::Parse {
                origin: sc.name.clone(),
                message: "two scenarios in one batch share a name and would share an output directory".into(),
            });
        }
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::io("worker pool", std::io::Error::other(e.to_string())))?;
    Ok(pool.install(|| {
        scenarios
            .par_iter()
            .map(|(sc, src)| (sc.name.clone(), run_scenario(sc, src, root)))
            .collect()
    }))
}

/// 2 if any configuration was rejected, else 1 if anything failed, else 0.
pub fn batch_exit_code(results: &[(String, CliResult<RunOutcome>)]) -> u8 {
    results
        .iter()
        .map(|(_, r)| match r {
            Ok(o) => o.exit_code(),
            Err(e) => e.exit_code(),
        })
        .max()
        .unwrap_or(0)
}

/// Reports under `dir`: the directory itself if it is a run directory,
/// otherwise its immediate subdirectories, sorted by name.
pub fn collect_reports(dir: &Path) -> CliResult<Vec<(PathBuf, RunReport)>> {
    let read = |run: &Path| -> CliResult<RunReport> {
        let path = run.join("report.json");
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::json(path.display(), e))
    };
    if dir.join("report.json").is_file() {
        return Ok(vec![(dir.to_path_buf(), read(dir)?)]);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir.display(), e))?;
    let mut runs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("report.json").is_file())
        .collect();
    runs.sort();
    if runs.is_empty() {
        return Err(CliError::io(
            dir.display(),
            std::io::Error::new(std::io::ErrorKind::NotFound, "no report.json found"),
        ));
    }
    runs.into_iter().map(|r| read(&r).map(|rep| (r, rep))).collect()
}

/// Plain-text summary of a set of reports.
pub fn summarize(reports: &[(PathBuf, RunReport)]) -> String {
    let mut s = String::new();
    for (dir, rep) in reports {
        let verdict = if rep.passed { "PASS" } else { "FAIL" };
        s.push_str(&format!("{verdict}  {}  ({}, {})\n", rep.scenario, rep.experiment, dir.display()));
        for c in &rep.checks {
            let mark = match (c.asserted, c.passed) {
                (_, true) => "ok",
                (true, false) => "FAILED",
                (false, false) => "not met (informational)",
            };
            s.push_str(&format!("    {:<40} {mark}\n", c.name));
        }
    }
    let failing = reports.iter().filter(|(_, r)| !r.passed).count();
    s.push_str(&format!("{} run(s), {} failing\n", reports.len(), failing));
    s
}
