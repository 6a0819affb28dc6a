//! Scenario runner for `degflow`: TOML scenario files, the bundled
//! catalog, and artifact directories.

pub mod catalog;
pub mod error;
pub mod runner;
pub mod scenario;

pub use catalog::{builtin, builtin_names, list_builtin_scenarios, reference_page};
pub use error::{CliError, CliResult};
pub use runner::{batch_exit_code, collect_reports, output_root, run_batch, run_scenario, summarize, RunOutcome};
pub use scenario::Scenario;

/// Loads a scenario from a path, falling back to the bundled catalog.
/// Returns the scenario and a description of its source.
pub fn resolve_scenario(arg: &str) -> CliResult<(Scenario, String)> {
    let path = std::path::Path::new(arg);
    if path.is_file() {
        return Ok((Scenario::load(path)?, path.display().to_string()));
    }
    match builtin(arg) {
        Some(sc) => Ok((sc?, format!("builtin:{arg}"))),
        None => Err(CliError::UnknownScenario(arg.to_string())),
    }
}
