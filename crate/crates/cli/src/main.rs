use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use degflow_cli::{
    batch_exit_code, builtin_names, collect_reports, list_builtin_scenarios, output_root, reference_page,
    resolve_scenario, run_batch, summarize,
};

#[derive(Parser)]
#[command(name = "degflow", version, about = "Run degflow scenarios and inspect their reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run scenario files or bundled scenarios by name.
    Run {
        #[arg(required_unless_present = "all")]
        scenarios: Vec<String>,
        /// Artifact root (default: $DEGFLOW_OUTPUT_DIR, else ./runs).
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Worker threads for the batch.
        #[arg(short, long)]
        jobs: Option<usize>,
        /// Run every bundled scenario.
        #[arg(long)]
        all: bool,
    },
    /// List bundled scenarios.
    List {
        /// Print the configuration reference instead.
        #[arg(long)]
        reference: bool,
        /// Print the TOML of one bundled scenario.
        #[arg(long)]
        show: Option<String>,
    },
    /// Summarize the reports in a run directory or artifact root.
    Report { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(match cli.command {
        Command::Run {
            scenarios,
            out,
            jobs,
            all,
        } => run(scenarios, out, jobs, all),
        Command::List { reference, show } => list(reference, show),
        Command::Report { dir } => match collect_reports(&dir) {
            Ok(reports) => {
                print!("{}", summarize(&reports));
                u8::from(reports.iter().any(|(_, r)| !r.passed))
            }
            Err(e) => {
                eprintln!("error: {e}");
                2
            }
        },
    })
}

fn run(mut names: Vec<String>, out: Option<PathBuf>, jobs: Option<usize>, all: bool) -> u8 {
    if all {
        names = builtin_names().map(String::from).collect();
    }
    let mut batch = Vec::new();
    for n in &names {
        match resolve_scenario(n) {
            Ok(s) => batch.push(s),
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        }
    }
    let root = output_root(out.as_deref());
    let results = match run_batch(&batch, &root, jobs) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    for (name, r) in &results {
        match r {
            Ok(o) => {
                let verdict = if o.report.passed { "PASS" } else { "FAIL" };
                println!("{verdict}  {name}  {:.2}s  {}", o.elapsed.as_secs_f64(), o.dir.display());
                for c in o.report.failing() {
                    println!("      failed check: {} {}", c.name, c.details);
                }
            }
            Err(e) => eprintln!("error: {name}: {e}"),
        }
    }
    batch_exit_code(&results)
}

fn list(reference: bool, show: Option<String>) -> u8 {
    if reference {
        print!("{}", reference_page());
        return 0;
    }
    if let Some(name) = show {
        return match degflow_cli::catalog::builtin_source(&name) {
            Some(text) => {
                print!("{text}");
                0
            }
            None => {
                eprintln!("error: no bundled scenario named `{name}`");
                2
            }
        };
    }
    match list_builtin_scenarios() {
        Ok(all) => {
            for s in all {
                println!("{:<30} {:<18} {}", s.name, s.experiment.kind(), s.anchor);
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
