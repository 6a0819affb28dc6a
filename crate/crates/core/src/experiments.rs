//! Initial data and the bundled numerical experiments.
//!
//! Each experiment takes a fully resolved [`ExperimentInput`], runs one or
//! more trajectories and returns an [`ExperimentOutcome`] whose report lists
//! every check with its verdict.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    check_absorbing, check_contraction, check_dissipative_decay, check_energy_law, check_entropy_law, check_mass,
    check_separation, energy_residuals, entropy_residuals, refinement_ratio, CheckOutcome, DiagnosticsRecord,
    RunReport,
};
use crate::elliptic::{degenerate_elliptic_solve, ipepa_identity_residual, mollify_initial, DegenerateOptions};
use crate::error::{Error, Result};
use crate::functionals::{dirichlet, energy, phase_metric};
use crate::grid::{fmt, mean, Grid, GridFunction};
use crate::moser::{build_schedule, is_feasible, z_norm_ladder, MoserSchedule, Phase, ScheduleOptions};
use crate::nonlinearities::ModelParams;
use crate::stepper::{run, RunOptions, Scheme, SnapshotSink, StepperConfig};

/// Relative mass drift tolerated by every run.
pub const MASS_TOLERANCE: f64 = 1e-12;
/// Balance tolerances are this multiple of `newton_tol·(1 + |quantity|)`.
pub const BALANCE_FACTOR: f64 = 10.0;

fn default_modes() -> [usize; 2] {
    [1, 0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Constant {
        value: f64,
    },
    /// `mean + amplitude·Π cos(2π k_a x_a / L_a)` over axes with `k_a > 0`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "default_modes")]
        modes: [usize; 2],
    },
    /// `floor + height·(1 + cos(2πx/L))/2`, minimal at the domain centre.
    RaisedCosine {
        floor: f64,
        height: f64,
    },
    /// `mean` plus a zero-mean uniform perturbation of size `amplitude`.
    Random {
        mean: f64,
        amplitude: f64,
        seed: Option<u64>,
    },
    /// Cell values from a `x[,y],value` CSV file.
    File {
        path: PathBuf,
    },
}

impl InitialCondition {
    pub fn build(&self, grid: Grid, seed: u64) -> Result<GridFunction> {
        let tau = 2.0 * std::f64::consts::PI;
        let u = match self {
            Self::Constant { value } => GridFunction::constant(grid, *value),
            Self::Cosine { mean, amplitude, modes } => GridFunction::from_fn(grid, |x| {
                let mut c = 1.0;
                for axis in 0..grid.dim() {
                    if modes[axis] > 0 {
                        c *= (tau * modes[axis] as f64 * x[axis] / grid.length(axis)).cos();
                    }
                }
                mean + amplitude * c
            }),
            Self::RaisedCosine { floor, height } => {
                GridFunction::from_fn(grid, |x| floor + height * 0.5 * (1.0 + (tau * x[0] / grid.length(0)).cos()))
            }
            Self::Random {
                mean: m,
                amplitude,
                seed: own,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(own.unwrap_or(seed));
                let raw: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let avg = raw.iter().sum::<f64>() / raw.len() as f64;
                GridFunction::new(grid, raw.iter().map(|r| m + amplitude * (r - avg)).collect())?
            }
            Self::File { path } => {
                let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                GridFunction::read_csv(grid, f)?
            }
        };
        if !u.is_finite() {
            return Err(Error::InvalidParameter {
                field: "initial",
                constraint: "initial datum must be finite".into(),
            });
        }
        if !(mean(&u) > 0.0) {
            return Err(Error::InvalidParameter {
                field: "initial",
                constraint: format!("initial mean must be positive, got {}", mean(&u)),
            });
        }
        Ok(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SingleRunConfig {
    /// When set, the final dissipation must fall below this fraction of the
    /// initial one.
    pub plateau_ratio: Option<f64>,
    /// Fraction of `t_final` treated as transient by the decay fit.
    pub t_min_fraction: f64,
}

impl Default for SingleRunConfig {
    fn default() -> Self {
        Self {
            plateau_ratio: None,
            t_min_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpsLadderConfig {
    /// Decreasing regularization levels; consecutive runs are compared.
    pub eps: Vec<f64>,
}

impl Default for EpsLadderConfig {
    fn default() -> Self {
        Self {
            eps: vec![1e-2, 1e-3, 1e-4, 1e-5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeparationConfig {
    pub t_min_fraction: f64,
    pub required_lift: f64,
    pub allowed_drop: f64,
    /// Dimension whose compatibility condition gates the assertions.
    pub gate_dimension: usize,
    /// Assert (true) or only report (false).
    pub assert: bool,
    pub iota: Option<f64>,
    /// Width scale of the start-time ladder; defaults to the transient.
    pub eps_time: Option<f64>,
}

impl Default for SeparationConfig {
    fn default() -> Self {
        Self {
            t_min_fraction: 0.1,
            required_lift: 10.0,
            allowed_drop: 0.01,
            gate_dimension: 3,
            assert: true,
            iota: None,
            eps_time: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AbsorbingConfig {
    pub target_energies: [f64; 2],
    /// Cosine mode of the perturbation along the first axis.
    pub mode: usize,
    pub tolerance: f64,
    pub t_min_fraction: f64,
}

impl Default for AbsorbingConfig {
    fn default() -> Self {
        Self {
            target_energies: [10.0, 1000.0],
            mode: 1,
            tolerance: 0.1,
            t_min_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractionConfig {
    /// Initial phase-metric distance.
    pub distance: f64,
    /// Cosine mode of the perturbation along the first axis.
    pub mode: usize,
    pub window: [f64; 2],
    pub max_envelope_constant: f64,
    pub divergence_bound: f64,
}

impl Default for ContractionConfig {
    fn default() -> Self {
        Self {
            distance: 1e-3,
            mode: 2,
            window: [0.1, 1.0],
            max_envelope_constant: 10.0,
            divergence_bound: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoserConfig {
    pub d: usize,
    /// Overrides of the model's `s` and `κ`.
    pub s: Option<f64>,
    pub kappa: Option<f64>,
    pub iota: Option<f64>,
    pub eps_time: f64,
    pub phase1_steps: usize,
    /// When set, the feasibility verdict must equal this.
    pub expect_feasible: Option<bool>,
}

impl Default for MoserConfig {
    fn default() -> Self {
        Self {
            d: 3,
            s: None,
            kappa: None,
            iota: None,
            eps_time: 0.1,
            phase1_steps: ScheduleOptions::default().phase1_steps,
            expect_feasible: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticIdentityConfig {
    pub pairs: usize,
    pub tolerance: f64,
    /// Degenerate solves (η ladder) run on the first `solves` pairs.
    pub solves: usize,
}

impl Default for EllipticIdentityConfig {
    fn default() -> Self {
        Self {
            pairs: 100,
            tolerance: 1e-12,
            solves: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefinementConfig {
    pub required_ratio: f64,
    /// Also require the entropy residual to shrink.
    pub entropy: bool,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        Self {
            required_ratio: 2.0,
            entropy: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Experiment {
    SingleRun(SingleRunConfig),
    EpsLadder(EpsLadderConfig),
    Separation(SeparationConfig),
    Absorbing(AbsorbingConfig),
    Contraction(ContractionConfig),
    MoserSchedule(MoserConfig),
    EllipticIdentity(EllipticIdentityConfig),
    DtRefinement(RefinementConfig),
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::SingleRun(_) => "single_run",
            Self::EpsLadder(_) => "eps_ladder",
            Self::Separation(_) => "separation",
            Self::Absorbing(_) => "absorbing",
            Self::Contraction(_) => "contraction",
            Self::MoserSchedule(_) => "moser_schedule",
            Self::EllipticIdentity(_) => "elliptic_identity",
            Self::DtRefinement(_) => "dt_refinement",
        }
    }
}

/// Everything an experiment needs, already validated.
#[derive(Debug, Clone)]
pub struct ExperimentInput {
    pub name: String,
    pub model: ModelParams,
    pub grid: Grid,
    pub stepper: StepperConfig,
    pub initial: InitialCondition,
    pub run: RunOptions,
    pub seed: u64,
}

/// An auxiliary CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub report: RunReport,
    /// Records of the primary trajectory (empty for run-free experiments).
    pub records: Vec<DiagnosticsRecord>,
    pub z_exponents: Vec<f64>,
    pub final_u: Option<GridFunction>,
    pub schedule: Option<MoserSchedule>,
    pub tables: Vec<Table>,
}

impl ExperimentOutcome {
    fn new(input: &ExperimentInput, kind: &str, checks: Vec<CheckOutcome>) -> Self {
        Self {
            report: RunReport::new(&input.name, kind, checks),
            records: Vec::new(),
            z_exponents: input.run.monitor.z_exponents.clone(),
            final_u: None,
            schedule: None,
            tables: Vec::new(),
        }
    }
}

/// Runs the experiment described by `exp` on `input`.
pub fn run_experiment(input: &ExperimentInput, exp: &Experiment) -> Result<ExperimentOutcome> {
    input.model.validate()?;
    input.stepper.validate()?;
    match exp {
        Experiment::SingleRun(c) => single_run(input, c),
        Experiment::EpsLadder(c) => eps_ladder(input, c),
        Experiment::Separation(c) => separation(input, c),
        Experiment::Absorbing(c) => absorbing(input, c),
        Experiment::Contraction(c) => contraction(input, c),
        Experiment::MoserSchedule(c) => moser_schedule(input, c),
        Experiment::EllipticIdentity(c) => elliptic_identity(input, c),
        Experiment::DtRefinement(c) => dt_refinement(input, c),
    }
}

fn records_scale(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> Option<f64>) -> f64 {
    1.0 + records.iter().filter_map(f).map(f64::abs).fold(0.0, f64::max)
}

/// Mass, energy-law and entropy-law checks every trajectory carries.
pub fn standard_checks(
    p: &ModelParams,
    cfg: &StepperConfig,
    records: &[DiagnosticsRecord],
    prefix: &str,
) -> Vec<CheckOutcome> {
    let name = |n: &str| {
        if prefix.is_empty() {
            n.to_string()
        } else {
            format!("{prefix}{n}")
        }
    };
    let mass = check_mass(records, MASS_TOLERANCE);
    let e_tol = BALANCE_FACTOR * cfg.newton_tol * records_scale(records, |r| Some(r.energy.total));
    let e = check_energy_law(records, cfg.scheme == Scheme::ConvexConcave, e_tol);
    let l_tol = BALANCE_FACTOR * cfg.newton_tol * records_scale(records, |r| r.lyapunov);
    let l = check_entropy_law(records, p, l_tol);
    vec![
        CheckOutcome::new(&name("mass_conservation"), true, mass.passed, &mass),
        CheckOutcome::new(&name("energy_law"), e.monotone_asserted, e.passed, &e),
        CheckOutcome::new(&name("entropy_law"), l.monotone_asserted, l.passed, &l),
    ]
}

fn initial_datum(input: &ExperimentInput) -> Result<GridFunction> {
    input.initial.build(input.grid, input.seed)
}

fn prepared_datum(input: &ExperimentInput, p: &ModelParams) -> Result<GridFunction> {
    let u = initial_datum(input)?;
    if input.run.mollify {
        mollify_initial(&u, p.eps)
    } else {
        Ok(u)
    }
}

fn single_run(input: &ExperimentInput, c: &SingleRunConfig) -> Result<ExperimentOutcome> {
    let p = &input.model;
    let u0 = initial_datum(input)?;
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let summary = run(p, &input.stepper, &u0, &input.run, &mut records)?;
    let mut checks = standard_checks(p, &input.stepper, &records, "");
    let fit = check_dissipative_decay(&records, p, c.t_min_fraction * input.run.t_final);
    checks.push(CheckOutcome::new("dissipative_decay", false, fit.passed, &fit));
    if let Some(ratio) = c.plateau_ratio {
        let d0 = records.first().map_or(0.0, |r| r.dissipation);
        let d1 = records.last().map_or(0.0, |r| r.dissipation);
        let passed = d1 <= ratio * d0;
        checks.push(CheckOutcome::new(
            "energy_plateau",
            true,
            passed,
            &serde_json::json!({
                "initial_dissipation": d0,
                "final_dissipation": d1,
                "ratio": if d0 > 0.0 { d1 / d0 } else { 0.0 },
                "required_ratio": ratio,
            }),
        ));
    }
    let mut out = ExperimentOutcome::new(input, "single_run", checks);
    out.records = records;
    out.final_u = Some(summary.final_state.u);
    Ok(out)
}

fn eps_ladder(input: &ExperimentInput, c: &EpsLadderConfig) -> Result<ExperimentOutcome> {
    if c.eps.len() < 3 || c.eps.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter {
            field: "eps",
            constraint: "need at least three strictly decreasing regularization levels".into(),
        });
    }
    let u0 = initial_datum(input)?;
    let runs: Vec<(f64, Vec<DiagnosticsRecord>, GridFunction)> = c
        .eps
        .par_iter()
        .map(|&eps| {
            let p = input.model.with_eps(eps)?;
            let mut recs: Vec<DiagnosticsRecord> = Vec::new();
            let s = run(&p, &input.stepper, &u0, &input.run, &mut recs)?;
            Ok((eps, recs, s.final_state.u))
        })
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    for (eps, recs, _) in &runs {
        let mass = check_mass(recs, MASS_TOLERANCE);
        checks.push(CheckOutcome::new(&format!("mass_conservation[eps={eps:e}]"), true, mass.passed, &mass));
    }
    let mut table = Table::new("eps_ladder", &["eps", "eps_next", "l2_difference", "min_u"]);
    let mut diffs = Vec::new();
    for pair in runs.windows(2) {
        let d = pair[0].2.zip_map(&pair[1].2, |a, b| a - b).norm_l2();
        diffs.push(d);
        table
            .rows
            .push(vec![fmt(pair[0].0), fmt(pair[1].0), fmt(d), fmt(pair[0].2.min())]);
    }
    let decreasing = diffs.windows(2).all(|w| w[1] < w[0]);
    checks.push(CheckOutcome::new(
        "eps_cauchy",
        true,
        decreasing,
        &serde_json::json!({
            "eps": c.eps,
            "l2_differences": diffs,
            "t_final": input.run.t_final,
        }),
    ));
    let (_, records, last_u) = runs.into_iter().last().expect("at least three runs");
    let mut out = ExperimentOutcome::new(input, "eps_ladder", checks);
    out.records = records;
    out.final_u = Some(last_u);
    out.tables.push(table);
    Ok(out)
}

fn separation(input: &ExperimentInput, c: &SeparationConfig) -> Result<ExperimentOutcome> {
    let p = &input.model;
    let feasible = is_feasible(c.gate_dimension, p.s, p.kappa);
    if c.assert {
        if !feasible {
            let constraint = if c.gate_dimension == 3 {
                format!("separation assertions need κ > 2s + 3 in three dimensions (κ = {}, s = {})", p.kappa, p.s)
            } else {
                format!("separation assertions need κ > s + 1 ≥ 2 in two dimensions (κ = {}, s = {})", p.kappa, p.s)
            };
            return Err(Error::InvalidParameter {
                field: "kappa",
                constraint,
            });
        }
        if !(p.delta > 0.0) || p.beta != 0.0 {
            return Err(Error::InvalidParameter {
                field: "delta",
                constraint: "separation assertions need δ > 0 and β = 0".into(),
            });
        }
    }
    let u0 = initial_datum(input)?;
    let mut sink = SnapshotSink::default();
    let summary = run(p, &input.stepper, &u0, &input.run, &mut sink)?;
    let t_min = c.t_min_fraction * input.run.t_final;
    let mut checks = standard_checks(p, &input.stepper, &sink.records, "");
    let sep = check_separation(&sink.records, t_min, c.required_lift, c.allowed_drop, c.assert);
    checks.push(CheckOutcome::new("separation", c.assert, sep.passed, &sep));

    let mut floors = Table::new("floors", &["t", "min_u"]);
    for (t, m) in &sep.floors {
        floors.rows.push(vec![fmt(*t), fmt(*m)]);
    }
    let eps_time = c.eps_time.unwrap_or(t_min.max(f64::MIN_POSITIVE));
    let schedule = build_schedule(
        c.gate_dimension,
        p.s,
        p.kappa,
        c.iota,
        eps_time,
        ScheduleOptions::default(),
    )?;
    let mut ladder = Table::new("z_ladder", &["n", "nu", "phase", "t_start", "sup_norm", "space_time_norm", "combined"]);
    if schedule.feasible && sink.snapshots.iter().all(|(_, u)| u.min() > 0.0) {
        let rows = z_norm_ladder(&sink.snapshots, &schedule, 0.0)?;
        let finite = rows.iter().all(|r| r.combined.is_finite());
        for (r, step) in rows.iter().zip(&schedule.exponents) {
            ladder.rows.push(vec![
                r.n.to_string(),
                fmt(r.nu),
                match step.phase {
                    Phase::One => "phase1".into(),
                    Phase::Two => "phase2".into(),
                },
                fmt(r.t_start),
                fmt(r.sup_norm),
                fmt(r.space_time_norm),
                fmt(r.combined),
            ]);
        }
        let max_sup = rows.iter().map(|r| r.sup_norm).fold(0.0, f64::max);
        checks.push(CheckOutcome::new(
            "z_ladder_bounded",
            false,
            finite,
            &serde_json::json!({ "rungs": rows.len(), "max_sup_norm": max_sup }),
        ));
    }
    let mut out = ExperimentOutcome::new(input, "separation", checks);
    out.records = sink.records;
    out.final_u = Some(summary.final_state.u);
    out.schedule = Some(schedule);
    out.tables.push(floors);
    out.tables.push(ladder);
    Ok(out)
}

/// Cosine direction along the first axis.
fn cosine_direction(grid: Grid, mode: usize) -> GridFunction {
    let tau = 2.0 * std::f64::consts::PI;
    GridFunction::from_fn(grid, |x| (tau * mode as f64 * x[0] / grid.length(0)).cos())
}

/// Smallest `a ∈ [0, hi]` with `f(a) ≥ target` for increasing `f`.
fn bisect(f: impl Fn(f64) -> Result<f64>, target: f64, hi: f64, what: &str) -> Result<f64> {
    let (mut lo, mut hi) = (0.0, hi);
    if f(lo)? > target || f(hi)? < target {
        return Err(Error::InvalidParameter {
            field: "experiment",
            constraint: format!(
                "{what} target {target:e} outside the reachable range [{:e}, {:e}]",
                f(lo)?,
                f(hi)?
            ),
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(hi)
}

fn absorbing(input: &ExperimentInput, c: &AbsorbingConfig) -> Result<ExperimentOutcome> {
    let p = &input.model;
    let base = prepared_datum(input, p)?;
    let m = mean(&base);
    let dir = cosine_direction(input.grid, c.mode.max(1));
    let dir = if input.run.mollify { mollify_initial(&dir, p.eps)? } else { dir };
    let dmin = dir.min();
    let hi = 0.999999 * m / dmin.abs().max(f64::MIN_POSITIVE);
    let flat = GridFunction::constant(input.grid, m);
    let energy_at = |a: f64| -> Result<f64> {
        let u = flat.zip_map(&dir, |b, d| b + a * d);
        Ok(energy(p, &u, true)?.total)
    };
    let data: Vec<GridFunction> = c
        .target_energies
        .iter()
        .map(|&target| {
            let a = bisect(&energy_at, target, hi, "initial energy")?;
            Ok(flat.zip_map(&dir, |b, d| b + a * d))
        })
        .collect::<Result<_>>()?;
    let mut opts = input.run.clone();
    opts.mollify = false;
    let runs: Vec<(Vec<DiagnosticsRecord>, GridFunction)> = data
        .par_iter()
        .map(|u0| {
            let mut recs: Vec<DiagnosticsRecord> = Vec::new();
            let s = run(p, &input.stepper, u0, &opts, &mut recs)?;
            Ok((recs, s.final_state.u))
        })
        .collect::<Result<_>>()?;
    let mut checks = Vec::new();
    let t_min = c.t_min_fraction * input.run.t_final;
    for (k, (recs, _)) in runs.iter().enumerate() {
        checks.extend(standard_checks(p, &input.stepper, recs, &format!("run{k}.")));
        let fit = check_dissipative_decay(recs, p, t_min);
        checks.push(CheckOutcome::new(&format!("run{k}.dissipative_decay"), true, fit.passed, &fit));
    }
    let abs = check_absorbing(&runs[0].0, &runs[1].0, c.tolerance)?;
    checks.push(CheckOutcome::new("absorbing", true, abs.passed, &abs));
    let mut energies = Table::new("energies", &["t", "energy_run0", "energy_run1"]);
    for (a, b) in runs[0].0.iter().zip(&runs[1].0) {
        if (a.t - b.t).abs() <= 1e-12 * a.t.abs().max(1.0) {
            energies.rows.push(vec![fmt(a.t), fmt(a.energy.total), fmt(b.energy.total)]);
        }
    }
    let mut runs = runs;
    let (records, u) = runs.swap_remove(1);
    let mut out = ExperimentOutcome::new(input, "absorbing", checks);
    out.records = records;
    out.final_u = Some(u);
    out.tables.push(energies);
    Ok(out)
}

/// Linear interpolation of a snapshot sequence at time `t`.
pub fn interpolate_snapshot(snapshots: &[(f64, GridFunction)], t: f64) -> Option<GridFunction> {
    let k = snapshots.partition_point(|(s, _)| *s < t);
    if k < snapshots.len() && (snapshots[k].0 - t).abs() <= 1e-12 * t.abs().max(1.0) {
        return Some(snapshots[k].1.clone());
    }
    if k == 0 || k >= snapshots.len() {
        return None;
    }
    let (ta, ua) = &snapshots[k - 1];
    let (tb, ub) = &snapshots[k];
    let w = (t - ta) / (tb - ta);
    Some(ua.zip_map(ub, |a, b| (1.0 - w) * a + w * b))
}

fn contraction(input: &ExperimentInput, c: &ContractionConfig) -> Result<ExperimentOutcome> {
    let p = &input.model;
    let base = prepared_datum(input, p)?;
    let dir = cosine_direction(input.grid, c.mode.max(1));
    let hi = 0.5 * base.min() / dir.max().max(f64::MIN_POSITIVE);
    if !(hi > 0.0) {
        return Err(Error::InvalidParameter {
            field: "initial",
            constraint: "contraction needs a positive initial datum".into(),
        });
    }
    let metric_at = |a: f64| -> Result<f64> { phase_metric(p, &base, &base.zip_map(&dir, |b, d| b + a * d)) };
    let a = bisect(&metric_at, c.distance, hi, "phase-metric distance")?;
    let perturbed = base.zip_map(&dir, |b, d| b + a * d);
    let mut opts = input.run.clone();
    opts.mollify = false;
    let go = |u0: &GridFunction| -> Result<SnapshotSink> {
        let mut sink = SnapshotSink::default();
        run(p, &input.stepper, u0, &opts, &mut sink)?;
        Ok(sink)
    };
    let (ra, rb) = rayon::join(|| go(&base), || go(&perturbed));
    let (ra, rb) = (ra?, rb?);
    let mut samples = Vec::new();
    let mut metric_max = 0.0f64;
    let mut table = Table::new("distance", &["t", "grad_distance", "phase_metric"]);
    for (t, ua) in &ra.snapshots {
        let Some(ub) = interpolate_snapshot(&rb.snapshots, *t) else { continue };
        let diff = ua.zip_map(&ub, |x, y| x - y);
        let gd = (2.0 * dirichlet(&diff)).sqrt();
        let pm = if ua.min() > 0.0 && ub.min() > 0.0 {
            phase_metric(p, ua, &ub)?
        } else {
            f64::INFINITY
        };
        metric_max = metric_max.max(pm);
        samples.push((*t, gd));
        table.rows.push(vec![fmt(*t), fmt(gd), fmt(pm)]);
    }
    let mut rep = check_contraction(&samples, c.window[0], c.window[1], c.max_envelope_constant, c.divergence_bound);
    rep.passed &= metric_max <= c.divergence_bound;
    let mut checks = standard_checks(p, &input.stepper, &ra.records, "run0.");
    checks.extend(standard_checks(p, &input.stepper, &rb.records, "run1."));
    checks.push(CheckOutcome::new(
        "contraction",
        true,
        rep.passed,
        &serde_json::json!({
            "envelope": rep,
            "initial_phase_metric": metric_at(a)?,
            "max_phase_metric": metric_max,
            "perturbation_amplitude": a,
        }),
    ));
    let mut out = ExperimentOutcome::new(input, "contraction", checks);
    out.final_u = ra.snapshots.last().map(|s| s.1.clone());
    out.records = ra.records;
    out.tables.push(table);
    Ok(out)
}

fn moser_schedule(input: &ExperimentInput, c: &MoserConfig) -> Result<ExperimentOutcome> {
    let s = c.s.unwrap_or(input.model.s);
    let kappa = c.kappa.unwrap_or(input.model.kappa);
    let opts = ScheduleOptions {
        phase1_steps: c.phase1_steps,
        ..ScheduleOptions::default()
    };
    let sched = build_schedule(c.d, s, kappa, c.iota, c.eps_time, opts)?;
    let mut checks = Vec::new();
    let expected = is_feasible(c.d, s, kappa);
    if let Some(want) = c.expect_feasible {
        checks.push(CheckOutcome::new(
            "feasibility",
            true,
            sched.feasible == want,
            &serde_json::json!({ "feasible": sched.feasible, "expected": want }),
        ));
    }
    let tau_ok = sched.tau_ladder.iter().all(|t| *t <= sched.tau_bound);
    let monotone = sched
        .exponents
        .windows(2)
        .all(|w| w[1].phase != w[0].phase || w[1].nu > w[0].nu);
    checks.push(CheckOutcome::new(
        "schedule_shape",
        true,
        sched.feasible == expected && tau_ok && monotone,
        &serde_json::json!({
            "phase2_steps": sched.phase2_steps,
            "phase1_steps": sched.phase1_steps,
            "tau_within_bound": tau_ok,
            "monotone_within_phases": monotone,
        }),
    ));
    let mut table = Table::new("schedule", &["n", "nu", "phase", "tau"]);
    for e in &sched.exponents {
        table.rows.push(vec![
            e.n.to_string(),
            fmt(e.nu),
            if e.phase == Phase::One { "phase1" } else { "phase2" }.into(),
            fmt(e.tau),
        ]);
    }
    let mut out = ExperimentOutcome::new(input, "moser_schedule", checks);
    out.schedule = Some(sched);
    out.tables.push(table);
    Ok(out)
}

/// Random nonnegative mobility with zero plateaus, and a random `w`.
pub fn random_identity_pair(grid: Grid, rng: &mut ChaCha8Rng) -> (GridFunction, GridFunction) {
    let n = grid.len();
    let mut b: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..2.0)).collect();
    let plateaus = rng.gen_range(1..=3);
    for _ in 0..plateaus {
        let start = rng.gen_range(0..n);
        let len = rng.gen_range(1..=(n / 4).max(1));
        for v in b.iter_mut().skip(start).take(len) {
            *v = 0.0;
        }
    }
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let w: Vec<f64> = (0..n)
        .map(|c| {
            let x = grid.center(c);
            (3.0 * x[0] + 2.0 * x[1] + phase).sin() + 0.3 * rng.gen_range(-1.0..1.0)
        })
        .collect();
    (
        GridFunction::new(grid, b).expect("finite mobility"),
        GridFunction::new(grid, w).expect("finite potential"),
    )
}

fn elliptic_identity(input: &ExperimentInput, c: &EllipticIdentityConfig) -> Result<ExperimentOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(input.seed);
    let mean_kind = input.stepper.face_mean;
    let mut worst = 0.0f64;
    let mut table = Table::new("identity", &["pair", "lhs", "rhs", "relative"]);
    let mut solve_rows = Vec::new();
    let mut solves_ok = true;
    for k in 0..c.pairs {
        let (b, w) = random_identity_pair(input.grid, &mut rng);
        let r = ipepa_identity_residual(&b, &w, mean_kind);
        worst = worst.max(r.relative);
        table.rows.push(vec![k.to_string(), fmt(r.lhs), fmt(r.rhs), fmt(r.relative)]);
        if k < c.solves {
            let opts = DegenerateOptions {
                face_mean: mean_kind,
                ..DegenerateOptions::default()
            };
            match degenerate_elliptic_solve(&b, &w, opts) {
                Ok(rep) => solve_rows.push(serde_json::json!({
                    "pair": k,
                    "ladder": rep.ladder,
                    "extrapolation_gap": rep.extrapolation_gap,
                    "energy_identity_residual": rep.energy_identity_residual,
                })),
                Err(e) => {
                    solves_ok = false;
                    solve_rows.push(serde_json::json!({ "pair": k, "error": e.to_string() }));
                }
            }
        }
    }
    let checks = vec![
        CheckOutcome::new(
            "ipepa_identity",
            true,
            worst <= c.tolerance,
            &serde_json::json!({ "pairs": c.pairs, "max_relative_residual": worst, "tolerance": c.tolerance }),
        ),
        CheckOutcome::new("degenerate_solve_ladder", true, solves_ok, &solve_rows),
    ];
    let mut out = ExperimentOutcome::new(input, "elliptic_identity", checks);
    out.tables.push(table);
    Ok(out)
}

fn dt_refinement(input: &ExperimentInput, c: &RefinementConfig) -> Result<ExperimentOutcome> {
    let p = &input.model;
    let dt = input.stepper.dt_init;
    let coarse_cfg = StepperConfig {
        dt_min: dt,
        dt_max: dt,
        ..input.stepper.clone()
    };
    let fine_cfg = StepperConfig {
        dt_init: 0.5 * dt,
        dt_min: 0.5 * dt,
        dt_max: 0.5 * dt,
        ..input.stepper.clone()
    };
    let u0 = initial_datum(input)?;
    let mut opts = input.run.clone();
    opts.cadence = 1;
    let go = |cfg: &StepperConfig| -> Result<Vec<DiagnosticsRecord>> {
        let mut recs: Vec<DiagnosticsRecord> = Vec::new();
        run(p, cfg, &u0, &opts, &mut recs)?;
        Ok(recs)
    };
    let (coarse, fine) = rayon::join(|| go(&coarse_cfg), || go(&fine_cfg));
    let (coarse, fine) = (coarse?, fine?);
    let mut checks = standard_checks(p, &coarse_cfg, &coarse, "coarse.");
    checks.extend(standard_checks(p, &fine_cfg, &fine, "fine."));
    let e = refinement_ratio(&energy_residuals(&coarse), &energy_residuals(&fine), c.required_ratio);
    checks.push(CheckOutcome::new("energy_refinement", true, e.passed, &e));
    let l = refinement_ratio(&entropy_residuals(&coarse), &entropy_residuals(&fine), c.required_ratio);
    checks.push(CheckOutcome::new("entropy_refinement", c.entropy, l.passed, &l));
    let sign = check_energy_law(&fine, false, BALANCE_FACTOR * fine_cfg.newton_tol * records_scale(&fine, |r| Some(r.energy.total)));
    checks.push(CheckOutcome::new("energy_residual_sign", false, sign.one_signed, &sign));
    let mut out = ExperimentOutcome::new(input, "dt_refinement", checks);
    out.records = fine;
    Ok(out)
}
