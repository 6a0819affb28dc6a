//! Per-step monitoring and per-run checks.
//!
//! A [`Monitor`] is driven by the time loop: it sees every accepted step,
//! accumulates the discrete energy and entropy balances, and emits
//! [`DiagnosticsRecord`]s. The `check_*` functions are pure over record
//! streams and return serializable reports.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{dissipation_rate, energy, entropy_total, EnergyBreakdown};
use crate::grid::{fmt, gradient_faces, integrate, laplacian, GridFunction};
use crate::nonlinearities::{eval_f_eps, GammaSpec, ModelParams};
use crate::stepper::{scheme_potential, SolverState, StepperConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorOptions {
    /// Evaluate `∫M_ε(u)` and the entropy balance every step.
    pub track_entropy: bool,
    /// Exponents `ν` for which `‖u⁻¹‖_{L^ν}` is recorded.
    pub z_exponents: Vec<f64>,
}

impl Default for MonitorOptions {
    fn default() -> Self {
        Self {
            track_entropy: true,
            z_exponents: Vec::new(),
        }
    }
}

/// Scalars at one output time. Balance fields aggregate the steps taken
/// since the previous record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// Accepted steps since the start of the run.
    pub steps: usize,
    /// Size of the last accepted step.
    pub dt: f64,
    pub newton_iters: usize,
    /// `∫u`.
    pub mass: f64,
    pub energy: EnergyBreakdown,
    /// `∫M_ε(u)`.
    pub entropy: Option<f64>,
    /// `∫M_ε(u) + (δ/2)‖∇u‖²`.
    pub lyapunov: Option<f64>,
    pub min_u: f64,
    pub max_u: f64,
    /// `∫b_ε(u)|∇w|²` after the last step.
    pub dissipation: f64,
    /// `δ‖(u − u_old)/dt‖²` for the last step.
    pub viscous_dissipation: f64,
    /// Sum over the interval of `E_ε(uᵏ⁺¹) − E_ε(uᵏ) + dt·(viscous + dissipation)`.
    pub energy_residual: f64,
    /// Largest single-step `E_ε(uᵏ⁺¹) − E_ε(uᵏ)` in the interval.
    pub energy_increase_max: f64,
    /// Sum over the interval of the discrete entropy balance.
    pub entropy_residual: Option<f64>,
    /// Largest single-step Lyapunov increment in the interval.
    pub lyapunov_increase_max: Option<f64>,
    /// `‖f_ε(u)‖_{L²}`.
    pub f_eps_l2: f64,
    /// `(ν, ‖u⁻¹‖_{L^ν})`; empty when `u` is not positive.
    pub z_norms: Vec<(f64, f64)>,
}

impl DiagnosticsRecord {
    pub fn csv_header(z_exponents: &[f64]) -> Vec<String> {
        let mut h: Vec<String> = [
            "t",
            "steps",
            "dt",
            "newton_iters",
            "mass",
            "dirichlet",
            "F",
            "Gamma",
            "forcing",
            "energy",
            "entropy",
            "lyapunov",
            "min_u",
            "max_u",
            "dissipation",
            "viscous_dissipation",
            "energy_residual",
            "energy_increase_max",
            "entropy_residual",
            "lyapunov_increase_max",
            "f_eps_l2",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(z_exponents.iter().map(|nu| format!("z_{nu}")));
        h
    }

    pub fn csv_row(&self, z_exponents: &[f64]) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(fmt).unwrap_or_default();
        let mut row = vec![
            fmt(self.t),
            self.steps.to_string(),
            fmt(self.dt),
            self.newton_iters.to_string(),
            fmt(self.mass),
            fmt(self.energy.dirichlet),
            fmt(self.energy.potential_f),
            fmt(self.energy.potential_gamma),
            fmt(self.energy.forcing),
            fmt(self.energy.total),
            opt(self.entropy),
            opt(self.lyapunov),
            fmt(self.min_u),
            fmt(self.max_u),
            fmt(self.dissipation),
            fmt(self.viscous_dissipation),
            fmt(self.energy_residual),
            fmt(self.energy_increase_max),
            opt(self.entropy_residual),
            opt(self.lyapunov_increase_max),
            fmt(self.f_eps_l2),
        ];
        for nu in z_exponents {
            let v = self.z_norms.iter().find(|(n, _)| n == nu).map(|(_, v)| *v);
            row.push(opt(v));
        }
        row
    }
}

/// Writes records as CSV with a header; `z` columns follow `z_exponents`.
pub fn write_records_csv<W: Write>(records: &[DiagnosticsRecord], z_exponents: &[f64], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DiagnosticsRecord::csv_header(z_exponents))?;
    for r in records {
        w.write_record(r.csv_row(z_exponents))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Default)]
struct Interval {
    energy_residual: f64,
    energy_increase_max: f64,
    entropy_residual: f64,
    lyapunov_increase_max: f64,
    dissipation: f64,
    viscous: f64,
    newton_iters: usize,
}

/// Tracks the discrete balances between records.
pub struct Monitor {
    p: ModelParams,
    cfg: StepperConfig,
    opts: MonitorOptions,
    energy: f64,
    lyapunov: Option<f64>,
    steps: usize,
    interval: Interval,
    fresh: bool,
}

impl Monitor {
    pub fn new(p: &ModelParams, cfg: &StepperConfig, state: &SolverState, opts: MonitorOptions) -> Result<Self> {
        let energy = energy(p, &state.u, true)?.total;
        let lyapunov = if opts.track_entropy {
            Some(lyapunov(p, &state.u)?)
        } else {
            None
        };
        Ok(Self {
            p: p.clone(),
            cfg: cfg.clone(),
            opts,
            energy,
            lyapunov,
            steps: 0,
            interval: Interval::default(),
            fresh: true,
        })
    }

    /// Folds the step `old → new` into the running balances.
    pub fn accumulate(&mut self, old: &SolverState, new: &SolverState) -> Result<()> {
        let p = &self.p;
        let dt = new.last_dt;
        let (u0, u1, w1) = (&old.u, &new.u, &new.w);
        let e1 = energy(p, u1, true)?.total;
        let rate = u1.zip_map(u0, |a, b| (a - b) / dt);
        let viscous = p.delta * rate.dot(&rate);
        let diss = dissipation_rate(p, u1, w1, self.cfg.face_mean);
        let iv = &mut self.interval;
        let first = self.fresh;
        let de = e1 - self.energy;
        iv.energy_residual += de + dt * (viscous + diss);
        iv.energy_increase_max = if first { de } else { iv.energy_increase_max.max(de) };
        iv.dissipation = diss;
        iv.viscous = viscous;
        iv.newton_iters = if first { new.newton_iters } else { iv.newton_iters.max(new.newton_iters) };
        self.energy = e1;

        if let Some(l0) = self.lyapunov {
            let l1 = lyapunov(p, u1)?;
            let lap = laplacian(u1);
            let phi = scheme_potential(p, &self.cfg, u0, u1);
            let gu = gradient_faces(u1);
            let gphi = gradient_faces(&phi);
            let g_lap: f64 = lap
                .values()
                .iter()
                .enumerate()
                .map(|(c, v)| p.g.at(c) * v)
                .sum::<f64>()
                * u1.grid().cell_volume();
            let work = lap.dot(&lap) + gu.dot(&gphi) + g_lap;
            let dl = l1 - l0;
            iv.entropy_residual += dl + dt * work;
            iv.lyapunov_increase_max = if first { dl } else { iv.lyapunov_increase_max.max(dl) };
            self.lyapunov = Some(l1);
        }
        self.steps += 1;
        self.fresh = false;
        Ok(())
    }

    /// Emits a record for `state` and resets the interval balances.
    pub fn snapshot(&mut self, state: &SolverState) -> Result<DiagnosticsRecord> {
        let p = &self.p;
        let u = &state.u;
        let e = energy(p, u, true)?;
        let entropy = if self.opts.track_entropy {
            Some(entropy_total(p, u, true)?)
        } else {
            None
        };
        let f_eps = u.map(|v| eval_f_eps(p, v));
        let z_norms = if u.min() > 0.0 {
            self.opts.z_exponents.iter().map(|&nu| (nu, z_norm(u, nu))).collect()
        } else {
            Vec::new()
        };
        let iv = std::mem::take(&mut self.interval);
        let tracked = self.opts.track_entropy;
        let rec = DiagnosticsRecord {
            t: state.t,
            steps: self.steps,
            dt: state.last_dt,
            newton_iters: iv.newton_iters,
            mass: integrate(u),
            energy: e,
            entropy,
            lyapunov: self.lyapunov,
            min_u: u.min(),
            max_u: u.max(),
            dissipation: if self.fresh && self.steps == 0 {
                dissipation_rate(p, u, &state.w, self.cfg.face_mean)
            } else {
                iv.dissipation
            },
            viscous_dissipation: iv.viscous,
            energy_residual: iv.energy_residual,
            energy_increase_max: iv.energy_increase_max,
            entropy_residual: tracked.then_some(iv.entropy_residual),
            lyapunov_increase_max: tracked.then_some(iv.lyapunov_increase_max),
            f_eps_l2: f_eps.norm_l2(),
            z_norms,
        };
        self.fresh = true;
        Ok(rec)
    }
}

/// `∫M_ε(u) + (δ/2)‖∇u‖²`.
pub fn lyapunov(p: &ModelParams, u: &GridFunction) -> Result<f64> {
    let g = gradient_faces(u);
    Ok(entropy_total(p, u, true)? + 0.5 * p.delta * g.dot(&g))
}

/// `‖u⁻¹‖_{L^ν}` for positive `u`.
pub fn z_norm(u: &GridFunction, nu: f64) -> f64 {
    (u.values().iter().map(|v| v.powf(-nu)).sum::<f64>() * u.grid().cell_volume()).powf(1.0 / nu)
}

/// Outcome of one check inside a run report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    /// Whether a failure of this check fails the run.
    pub asserted: bool,
    pub passed: bool,
    pub details: serde_json::Value,
}

impl CheckOutcome {
    pub fn new<T: Serialize>(name: &str, asserted: bool, passed: bool, details: &T) -> Self {
        Self {
            name: name.to_string(),
            asserted,
            passed,
            details: serde_json::to_value(details).unwrap_or(serde_json::Value::Null),
        }
    }
}

/// Pass/fail summary of a run or experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub experiment: String,
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
}

impl RunReport {
    pub fn new(scenario: &str, experiment: &str, checks: Vec<CheckOutcome>) -> Self {
        let passed = checks.iter().all(|c| c.passed || !c.asserted);
        Self {
            scenario: scenario.to_string(),
            experiment: experiment.to_string(),
            passed,
            checks,
        }
    }

    pub fn failing(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| c.asserted && !c.passed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub initial: f64,
    pub max_relative_drift: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Every record's mass against the first one.
pub fn check_mass(records: &[DiagnosticsRecord], tolerance: f64) -> MassReport {
    let initial = records.first().map_or(0.0, |r| r.mass);
    let scale = initial.abs().max(f64::MIN_POSITIVE);
    let drift = records
        .iter()
        .map(|r| (r.mass - initial).abs() / scale)
        .fold(0.0, f64::max);
    MassReport {
        initial,
        max_relative_drift: drift,
        tolerance,
        passed: drift <= tolerance,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyLawReport {
    pub max_abs_residual: f64,
    /// Largest (most positive) residual; the exact balance is `≤ 0`.
    pub max_residual: f64,
    pub max_energy_increase: f64,
    pub one_signed: bool,
    pub monotone: bool,
    pub monotone_asserted: bool,
    pub tolerance: f64,
    pub passed: bool,
}

/// Audits `ΔE + dt·(viscous + dissipation)` over a record stream.
/// Monotone decrease is asserted when `assert_monotone` is set (the
/// convex–concave scheme).
pub fn check_energy_law(records: &[DiagnosticsRecord], assert_monotone: bool, tolerance: f64) -> EnergyLawReport {
    let body = records.get(1..).unwrap_or(&[]);
    let max_abs = body.iter().map(|r| r.energy_residual.abs()).fold(0.0, f64::max);
    let max_res = body.iter().map(|r| r.energy_residual).fold(f64::NEG_INFINITY, f64::max);
    let max_inc = body.iter().map(|r| r.energy_increase_max).fold(f64::NEG_INFINITY, f64::max);
    let max_res = if body.is_empty() { 0.0 } else { max_res };
    let max_inc = if body.is_empty() { 0.0 } else { max_inc };
    let monotone = max_inc <= tolerance;
    EnergyLawReport {
        max_abs_residual: max_abs,
        max_residual: max_res,
        max_energy_increase: max_inc,
        one_signed: max_res <= tolerance,
        monotone,
        monotone_asserted: assert_monotone,
        tolerance,
        passed: !assert_monotone || monotone,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub coarse_max: f64,
    pub fine_max: f64,
    /// `coarse_max / fine_max`.
    pub ratio: f64,
    pub required_ratio: f64,
    pub passed: bool,
}

/// Compares maximal residuals of two runs whose records sit at the same
/// times, the second with half the step.
pub fn refinement_ratio(coarse: &[f64], fine: &[f64], required_ratio: f64) -> RefinementReport {
    let cm = coarse.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let fm = fine.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let ratio = if fm > 0.0 { cm / fm } else { f64::INFINITY };
    RefinementReport {
        coarse_max: cm,
        fine_max: fm,
        ratio,
        required_ratio,
        passed: ratio >= required_ratio,
    }
}

pub fn energy_residuals(records: &[DiagnosticsRecord]) -> Vec<f64> {
    records.iter().skip(1).map(|r| r.energy_residual).collect()
}

pub fn entropy_residuals(records: &[DiagnosticsRecord]) -> Vec<f64> {
    records.iter().skip(1).filter_map(|r| r.entropy_residual).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyLawReport {
    pub tracked: bool,
    pub max_abs_residual: f64,
    pub max_lyapunov_increase: f64,
    pub monotone: bool,
    /// Monotonicity is asserted only without forcing and perturbation.
    pub monotone_asserted: bool,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn check_entropy_law(records: &[DiagnosticsRecord], p: &ModelParams, tolerance: f64) -> EntropyLawReport {
    let body = records.get(1..).unwrap_or(&[]);
    let tracked = records.iter().all(|r| r.lyapunov.is_some());
    let max_abs = body
        .iter()
        .filter_map(|r| r.entropy_residual)
        .map(f64::abs)
        .fold(0.0, f64::max);
    let max_inc = body
        .iter()
        .filter_map(|r| r.lyapunov_increase_max)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_inc = if body.is_empty() { 0.0 } else { max_inc };
    let clean = p.g.is_zero() && matches!(p.gamma, GammaSpec::Zero);
    let monotone = max_inc <= tolerance;
    EntropyLawReport {
        tracked,
        max_abs_residual: max_abs,
        max_lyapunov_increase: max_inc,
        monotone,
        monotone_asserted: clean && tracked,
        tolerance,
        passed: !tracked || !clean || monotone,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub initial_min: f64,
    pub t_min: f64,
    /// `(t, min_x u)` for every record.
    pub floors: Vec<(f64, f64)>,
    /// Smallest post-transient floor.
    pub post_transient_min: f64,
    /// 10th percentile of the post-transient floors.
    pub floor_target: f64,
    /// Largest drop below the running post-transient maximum, relative.
    pub max_relative_drop: f64,
    pub allowed_drop: f64,
    /// `post_transient_min / initial_min`.
    pub lift: f64,
    pub required_lift: f64,
    /// Kendall τ of window minima (trend of the floor).
    pub kendall_tau: f64,
    pub asserted: bool,
    pub passed: bool,
}

/// Floor audit on records with `t ≥ t_min`. The floor must be positive, sit
/// `required_lift` times above the initial minimum, never fall more than
/// `allowed_drop` below its running maximum, and show no decreasing trend.
pub fn check_separation(
    records: &[DiagnosticsRecord],
    t_min: f64,
    required_lift: f64,
    allowed_drop: f64,
    asserted: bool,
) -> SeparationReport {
    let floors: Vec<(f64, f64)> = records.iter().map(|r| (r.t, r.min_u)).collect();
    let initial_min = floors.first().map_or(f64::NAN, |f| f.1);
    let post: Vec<f64> = floors.iter().filter(|(t, _)| *t >= t_min).map(|f| f.1).collect();
    let post_min = post.iter().copied().fold(f64::INFINITY, f64::min);
    let mut sorted = post.clone();
    sorted.sort_by(f64::total_cmp);
    let floor_target = percentile(&sorted, 0.1);
    let mut running = f64::NEG_INFINITY;
    let mut max_drop = 0.0f64;
    for &v in &post {
        running = running.max(v);
        if running > 0.0 {
            max_drop = max_drop.max((running - v) / running);
        }
    }
    let tau = kendall_tau(&window_minima(&post, 10), 1e-9);
    let lift = post_min / initial_min;
    let passed = !post.is_empty()
        && post_min > 0.0
        && lift >= required_lift
        && max_drop <= allowed_drop
        && tau >= 0.0;
    SeparationReport {
        initial_min,
        t_min,
        floors,
        post_transient_min: post_min,
        floor_target,
        max_relative_drop: max_drop,
        allowed_drop,
        lift,
        required_lift,
        kendall_tau: tau,
        asserted,
        passed,
    }
}

/// Linear-interpolated percentile of sorted data, `q ∈ [0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let x = q.clamp(0.0, 1.0) * (n - 1) as f64;
            let i = x.floor() as usize;
            let j = (i + 1).min(n - 1);
            sorted[i] + (x - i as f64) * (sorted[j] - sorted[i])
        }
    }
}

/// Minima over `k` consecutive, nearly equal windows.
pub fn window_minima(values: &[f64], k: usize) -> Vec<f64> {
    let n = values.len();
    let k = k.min(n);
    (0..k)
        .map(|i| {
            let lo = i * n / k;
            let hi = (i + 1) * n / k;
            values[lo..hi].iter().copied().fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Kendall's τ-a of `values` against their index; pairs closer than
/// `rel_tol` (relative) count as ties. Zero for fewer than two values.
pub fn kendall_tau(values: &[f64], rel_tol: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut score = 0i64;
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (values[i], values[j]);
            if (b - a).abs() <= rel_tol * a.abs().max(b.abs()) {
                continue;
            }
            score += if b > a { 1 } else { -1 };
        }
    }
    score as f64 / (n * (n - 1) / 2) as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub theta: f64,
    /// `None` when the power form does not apply (`κ = s + 1`).
    pub alpha: Option<f64>,
    pub c: Option<f64>,
    pub r_squared: Option<f64>,
    pub samples: usize,
    /// Largest energy with `t ≥ t_min`.
    pub post_transient_max_energy: f64,
    pub initial_energy: f64,
    pub passed: bool,
}

/// Fits `ΔE/Δt ≈ c − α·E^θ` by least squares over consecutive records, then
/// raises `c` until `ΔE/Δt + α·E^θ ≤ c` holds on every sample. Passes when
/// the energy after `t_min` stays below its initial value.
pub fn check_dissipative_decay(records: &[DiagnosticsRecord], p: &ModelParams, t_min: f64) -> DecayFit {
    let theta = (p.kappa - 1.0 - p.s) / (p.kappa - 1.0);
    let initial_energy = records.first().map_or(f64::NAN, |r| r.energy.total);
    let post_max = records
        .iter()
        .filter(|r| r.t >= t_min)
        .map(|r| r.energy.total)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for pair in records.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t - a.t;
        if dt <= 0.0 {
            continue;
        }
        xs.push(b.energy.total.max(0.0).powf(theta));
        ys.push((b.energy.total - a.energy.total) / dt);
    }
    let bounded = post_max <= initial_energy.max(0.0) * (1.0 + 1e-9) + 1e-12;
    if theta <= 0.0 || xs.len() < 2 {
        return DecayFit {
            theta,
            alpha: None,
            c: None,
            r_squared: None,
            samples: xs.len(),
            post_transient_max_energy: post_max,
            initial_energy,
            passed: bounded,
        };
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let alpha = (-slope).max(0.0);
    let c = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| y + alpha * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let r2 = if sxx > 0.0 && syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    DecayFit {
        theta,
        alpha: Some(alpha),
        c: Some(c),
        r_squared: Some(r2),
        samples: xs.len(),
        post_transient_max_energy: post_max,
        initial_energy,
        passed: bounded,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingReport {
    pub initial_energies: [f64; 2],
    pub terminal_energies: [f64; 2],
    pub initial_ratio: f64,
    /// `|E_a − E_b| / max(|E_a|, |E_b|)` at the end.
    pub terminal_gap: f64,
    pub tolerance: f64,
    pub passed: bool,
}

pub fn check_absorbing(a: &[DiagnosticsRecord], b: &[DiagnosticsRecord], tolerance: f64) -> Result<AbsorbingReport> {
    let ends = |r: &[DiagnosticsRecord]| -> Result<(f64, f64)> {
        match (r.first(), r.last()) {
            (Some(f), Some(l)) => Ok((f.energy.total, l.energy.total)),
            _ => Err(Error::InvalidParameter {
                field: "records",
                constraint: "absorbing comparison needs nonempty runs".into(),
            }),
        }
    };
    let (a0, a1) = ends(a)?;
    let (b0, b1) = ends(b)?;
    let gap = (a1 - b1).abs() / a1.abs().max(b1.abs()).max(f64::MIN_POSITIVE);
    let ratio = a0.abs().max(b0.abs()) / a0.abs().min(b0.abs()).max(f64::MIN_POSITIVE);
    Ok(AbsorbingReport {
        initial_energies: [a0, b0],
        terminal_energies: [a1, b1],
        initial_ratio: ratio,
        terminal_gap: gap,
        tolerance,
        passed: gap <= tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub t0: f64,
    pub d0: f64,
    /// Least-squares growth rate of `ln d` over the fit window.
    pub rate: f64,
    /// `max d(t) / (d0·e^{rate(t − t0)})` over the fit window.
    pub envelope_constant: f64,
    pub max_envelope_constant: f64,
    pub max_distance: f64,
    pub divergence_bound: f64,
    pub passed: bool,
}

/// Fits `d(t) ≤ C·d(t₀)·e^{L(t − t₀)}` over `[t0, t1]` from samples `(t, d)`.
/// Passes when `C ≤ max_constant` and `d` never exceeds `bound` anywhere.
pub fn check_contraction(samples: &[(f64, f64)], t0: f64, t1: f64, max_constant: f64, bound: f64) -> ContractionReport {
    let window: Vec<(f64, f64)> = samples
        .iter()
        .copied()
        .filter(|(t, d)| *t >= t0 - 1e-12 && *t <= t1 + 1e-12 && *d > 0.0)
        .collect();
    let max_distance = samples.iter().map(|s| s.1).fold(0.0, f64::max);
    let Some(&(ts, d0)) = window.first() else {
        return ContractionReport {
            t0,
            d0: f64::NAN,
            rate: f64::NAN,
            envelope_constant: f64::NAN,
            max_envelope_constant: max_constant,
            max_distance,
            divergence_bound: bound,
            passed: false,
        };
    };
    let n = window.len() as f64;
    let mt = window.iter().map(|s| s.0).sum::<f64>() / n;
    let ml = window.iter().map(|s| s.1.ln()).sum::<f64>() / n;
    let stt: f64 = window.iter().map(|s| (s.0 - mt).powi(2)).sum();
    let stl: f64 = window.iter().map(|s| (s.0 - mt) * (s.1.ln() - ml)).sum();
    let rate = if stt > 0.0 { stl / stt } else { 0.0 };
    let constant = window
        .iter()
        .map(|&(t, d)| d / (d0 * (rate * (t - ts)).exp()))
        .fold(0.0, f64::max);
    ContractionReport {
        t0: ts,
        d0,
        rate,
        envelope_constant: constant,
        max_envelope_constant: max_constant,
        max_distance,
        divergence_bound: bound,
        passed: constant <= max_constant && max_distance <= bound,
    }
}
