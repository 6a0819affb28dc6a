//! Backward-Euler time integration of the regularized system
//!
//! ```text
//! (u − u_old)/dt = div(b_ε(u)∇w)
//! w = δ(u − u_old)/dt − Δu + φ(u, u_old) − g
//! ```
//!
//! where `φ = f_ε(u) + γ(u)` for the fully implicit scheme and
//! `φ = f_ε(u) + γ(u_old) + L(u − u_old)` for the convex–concave splitting
//! (`L = sup|γ'|`, so `F_ε + L r²/2` is the implicit convex part and
//! `Γ − L r²/2` the explicit concave part). Both unknowns are solved together
//! by Newton's method on a band matrix with `(u_i, w_i)` interleaved.
//!
//! Mass is conserved to rounding: after Newton converges, `u` is rebuilt from
//! the flux form `u_old + dt·div(b∇w)`, whose cell sum telescopes.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsRecord, Monitor, MonitorOptions};
use crate::elliptic::mollify_initial;
use crate::error::{Error, Result};
use crate::grid::{fmt, laplacian, FaceMean, Grid, GridFunction};
use crate::linalg::BandMatrix;
use crate::nonlinearities::{
    eval_b_eps, eval_b_eps_prime, eval_f_eps, eval_f_eps_prime, eval_gamma, eval_gamma_prime, gamma_lipschitz,
    ModelParams,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    FullyImplicit,
    ConvexConcave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepperConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub scheme: Scheme,
    pub face_mean: FaceMean,
    /// Consecutive accepted steps before `dt` grows.
    pub grow_after: usize,
    pub grow_factor: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-4,
            dt_min: 1e-14,
            dt_max: 1e-2,
            newton_tol: 1e-10,
            newton_max: 25,
            scheme: Scheme::FullyImplicit,
            face_mean: FaceMean::Arithmetic,
            grow_after: 5,
            grow_factor: 1.2,
        }
    }
}

impl StepperConfig {
    /// Constant step `dt` (no adaptation).
    pub fn fixed(dt: f64, scheme: Scheme) -> Self {
        Self {
            dt_init: dt,
            dt_min: dt,
            dt_max: dt,
            scheme,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |c: &str| {
            Err(Error::InvalidParameter {
                field: "stepper",
                constraint: c.to_string(),
            })
        };
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_init && self.dt_init <= self.dt_max) {
            return bad("need 0 < dt_min ≤ dt_init ≤ dt_max");
        }
        if !(self.newton_tol > 0.0) {
            return bad("need newton_tol > 0");
        }
        if self.newton_max == 0 {
            return bad("need newton_max ≥ 1");
        }
        if !(self.grow_factor >= 1.0) {
            return bad("need grow_factor ≥ 1");
        }
        Ok(())
    }
}

/// `(u, w)` at a time level, plus step-control metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub u: GridFunction,
    pub w: GridFunction,
    /// Step size to attempt next.
    pub dt: f64,
    /// Step size actually used to reach `t` (zero for an initial state).
    pub last_dt: f64,
    pub newton_iters: usize,
    pub streak: usize,
}

impl SolverState {
    /// Initial state with `w = −Δu + f_ε(u) + γ(u) − g` (no rate term).
    pub fn initial(p: &ModelParams, cfg: &StepperConfig, u: GridFunction) -> Self {
        let lap = laplacian(&u);
        let w = GridFunction::from_raw(
            *u.grid(),
            u.values()
                .iter()
                .enumerate()
                .map(|(c, &v)| -lap.values()[c] + eval_f_eps(p, v) + eval_gamma(p, v) - p.g.at(c))
                .collect(),
        );
        Self {
            t: 0.0,
            u,
            w,
            dt: cfg.dt_init,
            last_dt: 0.0,
            newton_iters: 0,
            streak: 0,
        }
    }
}

/// Evaluates the two discrete residuals for a candidate `(u_new, w_new)`.
pub fn residual(
    p: &ModelParams,
    cfg: &StepperConfig,
    u_old: &GridFunction,
    u_new: &GridFunction,
    w_new: &GridFunction,
    dt: f64,
) -> (GridFunction, GridFunction) {
    let sys = System::new(p, cfg, *u_old.grid());
    let (r, _) = sys.assemble(u_old.values(), u_new.values(), w_new.values(), dt, false);
    let grid = *u_old.grid();
    let r1 = r.iter().step_by(2).copied().collect();
    let r2 = r.iter().skip(1).step_by(2).copied().collect();
    (GridFunction::from_raw(grid, r1), GridFunction::from_raw(grid, r2))
}

/// The chemical-potential nonlinearity `φ` of the chosen scheme, cellwise.
pub fn scheme_potential(p: &ModelParams, cfg: &StepperConfig, u_old: &GridFunction, u_new: &GridFunction) -> GridFunction {
    let lip = match cfg.scheme {
        Scheme::FullyImplicit => 0.0,
        Scheme::ConvexConcave => gamma_lipschitz(p),
    };
    u_new.zip_map(u_old, |v, vo| potential(p, cfg.scheme, lip, v, vo).0)
}

#[inline]
fn potential(p: &ModelParams, scheme: Scheme, lip: f64, u: f64, u_old: f64) -> (f64, f64) {
    match scheme {
        Scheme::FullyImplicit => (
            eval_f_eps(p, u) + eval_gamma(p, u),
            eval_f_eps_prime(p, u) + eval_gamma_prime(p, u),
        ),
        Scheme::ConvexConcave => (
            eval_f_eps(p, u) + eval_gamma(p, u_old) + lip * (u - u_old),
            eval_f_eps_prime(p, u) + lip,
        ),
    }
}

struct System<'a> {
    p: &'a ModelParams,
    scheme: Scheme,
    mean: FaceMean,
    grid: Grid,
    lip: f64,
    g: Vec<f64>,
    band: usize,
}

struct Scales {
    mass: f64,
    potential: f64,
}

impl<'a> System<'a> {
    fn new(p: &'a ModelParams, cfg: &StepperConfig, grid: Grid) -> Self {
        let lip = match cfg.scheme {
            Scheme::FullyImplicit => 0.0,
            Scheme::ConvexConcave => gamma_lipschitz(p),
        };
        let stride = if grid.dim() == 2 { grid.cells(0) } else { 1 };
        Self {
            p,
            scheme: cfg.scheme,
            mean: cfg.face_mean,
            grid,
            lip,
            g: (0..grid.len()).map(|c| p.g.at(c)).collect(),
            band: 2 * stride + 1,
        }
    }

    /// Interleaved residual `[R1_0, R2_0, R1_1, …]` and optionally its Jacobian.
    fn assemble(&self, u_old: &[f64], u: &[f64], w: &[f64], dt: f64, jacobian: bool) -> (Vec<f64>, Option<BandMatrix>) {
        let n = self.grid.len();
        let p = self.p;
        let delta = p.delta;
        let mut r = vec![0.0; 2 * n];
        let mut jac = jacobian.then(|| BandMatrix::zeros(2 * n, self.band, self.band));
        let inv_dt = 1.0 / dt;

        for c in 0..n {
            let du = u[c] - u_old[c];
            let (phi, dphi) = potential(p, self.scheme, self.lip, u[c], u_old[c]);
            r[2 * c] = du * inv_dt;
            r[2 * c + 1] = w[c] - delta * du * inv_dt - phi + self.g[c];
            if let Some(j) = jac.as_mut() {
                j.add(2 * c, 2 * c, inv_dt);
                j.add(2 * c + 1, 2 * c + 1, 1.0);
                j.add(2 * c + 1, 2 * c, -delta * inv_dt - dphi);
            }
        }

        let b: Vec<f64> = u.iter().map(|&v| eval_b_eps(p, v)).collect();
        let db: Vec<f64> = if jacobian {
            u.iter().map(|&v| eval_b_eps_prime(p, v)).collect()
        } else {
            Vec::new()
        };
        for axis in 0..self.grid.dim() {
            let inv_h2 = 1.0 / (self.grid.h(axis) * self.grid.h(axis));
            for (_, l, rr) in self.grid.faces(axis) {
                let bf = self.mean.combine(b[l], b[rr]);
                let dw = w[rr] - w[l];
                let q = bf * dw * inv_h2;
                // R1 = u_t − div(B∇w): div adds +q to l and −q to rr
                r[2 * l] -= q;
                r[2 * rr] += q;
                let lap = (u[rr] - u[l]) * inv_h2;
                // R2 contains +Δu
                r[2 * l + 1] += lap;
                r[2 * rr + 1] -= lap;
                if let Some(j) = jac.as_mut() {
                    let (ml, mr) = self.mean.partials(b[l], b[rr]);
                    let dq_dul = ml * db[l] * dw * inv_h2;
                    let dq_dur = mr * db[rr] * dw * inv_h2;
                    let dq_dwl = -bf * inv_h2;
                    let dq_dwr = bf * inv_h2;
                    for (row, sign) in [(2 * l, -1.0), (2 * rr, 1.0)] {
                        j.add(row, 2 * l, sign * dq_dul);
                        j.add(row, 2 * rr, sign * dq_dur);
                        j.add(row, 2 * l + 1, sign * dq_dwl);
                        j.add(row, 2 * rr + 1, sign * dq_dwr);
                    }
                    j.add(2 * l + 1, 2 * rr, inv_h2);
                    j.add(2 * l + 1, 2 * l, -inv_h2);
                    j.add(2 * rr + 1, 2 * l, inv_h2);
                    j.add(2 * rr + 1, 2 * rr, -inv_h2);
                }
            }
        }
        (r, jac)
    }

    /// Magnitudes against which the two residual blocks are judged.
    fn scales(&self, u_old: &[f64], u: &[f64], w: &[f64], dt: f64) -> Scales {
        let n = self.grid.len();
        let mut su = 0.0f64;
        let mut sw = 0.0f64;
        for c in 0..n {
            let (phi, _) = potential(self.p, self.scheme, self.lip, u[c], u_old[c]);
            su = su.max(u[c].abs()).max(u_old[c].abs());
            sw = sw
                .max(w[c].abs())
                .max(phi.abs())
                .max(self.g[c].abs())
                .max(self.p.delta * (u[c] - u_old[c]).abs() / dt);
        }
        let mut lap_max = 0.0f64;
        for axis in 0..self.grid.dim() {
            let inv_h2 = 1.0 / (self.grid.h(axis) * self.grid.h(axis));
            for (_, l, r) in self.grid.faces(axis) {
                lap_max = lap_max.max(2.0 * (u[r] - u[l]).abs() * inv_h2);
            }
        }
        Scales {
            mass: 1.0 + su,
            potential: 1.0 + sw + lap_max,
        }
    }

    fn converged(&self, r: &[f64], scales: &Scales, dt: f64, tol: f64) -> bool {
        let mut r1 = 0.0f64;
        let mut r2 = 0.0f64;
        for c in 0..self.grid.len() {
            r1 = r1.max((dt * r[2 * c]).abs());
            r2 = r2.max(r[2 * c + 1].abs());
        }
        r1 <= tol * scales.mass && r2 <= tol * scales.potential
    }

    /// `u_old + dt·div(B(u)∇w)`.
    fn flux_update(&self, u_old: &[f64], u: &[f64], w: &[f64], dt: f64) -> Vec<f64> {
        let b: Vec<f64> = u.iter().map(|&v| eval_b_eps(self.p, v)).collect();
        let mut out = u_old.to_vec();
        for axis in 0..self.grid.dim() {
            let k = dt / (self.grid.h(axis) * self.grid.h(axis));
            for (_, l, r) in self.grid.faces(axis) {
                let q = self.mean.combine(b[l], b[r]) * (w[r] - w[l]) * k;
                out[l] += q;
                out[r] -= q;
            }
        }
        out
    }

    fn newton(&self, u_old: &[f64], w_guess: &[f64], dt: f64, tol: f64, max_iter: usize) -> std::result::Result<(Vec<f64>, Vec<f64>, usize), String> {
        let n = self.grid.len();
        let mut u = u_old.to_vec();
        let mut w = w_guess.to_vec();
        for it in 0..=max_iter {
            let (mut r, jac) = self.assemble(u_old, &u, &w, dt, it < max_iter);
            if r.iter().any(|v| !v.is_finite()) {
                return Err(format!("non-finite residual at Newton iteration {it}"));
            }
            let scales = self.scales(u_old, &u, &w, dt);
            if self.converged(&r, &scales, dt, tol) {
                let u_flux = self.flux_update(u_old, &u, &w, dt);
                return Ok((u_flux, w, it));
            }
            let Some(jac) = jac else { break };
            for v in r.iter_mut() {
                *v = -*v;
            }
            jac.solve(&mut r).map_err(|e| e.to_string())?;
            for c in 0..n {
                u[c] += r[2 * c];
                w[c] += r[2 * c + 1];
            }
        }
        Err(format!("Newton did not converge in {max_iter} iterations"))
    }
}

/// Advances one accepted step, halving `dt` on Newton failure.
pub fn step(p: &ModelParams, cfg: &StepperConfig, state: &SolverState) -> Result<SolverState> {
    step_capped(p, cfg, state, f64::INFINITY)
}

/// As [`step`], but never steps past `t_end`.
pub fn step_capped(p: &ModelParams, cfg: &StepperConfig, state: &SolverState, t_end: f64) -> Result<SolverState> {
    let sys = System::new(p, cfg, *state.u.grid());
    let mut dt = state.dt.clamp(cfg.dt_min, cfg.dt_max);
    let mut streak = state.streak;
    loop {
        let remaining = t_end - state.t;
        let clipped = remaining < dt * (1.0 + 1e-12);
        let dt_try = if clipped { remaining } else { dt };
        match sys.newton(state.u.values(), state.w.values(), dt_try, cfg.newton_tol, cfg.newton_max) {
            Ok((u, w, iters)) => {
                streak += 1;
                if streak >= cfg.grow_after {
                    dt = (dt * cfg.grow_factor).min(cfg.dt_max);
                    streak = 0;
                }
                let grid = *state.u.grid();
                return Ok(SolverState {
                    t: if clipped { t_end } else { state.t + dt_try },
                    u: GridFunction::from_raw(grid, u),
                    w: GridFunction::from_raw(grid, w),
                    dt,
                    last_dt: dt_try,
                    newton_iters: iters,
                    streak,
                });
            }
            Err(reason) => {
                if dt <= cfg.dt_min || dt_try <= cfg.dt_min {
                    return Err(Error::StepFailure {
                        t: state.t,
                        dt: dt_try,
                        reason,
                    });
                }
                dt = (dt * 0.5).max(cfg.dt_min);
                streak = 0;
            }
        }
    }
}

/// Receives diagnostics as a run progresses.
pub trait DiagnosticsSink {
    fn record(&mut self, record: &DiagnosticsRecord, state: &SolverState);
}

impl DiagnosticsSink for Vec<DiagnosticsRecord> {
    fn record(&mut self, record: &DiagnosticsRecord, _state: &SolverState) {
        self.push(record.clone());
    }
}

/// Keeps every record and a `u` snapshot at each record.
#[derive(Debug, Default)]
pub struct SnapshotSink {
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<(f64, GridFunction)>,
}

impl DiagnosticsSink for SnapshotSink {
    fn record(&mut self, record: &DiagnosticsRecord, state: &SolverState) {
        self.records.push(record.clone());
        self.snapshots.push((state.t, state.u.clone()));
    }
}

/// Drops everything.
pub struct NullSink;

impl DiagnosticsSink for NullSink {
    fn record(&mut self, _: &DiagnosticsRecord, _: &SolverState) {}
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub t_final: f64,
    /// Emit a record every `cadence` accepted steps (and always at the end).
    pub cadence: usize,
    /// Pass the initial datum through the mollifier first.
    pub mollify: bool,
    pub monitor: MonitorOptions,
    /// Hard cap on accepted steps.
    pub max_steps: usize,
}

impl RunOptions {
    pub fn new(t_final: f64) -> Self {
        Self {
            t_final,
            cadence: 1,
            mollify: true,
            monitor: MonitorOptions::default(),
            max_steps: 10_000_000,
        }
    }
}

/// Aggregate outcome of [`run`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub final_state: SolverState,
    pub initial_mass: f64,
    pub accepted_steps: usize,
    pub records_emitted: usize,
    pub max_abs_energy_residual: f64,
    pub max_abs_entropy_residual: f64,
    pub max_relative_mass_drift: f64,
    pub min_u: f64,
}

/// Integrates from `u0` (mollified first when requested) to `t_final`.
pub fn run(
    p: &ModelParams,
    cfg: &StepperConfig,
    u0: &GridFunction,
    opts: &RunOptions,
    sink: &mut dyn DiagnosticsSink,
) -> Result<RunSummary> {
    p.validate()?;
    cfg.validate()?;
    if !u0.is_finite() {
        return Err(Error::InvalidParameter {
            field: "initial",
            constraint: "initial datum must be finite".into(),
        });
    }
    if let crate::nonlinearities::Forcing::Field(v) = &p.g {
        if v.len() != u0.grid().len() {
            return Err(Error::Shape {
                expected: u0.grid().len(),
                found: v.len(),
            });
        }
    }
    let u_init = if opts.mollify {
        mollify_initial(u0, p.eps)?
    } else {
        u0.clone()
    };
    let state = SolverState::initial(p, cfg, u_init);
    run_from(p, cfg, state, opts, sink)
}

/// Continues an existing state (for instance a checkpoint) to `t_final`.
pub fn run_from(
    p: &ModelParams,
    cfg: &StepperConfig,
    mut state: SolverState,
    opts: &RunOptions,
    sink: &mut dyn DiagnosticsSink,
) -> Result<RunSummary> {
    let mut monitor = Monitor::new(p, cfg, &state, opts.monitor.clone())?;
    let first = monitor.snapshot(&state)?;
    sink.record(&first, &state);
    let initial_mass = first.mass;
    let mut summary = RunSummary {
        final_state: state.clone(),
        initial_mass,
        accepted_steps: 0,
        records_emitted: 1,
        max_abs_energy_residual: 0.0,
        max_abs_entropy_residual: 0.0,
        max_relative_mass_drift: 0.0,
        min_u: first.min_u,
    };
    let cadence = opts.cadence.max(1);
    let t_end = opts.t_final;
    let mut since_record = 0;
    while state.t < t_end * (1.0 - 1e-14) && summary.accepted_steps < opts.max_steps {
        let next = step_capped(p, cfg, &state, t_end)?;
        monitor.accumulate(&state, &next)?;
        state = next;
        summary.accepted_steps += 1;
        since_record += 1;
        let finished = state.t >= t_end * (1.0 - 1e-14);
        if since_record >= cadence || finished {
            let rec = monitor.snapshot(&state)?;
            summary.max_abs_energy_residual = summary.max_abs_energy_residual.max(rec.energy_residual.abs());
            if let Some(r) = rec.entropy_residual {
                summary.max_abs_entropy_residual = summary.max_abs_entropy_residual.max(r.abs());
            }
            let drift = (rec.mass - initial_mass).abs() / initial_mass.abs().max(f64::MIN_POSITIVE);
            summary.max_relative_mass_drift = summary.max_relative_mass_drift.max(drift);
            summary.min_u = summary.min_u.min(rec.min_u);
            sink.record(&rec, &state);
            summary.records_emitted += 1;
            since_record = 0;
        }
    }
    summary.final_state = state;
    Ok(summary)
}

/// Writes `t,dt,cell,u,w` rows.
pub fn write_checkpoint<W: Write>(state: &SolverState, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "dt", "cell", "u", "w"])?;
    for c in 0..state.u.grid().len() {
        w.write_record([
            fmt(state.t),
            fmt(state.dt),
            c.to_string(),
            fmt(state.u.values()[c]),
            fmt(state.w.values()[c]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(grid: Grid, input: R) -> Result<SolverState> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut u = vec![f64::NAN; grid.len()];
    let mut w = vec![f64::NAN; grid.len()];
    let mut t = None;
    let mut dt = None;
    let parse = |s: Option<&str>, what: &str| -> Result<f64> {
        s.ok_or_else(|| Error::Format(format!("missing {what}")))?
            .parse::<f64>()
            .map_err(|e| Error::Format(format!("bad {what}: {e}")))
    };
    for rec in rdr.records() {
        let rec = rec?;
        let row_t = parse(rec.get(0), "t")?;
        let row_dt = parse(rec.get(1), "dt")?;
        if *t.get_or_insert(row_t) != row_t || *dt.get_or_insert(row_dt) != row_dt {
            return Err(Error::Format("inconsistent t or dt across rows".into()));
        }
        let cell: usize = rec
            .get(2)
            .ok_or_else(|| Error::Format("missing cell".into()))?
            .parse()
            .map_err(|e| Error::Format(format!("bad cell: {e}")))?;
        if cell >= grid.len() {
            return Err(Error::Format(format!("cell {cell} outside grid")));
        }
        u[cell] = parse(rec.get(3), "u")?;
        w[cell] = parse(rec.get(4), "w")?;
    }
    let (Some(t), Some(dt)) = (t, dt) else {
        return Err(Error::Format("empty checkpoint".into()));
    };
    Ok(SolverState {
        t,
        u: GridFunction::new(grid, u)?,
        w: GridFunction::new(grid, w)?,
        dt,
        last_dt: 0.0,
        newton_iters: 0,
        streak: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, mean};
    use crate::nonlinearities::{Forcing, GammaSpec};

    fn params() -> ModelParams {
        ModelParams::new(1.0, 0.0, 0.0, 3.0, 1.0, 1.0, 1e-3).unwrap()
    }

    #[test]
    fn steady_constant_has_zero_residual() {
        let p = params().with_forcing(Forcing::Constant(0.4)).unwrap();
        let cfg = StepperConfig::default();
        let g = Grid::new_1d(16, 1.0).unwrap();
        let mu = 0.8;
        let u = GridFunction::constant(g, mu);
        let w = GridFunction::constant(g, eval_f_eps(&p, mu) - 0.4);
        let (r1, r2) = residual(&p, &cfg, &u, &u, &w, 0.01);
        assert!(r1.values().iter().all(|v| *v == 0.0));
        assert!(r2.values().iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn mass_residual_integrates_to_zero() {
        let p = params();
        let cfg = StepperConfig::default();
        let g = Grid::new_2d(5, 4, 1.0, 1.0).unwrap();
        let uo = GridFunction::from_fn(g, |[x, y]| 1.0 + 0.3 * (5.0 * x + y).sin());
        let u = GridFunction::from_fn(g, |[x, y]| 1.0 + 0.2 * (3.0 * x * y).cos());
        let w = GridFunction::from_fn(g, |[x, y]| (x - y).exp());
        let (r1, _) = residual(&p, &cfg, &uo, &u, &w, 0.1);
        let expected = integrate(&u.zip_map(&uo, |a, b| (a - b) / 0.1));
        assert!((integrate(&r1) - expected).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        for scheme in [Scheme::FullyImplicit, Scheme::ConvexConcave] {
            let p = params()
                .with_gamma(GammaSpec::Physical { b: 0.5, k: 2.0, r0: 0.2 })
                .unwrap();
            let cfg = StepperConfig {
                scheme,
                ..StepperConfig::default()
            };
            for grid in [Grid::new_1d(6, 1.0).unwrap(), Grid::new_2d(3, 3, 1.0, 0.7).unwrap()] {
                let sys = System::new(&p, &cfg, grid);
                let n = grid.len();
                let uo: Vec<f64> = (0..n).map(|c| 0.6 + 0.1 * (c as f64).sin()).collect();
                let u: Vec<f64> = (0..n).map(|c| 0.5 + 0.2 * (1.3 * c as f64).cos()).collect();
                let w: Vec<f64> = (0..n).map(|c| (0.7 * c as f64).sin()).collect();
                let dt = 0.05;
                let (r0, jac) = sys.assemble(&uo, &u, &w, dt, true);
                let jac = jac.unwrap();
                let h = 1e-7;
                for col in 0..2 * n {
                    let (mut up, mut wp) = (u.clone(), w.clone());
                    if col % 2 == 0 {
                        up[col / 2] += h;
                    } else {
                        wp[col / 2] += h;
                    }
                    let (r1, _) = sys.assemble(&uo, &up, &wp, dt, false);
                    for row in 0..2 * n {
                        let fd = (r1[row] - r0[row]) / h;
                        let an = jac.get(row, col);
                        assert!(
                            (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                            "{scheme:?} row {row} col {col}: fd {fd} vs {an}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn constant_state_stays_put() {
        let p = params().with_forcing(Forcing::Constant(0.2)).unwrap();
        let cfg = StepperConfig::default();
        let g = Grid::new_1d(32, 1.0).unwrap();
        let s0 = SolverState::initial(&p, &cfg, GridFunction::constant(g, 0.7));
        let s1 = step(&p, &cfg, &s0).unwrap();
        assert!(s1.u.values().iter().all(|v| (v - 0.7).abs() < 1e-14));
        assert!(s1.t > 0.0);
    }

    #[test]
    fn step_conserves_mass_and_decreases_energy() {
        use crate::functionals::energy;
        let p = params();
        let cfg = StepperConfig {
            scheme: Scheme::ConvexConcave,
            dt_init: 1e-3,
            ..StepperConfig::default()
        };
        let g = Grid::new_1d(64, 1.0).unwrap();
        let u0 = GridFunction::from_fn(g, |[x, _]| 0.6 + 0.05 * (2.0 * std::f64::consts::PI * x).cos());
        let s0 = SolverState::initial(&p, &cfg, u0);
        let s1 = step(&p, &cfg, &s0).unwrap();
        assert!((mean(&s1.u) - mean(&s0.u)).abs() < 1e-14);
        let e0 = energy(&p, &s0.u, true).unwrap().total;
        let e1 = energy(&p, &s1.u, true).unwrap().total;
        assert!(e1 <= e0 + cfg.newton_tol, "{e1} > {e0}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let p = params();
        let cfg = StepperConfig::default();
        let g = Grid::new_1d(8, 1.0).unwrap();
        let s0 = SolverState::initial(&p, &cfg, GridFunction::from_fn(g, |[x, _]| 0.5 + x / 3.0));
        let mut buf = Vec::new();
        write_checkpoint(&s0, &mut buf).unwrap();
        let back = read_checkpoint(g, buf.as_slice()).unwrap();
        assert_eq!(back.u, s0.u);
        assert_eq!(back.w, s0.w);
        assert_eq!(back.t, s0.t);
        assert!(read_checkpoint(g, &b"t,dt,cell,u,w\n"[..]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(StepperConfig::default().validate().is_ok());
        let bad = StepperConfig {
            dt_min: 1.0,
            ..StepperConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
