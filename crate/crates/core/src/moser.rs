//! Exponent schedules of the Moser iteration for `z = u⁻¹`.
//!
//! Two recursions drive the ladder. The second phase starts from
//! `ν₀ = 1 + ι` and climbs until it passes the first-phase threshold; the
//! first phase then grows without bound. In three dimensions
//!
//! ```text
//! phase 2: ν' = (5/6)ν + (κ − s − 1)/2     fixed point 3(κ − s − 1)
//! phase 1: ν' = (7ν − 3s − 6)/6           fixed point 3(s + 2)
//! ```
//!
//! and in two dimensions
//!
//! ```text
//! phase 2: ν' = ν + (κ − 1 − s)/2
//! phase 1: ν' = (3/2)ν − (s + 2)/2        fixed point s + 2
//! ```
//!
//! The hand-over exists exactly when `κ > 2s + 3` (d = 3) or
//! `κ > s + 1 ≥ 2` (d = 2).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;

fn check_dim(d: usize) -> Result<()> {
    if d == 2 || d == 3 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field: "d",
            constraint: format!("dimension must be 2 or 3, got {d}"),
        })
    }
}

fn check_nu(nu: f64) -> Result<()> {
    if nu > 1.0 && nu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            field: "nu",
            constraint: format!("need ν > 1, got {nu}"),
        })
    }
}

pub fn phase1_next(d: usize, s: f64, nu: f64) -> Result<f64> {
    check_dim(d)?;
    check_nu(nu)?;
    Ok(if d == 3 {
        (7.0 * nu - 3.0 * s - 6.0) / 6.0
    } else {
        1.5 * nu - (s + 2.0) / 2.0
    })
}

pub fn phase2_next(d: usize, s: f64, kappa: f64, nu: f64) -> Result<f64> {
    check_dim(d)?;
    check_nu(nu)?;
    Ok(if d == 3 {
        5.0 / 6.0 * nu + 0.5 * (kappa - s - 1.0)
    } else {
        nu + 0.5 * (kappa - 1.0 - s)
    })
}

/// Exponent the second phase must exceed: `3(s+2)` or `s+2`.
pub fn phase1_threshold(d: usize, s: f64) -> f64 {
    if d == 3 {
        3.0 * (s + 2.0)
    } else {
        s + 2.0
    }
}

/// `3(κ − s − 1)` in three dimensions; the planar climb has none.
pub fn phase2_fixed_point(d: usize, s: f64, kappa: f64) -> Option<f64> {
    (d == 3).then(|| 3.0 * (kappa - s - 1.0))
}

/// Compatibility condition between the two phases.
pub fn is_feasible(d: usize, s: f64, kappa: f64) -> bool {
    match d {
        3 => kappa > 2.0 * s + 3.0,
        2 => kappa > s + 1.0 && s + 1.0 >= 2.0,
        _ => false,
    }
}

/// Hölder/interpolation exponents used to pass from `ν_{n−1}` to `ν_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interpolation {
    pub theta: f64,
    pub p: f64,
    pub q: f64,
    pub p_star: f64,
    pub q_star: f64,
}

impl Interpolation {
    fn from_inverses(theta: f64, inv_p: f64, inv_q: f64) -> Self {
        Self {
            theta,
            p: 1.0 / inv_p,
            q: 1.0 / inv_q,
            p_star: 1.0 / (1.0 - inv_p),
            q_star: 1.0 / (1.0 - inv_q),
        }
    }
}

pub fn phase1_interpolation(d: usize, s: f64, nu: f64) -> Result<Interpolation> {
    check_dim(d)?;
    check_nu(nu)?;
    Ok(if d == 3 {
        let a = 3.0 * s / (10.0 * nu);
        Interpolation::from_inverses((15.0 * nu - 9.0 * s) / (35.0 * nu - 15.0 * s), 0.5 + a, 1.0 / 6.0 + a)
    } else {
        let a = s / (2.0 * nu);
        Interpolation::from_inverses((2.0 * nu - s) / (3.0 * nu - s), 0.5 * (1.0 + a), s / (4.0 * nu))
    })
}

pub fn phase2_interpolation(d: usize, s: f64, kappa: f64, nu: f64) -> Result<Interpolation> {
    check_dim(d)?;
    check_nu(nu)?;
    let k = kappa + nu + 1.0;
    let inv_p = 0.5 * (1.0 + s / k);
    Ok(if d == 3 {
        let theta = 1.0 / (1.0 + 2.0 * nu / (3.0 * k - 3.0 * s));
        Interpolation::from_inverses(theta, inv_p, 0.5 * (1.0 / 3.0 + s / k))
    } else {
        let theta = 1.0 / (1.0 + nu / (k - s));
        Interpolation::from_inverses(theta, inv_p, s / (2.0 * k))
    })
}

/// Next exponent recovered from the interpolation identity
/// `1/(p*(ν' + 1)) = θ/r` instead of the closed-form recursion.
pub fn dual_next(d: usize, s: f64, kappa: f64, nu: f64, phase: Phase) -> Result<f64> {
    let (ip, r) = match phase {
        Phase::One => (phase1_interpolation(d, s, nu)?, if d == 3 { nu } else { 2.0 * nu }),
        Phase::Two => (phase2_interpolation(d, s, kappa, nu)?, kappa + nu + 1.0),
    };
    Ok(r / (ip.theta * ip.p_star) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "phase1")]
    One,
    #[serde(rename = "phase2")]
    Two,
}

/// One rung of the ladder. Interpolation data refer to the step that
/// produced `nu`; the starting rung has none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserStep {
    pub n: usize,
    pub nu: f64,
    pub phase: Phase,
    pub theta: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub p_star: Option<f64>,
    pub q_star: Option<f64>,
    /// Start-time offset `τ_n`.
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoserSchedule {
    pub d: usize,
    pub s: f64,
    pub kappa: f64,
    pub nu0: f64,
    pub iota: f64,
    pub eps_time: f64,
    pub phase2_steps: usize,
    pub phase1_steps: usize,
    pub exponents: Vec<MoserStep>,
    pub tau_ladder: Vec<f64>,
    /// `ε_time·π²/6`, the bound on every `τ_n`.
    pub tau_bound: f64,
    pub feasible: bool,
}

impl MoserSchedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScheduleOptions {
    /// Rungs appended after the hand-over.
    pub phase1_steps: usize,
    /// Position of `τ_n` inside its window `[τ_{n−1}, τ_{n−1} + ε_time/n²]`.
    pub window_fraction: f64,
    /// Hard cap on second-phase rungs.
    pub max_phase2_steps: usize,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self {
            phase1_steps: 12,
            window_fraction: 0.5,
            max_phase2_steps: 10_000,
        }
    }
}

/// Builds the ladder from `ν₀ = 1 + ι`. `iota` defaults to ½ for `d = 3`
/// and to `κ − 2` for `d = 2`. Infeasible parameters give an empty,
/// infeasible schedule rather than an error.
pub fn build_schedule(
    d: usize,
    s: f64,
    kappa: f64,
    iota: Option<f64>,
    eps_time: f64,
    opts: ScheduleOptions,
) -> Result<MoserSchedule> {
    check_dim(d)?;
    if !(s >= 0.0 && s.is_finite() && kappa.is_finite()) {
        return Err(Error::InvalidParameter {
            field: "s",
            constraint: format!("need finite s ≥ 0 and κ, got s = {s}, κ = {kappa}"),
        });
    }
    if !(eps_time > 0.0) {
        return Err(Error::InvalidParameter {
            field: "eps_time",
            constraint: format!("need ε_time > 0, got {eps_time}"),
        });
    }
    if !(opts.window_fraction > 0.0 && opts.window_fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            field: "window_fraction",
            constraint: "need ρ ∈ (0, 1]".into(),
        });
    }
    let iota = iota.unwrap_or(if d == 3 { 0.5 } else { kappa - 2.0 });
    if d == 3 && !(iota > 0.0 && iota < 1.0) {
        return Err(Error::InvalidParameter {
            field: "iota",
            constraint: format!("need ι ∈ (0, 1) in three dimensions, got {iota}"),
        });
    }
    let nu0 = 1.0 + iota;
    let tau_bound = eps_time * std::f64::consts::PI.powi(2) / 6.0;
    let mut sched = MoserSchedule {
        d,
        s,
        kappa,
        nu0,
        iota,
        eps_time,
        phase2_steps: 0,
        phase1_steps: 0,
        exponents: Vec::new(),
        tau_ladder: Vec::new(),
        tau_bound,
        feasible: false,
    };
    if !is_feasible(d, s, kappa) || !(iota > 0.0) {
        return Ok(sched);
    }
    sched.feasible = true;
    let threshold = phase1_threshold(d, s);
    let mut tau = 0.0;
    let mut push = |sched: &mut MoserSchedule, nu: f64, phase: Phase, ip: Option<Interpolation>| {
        let n = sched.exponents.len();
        if n > 0 {
            tau += eps_time * opts.window_fraction / (n * n) as f64;
        }
        sched.tau_ladder.push(tau);
        sched.exponents.push(MoserStep {
            n,
            nu,
            phase,
            theta: ip.map(|i| i.theta),
            p: ip.map(|i| i.p),
            q: ip.map(|i| i.q),
            p_star: ip.map(|i| i.p_star),
            q_star: ip.map(|i| i.q_star),
            tau,
        });
    };
    let mut nu = nu0;
    push(&mut sched, nu, Phase::Two, None);
    while nu <= threshold {
        if sched.phase2_steps >= opts.max_phase2_steps {
            return Err(Error::Solver(format!(
                "second phase did not pass ν = {threshold} within {} steps",
                opts.max_phase2_steps
            )));
        }
        let ip = phase2_interpolation(d, s, kappa, nu)?;
        nu = phase2_next(d, s, kappa, nu)?;
        sched.phase2_steps += 1;
        push(&mut sched, nu, Phase::Two, Some(ip));
    }
    for _ in 0..opts.phase1_steps {
        let ip = phase1_interpolation(d, s, nu)?;
        nu = phase1_next(d, s, nu)?;
        sched.phase1_steps += 1;
        push(&mut sched, nu, Phase::One, Some(ip));
    }
    Ok(sched)
}

/// Empirical norms of `z = u⁻¹` for one rung.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZLadderRow {
    pub n: usize,
    pub nu: f64,
    pub t_start: f64,
    /// `sup_t ‖z(t)‖_{L^ν}` over snapshots with `t ≥ t_start`.
    pub sup_norm: f64,
    /// `(∫ ‖z‖^ν_{L^{rν}} dt)^{1/ν}` with `r = 3` (d = 3) or `r = 2`.
    pub space_time_norm: f64,
    /// `(sup_norm^ν + c_Ω·space_time_norm^ν)^{1/ν}`.
    pub combined: f64,
}

/// Evaluates the schedule's norms on a trajectory, with rung `n` starting
/// at `t_origin + τ_n`. Uses `c_Ω = 1`.
pub fn z_norm_ladder(
    snapshots: &[(f64, GridFunction)],
    schedule: &MoserSchedule,
    t_origin: f64,
) -> Result<Vec<ZLadderRow>> {
    for (_, u) in snapshots {
        if let Some(cell) = u.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::Singularity {
                cell,
                value: u.values()[cell],
            });
        }
    }
    let r = if schedule.d == 3 { 3.0 } else { 2.0 };
    let lp = |u: &GridFunction, e: f64| -> f64 {
        (u.values().iter().map(|v| v.powf(-e)).sum::<f64>() * u.grid().cell_volume()).powf(1.0 / e)
    };
    let mut rows = Vec::with_capacity(schedule.exponents.len());
    for step in &schedule.exponents {
        let nu = step.nu;
        let t_start = t_origin + step.tau;
        let window: Vec<&(f64, GridFunction)> = snapshots.iter().filter(|(t, _)| *t >= t_start).collect();
        let sup = window.iter().map(|(_, u)| lp(u, nu)).fold(0.0, f64::max);
        let mut integral = 0.0;
        for pair in window.windows(2) {
            let (ta, ua) = pair[0];
            let (tb, ub) = pair[1];
            integral += 0.5 * (tb - ta) * (lp(ua, r * nu).powf(nu) + lp(ub, r * nu).powf(nu));
        }
        let st = integral.powf(1.0 / nu);
        rows.push(ZLadderRow {
            n: step.n,
            nu,
            t_start,
            sup_norm: sup,
            space_time_norm: st,
            combined: (sup.powf(nu) + st.powf(nu)).powf(1.0 / nu),
        });
    }
    Ok(rows)
}
