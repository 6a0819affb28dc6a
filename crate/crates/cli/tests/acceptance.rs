//! Acceptance criteria, one line each. Runs the bundled scenarios and
//! re-derives every verdict from raw artifacts rather than trusting the
//! experiment's own report.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use degflow::diagnostics::DiagnosticsRecord;
use degflow::elliptic::{degenerate_elliptic_solve, ipepa_identity_residual, DegenerateOptions};
use degflow::experiments::{random_identity_pair, run_experiment, ExperimentOutcome, InitialCondition};
use degflow::grid::mean;
use degflow::moser::{
    build_schedule, is_feasible, phase1_next, phase1_threshold, phase2_fixed_point, phase2_next, Phase,
    ScheduleOptions,
};
use degflow::nonlinearities::*;
use degflow::stepper::{run, RunOptions, StepperConfig};
use degflow::{FaceMean, Grid, GridFunction, ModelParams};
use degflow_cli::{builtin, Scenario};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Duration,
    check: fn() -> Verdict,
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn scenario(name: &str) -> Scenario {
    builtin(name)
        .unwrap_or_else(|| panic!("no bundled scenario {name}"))
        .unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn outcome(name: &str) -> Result<ExperimentOutcome, String> {
    let sc = scenario(name);
    let input = sc.resolve().map_err(|e| e.to_string())?;
    run_experiment(&input, &sc.experiment).map_err(|e| e.to_string())
}

fn column(out: &ExperimentOutcome, table: &str, col: &str) -> Vec<f64> {
    let t = out.tables.iter().find(|t| t.name == table).expect("table present");
    let c = t.header.iter().position(|h| h == col).expect("column present");
    t.rows.iter().map(|r| r[c].parse().expect("numeric cell")).collect()
}

fn nonlinearity_identities() -> Verdict {
    let sets = [
        ModelParams::new(1.0, 0.0, 0.0, 6.0, 1.0, 1.0, 1e-3),
        ModelParams::new(2.0, 0.0, 0.0, 4.0, 1.0, 1.0, 1e-2),
        ModelParams::new(0.0, 0.0, 0.0, 3.0, 1.0, 1.0, 1e-4),
        ModelParams::new(1.5, 0.5, 0.5, 5.0, 1.0, 2.0, 1e-3),
    ];
    let points: Vec<f64> = (0..=240).map(|k| 10f64.powf(-6.0 + 9.0 * k as f64 / 240.0)).collect();
    let mut worst_fd = 0.0f64;
    // one-sided at the junction r = ε, where the derivatives have a kink
    let fd = |f: &dyn Fn(f64) -> f64, exact: f64, r: f64, eps: f64| {
        let h = 1e-5 * r;
        let approx = if (r - eps).abs() < 2.0 * h {
            (-3.0 * f(r) + 4.0 * f(r + h) - f(r + 2.0 * h)) / (2.0 * h)
        } else {
            (f(r + h) - f(r - h)) / (2.0 * h)
        };
        let secant = (f(2.0 * r) - f(0.5 * r)).abs() / (1.5 * r);
        (approx - exact).abs() / exact.abs().max(f(r).abs() / r).max(secant)
    };
    for p in sets {
        let p = p.map_err(|e| e.to_string())?;
        for &r in &points {
            let big_f = eval_F(&p, r).map_err(|e| e.to_string())?;
            ensure(eval_F_eps(&p, r) <= big_f * (1.0 + 1e-14), || format!("F_eps > F at r = {r}"))?;
            if r >= p.eps {
                ensure(eval_f_eps(&p, r) == eval_f(&p, r).unwrap(), || format!("f_eps ≠ f at r = {r}"))?;
            }
            ensure(eval_b_eps(&p, r) >= eval_b(&p, r).unwrap(), || format!("b_eps < b at r = {r}"))?;
            let (_, big_m) = eval_entropy_pair(&p, r).map_err(|e| e.to_string())?;
            let (m_eps, big_m_eps) = eval_entropy_pair_eps(&p, r).map_err(|e| e.to_string())?;
            ensure(big_m_eps <= big_m + 1e-10 * big_m.abs().max(1.0), || format!("M_eps > M at r = {r}"))?;
            if p.beta == 0.0 && p.s == 1.0 {
                // closed form of the unregularized pair for linear mobility
                let (m_ref, big_m_ref) = eval_entropy_pair(&p, r).unwrap();
                ensure((m_ref - r.ln()).abs() <= 1e-12 * r.ln().abs().max(1.0), || format!("m ≠ ln r at {r}"))?;
                let exact = r * r.ln() - r + 1.0;
                ensure((big_m_ref - exact).abs() <= 1e-10 * exact.abs().max(1.0), || format!("M wrong at {r}"))?;
            }
            worst_fd = worst_fd
                .max(fd(&|x| eval_F_eps(&p, x), eval_f_eps(&p, r), r, p.eps))
                .max(fd(&|x| eval_f_eps(&p, x), eval_f_eps_prime(&p, r), r, p.eps))
                .max(fd(&|x| eval_b_eps(&p, x), eval_b_eps_prime(&p, r), r, p.eps))
                .max(fd(&|x| eval_entropy_pair_eps(&p, x).unwrap().1, m_eps, r, p.eps))
                .max(fd(&|x| eval_entropy_pair_eps(&p, x).unwrap().0, 1.0 / eval_b_eps(&p, r), r, p.eps));
        }
    }
    ensure(worst_fd <= 1e-6, || format!("finite-difference mismatch {worst_fd:.2e}"))?;
    Ok(format!("4 parameter sets × {} points, worst derivative mismatch {worst_fd:.1e}", points.len()))
}

fn conservation() -> Verdict {
    let out = outcome("conservation_random_1d")?;
    let grid_cells = out.final_u.as_ref().map(|u| u.grid().len()).unwrap_or(0);
    ensure(grid_cells == 256, || format!("expected 256 cells, got {grid_cells}"))?;
    let steps = out.records.last().map_or(0, |r| r.steps);
    ensure(steps == 10_000, || format!("expected 10⁴ steps, ran {steps}"))?;
    let m0 = out.records[0].mass;
    let drift = out
        .records
        .iter()
        .map(|r| (r.mass - m0).abs() / m0.abs())
        .fold(0.0, f64::max);
    let final_mean = mean(out.final_u.as_ref().unwrap());
    let drift = drift.max((final_mean - m0).abs() / m0.abs());
    ensure(drift <= 1e-12, || format!("relative mass drift {drift:.2e}"))?;
    Ok(format!("{steps} steps on 256 cells, relative drift {drift:.1e}"))
}

fn per_step_increase(records: &[DiagnosticsRecord], value: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    records
        .windows(2)
        .map(|w| value(&w[1]) - value(&w[0]))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn energy_law() -> Verdict {
    let cc = outcome("energy_law_convex_concave")?;
    ensure(cc.records.iter().all(|r| r.steps <= 1) || cc.records.len() > 10, || "no records".into())?;
    let scale = 1.0 + cc.records.iter().map(|r| r.energy.total.abs()).fold(0.0, f64::max);
    let rise = per_step_increase(&cc.records, |r| r.energy.total).max(
        cc.records
            .iter()
            .map(|r| r.energy_increase_max)
            .fold(f64::NEG_INFINITY, f64::max),
    );
    ensure(rise <= 1e-12 * scale, || format!("energy rose by {rise:.2e} in one step"))?;

    // halve dt on the smooth cosine datum and compare per-step balance residuals
    let sc = scenario("energy_refinement_cosine");
    let input = sc.resolve().map_err(|e| e.to_string())?;
    let u0 = input.initial.build(input.grid, input.seed).map_err(|e| e.to_string())?;
    let dt = input.stepper.dt_init;
    let worst = |dt: f64| -> Result<f64, String> {
        let cfg = StepperConfig {
            dt_init: dt,
            dt_min: dt,
            dt_max: dt,
            ..input.stepper.clone()
        };
        let mut opts = RunOptions::new(input.run.t_final);
        opts.cadence = 1;
        let mut recs: Vec<DiagnosticsRecord> = Vec::new();
        run(&input.model, &cfg, &u0, &opts, &mut recs).map_err(|e| e.to_string())?;
        Ok(recs.iter().map(|r| r.energy_residual.abs()).fold(0.0, f64::max))
    };
    let (coarse, fine) = (worst(dt)?, worst(0.5 * dt)?);
    let ratio = coarse / fine;
    ensure(ratio >= 2.0, || format!("residual ratio under dt/2 is {ratio:.2}"))?;
    Ok(format!(
        "{} convex-concave steps nonincreasing (max rise {rise:.1e}); residual {coarse:.2e} → {fine:.2e}, ratio {ratio:.2}",
        cc.records.last().map_or(0, |r| r.steps)
    ))
}

fn entropy_law() -> Verdict {
    let mut summary = Vec::new();
    for name in ["entropy_lyapunov_2d", "separation_1d_canonical", "conservation_random_1d"] {
        let sc = scenario(name);
        ensure(sc.model.g.is_zero() && sc.model.gamma == GammaSpec::Zero, || format!("{name}: g or γ nonzero"))?;
        let out = outcome(name)?;
        let tol = 10.0 * sc.stepper.newton_tol;
        let mut worst = 0.0f64;
        for r in &out.records {
            let l = r.lyapunov.ok_or("lyapunov not tracked")?;
            let inc = r.lyapunov_increase_max.ok_or("lyapunov increments not tracked")?;
            worst = worst.max(inc / (1.0 + l.abs()));
        }
        for w in out.records.windows(2) {
            let (a, b) = (w[0].lyapunov.unwrap(), w[1].lyapunov.unwrap());
            worst = worst.max((b - a) / (1.0 + a.abs()));
        }
        ensure(worst <= tol, || format!("{name}: Lyapunov rose by {worst:.2e} (relative)"))?;
        summary.push(format!("{name} {worst:.0e}"));
    }
    Ok(format!("max relative per-step rise: {}", summary.join(", ")))
}

fn elliptic_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let grids = [
        Grid::new_1d(128, 1.0).unwrap(),
        Grid::new_2d(32, 24, 1.0, 0.75).unwrap(),
    ];
    let mut worst = 0.0f64;
    let mut plateaus = 0;
    for k in 0..100 {
        let grid = grids[k % 2];
        let (b, w) = random_identity_pair(grid, &mut rng);
        plateaus += usize::from(b.values().iter().any(|&x| x == 0.0));
        for mean in [FaceMean::Arithmetic, FaceMean::Harmonic] {
            worst = worst.max(ipepa_identity_residual(&b, &w, mean).relative);
        }
    }
    ensure(worst <= 1e-12, || format!("identity residual {worst:.2e}"))?;
    ensure(plateaus == 100, || format!("only {plateaus} of 100 mobilities had zero plateaus"))?;

    let mut worst_gap = 0.0f64;
    for k in 0..10 {
        let (b, phi) = random_identity_pair(grids[k % 2], &mut rng);
        let rep = degenerate_elliptic_solve(&b, &phi, DegenerateOptions::default()).map_err(|e| e.to_string())?;
        let inc: Vec<f64> = rep.ladder.iter().skip(1).map(|l| l.increment).collect();
        ensure(inc.windows(2).all(|w| w[1] < w[0]), || format!("ladder not Cauchy: {inc:?}"))?;
        worst_gap = worst_gap.max(rep.extrapolation_gap.unwrap_or(0.0));
    }
    let scenario_ok = outcome("ipepa_identity")?.report.passed;
    ensure(scenario_ok, || "bundled ipepa_identity scenario failed".into())?;
    Ok(format!(
        "100 pairs with plateaus, max residual {worst:.1e}; 10 floor ladders Cauchy, extrapolation gap ≤ {worst_gap:.1e}"
    ))
}

fn separation() -> Verdict {
    let sc = scenario("separation_1d_canonical");
    ensure(
        sc.model.delta == 1.0 && sc.model.beta == 0.0 && sc.model.s == 1.0 && sc.model.kappa == 6.0,
        || "canonical parameters changed".into(),
    )?;
    ensure(sc.grid.cells == [256] && sc.t_final == 1.0, || "canonical grid changed".into())?;
    let InitialCondition::RaisedCosine { floor, .. } = sc.initial else {
        return Err("canonical datum changed".into());
    };
    let out = outcome("separation_1d_canonical")?;
    let initial_min = floor;
    let post: Vec<(f64, f64)> = out
        .records
        .iter()
        .filter(|r| r.t >= 0.1 * sc.t_final)
        .map(|r| (r.t, r.min_u))
        .collect();
    ensure(post.len() > 10, || "too few post-transient records".into())?;
    let lowest = post.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let lift = lowest / initial_min;
    ensure(lift >= 10.0, || format!("post-transient floor only {lift:.2}× the initial minimum"))?;
    let mut established = 0.0f64;
    let mut worst_drop = 0.0f64;
    for &(_, m) in &post {
        established = established.max(m);
        worst_drop = worst_drop.max((established - m) / established);
    }
    ensure(worst_drop <= 0.01, || format!("floor dropped {:.2}% below its running maximum", 100.0 * worst_drop))?;
    ensure(out.report.passed, || "separation report failed".into())?;
    Ok(format!(
        "floor {lowest:.4} = {lift:.1}× initial minimum, largest drop {:.2e}%",
        100.0 * worst_drop
    ))
}

fn moser() -> Verdict {
    // fixed points and the flip of monotonicity at them
    let mut worst_fp = 0.0f64;
    for i in 0..=50 {
        let s = 5.0 * i as f64 / 50.0;
        let t = 3.0 * (s + 2.0);
        ensure(phase1_threshold(3, s) == t, || format!("phase-1 threshold at s = {s}"))?;
        worst_fp = worst_fp.max((phase1_next(3, s, t).unwrap() - t).abs() / t);
        for kappa in [2.0 * s + 3.5, 2.0 * s + 10.0] {
            let fp = 3.0 * (kappa - s - 1.0);
            ensure(phase2_fixed_point(3, s, kappa) == Some(fp), || format!("phase-2 fixed point at {s}, {kappa}"))?;
            worst_fp = worst_fp.max((phase2_next(3, s, kappa, fp).unwrap() - fp).abs() / fp);
            let step = 1e-9 * fp;
            ensure(phase2_next(3, s, kappa, fp - step).unwrap() > fp - step, || "phase 2 below fixed point".into())?;
            ensure(phase2_next(3, s, kappa, fp + step).unwrap() < fp + step, || "phase 2 above fixed point".into())?;
        }
        let step = 1e-9 * t;
        ensure(phase1_next(3, s, t - step).unwrap() < t - step, || "phase 1 below threshold".into())?;
        ensure(phase1_next(3, s, t + step).unwrap() > t + step, || "phase 1 above threshold".into())?;
    }
    ensure(worst_fp <= 4.0 * f64::EPSILON, || format!("fixed-point residual {worst_fp:.2e}"))?;

    // feasibility sweep including the boundary κ = 2s + 3; away from it the
    // flag must also agree with the ordering of fixed point and threshold
    let mut pairs = 0;
    for i in 0..25 {
        let s = 5.0 * i as f64 / 24.0;
        let boundary = 2.0 * s + 3.0;
        let mut kappas: Vec<f64> = (0..36).map(|j| s + 1.0 + 0.5 * j as f64).collect();
        kappas.extend([boundary, boundary + 1e-9, boundary - 1e-9, boundary + 20.0]);
        for kappa in kappas {
            let expected = kappa > 2.0 * s + 3.0;
            if (kappa - boundary).abs() > 1e-6 {
                ensure(expected == (3.0 * (kappa - s - 1.0) > 3.0 * (s + 2.0)), || "ordering disagrees".into())?;
            }
            let sched = build_schedule(3, s, kappa, None, 0.1, ScheduleOptions::default());
            let feasible = sched.as_ref().map(|s| s.feasible).unwrap_or(false);
            ensure(feasible == expected && is_feasible(3, s, kappa) == expected, || {
                format!("feasibility wrong at s = {s}, κ = {kappa}")
            })?;
            if expected {
                let sched = sched.unwrap();
                ensure(sched.phase2_steps <= 10_000, || "schedule did not terminate".into())?;
            }
            pairs += 1;
        }
    }
    ensure(pairs >= 1000, || format!("sweep has {pairs} pairs"))?;

    // closed-form geometric iterate
    let mut worst_cf = 0.0f64;
    for (s, kappa, nu0) in [(0.0, 4.0, 1.5), (1.0, 6.0, 1.9), (2.5, 12.0, 1.2), (0.3, 3.7, 1.01)] {
        let fp = 3.0 * (kappa - s - 1.0);
        let mut nu: f64 = nu0;
        for n in 1..=200 {
            nu = phase2_next(3, s, kappa, nu).unwrap();
            let closed = fp - (fp - nu0) * (5.0f64 / 6.0).powi(n);
            worst_cf = worst_cf.max((nu - closed).abs() / closed.abs());
        }
        let sched = build_schedule(3, s, kappa, Some(nu0 - 1.0), 0.1, ScheduleOptions::default())
            .map_err(|e| e.to_string())?;
        for (n, e) in sched.exponents.iter().filter(|e| e.phase == Phase::Two).enumerate() {
            let closed = fp - (fp - nu0) * (5.0f64 / 6.0).powi(n as i32);
            worst_cf = worst_cf.max((e.nu - closed).abs() / closed);
        }
    }
    ensure(worst_cf <= 1e-12, || format!("closed form differs by {worst_cf:.2e}"))?;
    Ok(format!(
        "fixed points within {worst_fp:.0e}, {pairs} (s, κ) pairs, closed form within {worst_cf:.0e}"
    ))
}

fn eps_ladder() -> Verdict {
    let sc = scenario("eps_ladder_existence");
    let input = sc.resolve().map_err(|e| e.to_string())?;
    ensure(input.run.t_final == 0.5, || "ladder must stop at T = 0.5".into())?;
    ensure(matches!(input.initial, InitialCondition::Cosine { .. }), || "cosine datum expected".into())?;
    let u0 = input.initial.build(input.grid, input.seed).map_err(|e| e.to_string())?;
    let finals: Vec<GridFunction> = [1e-2, 1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&eps| {
            let p = input.model.with_eps(eps).map_err(|e| e.to_string())?;
            let mut recs: Vec<DiagnosticsRecord> = Vec::new();
            run(&p, &input.stepper, &u0, &input.run, &mut recs)
                .map(|s| s.final_state.u)
                .map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let h = input.grid.cell_volume();
    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|w| {
            w[0].values()
                .iter()
                .zip(w[1].values())
                .map(|(a, b)| (a - b).powi(2) * h)
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    ensure(diffs.windows(2).all(|w| w[1] < w[0]), || format!("not strictly decreasing: {diffs:?}"))?;
    ensure(outcome("eps_ladder_existence")?.report.passed, || "bundled scenario failed".into())?;
    Ok(format!(
        "‖u_ε − u_ε/10‖ for ε = 1e-2, 1e-3, 1e-4: {:.2e}, {:.2e}, {:.2e}",
        diffs[0], diffs[1], diffs[2]
    ))
}

fn absorbing() -> Verdict {
    let sc = scenario("absorbing_energy");
    ensure(sc.t_final == 10.0, || "absorbing runs must reach T = 10".into())?;
    let out = outcome("absorbing_energy")?;
    let t = column(&out, "energies", "t");
    let a = column(&out, "energies", "energy_run0");
    let b = column(&out, "energies", "energy_run1");
    let ratio = b[0] / a[0];
    ensure((ratio - 100.0).abs() <= 1e-6 * 100.0, || format!("initial energy ratio {ratio}"))?;
    let (ta, ea, eb) = (*t.last().unwrap(), *a.last().unwrap(), *b.last().unwrap());
    ensure((ta - 10.0).abs() <= 1e-9, || format!("table ends at t = {ta}"))?;
    let gap = (ea - eb).abs() / ea.abs().max(eb.abs());
    ensure(gap <= 0.1, || format!("terminal energies {ea:.6e} and {eb:.6e} differ by {:.1}%", 100.0 * gap))?;
    Ok(format!(
        "initial energies {:.3e} and {:.3e}, terminal {ea:.6e} vs {eb:.6e} (gap {gap:.1e})",
        a[0], b[0]
    ))
}

fn contraction() -> Verdict {
    let out = outcome("contraction_after_separation")?;
    let t = column(&out, "distance", "t");
    let d = column(&out, "distance", "grad_distance");
    let metric = column(&out, "distance", "phase_metric");
    let initial_metric = metric[0];
    ensure((initial_metric - 1e-3).abs() <= 1e-9, || format!("initial phase distance {initial_metric:e}"))?;
    let max_metric = metric.iter().copied().fold(0.0, f64::max);
    ensure(max_metric <= 0.1, || format!("phase distance reached {max_metric:.3e}"))?;
    let window: Vec<(f64, f64)> = t
        .iter()
        .zip(&d)
        .filter(|(t, _)| **t >= 0.1 - 1e-12 && **t <= 1.0 + 1e-12)
        .map(|(t, d)| (*t, *d))
        .collect();
    let n = window.len() as f64;
    let (st, sl) = window.iter().fold((0.0, 0.0), |acc, (t, d)| (acc.0 + t, acc.1 + d.ln()));
    let (mt, ml) = (st / n, sl / n);
    let rate = window.iter().map(|(t, d)| (t - mt) * (d.ln() - ml)).sum::<f64>()
        / window.iter().map(|(t, _)| (t - mt).powi(2)).sum::<f64>();
    let (t0, d0) = window[0];
    let constant = window
        .iter()
        .map(|(t, d)| d / (d0 * (rate * (t - t0)).exp()))
        .fold(0.0, f64::max);
    ensure(constant <= 10.0, || format!("envelope constant {constant:.2}"))?;
    ensure(out.report.passed, || "contraction report failed".into())?;
    Ok(format!(
        "{} samples, fitted rate {rate:.2}, envelope constant {constant:.3}, max phase distance {max_metric:.1e}",
        window.len()
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            name: "nonlinearity identities",
            budget: Duration::from_secs(1),
            check: nonlinearity_identities,
        },
        Criterion {
            name: "discrete conservation",
            budget: Duration::from_secs(30),
            check: conservation,
        },
        Criterion {
            name: "energy law",
            budget: Duration::from_secs(120),
            check: energy_law,
        },
        Criterion {
            name: "entropy law",
            budget: Duration::from_secs(120),
            check: entropy_law,
        },
        Criterion {
            name: "elliptic identity",
            budget: Duration::from_secs(30),
            check: elliptic_identity,
        },
        Criterion {
            name: "separation",
            budget: Duration::from_secs(300),
            check: separation,
        },
        Criterion {
            name: "Moser schedules",
            budget: Duration::from_secs(1),
            check: moser,
        },
        Criterion {
            name: "regularization ladder",
            budget: Duration::from_secs(600),
            check: eps_ladder,
        },
        Criterion {
            name: "absorbing behaviour",
            budget: Duration::from_secs(600),
            check: absorbing,
        },
        Criterion {
            name: "contraction after separation",
            budget: Duration::from_secs(300),
            check: contraction,
        },
    ];
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    let mut ran = 0;
    for c in &criteria {
        if !filters.is_empty() && !filters.iter().any(|f| c.name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let verdict = (c.check)();
        let elapsed = start.elapsed();
        let timing = format!("{:.2}s of {}s", elapsed.as_secs_f64(), c.budget.as_secs());
        match verdict {
            Ok(detail) if elapsed <= c.budget => println!("PASS  {:<30} [{timing}]  {detail}", c.name),
            Ok(detail) => {
                failures += 1;
                println!("FAIL  {:<30} [{timing}]  over budget; {detail}", c.name);
            }
            Err(why) => {
                failures += 1;
                println!("FAIL  {:<30} [{timing}]  {why}", c.name);
            }
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
