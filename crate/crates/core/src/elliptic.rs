//! Auxiliary elliptic problems: the initial-data mollifier
//! `u − ε²Δu = u₀` and the degenerate problem `−div(b∇w) + w = φ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{face_average, gradient_faces, divergence, face_product, FaceField, FaceMean, Grid, GridFunction};
use crate::linalg::conjugate_gradient;

/// Relative residual target for every CG solve in this module.
pub const CG_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct EllipticSolveReport {
    pub solution: GridFunction,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Applies `w ↦ c·w + Σ_faces B_f (w_i − w_j)/h²` (matrix form of
/// `c·w − div(B∇w)` with zero boundary flux).
fn apply_weighted(grid: &Grid, faces: &FaceField, shift: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = shift * xi;
    }
    for axis in 0..grid.dim() {
        let inv_h2 = 1.0 / (grid.h(axis) * grid.h(axis));
        let b = faces.axis(axis);
        for (f, l, r) in grid.faces(axis) {
            let flux = b[f] * (x[l] - x[r]) * inv_h2;
            y[l] += flux;
            y[r] -= flux;
        }
    }
}

fn weighted_diagonal(grid: &Grid, faces: &FaceField, shift: f64) -> Vec<f64> {
    let mut d = vec![shift; grid.len()];
    for axis in 0..grid.dim() {
        let inv_h2 = 1.0 / (grid.h(axis) * grid.h(axis));
        let b = faces.axis(axis);
        for (f, l, r) in grid.faces(axis) {
            d[l] += b[f] * inv_h2;
            d[r] += b[f] * inv_h2;
        }
    }
    d
}

fn solve_weighted(grid: &Grid, faces: &FaceField, shift: f64, rhs: &[f64], x0: Option<&[f64]>) -> Result<EllipticSolveReport> {
    let inv_diag: Vec<f64> = weighted_diagonal(grid, faces, shift).iter().map(|d| 1.0 / d).collect();
    let out = conjugate_gradient(
        |x, y| apply_weighted(grid, faces, shift, x, y),
        rhs,
        x0,
        Some(&inv_diag),
        CG_TOL,
        10 * grid.len().max(10),
    )?;
    Ok(EllipticSolveReport {
        solution: GridFunction::new(*grid, out.x)?,
        residual_norm: out.relative_residual,
        iterations: out.iterations,
    })
}

/// Solves `(I − ε²Δ_h) u = u₀` with Neumann closure.
pub fn mollify_initial(u0: &GridFunction, eps: f64) -> Result<GridFunction> {
    Ok(mollify_initial_report(u0, eps)?.solution)
}

pub fn mollify_initial_report(u0: &GridFunction, eps: f64) -> Result<EllipticSolveReport> {
    if !u0.is_finite() {
        return Err(Error::Solver("initial datum is not finite".into()));
    }
    let grid = *u0.grid();
    let mut faces = FaceField::zeros(grid);
    for axis in 0..grid.dim() {
        faces.axis_mut(axis).fill(eps * eps);
    }
    solve_weighted(&grid, &faces, 1.0, u0.values(), Some(u0.values()))
}

/// Options for [`degenerate_elliptic_solve`].
#[derive(Debug, Clone, Copy)]
pub struct DegenerateOptions {
    pub face_mean: FaceMean,
    /// Floors `η₀h², η₀h²/10, …` (`h` the smallest spacing) used when the
    /// face mobility vanishes somewhere.
    pub eta_start: f64,
    pub eta_levels: usize,
    /// Allowed gap between the extrapolated floor ladder and the direct
    /// unfloored solve, relative to `1 + ‖w‖`.
    pub agreement_tol: f64,
}

impl Default for DegenerateOptions {
    fn default() -> Self {
        Self {
            face_mean: FaceMean::Arithmetic,
            eta_start: 1e-2,
            eta_levels: 8,
            agreement_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaLevel {
    pub eta: f64,
    /// `‖w_η − w_{previous η}‖_{L²}`; zero for the first level.
    pub increment: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct DegenerateSolveReport {
    pub solution: GridFunction,
    pub residual_norm: f64,
    pub iterations: usize,
    /// Empty when the face mobility is bounded away from zero.
    pub ladder: Vec<EtaLevel>,
    /// `‖w_Richardson − w‖_{L²}` when a ladder was run.
    pub extrapolation_gap: Option<f64>,
    /// `|∫b|∇w|² + ‖w‖² − (φ, w)|`.
    pub energy_identity_residual: f64,
}

/// Solves `−div(b∇w) + w = φ` with zero-flux faces for `b ≥ 0`.
///
/// When some face mobility vanishes, the problem is solved along a ladder of
/// floors `max(b_face, η)` with `η` measured in units of `h²`; the ladder must be Cauchy, its Richardson limit
/// must agree with the unfloored discrete solve (which is well posed thanks to
/// the zeroth-order term), and the latter is returned.
pub fn degenerate_elliptic_solve(
    b_field: &GridFunction,
    phi: &GridFunction,
    opts: DegenerateOptions,
) -> Result<DegenerateSolveReport> {
    if b_field.grid() != phi.grid() {
        return Err(Error::Shape {
            expected: b_field.grid().len(),
            found: phi.grid().len(),
        });
    }
    if let Some(cell) = b_field.values().iter().position(|&b| !(b >= 0.0)) {
        return Err(Error::InvalidParameter {
            field: "b_field",
            constraint: format!("mobility must be nonnegative (cell {cell})"),
        });
    }
    if !phi.is_finite() {
        return Err(Error::Solver("right-hand side is not finite".into()));
    }
    let grid = *phi.grid();
    let faces = face_average(b_field, opts.face_mean);
    let degenerate = (0..grid.dim()).any(|a| faces.axis(a).iter().any(|&b| b <= 0.0));

    let direct = solve_weighted(&grid, &faces, 1.0, phi.values(), Some(phi.values()))?;
    let mut ladder = Vec::new();
    let mut extrapolation_gap = None;
    let mut iterations = direct.iterations;

    if degenerate {
        let mut previous: Option<GridFunction> = None;
        let mut before_previous: Option<GridFunction> = None;
        let h_min = (0..grid.dim()).map(|a| grid.h(a)).fold(f64::INFINITY, f64::min);
        let mut eta = opts.eta_start * h_min * h_min;
        for _ in 0..opts.eta_levels {
            let mut floored = faces.clone();
            for a in 0..grid.dim() {
                for b in floored.axis_mut(a) {
                    *b = b.max(eta);
                }
            }
            let rep = solve_weighted(&grid, &floored, 1.0, phi.values(), previous.as_ref().map(|p| p.values()))?;
            iterations += rep.iterations;
            let increment = previous
                .as_ref()
                .map(|p| rep.solution.zip_map(p, |a, b| a - b).norm_l2())
                .unwrap_or(0.0);
            ladder.push(EtaLevel {
                eta,
                increment,
                iterations: rep.iterations,
            });
            before_previous = previous.take();
            previous = Some(rep.solution);
            eta /= 10.0;
        }
        let scale = 1.0 + phi.norm_l2();
        for w in ladder.windows(2).skip(1) {
            // increments shrink (up to solver noise) along a Cauchy ladder
            if w[1].increment > w[0].increment + 1e-10 * scale {
                return Err(Error::DegenerateSolve(format!(
                    "increment grew from {:e} to {:e} at eta = {:e}",
                    w[0].increment, w[1].increment, w[1].eta
                )));
            }
        }
        if let (Some(last), Some(prev)) = (previous, before_previous) {
            let richardson = last.zip_map(&prev, |a, b| (10.0 * a - b) / 9.0);
            let gap = richardson.zip_map(&direct.solution, |a, b| a - b).norm_l2();
            if gap > opts.agreement_tol * (1.0 + direct.solution.norm_l2()) {
                return Err(Error::DegenerateSolve(format!(
                    "extrapolated floor ladder misses the unfloored solve by {gap:e}"
                )));
            }
            extrapolation_gap = Some(gap);
        }
    }

    let w = direct.solution;
    let gw = gradient_faces(&w);
    let weighted = face_product(&faces, &gw).dot(&gw);
    let energy_identity_residual = (weighted + w.dot(&w) - phi.dot(&w)).abs();
    Ok(DegenerateSolveReport {
        solution: w,
        residual_norm: direct.residual_norm,
        iterations,
        ladder,
        extrapolation_gap,
        energy_identity_residual,
    })
}

/// Both sides of the integration-by-parts identity
/// `(−div(b∇w), w) = ∫ b|∇w|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResidual {
    pub lhs: f64,
    pub rhs: f64,
    pub absolute: f64,
    pub relative: f64,
}

pub fn ipepa_identity_residual(b_field: &GridFunction, w: &GridFunction, mean: FaceMean) -> IdentityResidual {
    let faces = face_average(b_field, mean);
    let gw = gradient_faces(w);
    let flux = face_product(&faces, &gw);
    let lhs = -divergence(&flux).dot(w);
    let rhs = flux.dot(&gw);
    let absolute = (lhs - rhs).abs();
    let scale = lhs.abs().max(rhs.abs());
    IdentityResidual {
        lhs,
        rhs,
        absolute,
        relative: if scale > 0.0 { absolute / scale } else { absolute },
    }
}
