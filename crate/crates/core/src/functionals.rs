//! Discrete energy, entropy, phase-space metric and dissipation.
//!
//! Gradients are always taken on faces, exactly as in the time stepper, so
//! the summation-by-parts identities behind the energy law hold to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{face_average, gradient_faces, laplacian, FaceMean, GridFunction};
use crate::nonlinearities::{
    eval_F, eval_F_eps, eval_Gamma, eval_b_eps, eval_entropy_pair, eval_entropy_pair_eps, ModelParams,
};

/// Split of the energy into its four contributions.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `½‖∇u‖²`
    pub dirichlet: f64,
    /// `∫F(u)` or `∫F_ε(u)`
    pub potential_f: f64,
    /// `∫Γ(u)`
    pub potential_gamma: f64,
    /// `−∫g u`
    pub forcing: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn from_parts(dirichlet: f64, potential_f: f64, potential_gamma: f64, forcing: f64) -> Self {
        Self {
            dirichlet,
            potential_f,
            potential_gamma,
            forcing,
            total: dirichlet + potential_f + potential_gamma + forcing,
        }
    }

    pub const CSV_HEADER: [&'static str; 6] = ["t", "dirichlet", "F", "Gamma", "forcing", "total"];

    /// One CSV row `(t, dirichlet, F, Gamma, forcing, total)`.
    pub fn csv_row(&self, t: f64) -> [String; 6] {
        use crate::grid::fmt;
        [
            fmt(t),
            fmt(self.dirichlet),
            fmt(self.potential_f),
            fmt(self.potential_gamma),
            fmt(self.forcing),
            fmt(self.total),
        ]
    }
}

fn require_positive(u: &GridFunction) -> Result<()> {
    match u.values().iter().position(|&v| v <= 0.0) {
        Some(cell) => Err(Error::Singularity {
            cell,
            value: u.values()[cell],
        }),
        None => Ok(()),
    }
}

/// `½‖∇_h u‖²` from face gradients.
pub fn dirichlet(u: &GridFunction) -> f64 {
    let g = gradient_faces(u);
    0.5 * g.dot(&g)
}

/// `E(u)` (or `E_ε(u)` when `regularized`).
pub fn energy(p: &ModelParams, u: &GridFunction, regularized: bool) -> Result<EnergyBreakdown> {
    if !regularized {
        require_positive(u)?;
    }
    let vol = u.grid().cell_volume();
    let mut pot_f = 0.0;
    let mut pot_gamma = 0.0;
    let mut forcing = 0.0;
    for (c, &v) in u.values().iter().enumerate() {
        pot_f += if regularized { eval_F_eps(p, v) } else { eval_F(p, v)? };
        pot_gamma += eval_Gamma(p, v)?;
        forcing -= p.g.at(c) * v;
    }
    Ok(EnergyBreakdown::from_parts(
        dirichlet(u),
        pot_f * vol,
        pot_gamma * vol,
        forcing * vol,
    ))
}

/// `∫M(u)` (or `∫M_ε(u)`).
pub fn entropy_total(p: &ModelParams, u: &GridFunction, regularized: bool) -> Result<f64> {
    if !regularized {
        require_positive(u)?;
    }
    let mut acc = 0.0;
    for &v in u.values() {
        acc += if regularized {
            eval_entropy_pair_eps(p, v)?.1
        } else {
            eval_entropy_pair(p, v)?.1
        };
    }
    Ok(acc * u.grid().cell_volume())
}

/// `‖u‖_V² = ‖u‖² + ‖∇u‖²`.
pub fn h1_norm_sq(u: &GridFunction) -> f64 {
    u.dot(u) + 2.0 * dirichlet(u)
}

/// Graph metric `‖u₁ − u₂‖_V + ‖u₁^{1−κ} − u₂^{1−κ}‖_{L¹}`.
pub fn phase_metric(p: &ModelParams, u1: &GridFunction, u2: &GridFunction) -> Result<f64> {
    require_positive(u1)?;
    require_positive(u2)?;
    let diff = u1.zip_map(u2, |a, b| a - b);
    let e = 1.0 - p.kappa;
    let pow_diff = u1.zip_map(u2, |a, b| a.powf(e) - b.powf(e));
    Ok(h1_norm_sq(&diff).sqrt() + pow_diff.norm_l1())
}

/// `Σ_faces b_ε(u)_face |∇w|²`, with the same face mean as the stepper.
pub fn dissipation_rate(p: &ModelParams, u: &GridFunction, w: &GridFunction, mean: FaceMean) -> f64 {
    let b = face_average(&u.map(|v| eval_b_eps(p, v)), mean);
    let gw = gradient_faces(w);
    let mut acc = 0.0;
    for axis in 0..u.grid().dim() {
        acc += b
            .axis(axis)
            .iter()
            .zip(gw.axis(axis))
            .map(|(bf, gf)| bf * gf * gf)
            .sum::<f64>();
    }
    acc * u.grid().cell_volume()
}

/// `‖Δ_h u‖²`.
pub fn laplacian_norm_sq(u: &GridFunction) -> f64 {
    let l = laplacian(u);
    l.dot(&l)
}

/// Norm combinations bracketing the energy, for fitting coercivity constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoercivityWitness {
    /// `‖u‖²_V + ‖u^{1−κ}‖_{L¹}`
    pub lower_combo: f64,
    /// `1 + ‖u‖²_V + ‖u^{1−κ}‖_{L¹}`
    pub upper_combo: f64,
    pub energy: f64,
}

pub fn coercivity_witness(p: &ModelParams, u: &GridFunction) -> Result<CoercivityWitness> {
    let e = energy(p, u, false)?;
    let pow = u.map(|v| v.powf(1.0 - p.kappa)).norm_l1();
    let combo = h1_norm_sq(u) + pow;
    Ok(CoercivityWitness {
        lower_combo: combo,
        upper_combo: 1.0 + combo,
        energy: e.total,
    })
}
