//! Closed-form model nonlinearities and their ε-regularizations.
//!
//! * mobility `b(r) = r^s + β r^n` and `b_ε(r) = b(√(r² + ε^a))`
//! * singular potential derivative `f(r) = −r^{−κ}` with its C¹ linear
//!   extension `f_ε` below `r = ε`, and the antiderivatives `F`, `F_ε`
//!   normalized so that `F(1) = 1/(κ−1)`
//! * entropy pair (`M'' = 1/b`): `m(r) = ∫₁ʳ dτ/b(τ)`, `M(r) = ∫₁ʳ m(τ) dτ`
//! * bounded perturbation `γ` with primitive `Γ(r) = ∫₁ʳ γ`
//!
//! Everything here is a pure function of its arguments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_positive, QuadTol};

/// Bounded perturbation γ added to the chemical potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GammaSpec {
    #[default]
    Zero,
    /// `γ(r) = B r^{−k} χ(r)` where `χ` is a C¹ smoothstep rising from 0 at
    /// `r0/2` to 1 at `r0`.
    Physical {
        #[serde(rename = "B")]
        b: f64,
        k: f64,
        #[serde(default = "default_cutoff")]
        r0: f64,
    },
}

fn default_cutoff() -> f64 {
    0.1
}

/// Forcing term `g`: a constant, or one value per grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Forcing {
    Constant(f64),
    Field(Vec<f64>),
}

impl Default for Forcing {
    fn default() -> Self {
        Forcing::Constant(0.0)
    }
}

impl Forcing {
    pub fn at(&self, cell: usize) -> f64 {
        match self {
            Forcing::Constant(c) => *c,
            Forcing::Field(v) => v[cell],
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::Constant(c) => *c == 0.0,
            Forcing::Field(v) => v.iter().all(|&x| x == 0.0),
        }
    }
}

/// Coefficients of the continuous problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub s: f64,
    #[serde(default)]
    pub n: f64,
    #[serde(default)]
    pub beta: f64,
    pub kappa: f64,
    #[serde(default)]
    pub delta: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    pub eps: f64,
    #[serde(default)]
    pub gamma: GammaSpec,
    #[serde(default)]
    pub g: Forcing,
}

fn default_a() -> f64 {
    1.0
}

fn invalid(field: &'static str, constraint: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field,
        constraint: constraint.into(),
    }
}

impl ModelParams {
    /// Builds and validates a parameter set with `γ = 0`, `g = 0`.
    pub fn new(s: f64, n: f64, beta: f64, kappa: f64, delta: f64, a: f64, eps: f64) -> Result<Self> {
        let p = Self {
            s,
            n,
            beta,
            kappa,
            delta,
            a,
            eps,
            gamma: GammaSpec::Zero,
            g: Forcing::Constant(0.0),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_gamma(mut self, gamma: GammaSpec) -> Result<Self> {
        self.gamma = gamma;
        self.validate()?;
        Ok(self)
    }

    pub fn with_forcing(mut self, g: Forcing) -> Result<Self> {
        self.g = g;
        self.validate()?;
        Ok(self)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut p = self.clone();
        p.eps = eps;
        p.validate()?;
        Ok(p)
    }

    /// Checks the structural hypotheses on the coefficients.
    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("s", self.s),
            ("n", self.n),
            ("beta", self.beta),
            ("kappa", self.kappa),
            ("delta", self.delta),
            ("a", self.a),
            ("eps", self.eps),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if !(0.0 <= self.n && self.n <= self.s) {
            return Err(invalid("n", format!("need 0 ≤ n ≤ s (n = {}, s = {})", self.n, self.s)));
        }
        if self.beta < 0.0 {
            return Err(invalid("beta", "need beta ≥ 0"));
        }
        if self.kappa <= 1.0 {
            return Err(invalid("kappa", "need kappa > 1"));
        }
        if self.kappa < self.s + 1.0 {
            return Err(invalid(
                "kappa",
                format!("need kappa ≥ s + 1 (kappa = {}, s + 1 = {})", self.kappa, self.s + 1.0),
            ));
        }
        if self.delta < 0.0 {
            return Err(invalid("delta", "need delta ≥ 0"));
        }
        if !(self.eps > 0.0 && self.eps <= 1.0) {
            return Err(invalid("eps", "need eps in (0, 1]"));
        }
        if self.a <= 0.0 {
            return Err(invalid("a", "need a > 0"));
        }
        if self.a * self.s / 2.0 > self.kappa - 1.0 {
            return Err(invalid(
                "a",
                format!("need a·s/2 ≤ kappa − 1 (a·s/2 = {})", self.a * self.s / 2.0),
            ));
        }
        if let GammaSpec::Physical { b, k, r0 } = self.gamma {
            if !b.is_finite() {
                return Err(invalid("gamma", "B must be finite"));
            }
            if k <= 1.0 || !k.is_finite() {
                return Err(invalid("gamma", "need k > 1 so that γ is integrable at infinity"));
            }
            if r0 <= 0.0 || !r0.is_finite() {
                return Err(invalid("gamma", "need cutoff r0 > 0"));
            }
        }
        if let Forcing::Field(v) = &self.g {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(invalid("g", "forcing values must be finite"));
            }
        }
        Ok(())
    }

    /// Additional bound on `s` that only applies in three space dimensions.
    pub fn validate_for_dimension(&self, d: usize) -> Result<()> {
        self.validate()?;
        if d == 3 && self.s >= 10.0 {
            return Err(invalid("s", "need s < 10 in three dimensions"));
        }
        Ok(())
    }
}

fn domain(function: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain {
        function,
        value,
        reason,
    }
}

/// `∫₁ʳ τ^{−p} dτ` for `r > 0`, with the logarithmic branch at `p = 1`.
pub(crate) fn power_primitive(r: f64, p: f64) -> f64 {
    if (p - 1.0).abs() < 1e-12 {
        r.ln()
    } else {
        (r.powf(1.0 - p) - 1.0) / (1.0 - p)
    }
}

// ---------------------------------------------------------------- mobility

pub fn eval_b(p: &ModelParams, r: f64) -> Result<f64> {
    if r < 0.0 {
        return Err(domain("b", r, "mobility requires r ≥ 0"));
    }
    Ok(b_raw(p, r))
}

#[inline]
fn b_raw(p: &ModelParams, r: f64) -> f64 {
    let mut b = r.powf(p.s);
    if p.beta != 0.0 {
        b += p.beta * r.powf(p.n);
    }
    b
}

#[inline]
fn db_raw(p: &ModelParams, r: f64) -> f64 {
    let mut d = if p.s == 0.0 { 0.0 } else { p.s * r.powf(p.s - 1.0) };
    if p.beta != 0.0 && p.n != 0.0 {
        d += p.beta * p.n * r.powf(p.n - 1.0);
    }
    d
}

#[inline]
fn eps_shift(p: &ModelParams, r: f64) -> f64 {
    (r * r + p.eps.powf(p.a)).sqrt()
}

/// `b_ε(r) = b(√(r² + ε^a))`, defined for every real `r`.
pub fn eval_b_eps(p: &ModelParams, r: f64) -> f64 {
    b_raw(p, eps_shift(p, r))
}

/// Derivative of [`eval_b_eps`].
pub fn eval_b_eps_prime(p: &ModelParams, r: f64) -> f64 {
    let rho = eps_shift(p, r);
    db_raw(p, rho) * r / rho
}

// ---------------------------------------------------------------- potential

pub fn eval_f(p: &ModelParams, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(domain("f", r, "singular potential requires r > 0"));
    }
    Ok(-r.powf(-p.kappa))
}

/// C¹ extension of `f` below `ε` by its tangent line; globally Lipschitz.
pub fn eval_f_eps(p: &ModelParams, r: f64) -> f64 {
    let e = p.eps;
    if r >= e {
        -r.powf(-p.kappa)
    } else {
        -e.powf(-p.kappa) + p.kappa * e.powf(-p.kappa - 1.0) * (r - e)
    }
}

pub fn eval_f_eps_prime(p: &ModelParams, r: f64) -> f64 {
    let x = r.max(p.eps);
    p.kappa * x.powf(-p.kappa - 1.0)
}

#[allow(non_snake_case)]
pub fn eval_F(p: &ModelParams, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(domain("F", r, "singular potential requires r > 0"));
    }
    Ok(r.powf(1.0 - p.kappa) / (p.kappa - 1.0))
}

/// `F_ε = 1/(κ−1) + ∫₁ʳ f_ε`: equal to `F` on `[ε, ∞)`, quadratic below.
#[allow(non_snake_case)]
pub fn eval_F_eps(p: &ModelParams, r: f64) -> f64 {
    let (k, e) = (p.kappa, p.eps);
    if r >= e {
        r.powf(1.0 - k) / (k - 1.0)
    } else {
        let d = r - e;
        e.powf(1.0 - k) / (k - 1.0) - e.powf(-k) * d + 0.5 * k * e.powf(-k - 1.0) * d * d
    }
}

// ---------------------------------------------------------------- gamma

#[inline]
fn smoothstep_cutoff(r: f64, r0: f64) -> (f64, f64) {
    let lo = 0.5 * r0;
    if r <= lo {
        (0.0, 0.0)
    } else if r >= r0 {
        (1.0, 0.0)
    } else {
        let t = (r - lo) / lo;
        (t * t * (3.0 - 2.0 * t), 6.0 * t * (1.0 - t) / lo)
    }
}

pub fn eval_gamma(p: &ModelParams, r: f64) -> f64 {
    match p.gamma {
        GammaSpec::Zero => 0.0,
        GammaSpec::Physical { b, k, r0 } => {
            let (chi, _) = smoothstep_cutoff(r, r0);
            if chi == 0.0 {
                0.0
            } else {
                chi * b * r.powf(-k)
            }
        }
    }
}

pub fn eval_gamma_prime(p: &ModelParams, r: f64) -> f64 {
    match p.gamma {
        GammaSpec::Zero => 0.0,
        GammaSpec::Physical { b, k, r0 } => {
            let (chi, dchi) = smoothstep_cutoff(r, r0);
            if chi == 0.0 {
                0.0
            } else {
                b * (dchi * r.powf(-k) - chi * k * r.powf(-k - 1.0))
            }
        }
    }
}

/// Global Lipschitz constant of γ: `sup |γ'|`, the maximum over the ramp and
/// the tail. Used by the stabilized convex–concave splitting.
pub fn gamma_lipschitz(p: &ModelParams) -> f64 {
    match p.gamma {
        GammaSpec::Zero => 0.0,
        GammaSpec::Physical { r0, .. } => {
            // |γ'| is maximal on [r0/2, r0] or at r0 where the tail starts; sample densely.
            let n = 2000;
            (0..=n)
                .map(|i| 0.5 * r0 + 0.5 * r0 * i as f64 / n as f64)
                .map(|r| eval_gamma_prime(p, r).abs())
                .fold(0.0, f64::max)
                * 1.01
        }
    }
}

/// `Γ(r) = ∫₁ʳ γ(τ) dτ`.
#[allow(non_snake_case)]
pub fn eval_Gamma(p: &ModelParams, r: f64) -> Result<f64> {
    match p.gamma {
        GammaSpec::Zero => Ok(0.0),
        GammaSpec::Physical { r0, .. } => {
            // γ vanishes below r0/2, so Γ is constant there.
            let lo = 0.5 * r0;
            let r_eff = r.max(lo);
            integrate_positive(|t| eval_gamma(p, t), 1.0, r_eff, &[lo, r0], QuadTol::default())
        }
    }
}

/// `W = F + Γ`.
#[allow(non_snake_case)]
pub fn eval_W(p: &ModelParams, r: f64) -> Result<f64> {
    Ok(eval_F(p, r)? + eval_Gamma(p, r)?)
}

// ---------------------------------------------------------------- entropy

/// Unregularized entropy pair `(m(r), M(r))`, `r > 0`.
pub fn eval_entropy_pair(p: &ModelParams, r: f64) -> Result<(f64, f64)> {
    if r <= 0.0 {
        return Err(domain("M", r, "entropy requires r > 0"));
    }
    if p.beta == 0.0 {
        // m = ∫₁ʳ τ^{-s}, M = ∫₁ʳ (r − τ) τ^{-s} dτ
        let m = power_primitive(r, p.s);
        let big_m = r * m - power_primitive(r, p.s - 1.0);
        return Ok((m, big_m));
    }
    entropy_by_quadrature(|t| b_raw(p, t), r, true)
}

/// Regularized entropy pair `(m_ε(r), M_ε(r))`, any real `r`.
pub fn eval_entropy_pair_eps(p: &ModelParams, r: f64) -> Result<(f64, f64)> {
    if p.beta == 0.0 {
        if let Some(pair) = entropy_eps_closed_form(p, r) {
            return Ok(pair);
        }
    }
    entropy_by_quadrature(|t| eval_b_eps(p, t), r, false)
}

/// Same as [`eval_entropy_pair_eps`] but never uses a closed form.
pub fn eval_entropy_pair_eps_quadrature(p: &ModelParams, r: f64) -> Result<(f64, f64)> {
    entropy_by_quadrature(|t| eval_b_eps(p, t), r, false)
}

fn entropy_by_quadrature<B: Fn(f64) -> f64>(b: B, r: f64, positive_only: bool) -> Result<(f64, f64)> {
    let tol = QuadTol::default();
    if r == 1.0 {
        return Ok((0.0, 0.0));
    }
    if positive_only || r > 0.0 {
        let m = integrate_positive(|t| 1.0 / b(t), 1.0, r, &[], tol)?;
        let big_m = integrate_positive(|t| (r - t) / b(t), 1.0, r, &[], tol)?;
        Ok((m, big_m))
    } else {
        let m = integrate(|t| 1.0 / b(t), 1.0, r, &[0.0], tol)?;
        let big_m = integrate(|t| (r - t) / b(t), 1.0, r, &[0.0], tol)?;
        Ok((m, big_m))
    }
}

/// Closed forms for `β = 0`, `s ∈ {0, 1, 2}` where `1/b_ε` has elementary
/// primitives. With `c = ε^a`:
/// * s = 1: `∫ dτ/√(τ²+c) = asinh(τ/√c)`, `∫ τ dτ/√(τ²+c) = √(τ²+c)`
/// * s = 2: `∫ dτ/(τ²+c) = atan(τ/√c)/√c`, `∫ τ dτ/(τ²+c) = ½ ln(τ²+c)`
fn entropy_eps_closed_form(p: &ModelParams, r: f64) -> Option<(f64, f64)> {
    let c = p.eps.powf(p.a);
    let sc = c.sqrt();
    let (m, first_moment) = if p.s == 0.0 {
        (r - 1.0, 0.5 * (r * r - 1.0))
    } else if p.s == 1.0 {
        (
            (r / sc).asinh() - (1.0 / sc).asinh(),
            (r * r + c).sqrt() - (1.0 + c).sqrt(),
        )
    } else if p.s == 2.0 {
        (
            ((r / sc).atan() - (1.0 / sc).atan()) / sc,
            0.5 * ((r * r + c) / (1.0 + c)).ln(),
        )
    } else {
        return None;
    };
    Some((m, r * m - first_moment))
}
