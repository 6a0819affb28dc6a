//! Adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Used for the integral-defined nonlinearities (Γ, and the entropy pair when
//! no closed form is available). Intervals are bisected globally by largest
//! error estimate until the combined absolute/relative tolerance is met.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for QuadTol {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-13,
            max_intervals: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]` (either orientation), splitting first at the
/// supplied break points that fall strictly inside the interval.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: QuadTol) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if a > b {
        return integrate(f, b, a, breaks, tol).map(|v| -v);
    }
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    let mut nodes = Vec::with_capacity(cuts.len() + 2);
    nodes.push(a);
    nodes.extend(cuts);
    nodes.push(b);

    let mut heap = BinaryHeap::new();
    let (mut total, mut total_err) = (0.0, 0.0);
    for w in nodes.windows(2) {
        let seg = gk15(&f, w[0], w[1]);
        total += seg.value;
        total_err += seg.error;
        heap.push(seg);
    }
    while total_err > tol.abs.max(tol.rel * total.abs()) {
        if !total.is_finite() || heap.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                a,
                b,
                estimate: total,
                error: total_err,
            });
        }
        let worst = heap.pop().expect("nonempty segment heap");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval exhausted at machine resolution; accept what we have.
            heap.push(worst);
            break;
        }
        let left = gk15(&f, worst.a, mid);
        let right = gk15(&f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the incremental updates.
    Ok(heap.iter().map(|s| s.value).sum())
}

/// Integrates over `[a, b] ⊂ (0, ∞)` after the substitution τ = eˣ, which
/// flattens power-law integrands near the origin and at large arguments.
pub fn integrate_positive<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], tol: QuadTol) -> Result<f64> {
    debug_assert!(a > 0.0 && b > 0.0);
    let log_breaks: Vec<f64> = breaks.iter().filter(|&&x| x > 0.0).map(|x| x.ln()).collect();
    integrate(
        |x| {
            let t = x.exp();
            f(t) * t
        },
        a.ln(),
        b.ln(),
        &log_breaks,
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, &[], QuadTol::default()).unwrap();
        assert!((v - 0.0).abs() < 1e-14);
        let v = integrate(|x| x * x, 0.0, 3.0, &[], QuadTol::default()).unwrap();
        assert!((v - 9.0).abs() < 1e-13);
    }

    #[test]
    fn reversed_limits_flip_sign() {
        let fwd = integrate(f64::exp, 0.0, 1.0, &[], QuadTol::default()).unwrap();
        let back = integrate(f64::exp, 1.0, 0.0, &[], QuadTol::default()).unwrap();
        assert!((fwd - (std::f64::consts::E - 1.0)).abs() < 1e-14);
        assert_eq!(fwd, -back);
    }

    #[test]
    fn kink_is_resolved_with_break_point() {
        let v = integrate(|x: f64| x.abs(), -1.0, 2.0, &[0.0], QuadTol::default()).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
    }

    #[test]
    fn log_substitution_handles_power_singularity() {
        // ∫_{1e-6}^{1} τ^{-3} dτ = (1e12 - 1)/2
        let v = integrate_positive(|t| t.powi(-3), 1e-6, 1.0, &[], QuadTol::default()).unwrap();
        let exact = (1e12 - 1.0) / 2.0;
        assert!(((v - exact) / exact).abs() < 1e-12);
    }
}
