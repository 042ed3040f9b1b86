//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! Semi-infinite ranges are mapped onto [0, 1) with x = a + c t/(1 - t),
//! c = max(|a|, 1).
//! Integrable endpoint singularities are handled by the caller through
//! [`integrate_power_left`], which substitutes x = a + (b - a) u^m.
#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{LevyError, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_intervals: 2000,
        }
    }
}

impl QuadConfig {
    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_intervals(mut self, max_intervals: usize) -> Self {
        self.max_intervals = max_intervals;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
}

/// One 15-point Kronrod panel, returning (kronrod, gauss).
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, g * h)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let (k, g) = gk15(f, a, b);
    Panel {
        a,
        b,
        value: k,
        error: (k - g).abs(),
    }
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    let first = panel(f, a, b);
    let mut total = first.value;
    let mut err = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        if !total.is_finite() {
            return Err(LevyError::Integration {
                a,
                b,
                estimate: total,
                error: err,
            });
        }
        if err <= cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
            break;
        }
        if heap.len() >= cfg.max_intervals {
            return Err(LevyError::Integration {
                a,
                b,
                estimate: total,
                error: err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // cannot bisect any further
            heap.push(worst);
            return Err(LevyError::Integration {
                a,
                b,
                estimate: total,
                error: err,
            });
        }
        let left = panel(f, worst.a, mid);
        let right = panel(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // re-sum to shed accumulated round-off from the running updates
    let value = heap.iter().map(|p| p.value).sum();
    let error = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult { value, error })
}

/// ∫_a^b f(x) dx; either endpoint may be infinite.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    integrate_dyn(&f, a, b, cfg)
}

fn integrate_dyn(f: &dyn Fn(f64) -> f64, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    if a.is_nan() || b.is_nan() {
        return Err(LevyError::Domain("integration bounds are NaN".into()));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
        });
    }
    if a > b {
        let r = integrate_dyn(f, b, a, cfg)?;
        return Ok(QuadResult {
            value: -r.value,
            error: r.error,
        });
    }
    match (a.is_finite(), b.is_finite()) {
        (true, true) => adapt(&f, a, b, cfg),
        (true, false) => {
            // scaling by |a| keeps the mass away from t = 1 for far end points
            let c = a.abs().max(1.0);
            let g = |t: f64| {
                let s = 1.0 - t;
                // the mapped end point itself carries no mass
                if s <= 0.0 {
                    return 0.0;
                }
                c * f(a + c * t / s) / (s * s)
            };
            adapt(&g, 0.0, 1.0, cfg)
        }
        (false, true) => {
            // scaling by |b| keeps the mass away from t = 1 for far end points
            let c = b.abs().max(1.0);
            let g = |t: f64| {
                let s = 1.0 - t;
                // the mapped end point itself carries no mass
                if s <= 0.0 {
                    return 0.0;
                }
                c * f(b - c * t / s) / (s * s)
            };
            adapt(&g, 0.0, 1.0, cfg)
        }
        (false, false) => {
            let lo = integrate_dyn(f, f64::NEG_INFINITY, 0.0, cfg)?;
            let hi = integrate_dyn(f, 0.0, f64::INFINITY, cfg)?;
            Ok(QuadResult {
                value: lo.value + hi.value,
                error: lo.error + hi.error,
            })
        }
    }
}

/// ∫_a^b f(x) dx with x = a + (b - a) u^m, which flattens an integrable
/// singularity like (x - a)^{-θ} whenever m(1 - θ) ≥ 1.
pub fn integrate_power_left<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    m: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if !(m >= 1.0) || !a.is_finite() || !b.is_finite() {
        return Err(LevyError::Domain(format!(
            "power substitution needs finite bounds and m >= 1, got [{a}, {b}], m = {m}"
        )));
    }
    let w = b - a;
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let um1 = u.powf(m - 1.0);
        f(a + w * um1 * u) * m * w * um1
    };
    integrate(g, 0.0, 1.0, cfg)
}

/// Composite trapezoid rule over `m` equally spaced points on [a, b].
pub fn trapezoid<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> f64 {
    assert!(m >= 2, "trapezoid needs at least two points");
    let h = (b - a) / (m - 1) as f64;
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..m - 1 {
        s += f(a + i as f64 * h);
    }
    s * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_exact_to_degree_22_gauss_to_13() {
        for deg in 0..=22 {
            let f = |x: f64| x.powi(deg);
            let exact = (1.0f64.powi(deg + 1) - (-0.5f64).powi(deg + 1)) / (deg + 1) as f64;
            let (k, g) = gk15(&f, -0.5, 1.0);
            assert!((k - exact).abs() < 1e-14, "kronrod degree {deg}");
            if deg <= 13 {
                assert!((g - exact).abs() < 1e-14, "gauss degree {deg}");
            }
        }
    }

    #[test]
    fn semi_infinite_exponential_integral() {
        let r = integrate(|x: f64| (-x).exp() / x, 1.0, f64::INFINITY, &QuadConfig::default()).unwrap();
        assert!((r.value - 0.21938393439552027).abs() < 1e-10);
    }

    #[test]
    fn whole_line_normal_mass() {
        let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let r = integrate(phi, f64::NEG_INFINITY, f64::INFINITY, &QuadConfig::default()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn power_substitution_handles_endpoint_singularity() {
        let r = integrate_power_left(|x: f64| x.powf(-0.5), 0.0, 1.0, 2.0, &QuadConfig::default()).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let r = integrate_power_left(|x: f64| x.powf(-0.9), 0.0, 1.0, 10.0, &QuadConfig::default()).unwrap();
        assert!((r.value - 10.0).abs() < 1e-8);
    }

    #[test]
    fn reversed_bounds_flip_sign() {
        let cfg = QuadConfig::default();
        let a = integrate(|x: f64| x.cos(), 0.0, 2.0, &cfg).unwrap().value;
        let b = integrate(|x: f64| x.cos(), 2.0, 0.0, &cfg).unwrap().value;
        assert_eq!(a, -b);
        assert!((a - 2f64.sin()).abs() < 1e-13);
    }

    #[test]
    fn non_integrable_reports_failure() {
        let r = integrate(|x: f64| 1.0 / x, 0.0, 1.0, &QuadConfig::default());
        assert!(matches!(r, Err(LevyError::Integration { .. })));
    }

    #[test]
    fn trapezoid_is_exact_on_linear() {
        assert!((trapezoid(|x| 3.0 * x + 1.0, 0.0, 2.0, 5) - 8.0).abs() < 1e-14);
    }
}
