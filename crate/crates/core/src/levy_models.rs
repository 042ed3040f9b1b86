//! Lévy models and the deterministic quantities derived from a Lévy measure:
//! density, tail mass, truncated moments, drift, exceedance probabilities.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{LevyError, Result};
use crate::quadrature::{integrate, integrate_power_left, QuadConfig};
use crate::special::{erfc, exp_int_e1, gamma, gamma_q, normal_cdf};

/// Default outer bound Ā for infinite-activity models.
pub const DEFAULT_A_BAR: f64 = 10.0;

pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

// model-level integrals are anchored by closed forms, so run them tighter
// than the library default
fn model_quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-14,
        rel_tol: 1e-11,
        max_intervals: 4000,
    }
}

/// A nonnegative function on a support made of at most two intervals.
#[derive(Clone)]
pub struct Density1D {
    f: RealFn,
    support: Vec<(f64, f64)>,
    cdf: Option<RealFn>,
}

impl fmt::Debug for Density1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density1D")
            .field("support", &self.support)
            .field("closed_form_cdf", &self.cdf.is_some())
            .finish()
    }
}

impl Density1D {
    pub fn new<F>(f: F, support: Vec<(f64, f64)>) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if support.is_empty() || support.len() > 2 {
            return Err(LevyError::InvalidParameter(
                "support must be one interval or a union of two".into(),
            ));
        }
        for &(lo, hi) in &support {
            if !(lo < hi) {
                return Err(LevyError::InvalidParameter(format!(
                    "empty support interval [{lo}, {hi}]"
                )));
            }
        }
        if support.len() == 2 && support[0].1 > support[1].0 {
            return Err(LevyError::InvalidParameter(
                "support intervals must be ordered and disjoint".into(),
            ));
        }
        Ok(Density1D {
            f: Arc::new(f),
            support,
            cdf: None,
        })
    }

    pub fn with_cdf<F>(mut self, cdf: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.cdf = Some(Arc::new(cdf));
        self
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(LevyError::InvalidParameter(format!("uniform({lo}, {hi})")));
        }
        let h = 1.0 / (hi - lo);
        Ok(Density1D::new(move |_| h, vec![(lo, hi)])?
            .with_cdf(move |x| ((x - lo) * h).clamp(0.0, 1.0)))
    }

    pub fn truncated_normal(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        let law = JumpLaw::truncated_normal(mean, sd, lo, hi)?;
        law.density()
            .ok_or_else(|| LevyError::InvalidParameter("truncated normal".into()))
    }

    pub fn support(&self) -> &[(f64, f64)] {
        &self.support
    }

    pub fn in_support(&self, x: f64) -> bool {
        self.support.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// Density value; 0 off the support and never negative.
    pub fn eval(&self, x: f64) -> f64 {
        if self.in_support(x) {
            (self.f)(x).max(0.0)
        } else {
            0.0
        }
    }

    pub fn cdf(&self, x: f64) -> Option<f64> {
        self.cdf.as_ref().map(|c| c(x))
    }

    pub fn has_cdf(&self) -> bool {
        self.cdf.is_some()
    }

    /// `c · self`, keeping the support.
    pub fn scaled(&self, c: f64) -> Density1D {
        let f = self.f.clone();
        Density1D {
            f: Arc::new(move |x| c * f(x)),
            support: self.support.clone(),
            cdf: None,
        }
    }

    /// ∫_a^b self, restricted to the support.
    pub fn integral(&self, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
        let mut total = 0.0;
        for &(lo, hi) in &self.support {
            let (l, h) = (lo.max(a), hi.min(b));
            if l < h {
                let f = self.f.clone();
                total += integrate(move |x| f(x).max(0.0), l, h, cfg)?.value;
            }
        }
        Ok(total)
    }
}

/// Jump-size law of a compound Poisson process.
#[derive(Debug, Clone)]
pub enum JumpLaw {
    Point(f64),
    Uniform { lo: f64, hi: f64 },
    TruncatedNormal { mean: f64, sd: f64, lo: f64, hi: f64 },
    Density(Density1D),
}

impl JumpLaw {
    pub fn point(x: f64) -> Result<Self> {
        if x == 0.0 || !x.is_finite() {
            return Err(LevyError::InvalidParameter(format!(
                "point jump law needs a finite nonzero size, got {x}"
            )));
        }
        Ok(JumpLaw::Point(x))
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(LevyError::InvalidParameter(format!("uniform({lo}, {hi})")));
        }
        Ok(JumpLaw::Uniform { lo, hi })
    }

    pub fn truncated_normal(mean: f64, sd: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(sd > 0.0) || !(lo < hi) {
            return Err(LevyError::InvalidParameter(format!(
                "truncated_normal({mean}, {sd}, {lo}, {hi})"
            )));
        }
        let z = normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
        if !(z > 1e-12) {
            return Err(LevyError::InvalidParameter(
                "truncation window carries no normal mass".into(),
            ));
        }
        Ok(JumpLaw::TruncatedNormal { mean, sd, lo, hi })
    }

    /// Parses `point(x)`, `uniform(a,b)` or `truncated_normal(m,s,a,b)`.
    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim();
        let bad = || LevyError::InvalidParameter(format!("cannot parse jump law '{t}'"));
        let open = t.find('(').ok_or_else(bad)?;
        if !t.ends_with(')') {
            return Err(bad());
        }
        let name = t[..open].trim();
        let args: Vec<f64> = t[open + 1..t.len() - 1]
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        match (name, args.as_slice()) {
            ("point", &[x]) => JumpLaw::point(x),
            ("uniform", &[a, b]) => JumpLaw::uniform(a, b),
            ("truncated_normal", &[m, s, a, b]) => JumpLaw::truncated_normal(m, s, a, b),
            _ => Err(bad()),
        }
    }

    /// Inverse of [`JumpLaw::parse`]; `None` for tabulated densities.
    pub fn to_spec(&self) -> Option<String> {
        match self {
            JumpLaw::Point(x) => Some(format!("point({x})")),
            JumpLaw::Uniform { lo, hi } => Some(format!("uniform({lo},{hi})")),
            JumpLaw::TruncatedNormal { mean, sd, lo, hi } => {
                Some(format!("truncated_normal({mean},{sd},{lo},{hi})"))
            }
            JumpLaw::Density(_) => None,
        }
    }

    fn tn_mass(mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
        normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        Ok(match self {
            JumpLaw::Point(p) => {
                if x >= *p {
                    1.0
                } else {
                    0.0
                }
            }
            JumpLaw::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            JumpLaw::TruncatedNormal { mean, sd, lo, hi } => {
                if x <= *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    Self::tn_mass(*mean, *sd, *lo, x) / Self::tn_mass(*mean, *sd, *lo, *hi)
                }
            }
            JumpLaw::Density(d) => match d.cdf(x) {
                Some(c) => c,
                None => d.integral(f64::NEG_INFINITY, x, &model_quad())?,
            },
        })
    }

    /// Density of the law, if it has one.
    pub fn density(&self) -> Option<Density1D> {
        match self {
            JumpLaw::Point(_) => None,
            JumpLaw::Uniform { lo, hi } => Density1D::uniform(*lo, *hi).ok(),
            &JumpLaw::TruncatedNormal { mean, sd, lo, hi } => {
                let z = Self::tn_mass(mean, sd, lo, hi);
                let c = 1.0 / (sd * z * (2.0 * PI).sqrt());
                let d = Density1D::new(
                    move |x| {
                        let u = (x - mean) / sd;
                        c * (-0.5 * u * u).exp()
                    },
                    vec![(lo, hi)],
                )
                .ok()?;
                Some(d.with_cdf(move |x| {
                    if x <= lo {
                        0.0
                    } else if x >= hi {
                        1.0
                    } else {
                        Self::tn_mass(mean, sd, lo, x) / z
                    }
                }))
            }
            JumpLaw::Density(d) => Some(d.clone()),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match self {
            JumpLaw::Point(_) => false,
            JumpLaw::Uniform { lo, hi } => *lo == -*hi,
            JumpLaw::TruncatedNormal { mean, lo, hi, .. } => *mean == 0.0 && *lo == -*hi,
            JumpLaw::Density(_) => false,
        }
    }

    /// Smallest interval containing the support.
    pub fn hull(&self) -> (f64, f64) {
        match self {
            JumpLaw::Point(x) => (*x, *x),
            JumpLaw::Uniform { lo, hi } | JumpLaw::TruncatedNormal { lo, hi, .. } => (*lo, *hi),
            JumpLaw::Density(d) => (d.support()[0].0, d.support()[d.support().len() - 1].1),
        }
    }

    /// E[g(Y); lo < |Y| ≤ hi].
    pub fn band_expectation<G>(&self, lo: f64, hi: f64, g: G) -> Result<f64>
    where
        G: Fn(f64) -> f64,
    {
        if let JumpLaw::Point(x) = self {
            let a = x.abs();
            return Ok(if lo < a && a <= hi { g(*x) } else { 0.0 });
        }
        let d = self.density().expect("non-point laws have densities");
        let cfg = model_quad();
        let mut total = 0.0;
        for &(s_lo, s_hi) in d.support() {
            for (a, b) in [(lo, hi), (-hi, -lo)] {
                let (l, h) = (s_lo.max(a), s_hi.min(b));
                if l < h {
                    total += integrate(|x| g(x) * d.eval(x), l, h, &cfg)?.value;
                }
            }
        }
        Ok(total)
    }

    /// P(|Y| > eps).
    pub fn prob_abs_gt(&self, eps: f64) -> Result<f64> {
        if let JumpLaw::Point(x) = self {
            return Ok(if x.abs() > eps { 1.0 } else { 0.0 });
        }
        if eps <= 0.0 {
            return Ok(1.0);
        }
        let inside = self.cdf(eps)? - self.cdf(-eps)?;
        Ok((1.0 - inside).clamp(0.0, 1.0))
    }
}

/// Finite- or infinite-variation drift convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variation {
    Finite,
    Infinite,
}

/// The Lévy measure families under study. Gamma and inverse Gaussian use
/// unit parameters: f(x) = e^{-x}/x and f(x) = e^{-x} x^{-3/2} on x > 0.
/// The stable family has f(x) = |x|^{-1-α}, Cauchy f(x) = 1/(πx²).
#[derive(Debug, Clone)]
pub enum Family {
    CompoundPoisson { intensity: f64, jumps: JumpLaw },
    Gamma,
    SymmetricStable { alpha: f64 },
    Cauchy,
    InverseGaussian,
    Custom { density: Density1D },
}

#[derive(Debug, Clone)]
pub struct LevyModel {
    family: Family,
    sigma: f64,
    variation: Variation,
}

impl LevyModel {
    pub fn gamma() -> Self {
        LevyModel {
            family: Family::Gamma,
            sigma: 0.0,
            variation: Variation::Finite,
        }
    }

    pub fn cauchy() -> Self {
        LevyModel {
            family: Family::Cauchy,
            sigma: 0.0,
            variation: Variation::Infinite,
        }
    }

    pub fn inverse_gaussian() -> Self {
        LevyModel {
            family: Family::InverseGaussian,
            sigma: 0.0,
            variation: Variation::Finite,
        }
    }

    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(LevyError::InvalidParameter(format!(
                "stable index must lie in (0, 2), got {alpha}"
            )));
        }
        Ok(LevyModel {
            family: Family::SymmetricStable { alpha },
            sigma: 0.0,
            variation: if alpha < 1.0 {
                Variation::Finite
            } else {
                Variation::Infinite
            },
        })
    }

    pub fn compound_poisson(intensity: f64, jumps: JumpLaw) -> Result<Self> {
        if !(intensity > 0.0) || !intensity.is_finite() {
            return Err(LevyError::InvalidParameter(format!(
                "compound Poisson intensity must be positive, got {intensity}"
            )));
        }
        Ok(LevyModel {
            family: Family::CompoundPoisson { intensity, jumps },
            sigma: 0.0,
            variation: Variation::Finite,
        })
    }

    /// Custom Lévy density; checks ∫ (y² ∧ 1) f(y) dy < ∞ numerically.
    pub fn custom(density: Density1D, finite_variation: bool) -> Result<Self> {
        let cfg = QuadConfig::default();
        let mut total = 0.0;
        for &(lo, hi) in density.support() {
            for (a, b) in [(lo.max(-1.0), hi.min(0.0)), (lo.max(0.0), hi.min(1.0))] {
                if a < b {
                    let d = density.clone();
                    let r = if a == 0.0 {
                        integrate_power_left(move |x| x * x * d.eval(x), a, b, 4.0, &cfg)?
                    } else if b == 0.0 {
                        integrate_power_left(move |x| x * x * d.eval(-x), 0.0, -a, 4.0, &cfg)?
                    } else {
                        integrate(move |x| x * x * d.eval(x), a, b, &cfg)?
                    };
                    total += r.value;
                }
            }
            for (a, b) in [(lo, hi.min(-1.0)), (lo.max(1.0), hi)] {
                if a < b {
                    total += density.integral(a, b, &cfg)?;
                }
            }
        }
        if !total.is_finite() {
            return Err(LevyError::Integration {
                a: f64::NEG_INFINITY,
                b: f64::INFINITY,
                estimate: total,
                error: f64::INFINITY,
            });
        }
        Ok(LevyModel {
            family: Family::Custom { density },
            sigma: 0.0,
            variation: if finite_variation {
                Variation::Finite
            } else {
                Variation::Infinite
            },
        })
    }

    /// Adds a Brownian component with coefficient `sigma`.
    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(LevyError::InvalidParameter(format!(
                "sigma must be nonnegative, got {sigma}"
            )));
        }
        self.sigma = sigma;
        Ok(self)
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn variation(&self) -> Variation {
        self.variation
    }

    pub fn name(&self) -> &'static str {
        match self.family {
            Family::CompoundPoisson { .. } => "compound_poisson",
            Family::Gamma => "gamma",
            Family::SymmetricStable { .. } => "stable",
            Family::Cauchy => "cauchy",
            Family::InverseGaussian => "inverse_gaussian",
            Family::Custom { .. } => "custom",
        }
    }

    pub fn is_finite_measure(&self) -> bool {
        matches!(self.family, Family::CompoundPoisson { .. })
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.family {
            Family::SymmetricStable { .. } | Family::Cauchy => true,
            Family::CompoundPoisson { jumps, .. } => jumps.is_symmetric(),
            _ => false,
        }
    }

    /// True when all jumps are positive (subordinator-like measure).
    pub fn is_positive(&self) -> bool {
        match &self.family {
            Family::Gamma | Family::InverseGaussian => true,
            Family::CompoundPoisson { jumps, .. } => jumps.hull().0 > 0.0,
            Family::Custom { density } => density.support()[0].0 >= 0.0,
            _ => false,
        }
    }

    /// Whether the Lévy measure has a density (false for point-mass jumps).
    pub fn has_density(&self) -> bool {
        !matches!(
            self.family,
            Family::CompoundPoisson {
                jumps: JumpLaw::Point(_),
                ..
            }
        )
    }

    /// Stable scale constant C_α: X_Δ has the law of (Δ C_α)^{1/α} S with S
    /// standard symmetric α-stable (characteristic function e^{-|u|^α}).
    pub fn stable_scale_constant(alpha: f64) -> f64 {
        if (alpha - 1.0).abs() < 1e-12 {
            PI
        } else {
            2.0 * gamma(1.0 - alpha) * (PI * alpha / 2.0).cos() / alpha
        }
    }

    /// Lévy density f(x); 0 for point-mass compound Poisson laws.
    pub fn levy_density(&self, x: f64) -> f64 {
        match &self.family {
            Family::CompoundPoisson { intensity, jumps } => match jumps {
                JumpLaw::Point(_) => 0.0,
                JumpLaw::Uniform { lo, hi } => {
                    if *lo <= x && x <= *hi {
                        intensity / (hi - lo)
                    } else {
                        0.0
                    }
                }
                JumpLaw::TruncatedNormal { mean, sd, lo, hi } => {
                    if *lo <= x && x <= *hi {
                        let u = (x - mean) / sd;
                        let z = JumpLaw::tn_mass(*mean, *sd, *lo, *hi);
                        intensity * (-0.5 * u * u).exp() / (sd * z * (2.0 * PI).sqrt())
                    } else {
                        0.0
                    }
                }
                JumpLaw::Density(d) => intensity * d.eval(x),
            },
            Family::Gamma => {
                if x > 0.0 {
                    (-x).exp() / x
                } else {
                    0.0
                }
            }
            Family::InverseGaussian => {
                if x > 0.0 {
                    (-x).exp() * x.powf(-1.5)
                } else {
                    0.0
                }
            }
            Family::SymmetricStable { alpha } => {
                if x != 0.0 {
                    x.abs().powf(-1.0 - alpha)
                } else {
                    0.0
                }
            }
            Family::Cauchy => {
                if x != 0.0 {
                    1.0 / (PI * x * x)
                } else {
                    0.0
                }
            }
            Family::Custom { density } => density.eval(x),
        }
    }

    /// Support of the Lévy measure as (lo, hi).
    pub fn support_hull(&self) -> (f64, f64) {
        match &self.family {
            Family::CompoundPoisson { jumps, .. } => jumps.hull(),
            Family::Gamma | Family::InverseGaussian => (0.0, f64::INFINITY),
            Family::SymmetricStable { .. } | Family::Cauchy => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Custom { density } => {
                let s = density.support();
                (s[0].0, s[s.len() - 1].1)
            }
        }
    }

    fn check_eps(&self, eps: f64) -> Result<()> {
        if eps.is_nan() || eps < 0.0 {
            return Err(LevyError::Domain(format!("eps must be nonnegative, got {eps}")));
        }
        if eps == 0.0 && !self.is_finite_measure() {
            return Err(LevyError::Domain(
                "eps=0 requires finite Lévy measure".into(),
            ));
        }
        Ok(())
    }

    /// ∫_{lo < |x| ≤ hi} g(x) f(x) dx by quadrature; `hi` may be infinite.
    /// Near 0 the substitution x = u⁴ absorbs power-type blow-up of f.
    pub fn band_integral<G>(&self, lo: f64, hi: f64, g: G) -> Result<f64>
    where
        G: Fn(f64) -> f64 + Copy,
    {
        if let Family::CompoundPoisson { intensity, jumps } = &self.family {
            return Ok(intensity * jumps.band_expectation(lo, hi, g)?);
        }
        if !(lo < hi) {
            return Ok(0.0);
        }
        let cfg = model_quad();
        let (s_lo, s_hi) = self.support_hull();
        let mut total = 0.0;
        for sign in [1.0, -1.0] {
            // the side's extent in |x|
            let side_max = if sign > 0.0 { s_hi } else { -s_lo };
            if side_max <= lo {
                continue;
            }
            let top = hi.min(side_max);
            let h = |u: f64| g(sign * u) * self.levy_density(sign * u);
            let split = if top.is_finite() { top } else { 2.0 * lo + 1.0 };
            if lo == 0.0 {
                total += integrate_power_left(h, 0.0, split, 4.0, &cfg)?.value;
            } else {
                total += integrate(h, lo, split, &cfg)?.value;
            }
            if !top.is_finite() {
                total += integrate(h, split, f64::INFINITY, &cfg)?.value;
            }
        }
        Ok(total)
    }

    /// Tail mass λ_ε = ν(|x| > ε).
    pub fn tail_mass(&self, eps: f64) -> Result<f64> {
        self.check_eps(eps)?;
        match &self.family {
            Family::Cauchy => Ok(2.0 / (PI * eps)),
            Family::SymmetricStable { alpha } => Ok(2.0 * eps.powf(-alpha) / alpha),
            Family::Gamma => exp_int_e1(eps),
            Family::CompoundPoisson { intensity, jumps } => {
                Ok(intensity * jumps.prob_abs_gt(eps)?)
            }
            Family::InverseGaussian | Family::Custom { .. } => {
                self.band_integral(eps, f64::INFINITY, |_| 1.0)
            }
        }
    }

    /// Mass of ν on the one-sided band (lo, hi] (positive side) or
    /// [-hi, -lo) (negative side).
    pub fn side_mass(&self, lo: f64, hi: f64, positive: bool) -> Result<f64> {
        let sign = if positive { 1.0 } else { -1.0 };
        self.band_integral(lo, hi, move |x| if x * sign > 0.0 { 1.0 } else { 0.0 })
    }

    /// μ_p(ε) = ∫_{|x| ≤ ε} |x|^p ν(dx).
    pub fn truncated_p_moment(&self, eps: f64, p: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(LevyError::Domain(format!(
                "truncated moments need eps > 0, got {eps}"
            )));
        }
        if !(p >= 1.0) {
            return Err(LevyError::Domain(format!("moment order must be >= 1, got {p}")));
        }
        let infinite = |a: f64| {
            LevyError::Domain(format!(
                "moment of order {p} is infinite for a measure of index {a}"
            ))
        };
        match &self.family {
            Family::SymmetricStable { alpha } => {
                if p <= *alpha {
                    return Err(infinite(*alpha));
                }
                Ok(2.0 * eps.powf(p - alpha) / (p - alpha))
            }
            Family::Cauchy => {
                if p <= 1.0 {
                    return Err(infinite(1.0));
                }
                Ok(2.0 * eps.powf(p - 1.0) / (PI * (p - 1.0)))
            }
            _ => self.band_integral(0.0, eps, move |x: f64| x.abs().powf(p)),
        }
    }

    /// σ²(ε) = ∫_{|x| ≤ ε} x² ν(dx).
    pub fn truncated_second_moment(&self, eps: f64) -> Result<f64> {
        self.truncated_p_moment(eps, 2.0)
    }

    /// Drift b_ν(ε): ∫_{|x|≤ε} x ν(dx) under finite variation, otherwise
    /// -∫_{ε∧1 ≤ |x| ≤ ε∨1} x ν(dx).
    pub fn drift_b(&self, eps: f64) -> Result<f64> {
        if !(eps > 0.0) {
            return Err(LevyError::Domain(format!("drift needs eps > 0, got {eps}")));
        }
        if self.is_symmetric() {
            return Ok(0.0);
        }
        match (&self.family, self.variation) {
            (Family::Gamma, _) => Ok(-(-eps).exp_m1()),
            // ∫_0^ε x^{-1/2} e^{-x} dx = √π erf(√ε)
            (Family::InverseGaussian, _) => Ok(PI.sqrt() * (1.0 - erfc(eps.sqrt()))),
            (_, Variation::Finite) => self.band_integral(0.0, eps, |x| x),
            (_, Variation::Infinite) => {
                let (a, b) = (eps.min(1.0), eps.max(1.0));
                Ok(-self.band_integral(a, b, |x| x)?)
            }
        }
    }

    /// Density of X_Δ for the inverse Gaussian model.
    fn ig_increment_density(delta: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let l = 2.0 * delta * PI.sqrt() - x - PI * delta * delta / x;
        delta * l.exp() * x.powf(-1.5)
    }

    /// F_Δ(ε) = P(|X_Δ| > ε) for the families with a known marginal.
    pub fn exact_exceedance_prob(&self, delta: f64, eps: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return Err(LevyError::Domain(format!("delta must be positive, got {delta}")));
        }
        self.check_eps(eps)?;
        if self.sigma > 0.0 {
            return Err(LevyError::NotAvailable(
                "no closed-form exceedance probability with a Brownian component".into(),
            ));
        }
        if eps == f64::INFINITY {
            return Ok(0.0);
        }
        match &self.family {
            Family::Cauchy => Ok(2.0 / PI * (delta / eps).atan()),
            Family::Gamma => gamma_q(delta, eps),
            Family::InverseGaussian => {
                let cfg = model_quad();
                let f = move |x: f64| Self::ig_increment_density(delta, x);
                let split = 2.0 * eps + 1.0;
                Ok(integrate(f, eps, split, &cfg)?.value
                    + integrate(f, split, f64::INFINITY, &cfg)?.value)
            }
            Family::CompoundPoisson { intensity, .. } if eps == 0.0 => {
                Ok(-(-intensity * delta).exp_m1())
            }
            _ => Err(LevyError::NotAvailable(format!(
                "no closed-form exceedance probability for {} at eps = {eps}; use Monte Carlo",
                self.name()
            ))),
        }
    }

    /// λ_ε − F_Δ(ε)/Δ, evaluated without cancellation where it matters.
    pub fn exceedance_gap(&self, delta: f64, eps: f64) -> Result<f64> {
        match &self.family {
            Family::Cauchy if self.sigma == 0.0 && delta > 0.0 && eps > 0.0 => {
                // (2/(πΔ)) (y − atan y), y = Δ/ε
                let y = delta / eps;
                let diff = if y < 0.1 {
                    let y2 = y * y;
                    let mut term = y * y2;
                    let mut sum = 0.0f64;
                    let mut k = 3.0;
                    let mut sign = 1.0;
                    while term / k > 1e-18 * sum.abs() || sum == 0.0 {
                        sum += sign * term / k;
                        term *= y2;
                        k += 2.0;
                        sign = -sign;
                    }
                    sum
                } else {
                    y - y.atan()
                };
                Ok(2.0 / (PI * delta) * diff)
            }
            Family::CompoundPoisson { intensity, .. } if eps == 0.0 && delta > 0.0 => {
                Ok(intensity + (-intensity * delta).exp_m1() / delta)
            }
            _ => Ok(self.tail_mass(eps)? - self.exact_exceedance_prob(delta, eps)? / delta),
        }
    }

    /// Normalized big-jump density h_ε = f 1_{|x|>ε} / λ_ε.
    pub fn big_jump_density(&self, eps: f64) -> Result<Density1D> {
        if !self.has_density() {
            return Err(LevyError::NotAvailable(
                "Lévy measure has no density (point-mass jumps)".into(),
            ));
        }
        let lam = self.tail_mass(eps)?;
        if !(lam > 0.0) {
            return Err(LevyError::Domain(format!("no Lévy mass above eps = {eps}")));
        }
        let (s_lo, s_hi) = self.support_hull();
        let mut support = Vec::new();
        if s_lo < -eps {
            support.push((s_lo, -eps));
        }
        if s_hi > eps {
            support.push((eps.max(s_lo), s_hi));
        }
        let model = self.clone();
        Density1D::new(
            move |x| {
                if x.abs() > eps {
                    model.levy_density(x) / lam
                } else {
                    0.0
                }
            },
            support,
        )
    }
}

/// Threshold ε and outer bound Ā defining A(ε) = (−Ā, −ε] ∪ [ε, Ā).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationGeometry {
    pub eps: f64,
    pub a_bar: f64,
}

impl TruncationGeometry {
    pub fn new(eps: f64, a_bar: f64) -> Result<Self> {
        if eps.is_nan() || eps < 0.0 || !eps.is_finite() {
            return Err(LevyError::InvalidParameter(format!(
                "eps must be finite and nonnegative, got {eps}"
            )));
        }
        if !(a_bar > eps) {
            return Err(LevyError::InvalidParameter(format!(
                "need eps < a_bar, got eps = {eps}, a_bar = {a_bar}"
            )));
        }
        Ok(TruncationGeometry { eps, a_bar })
    }

    /// Geometry validated against a model's Lévy measure.
    pub fn for_model(model: &LevyModel, eps: f64, a_bar: f64) -> Result<Self> {
        let g = Self::new(eps, a_bar)?;
        if !model.is_finite_measure() {
            if eps == 0.0 {
                return Err(LevyError::Domain(
                    "eps=0 requires finite Lévy measure".into(),
                ));
            }
            if a_bar.is_infinite() {
                return Err(LevyError::Domain(
                    "an unbounded estimation set requires finite Lévy measure".into(),
                ));
            }
        }
        Ok(g)
    }

    /// Whether x ∈ A(ε).
    pub fn contains(&self, x: f64) -> bool {
        let a = x.abs();
        a >= self.eps && a < self.a_bar
    }

    /// The two components of A(ε) as closed intervals.
    pub fn components(&self) -> [(f64, f64); 2] {
        [(-self.a_bar, -self.eps), (self.eps, self.a_bar)]
    }
}
