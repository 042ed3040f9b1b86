//! Increment simulation: exact marginal laws, and the decomposed scheme
//! that records drift-plus-small-jumps and big-jump parts separately.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Cauchy, Distribution, Exp1, Gamma, Normal, Poisson, StandardNormal};

use crate::error::{LevyError, Result};
use crate::levy_models::{Family, JumpLaw, LevyModel, TruncationGeometry};
use crate::quadrature::gk15;
use crate::rng::{SeedProvenance, StreamRng};
use crate::special::normal_cdf;
use crate::stats::{wilson_interval, Interval};

/// Grid size of the inverse-CDF tables.
pub const TABLE_POINTS: usize = 1 << 14;
/// Tail mass (relative) left beyond the last table abscissa.
const TABLE_TAIL: f64 = 1e-12;

/// Per-increment ground truth from decomposed simulation. Jump sizes are
/// stored contiguously; increment i owns `jump_sizes[offsets[i]..offsets[i+1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub small_part: Vec<f64>,
    pub big_part: Vec<f64>,
    pub jump_count: Vec<u32>,
    pub offsets: Vec<usize>,
    pub jump_sizes: Vec<f64>,
}

impl Decomposition {
    pub fn jumps(&self, i: usize) -> &[f64] {
        &self.jump_sizes[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// n increments observed at spacing Δ.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementSample {
    pub delta: f64,
    pub values: Vec<f64>,
    pub decomposition: Option<Decomposition>,
    pub provenance: Option<SeedProvenance>,
    /// Set when the model has no Lévy mass above ε, so big parts are all 0.
    pub no_big_jumps: bool,
}

impl IncrementSample {
    pub fn new(delta: f64, values: Vec<f64>) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(LevyError::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        if values.is_empty() {
            return Err(LevyError::InvalidParameter("sample is empty".into()));
        }
        Ok(IncrementSample {
            delta,
            values,
            decomposition: None,
            provenance: None,
            no_big_jumps: false,
        })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Observation horizon T = nΔ.
    pub fn horizon(&self) -> f64 {
        self.n() as f64 * self.delta
    }
}

/// Discretization of the small-jump martingale: jumps in (ε″, ε] are
/// simulated exactly, those below ε″ replaced by a centred Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallJumpPolicy {
    pub inner_cutoff: f64,
    pub gaussian_remainder: bool,
}

impl SmallJumpPolicy {
    pub const DEFAULT_RATIO: f64 = 1e-3;

    pub fn new(inner_cutoff: f64, gaussian_remainder: bool) -> Self {
        SmallJumpPolicy {
            inner_cutoff,
            gaussian_remainder,
        }
    }

    /// ε″ = ε · 10⁻³ with Gaussian remainder.
    pub fn default_for(eps: f64) -> Self {
        Self::new(eps * Self::DEFAULT_RATIO, true)
    }

    pub fn validate(&self, eps: f64) -> Result<()> {
        if !(self.inner_cutoff > 0.0 && self.inner_cutoff <= eps) {
            return Err(LevyError::InvalidParameter(format!(
                "inner cutoff must lie in (0, eps], got {} with eps = {eps}",
                self.inner_cutoff
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
struct SideTable {
    x: Vec<f64>,
    cdf: Vec<f64>,
}

impl SideTable {
    fn invert(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, self.x.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        self.x[i - 1] + t * (self.x[i] - self.x[i - 1])
    }
}

/// Inverse-CDF sampler for ν restricted to lo < |x| ≤ hi.
#[derive(Debug, Clone)]
pub struct JumpTable {
    pos: Option<SideTable>,
    neg: Option<SideTable>,
    p_pos: f64,
    mass: f64,
}

impl JumpTable {
    /// Tabulates ν on the band; `hi` may be infinite, in which case the
    /// table stops where the remaining tail is below 1e−12 of the side mass.
    pub fn new(model: &LevyModel, lo: f64, hi: f64) -> Result<Self> {
        let f = |x: f64| model.levy_density(x);
        let (s_lo, s_hi) = model.support_hull();
        let mut sides = [None, None];
        let mut masses = [0.0, 0.0];
        for (k, positive) in [true, false].into_iter().enumerate() {
            let sign = if positive { 1.0 } else { -1.0 };
            let side_max = if positive { s_hi } else { -s_lo };
            let side_min = if positive { s_lo.max(0.0) } else { (-s_hi).max(0.0) };
            let bottom = lo.max(side_min);
            let mut top = hi.min(side_max);
            if !(top > bottom) {
                continue;
            }
            if top.is_infinite() {
                let total = model.side_mass(bottom, f64::INFINITY, positive)?;
                if !(total > 0.0) {
                    continue;
                }
                let mut r = (2.0 * bottom).max(bottom + 1.0);
                while model.side_mass(r, f64::INFINITY, positive)? > TABLE_TAIL * total {
                    r *= 10.0;
                    if r > 1e250 {
                        return Err(LevyError::Domain(
                            "Lévy tail too heavy to tabulate".into(),
                        ));
                    }
                }
                top = r;
            }
            let g = |u: f64| f(sign * u);
            let x = grid(bottom, top, TABLE_POINTS);
            let mut cdf = Vec::with_capacity(x.len());
            cdf.push(0.0);
            let mut acc = 0.0;
            for w in x.windows(2) {
                acc += gk15(&g, w[0], w[1]).0.max(0.0);
                cdf.push(acc);
            }
            if !(acc > 0.0) || !acc.is_finite() {
                if acc == 0.0 {
                    continue;
                }
                return Err(LevyError::Domain(format!(
                    "cannot tabulate the jump CDF on ({bottom}, {top}]: mass {acc}"
                )));
            }
            for c in cdf.iter_mut() {
                *c /= acc;
            }
            masses[k] = acc;
            sides[k] = Some(SideTable { x, cdf });
        }
        let mass = masses[0] + masses[1];
        let [pos, neg] = sides;
        Ok(JumpTable {
            pos,
            neg,
            p_pos: if mass > 0.0 { masses[0] / mass } else { 0.0 },
            mass,
        })
    }

    /// ν-mass captured by the table.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Tabulated CDF of the normalized law at x.
    pub fn cdf(&self, x: f64) -> f64 {
        let side = |t: &SideTable, y: f64| -> f64 {
            if y <= t.x[0] {
                return 0.0;
            }
            if y >= t.x[t.x.len() - 1] {
                return 1.0;
            }
            let i = t.x.partition_point(|&v| v <= y);
            let (x0, x1) = (t.x[i - 1], t.x[i]);
            t.cdf[i - 1] + (y - x0) / (x1 - x0) * (t.cdf[i] - t.cdf[i - 1])
        };
        let p_neg = 1.0 - self.p_pos;
        if x < 0.0 {
            self.neg.as_ref().map_or(0.0, |t| p_neg * (1.0 - side(t, -x)))
        } else {
            p_neg + self.pos.as_ref().map_or(0.0, |t| self.p_pos * side(t, x))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let pick_pos = match (&self.pos, &self.neg) {
            (Some(_), None) => true,
            (None, Some(_)) => false,
            _ => rng.random::<f64>() < self.p_pos,
        };
        let u: f64 = rng.random();
        if pick_pos {
            self.pos.as_ref().expect("positive side present").invert(u)
        } else {
            -self.neg.as_ref().expect("negative side present").invert(u)
        }
    }
}

fn grid(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    let last = (m - 1) as f64;
    if lo > 0.0 && hi / lo > 10.0 {
        let r = (hi / lo).ln();
        let mut x: Vec<f64> = (0..m).map(|i| lo * (r * i as f64 / last).exp()).collect();
        x[0] = lo;
        x[m - 1] = hi;
        x
    } else {
        (0..m).map(|i| lo + (hi - lo) * i as f64 / last).collect()
    }
}

#[derive(Debug, Clone)]
enum LawSampler {
    Point(f64),
    Uniform(f64, f64),
    Normal { normal: Normal<f64>, lo: f64, hi: f64 },
    Table(Box<JumpTable>),
}

impl LawSampler {
    fn new(law: &JumpLaw) -> Result<Self> {
        Ok(match law {
            JumpLaw::Point(x) => LawSampler::Point(*x),
            JumpLaw::Uniform { lo, hi } => LawSampler::Uniform(*lo, *hi),
            &JumpLaw::TruncatedNormal { mean, sd, lo, hi } => {
                let kept = normal_cdf((hi - mean) / sd) - normal_cdf((lo - mean) / sd);
                // rejection from the untruncated normal unless the window is narrow
                if kept > 0.05 {
                    LawSampler::Normal {
                        normal: Normal::new(mean, sd)
                            .map_err(|e| LevyError::InvalidParameter(e.to_string()))?,
                        lo,
                        hi,
                    }
                } else {
                    LawSampler::Table(Box::new(Self::law_table(law)?))
                }
            }
            _ => LawSampler::Table(Box::new(Self::law_table(law)?)),
        })
    }

    fn law_table(law: &JumpLaw) -> Result<JumpTable> {
        let unit = LevyModel::compound_poisson(1.0, law.clone())?;
        JumpTable::new(&unit, 0.0, f64::INFINITY)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LawSampler::Point(x) => *x,
            LawSampler::Uniform(lo, hi) => lo + (hi - lo) * rng.random::<f64>(),
            LawSampler::Normal { normal, lo, hi } => loop {
                let y = normal.sample(rng);
                if *lo <= y && y <= *hi {
                    break y;
                }
            },
            LawSampler::Table(t) => t.sample(rng),
        }
    }
}

/// Standard symmetric α-stable draw (characteristic function e^{−|u|^α})
/// by the Chambers–Mallows–Stuck transform.
pub fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let v = PI * (rng.random::<f64>() - 0.5);
    if (alpha - 1.0).abs() < 1e-12 {
        return v.tan();
    }
    let w: f64 = Exp1.sample(rng);
    let a = (alpha * v).sin() / v.cos().powf(1.0 / alpha);
    a * (((1.0 - alpha) * v).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Inverse Gaussian draw with mean `mu` and shape `lambda`; the two roots
/// are formed without subtracting nearly equal quantities.
pub fn inverse_gaussian<R: Rng + ?Sized>(mu: f64, lambda: f64, rng: &mut R) -> f64 {
    let v: f64 = StandardNormal.sample(rng);
    let y = v * v;
    let my = mu * y;
    let big = mu + mu / (2.0 * lambda) * (my + (4.0 * mu * lambda * y + my * my).sqrt());
    let small = mu * mu / big;
    if rng.random::<f64>() <= mu / (mu + small) {
        small
    } else {
        big
    }
}

#[derive(Debug, Clone)]
enum ExactLaw {
    Gamma(Gamma<f64>),
    Cauchy(Cauchy<f64>),
    Stable { alpha: f64, scale: f64 },
    InverseGaussian { mu: f64, lambda: f64 },
    CompoundPoisson { rate: f64, law: LawSampler },
}

/// Draws increments from the exact law of X_Δ.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    delta: f64,
    law: ExactLaw,
    brownian_sd: f64,
}

impl ExactSampler {
    pub fn new(model: &LevyModel, delta: f64) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(LevyError::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let bad = |e: String| LevyError::InvalidParameter(e);
        let law = match model.family() {
            Family::Gamma => ExactLaw::Gamma(Gamma::new(delta, 1.0).map_err(|e| bad(e.to_string()))?),
            Family::Cauchy => {
                ExactLaw::Cauchy(Cauchy::new(0.0, delta).map_err(|e| bad(e.to_string()))?)
            }
            Family::SymmetricStable { alpha } => ExactLaw::Stable {
                alpha: *alpha,
                scale: (delta * LevyModel::stable_scale_constant(*alpha)).powf(1.0 / alpha),
            },
            Family::InverseGaussian => ExactLaw::InverseGaussian {
                mu: delta * PI.sqrt(),
                lambda: 2.0 * PI * delta * delta,
            },
            Family::CompoundPoisson { intensity, jumps } => ExactLaw::CompoundPoisson {
                rate: intensity * delta,
                law: LawSampler::new(jumps)?,
            },
            Family::Custom { .. } => {
                return Err(LevyError::NotAvailable(
                    "no exact increment law for a custom density; use sample_decomposed".into(),
                ))
            }
        };
        Ok(ExactSampler {
            delta,
            law,
            brownian_sd: model.sigma() * delta.sqrt(),
        })
    }

    fn draw(&self, rng: &mut StreamRng) -> f64 {
        let x = match &self.law {
            ExactLaw::Gamma(g) => g.sample(rng),
            ExactLaw::Cauchy(c) => c.sample(rng),
            ExactLaw::Stable { alpha, scale } => scale * standard_stable(*alpha, rng),
            ExactLaw::InverseGaussian { mu, lambda } => inverse_gaussian(*mu, *lambda, rng),
            ExactLaw::CompoundPoisson { rate, law } => {
                let k = poisson(*rate, rng);
                (0..k).map(|_| law.sample(rng)).sum()
            }
        };
        if self.brownian_sd > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            x + self.brownian_sd * z
        } else {
            x
        }
    }

    pub fn sample(&self, n: usize, provenance: SeedProvenance) -> Result<IncrementSample> {
        if n == 0 {
            return Err(LevyError::InvalidParameter("n must be at least 1".into()));
        }
        let mut rng = provenance.rng();
        let values = (0..n).map(|_| self.draw(&mut rng)).collect();
        let mut s = IncrementSample::new(self.delta, values)?;
        s.provenance = Some(provenance);
        Ok(s)
    }
}

fn poisson(mean: f64, rng: &mut StreamRng) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite Poisson mean");
    d.sample(rng) as u32
}

/// n i.i.d. increments from the exact marginal of X_Δ.
pub fn sample_exact(
    model: &LevyModel,
    n: usize,
    delta: f64,
    provenance: SeedProvenance,
) -> Result<IncrementSample> {
    ExactSampler::new(model, delta)?.sample(n, provenance)
}

#[derive(Debug, Clone)]
enum SmallJumps {
    // compound Poisson: every jump is drawn and routed by size
    Finite { rate: f64, law: LawSampler },
    Infinite {
        big_rate: f64,
        big: Option<JumpTable>,
        mid_rate: f64,
        mid: Option<JumpTable>,
        // Δ·(b(ε) − ∫_{ε″<|x|≤ε} x ν(dx))
        shift: f64,
        gaussian_sd: f64,
    },
}

/// Decomposed sampler with its tables built once.
#[derive(Debug, Clone)]
pub struct DecomposedSampler {
    delta: f64,
    eps: f64,
    scheme: SmallJumps,
    brownian_sd: f64,
    no_big_jumps: bool,
}

impl DecomposedSampler {
    pub fn new(
        model: &LevyModel,
        geometry: &TruncationGeometry,
        policy: &SmallJumpPolicy,
        delta: f64,
    ) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(LevyError::InvalidParameter(format!(
                "delta must be positive, got {delta}"
            )));
        }
        let eps = geometry.eps;
        let lambda_eps = model.tail_mass(eps)?;
        if !lambda_eps.is_finite() {
            return Err(LevyError::Domain("infinite tail mass above eps".into()));
        }
        let scheme = if let Family::CompoundPoisson { intensity, jumps } = model.family() {
            SmallJumps::Finite {
                rate: intensity * delta,
                law: LawSampler::new(jumps)?,
            }
        } else {
            policy.validate(eps)?;
            let inner = policy.inner_cutoff;
            let big = if lambda_eps > 0.0 {
                Some(JumpTable::new(model, eps, f64::INFINITY)?)
            } else {
                None
            };
            let (mid, mid_rate, mid_mean) = if inner < eps {
                let t = JumpTable::new(model, inner, eps)?;
                let rate = t.mass() * delta;
                let mean = if model.is_symmetric() {
                    0.0
                } else {
                    model.band_integral(inner, eps, |x| x)?
                };
                (Some(t), rate, mean)
            } else {
                (None, 0.0, 0.0)
            };
            let gaussian_sd = if policy.gaussian_remainder {
                (delta * model.truncated_second_moment(inner)?).sqrt()
            } else {
                0.0
            };
            SmallJumps::Infinite {
                big_rate: big.as_ref().map_or(0.0, |t| t.mass() * delta),
                big,
                mid_rate,
                mid,
                shift: delta * (model.drift_b(eps)? - mid_mean),
                gaussian_sd,
            }
        };
        Ok(DecomposedSampler {
            delta,
            eps,
            scheme,
            brownian_sd: model.sigma() * delta.sqrt(),
            no_big_jumps: !(lambda_eps > 0.0),
        })
    }

    pub fn sample(&self, n: usize, provenance: SeedProvenance) -> Result<IncrementSample> {
        if n == 0 {
            return Err(LevyError::InvalidParameter("n must be at least 1".into()));
        }
        let mut rng = provenance.rng();
        let mut small_part = Vec::with_capacity(n);
        let mut big_part = Vec::with_capacity(n);
        let mut jump_count = Vec::with_capacity(n);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut jump_sizes = Vec::new();
        offsets.push(0);
        for _ in 0..n {
            let mut small = 0.0;
            let mut big = 0.0;
            let mut count = 0u32;
            match &self.scheme {
                SmallJumps::Finite { rate, law } => {
                    let k = poisson(*rate, &mut rng);
                    for _ in 0..k {
                        let y = law.sample(&mut rng);
                        if y.abs() > self.eps {
                            big += y;
                            count += 1;
                            jump_sizes.push(y);
                        } else {
                            small += y;
                        }
                    }
                }
                SmallJumps::Infinite {
                    big_rate,
                    big: table,
                    mid_rate,
                    mid,
                    shift,
                    gaussian_sd,
                } => {
                    if let Some(t) = table {
                        count = poisson(*big_rate, &mut rng);
                        for _ in 0..count {
                            let y = t.sample(&mut rng);
                            big += y;
                            jump_sizes.push(y);
                        }
                    }
                    small = *shift;
                    if let Some(t) = mid {
                        let k = poisson(*mid_rate, &mut rng);
                        for _ in 0..k {
                            small += t.sample(&mut rng);
                        }
                    }
                    if *gaussian_sd > 0.0 {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        small += gaussian_sd * z;
                    }
                }
            }
            if self.brownian_sd > 0.0 {
                let z: f64 = StandardNormal.sample(&mut rng);
                small += self.brownian_sd * z;
            }
            small_part.push(small);
            big_part.push(big);
            jump_count.push(count);
            offsets.push(jump_sizes.len());
        }
        let values = small_part.iter().zip(&big_part).map(|(s, b)| s + b).collect();
        let mut s = IncrementSample::new(self.delta, values)?;
        s.decomposition = Some(Decomposition {
            small_part,
            big_part,
            jump_count,
            offsets,
            jump_sizes,
        });
        s.provenance = Some(provenance);
        s.no_big_jumps = self.no_big_jumps;
        Ok(s)
    }

    /// Big-jump table, if the model is infinite-activity.
    pub fn big_jump_table(&self) -> Option<&JumpTable> {
        match &self.scheme {
            SmallJumps::Infinite { big, .. } => big.as_ref(),
            SmallJumps::Finite { .. } => None,
        }
    }
}

/// Decomposed increments: big jumps (|x| > ε) as a compound Poisson sum,
/// small part as drift + compensated mid-band jumps + Gaussian remainder.
/// When the model has a Brownian component it is added to the small part.
pub fn sample_decomposed(
    model: &LevyModel,
    geometry: &TruncationGeometry,
    policy: &SmallJumpPolicy,
    n: usize,
    delta: f64,
    provenance: SeedProvenance,
) -> Result<IncrementSample> {
    DecomposedSampler::new(model, geometry, policy, delta)?.sample(n, provenance)
}

/// Monte Carlo estimate of v_Δ(ε) = P(|M_Δ(ε) + Δb(ε)| > ε) with a 95%
/// Wilson interval, from the small parts of `replicates` increments.
pub fn estimate_v_delta(
    model: &LevyModel,
    geometry: &TruncationGeometry,
    policy: &SmallJumpPolicy,
    delta: f64,
    replicates: usize,
    provenance: SeedProvenance,
) -> Result<Interval> {
    if replicates < 1000 {
        return Err(LevyError::InvalidParameter(format!(
            "need at least 1000 replicates, got {replicates}"
        )));
    }
    let s = sample_decomposed(model, geometry, policy, replicates, delta, provenance)?;
    let d = s.decomposition.expect("decomposed sample");
    let k = d.small_part.iter().filter(|x| x.abs() > geometry.eps).count();
    Ok(wilson_interval(k as u64, replicates as u64))
}

/// Monte Carlo estimate of P(M_t(ε) > x) for the compensated small-jump
/// martingale, with a 95% Wilson interval.
pub fn estimate_small_jump_tail(
    model: &LevyModel,
    geometry: &TruncationGeometry,
    policy: &SmallJumpPolicy,
    t: f64,
    x: f64,
    replicates: usize,
    provenance: SeedProvenance,
) -> Result<Interval> {
    if replicates == 0 {
        return Err(LevyError::InvalidParameter("need at least one replicate".into()));
    }
    let drift = if model.is_finite_measure() {
        0.0
    } else {
        t * model.drift_b(geometry.eps)?
    };
    let s = sample_decomposed(model, geometry, policy, replicates, t, provenance)?;
    let d = s.decomposition.expect("decomposed sample");
    let k = d.small_part.iter().filter(|m| *m - drift > x).count();
    Ok(wilson_interval(k as u64, replicates as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use crate::stats::{ks_one_sample, ks_two_sample, mean_se};

    fn prov(s: u64) -> SeedProvenance {
        SeedProvenance::new(s, 0)
    }

    #[test]
    fn gamma_exact_mean() {
        let s = sample_exact(&LevyModel::gamma(), 100_000, 0.1, prov(1)).unwrap();
        let (m, se) = mean_se(&s.values);
        assert!((m - 0.1).abs() < 3.0 * se, "mean {m} se {se}");
    }

    #[test]
    fn compound_poisson_unit_jumps_are_integers() {
        let m = LevyModel::compound_poisson(1.0, JumpLaw::point(1.0).unwrap()).unwrap();
        let s = sample_exact(&m, 100_000, 0.5, prov(2)).unwrap();
        assert!(s.values.iter().all(|v| *v >= 0.0 && v.fract() == 0.0));
        let zeros = s.values.iter().filter(|v| **v == 0.0).count() as u64;
        let w = wilson_interval(zeros, 100_000);
        let p0 = (-0.5f64).exp();
        assert!((w.estimate - p0).abs() < 3.0 * (p0 * (1.0 - p0) / 1e5).sqrt());
    }

    #[test]
    fn stable_one_is_cauchy_with_scale_pi() {
        let delta = 0.1;
        let st = sample_exact(&LevyModel::stable(1.0).unwrap(), 100_000, delta, prov(3)).unwrap();
        let ca = sample_exact(&LevyModel::cauchy(), 100_000, delta, prov(3)).unwrap();
        let scaled: Vec<f64> = ca.values.iter().map(|x| PI * x).collect();
        assert!(ks_two_sample(&st.values, &scaled) < 0.01);
        // and against the closed-form Cauchy(πΔ) CDF
        let d = ks_one_sample(&st.values, |x| 0.5 + (x / (PI * delta)).atan() / PI);
        assert!(d < 0.01);
    }

    #[test]
    fn stable_half_matches_levy_distribution() {
        // α = 1/2 symmetric stable is not closed form, but its scale can be
        // checked through P(|X| > x) ~ (2/α) Δ x^{-α} far in the tail
        let delta = 1e-3;
        let s = sample_exact(&LevyModel::stable(0.5).unwrap(), 200_000, delta, prov(4)).unwrap();
        let x: f64 = 1.0;
        let k = s.values.iter().filter(|v| v.abs() > x).count() as u64;
        let w = wilson_interval(k, 200_000);
        let lead = 4.0 * delta * x.powf(-0.5);
        assert!(w.lo < lead * 1.05 && w.hi > lead * 0.9, "{w:?} vs {lead}");
    }

    #[test]
    fn inverse_gaussian_sampler_matches_cdf() {
        let (mu, lam) = (0.3, 0.7);
        let mut rng = stream_rng(5, 0);
        let xs: Vec<f64> = (0..100_000).map(|_| inverse_gaussian(mu, lam, &mut rng)).collect();
        let cdf = |x: f64| {
            use crate::special::normal_cdf;
            let a = (lam / x).sqrt();
            normal_cdf(a * (x / mu - 1.0)) + (2.0 * lam / mu).exp() * normal_cdf(-a * (x / mu + 1.0))
        };
        assert!(ks_one_sample(&xs, cdf) < 0.01);
        let (m, se) = mean_se(&xs);
        assert!((m - mu).abs() < 4.0 * se);
    }

    #[test]
    fn decomposition_invariants() {
        let m = LevyModel::cauchy();
        let g = TruncationGeometry::new(0.5, 10.0).unwrap();
        let s = sample_decomposed(&m, &g, &SmallJumpPolicy::default_for(0.5), 5000, 0.05, prov(6))
            .unwrap();
        let d = s.decomposition.as_ref().unwrap();
        for i in 0..s.n() {
            assert_eq!(s.values[i], d.small_part[i] + d.big_part[i]);
            let js = d.jumps(i);
            assert_eq!(js.len(), d.jump_count[i] as usize);
            assert!(js.iter().all(|y| y.abs() > 0.5));
            assert_eq!(d.big_part[i], js.iter().sum::<f64>());
        }
    }

    #[test]
    fn mean_jump_count_matches_poisson_rate() {
        let m = LevyModel::gamma();
        let eps = 0.5;
        let delta = 0.2 / m.tail_mass(eps).unwrap();
        let g = TruncationGeometry::new(eps, 10.0).unwrap();
        let s = sample_decomposed(&m, &g, &SmallJumpPolicy::default_for(eps), 100_000, delta, prov(7))
            .unwrap();
        let c: Vec<f64> = s.decomposition.unwrap().jump_count.iter().map(|&k| k as f64).collect();
        let (mc, se) = mean_se(&c);
        assert!((mc - 0.2).abs() < 3.0 * se);
    }

    #[test]
    fn symmetric_small_part_is_centred() {
        let m = LevyModel::stable(1.5).unwrap();
        let g = TruncationGeometry::new(1.0, 10.0).unwrap();
        let s = sample_decomposed(&m, &g, &SmallJumpPolicy::default_for(1.0), 100_000, 0.01, prov(8))
            .unwrap();
        let (mc, se) = mean_se(&s.decomposition.unwrap().small_part);
        assert!(mc.abs() < 3.0 * se);
    }

    #[test]
    fn zero_tail_mass_is_flagged() {
        let m = LevyModel::compound_poisson(1.0, JumpLaw::uniform(1.0, 2.0).unwrap()).unwrap();
        let g = TruncationGeometry::new(3.0, 10.0).unwrap();
        let s = sample_decomposed(&m, &g, &SmallJumpPolicy::default_for(3.0), 100, 0.5, prov(9))
            .unwrap();
        assert!(s.no_big_jumps);
        assert!(s.decomposition.unwrap().big_part.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn jump_table_reproduces_h_eps() {
        let m = LevyModel::cauchy();
        let t = JumpTable::new(&m, 1.0, f64::INFINITY).unwrap();
        assert!(((t.mass() - 2.0 / PI) / (2.0 / PI)).abs() < 1e-9);
        let mut rng = stream_rng(10, 0);
        let ys: Vec<f64> = (0..100_000).map(|_| t.sample(&mut rng)).collect();
        assert!(ys.iter().all(|y| y.abs() > 1.0));
        // closed form: h_1 CDF on x > 1 is 1/2 + (1/2)(1 − 1/x)
        let cdf = |x: f64| if x < 0.0 { 0.5 / x.abs() } else { 1.0 - 0.5 / x };
        assert!(ks_one_sample(&ys, cdf) < 0.01);
        assert!(ks_one_sample(&ys, |x| t.cdf(x)) < 0.01);
    }

    #[test]
    fn v_delta_zero_for_compound_poisson_at_zero() {
        let m = LevyModel::compound_poisson(2.0, JumpLaw::truncated_normal(0.0, 1.0, -5.0, 5.0).unwrap())
            .unwrap();
        let g = TruncationGeometry::new(0.0, f64::INFINITY).unwrap();
        let v = estimate_v_delta(&m, &g, &SmallJumpPolicy::default_for(0.0), 0.1, 5000, prov(11))
            .unwrap();
        assert_eq!(v.estimate, 0.0);
    }

    #[test]
    fn v_delta_vanishes_for_large_threshold() {
        let m = LevyModel::gamma();
        let g = TruncationGeometry::new(2.0, 10.0).unwrap();
        let v = estimate_v_delta(&m, &g, &SmallJumpPolicy::default_for(2.0), 1e-3, 5000, prov(12))
            .unwrap();
        assert_eq!(v.estimate, 0.0);
    }

    #[test]
    fn custom_family_has_no_exact_law() {
        let d = crate::levy_models::Density1D::new(|x: f64| (-x).exp() / x, vec![(0.0, f64::INFINITY)])
            .unwrap();
        let m = LevyModel::custom(d, true).unwrap();
        assert!(matches!(sample_exact(&m, 10, 0.1, prov(13)), Err(LevyError::NotAvailable(_))));
    }

    #[test]
    fn seeds_reproduce_bitwise() {
        let m = LevyModel::inverse_gaussian();
        let g = TruncationGeometry::new(0.3, 10.0).unwrap();
        let p = SmallJumpPolicy::default_for(0.3);
        let a = sample_decomposed(&m, &g, &p, 1000, 0.01, SeedProvenance::new(5, 17)).unwrap();
        let b = sample_decomposed(&m, &g, &p, 1000, 0.01, SeedProvenance::new(5, 17)).unwrap();
        assert_eq!(a, b);
    }
}
