//! Monte Carlo experiments: convergence studies, bound suites, small-time
//! diagnostics and the Brownian comparison, with their CSV outputs.
//!
//! Every random draw comes from a ChaCha stream keyed by (master seed,
//! cell, replicate), and per-replicate results are folded in index order,
//! so reports do not depend on the number of worker threads.

use std::io::Write;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::analysis::{
    check_count_moment_bounds, check_hpeps_bound, check_small_jump_tail, check_small_time_limit,
    check_split_count_bounds, compound_poisson_rate, count_moment_bounds, lp_distance,
    subordinator_rate, theoretical_rate, BoundReport, LossSpec, RateDescriptor, Verdict,
};
use crate::error::{LevyError, Result};
use crate::intensity::corrected_lambda;
use crate::levy_models::{Family, LevyModel, TruncationGeometry};
use crate::rng::{stream_id, SeedProvenance};
use crate::simulate::{
    estimate_small_jump_tail, estimate_v_delta, DecomposedSampler, ExactSampler, IncrementSample,
    SmallJumpPolicy,
};
use crate::stats::{mean_interval, mean_se, ols, wilson_interval, Interval};
use crate::wavelet::{build_basis, choose_j, estimate_h, DensityEstimate, DEFAULT_DEPTH};

/// Version written in the first row of every CSV.
pub const SCHEMA_VERSION: u32 = 1;

// stream-space offsets so the experiments never share a stream
const BOUND_CELLS: u32 = 1 << 12;
const DIAG_CELLS: u32 = 1 << 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    Exact,
    Decomposed,
}

impl SamplingMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            SamplingMode::Exact => "exact",
            SamplingMode::Decomposed => "decomposed",
        }
    }
}

/// Resolution level: chosen from the exceedance count or fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JRule {
    Auto,
    Fixed(u32),
}

/// One (n, Δ) grid cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub n: usize,
    pub delta: f64,
}

impl GridCell {
    pub fn horizon(&self) -> f64 {
        self.n as f64 * self.delta
    }
}

/// Δ = c n^{−γ} for each n.
pub fn coupled_grid(ns: &[usize], c: f64, gamma: f64) -> Vec<GridCell> {
    ns.iter()
        .map(|&n| GridCell {
            n,
            delta: c * (n as f64).powf(-gamma),
        })
        .collect()
}

/// Default grid: n ∈ {2¹², 2¹⁴, 2¹⁶, 2¹⁸}, Δ = n^{−1/2}.
pub fn default_grid() -> Vec<GridCell> {
    coupled_grid(&[1 << 12, 1 << 14, 1 << 16, 1 << 18], 1.0, 0.5)
}

/// Everything an experiment needs besides the worker count.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub config_id: String,
    pub model: LevyModel,
    pub geometry: TruncationGeometry,
    pub grid: Vec<GridCell>,
    pub s: f64,
    pub wavelet_order: usize,
    pub j_rule: JRule,
    pub correction_order: u32,
    pub p: f64,
    pub replicates: usize,
    pub master_seed: u64,
    pub mode: SamplingMode,
    /// Brownian coefficient used by the robustness comparison.
    pub sigma: f64,
    /// ε = Δ^γ for the stable diagnostics, if set.
    pub eps_exponent: Option<f64>,
    pub loss_points: usize,
    /// Monte Carlo runs per bound check.
    pub bound_runs: usize,
    /// Replicates per point in the small-time diagnostics.
    pub diag_replicates: usize,
    /// Δ values for the small-time diagnostics.
    pub diag_deltas: Vec<f64>,
}

impl ExperimentPlan {
    /// A plan with the documented defaults.
    pub fn new(config_id: &str, model: LevyModel, geometry: TruncationGeometry) -> Self {
        ExperimentPlan {
            config_id: config_id.to_string(),
            model,
            geometry,
            grid: default_grid(),
            s: 2.0,
            wavelet_order: 6,
            j_rule: JRule::Auto,
            correction_order: 1,
            p: 2.0,
            replicates: 50,
            master_seed: 0,
            mode: SamplingMode::Exact,
            sigma: 0.0,
            eps_exponent: None,
            loss_points: 1024,
            bound_runs: 200,
            diag_replicates: 100_000,
            diag_deltas: vec![0.2, 0.1, 0.05, 0.025],
        }
    }

    /// Checks the invariants and sorts the grid by decreasing Δ.
    pub fn validate(&mut self) -> Result<()> {
        if self.replicates < 2 {
            return Err(LevyError::InvalidParameter(format!(
                "need at least 2 replicates, got {}",
                self.replicates
            )));
        }
        if self.grid.is_empty() {
            return Err(LevyError::InvalidParameter("empty (n, delta) grid".into()));
        }
        for c in &self.grid {
            if c.n == 0 || !(c.delta > 0.0) || !c.delta.is_finite() {
                return Err(LevyError::InvalidParameter(format!(
                    "bad grid cell n = {}, delta = {}",
                    c.n, c.delta
                )));
            }
            if c.horizon() < 1.0 {
                return Err(LevyError::InvalidParameter(format!(
                    "need n * delta >= 1, got n = {}, delta = {}",
                    c.n, c.delta
                )));
            }
        }
        if !(self.p >= 1.0) {
            return Err(LevyError::InvalidParameter(format!("p must be >= 1, got {}", self.p)));
        }
        if !(self.s > 0.0) {
            return Err(LevyError::InvalidParameter(format!("s must be positive, got {}", self.s)));
        }
        if self.correction_order == 0 {
            return Err(LevyError::InvalidParameter("correction order must be >= 1".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(LevyError::InvalidParameter(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        TruncationGeometry::for_model(&self.model, self.geometry.eps, self.geometry.a_bar)?;
        // a fixed order makes the stream assignment independent of input order
        self.grid.sort_by(|a, b| b.delta.total_cmp(&a.delta).then(a.n.cmp(&b.n)));
        Ok(())
    }

    /// Geometry of a cell: the plan's, or ε = Δ^γ under an ε rule.
    pub fn cell_geometry(&self, cell: &GridCell) -> Result<TruncationGeometry> {
        match self.eps_exponent {
            Some(g) => TruncationGeometry::new(cell.delta.powf(g), self.geometry.a_bar),
            None => Ok(self.geometry),
        }
    }
}

/// Estimation target of a risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// f̂ against f on A(ε).
    Density,
    /// ĥ against h_ε on A(ε).
    JumpDensity,
    /// λ̂ against λ_ε.
    Intensity,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::Density, Target::JumpDensity, Target::Intensity];

    pub fn as_str(&self) -> &'static str {
        match self {
            Target::Density => "f",
            Target::JumpDensity => "h",
            Target::Intensity => "lambda",
        }
    }
}

/// Mean risk over replicates for one target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetRisk {
    pub target: Target,
    pub mean: f64,
    pub se: f64,
    pub replicates: usize,
}

/// Per-cell summary.
#[derive(Debug, Clone, PartialEq)]
pub struct CellRisk {
    pub n: usize,
    pub delta: f64,
    pub eps: f64,
    pub risks: Vec<TargetRisk>,
    /// Replicates with no exceedance (ĥ and f̂ taken as 0).
    pub empty_replicates: usize,
    pub mean_level: f64,
    pub rate: Option<RateDescriptor>,
}

impl CellRisk {
    pub fn risk(&self, t: Target) -> &TargetRisk {
        self.risks.iter().find(|r| r.target == t).expect("all targets present")
    }

    /// Every replicate had 𝐧(ε) = 0.
    pub fn is_degenerate(&self) -> bool {
        self.risks.first().is_some_and(|r| self.empty_replicates == r.replicates)
    }
}

/// Log-log slope of mean risk against nΔ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub target: Target,
    pub slope: f64,
    pub lo: f64,
    pub hi: f64,
    pub theory: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskReport {
    pub config_id: String,
    pub p: f64,
    pub cells: Vec<CellRisk>,
    pub slopes: Vec<SlopeFit>,
    pub bounds: Vec<BoundReport>,
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    loss_f: f64,
    loss_h: f64,
    loss_lambda: f64,
    // the two terms of the split |f̂ − f| ≤ |λ̂ − λ|h + λ̂|ĥ − h|
    split_lambda: f64,
    split_h: f64,
    empty: bool,
    level: u32,
}

/// Small-jump policy used by every experiment: ε″ = 10⁻³ε, or 10⁻³ when ε = 0.
pub fn default_policy(geometry: &TruncationGeometry) -> SmallJumpPolicy {
    SmallJumpPolicy::default_for(if geometry.eps > 0.0 { geometry.eps } else { 1.0 })
}

enum AnySampler {
    Exact(ExactSampler),
    Decomposed(Box<DecomposedSampler>),
}

impl AnySampler {
    fn new(plan: &ExperimentPlan, model: &LevyModel, geometry: &TruncationGeometry, delta: f64) -> Result<Self> {
        Ok(match plan.mode {
            SamplingMode::Exact => AnySampler::Exact(ExactSampler::new(model, delta)?),
            SamplingMode::Decomposed => AnySampler::Decomposed(Box::new(DecomposedSampler::new(
                model,
                geometry,
                &default_policy(geometry),
                delta,
            )?)),
        })
    }

    fn sample(&self, n: usize, prov: SeedProvenance) -> Result<IncrementSample> {
        match self {
            AnySampler::Exact(s) => s.sample(n, prov),
            AnySampler::Decomposed(s) => s.sample(n, prov),
        }
    }
}

struct Truth {
    lambda: f64,
    h_norm_p: f64,
}

fn estimate_one(
    plan: &ExperimentPlan,
    model: &LevyModel,
    geometry: &TruncationGeometry,
    spec: &LossSpec,
    truth: &Truth,
    sample: &IncrementSample,
) -> Result<Outcome> {
    let p = plan.p;
    let lam = corrected_lambda(sample, geometry.eps, plan.correction_order)?;
    let level = match plan.j_rule {
        JRule::Fixed(j) => j,
        JRule::Auto => choose_j(lam.exceed_count.max(1) as f64, plan.s),
    };
    let h_true = model.big_jump_density(geometry.eps)?;
    let f_true = |x: f64| model.levy_density(x);
    let hat: Option<DensityEstimate> = if lam.is_empty() {
        None
    } else {
        let basis = build_basis(plan.wavelet_order, level, DEFAULT_DEPTH, *geometry)?;
        Some(estimate_h(sample, &basis)?)
    };
    let h_hat = |x: f64| hat.as_ref().map_or(0.0, |h| h.eval(x));
    let l = lam.lambda_hat;
    let loss_h = lp_distance(h_hat, |x| h_true.eval(x), spec)?.powf(p);
    let loss_f = lp_distance(|x| l * h_hat(x), f_true, spec)?.powf(p);
    let loss_lambda = (l - truth.lambda).abs().powf(p);
    Ok(Outcome {
        loss_f,
        loss_h,
        loss_lambda,
        split_lambda: loss_lambda * truth.h_norm_p,
        split_h: l.powf(p) * loss_h,
        empty: lam.is_empty(),
        level,
    })
}

fn rate_for(plan: &ExperimentPlan, cell: &GridCell) -> Option<RateDescriptor> {
    let (n, d) = (cell.n as f64, cell.delta);
    let r = match plan.model.family() {
        Family::CompoundPoisson { .. } => compound_poisson_rate(plan.s, plan.p, n, d),
        Family::Gamma | Family::InverseGaussian => subordinator_rate(plan.s, plan.p, n, d),
        _ => theoretical_rate(plan.s, plan.p, 2.0, n, d),
    };
    r.ok()
}

fn theory_slope(plan: &ExperimentPlan, target: Target) -> f64 {
    match target {
        Target::Intensity => -plan.p / 2.0,
        _ => -plan.s * plan.p / (2.0 * plan.s + 1.0),
    }
}

fn fit_slopes(plan: &ExperimentPlan, cells: &[CellRisk]) -> Vec<SlopeFit> {
    let mut order: Vec<usize> = (0..cells.len()).collect();
    order.sort_by(|&a, &b| {
        let ha = cells[a].n as f64 * cells[a].delta;
        let hb = cells[b].n as f64 * cells[b].delta;
        ha.total_cmp(&hb)
    });
    Target::ALL
        .iter()
        .map(|&t| {
            let mut pts: Vec<(f64, f64)> = Vec::new();
            for (rank, &i) in order.iter().enumerate() {
                let c = &cells[i];
                let r = c.risk(t);
                if !(r.mean > 0.0) || c.is_degenerate() {
                    continue;
                }
                // noisy smallest cell is left out of the fit
                if rank == 0 && r.se / r.mean > 0.25 && order.len() > 2 {
                    continue;
                }
                pts.push(((c.n as f64 * c.delta).ln(), r.mean.ln()));
            }
            let (x, y): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
            let (slope, lo, hi) = match ols(&x, &y) {
                Some(f) if x.len() >= 4 => (f.slope, f.slope_lo, f.slope_hi),
                Some(f) => (f.slope, f64::NEG_INFINITY, f64::INFINITY),
                None => (f64::NAN, f64::NEG_INFINITY, f64::INFINITY),
            };
            SlopeFit {
                target: t,
                slope,
                lo,
                hi,
                theory: theory_slope(plan, t),
                points: x.len(),
            }
        })
        .collect()
}

fn study(plan: &ExperimentPlan, model: &LevyModel) -> Result<RiskReport> {
    let mut plan = plan.clone();
    plan.validate()?;
    let r = plan.replicates;
    let mut setups = Vec::with_capacity(plan.grid.len());
    for cell in &plan.grid {
        let geometry = plan.cell_geometry(cell)?;
        let spec = LossSpec::new(plan.p, geometry, plan.loss_points)?;
        let h_true = model.big_jump_density(geometry.eps)?;
        let truth = Truth {
            lambda: model.tail_mass(geometry.eps)?,
            h_norm_p: lp_distance(|x| h_true.eval(x), |_| 0.0, &spec)?.powf(plan.p),
        };
        let sampler = AnySampler::new(&plan, model, &geometry, cell.delta)?;
        setups.push((geometry, spec, truth, sampler));
    }
    let jobs: Vec<(usize, usize)> = (0..plan.grid.len())
        .flat_map(|c| (0..r).map(move |i| (c, i)))
        .collect();
    let outcomes: Vec<Outcome> = jobs
        .par_iter()
        .map(|&(c, i)| {
            let (geometry, spec, truth, sampler) = &setups[c];
            let prov = SeedProvenance::new(plan.master_seed, stream_id(c as u32, i as u32));
            let sample = sampler.sample(plan.grid[c].n, prov)?;
            estimate_one(&plan, model, geometry, spec, truth, &sample)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(plan.grid.len());
    let mut bounds = Vec::new();
    for (c, cell) in plan.grid.iter().enumerate() {
        let out = &outcomes[c * r..(c + 1) * r];
        let summarize = |t: Target, pick: fn(&Outcome) -> f64| {
            let xs: Vec<f64> = out.iter().map(pick).collect();
            let (mean, se) = mean_se(&xs);
            TargetRisk {
                target: t,
                mean,
                se,
                replicates: r,
            }
        };
        let risks = vec![
            summarize(Target::Density, |o| o.loss_f),
            summarize(Target::JumpDensity, |o| o.loss_h),
            summarize(Target::Intensity, |o| o.loss_lambda),
        ];
        // E ℓ(f̂)^p ≤ 2^{p−1}(E|λ̂−λ|^p‖h‖^p + E λ̂^p ℓ(ĥ)^p)
        let lhs = risks[0].mean;
        let rhs = 2f64.powf(plan.p - 1.0)
            * out.iter().map(|o| o.split_lambda + o.split_h).sum::<f64>()
            / r as f64;
        let tol = 1e-9 * rhs.max(1.0);
        bounds.push(BoundReport {
            name: "risk_split".into(),
            config_id: format!("{}:n={}:delta={:e}", plan.config_id, cell.n, cell.delta),
            lhs,
            rhs,
            slack: rhs - lhs,
            tolerance: tol,
            verdict: if lhs <= rhs + tol { Verdict::Pass } else { Verdict::Fail },
            note: String::new(),
        });
        cells.push(CellRisk {
            n: cell.n,
            delta: cell.delta,
            eps: setups[c].0.eps,
            risks,
            empty_replicates: out.iter().filter(|o| o.empty).count(),
            mean_level: out.iter().map(|o| o.level as f64).sum::<f64>() / r as f64,
            rate: rate_for(&plan, cell),
        });
    }
    let slopes = fit_slopes(&plan, &cells);
    Ok(RiskReport {
        config_id: plan.config_id.clone(),
        p: plan.p,
        cells,
        slopes,
        bounds,
    })
}

/// Simulates, estimates and scores R replicates in every grid cell.
pub fn run_convergence_study(plan: &ExperimentPlan) -> Result<RiskReport> {
    study(plan, &plan.model)
}

/// Risk at σ = 0 and at the plan's σ, with the same seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianComparison {
    pub baseline: RiskReport,
    pub perturbed: RiskReport,
}

impl BrownianComparison {
    /// Risk ratio perturbed / baseline per cell for a target.
    pub fn ratios(&self, t: Target) -> Vec<f64> {
        self.baseline
            .cells
            .iter()
            .zip(&self.perturbed.cells)
            .map(|(a, b)| b.risk(t).mean / a.risk(t).mean)
            .collect()
    }
}

pub fn run_brownian_robustness(plan: &ExperimentPlan) -> Result<BrownianComparison> {
    let base_model = plan.model.clone().with_sigma(0.0)?;
    let noisy_model = plan.model.clone().with_sigma(plan.sigma)?;
    let baseline = study(plan, &base_model)?;
    let mut perturbed = study(plan, &noisy_model)?;
    if plan.sigma > 0.0 {
        perturbed.config_id = format!("{}+brownian", plan.config_id);
    }
    Ok(BrownianComparison {
        baseline,
        perturbed,
    })
}

fn count_reports(
    plan: &ExperimentPlan,
    geometry: &TruncationGeometry,
    cell: &GridCell,
    cell_id: u32,
    id: &str,
) -> Result<Vec<BoundReport>> {
    const NAME: &str = "count_inverse_moment";
    let rs = [0.0, 0.5, 1.0, 2.0];
    let f = match plan.model.exact_exceedance_prob(cell.delta, geometry.eps) {
        Ok(f) => f,
        Err(LevyError::NotAvailable(why)) => {
            return Ok(vec![BoundReport::skipped(NAME, why).with_config_id(id)])
        }
        Err(e) => return Err(e),
    };
    let n_f = cell.n as f64 * f;
    if n_f < 1.0 {
        return Ok(vec![BoundReport::skipped(NAME, format!("nF = {n_f} < 1")).with_config_id(id)]);
    }
    // 𝐧(ε) of n i.i.d. increments is Binomial(n, F); drawing it directly
    // keeps large-n cells cheap
    let bin = Binomial::new(cell.n as u64, f)
        .map_err(|e| LevyError::InvalidParameter(e.to_string()))?;
    let counts: Vec<u64> = (0..plan.bound_runs as u32)
        .map(|i| {
            let mut rng = SeedProvenance::new(plan.master_seed, stream_id(cell_id, i)).rng();
            bin.sample(&mut rng)
        })
        .collect();
    let mut out = Vec::new();
    for r in rs {
        let kept: Vec<f64> = counts
            .iter()
            .filter(|c| **c > 0)
            .map(|c| (*c as f64).powf(-r))
            .collect();
        if kept.len() < 2 {
            out.push(BoundReport::skipped(NAME, "fewer than two runs with exceedances").with_config_id(id));
            continue;
        }
        let ci = mean_interval(&kept);
        let (lower, upper) = count_moment_bounds(n_f, r);
        let tol = 1e-6;
        let pass = ci.lo >= lower - tol && ci.hi <= upper + tol;
        out.push(BoundReport {
            name: NAME.into(),
            config_id: id.to_string(),
            lhs: ci.estimate,
            rhs: upper,
            slack: upper - ci.estimate,
            tolerance: tol,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            note: format!("r={r} lower={lower:e} ci=[{:e},{:e}] binomial_counts", ci.lo, ci.hi),
        });
    }
    Ok(out)
}

/// Runs every applicable bound check in each grid cell.
pub fn run_bound_suite(plan: &ExperimentPlan) -> Result<Vec<BoundReport>> {
    let mut plan = plan.clone();
    plan.validate()?;
    let model = &plan.model;
    let mut out = Vec::new();
    for (c, cell) in plan.grid.iter().enumerate() {
        let geometry = plan.cell_geometry(cell)?;
        let id = format!("{}:n={}:delta={:e}", plan.config_id, cell.n, cell.delta);
        let base = BOUND_CELLS + 8 * c as u32;

        if geometry.eps > 0.0 {
            out.push(check_small_time_limit(model, cell.delta, geometry.eps, 0.02)?.with_config_id(&id));
        }

        let lam = model.tail_mass(geometry.eps)?;
        let hp = if !model.has_density() {
            BoundReport::skipped("mixture_vs_jump_density", "Lévy measure has no density")
        } else if !(lam * cell.delta < 5.0) {
            BoundReport::skipped("mixture_vs_jump_density", "lambda_eps * delta >= 5")
        } else {
            match check_hpeps_bound(model, &geometry, cell.delta, plan.p) {
                Ok(r) => r,
                Err(LevyError::GridTooCoarse(why)) => BoundReport::skipped("mixture_vs_jump_density", why),
                Err(e) => return Err(e),
            }
        };
        out.push(hp.with_config_id(&id));

        out.extend(count_reports(&plan, &geometry, cell, base, &id)?);

        // split counts from decomposed samples
        let pol = default_policy(&geometry);
        let sampler = DecomposedSampler::new(model, &geometry, &pol, cell.delta)?;
        let samples: Vec<IncrementSample> = (0..plan.replicates as u32)
            .into_par_iter()
            .map(|i| sampler.sample(cell.n, SeedProvenance::new(plan.master_seed, stream_id(base + 1, i))))
            .collect::<Result<_>>()?;
        for r in [1.0, 2.0] {
            out.push(check_split_count_bounds(&samples, &geometry, lam, r)?.with_config_id(&id));
        }
        drop(samples);

        if model.is_finite_measure() || geometry.eps == 0.0 {
            out.push(
                BoundReport::skipped("small_jump_tail", "finite Lévy measure has no small-jump martingale")
                    .with_config_id(&id),
            );
        } else {
            let ci = estimate_small_jump_tail(
                model,
                &geometry,
                &pol,
                cell.delta,
                geometry.eps,
                plan.diag_replicates,
                SeedProvenance::new(plan.master_seed, stream_id(base + 2, 0)),
            )?;
            out.push(check_small_jump_tail(model, &geometry, cell.delta, geometry.eps, &ci)?.with_config_id(&id));
        }
    }
    Ok(out)
}

/// One row of the diagnostics table.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub config_id: String,
    pub kind: String,
    pub delta: f64,
    pub eps: f64,
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Theoretical reference, NaN if none.
    pub reference: f64,
    pub note: String,
}

impl DiagnosticRow {
    fn new(plan: &ExperimentPlan, kind: &str, delta: f64, eps: f64, value: Interval, reference: f64, note: &str) -> Self {
        DiagnosticRow {
            config_id: plan.config_id.clone(),
            kind: kind.to_string(),
            delta,
            eps,
            value: value.estimate,
            ci_lo: value.lo,
            ci_hi: value.hi,
            reference,
            note: note.to_string(),
        }
    }
}

fn point(x: f64) -> Interval {
    Interval {
        estimate: x,
        lo: x,
        hi: x,
    }
}

fn slope_row(plan: &ExperimentPlan, kind: &str, eps: f64, x: &[f64], y: &[f64], reference: f64) -> DiagnosticRow {
    match ols(x, y) {
        Some(f) => DiagnosticRow::new(
            plan,
            kind,
            f64::NAN,
            eps,
            Interval {
                estimate: f.slope,
                lo: f.slope_lo,
                hi: f.slope_hi,
            },
            reference,
            &format!("points={}", x.len()),
        ),
        None => DiagnosticRow::new(plan, kind, f64::NAN, eps, point(f64::NAN), reference, "too few points"),
    }
}

/// Small-time tables: the exceedance gap, the empirical exponent of v_Δ(ε)
/// in Δ, and (under an ε rule) the ratio v_Δ/(λ_εΔ) for stable models.
pub fn run_h1_h2_diagnostics(plan: &ExperimentPlan) -> Result<Vec<DiagnosticRow>> {
    let model = &plan.model;
    let eps = plan.geometry.eps;
    let mut rows = Vec::new();
    let mut deltas = plan.diag_deltas.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));

    // exceedance gap F_Δ/Δ − λ_ε
    if eps > 0.0 && model.exact_exceedance_prob(deltas[0], eps).is_ok() {
        let lam = model.tail_mass(eps)?;
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for &d in &deltas {
            let gap = model.exceedance_gap(d, eps)?.abs();
            rows.push(DiagnosticRow::new(plan, "h1_ratio", d, eps, point(gap / (d * lam * lam)), f64::NAN, ""));
            if gap > 0.0 {
                x.push(d.ln());
                y.push(gap.ln());
            }
        }
        rows.push(slope_row(plan, "h1_exponent", eps, &x, &y, 1.0));
    }

    // v_Δ(ε) against Δ
    if !model.is_finite_measure() && eps > 0.0 && plan.eps_exponent.is_none() {
        let geometry = plan.geometry;
        let pol = SmallJumpPolicy::default_for(eps);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for (i, &d) in deltas.iter().enumerate() {
            let v = estimate_v_delta(
                model,
                &geometry,
                &pol,
                d,
                plan.diag_replicates,
                SeedProvenance::new(plan.master_seed, stream_id(DIAG_CELLS + i as u32, 0)),
            )?;
            let censored = v.estimate == 0.0;
            rows.push(DiagnosticRow::new(plan, "v_delta", d, eps, v, f64::NAN, if censored { "censored" } else { "" }));
            if !censored {
                x.push(d.ln());
                y.push(v.estimate.ln());
            }
        }
        let reference = if model.is_positive() { 2.0 } else { f64::NAN };
        rows.push(slope_row(plan, "h2_beta", eps, &x, &y, reference));
    }

    // stable family under ε = Δ^γ
    if let (Family::SymmetricStable { alpha }, Some(_)) = (model.family(), plan.eps_exponent) {
        for (i, &d) in deltas.iter().enumerate() {
            let geometry = plan.cell_geometry(&GridCell { n: 1, delta: d })?;
            let e = geometry.eps;
            let pol = SmallJumpPolicy::default_for(e);
            let v = estimate_v_delta(
                model,
                &geometry,
                &pol,
                d,
                plan.diag_replicates,
                SeedProvenance::new(plan.master_seed, stream_id(DIAG_CELLS + 64 + i as u32, 0)),
            )?;
            let scale = model.tail_mass(e)? * d;
            let ratio = Interval {
                estimate: v.estimate / scale,
                lo: v.lo / scale,
                hi: v.hi / scale,
            };
            for k in 2..=6 {
                let bound = alpha / (2.0 * k as f64 - alpha);
                rows.push(DiagnosticRow::new(
                    plan,
                    &format!("stable_ratio_k{k}"),
                    d,
                    e,
                    ratio,
                    bound,
                    if ratio.lo <= bound { "" } else { "above_reference" },
                ));
            }
        }
    }
    Ok(rows)
}

/// Per-replicate inverse-moment check using increments rather than
/// binomial draws; see [`check_count_moment_bounds`].
pub fn count_moment_suite(
    model: &LevyModel,
    geometry: &TruncationGeometry,
    n: usize,
    delta: f64,
    rs: &[f64],
    runs: usize,
    seed: u64,
) -> Result<Vec<BoundReport>> {
    rs.iter()
        .map(|&r| check_count_moment_bounds(model, geometry, n, delta, r, runs, seed, 0))
        .collect()
}

/// Wilson interval helper re-exported for callers assembling diagnostics.
pub fn proportion_interval(k: u64, n: u64) -> Interval {
    wilson_interval(k, n)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

fn schema_row<W: Write>(w: &mut csv::Writer<W>) -> Result<()> {
    w.write_record(["schema_version", &SCHEMA_VERSION.to_string()])?;
    Ok(())
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().flexible(true).from_writer(out)
}

/// `risk.csv`: one row per cell and target.
pub fn write_risk_csv<W: Write>(reports: &[&RiskReport], out: W) -> Result<()> {
    let mut w = writer(out);
    schema_row(&mut w)?;
    w.write_record(["config_id", "n", "delta", "eps", "target", "p", "mean_risk", "se_risk", "replicates"])?;
    for rep in reports {
        for c in &rep.cells {
            for r in &c.risks {
                w.write_record([
                    rep.config_id.clone(),
                    c.n.to_string(),
                    fmt_f(c.delta),
                    fmt_f(c.eps),
                    r.target.as_str().to_string(),
                    fmt_f(rep.p),
                    fmt_f(r.mean),
                    fmt_f(r.se),
                    r.replicates.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `slopes.csv`: fitted and theoretical slopes per target.
pub fn write_slopes_csv<W: Write>(reports: &[&RiskReport], out: W) -> Result<()> {
    let mut w = writer(out);
    schema_row(&mut w)?;
    w.write_record(["config_id", "target", "slope", "slope_ci_lo", "slope_ci_hi", "theory_slope"])?;
    for rep in reports {
        for s in &rep.slopes {
            w.write_record([
                rep.config_id.clone(),
                s.target.as_str().to_string(),
                fmt_f(s.slope),
                fmt_f(s.lo),
                fmt_f(s.hi),
                fmt_f(s.theory),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `bounds.csv`: one row per bound check.
pub fn write_bounds_csv<W: Write>(bounds: &[BoundReport], out: W) -> Result<()> {
    let mut w = writer(out);
    schema_row(&mut w)?;
    w.write_record(["bound_name", "config_id", "lhs", "rhs", "slack", "verdict"])?;
    for b in bounds {
        w.write_record([
            b.name.clone(),
            b.config_id.clone(),
            fmt_f(b.lhs),
            fmt_f(b.rhs),
            fmt_f(b.slack),
            b.verdict.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `diagnostics.csv`.
pub fn write_diagnostics_csv<W: Write>(rows: &[DiagnosticRow], out: W) -> Result<()> {
    let mut w = writer(out);
    schema_row(&mut w)?;
    w.write_record(["config_id", "kind", "delta", "eps", "value", "ci_lo", "ci_hi", "reference", "note"])?;
    for r in rows {
        w.write_record([
            r.config_id.clone(),
            r.kind.clone(),
            fmt_f(r.delta),
            fmt_f(r.eps),
            fmt_f(r.value),
            fmt_f(r.ci_lo),
            fmt_f(r.ci_hi),
            fmt_f(r.reference),
            r.note.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| LevyError::InvalidParameter(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_models::JumpLaw;

    fn cp_plan() -> ExperimentPlan {
        let m = LevyModel::compound_poisson(1.0, JumpLaw::truncated_normal(0.0, 1.0, -5.0, 5.0).unwrap()).unwrap();
        let g = TruncationGeometry::for_model(&m, 0.0, 5.0).unwrap();
        let mut p = ExperimentPlan::new("cp", m, g);
        p.grid = coupled_grid(&[256, 1024], 1.0, 0.5);
        p.replicates = 4;
        p.wavelet_order = 3;
        p.loss_points = 256;
        p
    }

    #[test]
    fn plan_validation() {
        let mut p = cp_plan();
        p.replicates = 1;
        assert!(p.validate().is_err());
        let mut p = cp_plan();
        p.grid = vec![GridCell { n: 10, delta: 0.01 }];
        assert!(p.validate().is_err());
        let mut p = cp_plan();
        p.grid.reverse();
        p.validate().unwrap();
        assert!(p.grid[0].delta > p.grid[1].delta);
    }

    #[test]
    fn single_cell_report_is_well_formed() {
        let mut p = cp_plan();
        p.grid = vec![GridCell { n: 256, delta: 1.0 / 16.0 }];
        p.replicates = 2;
        let r = run_convergence_study(&p).unwrap();
        assert_eq!(r.cells.len(), 1);
        for s in &r.slopes {
            assert!(s.slope.is_nan());
            assert!(s.lo.is_infinite() && s.hi.is_infinite());
        }
        for c in &r.cells {
            assert!(c.risks.iter().all(|t| t.mean >= 0.0));
        }
    }

    #[test]
    fn csv_layout() {
        let mut p = cp_plan();
        p.replicates = 2;
        let r = run_convergence_study(&p).unwrap();
        let mut buf = Vec::new();
        write_risk_csv(&[&r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("schema_version,1"));
        assert_eq!(
            lines.next(),
            Some("config_id,n,delta,eps,target,p,mean_risk,se_risk,replicates")
        );
        assert_eq!(lines.count(), 2 * 3);
        assert!(text.contains("6.2500000000000000e-2"));
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = cp_plan();
        let a = with_workers(1, || run_convergence_study(&p)).unwrap().unwrap();
        let b = with_workers(3, || run_convergence_study(&p)).unwrap().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_order_does_not_change_results() {
        let p = cp_plan();
        let mut q = cp_plan();
        q.grid.reverse();
        assert_eq!(run_convergence_study(&p).unwrap(), run_convergence_study(&q).unwrap());
    }

    #[test]
    fn risk_split_holds() {
        let r = run_convergence_study(&cp_plan()).unwrap();
        assert!(r.bounds.iter().all(|b| b.verdict == Verdict::Pass));
    }
}
