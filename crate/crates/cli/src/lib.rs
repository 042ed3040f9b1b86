//! Driver behind the `levyest` binary.

pub mod config;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use levyest_core::analysis::{BoundReport, Verdict};
use levyest_core::bench::{
    run_bound_suite, run_brownian_robustness, run_convergence_study, run_h1_h2_diagnostics,
    with_workers, write_bounds_csv, write_diagnostics_csv, write_risk_csv, write_slopes_csv,
    default_policy, ExperimentPlan, GridCell, JRule, SamplingMode,
};
use levyest_core::intensity::corrected_lambda;
use levyest_core::io::{read_sample, write_density, write_sample};
use levyest_core::rng::{stream_id, SeedProvenance};
use levyest_core::simulate::{sample_decomposed, sample_exact, IncrementSample};
use levyest_core::wavelet::{build_basis, choose_j, estimate_f, DEFAULT_DEPTH};
use levyest_core::LevyModel;

pub use config::{Config, ConfigError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Estimate,
    Bench,
    CheckBounds,
    Diagnose,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Bench => "bench",
            Command::CheckBounds => "check-bounds",
            Command::Diagnose => "diagnose",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub dump_samples: bool,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// The run finished but some bound check failed.
    BoundFailed,
}

impl Status {
    pub fn code(&self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::BoundFailed => 2,
        }
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn status_of(bounds: &[BoundReport]) -> Status {
    if bounds.iter().any(|b| b.verdict == Verdict::Fail) {
        Status::BoundFailed
    } else {
        Status::Ok
    }
}

fn simulate_one(plan: &ExperimentPlan, model: &LevyModel, cell: &GridCell, prov: SeedProvenance) -> Result<IncrementSample> {
    let g = plan.cell_geometry(cell)?;
    Ok(match plan.mode {
        SamplingMode::Exact => sample_exact(model, cell.n, cell.delta, prov)?,
        SamplingMode::Decomposed => sample_decomposed(model, &g, &default_policy(&g), cell.n, cell.delta, prov)?,
    })
}

/// Writes replicate 0 of every grid cell, using the same streams as the bench.
fn dump_samples(plan: &ExperimentPlan, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (c, cell) in plan.grid.iter().enumerate() {
        let prov = SeedProvenance::new(plan.master_seed, stream_id(c as u32, 0));
        let s = simulate_one(plan, &plan.model, cell, prov)?;
        write_sample(&s, create(dir, &format!("sample_{c}.csv"))?)?;
    }
    Ok(())
}

fn estimate(cfg: &Config, plan: &ExperimentPlan, config_dir: &Path, out: &Path) -> Result<()> {
    let Some(input) = &cfg.input else {
        bail!("estimate needs [estimate] input = <sample csv>");
    };
    let path = if input.is_absolute() { input.clone() } else { config_dir.join(input) };
    let f = File::open(&path).with_context(|| format!("cannot open {}", path.display()))?;
    let sample = read_sample(f).with_context(|| format!("reading {}", path.display()))?;
    let g = plan.geometry;
    let lam = corrected_lambda(&sample, g.eps, plan.correction_order)?;
    let level = match plan.j_rule {
        JRule::Fixed(j) => j,
        JRule::Auto => choose_j(lam.exceed_count.max(1) as f64, plan.s),
    };
    let basis = build_basis(plan.wavelet_order, level, DEFAULT_DEPTH, g)?;
    let est = if lam.is_empty() { None } else { Some(estimate_f(&sample, &basis, &lam)?) };
    let reach = if g.a_bar.is_finite() {
        g.a_bar
    } else {
        sample.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0)
    };
    let m = cfg.eval_points;
    let xs: Vec<f64> = (0..m).map(|i| -reach + 2.0 * reach * i as f64 / (m - 1) as f64).collect();
    write_density(&xs, |x| est.as_ref().map_or(0.0, |e| e.eval(x)), create(out, "density.csv")?)?;

    let mut w = create(out, "estimate.csv")?;
    use std::io::Write;
    writeln!(w, "schema_version,1")?;
    writeln!(w, "n,delta,eps,exceed_count,lambda_hat,level,order")?;
    writeln!(
        w,
        "{},{:.16e},{:.16e},{},{:.16e},{},{}",
        sample.n(),
        sample.delta,
        g.eps,
        lam.exceed_count,
        lam.lambda_hat,
        level,
        plan.wavelet_order
    )?;
    w.flush()?;
    Ok(())
}

fn run_inner(rc: &RunConfig, cfg: &Config, plan: &ExperimentPlan) -> Result<Status> {
    let out = &rc.out_dir;
    match rc.command {
        Command::Simulate => {
            dump_samples(plan, &out.join("samples"))?;
            Ok(Status::Ok)
        }
        Command::Estimate => {
            let dir = rc.config_path.parent().unwrap_or(Path::new("."));
            estimate(cfg, plan, dir, out)?;
            Ok(Status::Ok)
        }
        Command::Bench => {
            if rc.dump_samples {
                dump_samples(plan, &out.join("samples"))?;
            }
            let (reports, bounds) = if plan.sigma > 0.0 {
                let cmp = run_brownian_robustness(plan)?;
                let mut b = cmp.baseline.bounds.clone();
                b.extend(cmp.perturbed.bounds.iter().cloned());
                (vec![cmp.baseline, cmp.perturbed], b)
            } else {
                let r = run_convergence_study(plan)?;
                let b = r.bounds.clone();
                (vec![r], b)
            };
            let refs: Vec<_> = reports.iter().collect();
            write_risk_csv(&refs, create(out, "risk.csv")?)?;
            write_slopes_csv(&refs, create(out, "slopes.csv")?)?;
            write_bounds_csv(&bounds, create(out, "bounds.csv")?)?;
            Ok(status_of(&bounds))
        }
        Command::CheckBounds => {
            let bounds = run_bound_suite(plan)?;
            write_bounds_csv(&bounds, create(out, "bounds.csv")?)?;
            Ok(status_of(&bounds))
        }
        Command::Diagnose => {
            let rows = run_h1_h2_diagnostics(plan)?;
            write_diagnostics_csv(&rows, create(out, "diagnostics.csv")?)?;
            Ok(Status::Ok)
        }
    }
}

/// Loads the config, applies overrides, writes `resolved_config` and runs
/// the subcommand on the requested number of workers.
pub fn run(rc: &RunConfig) -> Result<Status> {
    let text = fs::read_to_string(&rc.config_path)
        .with_context(|| format!("cannot read {}", rc.config_path.display()))?;
    let mut cfg = Config::parse(&text).with_context(|| format!("in {}", rc.config_path.display()))?;
    if let Some(seed) = rc.seed {
        cfg.seed = seed;
    }
    let plan = cfg.plan()?;
    fs::create_dir_all(&rc.out_dir).with_context(|| format!("cannot create {}", rc.out_dir.display()))?;
    fs::write(rc.out_dir.join("resolved_config"), cfg.to_text())
        .with_context(|| format!("cannot write to {}", rc.out_dir.display()))?;
    match rc.workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(w) => with_workers(w, || run_inner(rc, &cfg, &plan))?,
        None => run_inner(rc, &cfg, &plan),
    }
}
