//! Experiment config files.
//!
//! Line-oriented `key = value` pairs under `[section]` headers; `#` starts a
//! comment. Every key has a fixed home section. Unknown and duplicate keys
//! are errors, and all errors carry line numbers.
//!
//! ```text
//! [run]
//! config_id = cp
//! seed = 7
//!
//! [model]
//! family = compound_poisson
//! intensity = 1
//! jumps = truncated_normal(0,1,-5,5)
//!
//! [geometry]
//! eps = 0
//! a_bar = 5
//! ```

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;

use levyest_core::bench::{coupled_grid, ExperimentPlan, GridCell, JRule, SamplingMode};
use levyest_core::wavelet::{min_order_for_smoothness, J_MAX};
use levyest_core::{JumpLaw, LevyModel, TruncationGeometry};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    At { line: usize, msg: String },
    #[error("duplicate key '{key}' on lines {first} and {second}")]
    Duplicate { key: String, first: usize, second: usize },
    #[error("missing required key '{0}'")]
    Missing(String),
}

fn at(line: usize, msg: impl fmt::Display) -> ConfigError {
    ConfigError::At {
        line,
        msg: msg.to_string(),
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("run", &["config_id", "seed", "mode"]),
    ("model", &["family", "intensity", "jumps", "alpha", "sigma"]),
    ("geometry", &["eps", "a_bar"]),
    ("grid", &["n", "delta", "delta_scale", "delta_exponent"]),
    (
        "estimator",
        &["s", "order", "level", "correction_order", "p", "loss_points"],
    ),
    (
        "bench",
        &["replicates", "bound_runs", "diag_replicates", "diag_deltas", "eps_exponent"],
    ),
    ("estimate", &["input", "eval_points"]),
];

/// Raw `section.key → (value, line)` map.
struct Raw {
    entries: HashMap<String, (String, usize)>,
}

impl Raw {
    fn parse(text: &str) -> Result<Raw, ConfigError> {
        let mut entries: HashMap<String, (String, usize)> = HashMap::new();
        let mut section: Option<String> = None;
        for (i, raw_line) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw_line.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(rest) = l.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| at(line, format!("malformed section header '{l}'")))?
                    .trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(at(line, format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = l
                .split_once('=')
                .ok_or_else(|| at(line, format!("expected 'key = value', got '{l}'")))?;
            let (k, v) = (k.trim(), v.trim());
            let sec = section
                .as_deref()
                .ok_or_else(|| at(line, format!("key '{k}' outside any section")))?;
            let known = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, ks)| *ks).unwrap_or(&[]);
            if !known.contains(&k) {
                return Err(at(line, format!("unknown key '{k}' in [{sec}]")));
            }
            if v.is_empty() {
                return Err(at(line, format!("empty value for '{k}'")));
            }
            let full = format!("{sec}.{k}");
            if let Some((_, first)) = entries.get(&full) {
                return Err(ConfigError::Duplicate {
                    key: full,
                    first: *first,
                    second: line,
                });
            }
            entries.insert(full, (v.to_string(), line));
        }
        Ok(Raw { entries })
    }

    fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.1)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| at(*line, format!("cannot parse '{v}' for '{key}'"))),
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<T>()
                        .map_err(|_| at(*line, format!("cannot parse '{}' in '{key}'", x.trim())))
                })
                .collect::<Result<Vec<T>, _>>()
                .map(Some),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyName {
    CompoundPoisson,
    Gamma,
    InverseGaussian,
    Cauchy,
    Stable,
}

impl FamilyName {
    const ALL: [(FamilyName, &'static str); 5] = [
        (FamilyName::CompoundPoisson, "compound_poisson"),
        (FamilyName::Gamma, "gamma"),
        (FamilyName::InverseGaussian, "inverse_gaussian"),
        (FamilyName::Cauchy, "cauchy"),
        (FamilyName::Stable, "stable"),
    ];

    fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(_, n)| *n == s).map(|(f, _)| *f)
    }

    pub fn as_str(&self) -> &'static str {
        Self::ALL.iter().find(|(f, _)| f == self).map(|(_, n)| *n).unwrap_or("")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    /// Δ = c n^{−γ}.
    Rule { n: Vec<usize>, scale: f64, exponent: f64 },
    Explicit { n: Vec<usize>, delta: Vec<f64> },
}

impl GridSpec {
    pub fn cells(&self) -> Vec<GridCell> {
        match self {
            GridSpec::Rule { n, scale, exponent } => coupled_grid(n, *scale, *exponent),
            GridSpec::Explicit { n, delta } => n
                .iter()
                .zip(delta)
                .map(|(&n, &delta)| GridCell { n, delta })
                .collect(),
        }
    }
}

/// A fully resolved config: every default is filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub config_id: String,
    pub seed: u64,
    pub mode: SamplingMode,
    pub family: FamilyName,
    pub intensity: Option<f64>,
    pub jumps: Option<String>,
    pub alpha: Option<f64>,
    pub sigma: f64,
    pub eps: f64,
    pub a_bar: f64,
    pub grid: GridSpec,
    pub s: f64,
    pub order: usize,
    pub level: JRule,
    pub correction_order: u32,
    pub p: f64,
    pub loss_points: usize,
    pub replicates: usize,
    pub bound_runs: usize,
    pub diag_replicates: usize,
    pub diag_deltas: Vec<f64>,
    pub eps_exponent: Option<f64>,
    pub input: Option<PathBuf>,
    pub eval_points: usize,
}

pub const DEFAULT_A_BAR: f64 = 10.0;

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

impl Config {
    /// Parses and validates a config, filling defaults.
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let raw = Raw::parse(text)?;
        let family_s: String = raw
            .get("model.family")?
            .ok_or_else(|| ConfigError::Missing("model.family".into()))?;
        let family = FamilyName::parse(&family_s)
            .ok_or_else(|| at(raw.line("model.family"), format!("unknown family '{family_s}'")))?;
        let finite = family == FamilyName::CompoundPoisson;

        let mode = match raw.get::<String>("run.mode")?.as_deref() {
            None | Some("exact") => SamplingMode::Exact,
            Some("decomposed") => SamplingMode::Decomposed,
            Some(m) => return Err(at(raw.line("run.mode"), format!("mode must be exact or decomposed, got '{m}'"))),
        };

        let intensity = raw.get::<f64>("model.intensity")?;
        let jumps = raw.get::<String>("model.jumps")?;
        let alpha = raw.get::<f64>("model.alpha")?;
        match family {
            FamilyName::CompoundPoisson => {
                if intensity.is_none() {
                    return Err(ConfigError::Missing("model.intensity".into()));
                }
                if jumps.is_none() {
                    return Err(ConfigError::Missing("model.jumps".into()));
                }
            }
            FamilyName::Stable if alpha.is_none() => return Err(ConfigError::Missing("model.alpha".into())),
            _ => {}
        }
        for (key, present, ok) in [
            ("model.intensity", intensity.is_some(), finite),
            ("model.jumps", jumps.is_some(), finite),
            ("model.alpha", alpha.is_some(), family == FamilyName::Stable),
        ] {
            if present && !ok {
                return Err(at(raw.line(key), format!("'{key}' does not apply to family {family_s}")));
            }
        }

        let eps = match raw.get::<f64>("geometry.eps")? {
            Some(e) => e,
            None if finite => 0.0,
            None => return Err(ConfigError::Missing("geometry.eps".into())),
        };

        let n: Vec<usize> = raw
            .list("grid.n")?
            .unwrap_or_else(|| vec![1 << 12, 1 << 14, 1 << 16, 1 << 18]);
        let grid = match raw.list::<f64>("grid.delta")? {
            Some(delta) => {
                for k in ["grid.delta_scale", "grid.delta_exponent"] {
                    if raw.entries.contains_key(k) {
                        return Err(at(raw.line(k), format!("'{k}' conflicts with an explicit grid.delta")));
                    }
                }
                if delta.len() != n.len() {
                    return Err(at(
                        raw.line("grid.delta"),
                        format!("{} delta values for {} sample sizes", delta.len(), n.len()),
                    ));
                }
                GridSpec::Explicit { n, delta }
            }
            None => GridSpec::Rule {
                n,
                scale: raw.get("grid.delta_scale")?.unwrap_or(1.0),
                exponent: raw.get("grid.delta_exponent")?.unwrap_or(0.5),
            },
        };

        let s: f64 = raw.get("estimator.s")?.unwrap_or(2.0);
        let order = match raw.get::<usize>("estimator.order")? {
            Some(o) => o,
            None => min_order_for_smoothness(s).ok_or_else(|| {
                at(raw.line("estimator.s"), format!("no tabulated wavelet order for s = {s}; set estimator.order"))
            })?,
        };
        let level = match raw.get::<String>("estimator.level")?.as_deref() {
            None | Some("auto") => JRule::Auto,
            Some(v) => {
                let j: u32 = v
                    .parse()
                    .map_err(|_| at(raw.line("estimator.level"), format!("level must be 'auto' or an integer, got '{v}'")))?;
                if j > J_MAX {
                    return Err(at(raw.line("estimator.level"), format!("level must be <= {J_MAX}")));
                }
                JRule::Fixed(j)
            }
        };

        let cfg = Config {
            config_id: raw.get("run.config_id")?.unwrap_or_else(|| "default".to_string()),
            seed: raw.get("run.seed")?.unwrap_or(0),
            mode,
            family,
            intensity,
            jumps,
            alpha,
            sigma: raw.get("model.sigma")?.unwrap_or(0.0),
            eps,
            a_bar: raw.get("geometry.a_bar")?.unwrap_or(DEFAULT_A_BAR),
            grid,
            s,
            order,
            level,
            correction_order: raw.get("estimator.correction_order")?.unwrap_or(1),
            p: raw.get("estimator.p")?.unwrap_or(2.0),
            loss_points: raw.get("estimator.loss_points")?.unwrap_or(1024),
            replicates: raw.get("bench.replicates")?.unwrap_or(50),
            bound_runs: raw.get("bench.bound_runs")?.unwrap_or(200),
            diag_replicates: raw.get("bench.diag_replicates")?.unwrap_or(100_000),
            diag_deltas: raw.list("bench.diag_deltas")?.unwrap_or_else(|| vec![0.2, 0.1, 0.05, 0.025]),
            eps_exponent: raw.get("bench.eps_exponent")?,
            input: raw.get::<String>("estimate.input")?.map(PathBuf::from),
            eval_points: raw.get("estimate.eval_points")?.unwrap_or(512),
        };
        if cfg.config_id.contains(',') || cfg.config_id.contains('"') {
            return Err(at(raw.line("run.config_id"), "config_id may not contain commas or quotes"));
        }
        if cfg.eval_points < 2 {
            return Err(at(raw.line("estimate.eval_points"), "eval_points must be at least 2"));
        }
        if cfg.diag_deltas.is_empty() || cfg.diag_deltas.iter().any(|d| !(*d > 0.0)) {
            return Err(at(raw.line("bench.diag_deltas"), "diag_deltas must be positive"));
        }
        // model and plan invariants, reported at the most relevant line
        let model = cfg.model().map_err(|e| at(raw.line("model.family"), e))?;
        TruncationGeometry::for_model(&model, cfg.eps, cfg.a_bar).map_err(|e| {
            let line = raw.line("geometry.eps").max(raw.line("geometry.a_bar")).max(raw.line("model.family"));
            at(line, e)
        })?;
        cfg.plan().map_err(|e| {
            let line = ["bench.replicates", "grid.n", "grid.delta", "estimator.p"]
                .iter()
                .map(|k| raw.line(k))
                .max()
                .unwrap_or(0);
            at(line, e)
        })?;
        Ok(cfg)
    }

    pub fn model(&self) -> levyest_core::Result<LevyModel> {
        let m = match self.family {
            FamilyName::CompoundPoisson => LevyModel::compound_poisson(
                self.intensity.unwrap_or(f64::NAN),
                JumpLaw::parse(self.jumps.as_deref().unwrap_or(""))?,
            )?,
            FamilyName::Gamma => LevyModel::gamma(),
            FamilyName::InverseGaussian => LevyModel::inverse_gaussian(),
            FamilyName::Cauchy => LevyModel::cauchy(),
            FamilyName::Stable => LevyModel::stable(self.alpha.unwrap_or(f64::NAN))?,
        };
        m.with_sigma(self.sigma)
    }

    /// The validated experiment plan.
    pub fn plan(&self) -> levyest_core::Result<ExperimentPlan> {
        let model = self.model()?;
        let geometry = TruncationGeometry::for_model(&model, self.eps, self.a_bar)?;
        let mut plan = ExperimentPlan::new(&self.config_id, model, geometry);
        plan.grid = self.grid.cells();
        plan.s = self.s;
        plan.wavelet_order = self.order;
        plan.j_rule = self.level;
        plan.correction_order = self.correction_order;
        plan.p = self.p;
        plan.replicates = self.replicates;
        plan.master_seed = self.seed;
        plan.mode = self.mode;
        plan.sigma = self.sigma;
        plan.eps_exponent = self.eps_exponent;
        plan.loss_points = self.loss_points;
        plan.bound_runs = self.bound_runs;
        plan.diag_replicates = self.diag_replicates;
        plan.diag_deltas = self.diag_deltas.clone();
        plan.validate()?;
        Ok(plan)
    }

    /// Serializes every field; `parse` of the output gives back `self`.
    pub fn to_text(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "[run]");
        let _ = writeln!(o, "config_id = {}", self.config_id);
        let _ = writeln!(o, "seed = {}", self.seed);
        let _ = writeln!(o, "mode = {}", self.mode.as_str());
        let _ = writeln!(o, "\n[model]");
        let _ = writeln!(o, "family = {}", self.family.as_str());
        if let Some(x) = self.intensity {
            let _ = writeln!(o, "intensity = {x}");
        }
        if let Some(j) = &self.jumps {
            let _ = writeln!(o, "jumps = {j}");
        }
        if let Some(a) = self.alpha {
            let _ = writeln!(o, "alpha = {a}");
        }
        let _ = writeln!(o, "sigma = {}", self.sigma);
        let _ = writeln!(o, "\n[geometry]");
        let _ = writeln!(o, "eps = {}", self.eps);
        let _ = writeln!(o, "a_bar = {}", self.a_bar);
        let _ = writeln!(o, "\n[grid]");
        match &self.grid {
            GridSpec::Rule { n, scale, exponent } => {
                let _ = writeln!(o, "n = {}", join(n));
                let _ = writeln!(o, "delta_scale = {scale}");
                let _ = writeln!(o, "delta_exponent = {exponent}");
            }
            GridSpec::Explicit { n, delta } => {
                let _ = writeln!(o, "n = {}", join(n));
                let _ = writeln!(o, "delta = {}", join(delta));
            }
        }
        let _ = writeln!(o, "\n[estimator]");
        let _ = writeln!(o, "s = {}", self.s);
        let _ = writeln!(o, "order = {}", self.order);
        match self.level {
            JRule::Auto => {
                let _ = writeln!(o, "level = auto");
            }
            JRule::Fixed(j) => {
                let _ = writeln!(o, "level = {j}");
            }
        }
        let _ = writeln!(o, "correction_order = {}", self.correction_order);
        let _ = writeln!(o, "p = {}", self.p);
        let _ = writeln!(o, "loss_points = {}", self.loss_points);
        let _ = writeln!(o, "\n[bench]");
        let _ = writeln!(o, "replicates = {}", self.replicates);
        let _ = writeln!(o, "bound_runs = {}", self.bound_runs);
        let _ = writeln!(o, "diag_replicates = {}", self.diag_replicates);
        let _ = writeln!(o, "diag_deltas = {}", join(&self.diag_deltas));
        if let Some(g) = self.eps_exponent {
            let _ = writeln!(o, "eps_exponent = {g}");
        }
        let _ = writeln!(o, "\n[estimate]");
        if let Some(p) = &self.input {
            let _ = writeln!(o, "input = {}", p.display());
        }
        let _ = writeln!(o, "eval_points = {}", self.eval_points);
        o
    }
}
