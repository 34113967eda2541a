//! Run configuration.
//!
//! Settings come from an optional `key=value` file and from command-line
//! flags; both feed the same [`ConfigBuilder::apply`], later values winning.
//! Keys are the long flag names without dashes prefix (`tau`, `n0`, `t-star`,
//! `prop-mode`, ...). `tau`, `n0` and `s0` accept comma lists and span a grid.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::capacity::CapacityLaw;
use crate::clock::{ClockParams, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::spreading::{PropagationMode, SpreadSetup, TrajectoryConfig};

/// Default `λT*` for analytic and compare runs without an explicit horizon.
pub const DEFAULT_MEAN_STEPS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RunMode {
    #[default]
    Simulate,
    Analytic,
    Compare,
}

impl FromStr for RunMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "simulate" => Ok(Self::Simulate),
            "analytic" => Ok(Self::Analytic),
            "compare" => Ok(Self::Compare),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Simulate => "simulate",
            Self::Analytic => "analytic",
            Self::Compare => "compare",
        })
    }
}

/// One `(τ, N_0, #S_0)` cell plus everything shared by the sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub tau: f64,
    pub n0: usize,
    pub s0: usize,
    /// Clock rate `λ`.
    pub rate: f64,
    /// Horizon `T*`; `None` leaves the run bounded by `max_nodes` only.
    pub horizon: Option<f64>,
    pub max_nodes: Option<usize>,
    pub runs: usize,
    pub seed: u64,
    pub mode: RunMode,
    pub propagation_mode: PropagationMode,
    pub delete_old_edges: bool,
    pub epsilon: f64,
    pub paper_faithful: bool,
    /// End-to-end replicas used by `compare`.
    pub replicas: usize,
    pub workers: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            tau: 2.5,
            n0: 1,
            s0: 1,
            rate: 1.0,
            horizon: None,
            max_nodes: Some(3000),
            runs: 20,
            seed: 42,
            mode: RunMode::Simulate,
            propagation_mode: PropagationMode::Bernoulli,
            delete_old_edges: false,
            epsilon: DEFAULT_EPSILON,
            paper_faithful: false,
            replicas: 100_000,
            workers: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !(self.tau.is_finite() && self.tau > 1.0) {
            return fail(format!("tau must be > 1, got {}", self.tau));
        }
        if self.s0 == 0 || self.s0 > self.n0 {
            return fail(format!(
                "need 1 <= s0 <= n0, got s0={}, n0={}",
                self.s0, self.n0
            ));
        }
        if self.runs == 0 {
            return fail("runs must be >= 1".into());
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return fail(format!("rate must be positive, got {}", self.rate));
        }
        if let Some(h) = self.horizon {
            if !(h.is_finite() && h >= 0.0) {
                return fail(format!("t-star must be finite and >= 0, got {h}"));
            }
        }
        if let Some(m) = self.max_nodes {
            if m < self.n0 {
                return fail(format!("max-nodes {m} is below n0 {}", self.n0));
            }
        }
        if self.mode == RunMode::Simulate && self.max_nodes.is_none() && self.horizon.is_none() {
            return fail("simulate needs max-nodes, t-star, or both".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return fail(format!("epsilon must lie in (0,1), got {}", self.epsilon));
        }
        if self.replicas == 0 {
            return fail("replicas must be >= 1".into());
        }
        if self.workers == Some(0) {
            return fail("workers must be >= 1".into());
        }
        Ok(())
    }

    pub fn law(&self) -> Result<CapacityLaw> {
        CapacityLaw::with_tau(self.tau)
    }

    pub fn setup(&self) -> SpreadSetup {
        SpreadSetup {
            n0: self.n0,
            s0: self.s0,
            mode: self.propagation_mode,
            delete_old_edges: self.delete_old_edges,
        }
    }

    /// `λT*` used by the analytic and compare modes.
    pub fn mean_steps(&self) -> f64 {
        match self.horizon {
            Some(h) => self.rate * h,
            None => DEFAULT_MEAN_STEPS,
        }
    }

    /// Clock for the horizon quantities; `None` when `λT* = 0`.
    pub fn analytic_clock(&self) -> Result<Option<ClockParams>> {
        let mean = self.mean_steps();
        if mean == 0.0 {
            return Ok(None);
        }
        ClockParams::new(self.rate, mean / self.rate).map(Some)
    }

    pub fn trajectory_config(&self) -> Result<TrajectoryConfig> {
        let (clock, max_nodes) = match self.horizon {
            Some(h) if h > 0.0 => (Some(ClockParams::new(self.rate, h)?), self.max_nodes),
            // T* = 0: the clock never ticks
            Some(_) => (None, Some(self.n0)),
            None => (None, self.max_nodes),
        };
        let config = TrajectoryConfig {
            law: self.law()?,
            setup: self.setup(),
            max_nodes,
            clock,
        };
        config.validate()?;
        Ok(config)
    }

    /// Stem used in output file names, e.g. `1.5_10_1`.
    pub fn cell_label(&self) -> String {
        format!("{}_{}_{}", self.tau, self.n0, self.s0)
    }

    pub fn describe(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        format!(
            "tau={} n0={} s0={} rate={} t_star={} max_nodes={} runs={} seed={} prop_mode={} delete_old_edges={} epsilon={:e} paper_faithful={}",
            self.tau,
            self.n0,
            self.s0,
            self.rate,
            opt(self.horizon.map(|h| h.to_string())),
            opt(self.max_nodes.map(|m| m.to_string())),
            self.runs,
            self.seed,
            self.propagation_mode,
            self.delete_old_edges,
            self.epsilon,
            self.paper_faithful
        )
    }
}

/// Cartesian product over `τ × N_0 × #S_0` sharing all other settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub taus: Vec<f64>,
    pub n0s: Vec<usize>,
    pub s0s: Vec<usize>,
    pub base: SimulationConfig,
    /// Graph sizes at which simulate mode writes snapshots of run 0.
    pub snapshots: Vec<usize>,
}

impl SweepGrid {
    pub fn single(config: SimulationConfig) -> Self {
        Self {
            taus: vec![config.tau],
            n0s: vec![config.n0],
            s0s: vec![config.s0],
            base: config,
            snapshots: Vec::new(),
        }
    }

    /// The parameter grid of the reference simulation study: 3 τ × 3 N_0 ×
    /// 3 #S_0, 20 runs, graphs grown to 3000 nodes.
    pub fn reference_study(base: SimulationConfig) -> Self {
        Self {
            taus: vec![1.5, 2.5, 3.5],
            n0s: vec![10, 50, 100],
            s0s: vec![1, 5, 10],
            base,
            snapshots: Vec::new(),
        }
    }

    /// All cells in τ-major order. Cells are not validated here.
    pub fn cells(&self) -> Vec<SimulationConfig> {
        let mut out = Vec::with_capacity(self.taus.len() * self.n0s.len() * self.s0s.len());
        for &tau in &self.taus {
            for &n0 in &self.n0s {
                for &s0 in &self.s0s {
                    out.push(SimulationConfig {
                        tau,
                        n0,
                        s0,
                        ..self.base.clone()
                    });
                }
            }
        }
        out
    }
}

/// Accumulates `key=value` settings into a [`SweepGrid`] and output options.
#[derive(Debug, Clone)]
pub struct ConfigBuilder {
    grid: SweepGrid,
    out: PathBuf,
}

impl Default for ConfigBuilder {
    fn default() -> Self {
        Self {
            grid: SweepGrid::single(SimulationConfig::default()),
            out: PathBuf::from("out"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse `{value}`: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    let items: Vec<T> = value
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse(key, s))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "" | "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(Error::Config(format!(
            "{key}: expected a boolean, got `{other}`"
        ))),
    }
}

fn parse_optional<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    match value.trim() {
        "none" | "" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

impl ConfigBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<&mut Self> {
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let base = &mut self.grid.base;
        match key.as_str() {
            "tau" => self.grid.taus = parse_list(&key, value)?,
            "n0" => self.grid.n0s = parse_list(&key, value)?,
            "s0" => self.grid.s0s = parse_list(&key, value)?,
            "rate" => base.rate = parse(&key, value)?,
            "t-star" => base.horizon = parse_optional(&key, value)?,
            "max-nodes" => base.max_nodes = parse_optional(&key, value)?,
            "runs" => base.runs = parse(&key, value)?,
            "seed" => base.seed = parse(&key, value)?,
            "mode" => base.mode = parse(&key, value)?,
            "prop-mode" => base.propagation_mode = value.parse()?,
            "delete-old-edges" => base.delete_old_edges = parse_bool(&key, value)?,
            "epsilon" => base.epsilon = parse(&key, value)?,
            "paper-faithful" => base.paper_faithful = parse_bool(&key, value)?,
            "replicas" => base.replicas = parse(&key, value)?,
            "workers" => base.workers = parse_optional(&key, value)?,
            "snapshots" => {
                self.grid.snapshots = match value.trim() {
                    "" | "none" => Vec::new(),
                    v => parse_list(&key, v)?,
                }
            }
            "out" => self.out = PathBuf::from(value.trim()),
            other => return Err(Error::Config(format!("unknown setting `{other}`"))),
        }
        Ok(self)
    }

    /// Applies every `key=value` line of `text`. Blank lines and `#` comments
    /// are skipped; a bare `key` means `key=true`.
    pub fn apply_str(&mut self, text: &str) -> Result<&mut Self> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').unwrap_or((line, ""));
            self.apply(k, v)
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(self)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<&mut Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_str(&text)
    }

    pub fn grid(&self) -> &SweepGrid {
        &self.grid
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    pub fn build(self) -> (SweepGrid, PathBuf) {
        (self.grid, self.out)
    }
}
