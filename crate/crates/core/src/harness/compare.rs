//! Exact horizon distributions and their check against simulation.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::SimulationConfig;
use super::replica_seed;
use super::sweep::with_workers;
use crate::analytics::{
    node_count_distribution, ratio_cdf_grid, spread_pmf_horizon, DiscreteDistribution,
    InitialState, NonPropagationTrace, PinnedTrace, TraceGenerator,
};
use crate::capacity::CapacitySequence;
use crate::clock::{sample_step_count, truncation_index, ClockParams};
use crate::error::Result;
use crate::spreading::{run_trajectory_fixed, TrajectoryConfig};
use crate::stats::{histogram, total_variation};

/// Stream ids mixed into the base seed for the non-replica random streams.
const CAPACITY_STREAM: u64 = u64::MAX;
const FROZEN_PATH_STREAM: u64 = u64::MAX - 1;
const PINNED_STREAM: u64 = u64::MAX - 2;

/// Acceptance bounds for `compare` at its default replica count.
pub const NODE_COUNT_TV_BOUND: f64 = 0.005;
pub const PINNED_SPREAD_TV_BOUND: f64 = 0.01;

/// Capacities fixed for the whole comparison: `N_0 + k_max` nodes drawn from
/// the capacity stream of `config.seed`.
pub fn fixed_capacities(config: &SimulationConfig, k_max: usize) -> Result<CapacitySequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(config.seed, CAPACITY_STREAM));
    CapacitySequence::sample(&config.law()?, config.n0 + k_max, &mut rng)
}

fn horizon_steps(clock: Option<&ClockParams>, epsilon: f64) -> Result<usize> {
    Ok(match clock {
        Some(c) => truncation_index(c.mean_steps(), epsilon)? as usize,
        None => 0,
    })
}

fn horizon_pmf<G: TraceGenerator + ?Sized>(
    generator: &G,
    clock: Option<&ClockParams>,
    epsilon: f64,
    initial: InitialState,
) -> Result<DiscreteDistribution> {
    match clock {
        Some(c) => spread_pmf_horizon(generator, c, epsilon, initial),
        None => Ok(DiscreteDistribution::point_mass(initial.spread)),
    }
}

/// Run on a fixed capacity sequence for `steps` steps, returning `p_1..p_steps`.
fn frozen_path(
    config: &SimulationConfig,
    seq: &CapacitySequence,
    steps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let trajectory = TrajectoryConfig {
        law: config.law()?,
        setup: config.setup(),
        max_nodes: Some(config.n0 + steps),
        clock: None,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(run_trajectory_fixed(&trajectory, seq, 0, &mut rng)?.success_trace())
}

/// Analytic-versus-empirical comparison at fixed capacities.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub config: SimulationConfig,
    pub mean_steps: f64,
    pub k_max: usize,
    pub replicas: usize,
    /// `P{N_{K*} = i}` exact and from end-to-end graph runs.
    pub node_count_analytic: DiscreteDistribution,
    pub node_count_empirical: Vec<f64>,
    pub node_count_tv: f64,
    /// Holder set pinned at `S_0`: exact Poisson binomial mixture against a
    /// simulated Bernoulli chain with the same `p_k`.
    pub pinned_analytic: DiscreteDistribution,
    pub pinned_empirical: Vec<f64>,
    pub pinned_tv: f64,
    /// End-to-end `#S_{K*}` against the average of per-path exact mixtures.
    pub spread_frozen_path: Vec<f64>,
    pub spread_empirical: Vec<f64>,
    pub frozen_path_tv: f64,
}

impl CompareReport {
    pub fn node_count_ok(&self) -> bool {
        self.node_count_tv < NODE_COUNT_TV_BOUND
    }

    pub fn pinned_ok(&self) -> bool {
        self.pinned_tv < PINNED_SPREAD_TV_BOUND
    }

    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let verdict = |ok: bool| if ok { "ok" } else { "EXCEEDED" };
        writeln!(w, "[compare {}]", self.config.cell_label())?;
        writeln!(w, "config: {}", self.config.describe())?;
        writeln!(
            w,
            "mean_steps={} k_max={} replicas={}",
            self.mean_steps, self.k_max, self.replicas
        )?;
        writeln!(
            w,
            "node_count_tv={:.6} bound={} {}",
            self.node_count_tv,
            NODE_COUNT_TV_BOUND,
            verdict(self.node_count_ok())
        )?;
        writeln!(
            w,
            "pinned_spread_tv={:.6} bound={} {}",
            self.pinned_tv,
            PINNED_SPREAD_TV_BOUND,
            verdict(self.pinned_ok())
        )?;
        writeln!(
            w,
            "frozen_path_spread_tv={:.6} (diagnostic)",
            self.frozen_path_tv
        )?;
        writeln!(
            w,
            "truncation_deficit={:e}",
            self.node_count_analytic.deficit()
        )?;
        writeln!(w, "i,node_count_exact,node_count_empirical")?;
        let n = self
            .node_count_analytic
            .support_end()
            .max(self.node_count_empirical.len());
        for i in self.config.n0..n {
            writeln!(
                w,
                "{i},{:.6},{:.6}",
                self.node_count_analytic.pmf(i),
                self.node_count_empirical.get(i).copied().unwrap_or(0.0)
            )?;
        }
        writeln!(
            w,
            "i,pinned_exact,pinned_empirical,frozen_path_mixture,end_to_end"
        )?;
        let n = [
            self.pinned_analytic.support_end(),
            self.pinned_empirical.len(),
            self.spread_frozen_path.len(),
            self.spread_empirical.len(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
        for i in self.config.s0..n {
            writeln!(
                w,
                "{i},{:.6},{:.6},{:.6},{:.6}",
                self.pinned_analytic.pmf(i),
                at(&self.pinned_empirical, i),
                at(&self.spread_frozen_path, i),
                at(&self.spread_empirical, i)
            )?;
        }
        writeln!(w)
    }
}

/// Compares exact horizon quantities with `config.replicas` end-to-end runs
/// at one fixed, seeded capacity sequence.
pub fn compare_analytic_empirical(config: &SimulationConfig) -> Result<CompareReport> {
    config.validate()?;
    let clock = config.analytic_clock()?;
    let initial = InitialState::new(config.n0, config.s0)?;
    let k_max = horizon_steps(clock.as_ref(), config.epsilon)?;
    let seq = fixed_capacities(config, k_max)?;
    let replicas = config.replicas as u64;

    let node_count_analytic = match &clock {
        Some(c) => node_count_distribution(c, config.n0, config.epsilon)?,
        None => DiscreteDistribution::point_mass(config.n0),
    };

    // End-to-end: sample K*, grow the graph on the fixed capacities. K* beyond
    // k_max (probability < epsilon) is capped there.
    let end_to_end = TrajectoryConfig {
        law: config.law()?,
        setup: config.setup(),
        max_nodes: Some(config.n0 + k_max),
        clock,
    };
    let finals: Vec<(usize, usize)> = with_workers(config.workers, || {
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(config.seed, r));
                let last = *run_trajectory_fixed(&end_to_end, &seq, r, &mut rng)?.last();
                Ok((last.node_count, last.spread_count))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let node_count_empirical = histogram(finals.iter().map(|f| f.0));
    let spread_empirical = histogram(finals.iter().map(|f| f.1));
    let node_count_tv = total_variation(
        &node_count_analytic.dense_from_zero(),
        &node_count_empirical,
    );

    // Per-path exact mixtures averaged over independently realized paths.
    let frozen_base = replica_seed(config.seed, FROZEN_PATH_STREAM);
    let per_path: Vec<Vec<f64>> = with_workers(config.workers, || {
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                let trace = frozen_path(config, &seq, k_max, replica_seed(frozen_base, r))?;
                Ok(
                    horizon_pmf(&PinnedTrace(trace), clock.as_ref(), config.epsilon, initial)?
                        .dense_from_zero(),
                )
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let width = per_path.iter().map(Vec::len).max().unwrap_or(0);
    let mut spread_frozen_path = vec![0.0; width];
    for pmf in &per_path {
        for (a, p) in spread_frozen_path.iter_mut().zip(pmf) {
            *a += p;
        }
    }
    spread_frozen_path
        .iter_mut()
        .for_each(|a| *a /= replicas as f64);
    let frozen_path_tv = total_variation(&spread_frozen_path, &spread_empirical);

    // Pinned holder set.
    let pinned = NonPropagationTrace::new(&seq, initial)?;
    let pinned_trace = pinned.trace(k_max)?;
    let pinned_analytic = horizon_pmf(&pinned, clock.as_ref(), config.epsilon, initial)?;
    let pinned_base = replica_seed(config.seed, PINNED_STREAM);
    let pinned_finals: Vec<usize> = with_workers(config.workers, || {
        (0..replicas)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(pinned_base, r));
                let k = match &clock {
                    Some(c) => (sample_step_count(c, &mut rng) as usize).min(k_max),
                    None => 0,
                };
                config.s0
                    + pinned_trace[..k]
                        .iter()
                        .filter(|&&p| rng.random::<f64>() < p)
                        .count()
            })
            .collect()
    })?;
    let pinned_empirical = histogram(pinned_finals);
    let pinned_tv = total_variation(&pinned_analytic.dense_from_zero(), &pinned_empirical);

    Ok(CompareReport {
        config: config.clone(),
        mean_steps: clock.map_or(0.0, |c| c.mean_steps()),
        k_max,
        replicas: config.replicas,
        node_count_analytic,
        node_count_empirical,
        node_count_tv,
        pinned_analytic,
        pinned_empirical,
        pinned_tv,
        spread_frozen_path,
        spread_empirical,
        frozen_path_tv,
    })
}

/// Exact quantities for one cell at fixed capacities.
#[derive(Debug, Clone)]
pub struct AnalyticOutput {
    pub config: SimulationConfig,
    pub capacities: CapacitySequence,
    /// `#S_{K*}` along the `p_k` frozen from one realized path.
    pub spread_horizon: DiscreteDistribution,
    /// `#S_{K*}` with the holder set pinned at `S_0`.
    pub spread_horizon_pinned: DiscreteDistribution,
    pub node_count: DiscreteDistribution,
    /// `(x, P{#S_{K*}/N_{K*} ≤ x})` on a 101-point grid, frozen-path trace.
    pub ratio_cdf: Vec<(f64, f64)>,
    /// `(K, P{#S_K = #S_0})` for `K = 1..=k_max`.
    pub non_propagation: Vec<(usize, f64)>,
}

pub fn run_analytic(config: &SimulationConfig) -> Result<AnalyticOutput> {
    config.validate()?;
    let clock = config.analytic_clock()?;
    let initial = InitialState::new(config.n0, config.s0)?;
    let k_max = horizon_steps(clock.as_ref(), config.epsilon)?;
    let seq = fixed_capacities(config, k_max)?;

    let frozen = PinnedTrace(frozen_path(
        config,
        &seq,
        k_max,
        replica_seed(config.seed, 0),
    )?);
    let pinned = NonPropagationTrace::new(&seq, initial)?;
    let spread_horizon = horizon_pmf(&frozen, clock.as_ref(), config.epsilon, initial)?;
    let spread_horizon_pinned = horizon_pmf(&pinned, clock.as_ref(), config.epsilon, initial)?;
    let node_count = match &clock {
        Some(c) => node_count_distribution(c, config.n0, config.epsilon)?,
        None => DiscreteDistribution::point_mass(config.n0),
    };
    let xs: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let cdf = match &clock {
        Some(c) => ratio_cdf_grid(
            &frozen,
            c,
            &xs,
            config.epsilon,
            config.paper_faithful,
            initial,
        )?,
        None => {
            let r0 = config.s0 as f64 / config.n0 as f64;
            xs.iter()
                .map(|&x| {
                    if config.paper_faithful || x >= r0 {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    };
    let mut survive = 1.0;
    let non_propagation = pinned
        .trace(k_max)?
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            survive *= 1.0 - p;
            (k + 1, survive)
        })
        .collect();

    Ok(AnalyticOutput {
        config: config.clone(),
        capacities: seq,
        spread_horizon,
        spread_horizon_pinned,
        node_count,
        ratio_cdf: xs.into_iter().zip(cdf).collect(),
        non_propagation,
    })
}

impl AnalyticOutput {
    fn params(&self) -> String {
        let c = &self.config;
        format!(
            "tau={} n0={} s0={} rate={} mean_steps={} epsilon={:e} seed={} paper_faithful={}",
            c.tau,
            c.n0,
            c.s0,
            c.rate,
            c.mean_steps(),
            c.epsilon,
            c.seed,
            c.paper_faithful
        )
    }

    /// Writes `dist_<quantity>_<cell>.csv` files into `dir`.
    pub fn write_files(&self, dir: &Path) -> Result<()> {
        let label = self.config.cell_label();
        let params = self.params();
        let create = |name: &str| -> Result<BufWriter<File>> {
            Ok(BufWriter::new(File::create(
                dir.join(format!("dist_{name}_{label}.csv")),
            )?))
        };
        for (name, dist) in [
            ("spread_horizon", &self.spread_horizon),
            ("spread_horizon_pinned", &self.spread_horizon_pinned),
            ("node_count", &self.node_count),
        ] {
            let mut w = create(name)?;
            dist.write_csv(&mut w, name, &params)?;
            w.flush()?;
        }

        let mut w = create("ratio_cdf")?;
        writeln!(w, "# quantity=ratio_cdf {params}")?;
        writeln!(w, "x,cdf")?;
        for (x, c) in &self.ratio_cdf {
            writeln!(w, "{x:.2},{c:e}")?;
        }
        writeln!(
            w,
            "# truncation_deficit={:e}",
            self.spread_horizon.deficit()
        )?;
        w.flush()?;

        let mut w = create("non_propagation")?;
        writeln!(w, "# quantity=non_propagation {params}")?;
        writeln!(w, "K,prob")?;
        for (k, p) in &self.non_propagation {
            writeln!(w, "{k},{p:e}")?;
        }
        w.flush()?;
        Ok(())
    }
}
