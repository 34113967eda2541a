//! Monte Carlo sweeps over `(τ, N_0, #S_0)` cells.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{SimulationConfig, SweepGrid};
use super::replica_seed;
use crate::error::{Error, Result};
use crate::spreading::{run_trajectory, TrajectoryRecord};
use crate::stats::mean_and_stderr;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePoint {
    pub node_count: usize,
    pub mean_ratio: f64,
    /// Number of runs that reached this graph size.
    pub count: usize,
    pub std_error: f64,
}

/// Mean `#S_k / N_k` across runs, aligned on `N_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateCurve {
    pub points: Vec<AggregatePoint>,
}

impl AggregateCurve {
    pub const CSV_HEADER: &'static str = "N_k,mean_ratio,count,std_error";

    pub fn from_trajectories(records: &[TrajectoryRecord]) -> Self {
        let Some(n0) = records
            .iter()
            .filter_map(|r| r.rows.first())
            .map(|r| r.node_count)
            .min()
        else {
            return Self { points: Vec::new() };
        };
        let longest = records
            .iter()
            .map(|r| r.last().node_count)
            .max()
            .unwrap_or(n0);
        let mut points = Vec::with_capacity(longest - n0 + 1);
        let mut ratios = Vec::with_capacity(records.len());
        for node_count in n0..=longest {
            ratios.clear();
            for r in records {
                // N_k = N_0 + k, so rows are indexed by k directly
                let first = r.rows[0].node_count;
                if let Some(row) = node_count.checked_sub(first).and_then(|k| r.rows.get(k)) {
                    ratios.push(row.ratio());
                }
            }
            if ratios.is_empty() {
                continue;
            }
            let (mean_ratio, std_error) = mean_and_stderr(&ratios);
            points.push(AggregatePoint {
                node_count,
                mean_ratio,
                count: ratios.len(),
                std_error,
            });
        }
        Self { points }
    }

    pub fn at(&self, node_count: usize) -> Option<&AggregatePoint> {
        self.points.iter().find(|p| p.node_count == node_count)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for p in &self.points {
            writeln!(
                w,
                "{},{:.8},{},{:.8}",
                p.node_count, p.mean_ratio, p.count, p.std_error
            )?;
        }
        Ok(())
    }
}

/// Output of one sweep cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub config: SimulationConfig,
    pub trajectories: Vec<TrajectoryRecord>,
    pub aggregate: AggregateCurve,
}

impl CellResult {
    pub fn write_trajectories<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", TrajectoryRecord::CSV_HEADER)?;
        for t in &self.trajectories {
            t.write_csv_rows(&mut w)?;
        }
        Ok(())
    }

    pub fn trajectories_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("trajectories_{}.csv", self.config.cell_label()))
    }

    pub fn aggregate_path(&self, dir: &Path) -> PathBuf {
        dir.join(format!("aggregate_{}.csv", self.config.cell_label()))
    }

    pub fn write_files(&self, dir: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(self.trajectories_path(dir))?);
        self.write_trajectories(&mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(self.aggregate_path(dir))?);
        self.aggregate.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Runs `pool`-parallel closures, or inline on the global pool when `workers`
/// is unset.
pub(crate) fn with_workers<T: Send>(
    workers: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Runs `config.runs` independent trajectories for one cell.
///
/// Replica `r` is driven by `ChaCha8Rng` seeded with
/// `replica_seed(config.seed, r)`, so results do not depend on scheduling.
pub fn run_cell(config: &SimulationConfig) -> Result<CellResult> {
    config.validate()?;
    let trajectory = config.trajectory_config()?;
    let trajectories = with_workers(config.workers, || {
        (0..config.runs as u64)
            .into_par_iter()
            .map(|run_id| {
                let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(config.seed, run_id));
                run_trajectory(&trajectory, run_id, &mut rng)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let aggregate = AggregateCurve::from_trajectories(&trajectories);
    Ok(CellResult {
        config: config.clone(),
        trajectories,
        aggregate,
    })
}

/// Result of a sweep: finished cells and the cells that failed.
#[derive(Debug, Default)]
pub struct SweepOutcome {
    pub cells: Vec<CellResult>,
    pub failures: Vec<(SimulationConfig, Error)>,
}

impl SweepOutcome {
    pub fn aggregate(&self, tau: f64, n0: usize, s0: usize) -> Option<&AggregateCurve> {
        self.cells
            .iter()
            .find(|c| c.config.tau == tau && c.config.n0 == n0 && c.config.s0 == s0)
            .map(|c| &c.aggregate)
    }
}

/// Runs every cell of `grid`. Invalid or failing cells are recorded in
/// [`SweepOutcome::failures`] and skipped. With `out_dir` set, each finished
/// cell writes its trajectory and aggregate CSVs there.
pub fn run_sweep(grid: &SweepGrid, out_dir: Option<&Path>) -> Result<SweepOutcome> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut outcome = SweepOutcome::default();
    for cell in grid.cells() {
        match run_cell(&cell) {
            Ok(result) => {
                if let Some(dir) = out_dir {
                    result.write_files(dir)?;
                }
                outcome.cells.push(result);
            }
            Err(Error::Io(e)) => return Err(Error::Io(e)),
            Err(e) => outcome.failures.push((cell, e)),
        }
    }
    Ok(outcome)
}
