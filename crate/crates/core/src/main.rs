use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use nr_spread::harness::{execute, ConfigBuilder, RunMode};
use nr_spread::Error;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    /// Monte Carlo trajectories and averaged ratio curves.
    Simulate,
    /// Exact horizon distributions at fixed capacities.
    Analytic,
    /// Exact distributions against end-to-end simulation.
    Compare,
}

/// Message spreading on Norros-Reittu preferential attachment graphs.
#[derive(Debug, Parser)]
#[command(name = "nr-spread", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// key=value settings file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Capacity tail parameter, comma list for a grid.
    #[arg(long)]
    tau: Option<String>,
    /// Initial graph size, comma list for a grid.
    #[arg(long)]
    n0: Option<String>,
    /// Initial message holders, comma list for a grid.
    #[arg(long)]
    s0: Option<String>,
    /// Poisson clock rate.
    #[arg(long)]
    rate: Option<String>,
    /// Time horizon T*.
    #[arg(long = "t-star")]
    t_star: Option<String>,
    /// Stop once the graph reaches this many nodes (`none` to disable).
    #[arg(long = "max-nodes")]
    max_nodes: Option<String>,
    #[arg(long)]
    runs: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// `edge` or `bernoulli`.
    #[arg(long = "prop-mode")]
    prop_mode: Option<String>,
    #[arg(long = "delete-old-edges")]
    delete_old_edges: bool,
    #[arg(long)]
    epsilon: Option<String>,
    /// Evaluate the ratio CDF with the K*=0 term added for every x.
    #[arg(long = "paper-faithful")]
    paper_faithful: bool,
    /// End-to-end replicas for `compare`.
    #[arg(long)]
    replicas: Option<String>,
    /// Graph sizes at which to write edge/node snapshots of run 0 (simulate).
    #[arg(long)]
    snapshots: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    workers: Option<String>,
}

impl Cli {
    fn builder(&self) -> Result<ConfigBuilder, Error> {
        let mut b = ConfigBuilder::new();
        if let Some(path) = &self.config {
            b.apply_file(path)?;
        }
        let mode = match self.command {
            Command::Simulate => RunMode::Simulate,
            Command::Analytic => RunMode::Analytic,
            Command::Compare => RunMode::Compare,
        };
        b.apply("mode", &mode.to_string())?;
        let pairs = [
            ("tau", &self.tau),
            ("n0", &self.n0),
            ("s0", &self.s0),
            ("rate", &self.rate),
            ("t-star", &self.t_star),
            ("max-nodes", &self.max_nodes),
            ("runs", &self.runs),
            ("seed", &self.seed),
            ("prop-mode", &self.prop_mode),
            ("epsilon", &self.epsilon),
            ("replicas", &self.replicas),
            ("snapshots", &self.snapshots),
            ("out", &self.out),
            ("workers", &self.workers),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                b.apply(key, v)?;
            }
        }
        if self.delete_old_edges {
            b.apply("delete-old-edges", "true")?;
        }
        if self.paper_faithful {
            b.apply("paper-faithful", "true")?;
        }
        Ok(b)
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::Numerical(_) => 3,
        Error::Io(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (grid, out) = match cli.builder() {
        Ok(b) => b.build(),
        Err(e) => {
            eprintln!("nr-spread: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    match execute(&grid, &out) {
        Ok(summary) => {
            eprintln!(
                "nr-spread: {} cell(s) written to {}",
                summary.completed,
                out.display()
            );
            let mut code = 0;
            for (cell, e) in &summary.failures {
                eprintln!("nr-spread: cell {} failed: {e}", cell.cell_label());
                code = code.max(exit_code(e));
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("nr-spread: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
