//! Graph snapshots for rendering: `snapshot_edges_<cell>_<N>.csv` with
//! `i,j,count` rows and `snapshot_nodes_<cell>_<N>.csv` with
//! `i,capacity,has_message` rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::SimulationConfig;
use super::replica_seed;
use crate::capacity::CapacitySequence;
use crate::error::{invalid, Result};
use crate::spreading::{PropagationMode, Simulation};

/// Grows run 0 of `config` edge-exactly and writes a snapshot each time the
/// graph reaches one of `sizes` nodes. Returns the written file pairs.
pub fn write_snapshots(
    config: &SimulationConfig,
    sizes: &[usize],
    dir: &Path,
) -> Result<Vec<(PathBuf, PathBuf)>> {
    config.validate()?;
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    sizes.dedup();
    if let Some(&s) = sizes.iter().find(|&&s| s < config.n0) {
        return Err(invalid(format!(
            "snapshot size {s} is below n0 {}",
            config.n0
        )));
    }
    let mut setup = config.setup();
    setup.mode = PropagationMode::EdgeExact;
    let mut rng = ChaCha8Rng::seed_from_u64(replica_seed(config.seed, 0));
    let mut sim = Simulation::new(
        setup,
        CapacitySequence::new(),
        Some(config.law()?),
        &mut rng,
    )?;

    let mut written = Vec::with_capacity(sizes.len());
    for size in sizes {
        while sim.state().node_count() < size {
            sim.step(&mut rng)?;
        }
        let graph = sim.graph().expect("edge-exact simulation keeps its graph");
        let stem = format!("{}_{size}", config.cell_label());
        let edges = dir.join(format!("snapshot_edges_{stem}.csv"));
        let nodes = dir.join(format!("snapshot_nodes_{stem}.csv"));
        let mut w = BufWriter::new(File::create(&edges)?);
        graph.write_edge_csv(&mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(&nodes)?);
        graph.write_node_csv(&mut w, sim.capacities(), sim.state().members())?;
        w.flush()?;
        written.push((edges, nodes));
    }
    Ok(written)
}
