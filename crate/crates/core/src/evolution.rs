//! Norros-Reittu multigraph growth.
//!
//! The graph starts from node 0 carrying `Poisson(Λ_0)` self-loops. Step
//! `N+1` adds node `N+1` and, independently for every `i ∈ {0..N+1}`, draws
//! `E_{N+1}(i, N+1) ~ Poisson(Λ_i Λ_{N+1} / L_{N+1})` new edges. When
//! deletion is enabled every edge of `G_N` survives the step independently
//! with probability `L_N / L_{N+1}`.
//!
//! Edge multiplicities live in a `BTreeMap` keyed by the ordered pair
//! `(min, max)`, so iteration order (and thus random stream consumption
//! during deletion) is deterministic.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Binomial, Distribution, Poisson};

use crate::capacity::CapacitySequence;
use crate::error::{invalid, Result};

/// Means below this use sequential-search inversion.
const INVERSION_CUTOFF: f64 = 30.0;

/// Draws from `Poisson(mean)`. A zero mean returns zero without touching `rng`.
pub fn sample_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<u64> {
    if !(mean.is_finite() && mean >= 0.0) {
        return Err(invalid(format!(
            "Poisson mean must be finite and >= 0, got {mean}"
        )));
    }
    if mean == 0.0 {
        return Ok(0);
    }
    if mean < INVERSION_CUTOFF {
        let u: f64 = rng.random();
        let mut term = (-mean).exp();
        let mut cumulative = term;
        let mut k = 0u64;
        while u >= cumulative {
            k += 1;
            term *= mean / k as f64;
            if term == 0.0 {
                // u fell into the rounding gap above the representable cdf
                break;
            }
            cumulative += term;
        }
        return Ok(k);
    }
    let dist = Poisson::new(mean).map_err(|e| invalid(format!("Poisson({mean}): {e}")))?;
    Ok(dist.sample(rng) as u64)
}

/// Expected number of new edges between old node `i` and arriving node `new`:
/// `Λ_i Λ_new / L_new`.
pub fn new_edge_mean(seq: &CapacitySequence, i: usize, new: usize) -> f64 {
    seq.value(i) * seq.value(new) / seq.prefix_sum(new)
}

/// New edges drawn for the arriving node in one step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NewEdgeReport {
    pub new_node: usize,
    /// `to_old[i]` = number of new edges between old node `i` and `new_node`.
    pub to_old: Vec<u64>,
    pub self_loops: u64,
}

impl NewEdgeReport {
    pub fn total_to_old(&self) -> u64 {
        self.to_old.iter().sum()
    }
}

/// Undirected multigraph with self-loops.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MultiGraph {
    node_count: usize,
    edges: BTreeMap<(usize, usize), u64>,
}

impl MultiGraph {
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// Evolution index `N` of `G_N` (nodes are `0..=N`).
    pub fn step(&self) -> usize {
        self.node_count.saturating_sub(1)
    }

    pub fn edge_count(&self, i: usize, j: usize) -> u64 {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.edges.get(&key).copied().unwrap_or(0)
    }

    /// Total number of edges counted with multiplicity, self-loops included.
    pub fn total_edges(&self) -> u64 {
        self.edges.values().sum()
    }

    /// Distinct node pairs with at least one edge, as `((i, j), count)` with `i <= j`.
    pub fn edges(&self) -> impl Iterator<Item = ((usize, usize), u64)> + '_ {
        self.edges.iter().map(|(&k, &c)| (k, c))
    }

    fn add_edges(&mut self, i: usize, j: usize, count: u64) {
        if count > 0 {
            let key = if i <= j { (i, j) } else { (j, i) };
            *self.edges.entry(key).or_insert(0) += count;
        }
    }

    /// `G_0`: node 0 with `Poisson(Λ_0)` self-loops.
    pub fn single_node<R: Rng + ?Sized>(seq: &CapacitySequence, rng: &mut R) -> Result<Self> {
        if seq.is_empty() {
            return Err(invalid("capacity sequence is empty"));
        }
        let mut g = Self {
            node_count: 1,
            edges: BTreeMap::new(),
        };
        let loops = sample_poisson(seq.value(0), rng)?;
        g.add_edges(0, 0, loops);
        Ok(g)
    }

    /// Performs one evolution step, adding node `N+1`.
    ///
    /// Old edges are thinned first (when `delete_old_edges` is set), then the
    /// new node's edges are drawn.
    pub fn evolve_step<R: Rng + ?Sized>(
        &mut self,
        seq: &CapacitySequence,
        delete_old_edges: bool,
        rng: &mut R,
    ) -> Result<NewEdgeReport> {
        let new = self.node_count;
        if seq.len() <= new {
            return Err(invalid(format!(
                "capacity sequence has {} values, node {new} needs one",
                seq.len()
            )));
        }
        if delete_old_edges && new > 0 {
            let survival = seq.prefix_sum(new - 1) / seq.prefix_sum(new);
            self.thin_edges(survival, rng)?;
        }

        let mut to_old = Vec::with_capacity(new);
        for i in 0..new {
            let count = sample_poisson(new_edge_mean(seq, i, new), rng)?;
            self.add_edges(i, new, count);
            to_old.push(count);
        }
        let self_loops = sample_poisson(new_edge_mean(seq, new, new), rng)?;
        self.add_edges(new, new, self_loops);
        self.node_count += 1;

        Ok(NewEdgeReport {
            new_node: new,
            to_old,
            self_loops,
        })
    }

    fn thin_edges<R: Rng + ?Sized>(&mut self, survival: f64, rng: &mut R) -> Result<()> {
        if survival >= 1.0 {
            return Ok(());
        }
        for count in self.edges.values_mut() {
            *count = if *count == 1 {
                u64::from(rng.random::<f64>() < survival)
            } else {
                Binomial::new(*count, survival)
                    .map_err(|e| invalid(format!("deletion binomial: {e}")))?
                    .sample(rng)
            };
        }
        self.edges.retain(|_, c| *c > 0);
        Ok(())
    }

    /// Writes `i,j,count` rows (header included), one per connected pair.
    pub fn write_edge_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "i,j,count")?;
        for (&(i, j), &c) in &self.edges {
            writeln!(w, "{i},{j},{c}")?;
        }
        Ok(())
    }

    /// Writes `i,capacity,has_message` rows for every node.
    pub fn write_node_csv<W: Write>(
        &self,
        mut w: W,
        seq: &CapacitySequence,
        has_message: &[bool],
    ) -> std::io::Result<()> {
        writeln!(w, "i,capacity,has_message")?;
        for i in 0..self.node_count {
            let flag = has_message.get(i).copied().unwrap_or(false);
            writeln!(w, "{i},{},{}", seq.value(i), u8::from(flag))?;
        }
        Ok(())
    }
}

/// Builds the initial graph with `n0` nodes: the single-node graph followed by
/// `n0 - 1` ordinary evolution steps. `s0` is validated against `n0`; the
/// caller marks nodes `0..s0` as message holders.
pub fn init_graph<R: Rng + ?Sized>(
    seq: &CapacitySequence,
    n0: usize,
    s0: usize,
    delete_old_edges: bool,
    rng: &mut R,
) -> Result<MultiGraph> {
    if n0 == 0 {
        return Err(invalid("initial graph needs at least one node"));
    }
    if s0 == 0 || s0 > n0 {
        return Err(invalid(format!("need 1 <= s0 <= n0, got s0={s0}, n0={n0}")));
    }
    if seq.len() < n0 {
        return Err(invalid(format!(
            "initial graph of {n0} nodes needs {n0} capacities, got {}",
            seq.len()
        )));
    }
    let mut g = MultiGraph::single_node(seq, rng)?;
    for _ in 1..n0 {
        g.evolve_step(seq, delete_old_edges, rng)?;
    }
    Ok(g)
}
