//! Message holders and their growth during evolution.
//!
//! Only the arriving node can receive the message, and it does so iff at
//! least one of its new edges lands on a current holder. Conditional on the
//! capacities and the holder set `S_k`, the chance of that is
//!
//! ```text
//! p_{k+1} = 1 - Π_{w∈S_k} exp(-Λ_w Λ_{k+1} / L_{k+1})
//!         = 1 - exp(-C_S Λ_{k+1} / L_{k+1}),   C_S = Σ_{w∈S_k} Λ_w
//! ```
//!
//! so a step can be simulated either from the realized edge draws
//! ([`PropagationMode::EdgeExact`]) or by a single Bernoulli trial
//! ([`PropagationMode::Bernoulli`]). Both give the same law.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::Rng;

use crate::capacity::{CapacityLaw, CapacitySequence};
use crate::clock::{sample_step_count, ClockParams};
use crate::error::{invalid, Error, Result};
use crate::evolution::{init_graph, MultiGraph, NewEdgeReport};

/// Largest `f64` strictly below one.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// `1 - exp(-spread_capacity · new_capacity / total_capacity)`.
///
/// `total_capacity` is `L_{k+1}` and includes the arriving node. The result
/// lies in `(0, 1)`; when the exponent is so large that `exp` underflows the
/// value is pinned to the largest double below one.
pub fn success_probability(
    spread_capacity: f64,
    new_capacity: f64,
    total_capacity: f64,
) -> Result<f64> {
    for (name, v) in [
        ("spread capacity", spread_capacity),
        ("new capacity", new_capacity),
        ("total capacity", total_capacity),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let rate = spread_capacity * new_capacity / total_capacity;
    Ok((-(-rate).exp_m1()).clamp(f64::MIN_POSITIVE, BELOW_ONE))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PropagationMode {
    /// Transmit iff a realized new edge touches a holder.
    EdgeExact,
    /// Transmit with probability `p_{k+1}`; no edges are materialized.
    #[default]
    Bernoulli,
}

impl fmt::Display for PropagationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::EdgeExact => "edge",
            Self::Bernoulli => "bernoulli",
        })
    }
}

impl FromStr for PropagationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "edge" | "edge-exact" => Ok(Self::EdgeExact),
            "bernoulli" => Ok(Self::Bernoulli),
            other => Err(Error::Config(format!("unknown propagation mode `{other}`"))),
        }
    }
}

/// What a single step is decided from.
#[derive(Debug, Clone, Copy)]
pub enum StepEvidence<'a> {
    Edges(&'a NewEdgeReport),
    Probability(f64),
}

/// The holder set `S_k` and its total capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    members: Vec<bool>,
    spread_count: usize,
    spread_capacity: f64,
}

impl MessageState {
    /// `n0` nodes of which `0..s0` hold the message.
    pub fn seeded(seq: &CapacitySequence, n0: usize, s0: usize) -> Result<Self> {
        if s0 == 0 || s0 > n0 {
            return Err(invalid(format!("need 1 <= s0 <= n0, got s0={s0}, n0={n0}")));
        }
        if seq.len() < n0 {
            return Err(invalid(format!(
                "{n0} initial nodes need {n0} capacities, got {}",
                seq.len()
            )));
        }
        let members = (0..n0).map(|i| i < s0).collect();
        Ok(Self {
            members,
            spread_count: s0,
            spread_capacity: seq.prefix_sum(s0 - 1),
        })
    }

    pub fn spread_count(&self) -> usize {
        self.spread_count
    }

    pub fn node_count(&self) -> usize {
        self.members.len()
    }

    pub fn spread_capacity(&self) -> f64 {
        self.spread_capacity
    }

    pub fn is_member(&self, i: usize) -> bool {
        self.members.get(i).copied().unwrap_or(false)
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn ratio(&self) -> f64 {
        self.spread_count as f64 / self.node_count() as f64
    }

    /// Success probability for the next arriving node, whose capacity must
    /// already be in `seq`.
    pub fn next_success_probability(&self, seq: &CapacitySequence) -> Result<f64> {
        let new = self.node_count();
        if seq.len() <= new {
            return Err(invalid(format!("no capacity for arriving node {new}")));
        }
        success_probability(self.spread_capacity, seq.value(new), seq.prefix_sum(new))
    }

    /// Adds the arriving node and decides whether it receives the message.
    /// Returns `true` on transmission.
    pub fn propagate_step<R: Rng + ?Sized>(
        &mut self,
        evidence: StepEvidence<'_>,
        new_capacity: f64,
        rng: &mut R,
    ) -> Result<bool> {
        let new = self.node_count();
        let joined = match evidence {
            StepEvidence::Edges(report) => {
                if report.new_node != new || report.to_old.len() != new {
                    return Err(invalid(format!(
                        "edge report for node {} with {} old nodes does not match state with {new} nodes",
                        report.new_node,
                        report.to_old.len()
                    )));
                }
                report
                    .to_old
                    .iter()
                    .zip(&self.members)
                    .any(|(&count, &member)| member && count > 0)
            }
            StepEvidence::Probability(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid(format!("success probability {p} outside [0,1]")));
                }
                rng.random::<f64>() < p
            }
        };
        self.members.push(joined);
        if joined {
            self.spread_count += 1;
            self.spread_capacity += new_capacity;
        }
        Ok(joined)
    }

    #[cfg(debug_assertions)]
    fn check_capacity(&self, seq: &CapacitySequence) {
        let direct: f64 = (0..self.node_count())
            .filter(|&i| self.members[i])
            .map(|i| seq.value(i))
            .sum();
        debug_assert!(
            (direct - self.spread_capacity).abs() <= 1e-9 * direct,
            "spread capacity drifted: {} vs {direct}",
            self.spread_capacity
        );
    }
}

/// Initial condition and step rule shared by every replica.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadSetup {
    pub n0: usize,
    pub s0: usize,
    pub mode: PropagationMode,
    pub delete_old_edges: bool,
}

impl SpreadSetup {
    pub fn new(n0: usize, s0: usize, mode: PropagationMode) -> Self {
        Self {
            n0,
            s0,
            mode,
            delete_old_edges: false,
        }
    }
}

/// Outcome of one evolution step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub success_probability: f64,
    pub transmitted: bool,
}

/// A single replica: capacities, the holder set and, in edge-exact mode,
/// the multigraph itself.
#[derive(Debug, Clone)]
pub struct Simulation {
    seq: CapacitySequence,
    law: Option<CapacityLaw>,
    graph: Option<MultiGraph>,
    state: MessageState,
    setup: SpreadSetup,
}

impl Simulation {
    /// Starts a replica from `seq`. Missing capacities are drawn from `law`;
    /// with `law = None` the run is confined to the supplied sequence.
    pub fn new<R: Rng + ?Sized>(
        setup: SpreadSetup,
        mut seq: CapacitySequence,
        law: Option<CapacityLaw>,
        rng: &mut R,
    ) -> Result<Self> {
        if setup.s0 == 0 || setup.s0 > setup.n0 {
            return Err(invalid(format!(
                "need 1 <= s0 <= n0, got s0={}, n0={}",
                setup.s0, setup.n0
            )));
        }
        while seq.len() < setup.n0 {
            match &law {
                Some(law) => {
                    seq.extend(law, rng)?;
                }
                None => {
                    return Err(invalid(format!(
                        "{} initial nodes need {} capacities, got {}",
                        setup.n0,
                        setup.n0,
                        seq.len()
                    )))
                }
            }
        }
        let graph = match setup.mode {
            PropagationMode::EdgeExact => Some(init_graph(
                &seq,
                setup.n0,
                setup.s0,
                setup.delete_old_edges,
                rng,
            )?),
            PropagationMode::Bernoulli => None,
        };
        let state = MessageState::seeded(&seq, setup.n0, setup.s0)?;
        Ok(Self {
            seq,
            law,
            graph,
            state,
            setup,
        })
    }

    pub fn state(&self) -> &MessageState {
        &self.state
    }

    pub fn graph(&self) -> Option<&MultiGraph> {
        self.graph.as_ref()
    }

    pub fn capacities(&self) -> &CapacitySequence {
        &self.seq
    }

    /// Adds one node and applies the propagation rule.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepOutcome> {
        let new = self.state.node_count();
        if self.seq.len() <= new {
            match &self.law {
                Some(law) => {
                    self.seq.extend(law, rng)?;
                }
                None => {
                    return Err(invalid(format!(
                        "capacity sequence exhausted at node {new}"
                    )))
                }
            }
        }
        let p = self.state.next_success_probability(&self.seq)?;
        let new_capacity = self.seq.value(new);
        let transmitted = match self.graph.as_mut() {
            Some(graph) => {
                let report = graph.evolve_step(&self.seq, self.setup.delete_old_edges, rng)?;
                self.state
                    .propagate_step(StepEvidence::Edges(&report), new_capacity, rng)?
            }
            None => self
                .state
                .propagate_step(StepEvidence::Probability(p), new_capacity, rng)?,
        };
        #[cfg(debug_assertions)]
        self.state.check_capacity(&self.seq);
        Ok(StepOutcome {
            success_probability: p,
            transmitted,
        })
    }
}

/// Parameters of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryConfig {
    pub law: CapacityLaw,
    pub setup: SpreadSetup,
    /// Stop once the graph has this many nodes.
    pub max_nodes: Option<usize>,
    /// Stop after `K* ~ Poisson(λT*)` steps.
    pub clock: Option<ClockParams>,
}

impl TrajectoryConfig {
    pub fn validate(&self) -> Result<()> {
        let SpreadSetup { n0, s0, .. } = self.setup;
        if s0 == 0 || s0 > n0 {
            return Err(invalid(format!("need 1 <= s0 <= n0, got s0={s0}, n0={n0}")));
        }
        match (self.max_nodes, self.clock) {
            (None, None) => Err(invalid("trajectory needs max_nodes, a clock, or both")),
            (Some(m), _) if m < n0 => Err(invalid(format!("max_nodes {m} is below n0 {n0}"))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub k: usize,
    pub node_count: usize,
    pub spread_count: usize,
    /// `p_k` of the step that produced this row; `None` for the initial row.
    pub success_probability: Option<f64>,
}

impl TrajectoryRow {
    pub fn ratio(&self) -> f64 {
        self.spread_count as f64 / self.node_count as f64
    }
}

/// Per-step observations `(k, N_k, #S_k, p_k)` of one replica, starting with
/// the initial graph at `k = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub run_id: u64,
    pub rows: Vec<TrajectoryRow>,
}

impl TrajectoryRecord {
    pub const CSV_HEADER: &'static str = "run_id,k,N_k,S_k,ratio";

    pub fn last(&self) -> &TrajectoryRow {
        self.rows
            .last()
            .expect("trajectory always has its initial row")
    }

    pub fn steps(&self) -> usize {
        self.last().k
    }

    /// `p_1..p_k` as realized along this path.
    pub fn success_trace(&self) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.success_probability)
            .collect()
    }

    /// Rows without header, ratio printed with six decimals.
    pub fn write_csv_rows<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{:.6}",
                self.run_id,
                r.k,
                r.node_count,
                r.spread_count,
                r.ratio()
            )?;
        }
        Ok(())
    }
}

/// Runs one trajectory with capacities drawn lazily from `config.law`.
pub fn run_trajectory<R: Rng + ?Sized>(
    config: &TrajectoryConfig,
    run_id: u64,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    run_trajectory_from(config, CapacitySequence::new(), true, run_id, rng)
}

/// Runs one trajectory conditional on the given capacities. The clock or
/// `max_nodes` bound must fit inside `seq`.
pub fn run_trajectory_fixed<R: Rng + ?Sized>(
    config: &TrajectoryConfig,
    seq: &CapacitySequence,
    run_id: u64,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    run_trajectory_from(config, seq.clone(), false, run_id, rng)
}

fn run_trajectory_from<R: Rng + ?Sized>(
    config: &TrajectoryConfig,
    seq: CapacitySequence,
    lazy: bool,
    run_id: u64,
    rng: &mut R,
) -> Result<TrajectoryRecord> {
    config.validate()?;
    let n0 = config.setup.n0;
    let clock_steps = config.clock.map(|c| sample_step_count(&c, rng) as usize);
    let size_steps = config.max_nodes.map(|m| m - n0);
    let steps = match (clock_steps, size_steps) {
        (Some(a), Some(b)) => a.min(b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => unreachable!("validated"),
    };

    let law = lazy.then_some(config.law);
    let mut sim = Simulation::new(config.setup, seq, law, rng)?;
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(TrajectoryRow {
        k: 0,
        node_count: n0,
        spread_count: config.setup.s0,
        success_probability: None,
    });
    for k in 1..=steps {
        let outcome = sim.step(rng)?;
        rows.push(TrajectoryRow {
            k,
            node_count: sim.state().node_count(),
            spread_count: sim.state().spread_count(),
            success_probability: Some(outcome.success_probability),
        });
    }
    Ok(TrajectoryRecord { run_id, rows })
}
