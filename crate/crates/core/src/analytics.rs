//! Exact distributions conditional on the capacities.
//!
//! Given success probabilities `p_1..p_k`, the holder count after `k` steps is
//! `#S_0 + PB(p_1..p_k)` where `PB` is the Poisson binomial law. Mixing over
//! the clock, `K* ~ Poisson(λT*)`, gives the law of `#S_{K*}`, the node count
//! `N_{K*} = N_0 + K*` and the CDF of the ratio `#S_{K*} / N_{K*}`.
//!
//! The `p_k` of a real run depend on which nodes joined the holder set, so
//! every pmf here is computed for an explicit [`TraceGenerator`]. Infinite
//! Poisson mixtures are truncated at [`crate::clock::truncation_index`] and the omitted mass
//! is kept as [`DiscreteDistribution::deficit`], never renormalized away.

use std::io::Write;

use crate::capacity::CapacitySequence;
use crate::clock::{poisson_pmf, truncated_weights, ClockParams};
use crate::error::{invalid, Result};
use crate::spreading::success_probability;
use crate::stats::KahanSum;

/// Slack added before flooring `x · N` so that products like `0.29 · 100`
/// are not pushed below an integer by rounding.
const FLOOR_SLACK: f64 = 1e-9;

/// A finite pmf on `support_start, support_start + 1, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    support_start: usize,
    probs: Vec<f64>,
    deficit: f64,
}

impl DiscreteDistribution {
    pub fn new(support_start: usize, probs: Vec<f64>, deficit: f64) -> Result<Self> {
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0 + 1e-12).contains(*p)) {
            return Err(invalid(format!("probability {p} outside [0,1]")));
        }
        if !(0.0..=1.0).contains(&deficit) {
            return Err(invalid(format!(
                "truncation deficit {deficit} outside [0,1]"
            )));
        }
        Ok(Self {
            support_start,
            probs,
            deficit,
        })
    }

    pub fn point_mass(at: usize) -> Self {
        Self {
            support_start: at,
            probs: vec![1.0],
            deficit: 0.0,
        }
    }

    pub fn support_start(&self) -> usize {
        self.support_start
    }

    /// One past the last support point.
    pub fn support_end(&self) -> usize {
        self.support_start + self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Mass omitted by truncation.
    pub fn deficit(&self) -> f64 {
        self.deficit
    }

    pub fn pmf(&self, i: usize) -> f64 {
        i.checked_sub(self.support_start)
            .and_then(|j| self.probs.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().copied().collect::<KahanSum>().value()
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(i, p)| i as f64 * p).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(|(j, &p)| (self.support_start + j, p))
    }

    /// Probabilities laid out from zero, as [`crate::stats::histogram`] does.
    pub fn dense_from_zero(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.support_start];
        v.extend_from_slice(&self.probs);
        v
    }

    /// CSV with a leading `# quantity=... <params>` line, an `i,prob` header and
    /// a trailing `# truncation_deficit=<value>` line.
    pub fn write_csv<W: Write>(
        &self,
        mut w: W,
        quantity: &str,
        params: &str,
    ) -> std::io::Result<()> {
        writeln!(w, "# quantity={quantity} {params}")?;
        writeln!(w, "i,prob")?;
        for (i, p) in self.iter() {
            writeln!(w, "{i},{p:e}")?;
        }
        writeln!(w, "# truncation_deficit={:e}", self.deficit)
    }
}

/// Initial graph size `N_0` and holder count `#S_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InitialState {
    pub nodes: usize,
    pub spread: usize,
}

impl InitialState {
    /// A single node holding the message.
    pub const SINGLE: Self = Self {
        nodes: 1,
        spread: 1,
    };

    pub fn new(nodes: usize, spread: usize) -> Result<Self> {
        if spread == 0 || spread > nodes {
            return Err(invalid(format!(
                "need 1 <= s0 <= n0, got s0={spread}, n0={nodes}"
            )));
        }
        Ok(Self { nodes, spread })
    }
}

impl Default for InitialState {
    fn default() -> Self {
        Self::SINGLE
    }
}

/// Source of the success probabilities `p_1, p_2, ...` (1-indexed steps).
pub trait TraceGenerator {
    fn probability(&self, step: usize) -> Result<f64>;

    fn trace(&self, steps: usize) -> Result<Vec<f64>> {
        (1..=steps).map(|k| self.probability(k)).collect()
    }
}

/// The same `p` at every step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantTrace(pub f64);

impl TraceGenerator for ConstantTrace {
    fn probability(&self, _step: usize) -> Result<f64> {
        Ok(self.0)
    }
}

/// An explicit finite trace, e.g. the `p_k` frozen from a realized run.
#[derive(Debug, Clone, PartialEq)]
pub struct PinnedTrace(pub Vec<f64>);

impl TraceGenerator for PinnedTrace {
    fn probability(&self, step: usize) -> Result<f64> {
        step.checked_sub(1)
            .and_then(|i| self.0.get(i))
            .copied()
            .ok_or_else(|| {
                invalid(format!(
                    "pinned trace of length {} has no step {step}",
                    self.0.len()
                ))
            })
    }
}

impl From<Vec<f64>> for PinnedTrace {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Success probabilities along the path on which no new node ever receives
/// the message: the holder set stays at the initial `#S_0` nodes.
#[derive(Debug, Clone)]
pub struct NonPropagationTrace<'a> {
    seq: &'a CapacitySequence,
    initial: InitialState,
    spread_capacity: f64,
}

impl<'a> NonPropagationTrace<'a> {
    pub fn new(seq: &'a CapacitySequence, initial: InitialState) -> Result<Self> {
        if seq.len() < initial.nodes {
            return Err(invalid(format!(
                "{} initial nodes need {} capacities, got {}",
                initial.nodes,
                initial.nodes,
                seq.len()
            )));
        }
        Ok(Self {
            seq,
            initial,
            spread_capacity: seq.prefix_sum(initial.spread - 1),
        })
    }
}

impl TraceGenerator for NonPropagationTrace<'_> {
    fn probability(&self, step: usize) -> Result<f64> {
        let node = self.initial.nodes - 1 + step;
        if step == 0 || node >= self.seq.len() {
            return Err(invalid(format!(
                "no capacity for step {step} (node {node})"
            )));
        }
        success_probability(
            self.spread_capacity,
            self.seq.value(node),
            self.seq.prefix_sum(node),
        )
    }
}

/// Adapts a closure `step -> p_step`.
pub struct FnTrace<F>(pub F);

impl<F: Fn(usize) -> f64> TraceGenerator for FnTrace<F> {
    fn probability(&self, step: usize) -> Result<f64> {
        Ok((self.0)(step))
    }
}

fn check_probability(p: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(invalid(format!("success probability {p} outside [0,1]")))
    }
}

/// Folds one Bernoulli(`p`) trial into a Poisson binomial pmf in place.
fn fold_bernoulli(pmf: &mut Vec<f64>, p: f64) {
    let q = 1.0 - p;
    pmf.push(0.0);
    for j in (1..pmf.len()).rev() {
        pmf[j] = pmf[j] * q + pmf[j - 1] * p;
    }
    pmf[0] *= q;
}

/// Exact pmf of `ξ_1 + ... + ξ_k` for independent `ξ_i ~ Bernoulli(p_i)`,
/// on `{0..k}`, by the `O(k²)` convolution recurrence.
pub fn poisson_binomial_pmf(p: &[f64]) -> Result<DiscreteDistribution> {
    let mut pmf = Vec::with_capacity(p.len() + 1);
    pmf.push(1.0);
    for &pi in p {
        fold_bernoulli(&mut pmf, check_probability(pi)?);
    }
    Ok(DiscreteDistribution {
        support_start: 0,
        probs: pmf,
        deficit: 0.0,
    })
}

/// Law of `#S_k` after `k = trace.len()` steps started from `initial_spread`
/// holders: support `{s0..s0+k}`.
///
/// With `s0 = 1` the end points are `P{#S_k = 1} = Π(1-p_m)` and
/// `P{#S_k = k+1} = Π p_n`.
pub fn spread_pmf_fixed_k(trace: &[f64], initial_spread: usize) -> Result<DiscreteDistribution> {
    if trace.is_empty() {
        return Err(invalid("success probability trace is empty"));
    }
    if initial_spread == 0 {
        return Err(invalid("at least one node must hold the message"));
    }
    let mut d = poisson_binomial_pmf(trace)?;
    d.support_start = initial_spread;
    Ok(d)
}

/// Law of `#S_{K*}` given the trace: `Σ_k P{K* = k} P{#S_k = i}` for
/// `k ≤ truncation_index(λT*, ε)`.
pub fn spread_pmf_horizon<G: TraceGenerator + ?Sized>(
    generator: &G,
    clock: &ClockParams,
    epsilon: f64,
    initial: InitialState,
) -> Result<DiscreteDistribution> {
    let (weights, deficit) = truncated_weights(clock.mean_steps(), epsilon)?;
    let k_max = weights.len() - 1;
    let mut acc = vec![KahanSum::new(); k_max + 1];
    let mut pb = Vec::with_capacity(k_max + 1);
    pb.push(1.0);
    for (k, &w) in weights.iter().enumerate() {
        if k > 0 {
            fold_bernoulli(&mut pb, check_probability(generator.probability(k)?)?);
        }
        for (a, &p) in acc.iter_mut().zip(&pb) {
            a.add(w * p);
        }
    }
    Ok(DiscreteDistribution {
        support_start: initial.spread,
        probs: acc.iter().map(KahanSum::value).collect(),
        deficit,
    })
}

/// Probability that the initial node never passes the message on in `K`
/// steps: `exp(-Λ_0 Σ_{k=1}^{K} Λ_k / L_k)`.
pub fn non_propagation_probability(capacities: &CapacitySequence, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(invalid("non-propagation needs at least one step"));
    }
    if capacities.len() <= steps {
        return Err(invalid(format!(
            "{steps} steps need {} capacities, got {}",
            steps + 1,
            capacities.len()
        )));
    }
    let alpha: f64 = (1..=steps)
        .map(|k| capacities.value(k) / capacities.prefix_sum(k))
        .collect::<KahanSum>()
        .value()
        * capacities.value(0);
    Ok((-alpha).exp())
}

/// `P{N_{K*} = i} = P{K* = i - N_0}`.
pub fn node_count_pmf(clock: &ClockParams, i: usize, initial_nodes: usize) -> Result<f64> {
    if i < 1 {
        return Err(invalid("node count must be at least 1"));
    }
    match i.checked_sub(initial_nodes) {
        Some(k) => poisson_pmf(clock.mean_steps(), k as u64),
        None => Ok(0.0),
    }
}

/// Truncated law of `N_{K*}` on `{N_0..}`.
pub fn node_count_distribution(
    clock: &ClockParams,
    initial_nodes: usize,
    epsilon: f64,
) -> Result<DiscreteDistribution> {
    if initial_nodes == 0 {
        return Err(invalid("initial graph needs at least one node"));
    }
    let (weights, deficit) = truncated_weights(clock.mean_steps(), epsilon)?;
    DiscreteDistribution::new(initial_nodes, weights, deficit)
}

/// `P{#S_{K*} / N_{K*} ≤ x}` for `x ∈ [0,1]`.
///
/// With `paper_faithful` the `K* = 0` weight is added for every `x`; otherwise
/// it counts only when `#S_0 ≤ x N_0`.
pub fn ratio_cdf<G: TraceGenerator + ?Sized>(
    generator: &G,
    clock: &ClockParams,
    x: f64,
    epsilon: f64,
    paper_faithful: bool,
    initial: InitialState,
) -> Result<f64> {
    Ok(ratio_cdf_grid(generator, clock, &[x], epsilon, paper_faithful, initial)?[0])
}

/// [`ratio_cdf`] at several points, sharing one pass over the mixture.
pub fn ratio_cdf_grid<G: TraceGenerator + ?Sized>(
    generator: &G,
    clock: &ClockParams,
    xs: &[f64],
    epsilon: f64,
    paper_faithful: bool,
    initial: InitialState,
) -> Result<Vec<f64>> {
    if let Some(x) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(invalid(format!("ratio threshold {x} outside [0,1]")));
    }
    let (weights, _) = truncated_weights(clock.mean_steps(), epsilon)?;
    let mut acc = vec![KahanSum::new(); xs.len()];
    let mut pb = vec![1.0];
    let mut cumulative = Vec::new();
    for (k, &w) in weights.iter().enumerate() {
        if k > 0 {
            fold_bernoulli(&mut pb, check_probability(generator.probability(k)?)?);
        }
        cumulative.clear();
        let mut run = 0.0;
        for &p in &pb {
            run += p;
            cumulative.push(run);
        }
        let nodes = (initial.nodes + k) as f64;
        for (a, &x) in acc.iter_mut().zip(xs) {
            if k == 0 && paper_faithful {
                a.add(w);
                continue;
            }
            let max_spread = (x * nodes + FLOOR_SLACK).floor() as usize;
            if let Some(j) = max_spread.checked_sub(initial.spread) {
                a.add(w * cumulative[j.min(k)]);
            }
        }
    }
    Ok(acc.iter().map(|a| a.value().min(1.0)).collect())
}
