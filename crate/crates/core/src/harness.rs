//! Monte Carlo experiment runner: seeded initial states, runs to absorption,
//! aggregation, and the preset-shaped sweeps the command line exposes.
//!
//! Reproducibility contract: a trial is a pure function of the experiment
//! configuration and its stream index. Trial `i` draws everything (initial
//! state included) from `SimRng::substream(seed, i)`, so serial and parallel
//! execution produce byte-identical records, in trial order.

use std::collections::BTreeMap;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counter::CounterFrame;
use crate::error::{Error, Result};
use crate::markov::{
    absorption_upper_bound, closed_form_absorption_time, realize_outlier_state, OutlierState,
};
use crate::quantizer::SlotGrid;
use crate::ring::{GapVector, OutcomeKind, RingState};
use crate::rng::SimRng;

/// How a trial picks its starting state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialStateMode {
    /// Distinct counters drawn uniformly without replacement, read off as a
    /// gap vector.
    RandomDistinctCounters,
    /// Two-outlier worst case; an experiment sweeps all `n * (n - 1)`
    /// outlier/edge placements, `trials` runs each.
    WorstCaseOutliers,
    /// A fixed starting gap vector and active edge.
    Explicit { gaps: Vec<u32>, edge: usize },
}

/// Everything a run needs; two equal configs produce identical output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub nodes: usize,
    pub slots: u32,
    pub alpha: f64,
    pub trials: u64,
    pub seed: u64,
    /// Per-trial interaction cap; trials that hit it are flagged, never
    /// dropped.
    pub max_interactions: u64,
    pub initial_state_mode: InitialStateMode,
    pub record_trajectory: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < 2 {
            return Err(Error::InvalidConfig(format!(
                "need at least 2 nodes, got {}",
                self.nodes
            )));
        }
        if (self.slots as u64) < self.nodes as u64 {
            return Err(Error::InvalidConfig(format!(
                "{} nodes need at least {} slots, got {}",
                self.nodes, self.nodes, self.slots
            )));
        }
        if !(self.alpha.is_finite() && 0.0 < self.alpha && self.alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("need at least one trial".into()));
        }
        if self.max_interactions == 0 {
            return Err(Error::InvalidConfig(
                "interaction cap must be positive".into(),
            ));
        }
        match &self.initial_state_mode {
            InitialStateMode::RandomDistinctCounters => Ok(()),
            InitialStateMode::WorstCaseOutliers => {
                if self.nodes < 3 {
                    return Err(Error::InvalidConfig(
                        "worst-case mode needs at least 3 nodes".into(),
                    ));
                }
                if !(self.slots as u64).is_multiple_of(self.nodes as u64) {
                    return Err(Error::InvalidConfig(format!(
                        "worst-case mode needs slots divisible by nodes (got {} / {})",
                        self.slots, self.nodes
                    )));
                }
                if self.slots / (self.nodes as u32) < 2 {
                    return Err(Error::InvalidConfig(
                        "worst-case mode needs a common gap of at least 2 slots".into(),
                    ));
                }
                Ok(())
            }
            InitialStateMode::Explicit { gaps, edge } => {
                let v = GapVector::new(gaps.clone())?;
                if v.len() != self.nodes || v.total() != self.slots {
                    return Err(Error::InvalidConfig(format!(
                        "explicit state has {} gaps totalling {}, config says {} nodes on {} slots",
                        v.len(),
                        v.total(),
                        self.nodes,
                        self.slots
                    )));
                }
                if *edge >= self.nodes {
                    return Err(Error::InvalidConfig(format!("edge {edge} out of range")));
                }
                Ok(())
            }
        }
    }

    /// Total random streams the experiment consumes: worst-case mode visits
    /// every outlier/edge placement `trials` times.
    pub fn total_trials(&self) -> u64 {
        match self.initial_state_mode {
            InitialStateMode::WorstCaseOutliers => {
                (self.nodes * (self.nodes - 1)) as u64 * self.trials
            }
            _ => self.trials,
        }
    }
}

/// Default cap: ten times the global expected-time bound, rounded up. The
/// dynamics absorb with probability one, so the cap only turns a would-be
/// hang into a flagged record. For two nodes, where the chain bound is not
/// defined, a generous quadratic cap does the same job.
pub fn default_interaction_cap(nodes: usize, slots: u32, alpha: f64) -> Result<u64> {
    let cap = if nodes >= 3 {
        10.0 * absorption_upper_bound(nodes, slots, alpha)?
    } else {
        10.0 * (f64::from(slots) * f64::from(slots) + 100.0)
    };
    Ok((cap.ceil() as u64).max(1))
}

/// Snapshot of one event for trajectory export.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub step: u64,
    /// Edge that interacted at this step.
    pub edge: usize,
    pub outcome: OutcomeKind,
    pub gaps: Vec<u32>,
    pub lyapunov: f64,
    pub range: u32,
}

/// Everything one trial produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    /// Stream index under the documented (seed, index) splitting rule.
    pub stream_index: u64,
    pub initial_gaps: Vec<u32>,
    pub initial_edge: usize,
    /// Interactions performed strictly before the first settled state; equal
    /// to the cap when `absorbed` is false.
    pub interactions_to_absorption: u64,
    /// Full edge rotations, `ceil(interactions / nodes)`.
    pub rounds_to_absorption: u64,
    pub absorbed: bool,
    pub nulls: u64,
    pub swaps: u64,
    pub compressions: u64,
    pub final_gaps: Vec<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<TrajectoryPoint>>,
}

/// Aggregate statistics over the absorbed trials of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub total_trials: u64,
    pub absorbed_trials: u64,
    pub capped_trials: u64,
    /// Mean interactions to absorption over absorbed trials.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    /// Sample standard deviation divided by sqrt(trials); absent for fewer
    /// than two absorbed trials.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max: Option<u64>,
    /// Absorption-time histogram as sorted (interactions, count) pairs.
    pub histogram: Vec<(u64, u64)>,
    /// Closed-form expected absorption time of the worst-case chain, when
    /// defined (3 or more nodes).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory_mean_worst_case: Option<f64>,
    /// Global upper bound on expected interactions from any start.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theory_upper_bound: Option<f64>,
}

/// Summary plus the per-trial records that produced it, in stream order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub records: Vec<TrialRecord>,
}

fn initial_state(
    config: &ExperimentConfig,
    stream_index: u64,
    rng: &mut SimRng,
) -> Result<RingState> {
    match &config.initial_state_mode {
        InitialStateMode::RandomDistinctCounters => {
            let grid = SlotGrid::unit(config.slots)?;
            let frame = CounterFrame::random(config.nodes, grid, rng)?;
            // the first firing of the frame corresponds to the edge after it
            let (firer, _) = frame.next_firer()?;
            RingState::new(frame.gap_vector(), (firer + 1) % config.nodes)
        }
        InitialStateMode::WorstCaseOutliers => {
            let placements = (config.nodes * (config.nodes - 1)) as u64;
            let placement = (stream_index / config.trials).min(placements - 1) as usize;
            let state = OutlierState {
                offset: placement / config.nodes + 1,
                edge_label: placement % config.nodes,
            };
            let ell = config.slots / config.nodes as u32;
            let (gaps, edge) = realize_outlier_state(config.nodes, ell, state)?;
            RingState::new(gaps, edge)
        }
        InitialStateMode::Explicit { gaps, edge } => {
            RingState::new(GapVector::new(gaps.clone())?, *edge)
        }
    }
}

/// Run one trial: interactions until the gap vector settles or the cap is
/// hit. Depends only on `(config, stream_index)`.
pub fn run_trial(config: &ExperimentConfig, stream_index: u64) -> Result<TrialRecord> {
    config.validate()?;
    let mut rng = SimRng::substream(config.seed, stream_index);
    let mut state = initial_state(config, stream_index, &mut rng)?;
    let initial_gaps = state.gaps().gaps().to_vec();
    let initial_edge = state.active_edge();

    let mut trajectory = config.record_trajectory.then(Vec::new);
    let mut nulls = 0u64;
    let mut swaps = 0u64;
    let mut compressions = 0u64;
    let mut interactions = 0u64;
    let mut absorbed = state.gaps().is_tdm();

    while !absorbed && interactions < config.max_interactions {
        let outcome = state.interact(config.alpha, &mut rng)?;
        interactions += 1;
        match outcome.kind {
            OutcomeKind::Null => nulls += 1,
            OutcomeKind::Swap => swaps += 1,
            OutcomeKind::Compression => compressions += 1,
        }
        if let Some(points) = trajectory.as_mut() {
            points.push(TrajectoryPoint {
                step: interactions,
                edge: outcome.edge,
                outcome: outcome.kind,
                gaps: state.gaps().gaps().to_vec(),
                lyapunov: state.gaps().lyapunov(),
                range: state.gaps().range(),
            });
        }
        absorbed = state.gaps().is_tdm();
    }

    let nodes = config.nodes as u64;
    Ok(TrialRecord {
        stream_index,
        initial_gaps,
        initial_edge,
        interactions_to_absorption: interactions,
        rounds_to_absorption: interactions.div_ceil(nodes),
        absorbed,
        nulls,
        swaps,
        compressions,
        final_gaps: state.gaps().gaps().to_vec(),
        trajectory,
    })
}

/// Run the full experiment. Trials execute in parallel on independent
/// streams; aggregation is a deterministic reduction in stream order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let total = config.total_trials();
    let records: Vec<TrialRecord> = (0..total)
        .into_par_iter()
        .map(|i| run_trial(config, i))
        .collect::<Result<_>>()?;
    Ok(ExperimentOutput {
        summary: summarize(config.clone(), &records)?,
        records,
    })
}

fn summarize(config: ExperimentConfig, records: &[TrialRecord]) -> Result<ExperimentSummary> {
    let absorbed: Vec<u64> = records
        .iter()
        .filter(|r| r.absorbed)
        .map(|r| r.interactions_to_absorption)
        .collect();
    let capped = records.len() as u64 - absorbed.len() as u64;

    let mut histogram = BTreeMap::new();
    for &t in &absorbed {
        *histogram.entry(t).or_insert(0u64) += 1;
    }

    let mean = (!absorbed.is_empty())
        .then(|| absorbed.iter().map(|&t| t as f64).sum::<f64>() / absorbed.len() as f64);
    let std_error = (absorbed.len() >= 2).then(|| {
        let m = mean.expect("mean exists");
        let var = absorbed
            .iter()
            .map(|&t| (t as f64 - m).powi(2))
            .sum::<f64>()
            / (absorbed.len() - 1) as f64;
        (var / absorbed.len() as f64).sqrt()
    });

    let theory_mean_worst_case = (config.nodes >= 3)
        .then(|| closed_form_absorption_time(config.nodes, config.alpha))
        .transpose()?;
    let theory_upper_bound = (config.nodes >= 3)
        .then(|| absorption_upper_bound(config.nodes, config.slots, config.alpha))
        .transpose()?;

    Ok(ExperimentSummary {
        total_trials: records.len() as u64,
        absorbed_trials: absorbed.len() as u64,
        capped_trials: capped,
        mean,
        std_error,
        min: absorbed.iter().min().copied(),
        max: absorbed.iter().max().copied(),
        histogram: histogram.into_iter().collect(),
        theory_mean_worst_case,
        theory_upper_bound,
        config,
    })
}

/// After absorption, keep running for `extra_rounds` full edge rotations and
/// count the distinct settled states visited. The schedule keeps moving
/// through swap interactions whenever the slot count is not divisible by the
/// node count; with a divisible count there is a single settled state.
pub fn post_absorption_probe(config: &ExperimentConfig, extra_rounds: u64) -> Result<usize> {
    config.validate()?;
    let mut rng = SimRng::substream(config.seed, 0);
    let mut state = initial_state(config, 0, &mut rng)?;

    let mut interactions = 0u64;
    while !state.gaps().is_tdm() {
        if interactions >= config.max_interactions {
            return Err(Error::CapExceeded {
                cap: config.max_interactions,
            });
        }
        state.interact(config.alpha, &mut rng)?;
        interactions += 1;
    }

    let mut visited: HashSet<Vec<u32>> = HashSet::new();
    visited.insert(state.gaps().gaps().to_vec());
    for _ in 0..extra_rounds * config.nodes as u64 {
        state.interact(config.alpha, &mut rng)?;
        if !state.gaps().is_tdm() {
            return Err(Error::ContractViolation(
                "left the settled set after absorption".into(),
            ));
        }
        visited.insert(state.gaps().gaps().to_vec());
    }
    Ok(visited.len())
}
