//! The gap-domain view of the protocol: integer slot gaps on a ring with a
//! deterministically rotating active edge.
//!
//! Each node owns the gap to its predecessor in firing order, so the gap
//! vector sums to the frame length `L` and every entry stays at least one
//! slot. One firing event interacts the active pair `(g_i, g_{i+1})`: the
//! pair is replaced by `(g_{i+1} + k, g_i - k)` with `k` drawn from
//! [`InteractionDistribution`] for the difference `g_i - g_{i+1}`, which
//! preserves the pair sum, and the active edge then moves from
//! `(v_i, v_{i+1})` to `(v_{i-1}, v_i)`.
//!
//! Interactions classify as null (values unchanged), swap (values exchanged)
//! or compression (pair difference strictly reduced). The schedule is settled
//! once the gaps span a range of at most one slot; those states are absorbing
//! and every trajectory reaches them with probability one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantizer::{round_half_up, InteractionDistribution};
use crate::rng::SimRng;

/// Integer slot gaps around the firing ring. Every entry is at least 1 and
/// the sum is the frame length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct GapVector {
    gaps: Vec<u32>,
}

impl GapVector {
    pub fn new(gaps: Vec<u32>) -> Result<Self> {
        if gaps.len() < 2 {
            return Err(Error::InvalidGapVector(format!(
                "need at least 2 nodes, got {}",
                gaps.len()
            )));
        }
        if let Some(i) = gaps.iter().position(|&g| g == 0) {
            return Err(Error::InvalidGapVector(format!("gap {i} is zero")));
        }
        let total: u64 = gaps.iter().map(|&g| u64::from(g)).sum();
        if total > u64::from(u32::MAX) {
            return Err(Error::InvalidGapVector(format!(
                "total {total} exceeds the slot-count range"
            )));
        }
        Ok(Self { gaps })
    }

    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn gaps(&self) -> &[u32] {
        &self.gaps
    }

    pub fn get(&self, i: usize) -> u32 {
        self.gaps[i]
    }

    /// Frame length `L`, conserved by every interaction.
    pub fn total(&self) -> u32 {
        self.gaps.iter().sum()
    }

    /// Largest minus smallest gap.
    pub fn range(&self) -> u32 {
        let max = *self.gaps.iter().max().expect("non-empty");
        let min = *self.gaps.iter().min().expect("non-empty");
        max - min
    }

    /// Whether the schedule is settled: all gaps within one slot of each
    /// other, i.e. `r` nodes hold `l + 1` slots and the rest hold `l` where
    /// `L = l * N + r`.
    pub fn is_tdm(&self) -> bool {
        self.range() <= 1
    }

    /// Squared deviation of the gaps from their mean, in slot units. Null and
    /// swap interactions leave it unchanged; every compression lowers it by
    /// at least 2. Bounded by `(L - N)^2 * N / 4`.
    pub fn lyapunov(&self) -> f64 {
        let mean = f64::from(self.total()) / self.len() as f64;
        self.gaps
            .iter()
            .map(|&g| {
                let d = f64::from(g) - mean;
                d * d
            })
            .sum()
    }
}

impl TryFrom<Vec<u32>> for GapVector {
    type Error = Error;

    fn try_from(gaps: Vec<u32>) -> Result<Self> {
        Self::new(gaps)
    }
}

impl From<GapVector> for Vec<u32> {
    fn from(v: GapVector) -> Self {
        v.gaps
    }
}

/// Number of settled schedules for `n` nodes on `total` slots: the binomial
/// coefficient C(n, total mod n), with C(n, 0) = 1.
pub fn count_tdm_states(n: usize, total: u32) -> Result<u128> {
    if n < 2 || (total as u64) < n as u64 {
        return Err(Error::InvalidConfig(format!(
            "need 2 <= n <= total slots (got n = {n}, total = {total})"
        )));
    }
    let r = (total as u64 % n as u64) as u128;
    let n = n as u128;
    let mut result: u128 = 1;
    for i in 0..r {
        result = result * (n - i) / (i + 1);
    }
    Ok(result)
}

/// How one interaction changed the active pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    Null,
    Swap,
    Compression,
}

impl OutcomeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OutcomeKind::Null => "null",
            OutcomeKind::Swap => "swap",
            OutcomeKind::Compression => "compression",
        }
    }
}

/// Classification of one interaction on the active pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteractionOutcome {
    pub kind: OutcomeKind,
    /// Index `i` of the edge `(v_i, v_{i+1})` that interacted.
    pub edge: usize,
    pub before: (u32, u32),
    pub after: (u32, u32),
}

/// Classify a sum-preserving update of one pair.
pub fn classify(before: (u32, u32), after: (u32, u32)) -> Result<OutcomeKind> {
    let sum_before = u64::from(before.0) + u64::from(before.1);
    let sum_after = u64::from(after.0) + u64::from(after.1);
    if sum_before != sum_after {
        return Err(Error::ContractViolation(format!(
            "pair sum changed: {before:?} -> {after:?}"
        )));
    }
    if after == before {
        return Ok(OutcomeKind::Null);
    }
    if after == (before.1, before.0) {
        return Ok(OutcomeKind::Swap);
    }
    let diff = |(a, b): (u32, u32)| (i64::from(a) - i64::from(b)).abs();
    if diff(after) < diff(before) {
        return Ok(OutcomeKind::Compression);
    }
    // Unreachable through the interaction law, which never grows the
    // difference of a pair it does not fix or exchange.
    Err(Error::ContractViolation(format!(
        "pair difference grew: {before:?} -> {after:?}"
    )))
}

/// Ring state: the gap vector, the active edge and the event counter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingState {
    gaps: GapVector,
    active_edge: usize,
    step: u64,
}

impl RingState {
    pub fn new(gaps: GapVector, active_edge: usize) -> Result<Self> {
        if active_edge >= gaps.len() {
            return Err(Error::InvalidConfig(format!(
                "active edge {active_edge} out of range for {} nodes",
                gaps.len()
            )));
        }
        Ok(Self {
            gaps,
            active_edge,
            step: 0,
        })
    }

    pub fn gaps(&self) -> &GapVector {
        &self.gaps
    }

    /// Index `i` of the currently active edge `(v_i, v_{i+1})`.
    pub fn active_edge(&self) -> usize {
        self.active_edge
    }

    /// Events performed so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    fn apply_offset(&mut self, offset: i64) -> Result<InteractionOutcome> {
        let n = self.gaps.len();
        let i = self.active_edge;
        let j = (i + 1) % n;
        let before = (self.gaps.get(i), self.gaps.get(j));

        let new_i = i64::from(before.1) + offset;
        let new_j = i64::from(before.0) - offset;
        debug_assert!(new_i >= 1 && new_j >= 1, "gap floor violated");
        let after = (new_i as u32, new_j as u32);
        let kind = classify(before, after)?;

        self.gaps.gaps[i] = after.0;
        self.gaps.gaps[j] = after.1;
        // counter-clockwise rotation: (v_i, v_{i+1}) -> (v_{i-1}, v_i)
        self.active_edge = (i + n - 1) % n;
        self.step += 1;
        Ok(InteractionOutcome {
            kind,
            edge: i,
            before,
            after,
        })
    }

    /// One dithered interaction on the active pair; consumes exactly one
    /// uniform variate from `rng`.
    pub fn interact(&mut self, alpha: f64, rng: &mut SimRng) -> Result<InteractionOutcome> {
        let i = self.active_edge;
        let j = (i + 1) % self.gaps.len();
        let diff = i64::from(self.gaps.get(i)) - i64::from(self.gaps.get(j));
        let offset = InteractionDistribution::new(diff, alpha)?.sample(rng);
        self.apply_offset(offset)
    }

    /// The deterministic variant that rounds the interim value with the
    /// plain uniform quantizer. Kept to demonstrate that without dither the
    /// dynamics stall on non-settled fixed points.
    pub fn interact_uniform(&mut self, alpha: f64) -> Result<InteractionOutcome> {
        if !(alpha.is_finite() && 0.0 < alpha && alpha < 1.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        let i = self.active_edge;
        let j = (i + 1) % self.gaps.len();
        let diff = i64::from(self.gaps.get(i)) - i64::from(self.gaps.get(j));
        let offset = round_half_up(0.5 * (1.0 + alpha) * diff as f64);
        self.apply_offset(offset)
    }
}
