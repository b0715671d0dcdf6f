//! Event-driven simulation of the absolute-counter protocol.
//!
//! Every node runs a modular slot counter on the shared grid; a node fires
//! when its counter overflows at `L` slots and resets to zero. The node that
//! fired most recently before the current firer (the follower) reacts to the
//! firing by re-quantizing itself toward the midpoint of its two
//! time-neighbors. Everyone else just keeps counting.
//!
//! Frames store nodes in dial order (counters cyclically ascending); labels
//! carry no protocol meaning, so this costs nothing and makes the node after
//! the firer in index order the follower, with index-adjacent differences
//! being the firing-order gaps. The simulation jumps from firing to firing instead of
//! ticking slot by slot; the dynamics are identical.
//!
//! In slot units the follower update is drawn from the same integer
//! interaction law as the ring process, which makes the two simulations
//! couple exactly when they share a random stream.

use crate::error::{Error, Result};
use crate::quantizer::{InteractionDistribution, SlotGrid};
use crate::ring::GapVector;
use crate::rng::SimRng;

/// Absolute counter state of all nodes, in slot units.
///
/// Counters live in `0..=L`, where `L` marks a node exactly at its overflow
/// instant; simulation output always stays within `0..L`.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterFrame {
    counters: Vec<u32>,
    grid: SlotGrid,
    clock: u64,
    time_slots: u64,
}

/// One firing and the single counter update it triggered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiringEvent {
    pub firer: usize,
    /// Absolute time of the firing, in slots since the frame was built.
    pub time: u64,
    pub updated_node: usize,
    pub old_counter: u32,
    pub new_counter: u32,
}

impl CounterFrame {
    /// Validate and wrap a counter assignment.
    ///
    /// Requires 2 <= N <= L, all counters distinct modulo `L` (equal
    /// counters overflow together and collide), and node order following the
    /// dial: the mod-`L` sequence must be a rotation of its sorted order.
    pub fn new(counters: Vec<u32>, grid: SlotGrid) -> Result<Self> {
        let n = counters.len();
        let levels = grid.levels();
        if n < 2 {
            return Err(Error::InvalidFrame(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        if n as u64 > u64::from(levels) {
            return Err(Error::InvalidFrame(format!(
                "{n} nodes need at least {n} slots, grid has {levels}"
            )));
        }
        for (i, &c) in counters.iter().enumerate() {
            if c > levels {
                return Err(Error::InvalidFrame(format!(
                    "counter {c} of node {i} outside 0..={levels}"
                )));
            }
        }
        let phases: Vec<u32> = counters.iter().map(|&c| c % levels).collect();
        for i in 0..n {
            for j in (i + 1)..n {
                if phases[i] == phases[j] {
                    return Err(Error::Collision { a: i, b: j });
                }
            }
        }
        let descents = (0..n).filter(|&i| phases[(i + 1) % n] < phases[i]).count();
        if descents != 1 {
            return Err(Error::InvalidFrame(
                "node order must follow the dial (counters cyclically ascending)".into(),
            ));
        }
        Ok(Self {
            counters,
            grid,
            clock: 0,
            time_slots: 0,
        })
    }

    /// Random frame: `n` distinct counters drawn uniformly without
    /// replacement from `0..L`, in ascending order.
    pub fn random(n: usize, grid: SlotGrid, rng: &mut SimRng) -> Result<Self> {
        if n < 2 || n as u64 > u64::from(grid.levels()) {
            return Err(Error::InvalidFrame(format!(
                "need 2 <= n <= {} (got {n})",
                grid.levels()
            )));
        }
        let mut pool: Vec<u32> = (0..grid.levels()).collect();
        for i in 0..n {
            let j = i + rng.next_below((pool.len() - i) as u64) as usize;
            pool.swap(i, j);
        }
        let mut counters: Vec<u32> = pool[..n].to_vec();
        counters.sort_unstable();
        Self::new(counters, grid)
    }

    pub fn counters(&self) -> &[u32] {
        &self.counters
    }

    pub fn grid(&self) -> &SlotGrid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.counters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counters.is_empty()
    }

    /// Firings processed so far.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    /// Slots elapsed since the frame was built.
    pub fn time_slots(&self) -> u64 {
        self.time_slots
    }

    /// The node closest to overflow and the slots left until it fires.
    pub fn next_firer(&self) -> Result<(usize, u32)> {
        let (firer, &max) = self
            .counters
            .iter()
            .enumerate()
            .max_by_key(|&(_, &c)| c)
            .expect("non-empty");
        if let Some(other) =
            (0..self.counters.len()).find(|&i| i != firer && self.counters[i] == max)
        {
            return Err(Error::Collision { a: firer, b: other });
        }
        Ok((firer, self.grid.levels() - max))
    }

    /// Jump to the next overflow: advance every counter by the time to the
    /// next firing and reset the firer to zero. Returns the firer and the
    /// elapsed slots. Firing order is preserved round over round.
    pub fn advance_to_next_firing(&mut self) -> Result<(usize, u32)> {
        let (firer, elapsed) = self.next_firer()?;
        for c in &mut self.counters {
            *c += elapsed;
        }
        self.counters[firer] = 0;
        self.clock += 1;
        self.time_slots += u64::from(elapsed);
        debug_assert!(self.counters.iter().all(|&c| c < self.grid.levels()));
        Ok((firer, elapsed))
    }

    /// Apply the follower update triggered by `firer`, which must have just
    /// fired (counter zero). Exactly one node changes: the follower, whose
    /// new counter is drawn on the grid strictly between its time-neighbors.
    /// Consumes exactly one uniform variate.
    pub fn apply_firing_update(
        &mut self,
        firer: usize,
        alpha: f64,
        rng: &mut SimRng,
    ) -> Result<FiringEvent> {
        let n = self.counters.len();
        if firer >= n {
            return Err(Error::InvalidFrame(format!("no node {firer}")));
        }
        if self.counters[firer] != 0 {
            return Err(Error::ContractViolation(format!(
                "firer {firer} has counter {}, expected 0",
                self.counters[firer]
            )));
        }
        let levels = i64::from(self.grid.levels());
        let follower = (firer + 1) % n;
        let next = (firer + 2) % n;

        // gaps to and from the follower, in slot units
        let gap_follower = i64::from(self.counters[follower]);
        let gap_next = (i64::from(self.counters[next]) - i64::from(self.counters[follower]))
            .rem_euclid(levels);
        let diff = gap_follower - gap_next;
        let offset = InteractionDistribution::new(diff, alpha)?.sample(rng);

        let old_counter = self.counters[follower];
        let new_counter = gap_next + offset;
        debug_assert!(
            new_counter >= 1 && new_counter < levels,
            "follower crossed a time-neighbor"
        );
        let new_counter = new_counter as u32;
        self.counters[follower] = new_counter;
        Ok(FiringEvent {
            firer,
            time: self.time_slots,
            updated_node: follower,
            old_counter,
            new_counter,
        })
    }

    /// One full event: advance to the next firing, then apply the follower
    /// update it triggers.
    pub fn step(&mut self, alpha: f64, rng: &mut SimRng) -> Result<FiringEvent> {
        let (firer, _) = self.advance_to_next_firing()?;
        self.apply_firing_update(firer, alpha, rng)
    }

    /// Slot gaps between consecutive nodes in firing order; entry `i` is the
    /// mod-`L` distance from node `i - 1` to node `i`. The gaps sum to `L`
    /// and are unchanged by firings themselves, only by follower updates.
    pub fn gap_vector(&self) -> GapVector {
        let n = self.counters.len();
        let levels = i64::from(self.grid.levels());
        let gaps: Vec<u32> = (0..n)
            .map(|i| {
                let prev = (i + n - 1) % n;
                let d = (i64::from(self.counters[i] % self.grid.levels())
                    - i64::from(self.counters[prev] % self.grid.levels()))
                .rem_euclid(levels);
                d as u32
            })
            .collect();
        GapVector::new(gaps).expect("frame invariants guarantee a valid gap vector")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(levels: u32) -> SlotGrid {
        SlotGrid::unit(levels).unwrap()
    }

    /// The six-node dial state used throughout: counters
    /// (13, 14, 16, 4, 5, 10) on a 16-slot frame, node 3 at overflow.
    fn dial_frame() -> CounterFrame {
        CounterFrame::new(vec![13, 14, 16, 4, 5, 10], grid(16)).unwrap()
    }

    #[test]
    fn validation_rejects_duplicates_and_bad_order() {
        assert!(matches!(
            CounterFrame::new(vec![3, 3], grid(16)),
            Err(Error::Collision { .. })
        ));
        // 0 and 16 share a phase on a 16-slot dial
        assert!(matches!(
            CounterFrame::new(vec![0, 16], grid(16)),
            Err(Error::Collision { .. })
        ));
        // not a rotation of sorted order
        assert!(CounterFrame::new(vec![1, 5, 3], grid(16)).is_err());
        // rotations are fine
        assert!(CounterFrame::new(vec![9, 14, 2, 4], grid(16)).is_ok());
        assert!(CounterFrame::new(vec![1], grid(16)).is_err());
        assert!(CounterFrame::new(vec![0, 1, 2], grid(2)).is_err());
    }

    #[test]
    fn overflowing_node_fires_immediately() {
        let mut frame = dial_frame();
        let (firer, elapsed) = frame.advance_to_next_firing().unwrap();
        assert_eq!(firer, 2);
        assert_eq!(elapsed, 0);
        assert_eq!(frame.counters(), &[13, 14, 0, 4, 5, 10]);
    }

    #[test]
    fn single_maximum_fires_after_gap() {
        let mut frame = CounterFrame::new(vec![0, 8], grid(16)).unwrap();
        let (firer, elapsed) = frame.advance_to_next_firing().unwrap();
        assert_eq!(firer, 1);
        assert_eq!(elapsed, 8);
        assert_eq!(frame.counters(), &[8, 0]);
    }

    #[test]
    fn next_firing_after_dial_overflow() {
        let mut frame = dial_frame();
        frame.advance_to_next_firing().unwrap();
        let (firer, elapsed) = frame.next_firer().unwrap();
        assert_eq!(firer, 1);
        assert_eq!(elapsed, 2);
    }

    #[test]
    fn follower_update_matches_hand_computation() {
        // After node 3 fires on the dial, node 4 re-quantizes the interim
        // value 0.2 * 4 + 0.4 * 5 = 2.8 slots: 2 with p = 0.2, 3 with p = 0.8.
        let mut rng = SimRng::new(31);
        let mut hits = [0u32; 2];
        let n = 100_000;
        for _ in 0..n {
            let mut frame = dial_frame();
            let (firer, _) = frame.advance_to_next_firing().unwrap();
            let event = frame.apply_firing_update(firer, 0.2, &mut rng).unwrap();
            assert_eq!(event.updated_node, 3);
            assert_eq!(event.old_counter, 4);
            match event.new_counter {
                2 => hits[0] += 1,
                3 => hits[1] += 1,
                other => panic!("unexpected counter {other}"),
            }
            let rest: Vec<u32> = frame
                .counters()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != 3)
                .map(|(_, &c)| c)
                .collect();
            assert_eq!(rest, vec![13, 14, 0, 5, 10]);
        }
        let frac = f64::from(hits[0]) / f64::from(n);
        let se = (0.2f64 * 0.8 / f64::from(n)).sqrt();
        assert!((frac - 0.2).abs() < 4.0 * se, "p(2) = {frac}");
    }

    #[test]
    fn follower_on_interim_grid_point_never_moves() {
        // counters (0, 4, 8): follower gap 4, next gap 4, difference 0
        let mut rng = SimRng::new(32);
        for _ in 0..500 {
            let mut frame = CounterFrame::new(vec![0, 4, 8], grid(16)).unwrap();
            let event = frame.apply_firing_update(0, 0.3, &mut rng).unwrap();
            assert_eq!(event.new_counter, event.old_counter);
        }
    }

    #[test]
    fn two_node_update_stays_between_neighbors() {
        let mut rng = SimRng::new(33);
        for &alpha in &[0.1, 0.5, 0.9] {
            for _ in 0..1_000 {
                let mut frame = CounterFrame::new(vec![8, 0], grid(16)).unwrap();
                let event = frame.apply_firing_update(1, alpha, &mut rng).unwrap();
                assert!(event.new_counter >= 1 && event.new_counter <= 15);
            }
        }
    }

    #[test]
    fn update_requires_fired_counter() {
        let mut rng = SimRng::new(34);
        let mut frame = dial_frame();
        assert!(matches!(
            frame.apply_firing_update(0, 0.2, &mut rng),
            Err(Error::ContractViolation(_))
        ));
    }

    #[test]
    fn dial_gap_vector() {
        let frame = dial_frame();
        assert_eq!(frame.gap_vector().gaps(), &[3, 1, 2, 4, 1, 5]);
        assert_eq!(frame.gap_vector().total(), 16);
    }

    #[test]
    fn symmetric_two_node_gaps() {
        let frame = CounterFrame::new(vec![0, 8], grid(16)).unwrap();
        assert_eq!(frame.gap_vector().gaps(), &[8, 8]);
    }

    #[test]
    fn gaps_survive_firing_unchanged() {
        let mut frame = dial_frame();
        let before = frame.gap_vector();
        frame.advance_to_next_firing().unwrap();
        assert_eq!(frame.gap_vector(), before);
    }

    #[test]
    fn firing_order_preserved_over_rounds() {
        let mut rng = SimRng::new(35);
        let mut frame = CounterFrame::new(vec![2, 5, 9, 11, 14], grid(16)).unwrap();
        let mut order = Vec::new();
        for _ in 0..5 {
            order.push(frame.step(0.2, &mut rng).unwrap().firer);
        }
        for round in 1..6 {
            for _ in 0..5 {
                let event = frame.step(0.2, &mut rng).unwrap();
                assert_eq!(
                    event.firer,
                    order[(frame.clock() as usize - 1) % 5],
                    "round {round} broke the firing order"
                );
            }
        }
    }

    #[test]
    fn random_frames_are_valid_and_deterministic() {
        let mut a = SimRng::substream(77, 4);
        let mut b = SimRng::substream(77, 4);
        let fa = CounterFrame::random(6, grid(60), &mut a).unwrap();
        let fb = CounterFrame::random(6, grid(60), &mut b).unwrap();
        assert_eq!(fa, fb);
        assert_eq!(fa.gap_vector().total(), 60);
    }
}
