//! The counter protocol and the ring process are the same dynamics in two
//! coordinate systems. Driving both from one random stream must keep
//! `CounterFrame::gap_vector` equal to the ring's gap vector after every
//! event, with the firing of a node corresponding to the active edge at its
//! follower.

use d3sync_core::{CounterFrame, RingState, SimRng, SlotGrid};

fn assert_coupled(mut frame: CounterFrame, alpha: f64, events: u32, mut rng: SimRng) {
    let n = frame.len();
    let (first_firer, _) = frame.next_firer().unwrap();
    let mut ring = RingState::new(frame.gap_vector(), (first_firer + 1) % n).unwrap();
    let mut ring_rng = rng.clone();

    for event in 0..events {
        let (firer, _) = frame.next_firer().unwrap();
        assert_eq!(
            ring.active_edge(),
            (firer + 1) % n,
            "event {event}: edge does not track the follower"
        );
        frame.step(alpha, &mut rng).unwrap();
        ring.interact(alpha, &mut ring_rng).unwrap();
        assert_eq!(
            frame.gap_vector(),
            *ring.gaps(),
            "event {event}: gap vectors diverged"
        );
    }
}

#[test]
fn dial_state_stays_coupled_for_a_thousand_events() {
    let grid = SlotGrid::unit(16).unwrap();
    let frame = CounterFrame::new(vec![13, 14, 16, 4, 5, 10], grid).unwrap();
    assert_coupled(frame, 0.2, 1_000, SimRng::new(2));
}

#[test]
fn random_states_stay_coupled() {
    for trial in 0..50u64 {
        let mut rng = SimRng::substream(900, trial);
        let n = 2 + (rng.next_below(9) as usize);
        let slots = (n as u32) + 1 + rng.next_below(40) as u32;
        let grid = SlotGrid::unit(slots).unwrap();
        let frame = CounterFrame::random(n, grid, &mut rng).unwrap();
        let alpha = 0.05 + 0.9 * rng.next_f64();
        assert_coupled(frame, alpha, 1_000, rng);
    }
}

#[test]
fn two_node_frames_stay_coupled() {
    let grid = SlotGrid::unit(16).unwrap();
    let frame = CounterFrame::new(vec![0, 8], grid).unwrap();
    assert_coupled(frame, 0.5, 500, SimRng::new(3));

    let grid = SlotGrid::unit(17).unwrap();
    let frame = CounterFrame::new(vec![3, 11], grid).unwrap();
    assert_coupled(frame, 0.3, 500, SimRng::new(4));
}
