//! `d3sync reproduce`: canned experiment presets with tidy CSV output.
//!
//! - `fig4a` / `fig4b`: one six-node run (60 or 57 slots) with per-round
//!   counter snapshots, plus a post-absorption probe that counts distinct
//!   settled states.
//! - `fig5a`: interactions to absorption from random starts, ten nodes,
//!   sweeping the frame length, against the global bound.
//! - `fig5b`: interactions to absorption from the two-outlier worst case
//!   over all placements, sweeping the node count, against the closed form.

use std::fs;

use d3sync_core::{
    absorption_upper_bound, closed_form_absorption_time, count_tdm_states, default_interaction_cap,
    post_absorption_probe, run_experiment, CounterFrame, ExperimentConfig, InitialStateMode,
    SimRng, SlotGrid,
};

use crate::manifest::{timestamp, RunManifest};
use crate::output::{fmt_f64, fmt_opt_f64, write_csv};
use crate::{CliError, Figure, ReproduceArgs, EXIT_CAPPED, EXIT_OK};

/// Seed for sweep row `i`: first output of substream `i` of the master seed.
fn row_seed(master: u64, row: u64) -> u64 {
    SimRng::substream(master, row).next_u64()
}

pub fn run(args: ReproduceArgs) -> Result<u8, CliError> {
    let started = timestamp();
    let seed = crate::resolve_seed(args.seed);
    fs::create_dir_all(&args.out)?;
    match args.figure {
        Figure::Fig4a => run_fig4(&args, seed, started, 60),
        Figure::Fig4b => run_fig4(&args, seed, started, 57),
        Figure::Fig5a => run_fig5a(&args, seed, started),
        Figure::Fig5b => run_fig5b(&args, seed, started),
    }
}

fn finish_manifest(
    args: &ReproduceArgs,
    seed: u64,
    started: u64,
    resolved: &[(&str, String)],
    outputs: Vec<String>,
) -> Result<(), CliError> {
    let mut command = vec!["reproduce".to_string(), args.figure.canonical().to_string()];
    command.push("--seed".into());
    command.push(seed.to_string());
    for (flag, value) in resolved {
        command.push((*flag).into());
        command.push(value.clone());
    }
    command.push("--out".into());
    command.push(args.out.display().to_string());
    let mut manifest = RunManifest::new(command, seed, started);
    manifest.outputs = outputs;
    manifest.finish(&args.out)?;
    Ok(())
}

fn run_fig4(args: &ReproduceArgs, seed: u64, started: u64, slots: u32) -> Result<u8, CliError> {
    let nodes = 6usize;
    let alpha = args.alpha.unwrap_or(0.2);
    let cap = default_interaction_cap(nodes, slots, alpha)?;
    let figure = args.figure.canonical();

    // Coupled counter run on stream 0, snapshotting after every full round
    // of firings. Stream 0 is exactly what the probe below replays.
    let mut rng = SimRng::substream(seed, 0);
    let grid = SlotGrid::unit(slots)?;
    let mut frame = CounterFrame::random(nodes, grid, &mut rng)?;

    let mut rounds_rows: Vec<Vec<String>> = Vec::new();
    let mut snapshot = |round: u64, frame: &CounterFrame| {
        let gaps = frame.gap_vector();
        for node in 0..nodes {
            rounds_rows.push(vec![
                round.to_string(),
                node.to_string(),
                frame.counters()[node].to_string(),
                gaps.get(node).to_string(),
            ]);
        }
    };
    snapshot(0, &frame);

    let mut events = 0u64;
    let mut absorbed_at = frame.gap_vector().is_tdm().then_some(0u64);
    let mut rounds_after_absorption = 0u64;
    let mut round = 0u64;
    while rounds_after_absorption < 4 && events < cap {
        round += 1;
        for _ in 0..nodes {
            frame.step(alpha, &mut rng)?;
            events += 1;
            if absorbed_at.is_none() && frame.gap_vector().is_tdm() {
                absorbed_at = Some(events);
            }
        }
        snapshot(round, &frame);
        if absorbed_at.is_some() {
            rounds_after_absorption += 1;
        }
    }

    let distinct_visited = match absorbed_at {
        Some(_) => {
            let config = ExperimentConfig {
                nodes,
                slots,
                alpha,
                trials: 1,
                seed,
                max_interactions: cap,
                initial_state_mode: InitialStateMode::RandomDistinctCounters,
                record_trajectory: false,
            };
            Some(post_absorption_probe(&config, 100)?)
        }
        None => None,
    };

    let rounds_name = format!("{figure}_rounds.csv");
    write_csv(
        &args.out.join(&rounds_name),
        &["round", "node", "counter", "gap"],
        rounds_rows,
    )?;

    let mut header = vec![
        "nodes".to_string(),
        "slots".into(),
        "alpha".into(),
        "seed".into(),
        "interactions_to_absorption".into(),
        "rounds_to_absorption".into(),
        "tdm_state_count".into(),
        "distinct_tdm_visited".into(),
    ];
    for i in 1..=nodes {
        header.push(format!("final_g{i}"));
    }
    let final_gaps = frame.gap_vector();
    let mut row = vec![
        nodes.to_string(),
        slots.to_string(),
        fmt_f64(alpha),
        seed.to_string(),
        absorbed_at.map_or_else(String::new, |t| t.to_string()),
        absorbed_at.map_or_else(String::new, |t| t.div_ceil(nodes as u64).to_string()),
        count_tdm_states(nodes, slots)?.to_string(),
        distinct_visited.map_or_else(String::new, |v| v.to_string()),
    ];
    row.extend((0..nodes).map(|i| final_gaps.get(i).to_string()));
    let summary_name = format!("{figure}_summary.csv");
    write_csv(&args.out.join(&summary_name), &header, [row])?;

    finish_manifest(
        args,
        seed,
        started,
        &[("--alpha", fmt_f64(alpha))],
        vec![rounds_name, summary_name, "manifest.json".into()],
    )?;
    Ok(if absorbed_at.is_some() {
        EXIT_OK
    } else {
        EXIT_CAPPED
    })
}

fn run_fig5a(args: &ReproduceArgs, seed: u64, started: u64) -> Result<u8, CliError> {
    let nodes = 10usize;
    let alpha = args.alpha.unwrap_or(0.2);
    let trials = args.trials.unwrap_or(5_000);

    let mut rows = Vec::new();
    let mut capped = 0u64;
    for (row_index, slots) in (20u32..=60).enumerate() {
        let config = ExperimentConfig {
            nodes,
            slots,
            alpha,
            trials,
            seed: row_seed(seed, row_index as u64),
            max_interactions: default_interaction_cap(nodes, slots, alpha)?,
            initial_state_mode: InitialStateMode::RandomDistinctCounters,
            record_trajectory: false,
        };
        let output = run_experiment(&config)?;
        capped += output.summary.capped_trials;
        rows.push(vec![
            slots.to_string(),
            fmt_f64(alpha),
            output.summary.total_trials.to_string(),
            output.summary.absorbed_trials.to_string(),
            fmt_opt_f64(output.summary.mean),
            fmt_opt_f64(output.summary.std_error),
            fmt_f64(absorption_upper_bound(nodes, slots, alpha)?),
        ]);
    }

    write_csv(
        &args.out.join("fig5a.csv"),
        &[
            "L",
            "alpha",
            "trials",
            "absorbed",
            "mc_mean",
            "mc_stderr",
            "theory_bound",
        ],
        rows,
    )?;
    finish_manifest(
        args,
        seed,
        started,
        &[
            ("--alpha", fmt_f64(alpha)),
            ("--trials", trials.to_string()),
        ],
        vec!["fig5a.csv".into(), "manifest.json".into()],
    )?;
    Ok(if capped > 0 { EXIT_CAPPED } else { EXIT_OK })
}

fn run_fig5b(args: &ReproduceArgs, seed: u64, started: u64) -> Result<u8, CliError> {
    let trials = args.trials.unwrap_or(250);
    let node_counts = [4usize, 6, 8, 10, 12];
    let alphas = [0.2, 0.5];

    let mut rows = Vec::new();
    let mut capped = 0u64;
    let mut row_index = 0u64;
    for &nodes in &node_counts {
        for &alpha in &alphas {
            // smallest frame with a valid worst case: common gap of 2 slots
            let slots = 2 * nodes as u32;
            let config = ExperimentConfig {
                nodes,
                slots,
                alpha,
                trials,
                seed: row_seed(seed, row_index),
                max_interactions: default_interaction_cap(nodes, slots, alpha)?,
                initial_state_mode: InitialStateMode::WorstCaseOutliers,
                record_trajectory: false,
            };
            row_index += 1;
            let output = run_experiment(&config)?;
            capped += output.summary.capped_trials;
            rows.push(vec![
                nodes.to_string(),
                fmt_f64(alpha),
                fmt_opt_f64(output.summary.mean),
                fmt_opt_f64(output.summary.std_error),
                fmt_f64(closed_form_absorption_time(nodes, alpha)?),
            ]);
        }
    }

    write_csv(
        &args.out.join("fig5b.csv"),
        &["N", "alpha", "mc_mean", "mc_stderr", "theory_eq41"],
        rows,
    )?;
    finish_manifest(
        args,
        seed,
        started,
        &[("--trials", trials.to_string())],
        vec!["fig5b.csv".into(), "manifest.json".into()],
    )?;
    Ok(if capped > 0 { EXIT_CAPPED } else { EXIT_OK })
}
