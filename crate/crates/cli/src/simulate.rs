//! `d3sync simulate`: run an experiment and write summary, optional
//! trajectories, and the run manifest.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use d3sync_core::{
    default_interaction_cap, run_experiment, ExperimentConfig, ExperimentOutput, ExperimentSummary,
    InitialStateMode, TrialRecord,
};

use crate::manifest::{timestamp, RunManifest};
use crate::output::{fmt_f64, fmt_opt_f64, write_csv, write_json};
use crate::{CliError, Format, InitArg, SimulateArgs, EXIT_CAPPED, EXIT_OK};

#[derive(Debug, Deserialize)]
struct ExplicitInit {
    gaps: Vec<u32>,
    #[serde(default)]
    edge: usize,
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    summary: &'a ExperimentSummary,
    trials: Vec<TrialRecord>,
}

pub fn run(args: SimulateArgs) -> Result<u8, CliError> {
    let started = timestamp();
    let seed = crate::resolve_seed(args.seed);

    let mode = match &args.init {
        InitArg::Random => InitialStateMode::RandomDistinctCounters,
        InitArg::WorstCase => InitialStateMode::WorstCaseOutliers,
        InitArg::File(path) => {
            let text = fs::read_to_string(path)?;
            let init: ExplicitInit = serde_json::from_str(&text)?;
            InitialStateMode::Explicit {
                gaps: init.gaps,
                edge: init.edge,
            }
        }
    };
    let cap = match args.max_interactions {
        Some(cap) => cap,
        None => default_interaction_cap(args.nodes, args.slots, args.alpha)?,
    };
    let config = ExperimentConfig {
        nodes: args.nodes,
        slots: args.slots,
        alpha: args.alpha,
        trials: args.trials,
        seed,
        max_interactions: cap,
        initial_state_mode: mode,
        record_trajectory: args.trajectory,
    };
    config.validate()?;

    let output = run_experiment(&config)?;
    fs::create_dir_all(&args.out)?;
    let mut outputs = Vec::new();

    match args.format {
        Format::Json => {
            write_summary_json(&args.out, &output)?;
            outputs.push("summary.json".to_string());
        }
        Format::Csv => {
            write_summary_csv(&args.out, &config, &output.summary)?;
            write_trials_csv(&args.out, config.nodes, &output.records)?;
            outputs.push("summary.csv".to_string());
            outputs.push("trials.csv".to_string());
        }
    }
    if args.trajectory {
        write_trajectories_csv(&args.out, config.nodes, &output.records)?;
        outputs.push("trajectories.csv".to_string());
    }
    outputs.push("manifest.json".to_string());

    let command = resolved_command(&args, &config);
    let mut manifest = RunManifest::new(command, seed, started);
    manifest.outputs = outputs;
    manifest.finish(&args.out)?;

    Ok(if output.summary.capped_trials > 0 {
        EXIT_CAPPED
    } else {
        EXIT_OK
    })
}

fn resolved_command(args: &SimulateArgs, config: &ExperimentConfig) -> Vec<String> {
    let mut command = vec![
        "simulate".to_string(),
        "--nodes".into(),
        config.nodes.to_string(),
        "--slots".into(),
        config.slots.to_string(),
        "--alpha".into(),
        fmt_f64(config.alpha),
        "--seed".into(),
        config.seed.to_string(),
        "--trials".into(),
        config.trials.to_string(),
        "--init".into(),
        args.init.canonical(),
        "--max-interactions".into(),
        config.max_interactions.to_string(),
        "--format".into(),
        match args.format {
            Format::Json => "json".into(),
            Format::Csv => "csv".into(),
        },
    ];
    if config.record_trajectory {
        command.push("--trajectory".into());
    }
    command.push("--out".into());
    command.push(args.out.display().to_string());
    command
}

fn write_summary_json(dir: &Path, output: &ExperimentOutput) -> Result<(), CliError> {
    // trajectories go to CSV, not into the summary document
    let trials: Vec<TrialRecord> = output
        .records
        .iter()
        .cloned()
        .map(|mut r| {
            r.trajectory = None;
            r
        })
        .collect();
    let doc = SummaryDoc {
        summary: &output.summary,
        trials,
    };
    write_json(&dir.join("summary.json"), &doc)?;
    Ok(())
}

fn write_summary_csv(
    dir: &Path,
    config: &ExperimentConfig,
    summary: &ExperimentSummary,
) -> Result<(), CliError> {
    let header = [
        "nodes",
        "slots",
        "alpha",
        "seed",
        "trials",
        "max_interactions",
        "total_trials",
        "absorbed_trials",
        "capped_trials",
        "mean",
        "std_error",
        "min",
        "max",
        "theory_mean_worst_case",
        "theory_upper_bound",
    ];
    let row = vec![
        config.nodes.to_string(),
        config.slots.to_string(),
        fmt_f64(config.alpha),
        config.seed.to_string(),
        config.trials.to_string(),
        config.max_interactions.to_string(),
        summary.total_trials.to_string(),
        summary.absorbed_trials.to_string(),
        summary.capped_trials.to_string(),
        fmt_opt_f64(summary.mean),
        fmt_opt_f64(summary.std_error),
        summary.min.map_or_else(String::new, |v| v.to_string()),
        summary.max.map_or_else(String::new, |v| v.to_string()),
        fmt_opt_f64(summary.theory_mean_worst_case),
        fmt_opt_f64(summary.theory_upper_bound),
    ];
    write_csv(&dir.join("summary.csv"), &header, [row])?;
    Ok(())
}

fn write_trials_csv(dir: &Path, nodes: usize, records: &[TrialRecord]) -> Result<(), CliError> {
    let mut header = vec![
        "stream".to_string(),
        "initial_edge".into(),
        "absorbed".into(),
        "interactions".into(),
        "rounds".into(),
        "nulls".into(),
        "swaps".into(),
        "compressions".into(),
    ];
    for i in 1..=nodes {
        header.push(format!("initial_g{i}"));
    }
    for i in 1..=nodes {
        header.push(format!("final_g{i}"));
    }
    let rows = records.iter().map(|r| {
        let mut row = vec![
            r.stream_index.to_string(),
            r.initial_edge.to_string(),
            r.absorbed.to_string(),
            r.interactions_to_absorption.to_string(),
            r.rounds_to_absorption.to_string(),
            r.nulls.to_string(),
            r.swaps.to_string(),
            r.compressions.to_string(),
        ];
        row.extend(r.initial_gaps.iter().map(|g| g.to_string()));
        row.extend(r.final_gaps.iter().map(|g| g.to_string()));
        row
    });
    write_csv(&dir.join("trials.csv"), &header, rows)?;
    Ok(())
}

fn write_trajectories_csv(
    dir: &Path,
    nodes: usize,
    records: &[TrialRecord],
) -> Result<(), CliError> {
    let mut header = vec![
        "trial".to_string(),
        "step".into(),
        "edge".into(),
        "outcome".into(),
    ];
    for i in 1..=nodes {
        header.push(format!("g{i}"));
    }
    header.push("lyapunov".into());
    header.push("range".into());

    let mut rows = Vec::new();
    for record in records {
        if let Some(points) = &record.trajectory {
            for p in points {
                let mut row = vec![
                    record.stream_index.to_string(),
                    p.step.to_string(),
                    p.edge.to_string(),
                    p.outcome.as_str().to_string(),
                ];
                row.extend(p.gaps.iter().map(|g| g.to_string()));
                row.push(fmt_f64(p.lyapunov));
                row.push(p.range.to_string());
                rows.push(row);
            }
        }
    }
    write_csv(&dir.join("trajectories.csv"), &header, rows)?;
    Ok(())
}
