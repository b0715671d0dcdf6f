//! `d3sync analyze`: tabulate expected absorption times over a parameter
//! grid, optionally cross-checking the closed form against the dense chain
//! solver and attaching the global expected-time bound.

use std::fs;

use serde::Serialize;

use d3sync_core::{absorption_upper_bound, closed_form_absorption_time, OutlierChain};

use crate::manifest::{timestamp, RunManifest};
use crate::output::{fmt_f64, fmt_opt_f64, write_csv, write_json};
use crate::{AnalyzeArgs, CliError, Format, EXIT_OK, EXIT_ORACLE_MISMATCH};

/// Chains grow as n^2 states and the dense solve as n^6; keep requests at
/// desk scale.
const MAX_SOLVE_NODES: usize = 60;

/// Closed form and solver must agree to this relative tolerance.
const ORACLE_RTOL: f64 = 1e-9;

#[derive(Debug, Serialize)]
struct AnalysisRow {
    n: usize,
    alpha: f64,
    tbar_closed_form: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    solve_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solve_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rel_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bound: Option<f64>,
}

pub fn run(args: AnalyzeArgs) -> Result<u8, CliError> {
    let started = timestamp();
    let (lo, hi) = args.nodes_range;
    if lo < 3 {
        return Err(CliError::Usage(format!(
            "chain analysis needs at least 3 nodes (requested {lo})"
        )));
    }
    if args.solve && hi > MAX_SOLVE_NODES {
        return Err(CliError::Usage(format!(
            "--solve supports up to {MAX_SOLVE_NODES} nodes (requested {hi})"
        )));
    }
    if args.bound && args.slots.is_none() {
        return Err(CliError::Usage("--bound needs --slots".into()));
    }
    if args.alpha_list.is_empty() {
        return Err(CliError::Usage("--alpha-list must not be empty".into()));
    }

    let mut rows = Vec::new();
    let mut worst_deviation = 0.0f64;
    for n in lo..=hi {
        for &alpha in &args.alpha_list {
            let closed = closed_form_absorption_time(n, alpha)?;
            let (solve_mean, solve_max, rel_deviation) = if args.solve {
                let solution = OutlierChain::build(n, alpha)?.absorption_solve()?;
                let deviation = (solution.mean() - closed).abs() / closed;
                worst_deviation = worst_deviation.max(deviation);
                (Some(solution.mean()), Some(solution.max()), Some(deviation))
            } else {
                (None, None, None)
            };
            let bound = args
                .slots
                .filter(|_| args.bound)
                .map(|slots| absorption_upper_bound(n, slots, alpha))
                .transpose()?;
            rows.push(AnalysisRow {
                n,
                alpha,
                tbar_closed_form: closed,
                solve_mean,
                solve_max,
                rel_deviation,
                bound,
            });
        }
    }

    fs::create_dir_all(&args.out)?;
    let table_name = match args.format {
        Format::Csv => {
            let header = [
                "n",
                "alpha",
                "tbar_closed_form",
                "solve_mean",
                "solve_max",
                "rel_deviation",
                "bound",
            ];
            write_csv(
                &args.out.join("analysis.csv"),
                &header,
                rows.iter().map(|r| {
                    vec![
                        r.n.to_string(),
                        fmt_f64(r.alpha),
                        fmt_f64(r.tbar_closed_form),
                        fmt_opt_f64(r.solve_mean),
                        fmt_opt_f64(r.solve_max),
                        fmt_opt_f64(r.rel_deviation),
                        fmt_opt_f64(r.bound),
                    ]
                }),
            )?;
            "analysis.csv"
        }
        Format::Json => {
            write_json(&args.out.join("analysis.json"), &rows)?;
            "analysis.json"
        }
    };

    let mut command = vec![
        "analyze".to_string(),
        "--nodes-range".into(),
        format!("{lo}..{hi}"),
        "--alpha-list".into(),
        args.alpha_list
            .iter()
            .map(|&a| fmt_f64(a))
            .collect::<Vec<_>>()
            .join(","),
    ];
    if args.solve {
        command.push("--solve".into());
    }
    if args.bound {
        command.push("--bound".into());
    }
    if let Some(slots) = args.slots {
        command.push("--slots".into());
        command.push(slots.to_string());
    }
    command.push("--format".into());
    command.push(
        match args.format {
            Format::Json => "json",
            Format::Csv => "csv",
        }
        .into(),
    );
    command.push("--out".into());
    command.push(args.out.display().to_string());

    let mut manifest = RunManifest::new(command, 0, started);
    manifest.outputs = vec![table_name.to_string(), "manifest.json".to_string()];
    manifest.finish(&args.out)?;

    if args.solve && worst_deviation > ORACLE_RTOL {
        eprintln!(
            "closed form and solver disagree: relative deviation {worst_deviation:e} > {ORACLE_RTOL:e}"
        );
        return Ok(EXIT_ORACLE_MISMATCH);
    }
    Ok(EXIT_OK)
}
