use std::fs::File;
use std::io::{BufWriter, Write};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use confound_core::adjustment::{edge_confounder_report, AdjustmentSet, CausalQuery};
use confound_core::fixtures::{self, Process, ProcessParams};
use confound_core::scm::{run_sweep, SweepConfig};
use confound_core::sensitivity::{
    adjusted_effect, evalue_curve, evalue_ols, tipping_grid, write_evalue_csv, write_tipping_csv,
    EValueInput, FitSummary, TipInput, TipKind, TipReport, ValueRange,
};
use confound_core::stats::{ols_fit, read_labeled_column, scaled_mean_diff, Dataset};
use confound_core::{parse_dag, CausalDag};
use serde::Serialize;
use serde_json::json;

use crate::manifest::RunManifest;
use crate::{Cli, Command, DagArgs, EvalueArgs, FitArgs, GenerateArgs, ProcessName, SimulateArgs, SmdArgs, Solve, TipArgs, TipGridArgs};

/// Exit status for "no adjustment set of observed variables exists".
const NO_OBSERVED_SET: u8 = 2;

/// Environment variable overriding the simulation thread count.
pub const THREADS_ENV: &str = "CONFOUND_THREADS";

pub fn run(cli: &Cli) -> Result<ExitCode> {
    if cli.explain {
        eprintln!("{}", explain(&cli.command));
    }
    match &cli.command {
        Command::Adjust(args) => adjust(cli, args),
        Command::Augment(args) => augment(cli, args),
        Command::Fit(args) => fit(cli, args),
        Command::Smd(args) => smd(cli, args),
        Command::Tip(args) => tip(cli, args),
        Command::TipGrid(args) => tip_grid(cli, args),
        Command::Evalue(args) => evalue(cli, args),
        Command::Simulate(args) => simulate(cli, args),
        Command::Generate(args) => generate(cli, args),
    }
}

fn explain(command: &Command) -> &'static str {
    match command {
        Command::Adjust(_) => {
            "step 3 of 6, adjustment sets: which covariates to condition on so the \
             treatment coefficient is unconfounded (after 1 variables, 2 causal DAG)"
        }
        Command::Augment(_) => {
            "step 3 of 6, adjustment sets: how each hypothetical unmeasured confounder \
             changes the available adjustment sets"
        }
        Command::Fit(_) | Command::Smd(_) | Command::Generate(_) => {
            "step 4 of 6, ballpark estimates: rough strengths of the main relations, \
             as input to the sensitivity analysis"
        }
        Command::Tip(_) | Command::TipGrid(_) | Command::Evalue(_) => {
            "step 5 of 6, sensitivity analysis: how strong an unmeasured confounder must \
             be to cancel the measured effect"
        }
        Command::Simulate(_) => {
            "step 6 of 6, simulation analysis: bias and precision of the planned \
             regression under assumed confounding and realistic sample sizes"
        }
    }
}

fn emit<R: Serialize>(cli: &Cli, manifest: &RunManifest, text: &str, report: &R) -> Result<()> {
    let mut out = std::io::stdout().lock();
    if cli.json {
        let doc = json!({ "manifest": manifest, "report": report });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)?;
    } else {
        write!(out, "{text}")?;
        if !text.ends_with('\n') {
            writeln!(out)?;
        }
        write!(out, "{}", manifest.to_comment_lines())?;
    }
    Ok(())
}

/// Like `emit`, but keeps stdout a plain CSV in text mode.
fn emit_csv<R: Serialize>(cli: &Cli, manifest: &RunManifest, csv: &str, report: &R) -> Result<()> {
    if cli.json {
        return emit(cli, manifest, csv, report);
    }
    std::io::stdout().lock().write_all(csv.as_bytes())?;
    eprint!("{}", manifest.to_comment_lines());
    Ok(())
}

fn load_dag(manifest: &mut RunManifest, path: &str) -> Result<CausalDag> {
    let text = manifest.read_text(path)?;
    parse_dag(&text).with_context(|| format!("invalid DAG in `{path}`"))
}

fn load_query(manifest: &mut RunManifest, args: &DagArgs) -> Result<CausalQuery> {
    let dag = load_dag(manifest, &args.dag)?;
    Ok(CausalQuery::with_roles(
        dag,
        args.treatment.as_deref(),
        args.outcome.as_deref(),
    )?)
}

fn format_sets(sets: &[AdjustmentSet]) -> String {
    sets.iter().map(|s| format!("{s}\n")).collect()
}

fn adjust(cli: &Cli, args: &DagArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::new("adjust");
    let query = load_query(&mut manifest, args)?;
    let observed = query.minimal_adjustment_sets(true);
    let sets = if args.with_latents {
        query.minimal_adjustment_sets(false)
    } else {
        observed.clone()
    };
    let mut text = format!(
        "minimal adjustment sets for {} -> {}{}:\n",
        query.treatment(),
        query.outcome(),
        if args.with_latents { " (latent nodes allowed)" } else { "" }
    );
    if sets.is_empty() {
        text.push_str("(none)\n");
    } else {
        text.push_str(&format_sets(&sets));
    }
    if observed.is_empty() {
        text.push_str("no adjustment set of observed variables exists\n");
    }
    let report = json!({
        "treatment": query.treatment(),
        "outcome": query.outcome(),
        "with_latents": args.with_latents,
        "sets": sets,
        "observed_adjustable": !observed.is_empty(),
    });
    emit(cli, &manifest, &text, &report)?;
    Ok(if observed.is_empty() {
        ExitCode::from(NO_OBSERVED_SET)
    } else {
        ExitCode::SUCCESS
    })
}

fn augment(cli: &Cli, args: &DagArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::new("augment");
    let query = load_query(&mut manifest, args)?;
    let report = edge_confounder_report(&query)?;
    let text = format!(
        "adjustment sets for {} -> {} with a latent confounder on each edge:\n{}",
        query.treatment(),
        query.outcome(),
        report.to_table()
    );
    emit(cli, &manifest, &text, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn load_dataset(manifest: &mut RunManifest, path: &str) -> Result<Dataset> {
    let bytes = manifest.read_input(path)?;
    Dataset::from_csv(bytes.as_slice()).with_context(|| format!("cannot load `{path}`"))
}

fn fit(cli: &Cli, args: &FitArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::new("fit");
    let data = load_dataset(&mut manifest, &args.csv)?;
    let fit = ols_fit(&data, &args.outcome, &args.predictors)?;
    let mut text = format!("{} ~ 1 + {} (n = {})\n", fit.outcome, args.predictors.join(" + "), fit.n);
    if args.predictors.is_empty() {
        text = format!("{} ~ 1 (n = {})\n", fit.outcome, fit.n);
    }
    text.push_str(&format!("{:<12} {:>12} {:>12}\n", "term", "estimate", "std.error"));
    text.push_str(&format!(
        "{:<12} {:>12.6} {:>12.6}\n",
        "(intercept)", fit.intercept, fit.intercept_std_error
    ));
    for p in &args.predictors {
        text.push_str(&format!(
            "{:<12} {:>12.6} {:>12.6}\n",
            p, fit.coefficients[p], fit.std_errors[p]
        ));
    }
    text.push_str(&format!("sigma = {:.6}\n", fit.sigma));
    emit(cli, &manifest, &text, &fit)?;
    Ok(ExitCode::SUCCESS)
}

fn smd(cli: &Cli, args: &SmdArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::new("smd");
    let bytes = manifest.read_input(&args.csv)?;
    let (values, labels) = read_labeled_column(bytes.as_slice(), &args.value, &args.group)
        .with_context(|| format!("cannot load `{}`", args.csv))?;
    let smd = scaled_mean_diff(&values, &labels, &args.treat, &args.reference)?;
    let text = format!(
        "SMD of {} between {} = {} and {} = {}: {smd:.6}\n",
        args.value, args.group, args.treat, args.group, args.reference
    );
    let report = json!({
        "value": args.value,
        "group": args.group,
        "treat": args.treat,
        "reference": args.reference,
        "smd": smd,
    });
    emit(cli, &manifest, &text, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn tip(cli: &Cli, args: &TipArgs) -> Result<ExitCode> {
    let manifest = RunManifest::new("tip");
    let observed = args.observed;
    let (smd, effect) = (args.smd, args.effect);
    match (args.solve, smd, effect) {
        (Solve::Smd, None, Some(_)) | (Solve::Effect, Some(_), None) => {}
        (Solve::N | Solve::Adjusted, Some(_), Some(_)) => {}
        (Solve::Smd, _, _) => bail!("--solve smd takes --effect and no --smd"),
        (Solve::Effect, _, _) => bail!("--solve effect takes --smd and no --effect"),
        (Solve::N, _, _) => bail!("--solve n takes both --smd and --effect"),
        (Solve::Adjusted, _, _) => bail!("--solve adjusted takes both --smd and --effect"),
    }
    if args.n_confounders != 1 && args.solve != Solve::Adjusted {
        bail!("--n-confounders only applies to --solve adjusted");
    }
    let report = if args.solve == Solve::Adjusted {
        let (s, e) = (smd.unwrap_or_default(), effect.unwrap_or_default());
        let tipping = adjusted_effect(observed, s, e, f64::from(args.n_confounders))?;
        TipReport {
            measured_effect: observed,
            estimates: [("smd".to_string(), s), ("outcome_effect".to_string(), e)]
                .into_iter()
                .collect(),
            tipping,
            whole_confounders: None,
        }
    } else {
        TipReport::solve(&TipInput {
            observed_effect: observed,
            confounder_outcome_effect: effect,
            confounder_smd: smd,
            n_confounders: 1,
        })?
    };
    let v = report.tipping.value;
    let text = match report.tipping.kind {
        TipKind::SmdNeeded => format!(
            "smd needed: {v:.3}\nAn SMD of {v:.3} would suffice to flip the sign of the measured effect {observed}.\n"
        ),
        TipKind::OutcomeEffectNeeded => format!(
            "outcome effect needed: {v:.3}\nA confounder effect on the outcome of {v:.3} would suffice to flip the sign of the measured effect {observed}.\n"
        ),
        TipKind::NConfoundersNeeded => {
            let whole = report.whole_confounders.unwrap_or_default();
            format!(
                "confounders needed: {v:.2}\n{v:.2} confounders of this strength cancel the measured effect {observed}; \
                 {whole} are needed to strictly flip its sign (rounded to the nearest count: {}).\n",
                v.round()
            )
        }
        TipKind::AdjustedEffect => format!(
            "adjusted effect: {v:.4}\nAfter adjusting for {} confounder(s) of this strength the effect is {v:.4}{}.\n",
            args.n_confounders,
            if v * observed < 0.0 { ", with the sign flipped" } else { "" }
        ),
    };
    emit(cli, &manifest, &text, &report)?;
    Ok(ExitCode::SUCCESS)
}

fn tip_grid(cli: &Cli, args: &TipGridArgs) -> Result<ExitCode> {
    let manifest = RunManifest::new("tip-grid");
    let smd: ValueRange = args.smd_range.parse()?;
    let effect: ValueRange = args.effect_range.parse()?;
    let rows = tipping_grid(&args.observed, &smd, &effect);
    let mut csv = Vec::new();
    write_tipping_csv(&rows, &mut csv)?;
    emit_csv(cli, &manifest, &String::from_utf8(csv)?, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn evalue(cli: &Cli, args: &EvalueArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::new("evalue");
    let (estimate, std_error, sigma) = match &args.fit {
        Some(path) => {
            if args.estimate.is_some() || args.sigma.is_some() || args.se.is_some() {
                bail!("--fit replaces --estimate, --se and --sigma");
            }
            let data = load_dataset(&mut manifest, path)?;
            let treatment = args.treatment.as_deref().context("--fit needs --treatment")?;
            let outcome = args.outcome.as_deref().context("--fit needs --outcome")?;
            let mut predictors = vec![treatment.to_string()];
            predictors.extend(args.covariates.iter().cloned());
            let fit = ols_fit(&data, outcome, &predictors)?;
            (fit.coefficients[treatment], Some(fit.std_errors[treatment]), fit.sigma)
        }
        None => (
            args.estimate.context("missing --estimate (or --fit)")?,
            args.se,
            args.sigma.context("missing --sigma (or --fit)")?,
        ),
    };
    match (args.delta, &args.delta_range) {
        (Some(delta), None) => {
            let input = EValueInput {
                estimate,
                std_error: std_error.unwrap_or(0.0),
                residual_sd: sigma,
                delta,
            };
            let result = evalue_ols(&input, std_error.is_some())?;
            let mut text = format!("E-value: {:.3}\n", result.point);
            if let Some(ci) = result.ci_bound {
                text.push_str(&format!("E-value for the confidence limit: {ci:.3}\n"));
            }
            let report = json!({ "input": input, "result": result });
            emit(cli, &manifest, &text, &report)?;
        }
        (None, Some(range)) => {
            let deltas: ValueRange = range.parse()?;
            let fits = [FitSummary {
                label: args.label.clone(),
                estimate,
                std_error: std_error.unwrap_or(0.0),
                residual_sd: sigma,
            }];
            let rows = evalue_curve(&fits, &deltas)?;
            let mut csv = Vec::new();
            write_evalue_csv(&rows, &mut csv)?;
            emit_csv(cli, &manifest, &String::from_utf8(csv)?, &rows)?;
        }
        _ => bail!("give exactly one of --delta and --delta-range"),
    }
    Ok(ExitCode::SUCCESS)
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_ENV) {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("{THREADS_ENV} must be a positive integer, got `{value}`"))?;
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::new("simulate");
    let text = manifest.read_text(&args.config)?;
    let mut config =
        SweepConfig::parse(&text).with_context(|| format!("invalid config `{}`", args.config))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(reps) = args.repetitions {
        config.repetitions = reps;
    }
    manifest.seed = Some(config.seed);
    let result = thread_pool()?.install(|| run_sweep(&config))?;
    let failed = result.cells.iter().filter(|c| c.summary.is_none()).count();

    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create `{path}`"))?;
            let mut w = BufWriter::new(file);
            result.write_csv(&mut w)?;
            w.flush()?;
            let manifest_path = format!("{path}.manifest.json");
            std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")
                .with_context(|| format!("cannot write `{manifest_path}`"))?;
            let summary = format!(
                "{} cells ({} failed) written to {path}\nmanifest written to {manifest_path}\n",
                result.cells.len(),
                failed
            );
            let report = json!({
                "cells": result.cells.len(),
                "failed_cells": failed,
                "csv": path,
                "manifest": manifest_path,
            });
            emit(cli, &manifest, &summary, &report)?;
        }
        None if cli.json => emit(cli, &manifest, "", &result)?,
        None => {
            let mut out = std::io::stdout().lock();
            result.write_csv(&mut out)?;
            eprint!("{}", manifest.to_comment_lines());
        }
    }
    if !result.any_succeeded() {
        bail!("every cell failed");
    }
    Ok(ExitCode::SUCCESS)
}

fn generate(cli: &Cli, args: &GenerateArgs) -> Result<ExitCode> {
    let mut manifest = RunManifest::new("generate");
    manifest.seed = Some(args.seed);
    let process = match args.process {
        ProcessName::P1 => Process::P1,
        ProcessName::P2 => Process::P2,
        ProcessName::P3 => Process::P3,
    };
    let params = ProcessParams {
        b: args.b,
        c: args.c,
        d: args.d,
    };
    let data = fixtures::process_scm(process, params).sample(args.n, args.seed);
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create `{path}`"))?;
            let mut w = BufWriter::new(file);
            data.write_csv(&mut w)?;
            w.flush()?;
            let text = format!("{} rows of {:?} written to {path}\n", args.n, args.process);
            let report = json!({ "rows": args.n, "columns": data.columns(), "csv": path });
            emit(cli, &manifest, &text, &report)?;
        }
        None => {
            let mut out = std::io::stdout().lock();
            data.write_csv(&mut out)?;
            eprint!("{}", manifest.to_comment_lines());
        }
    }
    Ok(ExitCode::SUCCESS)
}
