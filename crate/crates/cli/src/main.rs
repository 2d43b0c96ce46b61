//! `confound`: causal-DAG adjustment sets, sensitivity analyses and
//! simulation sweeps from the command line.
//!
//! Subcommands follow the order of an observational study: `adjust` and
//! `augment` work on the DAG, `fit` and `smd` produce ballpark estimates,
//! `tip`, `tip-grid` and `evalue` probe their sensitivity, and `simulate`
//! checks the design on synthetic data. `generate` writes synthetic
//! datasets for the toy processes.
//!
//! Exit codes: 0 on success, 1 on input or usage errors, 2 when no
//! adjustment set of observed variables exists.

mod commands;
mod manifest;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "confound", version, about = "Omitted-variable-bias workflow for observational studies")]
struct Cli {
    /// Emit a JSON object `{"manifest": ..., "report": ...}` instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Print which step of the study workflow the command serves.
    #[arg(long, global = true)]
    explain: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimal adjustment sets for the treatment's effect on the outcome.
    Adjust(DagArgs),
    /// Adjustment sets after adding a hypothetical confounder to each edge.
    Augment(DagArgs),
    /// Fit a linear regression on a CSV file.
    Fit(FitArgs),
    /// Scaled-mean difference of a column between two groups.
    Smd(SmdArgs),
    /// Tipping point of a measured effect under a single confounder.
    Tip(TipArgs),
    /// Tipping curves `smd * effect = observed` as CSV.
    TipGrid(TipGridArgs),
    /// E-value of a regression coefficient, or a curve over deltas.
    Evalue(EvalueArgs),
    /// Run a simulation sweep from a config file.
    Simulate(SimulateArgs),
    /// Write a sample from one of the toy processes as CSV.
    Generate(GenerateArgs),
}

#[derive(Debug, Args)]
struct DagArgs {
    /// DAG file, or `builtin:productivity.dag` / `builtin:confounder-triangle.dag`.
    dag: String,
    /// Treatment node; defaults to the file's `treatment` declaration.
    #[arg(long, short)]
    treatment: Option<String>,
    /// Outcome node; defaults to the file's `outcome` declaration.
    #[arg(long, short)]
    outcome: Option<String>,
    /// Allow latent nodes in the reported sets.
    #[arg(long)]
    with_latents: bool,
}

#[derive(Debug, Args)]
struct FitArgs {
    csv: String,
    #[arg(long)]
    outcome: String,
    /// Comma-separated predictor columns; empty for an intercept-only fit.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    predictors: Vec<String>,
}

#[derive(Debug, Args)]
struct SmdArgs {
    csv: String,
    /// Numeric column.
    #[arg(long)]
    value: String,
    /// Column holding group labels.
    #[arg(long)]
    group: String,
    /// Label of the treated group.
    #[arg(long)]
    treat: String,
    /// Label of the reference group.
    #[arg(long)]
    reference: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solve {
    /// SMD needed, given `--effect`.
    Smd,
    /// Confounder-outcome effect needed, given `--smd`.
    Effect,
    /// Number of identical confounders needed, given `--smd` and `--effect`.
    N,
    /// Effect left after adjusting, given `--smd`, `--effect` and `--n-confounders`.
    Adjusted,
}

#[derive(Debug, Args)]
struct TipArgs {
    /// Measured treatment effect.
    #[arg(long, allow_hyphen_values = true)]
    observed: f64,
    /// Effect of the hypothetical confounder on the outcome.
    #[arg(long, allow_hyphen_values = true)]
    effect: Option<f64>,
    /// Scaled-mean difference of the confounder between treatment groups.
    #[arg(long, allow_hyphen_values = true)]
    smd: Option<f64>,
    #[arg(long, value_enum)]
    solve: Solve,
    #[arg(long, default_value_t = 1)]
    n_confounders: u32,
}

#[derive(Debug, Args)]
struct TipGridArgs {
    /// Comma-separated measured effects.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    observed: Vec<f64>,
    /// `start:end:step`
    #[arg(long, allow_hyphen_values = true)]
    smd_range: String,
    /// `start:end:step`
    #[arg(long, allow_hyphen_values = true)]
    effect_range: String,
}

#[derive(Debug, Args)]
struct EvalueArgs {
    /// Treatment coefficient.
    #[arg(long, allow_hyphen_values = true)]
    estimate: Option<f64>,
    /// Standard error of the coefficient; enables the CI-based E-value.
    #[arg(long)]
    se: Option<f64>,
    /// Residual standard deviation of the fit.
    #[arg(long)]
    sigma: Option<f64>,
    /// Treatment contrast of interest.
    #[arg(long, conflicts_with = "delta_range")]
    delta: Option<f64>,
    /// `start:end:step` for a curve.
    #[arg(long)]
    delta_range: Option<String>,
    /// Curve label.
    #[arg(long, default_value = "estimate")]
    label: String,
    /// Take estimate, standard error and sigma from an OLS fit of this CSV.
    #[arg(long, requires_all = ["outcome", "treatment"])]
    fit: Option<String>,
    #[arg(long)]
    outcome: Option<String>,
    #[arg(long)]
    treatment: Option<String>,
    #[arg(long, value_delimiter = ',')]
    covariates: Vec<String>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Config file, or `builtin:table5.conf`.
    config: String,
    /// Write the CSV here and the manifest to `<out>.manifest.json`.
    #[arg(long)]
    out: Option<String>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the config's repetition count.
    #[arg(long)]
    repetitions: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProcessName {
    P1,
    P2,
    P3,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    process: ProcessName,
    #[arg(long, short, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.4)]
    b: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.7)]
    c: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.2)]
    d: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// A closed downstream pipe (e.g. `| head`) is not an error.
fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
    })
}
