//! Monte Carlo sensitivity sweep: for every grid point and sample size,
//! repeatedly sample the model, refit the regression, and summarize the
//! recorded treatment coefficients.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::rng::{derive_seed, hash_bytes, SimRng};
use crate::stats::{self, hpdi, min_norm_fit, ols_fit, ridge_fit, Dataset, Interval, StatsError};

use super::config::{SweepConfig, Underdetermined};
use super::{ScmError, ScmSpec};

/// Extra draws allowed after a rank-deficient sample.
pub const MAX_RETRIES: usize = 3;

/// Closed-form mean of the treatment coefficient when the regression omits
/// a standard-normal confounder with effects `gamma_e` (on the outcome) and
/// `gamma_t` (on the treatment, which has unit residual sd).
pub fn expected_treatment_estimate(t_e: f64, gamma_e: f64, gamma_t: f64) -> f64 {
    t_e + gamma_e * gamma_t / (1.0 + gamma_t * gamma_t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub mean: f64,
    /// Sample sd of the recorded estimates.
    pub sd: f64,
    pub hpdi50: Interval,
    pub hpdi95: Interval,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    /// Values of the grid parameters, in declared order.
    pub point: Vec<f64>,
    pub n: usize,
    pub successes: usize,
    pub failures: usize,
    /// `None` when more than 10% of repetitions failed.
    pub summary: Option<CellSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub parameters: Vec<String>,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    pub fn cell(&self, point: &[f64], n: usize) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.n == n && c.point == point)
    }

    pub fn any_succeeded(&self) -> bool {
        self.cells.iter().any(|c| c.summary.is_some())
    }

    /// Columns: grid parameters, `n`, `mean`, `l50`, `u50`, `l95`, `u95`,
    /// `failures`. Failed cells carry `NA` in the numeric summary columns.
    pub fn write_csv<W: Write>(&self, writer: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.parameters.iter().map(String::as_str).collect();
        header.extend(["n", "mean", "l50", "u50", "l95", "u95", "failures"]);
        w.write_record(&header)?;
        for cell in &self.cells {
            let mut record: Vec<String> = cell.point.iter().map(f64::to_string).collect();
            record.push(cell.n.to_string());
            match &cell.summary {
                Some(s) => record.extend(
                    [s.mean, s.hpdi50.low, s.hpdi50.high, s.hpdi95.low, s.hpdi95.high]
                        .iter()
                        .map(f64::to_string),
                ),
                None => record.extend(std::iter::repeat_n("NA".to_string(), 5)),
            }
            record.push(cell.failures.to_string());
            w.write_record(&record)?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = Vec::new();
        self.write_csv(&mut out).expect("writing to memory");
        String::from_utf8(out).expect("csv is utf-8")
    }
}

/// Runs the sweep. Cells are computed in parallel on the current rayon pool;
/// the result does not depend on the number of threads.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult, ScmError> {
    config.validate()?;
    let names = config.grid_names();
    let points = config.grid_points();
    let models: Vec<ScmSpec> = points
        .iter()
        .map(|p| config.template.instantiate(&config.bind(p)))
        .collect::<Result<_, _>>()?;

    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| config.sample_sizes.iter().map(move |&n| (p, n)))
        .collect();
    let cells = jobs
        .par_iter()
        .map(|&(p, n)| {
            let cell_seed = derive_seed(config.seed, &[point_key(&names, &points[p]), n as u64]);
            run_cell(config, &models[p], points[p].clone(), n, cell_seed)
        })
        .collect();
    Ok(SweepResult {
        parameters: names.iter().map(|s| s.to_string()).collect(),
        cells,
    })
}

/// Seed component identifying a grid point by its parameter values, so a
/// cell's draws do not depend on which other points are in the grid.
fn point_key(names: &[&str], point: &[f64]) -> u64 {
    let mut bytes = Vec::new();
    for (name, v) in names.iter().zip(point) {
        bytes.extend_from_slice(name.as_bytes());
        bytes.push(b'=');
        bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        bytes.push(b';');
    }
    hash_bytes(&bytes)
}

fn fit_treatment(config: &SweepConfig, data: &Dataset) -> Result<f64, StatsError> {
    let params = config.predictors.len() + 1;
    if data.n_rows() > params {
        let fit = ols_fit(data, &config.outcome, &config.predictors)?;
        Ok(fit.coefficients[&config.treatment])
    } else {
        match config.underdetermined {
            Underdetermined::Ridge => {
                let fit = ridge_fit(data, &config.outcome, &config.predictors, config.ridge_penalty)?;
                Ok(fit.coefficients[&config.treatment])
            }
            Underdetermined::MinNorm => {
                let fit = min_norm_fit(data, &config.outcome, &config.predictors)?;
                Ok(fit.coefficients[&config.treatment])
            }
            Underdetermined::Fail => Err(StatsError::InsufficientRows {
                rows: data.n_rows(),
                params,
            }),
        }
    }
}

fn run_cell(config: &SweepConfig, scm: &ScmSpec, point: Vec<f64>, n: usize, seed: u64) -> SweepCell {
    let mut estimates = Vec::with_capacity(config.repetitions);
    let mut failures = 0;
    for rep in 0..config.repetitions {
        let mut estimate = None;
        for attempt in 0..=MAX_RETRIES {
            let mut rng = SimRng::new(derive_seed(seed, &[rep as u64, attempt as u64]));
            let data = scm.sample_with(n, &mut rng);
            match fit_treatment(config, &data) {
                Ok(b) => {
                    estimate = Some(b);
                    break;
                }
                Err(StatsError::RankDeficient) => continue,
                Err(_) => break,
            }
        }
        match estimate {
            Some(b) => estimates.push(b),
            None => failures += 1,
        }
    }
    let summary = if failures * 10 > config.repetitions || estimates.is_empty() {
        None
    } else {
        Some(CellSummary {
            mean: stats::mean(&estimates),
            sd: if estimates.len() > 1 {
                stats::sample_sd(&estimates)
            } else {
                0.0
            },
            hpdi50: hpdi(&estimates, 0.5).expect("nonempty"),
            hpdi95: hpdi(&estimates, 0.95).expect("nonempty"),
        })
    };
    SweepCell {
        point,
        n,
        successes: estimates.len(),
        failures,
        summary,
    }
}
