//! E-values for a continuous outcome from a linear-regression coefficient,
//! via the standardized-difference to risk-ratio approximation
//! `RR = exp(0.91 d)`.

use std::io::Write;

use serde::Serialize;

use super::{SensitivityError, ValueRange};

const RR_PER_SD: f64 = 0.91;
const Z_95: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EValueInput {
    pub estimate: f64,
    pub std_error: f64,
    pub residual_sd: f64,
    /// Treatment contrast of interest.
    pub delta: f64,
}

impl EValueInput {
    fn validate(&self) -> Result<(), SensitivityError> {
        for (v, what) in [
            (self.estimate, "estimate"),
            (self.std_error, "standard error"),
            (self.residual_sd, "residual sd"),
            (self.delta, "delta"),
        ] {
            if !v.is_finite() {
                return Err(SensitivityError::NonFinite(what));
            }
        }
        if self.std_error < 0.0 {
            return Err(SensitivityError::InvalidInput(
                "standard error must be nonnegative".into(),
            ));
        }
        if !(self.residual_sd > 0.0) {
            return Err(SensitivityError::InvalidInput("residual sd must be positive".into()));
        }
        if !(self.delta > 0.0) {
            return Err(SensitivityError::InvalidInput("delta must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EValueResult {
    pub point: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci_bound: Option<f64>,
}

fn evalue_from_d(d: f64) -> Result<f64, SensitivityError> {
    // exp(0.91 |d|) is the risk ratio already inverted to be >= 1.
    let rr = (RR_PER_SD * d.abs()).exp();
    let e = rr + (rr * (rr - 1.0)).sqrt();
    if e.is_finite() {
        Ok(e)
    } else {
        Err(SensitivityError::NonFinite("E-value"))
    }
}

pub fn evalue_ols(input: &EValueInput, use_ci: bool) -> Result<EValueResult, SensitivityError> {
    input.validate()?;
    let scale = input.delta / input.residual_sd;
    let point = evalue_from_d(input.estimate * scale)?;
    let ci_bound = if use_ci {
        let half = Z_95 * input.std_error;
        let (low, high) = (input.estimate - half, input.estimate + half);
        let near = if low <= 0.0 && high >= 0.0 {
            0.0
        } else if input.estimate > 0.0 {
            low
        } else {
            high
        };
        Some(evalue_from_d(near * scale)?)
    } else {
        None
    };
    Ok(EValueResult { point, ci_bound })
}

/// A fitted treatment coefficient to draw an E-value curve for.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitSummary {
    pub label: String,
    pub estimate: f64,
    pub std_error: f64,
    pub residual_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EValuePoint {
    pub label: String,
    pub delta: f64,
    pub evalue: f64,
}

/// Point E-values for every fit and every delta in `deltas`, fit-major.
pub fn evalue_curve(
    fits: &[FitSummary],
    deltas: &ValueRange,
) -> Result<Vec<EValuePoint>, SensitivityError> {
    let deltas = deltas.values();
    if deltas.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
        return Err(SensitivityError::InvalidInput("deltas must lie in (0, 1]".into()));
    }
    let mut rows = Vec::with_capacity(fits.len() * deltas.len());
    for fit in fits {
        for &delta in &deltas {
            let input = EValueInput {
                estimate: fit.estimate,
                std_error: fit.std_error,
                residual_sd: fit.residual_sd,
                delta,
            };
            rows.push(EValuePoint {
                label: fit.label.clone(),
                delta,
                evalue: evalue_ols(&input, false)?.point,
            });
        }
    }
    Ok(rows)
}

/// CSV with header `label,delta,evalue`.
pub fn write_evalue_csv<W: Write>(rows: &[EValuePoint], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["label", "delta", "evalue"])?;
    for r in rows {
        w.write_record([r.label.clone(), r.delta.to_string(), r.evalue.to_string()])?;
    }
    w.flush()
}
