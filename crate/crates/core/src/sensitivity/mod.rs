//! Tipping-point analyses for a single standardized confounder and
//! E-values for continuous outcomes, plus plot-ready curve tables.

mod evalue;
mod tipping;

pub use evalue::{evalue_curve, evalue_ols, write_evalue_csv, EValueInput, EValuePoint, EValueResult, FitSummary};
pub use tipping::{
    adjusted_effect, tip_n_confounders, tip_outcome_effect, tip_smd, tipping_grid,
    write_tipping_csv, TipInput, TipKind, TipReport, TipResult, TippingPoint,
};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensitivityError {
    #[error("outcome effect must be nonzero")]
    ZeroOutcomeEffect,
    #[error("SMD must be nonzero")]
    ZeroSmd,
    #[error("confounding of this direction cannot tip the effect (ratio {0})")]
    CannotTip(f64),
    #[error("{0} must be finite")]
    NonFinite(&'static str),
    #[error("{0}")]
    InvalidInput(String),
}

/// Evenly spaced values `start, start + step, ..., end` (inclusive up to
/// rounding), written `start:end:step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl ValueRange {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self, SensitivityError> {
        if !(start.is_finite() && end.is_finite() && step.is_finite()) {
            return Err(SensitivityError::NonFinite("range bound"));
        }
        if !(step > 0.0) || end < start {
            return Err(SensitivityError::InvalidInput(format!(
                "range {start}:{end}:{step} must have start <= end and a positive step"
            )));
        }
        Ok(ValueRange { start, end, step })
    }

    /// A range holding one value.
    pub fn single(value: f64) -> Self {
        ValueRange {
            start: value,
            end: value,
            step: 1.0,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let count = ((self.end - self.start) / self.step + 1e-9).floor() as usize;
        (0..=count)
            .map(|i| {
                let v = self.start + i as f64 * self.step;
                // Snap off accumulated binary noise so 0.01 * 30 prints as 0.3.
                (v * 1e12).round() / 1e12
            })
            .collect()
    }

    pub fn contains(&self, v: f64) -> bool {
        self.start - 1e-12 <= v && v <= self.end + 1e-12
    }
}

impl FromStr for ValueRange {
    type Err = SensitivityError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| SensitivityError::InvalidInput(format!("invalid number `{p}` in range")))
        };
        match parts.as_slice() {
            [start, end, step] => ValueRange::new(num(start)?, num(end)?, num(step)?),
            _ => Err(SensitivityError::InvalidInput(format!(
                "expected `start:end:step`, got `{s}`"
            ))),
        }
    }
}

impl fmt::Display for ValueRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.step)
    }
}
