//! Tipping points under a linear single-confounder correction: a
//! confounder with standardized mean difference `smd` between treatment
//! groups and effect `effect` on the outcome shifts the measured effect by
//! `smd * effect`; `n` identical confounders shift it `n` times as much.

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use super::{SensitivityError, ValueRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TipKind {
    SmdNeeded,
    OutcomeEffectNeeded,
    NConfoundersNeeded,
    AdjustedEffect,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TipResult {
    pub kind: TipKind,
    pub value: f64,
}

/// Inputs of a tipping analysis; which optional fields are needed depends
/// on the quantity being solved for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TipInput {
    pub observed_effect: f64,
    pub confounder_outcome_effect: Option<f64>,
    pub confounder_smd: Option<f64>,
    pub n_confounders: u32,
}

fn finite(v: f64, what: &'static str) -> Result<f64, SensitivityError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(SensitivityError::NonFinite(what))
    }
}

fn result(kind: TipKind, value: f64) -> Result<TipResult, SensitivityError> {
    Ok(TipResult {
        kind,
        value: finite(value, "result")?,
    })
}

/// Effect left after removing `n_confounders` confounders of the given strength.
pub fn adjusted_effect(
    observed: f64,
    smd: f64,
    outcome_effect: f64,
    n_confounders: f64,
) -> Result<TipResult, SensitivityError> {
    finite(observed, "observed effect")?;
    finite(smd, "SMD")?;
    finite(outcome_effect, "outcome effect")?;
    if !(n_confounders >= 1.0) {
        return Err(SensitivityError::InvalidInput(
            "number of confounders must be at least 1".into(),
        ));
    }
    result(TipKind::AdjustedEffect, observed - n_confounders * smd * outcome_effect)
}

/// SMD that brings the adjusted effect to exactly zero.
pub fn tip_smd(observed: f64, outcome_effect: f64) -> Result<TipResult, SensitivityError> {
    finite(observed, "observed effect")?;
    if finite(outcome_effect, "outcome effect")? == 0.0 {
        return Err(SensitivityError::ZeroOutcomeEffect);
    }
    result(TipKind::SmdNeeded, observed / outcome_effect)
}

/// Confounder-outcome effect that brings the adjusted effect to zero.
pub fn tip_outcome_effect(observed: f64, smd: f64) -> Result<TipResult, SensitivityError> {
    finite(observed, "observed effect")?;
    if finite(smd, "SMD")? == 0.0 {
        return Err(SensitivityError::ZeroSmd);
    }
    result(TipKind::OutcomeEffectNeeded, observed / smd)
}

/// Number of identical confounders that brings the adjusted effect to zero,
/// as a real number; round up for a whole count that strictly flips the sign.
pub fn tip_n_confounders(
    observed: f64,
    smd: f64,
    outcome_effect: f64,
) -> Result<TipResult, SensitivityError> {
    finite(observed, "observed effect")?;
    let product = finite(smd, "SMD")? * finite(outcome_effect, "outcome effect")?;
    if product == 0.0 {
        return Err(SensitivityError::CannotTip(f64::INFINITY));
    }
    let ratio = observed / product;
    if !(ratio > 0.0) {
        return Err(SensitivityError::CannotTip(ratio));
    }
    result(TipKind::NConfoundersNeeded, ratio)
}

/// One point on a tipping curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TippingPoint {
    pub observed: f64,
    pub smd: f64,
    pub effect: f64,
}

/// For each observed effect, points `(smd, effect)` inside both ranges with
/// `smd * effect = observed`. Points come from sweeping each range and
/// solving for the other coordinate, sorted by SMD.
pub fn tipping_grid(
    observed_effects: &[f64],
    smd_range: &ValueRange,
    effect_range: &ValueRange,
) -> Vec<TippingPoint> {
    let mut rows = Vec::new();
    for &observed in observed_effects {
        let mut curve = Vec::new();
        if observed == 0.0 {
            curve.extend(smd_range.values().into_iter().map(|smd| (smd, 0.0)));
            curve.extend(effect_range.values().into_iter().map(|effect| (0.0, effect)));
            curve.retain(|&(s, e)| smd_range.contains(s) && effect_range.contains(e));
        } else {
            for smd in smd_range.values() {
                if smd != 0.0 && effect_range.contains(observed / smd) {
                    curve.push((smd, observed / smd));
                }
            }
            for effect in effect_range.values() {
                if effect != 0.0 && smd_range.contains(observed / effect) {
                    curve.push((observed / effect, effect));
                }
            }
        }
        curve.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        curve.dedup();
        rows.extend(curve.into_iter().map(|(smd, effect)| TippingPoint {
            observed,
            smd,
            effect,
        }));
    }
    rows
}

/// CSV with header `observed,smd,effect`.
pub fn write_tipping_csv<W: Write>(rows: &[TippingPoint], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["observed", "smd", "effect"])?;
    for r in rows {
        w.write_record([r.observed.to_string(), r.smd.to_string(), r.effect.to_string()])?;
    }
    w.flush()
}

/// Measured effect, the assumed confounder strengths, and the tipping value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TipReport {
    pub measured_effect: f64,
    pub estimates: BTreeMap<String, f64>,
    pub tipping: TipResult,
    /// Confounder count rounded up; only for the confounder-count scenario.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub whole_confounders: Option<u64>,
}

impl TipReport {
    /// Runs whichever scenario the present fields of `input` select:
    /// effect only → SMD needed; SMD only → effect needed; both → count.
    pub fn solve(input: &TipInput) -> Result<TipReport, SensitivityError> {
        let observed = input.observed_effect;
        let mut estimates = BTreeMap::new();
        let (tipping, whole) = match (input.confounder_smd, input.confounder_outcome_effect) {
            (None, Some(effect)) => {
                estimates.insert("outcome_effect".to_string(), effect);
                (tip_smd(observed, effect)?, None)
            }
            (Some(smd), None) => {
                estimates.insert("smd".to_string(), smd);
                (tip_outcome_effect(observed, smd)?, None)
            }
            (Some(smd), Some(effect)) => {
                estimates.insert("smd".to_string(), smd);
                estimates.insert("outcome_effect".to_string(), effect);
                let r = tip_n_confounders(observed, smd, effect)?;
                (r, Some(r.value.ceil() as u64))
            }
            (None, None) => {
                return Err(SensitivityError::InvalidInput(
                    "need a confounder SMD, a confounder outcome effect, or both".into(),
                ))
            }
        };
        Ok(TipReport {
            measured_effect: observed,
            estimates,
            tipping,
            whole_confounders: whole,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjusted_effect_examples() {
        assert_eq!(adjusted_effect(-0.052, 0.0, 0.835, 1.0).unwrap().value, -0.052);
        assert!(adjusted_effect(-0.052, -0.062, 0.835, 1.0).unwrap().value.abs() < 0.001);
        let two = adjusted_effect(-0.052, -0.15, 0.17, 2.0).unwrap().value;
        assert!((two + 0.001).abs() < 1e-12, "{two}");
        assert!(adjusted_effect(1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn tip_values() {
        assert!((tip_smd(-0.052, 0.835).unwrap().value + 0.062).abs() < 0.0005);
        assert_eq!(tip_smd(0.0, 3.0).unwrap().value, 0.0);
        assert!((tip_smd(0.10, 0.50).unwrap().value - 0.2).abs() < 1e-15);
        assert_eq!(tip_smd(1.0, 0.0).unwrap_err(), SensitivityError::ZeroOutcomeEffect);

        assert!((tip_outcome_effect(-0.052, -1.545).unwrap().value - 0.034).abs() < 0.0005);
        assert_eq!(tip_outcome_effect(0.0, -2.0).unwrap().value, 0.0);
        assert!((tip_outcome_effect(0.10, 0.20).unwrap().value - 0.5).abs() < 1e-15);
        assert_eq!(tip_outcome_effect(1.0, 0.0).unwrap_err(), SensitivityError::ZeroSmd);

        assert!((tip_n_confounders(-0.052, -0.15, 0.17).unwrap().value - 2.04).abs() < 0.02);
        assert_eq!(tip_n_confounders(-0.052, -0.052, 1.0).unwrap().value, 1.0);
        assert!((tip_n_confounders(0.30, 0.10, 0.30).unwrap().value - 10.0).abs() < 1e-12);
        assert!(matches!(
            tip_n_confounders(0.3, -0.1, 0.3),
            Err(SensitivityError::CannotTip(_))
        ));
        assert!(matches!(
            tip_n_confounders(0.3, 0.0, 0.3),
            Err(SensitivityError::CannotTip(_))
        ));
        assert!(tip_smd(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn report_scenarios() {
        let base = TipInput {
            observed_effect: -0.052,
            confounder_outcome_effect: None,
            confounder_smd: None,
            n_confounders: 1,
        };
        assert!(TipReport::solve(&base).is_err());
        let r = TipReport::solve(&TipInput {
            confounder_outcome_effect: Some(0.835),
            ..base
        })
        .unwrap();
        assert_eq!(r.tipping.kind, TipKind::SmdNeeded);
        let r = TipReport::solve(&TipInput {
            confounder_smd: Some(-0.15),
            confounder_outcome_effect: Some(0.17),
            ..base
        })
        .unwrap();
        assert_eq!(r.tipping.kind, TipKind::NConfoundersNeeded);
        assert_eq!(r.whole_confounders, Some(3));
    }

    #[test]
    fn grid_passes_through_reported_scenarios() {
        let smd = ValueRange::new(-2.0, 0.0, 0.001).unwrap();
        let effect = ValueRange::new(0.0, 1.0, 0.001).unwrap();
        let rows = tipping_grid(&[-0.052], &smd, &effect);
        assert!(!rows.is_empty());
        for (s, e) in [(-1.545, 0.034), (-0.062, 0.835)] {
            let dist = |r: &TippingPoint| (r.smd - s).abs().max((r.effect - e).abs());
            let nearest = rows.iter().min_by(|a, b| dist(a).total_cmp(&dist(b))).unwrap();
            assert!(dist(nearest) < 0.001, "{nearest:?}");
        }
        for r in &rows {
            let adj = adjusted_effect(r.observed, r.smd, r.effect, 1.0).unwrap().value;
            assert!(adj.abs() < 1e-9);
        }
    }

    #[test]
    fn zero_observed_is_degenerate() {
        let smd = ValueRange::new(-1.0, 1.0, 0.5).unwrap();
        let effect = ValueRange::new(0.0, 1.0, 0.5).unwrap();
        let rows = tipping_grid(&[0.0], &smd, &effect);
        assert!(rows.iter().all(|r| r.smd * r.effect == 0.0));
        assert!(rows.iter().any(|r| r.smd == 0.0 && r.effect == 1.0));
        assert!(rows.iter().any(|r| r.smd == -1.0 && r.effect == 0.0));
    }
}
