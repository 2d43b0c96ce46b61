use super::{mean, sample_sd, StatsError};

/// Scaled-mean difference of `values` between two groups:
/// `mean(treat) / sd(treat) - mean(reference) / sd(reference)`, with sample
/// standard deviations.
pub fn scaled_mean_diff<L: AsRef<str>>(
    values: &[f64],
    labels: &[L],
    treat: &str,
    reference: &str,
) -> Result<f64, StatsError> {
    if values.len() != labels.len() {
        return Err(StatsError::LengthMismatch(values.len(), labels.len()));
    }
    let standardized = |tag: &str| -> Result<f64, StatsError> {
        let group: Vec<f64> = values
            .iter()
            .zip(labels)
            .filter(|(_, l)| l.as_ref() == tag)
            .map(|(v, _)| *v)
            .collect();
        if group.is_empty() {
            return Err(StatsError::UnknownGroup(tag.to_string()));
        }
        if group.len() < 2 {
            return Err(StatsError::DegenerateGroup(tag.to_string()));
        }
        let sd = sample_sd(&group);
        if !(sd > 0.0) {
            return Err(StatsError::DegenerateGroup(tag.to_string()));
        }
        Ok(mean(&group) / sd)
    };
    Ok(standardized(treat)? - standardized(reference)?)
}
