use serde::Serialize;

use super::StatsError;

/// A closed interval `[low, high]` holding a `mass` fraction of samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub mass: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.high - self.low
    }

    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.low <= other.low && other.high <= self.high
    }
}

/// Highest-density interval of `samples`: the narrowest window over the
/// sorted samples covering `ceil(mass * n)` of them. Ties go to the window
/// that starts first.
pub fn hpdi(samples: &[f64], mass: f64) -> Result<Interval, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySamples);
    }
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(StatsError::InvalidMass(mass));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // Guard the ceiling against products like 0.5 * 10 = 5.000000000000001.
    let k = ((mass * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let k = k.min(n);
    let mut best = 0;
    let mut best_width = f64::INFINITY;
    for start in 0..=n - k {
        let width = sorted[start + k - 1] - sorted[start];
        if width < best_width {
            best_width = width;
            best = start;
        }
    }
    Ok(Interval {
        low: sorted[best],
        high: sorted[best + k - 1],
        mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples() {
        let i = hpdi(&[2.5; 7], 0.5).unwrap();
        assert_eq!((i.low, i.high), (2.5, 2.5));
    }

    #[test]
    fn outlier_is_excluded() {
        let i = hpdi(&[4.0, 100.0, 1.0, 3.0, 2.0], 0.6).unwrap();
        assert_eq!((i.low, i.high), (1.0, 3.0));
    }

    #[test]
    fn earliest_window_wins_ties() {
        let s: Vec<f64> = (0..10).map(f64::from).collect();
        let i = hpdi(&s, 0.5).unwrap();
        assert_eq!((i.low, i.high), (0.0, 4.0));
    }

    #[test]
    fn full_mass_is_range() {
        let i = hpdi(&[3.0, -1.0, 7.0], 1.0).unwrap();
        assert_eq!((i.low, i.high), (-1.0, 7.0));
    }

    #[test]
    fn errors() {
        assert_eq!(hpdi(&[], 0.5).unwrap_err(), StatsError::EmptySamples);
        assert_eq!(hpdi(&[1.0], 0.0).unwrap_err(), StatsError::InvalidMass(0.0));
        assert_eq!(hpdi(&[1.0], 1.5).unwrap_err(), StatsError::InvalidMass(1.5));
    }
}
