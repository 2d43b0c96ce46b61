use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::linalg::Cholesky;
use super::{Dataset, StatsError};

/// An ordinary least-squares fit of `outcome ~ 1 + predictors`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub outcome: String,
    pub intercept: f64,
    pub intercept_std_error: f64,
    pub coefficients: BTreeMap<String, f64>,
    pub std_errors: BTreeMap<String, f64>,
    /// Residual standard deviation, `sqrt(RSS / (n - p))`.
    pub sigma: f64,
    pub n: usize,
}

impl FitResult {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.coefficients.get(name).copied()
    }

    pub fn std_error(&self, name: &str) -> Option<f64> {
        self.std_errors.get(name).copied()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit serializes")
    }
}

fn gather<'a, S: AsRef<str>>(
    data: &'a Dataset,
    outcome: &str,
    predictors: &[S],
) -> Result<(&'a [f64], Vec<&'a [f64]>), StatsError> {
    let y = data.column(outcome)?;
    let xs = predictors
        .iter()
        .map(|p| data.column(p.as_ref()))
        .collect::<Result<Vec<_>, _>>()?;
    let distinct: BTreeSet<&str> = predictors.iter().map(AsRef::as_ref).collect();
    if distinct.len() != predictors.len() || distinct.contains(outcome) {
        return Err(StatsError::RankDeficient);
    }
    Ok((y, xs))
}

struct Moments {
    y_mean: f64,
    x_means: Vec<f64>,
    /// Centered cross-product matrix, row-major.
    cross: Vec<f64>,
    /// Centered `X'y`.
    rhs: Vec<f64>,
}

fn centered_moments(y: &[f64], xs: &[&[f64]]) -> Moments {
    let n = y.len();
    let k = xs.len();
    let nf = n as f64;
    let y_mean = y.iter().sum::<f64>() / nf;
    let x_means: Vec<f64> = xs.iter().map(|x| x.iter().sum::<f64>() / nf).collect();
    let mut cross = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    let mut centered = vec![0.0; k];
    for i in 0..n {
        for j in 0..k {
            centered[j] = xs[j][i] - x_means[j];
        }
        let dy = y[i] - y_mean;
        for a in 0..k {
            rhs[a] += centered[a] * dy;
            for b in 0..=a {
                cross[a * k + b] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            cross[b * k + a] = cross[a * k + b];
        }
    }
    Moments {
        y_mean,
        x_means,
        cross,
        rhs,
    }
}

/// Fits `outcome` on an intercept plus `predictors` by least squares.
///
/// Slopes come from the centered normal equations, so a constant predictor
/// shows up as a zero pivot and is reported as rank deficiency.
pub fn ols_fit<S: AsRef<str>>(
    data: &Dataset,
    outcome: &str,
    predictors: &[S],
) -> Result<FitResult, StatsError> {
    let (y, xs) = gather(data, outcome, predictors)?;
    let n = data.n_rows();
    let k = xs.len();
    let params = k + 1;
    if n <= params {
        return Err(StatsError::InsufficientRows { rows: n, params });
    }
    let nf = n as f64;
    let Moments {
        y_mean,
        x_means,
        cross,
        rhs,
    } = centered_moments(y, &xs);
    let (slopes, inv_diag, inv_means) = if k == 0 {
        (Vec::new(), Vec::new(), Vec::new())
    } else {
        let chol = Cholesky::factor(cross, k).ok_or(StatsError::RankDeficient)?;
        (chol.solve(&rhs), chol.inverse_diagonal(), chol.solve(&x_means))
    };
    let intercept = y_mean - slopes.iter().zip(&x_means).map(|(b, m)| b * m).sum::<f64>();

    let rss: f64 = (0..n)
        .map(|i| {
            let fitted = intercept + (0..k).map(|j| slopes[j] * xs[j][i]).sum::<f64>();
            let r = y[i] - fitted;
            r * r
        })
        .sum();
    let sigma2 = rss / (n - params) as f64;
    let sigma = sigma2.sqrt();

    let mut coefficients = BTreeMap::new();
    let mut std_errors = BTreeMap::new();
    for (j, name) in predictors.iter().enumerate() {
        coefficients.insert(name.as_ref().to_string(), slopes[j]);
        std_errors.insert(name.as_ref().to_string(), (sigma2 * inv_diag[j]).sqrt());
    }
    let quad: f64 = x_means.iter().zip(&inv_means).map(|(m, v)| m * v).sum();
    Ok(FitResult {
        outcome: outcome.to_string(),
        intercept,
        intercept_std_error: (sigma2 * (1.0 / nf + quad)).sqrt(),
        coefficients,
        std_errors,
        sigma,
        n,
    })
}

/// Coefficients of an estimator that reports no standard errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointFit {
    pub intercept: f64,
    pub coefficients: BTreeMap<String, f64>,
    pub n: usize,
}

/// Minimum-norm solution `X' (X X')^-1 y` for underdetermined designs
/// (no more rows than parameters, intercept included). The intercept column
/// takes part in the norm. Fails when the rows of the design are linearly
/// dependent.
pub fn min_norm_fit<S: AsRef<str>>(
    data: &Dataset,
    outcome: &str,
    predictors: &[S],
) -> Result<PointFit, StatsError> {
    let (y, xs) = gather(data, outcome, predictors)?;
    let n = data.n_rows();
    if n == 0 {
        return Err(StatsError::InsufficientRows { rows: 0, params: xs.len() + 1 });
    }
    let row = |i: usize| std::iter::once(1.0).chain(xs.iter().map(move |x| x[i]));
    let mut gram = vec![0.0; n * n];
    for a in 0..n {
        for b in 0..=a {
            let dot: f64 = row(a).zip(row(b)).map(|(u, v)| u * v).sum();
            gram[a * n + b] = dot;
            gram[b * n + a] = dot;
        }
    }
    let chol = Cholesky::factor(gram, n).ok_or(StatsError::RankDeficient)?;
    let dual = chol.solve(y);
    let mut beta = vec![0.0; xs.len() + 1];
    for (i, w) in dual.iter().enumerate() {
        for (j, v) in row(i).enumerate() {
            beta[j] += v * w;
        }
    }
    Ok(PointFit {
        intercept: beta[0],
        coefficients: predictors
            .iter()
            .zip(&beta[1..])
            .map(|(p, b)| (p.as_ref().to_string(), *b))
            .collect(),
        n,
    })
}

/// Ridge estimate with an unpenalized intercept: slopes solve
/// `(Xc'Xc + penalty I) b = Xc'yc` on centered data. This is the posterior
/// mean under independent `Normal(0, sigma^2 / penalty)` slope priors and
/// is defined for any number of rows.
pub fn ridge_fit<S: AsRef<str>>(
    data: &Dataset,
    outcome: &str,
    predictors: &[S],
    penalty: f64,
) -> Result<PointFit, StatsError> {
    let (y, xs) = gather(data, outcome, predictors)?;
    let n = data.n_rows();
    if n == 0 {
        return Err(StatsError::InsufficientRows { rows: 0, params: xs.len() + 1 });
    }
    if !(penalty > 0.0 && penalty.is_finite()) {
        return Err(StatsError::InvalidPenalty(penalty));
    }
    let k = xs.len();
    let Moments {
        y_mean,
        x_means,
        mut cross,
        rhs,
    } = centered_moments(y, &xs);
    for j in 0..k {
        cross[j * k + j] += penalty;
    }
    let slopes = if k == 0 {
        Vec::new()
    } else {
        Cholesky::factor(cross, k).ok_or(StatsError::RankDeficient)?.solve(&rhs)
    };
    let intercept = y_mean - slopes.iter().zip(&x_means).map(|(b, m)| b * m).sum::<f64>();
    Ok(PointFit {
        intercept,
        coefficients: predictors
            .iter()
            .zip(&slopes)
            .map(|(p, b)| (p.as_ref().to_string(), *b))
            .collect(),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(cols: &[&str], rows: &[&[f64]]) -> Dataset {
        Dataset::from_rows(
            cols.iter().map(|c| c.to_string()).collect(),
            &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn exact_line() {
        let d = data(&["x", "y"], &[&[0.0, 1.0], &[1.0, 3.0], &[2.0, 5.0]]);
        let fit = ols_fit(&d, "y", &["x"]).unwrap();
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.coefficient("x").unwrap() - 2.0).abs() < 1e-12);
        assert!(fit.sigma < 1e-12);
        assert_eq!(fit.n, 3);
    }

    #[test]
    fn textbook_standard_errors() {
        // y = [1, 2, 2, 4], x = [1, 2, 3, 4]; Sxx = 5, Sxy = 4.5
        // slope 0.9, intercept 0, RSS = 0.7, sigma^2 = 0.35
        // se(slope) = sqrt(0.35 / 5), se(intercept) = sqrt(0.35 (1/4 + 2.5^2 / 5))
        let d = data(&["x", "y"], &[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 2.0], &[4.0, 4.0]]);
        let fit = ols_fit(&d, "y", &["x"]).unwrap();
        assert!((fit.coefficient("x").unwrap() - 0.9).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-12);
        assert!((fit.sigma - 0.35_f64.sqrt()).abs() < 1e-12);
        assert!((fit.std_error("x").unwrap() - (0.35_f64 / 5.0).sqrt()).abs() < 1e-12);
        assert!((fit.intercept_std_error - (0.35_f64 * (0.25 + 6.25 / 5.0)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn intercept_only() {
        let d = data(&["y"], &[&[1.0], &[2.0], &[3.0]]);
        let fit = ols_fit::<&str>(&d, "y", &[]).unwrap();
        assert!((fit.intercept - 2.0).abs() < 1e-12);
        assert!((fit.sigma - 1.0).abs() < 1e-12);
    }

    #[test]
    fn error_paths() {
        let d = data(&["x", "z", "y"], &[&[1.0, 2.0, 1.0], &[2.0, 4.0, 0.0], &[3.0, 6.0, 2.0], &[4.0, 8.0, 1.0]]);
        assert_eq!(ols_fit(&d, "y", &["x", "z"]).unwrap_err(), StatsError::RankDeficient);
        assert_eq!(
            ols_fit(&d, "y", &["w"]).unwrap_err(),
            StatsError::UnknownColumn("w".into())
        );
        let small = data(&["x", "y"], &[&[0.0, 1.0], &[1.0, 2.0]]);
        assert_eq!(
            ols_fit(&small, "y", &["x"]).unwrap_err(),
            StatsError::InsufficientRows { rows: 2, params: 2 }
        );
        let constant = data(&["x", "y"], &[&[1.0, 1.0], &[1.0, 2.0], &[1.0, 0.0]]);
        assert_eq!(ols_fit(&constant, "y", &["x"]).unwrap_err(), StatsError::RankDeficient);
    }

    #[test]
    fn min_norm_interpolates() {
        // Two rows, three parameters: the solution reproduces y exactly and
        // lies in the row space of the design.
        let d = data(&["a", "b", "y"], &[&[1.0, 0.0, 2.0], &[0.0, 1.0, -1.0]]);
        let fit = min_norm_fit(&d, "y", &["a", "b"]).unwrap();
        let (c, a, b) = (fit.intercept, fit.coefficients["a"], fit.coefficients["b"]);
        assert!((c + a - 2.0).abs() < 1e-12);
        assert!((c + b + 1.0).abs() < 1e-12);
        // Row space of [[1,1,0],[1,0,1]] is orthogonal to (1,-1,-1).
        assert!((c - a - b).abs() < 1e-12);
    }

    #[test]
    fn min_norm_rejects_dependent_rows() {
        let d = data(&["a", "y"], &[&[1.0, 2.0], &[1.0, 3.0]]);
        assert_eq!(min_norm_fit(&d, "y", &["a"]).unwrap_err(), StatsError::RankDeficient);
    }

    #[test]
    fn ridge_shrinks_slope() {
        // x = [1, 2, 3, 4], y = [1, 2, 2, 4]: Sxx = 5, Sxy = 4.5
        let d = data(&["x", "y"], &[&[1.0, 1.0], &[2.0, 2.0], &[3.0, 2.0], &[4.0, 4.0]]);
        let fit = ridge_fit(&d, "y", &["x"], 1.0).unwrap();
        let slope = 4.5 / 6.0;
        assert!((fit.coefficients["x"] - slope).abs() < 1e-12);
        assert!((fit.intercept - (2.25 - slope * 2.5)).abs() < 1e-12);
        let tiny = ridge_fit(&d, "y", &["x"], 1e-12).unwrap();
        assert!((tiny.coefficients["x"] - 0.9).abs() < 1e-9);
        assert!(ridge_fit(&d, "y", &["x"], 0.0).is_err());
    }

    #[test]
    fn ridge_handles_more_parameters_than_rows() {
        let d = data(&["a", "b", "c", "y"], &[&[1.0, 0.0, 2.0, 1.0], &[0.0, 1.0, 1.0, 3.0]]);
        let fit = ridge_fit(&d, "y", &["a", "b", "c"], 1.0).unwrap();
        assert!(fit.coefficients.values().all(|b| b.is_finite()));
        let constant = data(&["a", "y"], &[&[1.0, 1.0], &[1.0, 3.0]]);
        let fit = ridge_fit(&constant, "y", &["a"], 1.0).unwrap();
        assert_eq!(fit.coefficients["a"], 0.0);
        assert_eq!(fit.intercept, 2.0);
    }
}
