//! Sweep configuration and its key-value file format.
//!
//! ```text
//! # mechanisms; names that are not nodes are parameters
//! latent = Z
//! bernoulli.B = 0.5
//! gaussian.Z = 0
//! gaussian.T = o_t*O + s_t*S + gamma_t*Z
//! sd.T = 1
//! param.o_t = 0.5
//! grid.gamma_t = -0.5,-0.3,-0.1,0.1,0.3,0.5
//! n = 5,10,50
//! repetitions = 200
//! seed = 20240501
//! outcome = E
//! predictors = T,B,K,O,S
//! treatment = T            # optional, defaults to the first predictor
//! underdetermined = ridge      # or `min-norm`, `fail`
//! ridge_penalty = 1
//! ```

use std::collections::BTreeMap;
use std::str::FromStr;

use super::template::{LinearExpr, ScmTemplate};
use super::ScmError;

/// What to do when a sample has no more rows than regression parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Underdetermined {
    /// Use the ridge estimate with penalty `ridge_penalty`.
    #[default]
    Ridge,
    /// Use the minimum-norm least-squares solution.
    MinNorm,
    /// Count the repetition as failed.
    Fail,
}

impl FromStr for Underdetermined {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ridge" => Ok(Underdetermined::Ridge),
            "min-norm" => Ok(Underdetermined::MinNorm),
            "fail" => Ok(Underdetermined::Fail),
            other => Err(format!("expected `ridge`, `min-norm` or `fail`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub template: ScmTemplate,
    /// Parameters held fixed across the sweep.
    pub fixed: BTreeMap<String, f64>,
    /// Swept parameters in declared order; the first one varies slowest.
    pub grid: Vec<(String, Vec<f64>)>,
    pub sample_sizes: Vec<usize>,
    pub repetitions: usize,
    pub outcome: String,
    pub predictors: Vec<String>,
    /// Predictor whose coefficient is recorded.
    pub treatment: String,
    pub seed: u64,
    pub underdetermined: Underdetermined,
    pub ridge_penalty: f64,
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<T>().map_err(|_| format!("invalid list item `{v}`"))
        })
        .collect()
}

fn names(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect()
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self, ScmError> {
        let mut template = ScmTemplate::new();
        let mut fixed = BTreeMap::new();
        let mut grid: Vec<(String, Vec<f64>)> = Vec::new();
        let mut sample_sizes = None;
        let mut repetitions = None;
        let mut outcome = None;
        let mut predictors = None;
        let mut treatment = None;
        let mut seed = None;
        let mut underdetermined = Underdetermined::default();
        let mut ridge_penalty = 1.0;
        let mut sds = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let fail = |message: String| ScmError::Config {
                line: line_no,
                message,
            };
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| fail("expected `key = value`".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let expr = |v: &str| LinearExpr::parse(v).map_err(fail);
            let located = |e: ScmError| match e {
                ScmError::Config { .. } => e,
                other => ScmError::Config {
                    line: line_no,
                    message: other.to_string(),
                },
            };
            match key.split_once('.') {
                Some(("bernoulli", node)) => {
                    template.set_bernoulli(node, expr(value)?).map_err(located)?
                }
                Some(("gaussian", node)) => {
                    template.set_gaussian(node, expr(value)?).map_err(located)?
                }
                Some(("sd", node)) => sds.push((line_no, node.to_string(), expr(value)?)),
                Some(("param", name)) => {
                    let v: f64 = value
                        .parse()
                        .ok()
                        .filter(|v: &f64| v.is_finite())
                        .ok_or_else(|| fail(format!("invalid number `{value}`")))?;
                    if fixed.insert(name.to_string(), v).is_some() {
                        return Err(fail(format!("parameter `{name}` set twice")));
                    }
                }
                Some(("grid", name)) => {
                    let values: Vec<f64> = list(value).map_err(fail)?;
                    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                        return Err(fail(format!("grid `{name}` needs finite values")));
                    }
                    if grid.iter().any(|(g, _)| g == name) {
                        return Err(fail(format!("grid `{name}` declared twice")));
                    }
                    grid.push((name.to_string(), values));
                }
                Some((other, _)) => return Err(fail(format!("unknown key prefix `{other}`"))),
                None => match key {
                    "latent" => {
                        for name in names(value) {
                            template.set_latent(&name).map_err(located)?;
                        }
                    }
                    "n" => sample_sizes = Some(list::<usize>(value).map_err(fail)?),
                    "repetitions" => {
                        repetitions = Some(
                            value
                                .parse::<usize>()
                                .map_err(|_| fail(format!("invalid count `{value}`")))?,
                        )
                    }
                    "seed" => {
                        seed = Some(
                            value
                                .parse::<u64>()
                                .map_err(|_| fail(format!("invalid seed `{value}`")))?,
                        )
                    }
                    "outcome" => outcome = Some(value.to_string()),
                    "predictors" => predictors = Some(names(value)),
                    "treatment" => treatment = Some(value.to_string()),
                    "underdetermined" => underdetermined = value.parse().map_err(fail)?,
                    "ridge_penalty" => {
                        ridge_penalty = value
                            .parse::<f64>()
                            .ok()
                            .filter(|v| *v > 0.0 && v.is_finite())
                            .ok_or_else(|| fail(format!("invalid ridge penalty `{value}`")))?
                    }
                    other => return Err(fail(format!("unknown key `{other}`"))),
                },
            }
        }
        for (line, node, sd) in sds {
            template.set_sd(&node, sd).map_err(|e| ScmError::Config {
                line,
                message: e.to_string(),
            })?;
        }

        let missing = |key: &str| ScmError::Invalid(format!("missing key `{key}`"));
        let predictors = predictors.ok_or_else(|| missing("predictors"))?;
        let treatment = match treatment {
            Some(t) => t,
            None => predictors.first().cloned().ok_or_else(|| missing("predictors"))?,
        };
        let config = SweepConfig {
            template,
            fixed,
            grid,
            sample_sizes: sample_sizes.ok_or_else(|| missing("n"))?,
            repetitions: repetitions.ok_or_else(|| missing("repetitions"))?,
            outcome: outcome.ok_or_else(|| missing("outcome"))?,
            predictors,
            treatment,
            seed: seed.ok_or_else(|| missing("seed"))?,
            underdetermined,
            ridge_penalty,
        };
        config.validate()?;
        Ok(config)
    }

    /// Checks the cross-key invariants.
    pub fn validate(&self) -> Result<(), ScmError> {
        let invalid = |m: String| Err(ScmError::Invalid(m));
        if self.grid.is_empty() {
            return invalid("grid must declare at least one parameter".into());
        }
        if self.grid.iter().any(|(_, v)| v.is_empty()) {
            return invalid("every grid parameter needs at least one value".into());
        }
        if self.repetitions == 0 {
            return invalid("repetitions must be at least 1".into());
        }
        if !(self.ridge_penalty > 0.0 && self.ridge_penalty.is_finite()) {
            return invalid(format!("ridge penalty must be positive, got {}", self.ridge_penalty));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.contains(&0) {
            return invalid("sample sizes must be positive".into());
        }
        let is_node = |n: &str| self.template.nodes().any(|k| k.as_str() == n);
        for name in std::iter::once(&self.outcome).chain(&self.predictors) {
            if !is_node(name) {
                return invalid(format!("`{name}` is not a node of the model"));
            }
            if self.template.is_latent(name) {
                return invalid(format!("`{name}` is latent and cannot enter the regression"));
            }
        }
        if self.predictors.contains(&self.outcome) {
            return invalid("the outcome cannot be a predictor".into());
        }
        if !self.predictors.contains(&self.treatment) {
            return invalid(format!("treatment `{}` is not a predictor", self.treatment));
        }
        let used = self.template.parameters();
        for (name, _) in &self.grid {
            if self.fixed.contains_key(name) {
                return invalid(format!("`{name}` is both fixed and swept"));
            }
        }
        for name in self.fixed.keys().chain(self.grid.iter().map(|(n, _)| n)) {
            if !used.contains(name) {
                return invalid(format!("parameter `{name}` is not used by any mechanism"));
            }
        }
        for name in &used {
            if !self.fixed.contains_key(name) && !self.grid.iter().any(|(g, _)| g == name) {
                return Err(ScmError::UnboundParameter(name.clone()));
            }
        }
        Ok(())
    }

    /// Grid points in declared order (last parameter varies fastest).
    pub fn grid_points(&self) -> Vec<Vec<f64>> {
        let mut points = vec![Vec::new()];
        for (_, values) in &self.grid {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn grid_names(&self) -> Vec<&str> {
        self.grid.iter().map(|(n, _)| n.as_str()).collect()
    }

    /// All parameter values at one grid point.
    pub(crate) fn bind(&self, point: &[f64]) -> BTreeMap<String, f64> {
        let mut params = self.fixed.clone();
        for ((name, _), v) in self.grid.iter().zip(point) {
            params.insert(name.clone(), *v);
        }
        params
    }
}
