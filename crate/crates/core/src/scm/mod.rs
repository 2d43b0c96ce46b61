//! Structural causal models over a DAG: per-node mechanisms, seeded
//! sampling, and the Monte Carlo sensitivity sweep.

mod config;
mod sweep;
mod template;

pub use config::{SweepConfig, Underdetermined};
pub use sweep::{expected_treatment_estimate, run_sweep, CellSummary, SweepCell, SweepResult};
pub use template::{LinearExpr, MechanismTemplate, ScmTemplate};

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::dag::{CausalDag, DagError, NodeId};
use crate::rng::SimRng;
use crate::stats::{Dataset, StatsError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScmError {
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("node `{0}` has no mechanism")]
    MissingMechanism(String),
    #[error("mechanism given for `{0}`, which is not in the DAG")]
    ExtraMechanism(String),
    #[error("mechanism of `{node}` weights `{weight}`, which is not a parent")]
    WeightForNonParent { node: String, weight: String },
    #[error("mechanism of `{node}` lacks a weight for parent `{parent}`")]
    MissingWeight { node: String, parent: String },
    #[error("Bernoulli node `{0}` cannot have parents")]
    BernoulliWithParents(String),
    #[error("probability of `{node}` must be in [0, 1], got {p}")]
    InvalidProbability { node: String, p: f64 },
    #[error("standard deviation of `{node}` must be positive, got {sd}")]
    InvalidSd { node: String, sd: f64 },
    #[error("non-finite parameter in mechanism of `{0}`")]
    NonFinite(String),
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("parameter `{0}` has no value")]
    UnboundParameter(String),
}

/// Generative mechanism of one node.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mechanism {
    /// Exogenous 0/1 variable, 1 with probability `p`.
    BernoulliExogenous { p: f64 },
    /// `Normal(intercept + sum(weight * parent), sd)`.
    LinearGaussian {
        intercept: f64,
        weights: BTreeMap<NodeId, f64>,
        sd: f64,
    },
}

impl Mechanism {
    pub fn bernoulli(p: f64) -> Self {
        Mechanism::BernoulliExogenous { p }
    }

    pub fn standard_normal() -> Self {
        Mechanism::gaussian(0.0, &[], 1.0)
    }

    /// Panics if a weight name is not a valid node name.
    pub fn gaussian(intercept: f64, weights: &[(&str, f64)], sd: f64) -> Self {
        Mechanism::LinearGaussian {
            intercept,
            weights: weights
                .iter()
                .map(|(n, w)| (NodeId::new(*n).expect("valid node name"), *w))
                .collect(),
            sd,
        }
    }
}

/// A validated SCM: one mechanism per DAG node.
#[derive(Debug, Clone, PartialEq)]
pub struct ScmSpec {
    dag: CausalDag,
    mechanisms: BTreeMap<NodeId, Mechanism>,
}

/// Compiled form used while sampling; parents resolved to column indices.
enum Step {
    Bernoulli(f64),
    Gaussian {
        intercept: f64,
        terms: Vec<(usize, f64)>,
        sd: f64,
    },
}

impl ScmSpec {
    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn mechanisms(&self) -> &BTreeMap<NodeId, Mechanism> {
        &self.mechanisms
    }

    pub fn mechanism(&self, node: &str) -> Option<&Mechanism> {
        self.mechanisms.iter().find(|(k, _)| k.as_str() == node).map(|(_, m)| m)
    }

    /// Draws `n` rows. Columns follow the DAG's topological order and include
    /// latent nodes. Identical `(n, seed)` give bit-identical output.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        self.sample_with(n, &mut SimRng::new(seed))
    }

    pub(crate) fn sample_with(&self, n: usize, rng: &mut SimRng) -> Dataset {
        let order = self.dag.order_indices();
        // position of each DAG node index within `order`
        let mut column_of = vec![0; order.len()];
        for (c, &i) in order.iter().enumerate() {
            column_of[i] = c;
        }
        let steps: Vec<Step> = order
            .iter()
            .map(|&i| match &self.mechanisms[self.dag.name(i)] {
                Mechanism::BernoulliExogenous { p } => Step::Bernoulli(*p),
                Mechanism::LinearGaussian {
                    intercept,
                    weights,
                    sd,
                } => Step::Gaussian {
                    intercept: *intercept,
                    terms: weights
                        .iter()
                        .map(|(parent, w)| {
                            (column_of[self.dag.index_of(parent.as_str()).unwrap()], *w)
                        })
                        .collect(),
                    sd: *sd,
                },
            })
            .collect();

        let mut columns = vec![Vec::with_capacity(n); order.len()];
        for _ in 0..n {
            for (c, step) in steps.iter().enumerate() {
                let value = match step {
                    Step::Bernoulli(p) => {
                        if rng.bernoulli(*p) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                    Step::Gaussian { intercept, terms, sd } => {
                        let mean = intercept
                            + terms.iter().map(|&(pc, w)| w * columns[pc].last().unwrap()).sum::<f64>();
                        rng.normal(mean, *sd)
                    }
                };
                columns[c].push(value);
            }
        }
        let names = order.iter().map(|&i| self.dag.name(i).to_string()).collect();
        Dataset::from_columns_unchecked(names, columns)
    }
}

/// Validates `mechanisms` against `dag`.
pub fn build_scm(
    dag: CausalDag,
    mechanisms: BTreeMap<NodeId, Mechanism>,
) -> Result<ScmSpec, ScmError> {
    for node in mechanisms.keys() {
        if !dag.contains(node.as_str()) {
            return Err(ScmError::ExtraMechanism(node.to_string()));
        }
    }
    for node in dag.nodes() {
        let mech = mechanisms
            .get(node)
            .ok_or_else(|| ScmError::MissingMechanism(node.to_string()))?;
        let parents = dag.parents(node.as_str())?;
        match mech {
            Mechanism::BernoulliExogenous { p } => {
                if !parents.is_empty() {
                    return Err(ScmError::BernoulliWithParents(node.to_string()));
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(ScmError::InvalidProbability {
                        node: node.to_string(),
                        p: *p,
                    });
                }
            }
            Mechanism::LinearGaussian {
                intercept,
                weights,
                sd,
            } => {
                if !intercept.is_finite() || weights.values().any(|w| !w.is_finite()) {
                    return Err(ScmError::NonFinite(node.to_string()));
                }
                if !(*sd > 0.0 && sd.is_finite()) {
                    return Err(ScmError::InvalidSd {
                        node: node.to_string(),
                        sd: *sd,
                    });
                }
                if let Some(w) = weights.keys().find(|w| !parents.contains(w)) {
                    return Err(ScmError::WeightForNonParent {
                        node: node.to_string(),
                        weight: w.to_string(),
                    });
                }
                if let Some(p) = parents.iter().find(|p| !weights.contains_key(*p)) {
                    return Err(ScmError::MissingWeight {
                        node: node.to_string(),
                        parent: p.to_string(),
                    });
                }
            }
        }
    }
    Ok(ScmSpec { dag, mechanisms })
}
