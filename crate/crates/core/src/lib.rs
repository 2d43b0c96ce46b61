//! Causal DAGs, adjustment sets, sensitivity analyses and structural-model
//! simulation for observational effect estimates.

pub mod adjustment;
pub mod dag;
pub mod fixtures;
pub mod rng;
pub mod scm;
pub mod sensitivity;
pub mod stats;

pub use adjustment::{
    augment_with_confounder, edge_confounder_report, AdjustmentError, AdjustmentReport,
    AdjustmentSet, CausalQuery, EdgeConfounderEntry,
};
pub use dag::{parse_dag, CausalDag, DagBuilder, DagError, NodeId, SeparationQuery};
pub use scm::{
    build_scm, expected_treatment_estimate, run_sweep, Mechanism, ScmError, ScmSpec, SweepConfig,
    SweepResult,
};
pub use sensitivity::{EValueInput, EValueResult, SensitivityError, TipInput, TipResult};
pub use stats::{ols_fit, Dataset, FitResult, Interval, StatsError};
