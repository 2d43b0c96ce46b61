//! Bundled models and configurations, usable offline.

use std::collections::BTreeMap;

use crate::dag::{CausalDag, DagBuilder, NodeId};
use crate::scm::{build_scm, Mechanism, ScmSpec, SweepConfig};

pub const PRODUCTIVITY_DAG: &str = include_str!("../fixtures/productivity.dag");
pub const CONFOUNDER_TRIANGLE_DAG: &str = include_str!("../fixtures/confounder-triangle.dag");
pub const TABLE5_CONF: &str = include_str!("../fixtures/table5.conf");

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: &[&str] = &["productivity.dag", "confounder-triangle.dag", "table5.conf"];

/// Text of a bundled fixture by file name.
pub fn builtin(name: &str) -> Option<&'static str> {
    match name {
        "productivity.dag" | "productivity" => Some(PRODUCTIVITY_DAG),
        "confounder-triangle.dag" | "confounder-triangle" => Some(CONFOUNDER_TRIANGLE_DAG),
        "table5.conf" | "table5" => Some(TABLE5_CONF),
        _ => None,
    }
}

/// Developer productivity model: treatment T (language), outcome E (quality).
pub fn productivity_dag() -> CausalDag {
    PRODUCTIVITY_DAG.parse().expect("bundled DAG is valid")
}

/// Latent Z confounding X -> Y.
pub fn confounder_triangle_dag() -> CausalDag {
    CONFOUNDER_TRIANGLE_DAG.parse().expect("bundled DAG is valid")
}

pub fn table5_config() -> SweepConfig {
    SweepConfig::parse(TABLE5_CONF).expect("bundled config is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Process {
    /// `Y = bX + e`
    P1,
    /// `Y = bX + cZ + e`, with Z independent of X
    P2,
    /// `X = dZ + e`, `Y = bX + cZ + e`
    P3,
}

impl std::str::FromStr for Process {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "p1" => Ok(Process::P1),
            "p2" => Ok(Process::P2),
            "p3" => Ok(Process::P3),
            _ => Err(format!("unknown process `{s}` (expected p1, p2 or p3)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProcessParams {
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for ProcessParams {
    fn default() -> Self {
        ProcessParams { b: 0.4, c: 0.7, d: 0.2 }
    }
}

fn spec(dag: CausalDag, mechs: Vec<(&str, Mechanism)>) -> ScmSpec {
    let mechs: BTreeMap<NodeId, Mechanism> = mechs
        .into_iter()
        .map(|(n, m)| (NodeId::new(n).expect("valid name"), m))
        .collect();
    build_scm(dag, mechs).expect("fixture model is valid")
}

/// Standard-normal exogenous variables, unit-variance noise.
pub fn process_scm(process: Process, p: ProcessParams) -> ScmSpec {
    let mut b = DagBuilder::new();
    b.node("X").unwrap();
    b.node("Y").unwrap();
    b.edge("X", "Y").unwrap();
    if process != Process::P1 {
        b.node("Z").unwrap();
        b.edge("Z", "Y").unwrap();
    }
    if process == Process::P3 {
        b.edge("Z", "X").unwrap();
    }
    let dag = b.build().expect("fixture DAG is valid");
    match process {
        Process::P1 => spec(
            dag,
            vec![
                ("X", Mechanism::standard_normal()),
                ("Y", Mechanism::gaussian(0.0, &[("X", p.b)], 1.0)),
            ],
        ),
        Process::P2 => spec(
            dag,
            vec![
                ("X", Mechanism::standard_normal()),
                ("Z", Mechanism::standard_normal()),
                ("Y", Mechanism::gaussian(0.0, &[("X", p.b), ("Z", p.c)], 1.0)),
            ],
        ),
        Process::P3 => spec(
            dag,
            vec![
                ("Z", Mechanism::standard_normal()),
                ("X", Mechanism::gaussian(0.0, &[("Z", p.d)], 1.0)),
                ("Y", Mechanism::gaussian(0.0, &[("X", p.b), ("Z", p.c)], 1.0)),
            ],
        ),
    }
}

/// Swept parameters of the effort model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffortModelParams {
    pub t_e: f64,
    pub gamma_e: f64,
    pub gamma_t: f64,
}

impl Default for EffortModelParams {
    fn default() -> Self {
        EffortModelParams {
            t_e: 0.3,
            gamma_e: 0.1,
            gamma_t: 0.1,
        }
    }
}

/// Effort model with binary B, K, O, latent standard-normal Z, and
/// unit-variance Gaussian S, T, E.
pub fn effort_model(p: EffortModelParams) -> ScmSpec {
    let mut b = DagBuilder::new();
    for n in ["B", "E", "K", "O", "S", "T"] {
        b.node(n).unwrap();
    }
    b.latent("Z").unwrap();
    for (from, to) in [
        ("B", "S"),
        ("K", "S"),
        ("O", "T"),
        ("S", "T"),
        ("Z", "T"),
        ("B", "E"),
        ("K", "E"),
        ("O", "E"),
        ("S", "E"),
        ("T", "E"),
        ("Z", "E"),
    ] {
        b.edge(from, to).unwrap();
    }
    let dag = b.build().expect("fixture DAG is valid");
    spec(
        dag,
        vec![
            ("B", Mechanism::bernoulli(0.5)),
            ("K", Mechanism::bernoulli(0.5)),
            ("O", Mechanism::bernoulli(0.5)),
            ("Z", Mechanism::standard_normal()),
            ("S", Mechanism::gaussian(0.0, &[("B", 0.3), ("K", 0.1)], 1.0)),
            (
                "T",
                Mechanism::gaussian(0.0, &[("O", 0.5), ("S", -0.1), ("Z", p.gamma_t)], 1.0),
            ),
            (
                "E",
                Mechanism::gaussian(
                    0.0,
                    &[
                        ("B", 0.3),
                        ("K", 0.1),
                        ("O", 0.5),
                        ("S", -0.1),
                        ("T", p.t_e),
                        ("Z", p.gamma_e),
                    ],
                    1.0,
                ),
            ),
        ],
    )
}
