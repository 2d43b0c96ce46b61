//! Backdoor adjustment: backdoor paths, adjustment-set validation and
//! enumeration, and the per-edge unmeasured-confounder analysis.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::dag::{Blocking, CausalDag, DagBuilder, DagError, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdjustmentError {
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error("treatment and outcome must differ (both `{0}`)")]
    SameTreatmentOutcome(String),
    #[error("no {0} role given and none declared in the DAG")]
    MissingRole(&'static str),
    #[error("adjustment set contains the {role} `{node}`")]
    SetOverlapsQuery { role: &'static str, node: String },
    #[error("edge {0} -> {1} is not in the DAG")]
    UnknownEdge(String, String),
    #[error("confounder name `{0}` already exists in the DAG")]
    NameCollision(String),
}

/// A set of adjustment covariates, displayed as `{O, S}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct AdjustmentSet(BTreeSet<NodeId>);

impl AdjustmentSet {
    pub fn new(nodes: BTreeSet<NodeId>) -> Self {
        AdjustmentSet(nodes)
    }

    pub fn nodes(&self) -> &BTreeSet<NodeId> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|n| n.as_str() == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.0.iter().map(NodeId::as_str).collect()
    }
}

impl fmt::Display for AdjustmentSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, n) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{n}")?;
        }
        f.write_str("}")
    }
}

/// Effect of `treatment` on `outcome` in a DAG.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalQuery {
    dag: CausalDag,
    treatment: NodeId,
    outcome: NodeId,
}

impl CausalQuery {
    pub fn new(dag: CausalDag, treatment: &str, outcome: &str) -> Result<Self, AdjustmentError> {
        let t = dag.require(treatment)?;
        let o = dag.require(outcome)?;
        if t == o {
            return Err(AdjustmentError::SameTreatmentOutcome(treatment.to_string()));
        }
        let treatment = dag.name(t).clone();
        let outcome = dag.name(o).clone();
        Ok(CausalQuery {
            dag,
            treatment,
            outcome,
        })
    }

    /// Builds the query from explicit roles, falling back to the roles
    /// declared in the DAG file.
    pub fn with_roles(
        dag: CausalDag,
        treatment: Option<&str>,
        outcome: Option<&str>,
    ) -> Result<Self, AdjustmentError> {
        let t = treatment
            .map(str::to_string)
            .or_else(|| dag.treatment().map(|n| n.to_string()))
            .ok_or(AdjustmentError::MissingRole("treatment"))?;
        let o = outcome
            .map(str::to_string)
            .or_else(|| dag.outcome().map(|n| n.to_string()))
            .ok_or(AdjustmentError::MissingRole("outcome"))?;
        Self::new(dag, &t, &o)
    }

    pub fn dag(&self) -> &CausalDag {
        &self.dag
    }

    pub fn treatment(&self) -> &NodeId {
        &self.treatment
    }

    pub fn outcome(&self) -> &NodeId {
        &self.outcome
    }

    fn indices(&self) -> (usize, usize) {
        (
            self.dag.index_of(self.treatment.as_str()).unwrap(),
            self.dag.index_of(self.outcome.as_str()).unwrap(),
        )
    }

    fn backdoor_index_paths(&self) -> Vec<Vec<usize>> {
        let (t, o) = self.indices();
        let dag = &self.dag;
        let into_treatment = |n: usize| dag.has_edge(n, t);
        let mut paths = Vec::new();
        dag.simple_paths(t, o, Some(&into_treatment), &mut |p| paths.push(p.to_vec()));
        paths
    }

    /// Undirected simple paths from treatment to outcome that start with an
    /// edge pointing into the treatment.
    pub fn backdoor_paths(&self) -> Vec<Vec<NodeId>> {
        self.backdoor_index_paths()
            .into_iter()
            .map(|p| p.into_iter().map(|i| self.dag.name(i).clone()).collect())
            .collect()
    }

    /// Backdoor criterion: no descendant of the treatment, and every
    /// backdoor path blocked.
    pub fn is_valid_adjustment<I, S>(&self, set: I) -> Result<bool, AdjustmentError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut mask = vec![false; self.dag.node_count()];
        for name in set {
            let name = name.as_ref();
            let i = self.dag.require(name)?;
            if name == self.treatment.as_str() {
                return Err(AdjustmentError::SetOverlapsQuery {
                    role: "treatment",
                    node: name.to_string(),
                });
            }
            if name == self.outcome.as_str() {
                return Err(AdjustmentError::SetOverlapsQuery {
                    role: "outcome",
                    node: name.to_string(),
                });
            }
            mask[i] = true;
        }
        let checker = Checker::new(self);
        Ok(checker.valid(&mask))
    }

    /// All inclusion-minimal valid adjustment sets, ordered by size and then
    /// lexicographically. An empty list means no valid set exists.
    pub fn minimal_adjustment_sets(&self, observed_only: bool) -> Vec<AdjustmentSet> {
        let (t, o) = self.indices();
        let checker = Checker::new(self);
        // Minimal separators lie inside the ancestral set of {treatment, outcome}.
        let ancestral: Vec<bool> = {
            let at = self.dag.ancestor_mask(t);
            let ao = self.dag.ancestor_mask(o);
            at.iter().zip(&ao).map(|(a, b)| *a || *b).collect()
        };
        let latent = self.dag.latent_mask();
        let candidates: Vec<usize> = (0..self.dag.node_count())
            .filter(|&i| i != t && i != o)
            .filter(|&i| ancestral[i] && !checker.forbidden[i])
            .filter(|&i| !(observed_only && latent[i]))
            .collect();

        let mut found: Vec<Vec<usize>> = Vec::new();
        let mut mask = vec![false; self.dag.node_count()];
        for size in 0..=candidates.len() {
            for combo in Combinations::new(candidates.len(), size) {
                let chosen: Vec<usize> = combo.iter().map(|&k| candidates[k]).collect();
                if found
                    .iter()
                    .any(|f| f.iter().all(|x| chosen.binary_search(x).is_ok()))
                {
                    continue;
                }
                for &c in &chosen {
                    mask[c] = true;
                }
                if checker.valid(&mask) {
                    found.push(chosen.clone());
                }
                for &c in &chosen {
                    mask[c] = false;
                }
            }
        }
        let mut sets: Vec<AdjustmentSet> = found
            .into_iter()
            .map(|s| AdjustmentSet(s.into_iter().map(|i| self.dag.name(i).clone()).collect()))
            .collect();
        sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        sets
    }
}

/// Shared state for repeated validity checks against one query.
struct Checker<'a> {
    dag: &'a CausalDag,
    paths: Vec<Vec<usize>>,
    forbidden: Vec<bool>,
}

impl<'a> Checker<'a> {
    fn new(query: &'a CausalQuery) -> Self {
        let (t, _) = query.indices();
        Checker {
            dag: &query.dag,
            paths: query.backdoor_index_paths(),
            forbidden: query.dag.descendant_mask(t),
        }
    }

    fn valid(&self, mask: &[bool]) -> bool {
        if mask.iter().zip(&self.forbidden).any(|(m, f)| *m && *f) {
            return false;
        }
        let blocking = Blocking::new(self.dag, mask.to_vec());
        self.paths
            .iter()
            .all(|p| blocking.path_is_blocked(self.dag, p))
    }
}

/// k-subsets of `0..n` in lexicographic order.
struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            n,
            current: (k <= n).then(|| (0..k).collect()),
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Name of the latent confounder added on edge `from -> to`.
pub fn confounder_name(from: &str, to: &str) -> String {
    format!("Z_{from}_{to}")
}

/// Adds a latent `Z_<From>_<To>` with edges into both endpoints of `edge`.
pub fn augment_with_confounder(
    dag: &CausalDag,
    from: &str,
    to: &str,
) -> Result<CausalDag, AdjustmentError> {
    if !dag.contains_edge(from, to) {
        return Err(AdjustmentError::UnknownEdge(from.to_string(), to.to_string()));
    }
    let z = confounder_name(from, to);
    if dag.contains(&z) {
        return Err(AdjustmentError::NameCollision(z));
    }
    let mut builder = DagBuilder::new();
    for node in dag.nodes() {
        if dag.is_latent(node.as_str())? {
            builder.latent(node.as_str())?;
        } else {
            builder.node(node.as_str())?;
        }
    }
    for (f, t) in dag.edges() {
        builder.edge(f.as_str(), t.as_str())?;
    }
    builder.latent(&z)?;
    builder.edge(&z, from)?;
    builder.edge(&z, to)?;
    if let Some(t) = dag.treatment() {
        builder.treatment(t.as_str())?;
    }
    if let Some(o) = dag.outcome() {
        builder.outcome(o.as_str())?;
    }
    Ok(builder.build()?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeConfounderEntry {
    pub from: NodeId,
    pub to: NodeId,
    pub confounder: NodeId,
    /// Minimal sets in the augmented DAG, latent nodes allowed.
    pub sets: Vec<AdjustmentSet>,
    /// Minimal sets restricted to observed nodes.
    pub observed_sets: Vec<AdjustmentSet>,
    /// No valid adjustment set exists over observed nodes.
    pub unadjustable: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdjustmentReport {
    pub treatment: NodeId,
    pub outcome: NodeId,
    pub entries: Vec<EdgeConfounderEntry>,
}

impl AdjustmentReport {
    pub fn unadjustable_edges(&self) -> impl Iterator<Item = &EdgeConfounderEntry> {
        self.entries.iter().filter(|e| e.unadjustable)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Aligned plain-text table: row number, confounded edge, adjustment sets.
    pub fn to_table(&self) -> String {
        let rows: Vec<(String, String, String)> = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let sets = if e.sets.is_empty() {
                    "(none)".to_string()
                } else {
                    e.sets.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
                };
                let sets = if e.unadjustable {
                    format!("{sets}  [unadjustable]")
                } else {
                    sets
                };
                ((i + 1).to_string(), format!("{} -> {}", e.from, e.to), sets)
            })
            .collect();
        let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(1);
        let w1 = rows
            .iter()
            .map(|r| r.1.len())
            .max()
            .unwrap_or(0)
            .max("confounded edge".len());
        let mut out = format!("{:>w0$}  {:<w1$}  adjustment sets\n", "#", "confounded edge");
        for (n, edge, sets) in rows {
            out.push_str(&format!("{n:>w0$}  {edge:<w1$}  {sets}\n"));
        }
        out
    }
}

/// For every edge, adds a latent confounder on that edge and recomputes
/// the minimal adjustment sets of the query.
pub fn edge_confounder_report(query: &CausalQuery) -> Result<AdjustmentReport, AdjustmentError> {
    let dag = query.dag();
    let mut entries = Vec::with_capacity(dag.edge_count());
    for (from, to) in dag.edges() {
        let augmented = augment_with_confounder(dag, from.as_str(), to.as_str())?;
        let q = CausalQuery::new(augmented, query.treatment.as_str(), query.outcome.as_str())?;
        let sets = q.minimal_adjustment_sets(false);
        let observed_sets = q.minimal_adjustment_sets(true);
        entries.push(EdgeConfounderEntry {
            confounder: NodeId::new(confounder_name(from.as_str(), to.as_str()))?,
            from,
            to,
            unadjustable: observed_sets.is_empty(),
            sets,
            observed_sets,
        });
    }
    Ok(AdjustmentReport {
        treatment: query.treatment.clone(),
        outcome: query.outcome.clone(),
        entries,
    })
}
