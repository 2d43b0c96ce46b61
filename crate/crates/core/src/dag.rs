//! Causal DAGs: construction, the line-oriented DAG DSL, and the structural
//! queries (ancestry, path enumeration, d-separation) the adjustment module
//! builds on.
//!
//! The DSL has one statement per line; `#` starts a comment:
//!
//! ```text
//! node X          # optional explicit declaration
//! latent Z        # unmeasured node
//! Z -> X          # edge; endpoints are declared implicitly
//! treatment X     # optional default query roles
//! outcome Y
//! ```

use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::cmp::Reverse;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: {error}")]
    Located { line: usize, error: Box<DagError> },
    #[error("invalid node name `{0}`")]
    InvalidName(String),
    #[error("cycle detected: {}", .0.join(" -> "))]
    Cycle(Vec<String>),
    #[error("duplicate edge {0} -> {1}")]
    DuplicateEdge(String, String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("conflicting declarations for node `{0}`")]
    ConflictingDeclaration(String),
    #[error("`{0}` appears more than once in the separation query")]
    OverlappingQuery(String),
}

/// A node name: `[A-Za-z_][A-Za-z0-9_]*`, case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Result<Self, DagError> {
        let name = name.into();
        if is_identifier(&name) {
            Ok(NodeId(name))
        } else {
            Err(DagError::InvalidName(name))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl TryFrom<String> for NodeId {
    type Error = DagError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        NodeId::new(value)
    }
}

impl From<NodeId> for String {
    fn from(id: NodeId) -> String {
        id.0
    }
}

impl AsRef<str> for NodeId {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for NodeId {
    type Err = DagError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NodeId::new(s)
    }
}

/// An immutable, validated causal DAG.
///
/// Nodes are stored in lexicographic order; node indices used by the
/// crate-internal helpers follow that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalDag {
    names: Vec<NodeId>,
    latent: Vec<bool>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    order: Vec<usize>,
    treatment: Option<NodeId>,
    outcome: Option<NodeId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Declaration {
    Implicit,
    Observed,
    Latent,
}

/// Incremental constructor for [`CausalDag`].
#[derive(Debug, Clone, Default)]
pub struct DagBuilder {
    nodes: BTreeMap<NodeId, Declaration>,
    edges: BTreeSet<(NodeId, NodeId)>,
    treatment: Option<NodeId>,
    outcome: Option<NodeId>,
}

impl DagBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares an observed node.
    pub fn node(&mut self, name: &str) -> Result<&mut Self, DagError> {
        self.declare(NodeId::new(name)?, Declaration::Observed)?;
        Ok(self)
    }

    /// Declares an unmeasured node.
    pub fn latent(&mut self, name: &str) -> Result<&mut Self, DagError> {
        self.declare(NodeId::new(name)?, Declaration::Latent)?;
        Ok(self)
    }

    pub fn edge(&mut self, from: &str, to: &str) -> Result<&mut Self, DagError> {
        let from = NodeId::new(from)?;
        let to = NodeId::new(to)?;
        if from == to {
            return Err(DagError::SelfLoop(from.0));
        }
        self.nodes.entry(from.clone()).or_insert(Declaration::Implicit);
        self.nodes.entry(to.clone()).or_insert(Declaration::Implicit);
        if !self.edges.insert((from.clone(), to.clone())) {
            return Err(DagError::DuplicateEdge(from.0, to.0));
        }
        Ok(self)
    }

    pub fn treatment(&mut self, name: &str) -> Result<&mut Self, DagError> {
        self.treatment = Some(NodeId::new(name)?);
        Ok(self)
    }

    pub fn outcome(&mut self, name: &str) -> Result<&mut Self, DagError> {
        self.outcome = Some(NodeId::new(name)?);
        Ok(self)
    }

    fn declare(&mut self, id: NodeId, decl: Declaration) -> Result<(), DagError> {
        match self.nodes.get(&id).copied() {
            None | Some(Declaration::Implicit) => {
                self.nodes.insert(id, decl);
                Ok(())
            }
            Some(existing) if existing == decl => Ok(()),
            Some(_) => Err(DagError::ConflictingDeclaration(id.0)),
        }
    }

    pub fn build(&self) -> Result<CausalDag, DagError> {
        let names: Vec<NodeId> = self.nodes.keys().cloned().collect();
        let latent = self
            .nodes
            .values()
            .map(|d| *d == Declaration::Latent)
            .collect();
        let index: BTreeMap<&NodeId, usize> =
            names.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let mut parents = vec![Vec::new(); names.len()];
        let mut children = vec![Vec::new(); names.len()];
        for (from, to) in &self.edges {
            let (f, t) = (index[from], index[to]);
            parents[t].push(f);
            children[f].push(t);
        }
        for list in parents.iter_mut().chain(children.iter_mut()) {
            list.sort_unstable();
        }
        for role in [&self.treatment, &self.outcome].into_iter().flatten() {
            if !index.contains_key(role) {
                return Err(DagError::UnknownNode(role.0.clone()));
            }
        }
        let order = match topological_sort(&parents, &children) {
            Ok(order) => order,
            Err(remaining) => {
                let cycle = witness_cycle(&parents, &remaining);
                return Err(DagError::Cycle(
                    cycle.into_iter().map(|i| names[i].0.clone()).collect(),
                ));
            }
        };
        Ok(CausalDag {
            names,
            latent,
            parents,
            children,
            order,
            treatment: self.treatment.clone(),
            outcome: self.outcome.clone(),
        })
    }
}

/// Kahn's algorithm, always releasing the smallest ready index.
/// On failure returns the mask of nodes left on a cycle (or downstream of one).
fn topological_sort(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Result<Vec<usize>, Vec<bool>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n)
        .filter(|&i| indegree[i] == 0)
        .map(Reverse)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(v)) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err(indegree.iter().map(|&d| d > 0).collect())
    }
}

/// Every node left over by Kahn's algorithm has a leftover parent, so walking
/// parents must revisit a node. Returns the cycle in edge direction, closed
/// (first node repeated at the end).
fn witness_cycle(parents: &[Vec<usize>], remaining: &[bool]) -> Vec<usize> {
    let start = remaining.iter().position(|&r| r).expect("nonempty remainder");
    let mut seen = vec![usize::MAX; parents.len()];
    let mut walk = Vec::new();
    let mut v = start;
    while seen[v] == usize::MAX {
        seen[v] = walk.len();
        walk.push(v);
        v = *parents[v]
            .iter()
            .find(|&&p| remaining[p])
            .expect("leftover node has a leftover parent");
    }
    let mut cycle: Vec<usize> = walk[seen[v]..].to_vec();
    cycle.reverse();
    // Rotate so the smallest node leads.
    let min_pos = (0..cycle.len()).min_by_key(|&i| cycle[i]).unwrap();
    cycle.rotate_left(min_pos);
    cycle.push(cycle[0]);
    cycle
}

/// A d-separation question: is `x` independent of `y` given `given`?
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationQuery {
    x: NodeId,
    y: NodeId,
    given: BTreeSet<NodeId>,
}

impl SeparationQuery {
    pub fn new<I, S>(x: &str, y: &str, given: I) -> Result<Self, DagError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let x = NodeId::new(x)?;
        let y = NodeId::new(y)?;
        if x == y {
            return Err(DagError::OverlappingQuery(x.0));
        }
        let given = given
            .into_iter()
            .map(|s| NodeId::new(s.as_ref()))
            .collect::<Result<BTreeSet<_>, _>>()?;
        for end in [&x, &y] {
            if given.contains(end) {
                return Err(DagError::OverlappingQuery(end.0.clone()));
            }
        }
        Ok(SeparationQuery { x, y, given })
    }

    pub fn x(&self) -> &NodeId {
        &self.x
    }

    pub fn y(&self) -> &NodeId {
        &self.y
    }

    pub fn given(&self) -> &BTreeSet<NodeId> {
        &self.given
    }
}

/// Per-query memo for path blocking: which nodes are conditioned on, and
/// which colliders are opened (the collider or one of its descendants is
/// conditioned on).
pub(crate) struct Blocking {
    conditioned: Vec<bool>,
    opens_collider: Vec<bool>,
}

impl Blocking {
    pub(crate) fn new(dag: &CausalDag, conditioned: Vec<bool>) -> Self {
        // A collider is open iff it is an ancestor-or-self of a conditioned node.
        let mut opens_collider = conditioned.clone();
        let mut queue: VecDeque<usize> =
            (0..conditioned.len()).filter(|&i| conditioned[i]).collect();
        while let Some(v) = queue.pop_front() {
            for &p in &dag.parents[v] {
                if !opens_collider[p] {
                    opens_collider[p] = true;
                    queue.push_back(p);
                }
            }
        }
        Blocking {
            conditioned,
            opens_collider,
        }
    }

    /// Whether the middle node of `prev - mid - next` blocks the path.
    pub(crate) fn blocks(&self, dag: &CausalDag, prev: usize, mid: usize, next: usize) -> bool {
        let collider = dag.has_edge(prev, mid) && dag.has_edge(next, mid);
        if collider {
            !self.opens_collider[mid]
        } else {
            self.conditioned[mid]
        }
    }

    pub(crate) fn path_is_blocked(&self, dag: &CausalDag, path: &[usize]) -> bool {
        path.windows(3).any(|w| self.blocks(dag, w[0], w[1], w[2]))
    }
}

impl CausalDag {
    pub fn builder() -> DagBuilder {
        DagBuilder::new()
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    /// Node names in lexicographic order.
    pub fn nodes(&self) -> &[NodeId] {
        &self.names
    }

    /// Edges ordered by (from, to).
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for (f, kids) in self.children.iter().enumerate() {
            for &t in kids {
                edges.push((self.names[f].clone(), self.names[t].clone()));
            }
        }
        edges
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    pub fn contains_edge(&self, from: &str, to: &str) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(f), Some(t)) => self.has_edge(f, t),
            _ => false,
        }
    }

    pub fn is_latent(&self, name: &str) -> Result<bool, DagError> {
        Ok(self.latent[self.require(name)?])
    }

    pub fn latent_nodes(&self) -> Vec<NodeId> {
        self.names
            .iter()
            .zip(&self.latent)
            .filter(|(_, &l)| l)
            .map(|(n, _)| n.clone())
            .collect()
    }

    pub fn parents(&self, name: &str) -> Result<Vec<NodeId>, DagError> {
        let i = self.require(name)?;
        Ok(self.parents[i].iter().map(|&p| self.names[p].clone()).collect())
    }

    pub fn children(&self, name: &str) -> Result<Vec<NodeId>, DagError> {
        let i = self.require(name)?;
        Ok(self.children[i].iter().map(|&c| self.names[c].clone()).collect())
    }

    /// Default treatment declared in the DSL, if any.
    pub fn treatment(&self) -> Option<&NodeId> {
        self.treatment.as_ref()
    }

    /// Default outcome declared in the DSL, if any.
    pub fn outcome(&self) -> Option<&NodeId> {
        self.outcome.as_ref()
    }

    /// Nodes ordered so every edge points forward; ties go to the
    /// lexicographically smallest name.
    pub fn topological_order(&self) -> Vec<NodeId> {
        self.order.iter().map(|&i| self.names[i].clone()).collect()
    }

    /// Nodes reachable from `name` along directed edges, excluding `name`.
    pub fn descendants(&self, name: &str) -> Result<BTreeSet<NodeId>, DagError> {
        let i = self.require(name)?;
        Ok(self.names_in(&self.reach(i, &self.children)))
    }

    /// Nodes with a directed path into `name`, excluding `name`.
    pub fn ancestors(&self, name: &str) -> Result<BTreeSet<NodeId>, DagError> {
        let i = self.require(name)?;
        Ok(self.names_in(&self.reach(i, &self.parents)))
    }

    pub fn is_d_separated(&self, query: &SeparationQuery) -> Result<bool, DagError> {
        let x = self.require(query.x.as_str())?;
        let y = self.require(query.y.as_str())?;
        let mut conditioned = vec![false; self.node_count()];
        for g in &query.given {
            conditioned[self.require(g.as_str())?] = true;
        }
        let blocking = Blocking::new(self, conditioned);
        let mut open = false;
        self.walk_paths(x, y, None, &blocking, &mut |_| {
            open = true;
            false
        });
        Ok(!open)
    }

    /// Every simple path between `from` and `to` in the skeleton, in
    /// lexicographic order of node indices.
    pub fn undirected_paths(&self, from: &str, to: &str) -> Result<Vec<Vec<NodeId>>, DagError> {
        let f = self.require(from)?;
        let t = self.require(to)?;
        let mut paths = Vec::new();
        self.simple_paths(f, t, None, &mut |p| {
            paths.push(p.iter().map(|&i| self.names[i].clone()).collect());
        });
        Ok(paths)
    }

    /// Renders the DAG in the DSL with statements in lexicographic order.
    pub fn to_dsl(&self) -> String {
        self.to_string()
    }

    pub(crate) fn index_of(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub(crate) fn require(&self, name: &str) -> Result<usize, DagError> {
        self.index_of(name)
            .ok_or_else(|| DagError::UnknownNode(name.to_string()))
    }

    pub(crate) fn name(&self, i: usize) -> &NodeId {
        &self.names[i]
    }

    pub(crate) fn latent_mask(&self) -> &[bool] {
        &self.latent
    }

    pub(crate) fn order_indices(&self) -> &[usize] {
        &self.order
    }

    pub(crate) fn has_edge(&self, from: usize, to: usize) -> bool {
        self.children[from].binary_search(&to).is_ok()
    }

    pub(crate) fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        // Both lists are sorted and disjoint; merge keeps the walk ordered.
        let (a, b) = (&self.parents[i], &self.children[i]);
        let (mut x, mut y) = (0, 0);
        std::iter::from_fn(move || {
            let next = match (a.get(x), b.get(y)) {
                (Some(&p), Some(&c)) if p < c => {
                    x += 1;
                    p
                }
                (_, Some(&c)) => {
                    y += 1;
                    c
                }
                (Some(&p), None) => {
                    x += 1;
                    p
                }
                (None, None) => return None,
            };
            Some(next)
        })
    }

    /// Reachability mask from `start` over `adjacency`, excluding `start`.
    pub(crate) fn reach(&self, start: usize, adjacency: &[Vec<usize>]) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen[start] = false;
        seen
    }

    pub(crate) fn descendant_mask(&self, i: usize) -> Vec<bool> {
        self.reach(i, &self.children)
    }

    pub(crate) fn ancestor_mask(&self, i: usize) -> Vec<bool> {
        self.reach(i, &self.parents)
    }

    fn names_in(&self, mask: &[bool]) -> BTreeSet<NodeId> {
        mask.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| self.names[i].clone())
            .collect()
    }

    /// Depth-first enumeration of simple skeleton paths `from .. to`.
    /// `first_step`, when set, restricts the second node of the path.
    pub(crate) fn simple_paths(
        &self,
        from: usize,
        to: usize,
        first_step: Option<&dyn Fn(usize) -> bool>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        let mut on_path = vec![false; self.node_count()];
        let mut path = vec![from];
        on_path[from] = true;
        self.extend_paths(to, first_step, &mut path, &mut on_path, &mut |p| {
            visit(p);
            true
        }, None);
    }

    /// Like [`simple_paths`](Self::simple_paths) but prunes any prefix that is
    /// already blocked. `visit` returns `false` to stop the search.
    pub(crate) fn walk_paths(
        &self,
        from: usize,
        to: usize,
        first_step: Option<&dyn Fn(usize) -> bool>,
        blocking: &Blocking,
        visit: &mut dyn FnMut(&[usize]) -> bool,
    ) {
        let mut on_path = vec![false; self.node_count()];
        let mut path = vec![from];
        on_path[from] = true;
        self.extend_paths(to, first_step, &mut path, &mut on_path, visit, Some(blocking));
    }

    fn extend_paths(
        &self,
        to: usize,
        first_step: Option<&dyn Fn(usize) -> bool>,
        path: &mut Vec<usize>,
        on_path: &mut [bool],
        visit: &mut dyn FnMut(&[usize]) -> bool,
        blocking: Option<&Blocking>,
    ) -> bool {
        let last = *path.last().unwrap();
        for next in self.neighbors(last) {
            if on_path[next] {
                continue;
            }
            if path.len() == 1 {
                if let Some(accept) = first_step {
                    if !accept(next) {
                        continue;
                    }
                }
            }
            if let Some(b) = blocking {
                if path.len() >= 2 && b.blocks(self, path[path.len() - 2], last, next) {
                    continue;
                }
            }
            path.push(next);
            let keep_going = if next == to {
                visit(path)
            } else {
                on_path[next] = true;
                let r = self.extend_paths(to, first_step, path, on_path, visit, blocking);
                on_path[next] = false;
                r
            };
            path.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for CausalDag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, &latent) in self.names.iter().zip(&self.latent) {
            let keyword = if latent { "latent" } else { "node" };
            writeln!(f, "{keyword} {name}")?;
        }
        for (from, to) in self.edges() {
            writeln!(f, "{from} -> {to}")?;
        }
        if let Some(t) = &self.treatment {
            writeln!(f, "treatment {t}")?;
        }
        if let Some(o) = &self.outcome {
            writeln!(f, "outcome {o}")?;
        }
        Ok(())
    }
}

impl FromStr for CausalDag {
    type Err = DagError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_dag(s)
    }
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Ident(&'a str),
    Arrow,
}

fn tokenize(line: &str, line_no: usize) -> Result<Vec<(usize, Token<'_>)>, DagError> {
    let mut tokens = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(at, c)) = chars.peek() {
        let column = line[..at].chars().count() + 1;
        if c.is_whitespace() {
            chars.next();
        } else if c == '-' {
            chars.next();
            match chars.next() {
                Some((_, '>')) => tokens.push((column, Token::Arrow)),
                _ => {
                    return Err(DagError::Syntax {
                        line: line_no,
                        column,
                        message: "expected `->`".into(),
                    })
                }
            }
        } else if c.is_ascii_alphanumeric() || c == '_' {
            let mut end = at;
            while let Some(&(i, c)) = chars.peek() {
                if c.is_ascii_alphanumeric() || c == '_' {
                    end = i + c.len_utf8();
                    chars.next();
                } else {
                    break;
                }
            }
            let word = &line[at..end];
            if !is_identifier(word) {
                return Err(DagError::Syntax {
                    line: line_no,
                    column,
                    message: format!("invalid node name `{word}`"),
                });
            }
            tokens.push((column, Token::Ident(word)));
        } else {
            return Err(DagError::Syntax {
                line: line_no,
                column,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(tokens)
}

/// Parses DAG-DSL source.
pub fn parse_dag(text: &str) -> Result<CausalDag, DagError> {
    let mut builder = DagBuilder::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        let tokens = tokenize(line, line_no)?;
        let at_line = |e: DagError| DagError::Located {
            line: line_no,
            error: Box::new(e),
        };
        match tokens.as_slice() {
            [] => {}
            [(_, Token::Ident(from)), (_, Token::Arrow), (_, Token::Ident(to))] => {
                builder.edge(from, to).map_err(at_line)?;
            }
            [(_, Token::Ident(keyword)), (_, Token::Ident(name))] => {
                match *keyword {
                    "node" => builder.node(name),
                    "latent" => builder.latent(name),
                    "treatment" => builder.treatment(name),
                    "outcome" => builder.outcome(name),
                    other => {
                        return Err(DagError::Syntax {
                            line: line_no,
                            column: tokens[0].0,
                            message: format!("unknown statement `{other}`"),
                        })
                    }
                }
                .map_err(at_line)?;
            }
            [(column, _), ..] => {
                return Err(DagError::Syntax {
                    line: line_no,
                    column: *column,
                    message: "expected `<From> -> <To>` or `<keyword> <Name>`".into(),
                })
            }
        }
    }
    builder.build()
}
