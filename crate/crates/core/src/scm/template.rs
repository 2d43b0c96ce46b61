//! SCM templates: mechanisms written as linear expressions over parent
//! nodes and named parameters, instantiated once per sweep grid point.

use std::collections::{BTreeMap, BTreeSet};

use crate::dag::{is_identifier, DagBuilder, NodeId};

use super::{build_scm, Mechanism, ScmError, ScmSpec};

#[derive(Debug, Clone, PartialEq)]
enum Factor {
    Number(f64),
    Name(String),
}

#[derive(Debug, Clone, PartialEq)]
struct Term {
    sign: f64,
    factors: Vec<Factor>,
}

/// A sum of products, e.g. `o_t*O + s_t*S + gamma_t*Z` or `0.5`.
///
/// Names that match template nodes are variables; every other name is a
/// parameter. Each product may contain at most one node.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearExpr {
    terms: Vec<Term>,
}

impl LinearExpr {
    pub fn constant(value: f64) -> Self {
        LinearExpr {
            terms: vec![Term {
                sign: 1.0,
                factors: vec![Factor::Number(value)],
            }],
        }
    }

    pub fn parse(src: &str) -> Result<Self, String> {
        let tokens = lex(src)?;
        let mut terms = Vec::new();
        let mut pos = 0;
        loop {
            let mut sign = 1.0;
            while let Some(tok) = tokens.get(pos) {
                match tok {
                    Lexeme::Plus => {}
                    Lexeme::Minus => sign = -sign,
                    _ => break,
                }
                pos += 1;
            }
            let mut factors = Vec::new();
            loop {
                match tokens.get(pos) {
                    Some(Lexeme::Number(v)) => factors.push(Factor::Number(*v)),
                    Some(Lexeme::Name(n)) => factors.push(Factor::Name(n.clone())),
                    _ => return Err(format!("expected a number or name in `{src}`")),
                }
                pos += 1;
                if tokens.get(pos) == Some(&Lexeme::Times) {
                    pos += 1;
                } else {
                    break;
                }
            }
            terms.push(Term { sign, factors });
            match tokens.get(pos) {
                None => break,
                Some(Lexeme::Plus) | Some(Lexeme::Minus) => {}
                Some(_) => return Err(format!("expected `+` or `-` in `{src}`")),
            }
        }
        Ok(LinearExpr { terms })
    }

    fn names(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().flat_map(|t| {
            t.factors.iter().filter_map(|f| match f {
                Factor::Name(n) => Some(n.as_str()),
                Factor::Number(_) => None,
            })
        })
    }

    /// Splits into an intercept and per-node weights.
    fn evaluate(
        &self,
        nodes: &BTreeSet<NodeId>,
        params: &BTreeMap<String, f64>,
    ) -> Result<(f64, BTreeMap<NodeId, f64>), ScmError> {
        let mut intercept = 0.0;
        let mut weights: BTreeMap<NodeId, f64> = BTreeMap::new();
        for term in &self.terms {
            let mut coef = term.sign;
            let mut node: Option<&NodeId> = None;
            for f in &term.factors {
                match f {
                    Factor::Number(v) => coef *= v,
                    Factor::Name(n) => {
                        if let Some(id) = nodes.iter().find(|id| id.as_str() == n) {
                            if node.replace(id).is_some() {
                                return Err(ScmError::Invalid(format!(
                                    "product of two nodes in mechanism term involving `{n}`"
                                )));
                            }
                        } else {
                            coef *= params
                                .get(n)
                                .ok_or_else(|| ScmError::UnboundParameter(n.clone()))?;
                        }
                    }
                }
            }
            match node {
                Some(id) => *weights.entry(id.clone()).or_insert(0.0) += coef,
                None => intercept += coef,
            }
        }
        Ok((intercept, weights))
    }

    fn scalar(
        &self,
        nodes: &BTreeSet<NodeId>,
        params: &BTreeMap<String, f64>,
        node: &NodeId,
    ) -> Result<f64, ScmError> {
        let (value, weights) = self.evaluate(nodes, params)?;
        if !weights.is_empty() {
            return Err(ScmError::Invalid(format!(
                "probability / sd of `{node}` must not reference nodes"
            )));
        }
        Ok(value)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Lexeme {
    Number(f64),
    Name(String),
    Plus,
    Minus,
    Times,
}

fn lex(src: &str) -> Result<Vec<Lexeme>, String> {
    let mut out = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                out.push(Lexeme::Plus);
                i += 1;
            }
            '-' => {
                out.push(Lexeme::Minus);
                i += 1;
            }
            '*' => {
                out.push(Lexeme::Times);
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < bytes.len() {
                    let d = bytes[i] as char;
                    let exp_sign = (d == '-' || d == '+')
                        && matches!(bytes[i - 1] as char, 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                let text = &src[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| format!("invalid number `{text}`"))?;
                if !v.is_finite() {
                    return Err(format!("invalid number `{text}`"));
                }
                out.push(Lexeme::Number(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Lexeme::Name(src[start..i].to_string()));
            }
            other => return Err(format!("unexpected character `{other}` in `{src}`")),
        }
    }
    if out.is_empty() {
        return Err("empty expression".into());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MechanismTemplate {
    Bernoulli { p: LinearExpr },
    Gaussian { mean: LinearExpr, sd: LinearExpr },
}

/// Node mechanisms with free parameters. The DAG is implied: every node
/// that appears in a mean expression becomes a parent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScmTemplate {
    latent: BTreeSet<NodeId>,
    mechanisms: BTreeMap<NodeId, MechanismTemplate>,
}

impl ScmTemplate {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_latent(&mut self, name: &str) -> Result<(), ScmError> {
        self.latent.insert(NodeId::new(name)?);
        Ok(())
    }

    pub fn set_bernoulli(&mut self, node: &str, p: LinearExpr) -> Result<(), ScmError> {
        self.insert(node, MechanismTemplate::Bernoulli { p })
    }

    /// Gaussian with unit sd; see [`set_sd`](Self::set_sd).
    pub fn set_gaussian(&mut self, node: &str, mean: LinearExpr) -> Result<(), ScmError> {
        self.insert(
            node,
            MechanismTemplate::Gaussian {
                mean,
                sd: LinearExpr::constant(1.0),
            },
        )
    }

    pub fn set_sd(&mut self, node: &str, sd: LinearExpr) -> Result<(), ScmError> {
        match self.mechanisms.iter_mut().find(|(k, _)| k.as_str() == node) {
            Some((_, MechanismTemplate::Gaussian { sd: slot, .. })) => {
                *slot = sd;
                Ok(())
            }
            Some(_) => Err(ScmError::Invalid(format!("sd given for Bernoulli node `{node}`"))),
            None => Err(ScmError::Invalid(format!(
                "sd given for `{node}` before its mechanism"
            ))),
        }
    }

    fn insert(&mut self, node: &str, mech: MechanismTemplate) -> Result<(), ScmError> {
        let id = NodeId::new(node)?;
        if self.mechanisms.insert(id, mech).is_some() {
            return Err(ScmError::Invalid(format!("node `{node}` defined twice")));
        }
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeId> {
        self.mechanisms.keys()
    }

    pub fn is_latent(&self, name: &str) -> bool {
        self.latent.iter().any(|n| n.as_str() == name)
    }

    /// Names used in expressions that are not nodes.
    pub fn parameters(&self) -> BTreeSet<String> {
        let is_node = |n: &str| self.mechanisms.keys().any(|k| k.as_str() == n);
        let mut out = BTreeSet::new();
        for mech in self.mechanisms.values() {
            let exprs: Vec<&LinearExpr> = match mech {
                MechanismTemplate::Bernoulli { p } => vec![p],
                MechanismTemplate::Gaussian { mean, sd } => vec![mean, sd],
            };
            for e in exprs {
                for n in e.names() {
                    if !is_node(n) {
                        out.insert(n.to_string());
                    }
                }
            }
        }
        out
    }

    pub fn instantiate(&self, params: &BTreeMap<String, f64>) -> Result<ScmSpec, ScmError> {
        for l in &self.latent {
            if !self.mechanisms.contains_key(l) {
                return Err(ScmError::MissingMechanism(l.to_string()));
            }
        }
        for p in self.parameters() {
            if !is_identifier(&p) || !params.contains_key(&p) {
                return Err(ScmError::UnboundParameter(p));
            }
        }
        let nodes: BTreeSet<NodeId> = self.mechanisms.keys().cloned().collect();
        let mut builder = DagBuilder::new();
        let mut mechanisms = BTreeMap::new();
        for (node, template) in &self.mechanisms {
            if self.latent.contains(node) {
                builder.latent(node.as_str())?;
            } else {
                builder.node(node.as_str())?;
            }
            let mech = match template {
                MechanismTemplate::Bernoulli { p } => Mechanism::BernoulliExogenous {
                    p: p.scalar(&nodes, params, node)?,
                },
                MechanismTemplate::Gaussian { mean, sd } => {
                    let (intercept, weights) = mean.evaluate(&nodes, params)?;
                    for parent in weights.keys() {
                        builder.edge(parent.as_str(), node.as_str())?;
                    }
                    Mechanism::LinearGaussian {
                        intercept,
                        weights,
                        sd: sd.scalar(&nodes, params, node)?,
                    }
                }
            };
            mechanisms.insert(node.clone(), mech);
        }
        build_scm(builder.build()?, mechanisms)
    }
}
