//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the library's graph algorithms.

#![allow(dead_code)]

use std::collections::BTreeSet;

use confound_core::rng::SimRng;
use confound_core::{CausalDag, DagBuilder};

/// Adjacency-matrix DAG. `adj[a][b]` means an edge `a -> b`.
#[derive(Debug, Clone)]
pub struct RawDag {
    pub names: Vec<String>,
    pub adj: Vec<Vec<bool>>,
    pub latent: Vec<bool>,
}

const NAMES: [&str; 6] = ["Q", "B", "Z", "A", "M", "C"];

impl RawDag {
    /// Random DAG on `n <= 6` nodes: a random order, each forward pair
    /// joined with probability `density`, each node latent with
    /// probability `latent_p`.
    pub fn random(rng: &mut SimRng, n: usize, density: f64, latent_p: f64) -> RawDag {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = (rng.uniform() * (i + 1) as f64) as usize;
            order.swap(i, j);
        }
        let mut adj = vec![vec![false; n]; n];
        for a in 0..n {
            for b in a + 1..n {
                if rng.bernoulli(density) {
                    adj[order[a]][order[b]] = true;
                }
            }
        }
        RawDag {
            names: NAMES[..n].iter().map(|s| s.to_string()).collect(),
            adj,
            latent: (0..n).map(|_| rng.bernoulli(latent_p)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.names.len()
    }

    pub fn index(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).unwrap()
    }

    pub fn to_dag(&self) -> CausalDag {
        let mut b = DagBuilder::new();
        for (i, name) in self.names.iter().enumerate() {
            if self.latent[i] {
                b.latent(name).unwrap();
            } else {
                b.node(name).unwrap();
            }
        }
        for a in 0..self.n() {
            for c in 0..self.n() {
                if self.adj[a][c] {
                    b.edge(&self.names[a], &self.names[c]).unwrap();
                }
            }
        }
        b.build().unwrap()
    }

    /// Nodes reachable from `start` following edges forward (`down`) or
    /// backward, `start` included.
    pub fn closure(&self, start: &[usize], down: bool) -> Vec<bool> {
        let mut seen = vec![false; self.n()];
        let mut stack: Vec<usize> = start.to_vec();
        while let Some(v) = stack.pop() {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            for w in 0..self.n() {
                let linked = if down { self.adj[v][w] } else { self.adj[w][v] };
                if linked && !seen[w] {
                    stack.push(w);
                }
            }
        }
        seen
    }

    pub fn without_out_edges(&self, v: usize) -> RawDag {
        let mut g = self.clone();
        for w in 0..self.n() {
            g.adj[v][w] = false;
        }
        g
    }

    /// d-separation via the moralized ancestral graph.
    pub fn dsep_moral(&self, x: usize, y: usize, given: &[usize]) -> bool {
        let mut seeds = vec![x, y];
        seeds.extend_from_slice(given);
        let keep = self.closure(&seeds, false);
        let n = self.n();
        let mut und = vec![vec![false; n]; n];
        for a in 0..n {
            for b in 0..n {
                if keep[a] && keep[b] && self.adj[a][b] {
                    und[a][b] = true;
                    und[b][a] = true;
                }
            }
        }
        for c in 0..n {
            if !keep[c] {
                continue;
            }
            let parents: Vec<usize> = (0..n).filter(|&p| keep[p] && self.adj[p][c]).collect();
            for &p in &parents {
                for &q in &parents {
                    if p != q {
                        und[p][q] = true;
                    }
                }
            }
        }
        let blocked: Vec<bool> = (0..n).map(|v| given.contains(&v)).collect();
        let mut seen = vec![false; n];
        let mut stack = vec![x];
        while let Some(v) = stack.pop() {
            if v == y {
                return false;
            }
            if seen[v] {
                continue;
            }
            seen[v] = true;
            for w in 0..n {
                if und[v][w] && !seen[w] && !blocked[w] {
                    stack.push(w);
                }
            }
        }
        true
    }

    /// d-separation straight from the definition: every simple path in the
    /// skeleton must contain a blocked triple.
    pub fn dsep_paths(&self, x: usize, y: usize, given: &[usize]) -> bool {
        let n = self.n();
        let in_given: Vec<bool> = (0..n).map(|v| given.contains(&v)).collect();
        let opens_collider = |c: usize| {
            let desc = self.closure(&[c], true);
            (0..n).any(|v| desc[v] && in_given[v])
        };
        let mut paths = Vec::new();
        let mut path = vec![x];
        self.all_paths(y, &mut path, &mut paths);
        paths.iter().all(|p| {
            p.windows(3).any(|w| {
                let (a, m, b) = (w[0], w[1], w[2]);
                let collider = self.adj[a][m] && self.adj[b][m];
                if collider {
                    !opens_collider(m)
                } else {
                    in_given[m]
                }
            })
        })
    }

    fn all_paths(&self, target: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let v = *path.last().unwrap();
        if v == target {
            out.push(path.clone());
            return;
        }
        for w in 0..self.n() {
            if (self.adj[v][w] || self.adj[w][v]) && !path.contains(&w) {
                path.push(w);
                self.all_paths(target, path, out);
                path.pop();
            }
        }
    }

    /// Backdoor validity: no member descends from `t`, and `z` separates
    /// `t` from `o` once the edges out of `t` are removed.
    pub fn valid_adjustment(&self, t: usize, o: usize, z: &[usize]) -> bool {
        let desc = self.closure(&[t], true);
        if z.iter().any(|&v| desc[v]) {
            return false;
        }
        self.without_out_edges(t).dsep_moral(t, o, z)
    }

    /// All inclusion-minimal valid sets among the allowed nodes, as sorted
    /// name sets, ordered by size then lexicographically.
    pub fn minimal_sets(&self, t: usize, o: usize, observed_only: bool) -> Vec<Vec<String>> {
        let pool: Vec<usize> = (0..self.n())
            .filter(|&v| v != t && v != o && !(observed_only && self.latent[v]))
            .collect();
        let mut valid: Vec<Vec<usize>> = Vec::new();
        for mask in 0u32..(1 << pool.len()) {
            let z: Vec<usize> = (0..pool.len()).filter(|i| mask >> i & 1 == 1).map(|i| pool[i]).collect();
            if self.valid_adjustment(t, o, &z) {
                valid.push(z);
            }
        }
        let minimal: Vec<&Vec<usize>> = valid
            .iter()
            .filter(|z| {
                !valid
                    .iter()
                    .any(|w| w.len() < z.len() && w.iter().all(|v| z.contains(v)))
            })
            .collect();
        let mut named: Vec<Vec<String>> = minimal
            .into_iter()
            .map(|z| {
                let set: BTreeSet<String> = z.iter().map(|&v| self.names[v].clone()).collect();
                set.into_iter().collect()
            })
            .collect();
        named.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        named
    }
}
