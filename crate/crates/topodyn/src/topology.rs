//! State-dependent neighborhoods and the induced interaction graph.
//!
//! For each agent `i`, the other agents are ranked by the key
//! `(|x_j - x_i|, j)` in lexicographic order and the first `k` form the
//! neighbor set `N_i`. The index component makes the map single-valued on
//! all of state space: equidistant candidates are taken in increasing index
//! order. Ties are detected by exact equality of the computed distances, not
//! by a tolerance band.

use crate::error::{Error, Result};

/// Model parameters: `n` agents, each attending to its `k` nearest peers.
/// The standing assumption is `1 <= k < n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelParams {
    pub n: usize,
    pub k: usize,
}

impl ModelParams {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k < 1 || k >= n {
            return Err(Error::InvalidParams { n, k });
        }
        Ok(Self { n, k })
    }
}

/// A population state: one finite scalar opinion per agent, plus `k`.
///
/// Construction validates the parameter range and rejects non-finite
/// opinions, so downstream code can rank distances without NaN cases.
#[derive(Clone, Debug, PartialEq)]
pub struct OpinionState {
    opinions: Vec<f64>,
    k: usize,
}

impl OpinionState {
    pub fn new(opinions: Vec<f64>, k: usize) -> Result<Self> {
        ModelParams::new(opinions.len(), k)?;
        for (i, v) in opinions.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index: i });
            }
        }
        Ok(Self { opinions, k })
    }

    pub fn opinions(&self) -> &[f64] {
        &self.opinions
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.opinions.len()
    }

    pub fn params(&self) -> ModelParams {
        ModelParams { n: self.n(), k: self.k }
    }

    /// Same parameters, new opinions. Used by the integrator on values it
    /// has already checked for finiteness.
    pub(crate) fn with_opinions(&self, opinions: Vec<f64>) -> Self {
        debug_assert_eq!(opinions.len(), self.opinions.len());
        Self { opinions, k: self.k }
    }
}

/// Per-agent neighbor lists, each sorted by the `(distance, index)` key, so
/// `neighbors(i)[0]` is the closest agent to `i` (the k=1 `cl(i)`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborMap {
    lists: Vec<Vec<usize>>,
}

impl NeighborMap {
    pub fn n(&self) -> usize {
        self.lists.len()
    }

    pub fn k(&self) -> usize {
        self.lists[0].len()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.lists[i]
    }

    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }

    /// Index of the closest agent to `i` (the single neighbor when k=1).
    pub fn closest(&self, i: usize) -> usize {
        self.lists[i][0]
    }
}

/// The directed interaction graph G(x): an edge (i, j) for every j in N_i.
/// Every vertex has out-degree exactly k.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionGraph {
    out: Vec<Vec<usize>>,
}

impl InteractionGraph {
    pub fn vertex_count(&self) -> usize {
        self.out.len()
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.out[i]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, js)| js.iter().map(move |&j| (i, j)))
    }
}

/// Structural report for the k=1 interaction graph.
///
/// `circuits[c]` lists the mutual (length-2) circuits found in
/// `components[c]`; `deltas` is the sequence `cl(i) - i` computed on the
/// sorted copy of the state. `valid` is true iff every component has exactly
/// one 2-circuit and every vertex of the component reaches it by a directed
/// path.
#[derive(Clone, Debug)]
pub struct K1StructureReport {
    pub components: Vec<Vec<usize>>,
    pub circuits: Vec<Vec<(usize, usize)>>,
    pub deltas: Vec<i64>,
    pub valid: bool,
}

impl K1StructureReport {
    /// The unique 2-circuit of component `c`, when the report is valid.
    pub fn circuit(&self, c: usize) -> Option<(usize, usize)> {
        match self.circuits[c].as_slice() {
            [pair] => Some(*pair),
            _ => None,
        }
    }
}

/// Compute every agent's k nearest neighbors under the lower-index tie-break.
///
/// This is the defining brute-force characterization: rank all candidates by
/// `(|x_j - x_i|, j)` and keep the first k. Deterministic in the state.
pub fn compute_neighbors(state: &OpinionState) -> NeighborMap {
    let x = state.opinions();
    let k = state.k();
    let n = x.len();
    let mut lists = Vec::with_capacity(n);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        cand.clear();
        for j in 0..n {
            if j != i {
                cand.push(((x[j] - x[i]).abs(), j));
            }
        }
        // Opinions are finite, so partial_cmp never sees NaN.
        cand.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        lists.push(cand[..k].iter().map(|&(_, j)| j).collect());
    }
    NeighborMap { lists }
}

/// Build G(x) from a neighbor map.
pub fn build_graph(nm: &NeighborMap) -> InteractionGraph {
    InteractionGraph { out: nm.lists.clone() }
}

/// Partition the vertices into weakly connected components (edge direction
/// ignored). Components are sorted by smallest member, members ascending.
pub fn weak_components(g: &InteractionGraph) -> Vec<Vec<usize>> {
    let n = g.vertex_count();
    let mut adj = vec![Vec::new(); n];
    for (i, j) in g.edges() {
        adj[i].push(j);
        adj[j].push(i);
    }
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(v) = stack.pop() {
            comp.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        comp.sort_unstable();
        components.push(comp);
    }
    components
}

/// Check the k=1 structure: each weakly connected component of G(x) must
/// contain exactly one mutual pair, reachable from all of its vertices.
///
/// `valid` is a theorem for every state, so a `false` report indicates a bug
/// rather than a property of the input.
pub fn validate_k1_structure(state: &OpinionState) -> Result<K1StructureReport> {
    if state.k() != 1 {
        return Err(Error::KNotOne { k: state.k() });
    }
    let nm = compute_neighbors(state);
    let cl: Vec<usize> = (0..state.n()).map(|i| nm.closest(i)).collect();
    let graph = build_graph(&nm);
    let components = weak_components(&graph);

    let mut circuits = Vec::with_capacity(components.len());
    let mut valid = true;
    for comp in &components {
        let mut pairs = Vec::new();
        for &i in comp {
            let j = cl[i];
            if i < j && cl[j] == i {
                pairs.push((i, j));
            }
        }
        if pairs.len() != 1 {
            valid = false;
        } else {
            let (a, b) = pairs[0];
            // Out-degree is 1, so following cl from any vertex must land on
            // the circuit within |comp| hops.
            for &i in comp {
                let mut v = i;
                let mut reached = false;
                for _ in 0..=comp.len() {
                    if v == a || v == b {
                        reached = true;
                        break;
                    }
                    v = cl[v];
                }
                if !reached {
                    valid = false;
                    break;
                }
            }
        }
        circuits.push(pairs);
    }

    // delta_i = cl(i) - i on the sorted state; delta_1 = 1 and delta_n = -1
    // always, and sign changes locate the circuits and the disconnections.
    let sorted = crate::dynamics::canonicalize(state).0;
    let nm_sorted = compute_neighbors(&sorted);
    let deltas: Vec<i64> = (0..sorted.n())
        .map(|i| nm_sorted.closest(i) as i64 - i as i64)
        .collect();

    Ok(K1StructureReport { components, circuits, deltas, valid })
}
