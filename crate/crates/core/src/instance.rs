//! Multi-objective weighted max-cut instances: sparse graphs, heavy-hex
//! lattice generation, Gaussian edge weights and the JSON instance format.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{self, PRNG_ID};

pub const INSTANCE_FORMAT_VERSION: u32 = 1;

/// Heavy-hex `(rows, cols)` whose lattice has 42 nodes and 46 edges.
pub const PAPER_PRESET: (usize, usize) = (2, 2);

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("instance failed validation: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("malformed instance file: {0}")]
    Format(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

/// Undirected simple graph with a canonical (sorted) edge list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, orienting each pair as `u < v` and sorting the edge list.
    pub fn new(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, InstanceError> {
        if num_nodes == 0 {
            return Err(InstanceError::Graph("graph must have at least one node".into()));
        }
        let mut seen = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(InstanceError::Graph(format!("self-loop at node {a}")));
            }
            if a >= num_nodes || b >= num_nodes {
                return Err(InstanceError::Graph(format!("edge ({a}, {b}) out of range for {num_nodes} nodes")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(InstanceError::Graph(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
        }
        Ok(Self { num_nodes, edges: seen.into_iter().collect() })
    }

    /// Keeps the edge list exactly as given. Use [`validate_instance`] to inspect it.
    pub fn new_unchecked(num_nodes: usize, edges: Vec<(usize, usize)>) -> Self {
        Self { num_nodes, edges }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.num_nodes];
        for &(u, v) in &self.edges {
            deg[u] += 1;
            deg[v] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Neighbor lists as `(neighbor, edge index)`, in edge order.
    pub fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.num_nodes];
        for (e, &(u, v)) in self.edges.iter().enumerate() {
            adj[u].push((v, e));
            adj[v].push((u, e));
        }
        adj
    }

    /// Connected-component label of each node; labels are assigned in node order.
    pub fn component_labels(&self) -> (Vec<usize>, usize) {
        let adj = self.adjacency();
        let mut label = vec![usize::MAX; self.num_nodes];
        let mut count = 0;
        for start in 0..self.num_nodes {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &(v, _) in &adj[u] {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        stack.push(v);
                    }
                }
            }
            count += 1;
        }
        (label, count)
    }

    pub fn num_components(&self) -> usize {
        self.component_labels().1
    }

    pub fn is_connected(&self) -> bool {
        self.num_components() == 1
    }

    /// `|E| - N + components`: the size of any feedback edge set.
    pub fn cyclomatic_number(&self) -> usize {
        self.num_edges() + self.num_components() - self.num_nodes
    }
}

/// Heavy-hex lattice: a honeycomb patch with every cell edge subdivided by a
/// degree-2 node.
///
/// Cell rows alternate between `cols` cells (even rows) and `cols + 1` cells
/// (odd rows, shifted half a cell left), so odd-row cells nest under the gaps
/// of the even rows. Nodes are numbered row-major by lattice position.
pub fn generate_heavy_hex(rows: usize, cols: usize) -> Graph {
    assert!(rows >= 1 && cols >= 1, "heavy-hex lattice needs rows >= 1 and cols >= 1");
    // Pointy-top hexagon corners, x in units of half a cell width, y in quarter heights.
    const RING: [(i64, i64); 6] = [(0, -2), (1, -1), (1, 1), (0, 2), (-1, 1), (-1, -1)];
    let mut cell_edges: BTreeSet<((i64, i64), (i64, i64))> = BTreeSet::new();
    for r in 0..rows {
        let (count, x0) = if r % 2 == 0 { (cols, 1) } else { (cols + 1, 0) };
        let cy = 3 * r as i64;
        for i in 0..count {
            let cx = x0 + 2 * i as i64;
            for j in 0..6 {
                let a = (cx + RING[j].0, cy + RING[j].1);
                let b = (cx + RING[(j + 1) % 6].0, cy + RING[(j + 1) % 6].1);
                cell_edges.insert((a.min(b), a.max(b)));
            }
        }
    }
    // Doubled coordinates keyed (y, x) so midpoints stay integral and ordering is row-major.
    let mut nodes: BTreeSet<(i64, i64)> = BTreeSet::new();
    let mut pairs = Vec::with_capacity(cell_edges.len() * 2);
    for &(a, b) in &cell_edges {
        let pa = (2 * a.1, 2 * a.0);
        let pb = (2 * b.1, 2 * b.0);
        let mid = (a.1 + b.1, a.0 + b.0);
        nodes.extend([pa, pb, mid]);
        pairs.push((pa, mid));
        pairs.push((mid, pb));
    }
    let index: BTreeMap<(i64, i64), usize> = nodes.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    Graph::new(index.len(), pairs.into_iter().map(|(a, b)| (index[&a], index[&b])))
        .expect("lattice construction yields a simple graph")
}

/// The 42-node, 46-edge heavy-hex graph.
pub fn paper_graph() -> Graph {
    generate_heavy_hex(PAPER_PRESET.0, PAPER_PRESET.1)
}

/// Graph plus an `|E| x M` matrix of edge weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiObjectiveInstance {
    graph: Arc<Graph>,
    num_objectives: usize,
    /// Row-major: entry `e * M + k` is the weight of edge `e` in objective `k`.
    weights: Vec<f64>,
    seed: u64,
    label: String,
}

impl MultiObjectiveInstance {
    /// Builds an instance and rejects it if any invariant fails.
    pub fn new(graph: Graph, num_objectives: usize, weights: Vec<f64>, seed: u64, label: impl Into<String>) -> Result<Self, InstanceError> {
        let inst = Self::new_unchecked(graph, num_objectives, weights, seed, label);
        let violations = validate_instance(&inst);
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(InstanceError::Invalid(violations))
        }
    }

    pub fn new_unchecked(graph: Graph, num_objectives: usize, weights: Vec<f64>, seed: u64, label: impl Into<String>) -> Self {
        Self { graph: Arc::new(graph), num_objectives, weights, seed, label: label.into() }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<Graph> {
        Arc::clone(&self.graph)
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, edge: usize, objective: usize) -> f64 {
        self.weights[edge * self.num_objectives + objective]
    }

    pub fn edge_weights(&self, edge: usize) -> &[f64] {
        &self.weights[edge * self.num_objectives..(edge + 1) * self.num_objectives]
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            format_version: INSTANCE_FORMAT_VERSION,
            label: self.label.clone(),
            num_nodes: self.graph.num_nodes(),
            edges: self.graph.edges().iter().map(|&(u, v)| [u, v]).collect(),
            num_objectives: self.num_objectives,
            weights: self.weights.chunks(self.num_objectives.max(1)).map(<[f64]>::to_vec).collect(),
            seed: self.seed,
            prng_id: PRNG_ID.to_string(),
        };
        let mut s = serde_json::to_string_pretty(&file).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Parses an instance without checking invariants.
    pub fn from_json_unchecked(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.format_version != INSTANCE_FORMAT_VERSION {
            return Err(InstanceError::Graph(format!("unsupported format_version {}", file.format_version)));
        }
        let mut weights = Vec::with_capacity(file.weights.len() * file.num_objectives);
        let mut ragged = false;
        for row in &file.weights {
            ragged |= row.len() != file.num_objectives;
            weights.extend_from_slice(row);
        }
        if ragged {
            return Err(InstanceError::Graph(format!("weight rows must have {} entries", file.num_objectives)));
        }
        let graph = Graph::new_unchecked(file.num_nodes, file.edges.iter().map(|e| (e[0], e[1])).collect());
        Ok(Self::new_unchecked(graph, file.num_objectives, weights, file.seed, file.label))
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let inst = Self::from_json_unchecked(text)?;
        let violations = validate_instance(&inst);
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(InstanceError::Invalid(violations))
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, InstanceError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    format_version: u32,
    label: String,
    num_nodes: usize,
    edges: Vec<[usize; 2]>,
    num_objectives: usize,
    weights: Vec<Vec<f64>>,
    seed: u64,
    prng_id: String,
}

/// Draws every weight i.i.d. standard normal, edge-major, from the stream keyed by `seed`.
pub fn generate_gaussian_weights(graph: Graph, num_objectives: usize, seed: u64) -> MultiObjectiveInstance {
    assert!(num_objectives >= 2, "need at least two objectives");
    let mut stream = rng::stream(seed);
    let weights = (0..graph.num_edges() * num_objectives).map(|_| rng::standard_normal(&mut stream)).collect();
    let label = format!("gaussian-n{}-e{}-m{}-s{}", graph.num_nodes(), graph.num_edges(), num_objectives, seed);
    MultiObjectiveInstance::new_unchecked(graph, num_objectives, weights, seed, label)
}

/// A broken instance invariant and where it was found.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NoNodes,
    TooFewObjectives { num_objectives: usize },
    SelfLoop { edge: usize, node: usize },
    EndpointOutOfRange { edge: usize, node: usize },
    NotOriented { edge: usize, pair: (usize, usize) },
    DuplicateEdge { edge: usize, pair: (usize, usize) },
    EdgesNotSorted { edge: usize },
    WeightCount { expected: usize, found: usize },
    NonFiniteWeight { edge: usize, objective: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoNodes => write!(f, "graph has no nodes"),
            Violation::TooFewObjectives { num_objectives } => write!(f, "num_objectives = {num_objectives}, need >= 2"),
            Violation::SelfLoop { edge, node } => write!(f, "edge {edge} is a self-loop on node {node}"),
            Violation::EndpointOutOfRange { edge, node } => write!(f, "edge {edge} endpoint {node} out of range"),
            Violation::NotOriented { edge, pair } => write!(f, "edge {edge} {pair:?} is not oriented u < v"),
            Violation::DuplicateEdge { edge, pair } => write!(f, "edge {edge} duplicates pair {pair:?}"),
            Violation::EdgesNotSorted { edge } => write!(f, "edge list not sorted at edge {edge}"),
            Violation::WeightCount { expected, found } => write!(f, "expected {expected} weights, found {found}"),
            Violation::NonFiniteWeight { edge, objective, value } => {
                write!(f, "non-finite weight {value} at (edge {edge}, objective {objective})")
            }
        }
    }
}

/// Lists every violated invariant; empty means the instance is well formed.
pub fn validate_instance(instance: &MultiObjectiveInstance) -> Vec<Violation> {
    let mut out = Vec::new();
    let g = instance.graph();
    let m = instance.num_objectives();
    if g.num_nodes() == 0 {
        out.push(Violation::NoNodes);
    }
    if m < 2 {
        out.push(Violation::TooFewObjectives { num_objectives: m });
    }
    let mut seen = HashSet::new();
    for (e, &(u, v)) in g.edges().iter().enumerate() {
        if u == v {
            out.push(Violation::SelfLoop { edge: e, node: u });
        }
        for node in [u, v] {
            if node >= g.num_nodes() {
                out.push(Violation::EndpointOutOfRange { edge: e, node });
            }
        }
        if u > v {
            out.push(Violation::NotOriented { edge: e, pair: (u, v) });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            out.push(Violation::DuplicateEdge { edge: e, pair: (u.min(v), u.max(v)) });
        }
        if e > 0 && g.edges()[e - 1] > (u, v) {
            out.push(Violation::EdgesNotSorted { edge: e });
        }
    }
    let expected = g.num_edges() * m;
    if instance.weights().len() != expected {
        out.push(Violation::WeightCount { expected, found: instance.weights().len() });
    }
    if m > 0 {
        for (i, &w) in instance.weights().iter().enumerate() {
            if !w.is_finite() {
                out.push(Violation::NonFiniteWeight { edge: i / m, objective: i % m, value: w });
            }
        }
    }
    out
}
