//! Objective evaluation, weight vectors and scalarized Ising problems.
//!
//! Objective `k` of a state `s` is `F_k(s) = -sum_e s_u s_v J_{e,k}` and is
//! maximized. Samplers minimize the Ising energy `E(s) = sum_e J_e s_u s_v`
//! of a scalarized problem with `J_e = sum_k c_k J_{e,k}`, so
//! `E(s) = -sum_k c_k F_k(s)`.

use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Graph, MultiObjectiveInstance};
use crate::rng;

/// Tolerance on `|sum c_k - 1|` for a valid weight vector.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// Default programmable coupling range.
pub const DEFAULT_COUPLING_RANGE: (f64, f64) = (-2.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObjectiveError {
    #[error("state has {found} spins, instance has {expected} nodes")]
    StateLength { expected: usize, found: usize },
    #[error("objective index {index} out of range for {count} objectives")]
    ObjectiveIndex { index: usize, count: usize },
    #[error("weight vector has {found} entries, instance has {expected} objectives")]
    WeightLength { expected: usize, found: usize },
    #[error("spin values must be -1 or +1, found {0}")]
    SpinValue(i8),
    #[error("invalid weight vector: {0}")]
    Simplex(String),
    #[error("non-finite objective value")]
    NonFinite,
}

/// A `{-1, +1}` assignment to every node.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinState(Vec<i8>);

impl SpinState {
    pub fn new(spins: Vec<i8>) -> Result<Self, ObjectiveError> {
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(ObjectiveError::SpinValue(bad));
        }
        Ok(Self(spins))
    }

    /// Bit `i` of `bits` set means spin `i` is `-1`.
    pub fn from_bits(bits: u64, len: usize) -> Self {
        Self((0..len).map(|i| if bits >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn all_up(len: usize) -> Self {
        Self(vec![1; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

impl TryFrom<Vec<i8>> for SpinState {
    type Error = ObjectiveError;
    fn try_from(v: Vec<i8>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<SpinState> for Vec<i8> {
    fn from(s: SpinState) -> Self {
        s.0
    }
}

/// The `M` objective values of one state. Entries are finite; `-0.0` is
/// normalized to `0.0` so equality and hashing agree.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ObjectiveVector(Vec<f64>);

impl ObjectiveVector {
    pub fn new(values: Vec<f64>) -> Result<Self, ObjectiveError> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ObjectiveError::NonFinite);
        }
        Ok(Self(values.into_iter().map(|v| v + 0.0).collect()))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Total order on vectors: lexicographic by value.
    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                std::cmp::Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl PartialEq for ObjectiveVector {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl Eq for ObjectiveVector {}

impl Hash for ObjectiveVector {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for v in &self.0 {
            v.to_bits().hash(state);
        }
    }
}

impl TryFrom<Vec<f64>> for ObjectiveVector {
    type Error = ObjectiveError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<ObjectiveVector> for Vec<f64> {
    fn from(v: ObjectiveVector) -> Self {
        v.0
    }
}

/// A point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(c: Vec<f64>) -> Result<Self, ObjectiveError> {
        if c.is_empty() {
            return Err(ObjectiveError::Simplex("empty".into()));
        }
        if c.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(ObjectiveError::Simplex(format!("negative or non-finite entry in {c:?}")));
        }
        let sum: f64 = c.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(ObjectiveError::Simplex(format!("entries sum to {sum}")));
        }
        Ok(Self(c))
    }

    pub fn unit(dim: usize, k: usize) -> Self {
        let mut c = vec![0.0; dim];
        c[k] = 1.0;
        Self(c)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for WeightVector {
    type Error = ObjectiveError;
    fn try_from(v: Vec<f64>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<WeightVector> for Vec<f64> {
    fn from(v: WeightVector) -> Self {
        v.0
    }
}

/// How weight vectors are drawn for a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum WeightDistribution {
    /// Flat Dirichlet: normalized unit-rate exponentials.
    #[default]
    UniformSimplex,
    /// Symmetric Dirichlet with the given concentration (1.0 is uniform).
    Dirichlet { concentration: f64 },
}

impl WeightDistribution {
    pub fn sample<R: RngCore + ?Sized>(&self, dim: usize, rng: &mut R) -> WeightVector {
        match *self {
            WeightDistribution::UniformSimplex => sample_weight_vector(dim, rng),
            WeightDistribution::Dirichlet { concentration } => {
                assert!(dim >= 2, "need at least two objectives");
                let gamma = Gamma::new(concentration, 1.0).expect("concentration must be positive");
                loop {
                    let draws: Vec<f64> = (0..dim).map(|_| gamma.sample(rng)).collect();
                    if let Some(c) = normalize(draws) {
                        return c;
                    }
                }
            }
        }
    }
}

fn normalize(draws: Vec<f64>) -> Option<WeightVector> {
    let total: f64 = draws.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    let mut c: Vec<f64> = draws.iter().map(|d| d / total).collect();
    // Push the rounding residue into the largest entry so the sum is 1 to within an ulp.
    let residue = 1.0 - c.iter().sum::<f64>();
    let (imax, _) = c.iter().enumerate().fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    c[imax] = (c[imax] + residue).max(0.0);
    WeightVector::new(c).ok()
}

/// Uniform draw from the `(M-1)`-simplex via normalized exponential draws.
pub fn sample_weight_vector<R: RngCore + ?Sized>(dim: usize, rng: &mut R) -> WeightVector {
    assert!(dim >= 2, "need at least two objectives");
    loop {
        let draws: Vec<f64> = (0..dim).map(|_| rng::exponential(rng)).collect();
        if let Some(c) = normalize(draws) {
            return c;
        }
    }
}

fn check_state(instance: &MultiObjectiveInstance, s: &SpinState) -> Result<(), ObjectiveError> {
    if s.len() != instance.num_nodes() {
        return Err(ObjectiveError::StateLength { expected: instance.num_nodes(), found: s.len() });
    }
    Ok(())
}

pub fn evaluate_objective(instance: &MultiObjectiveInstance, k: usize, s: &SpinState) -> Result<f64, ObjectiveError> {
    check_state(instance, s)?;
    let m = instance.num_objectives();
    if k >= m {
        return Err(ObjectiveError::ObjectiveIndex { index: k, count: m });
    }
    let mut acc = 0.0;
    for (e, &(u, v)) in instance.graph().edges().iter().enumerate() {
        let w = instance.weight(e, k);
        acc += if s.spins()[u] == s.spins()[v] { w } else { -w };
    }
    Ok(-acc + 0.0)
}

/// Writes all objective values of `spins` into `out` (length `M`).
///
/// Accumulates edge by edge in canonical order; every evaluation path in the
/// crate goes through here so identical states give bit-identical vectors.
pub(crate) fn objectives_into(instance: &MultiObjectiveInstance, spins: &[i8], out: &mut [f64]) {
    let m = instance.num_objectives();
    out.iter_mut().for_each(|x| *x = 0.0);
    for (e, &(u, v)) in instance.graph().edges().iter().enumerate() {
        let row = instance.edge_weights(e);
        if spins[u] == spins[v] {
            for k in 0..m {
                out[k] += row[k];
            }
        } else {
            for k in 0..m {
                out[k] -= row[k];
            }
        }
    }
    for x in out.iter_mut() {
        *x = -*x + 0.0;
    }
}

pub fn evaluate_all(instance: &MultiObjectiveInstance, s: &SpinState) -> Result<ObjectiveVector, ObjectiveError> {
    check_state(instance, s)?;
    let mut out = vec![0.0; instance.num_objectives()];
    objectives_into(instance, s.spins(), &mut out);
    ObjectiveVector::new(out)
}

/// Single-objective Ising problem produced by scalarizing an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarIsing {
    graph: Arc<Graph>,
    couplings: Vec<f64>,
    scale_factor: f64,
    source_weights: Option<WeightVector>,
}

impl ScalarIsing {
    /// A bare problem with unit scale and no source weight vector.
    pub fn new(graph: Arc<Graph>, couplings: Vec<f64>) -> Self {
        assert_eq!(graph.num_edges(), couplings.len(), "one coupling per edge");
        Self { graph, couplings, scale_factor: 1.0, source_weights: None }
    }

    pub fn from_graph(graph: Graph, couplings: Vec<f64>) -> Self {
        Self::new(Arc::new(graph), couplings)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn shared_graph(&self) -> &Arc<Graph> {
        &self.graph
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale_factor
    }

    pub fn source_weights(&self) -> Option<&WeightVector> {
        self.source_weights.as_ref()
    }

    /// `sum_e J_e s_u s_v` accumulated in edge order.
    pub fn energy_of(&self, spins: &[i8]) -> f64 {
        let mut acc = 0.0;
        for (&(u, v), &j) in self.graph.edges().iter().zip(&self.couplings) {
            acc += if spins[u] == spins[v] { j } else { -j };
        }
        acc
    }

    pub fn energy(&self, s: &SpinState) -> Result<f64, ObjectiveError> {
        if s.len() != self.num_nodes() {
            return Err(ObjectiveError::StateLength { expected: self.num_nodes(), found: s.len() });
        }
        Ok(self.energy_of(s.spins()))
    }

    pub fn is_all_zero(&self) -> bool {
        self.couplings.iter().all(|&j| j == 0.0)
    }
}

pub fn scalarize(instance: &MultiObjectiveInstance, c: &WeightVector) -> Result<ScalarIsing, ObjectiveError> {
    let m = instance.num_objectives();
    if c.dim() != m {
        return Err(ObjectiveError::WeightLength { expected: m, found: c.dim() });
    }
    let couplings = (0..instance.graph().num_edges())
        .map(|e| instance.edge_weights(e).iter().zip(c.values()).map(|(j, ck)| ck * j).sum::<f64>())
        .collect();
    Ok(ScalarIsing {
        graph: instance.shared_graph(),
        couplings,
        scale_factor: 1.0,
        source_weights: Some(c.clone()),
    })
}

/// Multiplies all couplings by the largest `alpha > 0` that keeps every
/// coupling inside `[lo, hi]`. Each sign is bounded separately; an all-zero
/// problem passes through with `alpha = 1`.
pub fn autoscale(problem: &ScalarIsing, lo: f64, hi: f64) -> ScalarIsing {
    assert!(lo < 0.0 && 0.0 < hi, "coupling range must straddle zero");
    let max_pos = problem.couplings.iter().copied().fold(0.0_f64, f64::max);
    let min_neg = problem.couplings.iter().copied().fold(0.0_f64, f64::min);
    let mut alpha = f64::INFINITY;
    if max_pos > 0.0 {
        alpha = alpha.min(hi / max_pos);
    }
    if min_neg < 0.0 {
        alpha = alpha.min(lo / min_neg);
    }
    if !alpha.is_finite() {
        return ScalarIsing { scale_factor: problem.scale_factor, ..problem.clone() };
    }
    let pos_binding = max_pos > 0.0 && hi / max_pos == alpha;
    let neg_binding = min_neg < 0.0 && lo / min_neg == alpha;
    let couplings = problem
        .couplings
        .iter()
        .map(|&j| {
            // Pin the binding extremes exactly; rounding could leave them an ulp outside.
            if pos_binding && j == max_pos {
                hi
            } else if neg_binding && j == min_neg {
                lo
            } else {
                (alpha * j).clamp(lo, hi)
            }
        })
        .collect();
    ScalarIsing {
        graph: Arc::clone(&problem.graph),
        couplings,
        scale_factor: problem.scale_factor * alpha,
        source_weights: problem.source_weights.clone(),
    }
}
