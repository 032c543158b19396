//! Pareto dominance (maximization), non-dominated archives and filtering,
//! reference points and the figure of merit.

pub mod hypervolume;

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objectives::{ObjectiveVector, SpinState};

pub use hypervolume::{hv_monte_carlo, hypervolume, hypervolume_of_slices, McEstimate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParetoError {
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("front is empty")]
    EmptyFront,
    #[error("hypervolume {hv} exceeds the reference maximum {hv_max}: reference front improved")]
    ReferenceImproved { hv: f64, hv_max: f64 },
    #[error("bounding box does not contain point {index}")]
    OutsideBox { index: usize },
}

/// `true` iff `a >= b` componentwise with at least one strict inequality.
/// Comparisons are exact.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool, ParetoError> {
    if a.dim() != b.dim() {
        return Err(ParetoError::Dimension { left: a.dim(), right: b.dim() });
    }
    Ok(dominates_slice(a.values(), b.values()))
}

#[inline]
pub(crate) fn dominates_slice(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        strict |= x > y;
    }
    strict
}

#[inline]
fn weakly_dominates_slice(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x >= y)
}

/// An objective vector with one state that attains it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub objectives: ObjectiveVector,
    pub state: SpinState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Accepted,
    Dominated,
    Duplicate,
}

/// Mutually non-dominated points with distinct objective vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontArchive {
    dim: usize,
    points: Vec<FrontPoint>,
    insert_count: u64,
}

impl FrontArchive {
    pub fn new(dim: usize) -> Self {
        Self { dim, points: Vec::new(), insert_count: 0 }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[FrontPoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<FrontPoint> {
        self.points
    }

    /// Total states offered, counting multiplicities.
    pub fn insert_count(&self) -> u64 {
        self.insert_count
    }

    pub(crate) fn set_insert_count(&mut self, count: u64) {
        self.insert_count = count;
    }

    pub fn objective_vectors(&self) -> Vec<ObjectiveVector> {
        self.points.iter().map(|p| p.objectives.clone()).collect()
    }

    /// Points sorted by objective vector, for canonical output.
    pub fn sorted_points(&self) -> Vec<FrontPoint> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| a.objectives.total_cmp(&b.objectives));
        pts
    }

    pub fn insert(&mut self, candidate: FrontPoint) -> InsertOutcome {
        self.offer(candidate, 1)
    }

    /// Inserts `candidate` standing for `count` offered states.
    pub fn offer(&mut self, candidate: FrontPoint, count: u64) -> InsertOutcome {
        assert_eq!(candidate.objectives.dim(), self.dim, "candidate dimension must match the archive");
        self.insert_count += count;
        let c = candidate.objectives.values();
        for p in &self.points {
            let q = p.objectives.values();
            if weakly_dominates_slice(q, c) {
                return if q == c { InsertOutcome::Duplicate } else { InsertOutcome::Dominated };
            }
        }
        self.points.retain(|p| !dominates_slice(c, p.objectives.values()));
        self.points.push(candidate);
        InsertOutcome::Accepted
    }

    /// Offers a batch: the batch is pre-filtered to its own non-dominated
    /// subset, then survivors are inserted in input order. Returns the
    /// objective vectors that were accepted.
    pub fn offer_batch(&mut self, candidates: Vec<(FrontPoint, u64)>) -> Vec<ObjectiveVector> {
        let total: u64 = candidates.iter().map(|(_, n)| n).sum();
        let vectors: Vec<ObjectiveVector> = candidates.iter().map(|(p, _)| p.objectives.clone()).collect();
        let keep = nondominated_filter(&vectors);
        self.insert_count += total;
        let mut accepted = Vec::new();
        let mut slots: Vec<Option<FrontPoint>> = candidates.into_iter().map(|(p, _)| Some(p)).collect();
        for i in keep {
            let p = slots[i].take().expect("indices are unique");
            let v = p.objectives.clone();
            if self.offer(p, 0) == InsertOutcome::Accepted {
                accepted.push(v);
            }
        }
        accepted
    }

    /// Verifies mutual non-domination and uniqueness (quadratic).
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut seen = HashSet::new();
        for (i, p) in self.points.iter().enumerate() {
            if !seen.insert(&p.objectives) {
                return Err(format!("duplicate objective vector at {i}"));
            }
            for (j, q) in self.points.iter().enumerate() {
                if i != j && dominates_slice(p.objectives.values(), q.objectives.values()) {
                    return Err(format!("point {i} dominates point {j}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn lex_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.total_cmp(x) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Indices (ascending) of the points not dominated by any other point.
/// Identical vectors are collapsed to their first occurrence.
pub fn nondominated_filter(points: &[ObjectiveVector]) -> Vec<usize> {
    let mut seen = HashSet::with_capacity(points.len());
    let mut unique: Vec<usize> = (0..points.len()).filter(|&i| seen.insert(&points[i])).collect();
    let Some(&first) = unique.first() else { return Vec::new() };
    let dim = points[first].dim();
    let v = |i: usize| points[i].values();
    let mut keep = Vec::new();
    match dim {
        0 => keep.push(first),
        1 => {
            let best = unique.iter().copied().max_by(|&a, &b| v(a)[0].total_cmp(&v(b)[0]).then(b.cmp(&a))).unwrap();
            keep.push(best);
        }
        2 => {
            unique.sort_by(|&a, &b| lex_desc(v(a), v(b)));
            let mut best_y = f64::NEG_INFINITY;
            for i in unique {
                if v(i)[1] > best_y {
                    best_y = v(i)[1];
                    keep.push(i);
                }
            }
        }
        3 => {
            unique.sort_by(|&a, &b| lex_desc(v(a), v(b)));
            // 2D staircase over (f1, f2): keys ascending, values descending.
            let mut stair: BTreeMap<Key, f64> = BTreeMap::new();
            for i in unique {
                let (x, y) = (v(i)[1], v(i)[2]);
                if stair.range(Key(x)..).next().is_some_and(|(_, &sy)| sy >= y) {
                    continue;
                }
                let doomed: Vec<Key> = stair.range(..=Key(x)).rev().take_while(|(_, &sy)| sy <= y).map(|(k, _)| *k).collect();
                for k in doomed {
                    stair.remove(&k);
                }
                stair.insert(Key(x), y);
                keep.push(i);
            }
        }
        _ => {
            let sums: Vec<f64> = points.iter().map(|p| p.values().iter().sum()).collect();
            unique.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then_with(|| lex_desc(v(a), v(b))));
            for i in unique {
                if !keep.iter().any(|&k| dominates_slice(v(k), v(i))) {
                    keep.push(i);
                }
            }
        }
    }
    keep.sort_unstable();
    keep
}

/// Componentwise lower corner used as the hypervolume origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferencePoint(pub Vec<f64>);

impl ReferencePoint {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Componentwise minimum of the front.
pub fn reference_point(front: &[ObjectiveVector]) -> Result<ReferencePoint, ParetoError> {
    let first = front.first().ok_or(ParetoError::EmptyFront)?;
    let mut r = first.values().to_vec();
    for p in &front[1..] {
        if p.dim() != r.len() {
            return Err(ParetoError::Dimension { left: r.len(), right: p.dim() });
        }
        for (rk, &pk) in r.iter_mut().zip(p.values()) {
            *rk = rk.min(pk);
        }
    }
    Ok(ReferencePoint(r))
}

/// `hv_max - hv + 1`, clamped to 1 when `hv` overshoots by at most `1e-9 * hv_max`.
pub fn figure_of_merit(hv: f64, hv_max: f64) -> Result<f64, ParetoError> {
    let eps = 1e-9 * hv_max.abs();
    if hv > hv_max + eps {
        return Err(ParetoError::ReferenceImproved { hv, hv_max });
    }
    Ok((hv_max - hv + 1.0).max(1.0))
}
