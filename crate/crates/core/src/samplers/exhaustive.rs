use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{SampleSet, Sampler, SamplerError};
use crate::objectives::{ScalarIsing, SpinState};

pub const DEFAULT_MAX_EXHAUSTIVE_NODES: usize = 30;

/// Steps between exact resynchronizations of the Gray-code energy.
const RESYNC_INTERVAL: u64 = 1 << 12;
/// Candidates within this relative window of the running minimum are kept
/// for exact re-evaluation.
const CANDIDATE_WINDOW: f64 = 1e-7;

fn check_size(n: usize, cap: usize) -> Result<(), SamplerError> {
    if n > cap || n > 63 {
        return Err(SamplerError::TooManyNodes { nodes: n, cap: cap.min(63) });
    }
    Ok(())
}

/// Incremental Ising energy under single spin flips.
struct FlipTracker<'a> {
    problem: &'a ScalarIsing,
    adj: Vec<Vec<(usize, f64)>>,
    spins: Vec<i8>,
    field: Vec<f64>,
    energy: f64,
}

impl<'a> FlipTracker<'a> {
    fn new(problem: &'a ScalarIsing) -> Self {
        let n = problem.num_nodes();
        let mut adj = vec![Vec::new(); n];
        for (&(u, v), &j) in problem.graph().edges().iter().zip(problem.couplings()) {
            adj[u].push((v, j));
            adj[v].push((u, j));
        }
        let mut t = Self { problem, adj, spins: vec![1; n], field: vec![0.0; n], energy: 0.0 };
        t.resync();
        t
    }

    fn resync(&mut self) {
        for (i, nbrs) in self.adj.iter().enumerate() {
            self.field[i] = nbrs.iter().map(|&(j, c)| c * self.spins[j] as f64).sum();
        }
        self.energy = self.problem.energy_of(&self.spins);
    }

    fn flip(&mut self, i: usize) {
        let s = self.spins[i] as f64;
        self.energy -= 2.0 * s * self.field[i];
        self.spins[i] = -self.spins[i];
        let ns = -s;
        for &(j, c) in &self.adj[i] {
            self.field[j] += 2.0 * c * ns;
        }
    }
}

fn bits_of(spins: &[i8]) -> u64 {
    spins.iter().enumerate().fold(0, |acc, (i, &s)| if s < 0 { acc | 1 << i } else { acc })
}

/// Exact minimum by enumeration with spin 0 fixed to `+1`; each minimizer is
/// reported together with its global flip. States are returned sorted.
pub fn exhaustive_optimum(problem: &ScalarIsing, max_nodes: usize) -> Result<(f64, Vec<SpinState>), SamplerError> {
    let n = problem.num_nodes();
    check_size(n, max_nodes)?;
    let scale: f64 = problem.couplings().iter().map(|j| j.abs()).sum();
    let window = CANDIDATE_WINDOW * scale;

    let mut tracker = FlipTracker::new(problem);
    let mut best = tracker.energy;
    let mut candidates: Vec<u64> = vec![0];
    let free = n.saturating_sub(1);
    for step in 1..(1u64 << free) {
        // Gray code over spins 1..n: flip the lowest set bit position of `step`.
        let i = step.trailing_zeros() as usize + 1;
        tracker.flip(i);
        if step % RESYNC_INTERVAL == 0 {
            tracker.resync();
        }
        let e = tracker.energy;
        if e <= best + window {
            if e < best {
                best = e;
                if candidates.len() > 1024 {
                    candidates.retain(|&b| {
                        let s = SpinState::from_bits(b, n);
                        problem.energy_of(s.spins()) <= best + window
                    });
                }
            }
            candidates.push(bits_of(&tracker.spins));
        }
    }

    let mut exact: Vec<(f64, u64)> = candidates
        .into_iter()
        .map(|b| (problem.energy_of(SpinState::from_bits(b, n).spins()), b))
        .collect();
    let min = exact.iter().map(|&(e, _)| e).fold(f64::INFINITY, f64::min);
    exact.retain(|&(e, _)| e == min);
    let mut states: Vec<SpinState> = Vec::with_capacity(exact.len() * 2);
    for (_, b) in exact {
        let s = SpinState::from_bits(b, n);
        if n > 0 {
            states.push(s.flipped());
        }
        states.push(s);
    }
    states.sort();
    states.dedup();
    Ok((min, states))
}

/// Deterministic enumerating backend: returns the `num_reads` lowest-energy
/// states (ties broken by state code), each once. Reads beyond `2^N` are
/// credited to the lowest state.
#[derive(Debug, Clone, Copy)]
pub struct ExhaustiveSampler {
    pub max_nodes: usize,
}

impl Default for ExhaustiveSampler {
    fn default() -> Self {
        Self { max_nodes: DEFAULT_MAX_EXHAUSTIVE_NODES }
    }
}

#[derive(PartialEq)]
struct Ranked(f64, u64);

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

impl Sampler for ExhaustiveSampler {
    fn sample(&self, problem: &ScalarIsing, num_reads: u64, _seed: u64) -> Result<SampleSet, SamplerError> {
        if num_reads == 0 {
            return Err(SamplerError::NoReads);
        }
        let n = problem.num_nodes();
        check_size(n, self.max_nodes)?;
        let total = 1u64 << n;
        let keep = num_reads.min(total) as usize;
        let mut heap: BinaryHeap<Ranked> = BinaryHeap::with_capacity(keep + 1);
        let mut spins = vec![1i8; n];
        let mut code = 0u64;
        for step in 0..total {
            if step > 0 {
                let i = step.trailing_zeros() as usize;
                spins[i] = -spins[i];
                code ^= 1 << i;
            }
            let r = Ranked(problem.energy_of(&spins), code);
            if heap.len() < keep {
                heap.push(r);
            } else if r < *heap.peek().expect("heap is full") {
                heap.pop();
                heap.push(r);
            }
        }
        let ranked = heap.into_sorted_vec();
        let mut set = SampleSet {
            states: ranked.iter().map(|r| SpinState::from_bits(r.1, n)).collect(),
            energies: ranked.iter().map(|r| r.0).collect(),
            occurrences: vec![1; ranked.len()],
            timing: 0.0,
        };
        set.occurrences[0] += num_reads - keep as u64;
        Ok(set)
    }

    fn name(&self) -> String {
        "exhaustive".into()
    }
}
