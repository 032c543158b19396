//! Metropolis simulated annealing, the desk-scale stand-in for an annealing processor.

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::{SampleSet, Sampler, SamplerError};
use crate::objectives::{ScalarIsing, SpinState};
use crate::rng::derive_seed;

/// Inverse-temperature ladder for one anneal. `beta_range = None` picks the
/// range from the problem: hot enough to flip the stiffest spin half the
/// time, cold enough to freeze the weakest coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    #[serde(default)]
    pub beta_range: Option<(f64, f64)>,
    #[serde(default = "default_geometric")]
    pub geometric: bool,
}

fn default_geometric() -> bool {
    true
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { sweeps: 100, beta_range: None, geometric: true }
    }
}

impl AnnealSchedule {
    pub fn with_sweeps(sweeps: usize) -> Self {
        Self { sweeps, ..Self::default() }
    }

    fn validate(&self) -> Result<(), SamplerError> {
        if self.sweeps == 0 {
            return Err(SamplerError::Schedule("sweeps must be >= 1".into()));
        }
        if let Some((b0, b1)) = self.beta_range {
            if !(b0 > 0.0 && b0 <= b1 && b1.is_finite()) {
                return Err(SamplerError::Schedule(format!("need 0 < beta_start <= beta_end, got ({b0}, {b1})")));
            }
        }
        Ok(())
    }

    fn betas(&self, problem: &ScalarIsing) -> Vec<f64> {
        let (b0, b1) = self.beta_range.unwrap_or_else(|| auto_beta_range(problem));
        let n = self.sweeps;
        if n == 1 {
            return vec![b1];
        }
        (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if self.geometric {
                    (b0.ln() + t * (b1.ln() - b0.ln())).exp()
                } else {
                    b0 + t * (b1 - b0)
                }
            })
            .collect()
    }
}

fn auto_beta_range(problem: &ScalarIsing) -> (f64, f64) {
    let n = problem.num_nodes();
    let mut stiff = vec![0.0f64; n];
    let mut weakest = f64::INFINITY;
    for (&(u, v), &j) in problem.graph().edges().iter().zip(problem.couplings()) {
        stiff[u] += j.abs();
        stiff[v] += j.abs();
        if j != 0.0 {
            weakest = weakest.min(j.abs());
        }
    }
    let max_delta = 2.0 * stiff.iter().copied().fold(0.0, f64::max);
    if max_delta == 0.0 {
        return (1.0, 1.0);
    }
    let hot = std::f64::consts::LN_2 / max_delta;
    let cold = (100.0f64).ln() / (2.0 * weakest);
    (hot, cold.max(hot))
}

/// Runs `num_reads` independent anneals from uniform random states; read `r`
/// draws from the substream `derive_seed(seed, [r])`.
pub fn sa_sample(problem: &ScalarIsing, num_reads: u64, seed: u64, schedule: &AnnealSchedule) -> Result<SampleSet, SamplerError> {
    if num_reads == 0 {
        return Err(SamplerError::NoReads);
    }
    schedule.validate()?;
    let n = problem.num_nodes();
    let betas = schedule.betas(problem);

    // CSR adjacency.
    let mut offsets = vec![0usize; n + 1];
    for &(u, v) in problem.graph().edges() {
        offsets[u + 1] += 1;
        offsets[v + 1] += 1;
    }
    for i in 0..n {
        offsets[i + 1] += offsets[i];
    }
    let mut fill = offsets.clone();
    let mut nbr = vec![0usize; offsets[n]];
    let mut cpl = vec![0.0f64; offsets[n]];
    for (&(u, v), &j) in problem.graph().edges().iter().zip(problem.couplings()) {
        nbr[fill[u]] = v;
        cpl[fill[u]] = j;
        fill[u] += 1;
        nbr[fill[v]] = u;
        cpl[fill[v]] = j;
        fill[v] += 1;
    }

    let mut spins = vec![0.0f64; n];
    let mut field = vec![0.0f64; n];
    let reads = (0..num_reads).map(|r| {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(derive_seed(seed, &[r]));
        let mut word = 0u64;
        for (i, s) in spins.iter_mut().enumerate() {
            if i % 64 == 0 {
                word = rng.next_u64();
            }
            *s = if word >> (i % 64) & 1 == 1 { 1.0 } else { -1.0 };
        }
        for i in 0..n {
            field[i] = (offsets[i]..offsets[i + 1]).map(|k| cpl[k] * spins[nbr[k]]).sum();
        }
        for &beta in &betas {
            for i in 0..n {
                let x = -2.0 * beta * spins[i] * field[i];
                // exp(-36) is about the resolution of a uniform f64 draw.
                if x <= 0.0 || (x < 36.0 && rng.random::<f64>() < (-x).exp()) {
                    let s = -spins[i];
                    spins[i] = s;
                    for k in offsets[i]..offsets[i + 1] {
                        field[nbr[k]] += 2.0 * cpl[k] * s;
                    }
                }
            }
        }
        SpinState::new(spins.iter().map(|&s| if s > 0.0 { 1 } else { -1 }).collect()).expect("spins are +-1")
    });
    Ok(SampleSet::from_reads(problem, reads.collect::<Vec<_>>()))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulatedAnnealing {
    pub schedule: AnnealSchedule,
}

impl SimulatedAnnealing {
    pub fn new(schedule: AnnealSchedule) -> Self {
        Self { schedule }
    }
}

impl Sampler for SimulatedAnnealing {
    fn sample(&self, problem: &ScalarIsing, num_reads: u64, seed: u64) -> Result<SampleSet, SamplerError> {
        sa_sample(problem, num_reads, seed, &self.schedule)
    }

    fn name(&self) -> String {
        "sa".into()
    }
}
