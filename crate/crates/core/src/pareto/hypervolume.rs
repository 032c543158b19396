//! Exact hypervolume of a union of origin-anchored boxes, and a Monte-Carlo estimate.
//!
//! Points are shifted by the reference point first; a point that fails to
//! exceed the reference in every coordinate spans an empty box and is dropped.
//! Two dimensions use a sort-and-sweep, three dimensions sweep the last axis
//! while maintaining an incremental 2D staircase area, and higher dimensions
//! slice along the last axis and recurse.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use super::{Key, ParetoError, ReferencePoint};
use crate::objectives::ObjectiveVector;
use crate::rng::{derive_seed, unit_open};

/// Exact Lebesgue measure of the union of boxes `[r, p]`.
pub fn hypervolume(points: &[ObjectiveVector], r: &ReferencePoint) -> Result<f64, ParetoError> {
    let dim = r.values().len();
    if let Some(p) = points.iter().find(|p| p.dim() != dim) {
        return Err(ParetoError::Dimension { left: p.dim(), right: dim });
    }
    let slices: Vec<&[f64]> = points.iter().map(|p| p.values()).collect();
    Ok(hypervolume_of_slices(&slices, r.values()))
}

/// Same as [`hypervolume`] on raw coordinate slices (all of length `r.len()`).
pub fn hypervolume_of_slices(points: &[&[f64]], r: &[f64]) -> f64 {
    let dim = r.len();
    let mut shifted: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(r).map(|(x, rk)| x - rk).collect::<Vec<f64>>())
        .filter(|p: &Vec<f64>| p.iter().all(|&x| x > 0.0))
        .collect();
    if shifted.is_empty() || dim == 0 {
        return 0.0;
    }
    // Canonical order so the result depends only on the point set.
    shifted.sort_by(|a, b| {
        a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    shifted.dedup();
    let refs: Vec<&[f64]> = shifted.iter().map(Vec::as_slice).collect();
    hv_recursive(&refs, dim)
}

fn hv_recursive(points: &[&[f64]], dim: usize) -> f64 {
    match dim {
        1 => points.iter().map(|p| p[0]).fold(0.0, f64::max),
        2 => hv2(points),
        3 => hv3(points),
        _ => {
            let last = dim - 1;
            let mut order: Vec<&[f64]> = points.to_vec();
            order.sort_by(|a, b| b[last].total_cmp(&a[last]));
            let mut total = 0.0;
            for i in 0..order.len() {
                let next = order.get(i + 1).map_or(0.0, |p| p[last]);
                let depth = order[i][last] - next;
                if depth > 0.0 {
                    total += hv_recursive(&order[..=i], last) * depth;
                }
            }
            total
        }
    }
}

fn hv2(points: &[&[f64]]) -> f64 {
    let mut order: Vec<(f64, f64)> = points.iter().map(|p| (p[0], p[1])).collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.1.total_cmp(&a.1)));
    let mut area = 0.0;
    let mut top = 0.0;
    for (x, y) in order {
        if y > top {
            area += x * (y - top);
            top = y;
        }
    }
    area
}

/// Union area of origin-anchored rectangles, updated on insertion.
#[derive(Default)]
struct Staircase {
    /// x -> y with x ascending and y descending.
    steps: BTreeMap<Key, f64>,
    area: f64,
}

impl Staircase {
    fn insert(&mut self, x: f64, y: f64) {
        let cover_right = self.steps.range(Key(x)..).next().map(|(k, &sy)| (k.0, sy));
        let mut height = match cover_right {
            Some((_, sy)) if sy >= y => return,
            Some((_, sy)) => sy,
            None => 0.0,
        };
        let mut doomed: Vec<Key> = Vec::new();
        if let Some((kx, _)) = cover_right {
            if kx == x {
                doomed.push(Key(kx));
            }
        }
        let mut right = x;
        let mut added = 0.0;
        let mut covered = false;
        for (k, &sy) in self.steps.range(..Key(x)).rev() {
            added += (right - k.0) * (y - height);
            if sy >= y {
                covered = true;
                break;
            }
            doomed.push(*k);
            height = sy;
            right = k.0;
        }
        if !covered {
            added += right * (y - height);
        }
        for k in doomed {
            self.steps.remove(&k);
        }
        self.steps.insert(Key(x), y);
        self.area += added;
    }
}

fn hv3(points: &[&[f64]]) -> f64 {
    let mut order: Vec<&[f64]> = points.to_vec();
    order.sort_by(|a, b| b[2].total_cmp(&a[2]));
    let mut stair = Staircase::default();
    let mut volume = 0.0;
    for i in 0..order.len() {
        stair.insert(order[i][0], order[i][1]);
        let next = order.get(i + 1).map_or(0.0, |p| p[2]);
        volume += stair.area * (order[i][2] - next);
    }
    volume
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

const MC_CHUNK: u64 = 1 << 14;

/// Uniform sampling in the box `[r, upper]`; the estimate is the box volume
/// times the fraction of samples weakly dominated by some point.
pub fn hv_monte_carlo(
    points: &[ObjectiveVector],
    r: &[f64],
    upper: &[f64],
    num_samples: u64,
    seed: u64,
) -> Result<McEstimate, ParetoError> {
    let dim = r.len();
    if upper.len() != dim {
        return Err(ParetoError::Dimension { left: upper.len(), right: dim });
    }
    for (i, p) in points.iter().enumerate() {
        if p.dim() != dim {
            return Err(ParetoError::Dimension { left: p.dim(), right: dim });
        }
        if p.values().iter().zip(upper).any(|(x, u)| x > u) {
            return Err(ParetoError::OutsideBox { index: i });
        }
    }
    let volume: f64 = r.iter().zip(upper).map(|(a, b)| (b - a).max(0.0)).product();
    if points.is_empty() || num_samples == 0 || volume == 0.0 {
        return Ok(McEstimate { estimate: 0.0, std_error: 0.0 });
    }
    // Sorted by the first coordinate, descending: only a prefix can cover a sample.
    let mut sorted: Vec<&[f64]> = points.iter().map(|p| p.values()).collect();
    sorted.sort_by(|a, b| b[0].total_cmp(&a[0]));
    let firsts: Vec<f64> = sorted.iter().map(|p| p[0]).collect();

    let chunks = num_samples.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, &[c]));
            let count = MC_CHUNK.min(num_samples - c * MC_CHUNK);
            let mut x = vec![0.0; dim];
            let mut hits = 0u64;
            for _ in 0..count {
                for k in 0..dim {
                    // unit_open is (0, 1]; reflect to [0, 1).
                    x[k] = r[k] + (1.0 - unit_open(&mut rng)) * (upper[k] - r[k]);
                }
                let candidates = firsts.partition_point(|&f| f >= x[0]);
                if sorted[..candidates].iter().any(|p| p.iter().zip(&x).all(|(pk, xk)| pk >= xk)) {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let frac = hits as f64 / num_samples as f64;
    Ok(McEstimate {
        estimate: volume * frac,
        std_error: volume * (frac * (1.0 - frac) / num_samples as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hv(points: &[&[f64]], r: &[f64]) -> f64 {
        hypervolume_of_slices(points, r)
    }

    #[test]
    fn single_box() {
        assert_eq!(hv(&[&[3.0, 2.0, 4.0]], &[1.0, 1.0, 1.0]), 2.0 * 1.0 * 3.0);
        assert_eq!(hv(&[&[3.0, 2.0, 4.0, 2.0]], &[1.0, 1.0, 1.0, 0.0]), 12.0);
    }

    #[test]
    fn two_dimensional_pair() {
        assert_eq!(hv(&[&[2.0, 1.0], &[1.0, 2.0]], &[0.0, 0.0]), 3.0);
    }

    #[test]
    fn points_below_reference_vanish() {
        assert_eq!(hv(&[&[2.0, 0.5]], &[1.0, 1.0]), 0.0);
        assert_eq!(hv(&[&[2.0, 1.0], &[1.0, 2.0]], &[1.0, 1.0]), 0.0);
        assert_eq!(hv(&[], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn staircase_overlaps() {
        let a: &[f64] = &[2.0, 2.0, 1.0];
        let b: &[f64] = &[1.0, 1.0, 3.0];
        let c: &[f64] = &[3.0, 1.0, 1.0];
        // Inclusion-exclusion by hand.
        assert_eq!(hv(&[a, b, c], &[0.0, 0.0, 0.0]), 4.0 + 3.0 + 3.0 - 1.0 - 2.0 - 1.0 + 1.0);
    }

    #[test]
    fn monte_carlo_trivial_cases() {
        let full = vec![ObjectiveVector::new(vec![1.0, 1.0]).unwrap()];
        let est = hv_monte_carlo(&full, &[0.0, 0.0], &[1.0, 1.0], 1000, 1).unwrap();
        assert_eq!(est, McEstimate { estimate: 1.0, std_error: 0.0 });
        let none = hv_monte_carlo(&[], &[0.0, 0.0], &[1.0, 1.0], 1000, 1).unwrap();
        assert_eq!(none.estimate, 0.0);
        assert!(matches!(
            hv_monte_carlo(&full, &[0.0, 0.0], &[0.5, 1.0], 10, 1),
            Err(ParetoError::OutsideBox { index: 0 })
        ));
    }
}
