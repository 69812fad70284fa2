use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::canonical_labels;
use crate::{Error, Result};

/// Number of positions where two tuples differ.
pub fn hamming(a: &[u32], b: &[u32]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KModesConfig {
    pub max_iter: usize,
    /// Independent initialisations; the lowest final cost wins.
    pub n_init: usize,
}

impl Default for KModesConfig {
    fn default() -> Self {
        KModesConfig {
            max_iter: 100,
            n_init: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KModesResult {
    /// Cluster per row, canonicalised by first occurrence. Clusters that
    /// ended empty are dropped, so labels are `0..modes.len()`.
    pub assignments: Vec<usize>,
    pub modes: Vec<Vec<u32>>,
    pub cost: usize,
    /// Total cost after the first assignment and after every iteration.
    pub cost_history: Vec<usize>,
    pub iterations: usize,
}

fn nearest(row: &[u32], modes: &[Vec<u32>]) -> usize {
    let mut best = (0, usize::MAX);
    for (c, mode) in modes.iter().enumerate() {
        let d = hamming(row, mode);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

fn total_cost(rows: &[Vec<u32>], labels: &[usize], modes: &[Vec<u32>]) -> usize {
    rows.iter()
        .zip(labels)
        .map(|(r, &l)| hamming(r, &modes[l]))
        .sum()
}

fn seed_modes<R: Rng>(rows: &[Vec<u32>], k: usize, rng: &mut R) -> Vec<Vec<u32>> {
    let n = rows.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut modes = vec![rows[first].clone()];
    let mut dist: Vec<usize> = rows.iter().map(|r| hamming(r, &rows[first])).collect();
    while modes.len() < k {
        let weights: Vec<u64> = dist.iter().map(|&d| (d * d) as u64).collect();
        let total: u64 = weights.iter().sum();
        let pick = if total > 0 {
            let mut target = rng.random_range(0..total);
            let mut pick = 0;
            for (i, &w) in weights.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen[*i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        modes.push(rows[pick].clone());
        for (d, r) in dist.iter_mut().zip(rows) {
            *d = (*d).min(hamming(r, &rows[pick]));
        }
    }
    modes
}

/// Coordinatewise majority; ties go to the smallest label.
fn majority(rows: &[Vec<u32>], labels: &[usize], cluster: usize, arity: usize) -> Option<Vec<u32>> {
    let mut tallies: Vec<BTreeMap<u32, usize>> = vec![BTreeMap::new(); arity];
    let mut any = false;
    for (row, _) in rows.iter().zip(labels).filter(|(_, &l)| l == cluster) {
        any = true;
        for (t, v) in tallies.iter_mut().zip(row) {
            *t.entry(*v).or_default() += 1;
        }
    }
    any.then(|| {
        tallies
            .iter()
            .map(|t| {
                t.iter()
                    .fold((0u32, 0usize), |best, (&v, &c)| if c > best.1 { (v, c) } else { best })
                    .0
            })
            .collect()
    })
}

/// Moves the row farthest from its mode into each empty cluster. Only rows
/// at a positive distance from their mode, in clusters with more than one
/// member, are eligible.
fn reseed_empty(rows: &[Vec<u32>], labels: &mut [usize], modes: &mut [Vec<u32>]) {
    let k = modes.len();
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for empty in 0..k {
        if counts[empty] > 0 {
            continue;
        }
        let mut donor: Option<(usize, usize)> = None;
        for (i, row) in rows.iter().enumerate() {
            let l = labels[i];
            if counts[l] < 2 {
                continue;
            }
            let d = hamming(row, &modes[l]);
            if d > 0 && donor.is_none_or(|(_, bd)| d > bd) {
                donor = Some((i, d));
            }
        }
        if let Some((i, _)) = donor {
            counts[labels[i]] -= 1;
            labels[i] = empty;
            counts[empty] = 1;
            modes[empty] = rows[i].clone();
        }
    }
}

fn run_once<R: Rng>(rows: &[Vec<u32>], k: usize, max_iter: usize, rng: &mut R) -> KModesResult {
    let arity = rows[0].len();
    let mut modes = seed_modes(rows, k, rng);
    let mut labels: Vec<usize> = rows.iter().map(|r| nearest(r, &modes)).collect();
    let mut history = vec![total_cost(rows, &labels, &modes)];
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        for (c, slot) in modes.iter_mut().enumerate() {
            if let Some(mode) = majority(rows, &labels, c, arity) {
                *slot = mode;
            }
        }
        reseed_empty(rows, &mut labels, &mut modes);
        history.push(total_cost(rows, &labels, &modes));
        let next: Vec<usize> = rows.iter().map(|r| nearest(r, &modes)).collect();
        if next == labels {
            break;
        }
        labels = next;
        history.push(total_cost(rows, &labels, &modes));
    }
    let cost = total_cost(rows, &labels, &modes);
    let canonical = canonical_labels(&labels);
    let mut ordered: Vec<(usize, Vec<u32>)> = Vec::new();
    for (old, new) in labels.iter().zip(&canonical) {
        if *new == ordered.len() {
            ordered.push((*new, modes[*old].clone()));
        }
    }
    KModesResult {
        assignments: canonical,
        modes: ordered.into_iter().map(|(_, m)| m).collect(),
        cost,
        cost_history: history,
        iterations,
    }
}

/// K-modes with the default configuration.
pub fn kmodes(rows: &[Vec<u32>], k: usize, seed: u64) -> Result<KModesResult> {
    kmodes_with(rows, k, seed, KModesConfig::default())
}

/// Hamming k-modes with k-means++-style seeding. Deterministic in `seed`.
pub fn kmodes_with(rows: &[Vec<u32>], k: usize, seed: u64, config: KModesConfig) -> Result<KModesResult> {
    let n = rows.len();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    let arity = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != arity) {
        return Err(Error::LengthMismatch {
            expected: arity,
            found: bad.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KModesResult> = None;
    for _ in 0..config.n_init.max(1) {
        let result = run_once(rows, k, config.max_iter, &mut rng);
        if best.as_ref().is_none_or(|b| result.cost < b.cost) {
            best = Some(result);
        }
    }
    Ok(best.expect("at least one initialisation"))
}
