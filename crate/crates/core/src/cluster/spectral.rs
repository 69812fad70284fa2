use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::distance::DistanceMatrix;
use super::kmeans::kmeans;
use super::canonical_labels;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        SpectralConfig {
            restarts: 10,
            max_iter: 300,
        }
    }
}

/// Kernel width: median off-diagonal distance, floored at the smallest
/// positive distance, or 1 when every distance is 0.
pub(crate) fn kernel_width(d: &DistanceMatrix) -> f64 {
    let mut off: Vec<f64> = d.off_diagonal().collect();
    if off.is_empty() {
        return 1.0;
    }
    off.sort_by(f64::total_cmp);
    let mid = off.len() / 2;
    let median = if off.len().is_multiple_of(2) {
        (off[mid - 1] + off[mid]) / 2.0
    } else {
        off[mid]
    };
    let smallest_positive = off.iter().copied().find(|v| *v > 0.0);
    match smallest_positive {
        None => 1.0,
        Some(floor) => median.max(floor),
    }
}

/// Gaussian affinity `exp(-d² / 2σ²)`, diagonal included.
pub(crate) fn affinity(d: &DistanceMatrix) -> DMatrix<f64> {
    let sigma = kernel_width(d);
    let n = d.n();
    DMatrix::from_fn(n, n, |i, j| {
        let x = d.get(i, j);
        libm::exp(-(x * x) / (2.0 * sigma * sigma))
    })
}

/// Rows of the `k` eigenvectors of `I - D^{-1/2} A D^{-1/2}` with the
/// smallest eigenvalues, each row scaled to unit length.
pub(crate) fn embedding(d: &DistanceMatrix, k: usize) -> Vec<Vec<f64>> {
    let a = affinity(d);
    let n = d.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| {
            let deg: f64 = a.row(i).iter().sum();
            if deg > 0.0 {
                1.0 / libm::sqrt(deg)
            } else {
                0.0
            }
        })
        .collect();
    let laplacian = DMatrix::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        id - inv_sqrt[i] * a[(i, j)] * inv_sqrt[j]
    });
    let eig = SymmetricEigen::new(laplacian);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]).then(x.cmp(&y)));
    (0..n)
        .map(|i| {
            let row: Vec<f64> = order[..k].iter().map(|&c| eig.eigenvectors[(i, c)]).collect();
            let norm = libm::sqrt(row.iter().map(|v| v * v).sum::<f64>());
            if norm > 0.0 {
                row.into_iter().map(|v| v / norm).collect()
            } else {
                row
            }
        })
        .collect()
}

/// Spectral clustering with the default k-means settings (10 restarts).
pub fn spectral_cluster(d: &DistanceMatrix, k: usize, seed: u64) -> Result<Vec<usize>> {
    spectral_cluster_with(d, k, seed, SpectralConfig::default())
}

/// Labels in roster order, canonicalised by first occurrence.
pub fn spectral_cluster_with(
    d: &DistanceMatrix,
    k: usize,
    seed: u64,
    config: SpectralConfig,
) -> Result<Vec<usize>> {
    let n = d.n();
    if k == 0 || k > n {
        return Err(Error::KOutOfRange { k, n });
    }
    if k == 1 {
        return Ok(alloc::vec![0; n]);
    }
    if k == n {
        return Ok((0..n).collect());
    }
    let points = embedding(d, k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = kmeans(&points, k, config.restarts, config.max_iter, &mut rng);
    Ok(canonical_labels(&labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::metrics::adjusted_rand_index;
    use alloc::format;
    use alloc::string::String;
    use alloc::vec;
    use proptest::prelude::*;

    fn blocks(sizes: &[usize], within: f64, between: f64) -> (DistanceMatrix, Vec<usize>) {
        let truth: Vec<usize> = sizes
            .iter()
            .enumerate()
            .flat_map(|(b, &s)| core::iter::repeat_n(b, s))
            .collect();
        let roster: Vec<String> = (0..truth.len()).map(|i| format!("s{i:03}")).collect();
        let mut m = DistanceMatrix::zeros(roster);
        for i in 0..truth.len() {
            for j in i + 1..truth.len() {
                m.set(i, j, if truth[i] == truth[j] { within } else { between });
            }
        }
        (m, truth)
    }

    /// Normalized cut of a 2-partition on the same affinity graph.
    fn ncut(a: &DMatrix<f64>, side: &[bool]) -> f64 {
        let n = side.len();
        let (mut cut, mut vol_a, mut vol_b) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let w = a[(i, j)];
                if side[i] {
                    vol_a += w;
                } else {
                    vol_b += w;
                }
                if side[i] && !side[j] {
                    cut += w;
                }
            }
        }
        if vol_a == 0.0 || vol_b == 0.0 {
            return f64::INFINITY;
        }
        cut / vol_a + cut / vol_b
    }

    #[test]
    fn planted_blocks_match_exhaustive_ncut() {
        let (d, truth) = blocks(&[3, 3], 0.1, 10.0);
        let a = affinity(&d);
        let mut best = (f64::INFINITY, vec![]);
        // all non-trivial 2-partitions, student 0 fixed on side A
        for mask in 1u32..(1 << 5) {
            let side: Vec<bool> = (0..6).map(|i| i == 0 || mask & (1 << (i - 1)) == 0).collect();
            if side.iter().all(|s| *s) {
                continue;
            }
            let value = ncut(&a, &side);
            if value < best.0 {
                best = (value, side);
            }
        }
        let oracle: Vec<usize> = best.1.iter().map(|s| usize::from(!*s)).collect();
        assert_eq!(oracle, truth);
        assert_eq!(spectral_cluster(&d, 2, 42).unwrap(), truth);
    }

    #[test]
    fn k_one_and_k_n() {
        let (d, _) = blocks(&[2, 3], 0.1, 10.0);
        assert_eq!(spectral_cluster(&d, 1, 0).unwrap(), [0; 5]);
        assert_eq!(spectral_cluster(&d, 5, 0).unwrap(), [0, 1, 2, 3, 4]);
        assert_eq!(spectral_cluster(&d, 0, 0), Err(Error::KOutOfRange { k: 0, n: 5 }));
        assert_eq!(spectral_cluster(&d, 6, 0), Err(Error::KOutOfRange { k: 6, n: 5 }));
    }

    #[test]
    fn kernel_width_floors() {
        let (d, _) = blocks(&[2, 2], 0.5, 2.0);
        // two pairs at 0.5, four at 2.0: median 2.0, above the floor
        assert_eq!(kernel_width(&d), 2.0);
        let (d, _) = blocks(&[3, 1], 0.0, 2.0);
        // three zeros, three 2.0 values: median 1.0, floored to 2.0
        assert_eq!(kernel_width(&d), 2.0);
        let (d, _) = blocks(&[4, 1], 0.0, 2.0);
        // six zeros and four 2.0 values: median 0, floored to 2.0
        assert_eq!(kernel_width(&d), 2.0);
        let (d, _) = blocks(&[4], 0.0, 0.0);
        assert_eq!(kernel_width(&d), 1.0);
    }

    #[test]
    fn three_blocks() {
        let (d, truth) = blocks(&[4, 5, 6], 0.2, 8.0);
        let labels = spectral_cluster(&d, 3, 7).unwrap();
        assert_eq!(adjusted_rand_index(&labels, &truth), 1.0);
    }

    #[test]
    fn identical_students_still_use_every_label() {
        let (d, _) = blocks(&[6], 0.0, 0.0);
        let mut labels = spectral_cluster(&d, 2, 1).unwrap();
        labels.sort_unstable();
        labels.dedup();
        assert_eq!(labels, [0, 1]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn deterministic_and_permutation_consistent(
            sizes in prop::collection::vec(2usize..6, 2..4),
            perm_seed in any::<u64>(),
            seed in any::<u64>(),
        ) {
            let (d, truth) = blocks(&sizes, 0.1, 10.0);
            let k = sizes.len();
            let labels = spectral_cluster(&d, k, seed).unwrap();
            prop_assert_eq!(&labels, &spectral_cluster(&d, k, seed).unwrap());
            prop_assert_eq!(adjusted_rand_index(&labels, &truth), 1.0);

            let mut order: Vec<usize> = (0..d.n()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
            let permuted = spectral_cluster(&d.permuted(&order), k, seed).unwrap();
            let carried: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
            prop_assert_eq!(adjusted_rand_index(&permuted, &carried), 1.0);
        }
    }
}
