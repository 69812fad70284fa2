use rayon::prelude::*;

use srl_dash_core::cluster::{check_series, dtw_distance, DistanceMatrix};
use srl_dash_core::features::FeatureTable;
use srl_dash_core::pipeline::PairwiseDtw;

/// All-pairs DTW spread over the rayon pool, one task per row.
#[derive(Debug, Clone, Copy, Default)]
pub struct Rayon;

impl PairwiseDtw for Rayon {
    fn pairwise(&self, series: &FeatureTable) -> srl_dash_core::Result<DistanceMatrix> {
        let roster = check_series(series)?;
        let rows: Vec<&Vec<f64>> = series.values().collect();
        let n = rows.len();
        let upper: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i + 1..n)
                    .map(|j| dtw_distance(rows[i], rows[j]))
                    .collect::<srl_dash_core::Result<Vec<_>>>()
            })
            .collect::<srl_dash_core::Result<_>>()?;
        let mut entries = vec![0.0; n * n];
        for (i, row) in upper.iter().enumerate() {
            for (off, &d) in row.iter().enumerate() {
                let j = i + 1 + off;
                entries[i * n + j] = d;
                entries[j * n + i] = d;
            }
        }
        DistanceMatrix::from_entries(roster, entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use srl_dash_core::pipeline::Sequential;

    #[test]
    fn matches_sequential() {
        let series: FeatureTable = (0..13)
            .map(|i| {
                let v = (0..6).map(|w| ((i * 7 + w * 3) % 5) as f64 * 0.5).collect();
                (format!("s{i:02}"), v)
            })
            .collect();
        assert_eq!(Rayon.pairwise(&series).unwrap(), Sequential.pairwise(&series).unwrap());
    }

    #[test]
    fn propagates_length_errors() {
        let series: FeatureTable = [("a".to_string(), vec![1.0]), ("b".to_string(), vec![1.0, 2.0])].into();
        assert!(Rayon.pairwise(&series).is_err());
    }
}
