use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::dtw::dtw_distance;
use crate::{Error, Result, StudentId};

/// Symmetric, non-negative, zero-diagonal student × student distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    roster: Vec<StudentId>,
    entries: Vec<f64>,
}

impl DistanceMatrix {
    pub fn zeros(roster: Vec<StudentId>) -> Self {
        let n = roster.len();
        DistanceMatrix {
            roster,
            entries: vec![0.0; n * n],
        }
    }

    /// Builds from row-major entries, checking every invariant.
    pub fn from_entries(roster: Vec<StudentId>, entries: Vec<f64>) -> Result<Self> {
        let n = roster.len();
        if entries.len() != n * n {
            return Err(Error::LengthMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        let m = DistanceMatrix { roster, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.roster.len()
    }

    pub fn roster(&self) -> &[StudentId] {
        &self.roster
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n() + j]
    }

    /// Sets `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let n = self.n();
        self.entries[i * n + j] = value;
        self.entries[j * n + i] = value;
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn max(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }

    pub fn off_diagonal(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| self.get(i, j)))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        for i in 0..n {
            if self.get(i, i) != 0.0 {
                return Err(Error::InvalidParameter(format!("non-zero diagonal at {i}")));
            }
            for j in 0..n {
                let v = self.get(i, j);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidParameter(format!("bad distance {v} at ({i},{j})")));
                }
                if v != self.get(j, i) {
                    return Err(Error::InvalidParameter(format!("asymmetric at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    /// Same matrix with rows and columns reordered to `order` (indices into
    /// the current roster).
    pub fn permuted(&self, order: &[usize]) -> Self {
        let roster: Vec<String> = order.iter().map(|&i| self.roster[i].clone()).collect();
        let mut out = DistanceMatrix::zeros(roster);
        for (a, &i) in order.iter().enumerate() {
            for (b, &j) in order.iter().enumerate() {
                out.entries[a * order.len() + b] = self.get(i, j);
            }
        }
        out
    }
}

/// Checks that all series share one non-zero length; returns the roster.
pub fn check_series(series: &BTreeMap<StudentId, Vec<f64>>) -> Result<Vec<StudentId>> {
    let mut expected = None;
    for values in series.values() {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        match expected {
            None => expected = Some(values.len()),
            Some(len) if len != values.len() => {
                return Err(Error::LengthMismatch {
                    expected: len,
                    found: values.len(),
                })
            }
            _ => {}
        }
    }
    Ok(series.keys().cloned().collect())
}

/// DTW between every pair of students, in roster (key) order.
pub fn pairwise_distances(series: &BTreeMap<StudentId, Vec<f64>>) -> Result<DistanceMatrix> {
    let roster = check_series(series)?;
    let rows: Vec<&Vec<f64>> = series.values().collect();
    let mut m = DistanceMatrix::zeros(roster);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            m.set(i, j, dtw_distance(rows[i], rows[j])?);
        }
    }
    Ok(m)
}

/// Entrywise sum of feature matrices. With `normalize`, each matrix is first
/// divided by its largest entry; all-zero matrices are added unchanged.
pub fn dimension_distance(matrices: &[DistanceMatrix], normalize: bool) -> Result<DistanceMatrix> {
    let first = matrices
        .first()
        .ok_or_else(|| Error::RosterMismatch("no matrices to combine".into()))?;
    let mut out = DistanceMatrix::zeros(first.roster.clone());
    for m in matrices {
        if m.roster != first.roster {
            return Err(Error::RosterMismatch("matrices use different roster orders".into()));
        }
        let scale = if normalize && m.max() > 0.0 { m.max() } else { 1.0 };
        for (o, v) in out.entries.iter_mut().zip(&m.entries) {
            *o += v / scale;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn table(rows: &[(&str, &[f64])]) -> BTreeMap<StudentId, Vec<f64>> {
        rows.iter().map(|(k, v)| (k.to_string(), v.to_vec())).collect()
    }

    /// Quadratic-time DTW written independently of the production routine
    /// (full cost matrix, explicit boundary handling).
    fn oracle_dtw(a: &[f64], b: &[f64]) -> f64 {
        let (n, m) = (a.len(), b.len());
        let mut c = vec![vec![0.0f64; m]; n];
        for i in 0..n {
            for j in 0..m {
                let d = (a[i] - b[j]).abs();
                c[i][j] = d + match (i, j) {
                    (0, 0) => 0.0,
                    (0, _) => c[0][j - 1],
                    (_, 0) => c[i - 1][0],
                    _ => c[i - 1][j - 1].min(c[i - 1][j]).min(c[i][j - 1]),
                };
            }
        }
        c[n - 1][m - 1]
    }

    #[test]
    fn single_student_is_zero() {
        let m = pairwise_distances(&table(&[("a", &[1.0, 2.0])])).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn identical_series_have_zero_distance() {
        let m = pairwise_distances(&table(&[("a", &[1.0, 2.0]), ("b", &[1.0, 2.0])])).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
    }

    #[test]
    fn hand_built_series_match_oracle() {
        let rows: [(&str, &[f64]); 3] = [
            ("a", &[0.0, 1.0, 3.0, 2.0]),
            ("b", &[1.0, 1.0, 2.0, 5.0]),
            ("c", &[4.0, 0.0, 0.0, 1.0]),
        ];
        let m = pairwise_distances(&table(&rows)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 0.0 } else { oracle_dtw(rows[i].1, rows[j].1) };
                assert_eq!(m.get(i, j), expected, "({i},{j})");
            }
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let err = pairwise_distances(&table(&[("a", &[1.0]), ("b", &[1.0, 2.0])]));
        assert_eq!(err, Err(Error::LengthMismatch { expected: 1, found: 2 }));
    }

    fn matrix(roster: &[&str], upper: &[f64]) -> DistanceMatrix {
        let mut m = DistanceMatrix::zeros(roster.iter().map(|s| s.to_string()).collect());
        let mut k = 0;
        for i in 0..roster.len() {
            for j in i + 1..roster.len() {
                m.set(i, j, upper[k]);
                k += 1;
            }
        }
        m
    }

    #[test]
    fn sum_with_zero_and_doubling() {
        let a = matrix(&["x", "y", "z"], &[1.0, 2.0, 3.0]);
        let zero = DistanceMatrix::zeros(a.roster().to_vec());
        assert_eq!(dimension_distance(&[a.clone(), zero.clone()], false).unwrap(), a);
        assert_eq!(dimension_distance(&[a.clone(), zero], true).unwrap().max(), 1.0);
        let doubled = dimension_distance(&[a.clone(), a.clone()], false).unwrap();
        for (d, v) in doubled.entries().iter().zip(a.entries()) {
            assert_eq!(*d, 2.0 * v);
        }
    }

    #[test]
    fn normalization_balances_units() {
        let big = matrix(&["x", "y", "z"], &[10.0, 5.0, 2.0]);
        let small = matrix(&["x", "y", "z"], &[0.01, 0.1, 0.05]);
        let sum = dimension_distance(&[big.clone(), small.clone()], true).unwrap();
        // recompute each contribution after scaling by its own maximum
        for i in 0..3 {
            for j in 0..3 {
                let b = big.get(i, j) / 10.0;
                let s = small.get(i, j) / 0.1;
                assert!((0.0..=1.0).contains(&b) && (0.0..=1.0).contains(&s));
                assert!((sum.get(i, j) - (b + s)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn roster_mismatch_rejected() {
        let a = matrix(&["x", "y"], &[1.0]);
        let b = matrix(&["y", "x"], &[1.0]);
        assert!(matches!(dimension_distance(&[a, b], true), Err(Error::RosterMismatch(_))));
    }

    proptest! {
        #[test]
        fn pairwise_output_is_valid(rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 1..8)) {
            let series: BTreeMap<_, _> = rows.into_iter().enumerate().map(|(i, r)| (format!("s{i:02}"), r)).collect();
            let m = pairwise_distances(&series).unwrap();
            prop_assert!(m.validate().is_ok());
        }
    }
}
