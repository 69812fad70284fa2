use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::describe::DimensionClustering;
use super::kmodes::kmodes;
use crate::features::Dimension;
use crate::ingest::GradeBook;
use crate::{Error, Result, StudentId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentProfile {
    pub profile_id: usize,
    /// One dimension label per dimension, in `Dimension::ALL` order.
    pub mode: [usize; 5],
    pub members: BTreeSet<StudentId>,
    /// `None` when no member has a grade.
    pub grade_mean: Option<f64>,
    /// Sample standard deviation; `None` with fewer than two grades.
    pub grade_sd: Option<f64>,
}

impl StudentProfile {
    pub fn label(&self, dimension: Dimension) -> usize {
        self.mode[dimension.index()]
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }
}

fn grade_stats<'a>(grades: &GradeBook, members: impl Iterator<Item = &'a StudentId>) -> (Option<f64>, Option<f64>) {
    let values: Vec<f64> = members.filter_map(|s| grades.get(s)).collect();
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        libm::sqrt(ss / (n - 1.0))
    });
    (Some(mean), sd)
}

/// K-modes over each student's five dimension labels. Students missing from
/// the grade book count as members but not in the grade statistics. Profiles
/// are numbered by first occurrence in roster order; empty ones are dropped.
pub fn build_profiles(
    clusterings: &BTreeMap<Dimension, DimensionClustering>,
    grades: &GradeBook,
    k_profiles: usize,
    seed: u64,
) -> Result<Vec<StudentProfile>> {
    let ordered: Vec<&DimensionClustering> = Dimension::ALL
        .iter()
        .map(|d| clusterings.get(d).ok_or(Error::MissingDimension(*d)))
        .collect::<Result<_>>()?;
    let roster: Vec<&StudentId> = ordered[0].labels.keys().collect();
    let mut rows = Vec::with_capacity(roster.len());
    for student in &roster {
        let mut row = Vec::with_capacity(5);
        for c in &ordered {
            let label = c.label(student).ok_or_else(|| {
                Error::RosterMismatch(alloc::format!("{student} has no {} label", c.dimension))
            })?;
            row.push(label as u32);
        }
        rows.push(row);
    }
    for c in &ordered[1..] {
        if c.labels.len() != roster.len() {
            return Err(Error::RosterMismatch(alloc::format!(
                "{} labels {} students, expected {}",
                c.dimension,
                c.labels.len(),
                roster.len()
            )));
        }
    }
    let k = k_profiles.min(roster.len());
    if k_profiles == 0 {
        return Err(Error::KOutOfRange { k: 0, n: roster.len() });
    }
    let result = kmodes(&rows, k, seed)?;
    let profiles = result
        .modes
        .iter()
        .enumerate()
        .map(|(id, mode)| {
            let members: BTreeSet<StudentId> = roster
                .iter()
                .zip(&result.assignments)
                .filter(|(_, &a)| a == id)
                .map(|(s, _)| (*s).clone())
                .collect();
            let (grade_mean, grade_sd) = grade_stats(grades, members.iter());
            let mut tuple = [0usize; 5];
            for (t, v) in tuple.iter_mut().zip(mode) {
                *t = *v as usize;
            }
            StudentProfile {
                profile_id: id,
                mode: tuple,
                members,
                grade_mean,
                grade_sd,
            }
        })
        .collect();
    Ok(profiles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::String;

    fn clustering(dimension: Dimension, labels: &[usize]) -> DimensionClustering {
        DimensionClustering {
            dimension,
            k: labels.iter().max().unwrap() + 1,
            labels: labels
                .iter()
                .enumerate()
                .map(|(i, &l)| (alloc::format!("s{i:02}"), l))
                .collect(),
            descriptors: BTreeMap::new(),
            feature_means: BTreeMap::new(),
        }
    }

    fn all(labels: &[usize]) -> BTreeMap<Dimension, DimensionClustering> {
        Dimension::ALL.iter().map(|&d| (d, clustering(d, labels))).collect()
    }

    #[test]
    fn missing_dimension() {
        let mut map = all(&[0, 1]);
        map.remove(&Dimension::Control);
        assert_eq!(
            build_profiles(&map, &GradeBook::new(), 2, 0),
            Err(Error::MissingDimension(Dimension::Control))
        );
    }

    #[test]
    fn identical_labels_give_one_profile() {
        let map = all(&[0; 8]);
        let profiles = build_profiles(&map, &GradeBook::new(), 5, 3).unwrap();
        assert_eq!(profiles.len(), 1);
        assert_eq!(profiles[0].size(), 8);
        assert_eq!(profiles[0].grade_mean, None);
        assert_eq!(profiles[0].grade_sd, None);
    }

    #[test]
    fn partition_and_grade_stats() {
        let map = all(&[0, 0, 1, 1, 1]);
        let grades: GradeBook = [("s00", 4.0), ("s01", 6.0), ("s02", 3.0)]
            .into_iter()
            .map(|(s, g)| (String::from(s), g))
            .collect();
        let profiles = build_profiles(&map, &grades, 2, 11).unwrap();
        assert_eq!(profiles.len(), 2);
        let total: usize = profiles.iter().map(StudentProfile::size).sum();
        assert_eq!(total, 5);
        assert_eq!(profiles[0].mode, [0; 5]);
        assert_eq!(profiles[0].grade_mean, Some(5.0));
        assert!((profiles[0].grade_sd.unwrap() - libm::sqrt(2.0)).abs() < 1e-12);
        // only one graded member: mean defined, sd not
        assert_eq!(profiles[1].mode, [1; 5]);
        assert_eq!(profiles[1].grade_mean, Some(3.0));
        assert_eq!(profiles[1].grade_sd, None);
        assert_eq!(profiles[1].members.len(), 3);
    }
}
