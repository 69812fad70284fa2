use std::collections::BTreeMap;

use srl_dash_core::cluster::metrics::adjusted_rand_index;
use srl_dash_core::features::{Dimension, Feature};
use srl_dash_core::pipeline::{run, PipelineConfig, PipelineInput, RangeOutput};
use srl_dash_core::synth::{generate_cohort, Cohort, CohortSpec};

fn pipeline(spec: &CohortSpec) -> (RangeOutput, Cohort) {
    let cohort = generate_cohort(spec).unwrap();
    let input = PipelineInput {
        course_id: "synthetic",
        events: &cohort.events,
        schedule: &cohort.schedule,
        grades: &cohort.grades,
        generated_at: spec.week_zero,
        run_id: "e2e",
    };
    let mut out = run(input, &PipelineConfig::default()).unwrap();
    (out.remove(0), cohort)
}

#[test]
fn noisy_cohort_recovers_archetypes() {
    let spec = CohortSpec::reference(120, 6, 5, 11).unwrap();
    let (out, cohort) = pipeline(&spec);
    let truth: Vec<usize> = out.features.roster.iter().map(|s| cohort.truth[s]).collect();
    let ari = adjusted_rand_index(&out.profile_labels(), &truth);
    assert!(ari >= 0.8, "ARI {ari}");

    let best = out
        .profiles
        .iter()
        .max_by(|a, b| a.grade_mean.unwrap().total_cmp(&b.grade_mean.unwrap()))
        .unwrap();
    let describe = |d: Dimension| out.clusterings[&d].descriptor(best.label(d)).to_string();
    assert_eq!(describe(Dimension::Control), "higher intensity");
    assert_eq!(describe(Dimension::Proactivity), "up-to-date");
    assert_eq!(describe(Dimension::Effort), "lower intensity");
    assert_eq!(out.bundles.len(), 12);
}

/// Per-student mean over weeks of the dimension's headline feature.
fn headline(out: &RangeOutput, d: Dimension, student: &str) -> f64 {
    let mean = |f: Feature| {
        let v = out.features.values(f, student).unwrap();
        v.iter().sum::<f64>() / v.len() as f64
    };
    match d {
        Dimension::Regularity => (mean(Feature::DowPeriodicity) + mean(Feature::HodPeriodicity)) / 2.0,
        d => mean(d.features()[0]),
    }
}

#[test]
fn archetype_means_are_well_separated() {
    let spec = CohortSpec::reference(150, 6, 5, 3).unwrap();
    let (out, cohort) = pipeline(&spec);
    let levels = |a: usize, d: Dimension| {
        let arch = &spec.archetypes[a];
        match d {
            Dimension::Effort => format!("{:?}", arch.effort),
            Dimension::Consistency => format!("{:?}", arch.consistency),
            Dimension::Regularity => format!("{:?}", arch.regularity),
            Dimension::Proactivity => format!("{:?}", arch.proactivity),
            Dimension::Control => format!("{:?}", arch.control),
        }
    };
    for d in Dimension::ALL {
        let mut groups: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (s, &a) in &cohort.truth {
            groups.entry(a).or_default().push(headline(&out, d, s));
        }
        let stats: BTreeMap<usize, (f64, f64)> = groups
            .iter()
            .map(|(&a, v)| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
                (a, (m, sd))
            })
            .collect();
        for (&a, &(ma, sa)) in &stats {
            for (&b, &(mb, sb)) in &stats {
                if a < b && levels(a, d) != levels(b, d) {
                    assert!(
                        (ma - mb).abs() >= 3.0 * sa.max(sb),
                        "{d}: archetypes {a} ({ma:.3}±{sa:.3}) and {b} ({mb:.3}±{sb:.3}) overlap"
                    );
                }
            }
        }
    }
}
