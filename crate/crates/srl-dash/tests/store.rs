mod common;

use std::sync::Arc;

use srl_dash::store::{BundleKey, ContentStore};
use srl_dash::ServiceError;
use srl_dash_core::insights::{bundle_kinds, ContentBundle, PageId, View};

use common::{full_range, restamp, shared};

#[test]
fn fixture_has_every_kind_for_both_ranges() {
    assert_eq!(shared().len(), 2 * bundle_kinds().len());
    assert_eq!(bundle_kinds().len(), 12);
}

#[test]
fn publish_increments_generation_and_round_trips_bytes() {
    let store = ContentStore::in_memory();
    assert_eq!(store.generation(), 0);
    assert_eq!(store.publish(shared()).unwrap(), 1);
    for b in shared() {
        let (generation, raw) = store
            .get_content("c1", b.week_range.from, b.week_range.to, b.page, b.view)
            .unwrap();
        assert_eq!(generation, 1);
        assert_eq!(&*raw, serde_json::to_string(b).unwrap());
        let back: ContentBundle = serde_json::from_str(&raw).unwrap();
        assert_eq!(&back, b);
        assert_eq!(serde_json::to_string(&back).unwrap(), &*raw);
    }
}

#[test]
fn missing_page_is_rejected_and_store_unchanged() {
    let store = ContentStore::in_memory();
    store.publish(shared()).unwrap();
    let before = store.snapshot();
    let partial: Vec<_> = restamp(shared(), "run-2")
        .into_iter()
        .filter(|b| !(b.page == PageId::Control && b.view == View::Groups && b.week_range == full_range()))
        .collect();
    let err = store.publish(&partial).unwrap_err();
    assert!(matches!(err, ServiceError::IncompleteRun(ref m) if m.contains("control/groups")), "{err}");
    assert_eq!(store.generation(), 1);
    assert_eq!(*store.snapshot(), *before);
}

#[test]
fn duplicates_and_empty_captions_are_incomplete() {
    let store = ContentStore::in_memory();
    let mut doubled = shared().to_vec();
    doubled.push(shared()[0].clone());
    assert!(matches!(store.publish(&doubled), Err(ServiceError::IncompleteRun(_))));
    let mut blank = shared().to_vec();
    blank[3].charts[0].alt_text = "  ".into();
    assert!(matches!(store.publish(&blank), Err(ServiceError::IncompleteRun(_))));
    assert!(matches!(store.publish(&[]), Err(ServiceError::IncompleteRun(_))));
    assert_eq!(store.generation(), 0);
}

#[test]
fn lookups_fail_explicitly() {
    let store = ContentStore::in_memory();
    store.publish(shared()).unwrap();
    assert!(matches!(
        store.get_content("nope", 1, 3, PageId::Summary, View::Aggregated),
        Err(ServiceError::NotFound(_))
    ));
    assert!(matches!(
        store.get_content("c1", 1, 2, PageId::Summary, View::Aggregated),
        Err(ServiceError::NotFound(_))
    ));
    assert!(matches!(
        store.get_content("c1", 3, 1, PageId::Summary, View::Aggregated),
        Err(ServiceError::InvalidRange { from: 3, to: 1 })
    ));
    assert!(matches!(
        store.get_content("c1", 1, 3, PageId::Summary, View::Groups),
        Err(ServiceError::NotFound(_))
    ));
}

#[test]
fn republishing_one_range_keeps_the_other() {
    let store = ContentStore::in_memory();
    store.publish(shared()).unwrap();
    let only_full: Vec<_> = restamp(shared(), "run-2")
        .into_iter()
        .filter(|b| b.week_range == full_range())
        .collect();
    assert_eq!(store.publish(&only_full).unwrap(), 2);
    let snap = store.snapshot();
    assert_eq!(snap.len(), shared().len());
    for key in snap.keys() {
        let run = snap.bundle(key).unwrap().run.run_id;
        let expected = if key.weeks == full_range() { "run-2" } else { "run-1" };
        assert_eq!(run, expected, "{key:?}");
    }
}

#[test]
fn rollback_restores_previous_generation() {
    let store = ContentStore::in_memory();
    store.publish(shared()).unwrap();
    store.publish(&restamp(shared(), "run-2")).unwrap();
    assert_eq!(store.previous_generation(), Some(1));
    assert_eq!(store.rollback().unwrap(), 1);
    let key = BundleKey::of(&shared()[0]);
    assert_eq!(store.snapshot().bundle(&key).unwrap().run.run_id, "run-1");
    assert!(store.rollback().is_err());
}

#[test]
fn dir_backend_survives_reopen_and_rollback() {
    let dir = tempfile::tempdir().unwrap();
    {
        let store = ContentStore::open_dir(dir.path()).unwrap();
        store.publish(shared()).unwrap();
        store.publish(&restamp(shared(), "run-2")).unwrap();
        store.publish(&restamp(shared(), "run-3")).unwrap();
    }
    let gens: Vec<_> = std::fs::read_dir(dir.path().join("generations"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(gens.len(), 2, "only current and previous are retained: {gens:?}");

    let store = ContentStore::open_dir(dir.path()).unwrap();
    assert_eq!(store.generation(), 3);
    assert_eq!(store.previous_generation(), Some(2));
    let b = &shared()[5];
    let (_, raw) = store
        .get_content("c1", b.week_range.from, b.week_range.to, b.page, b.view)
        .unwrap();
    let mut expected = b.clone();
    expected.run.run_id = "run-3".into();
    assert_eq!(&*raw, serde_json::to_string(&expected).unwrap());

    store.rollback().unwrap();
    drop(store);
    let store = ContentStore::open_dir(dir.path()).unwrap();
    assert_eq!(store.generation(), 2);
    assert_eq!(store.previous_generation(), None);
}

#[test]
fn course_ids_with_path_characters_are_stored_safely() {
    let dir = tempfile::tempdir().unwrap();
    let odd = "../math 101/é";
    let bundles: Vec<_> = shared()
        .iter()
        .cloned()
        .map(|mut b| {
            b.course_id = odd.into();
            b
        })
        .collect();
    ContentStore::open_dir(dir.path()).unwrap().publish(&bundles).unwrap();
    let store = ContentStore::open_dir(dir.path()).unwrap();
    assert!(store.snapshot().has_course(odd));
    assert!(!dir.path().parent().unwrap().join("math 101").exists());
}

#[test]
fn readers_keep_their_snapshot_during_publish() {
    let store = Arc::new(ContentStore::in_memory());
    store.publish(shared()).unwrap();
    let snap = store.snapshot();
    store.publish(&restamp(shared(), "run-2")).unwrap();
    for key in snap.keys() {
        assert_eq!(snap.bundle(key).unwrap().run.run_id, "run-1");
    }
    assert_eq!(store.generation(), 2);
}
