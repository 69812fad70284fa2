//! Generation-based content store. A publish builds a complete new
//! generation, persists it, then swaps it in under a write lock; readers
//! take an `Arc` snapshot and never see a partial run.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use srl_dash_core::ingest::WeekRange;
use srl_dash_core::insights::{bundle_kinds, ContentBundle, PageId, View};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BundleKey {
    pub course_id: String,
    pub weeks: WeekRange,
    pub page: PageId,
    pub view: View,
}

impl BundleKey {
    pub fn of(bundle: &ContentBundle) -> Self {
        BundleKey {
            course_id: bundle.course_id.clone(),
            weeks: bundle.week_range,
            page: bundle.page,
            view: bundle.view,
        }
    }
}

/// One published, immutable set of bundles. Bundles are kept as the exact
/// serialized bytes that were published.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Generation {
    pub id: u64,
    bundles: BTreeMap<BundleKey, Arc<str>>,
}

impl Generation {
    pub fn get(&self, key: &BundleKey) -> Option<&Arc<str>> {
        self.bundles.get(key)
    }

    pub fn bundle(&self, key: &BundleKey) -> Result<ContentBundle> {
        let raw = self
            .get(key)
            .ok_or_else(|| ServiceError::missing_bundle(&key.course_id, key.weeks, key.page, key.view))?;
        Ok(serde_json::from_str(raw)?)
    }

    pub fn keys(&self) -> impl Iterator<Item = &BundleKey> {
        self.bundles.keys()
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    /// Published week ranges per course.
    pub fn courses(&self) -> BTreeMap<String, BTreeSet<WeekRange>> {
        let mut out: BTreeMap<String, BTreeSet<WeekRange>> = BTreeMap::new();
        for k in self.bundles.keys() {
            out.entry(k.course_id.clone()).or_default().insert(k.weeks);
        }
        out
    }

    pub fn has_course(&self, course_id: &str) -> bool {
        self.bundles.keys().any(|k| k.course_id == course_id)
    }
}

/// Generations found by a backend at startup.
#[derive(Debug, Default)]
pub struct Loaded {
    pub current: Option<Generation>,
    pub previous: Option<Generation>,
}

pub trait StoreBackend: Send + Sync {
    fn load(&self) -> Result<Loaded>;
    /// Writes a generation without making it current.
    fn persist(&self, generation: &Generation) -> Result<()>;
    /// Atomically marks which generations are current and retained.
    fn activate(&self, current: u64, previous: Option<u64>) -> Result<()>;
}

/// Keeps nothing beyond the process.
#[derive(Debug, Default, Clone, Copy)]
pub struct MemoryBackend;

impl StoreBackend for MemoryBackend {
    fn load(&self) -> Result<Loaded> {
        Ok(Loaded::default())
    }

    fn persist(&self, _: &Generation) -> Result<()> {
        Ok(())
    }

    fn activate(&self, _: u64, _: Option<u64>) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Pointer {
    current: u64,
    previous: Option<u64>,
}

/// On-disk layout:
///
/// ```text
/// root/CURRENT                                   {"current":3,"previous":2}
/// root/generations/00000003/<hex course>/<from>-<to>/<page>.<view>.json
/// ```
///
/// `CURRENT` is replaced by rename, so a crash leaves either pointer intact.
#[derive(Debug, Clone)]
pub struct DirBackend {
    root: PathBuf,
}

impl DirBackend {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        let generations = root.join("generations");
        fs::create_dir_all(&generations).map_err(|e| ServiceError::io(&generations, e))?;
        Ok(DirBackend { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn generation_dir(&self, id: u64) -> PathBuf {
        self.root.join("generations").join(format!("{id:08}"))
    }

    fn read_generation(&self, id: u64) -> Result<Generation> {
        let dir = self.generation_dir(id);
        let mut bundles = BTreeMap::new();
        for course in read_dir(&dir)? {
            let course_id = hex::decode(file_name(&course))
                .ok()
                .and_then(|b| String::from_utf8(b).ok())
                .ok_or_else(|| ServiceError::Config(format!("bad course directory {}", course.display())))?;
            for range in read_dir(&course)? {
                for file in read_dir(&range)? {
                    let raw = fs::read_to_string(&file).map_err(|e| ServiceError::io(&file, e))?;
                    let bundle: ContentBundle = serde_json::from_str(&raw)?;
                    if bundle.course_id != course_id {
                        return Err(ServiceError::Config(format!("{} belongs to another course", file.display())));
                    }
                    bundles.insert(BundleKey::of(&bundle), Arc::from(raw));
                }
            }
        }
        Ok(Generation { id, bundles })
    }

    fn write_pointer(&self, pointer: &Pointer) -> Result<()> {
        let tmp = self.root.join("CURRENT.tmp");
        let target = self.root.join("CURRENT");
        let mut f = fs::File::create(&tmp).map_err(|e| ServiceError::io(&tmp, e))?;
        f.write_all(serde_json::to_string(pointer)?.as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(|e| ServiceError::io(&tmp, e))?;
        fs::rename(&tmp, &target).map_err(|e| ServiceError::io(&target, e))
    }

    fn prune(&self, keep: &[u64]) -> Result<()> {
        for dir in read_dir(&self.root.join("generations"))? {
            let name = file_name(&dir);
            let stale = name.starts_with(".tmp-") || name.parse::<u64>().is_ok_and(|id| !keep.contains(&id));
            if stale {
                fs::remove_dir_all(&dir).map_err(|e| ServiceError::io(&dir, e))?;
            }
        }
        Ok(())
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn read_dir(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = fs::read_dir(dir)
        .map_err(|e| ServiceError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|e| ServiceError::io(dir, e)))
        .collect::<Result<Vec<_>>>()?;
    out.sort();
    Ok(out)
}

impl StoreBackend for DirBackend {
    fn load(&self) -> Result<Loaded> {
        let path = self.root.join("CURRENT");
        let raw = match fs::read_to_string(&path) {
            Ok(raw) => raw,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Loaded::default()),
            Err(e) => return Err(ServiceError::io(&path, e)),
        };
        let pointer: Pointer = serde_json::from_str(&raw)?;
        Ok(Loaded {
            current: Some(self.read_generation(pointer.current)?),
            previous: pointer.previous.map(|id| self.read_generation(id)).transpose()?,
        })
    }

    fn persist(&self, generation: &Generation) -> Result<()> {
        let tmp = self.root.join("generations").join(format!(".tmp-{:08}", generation.id));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(|e| ServiceError::io(&tmp, e))?;
        }
        for (key, raw) in &generation.bundles {
            let dir = tmp
                .join(hex::encode(key.course_id.as_bytes()))
                .join(key.weeks.to_string());
            fs::create_dir_all(&dir).map_err(|e| ServiceError::io(&dir, e))?;
            let file = dir.join(format!("{}.{}.json", key.page, key.view));
            let mut f = fs::File::create(&file).map_err(|e| ServiceError::io(&file, e))?;
            f.write_all(raw.as_bytes())
                .and_then(|_| f.sync_all())
                .map_err(|e| ServiceError::io(&file, e))?;
        }
        fs::create_dir_all(&tmp).map_err(|e| ServiceError::io(&tmp, e))?;
        let target = self.generation_dir(generation.id);
        if target.exists() {
            fs::remove_dir_all(&target).map_err(|e| ServiceError::io(&target, e))?;
        }
        fs::rename(&tmp, &target).map_err(|e| ServiceError::io(&target, e))
    }

    fn activate(&self, current: u64, previous: Option<u64>) -> Result<()> {
        self.write_pointer(&Pointer { current, previous })?;
        let keep: Vec<u64> = std::iter::once(current).chain(previous).collect();
        self.prune(&keep)
    }
}

struct State {
    current: Arc<Generation>,
    previous: Option<Arc<Generation>>,
}

pub struct ContentStore {
    backend: Box<dyn StoreBackend>,
    state: RwLock<State>,
    writer: Mutex<()>,
}

impl std::fmt::Debug for ContentStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ContentStore")
            .field("generation", &self.generation())
            .finish_non_exhaustive()
    }
}

impl ContentStore {
    pub fn open(backend: Box<dyn StoreBackend>) -> Result<Self> {
        let loaded = backend.load()?;
        Ok(ContentStore {
            backend,
            state: RwLock::new(State {
                current: Arc::new(loaded.current.unwrap_or_default()),
                previous: loaded.previous.map(Arc::new),
            }),
            writer: Mutex::new(()),
        })
    }

    pub fn in_memory() -> Self {
        Self::open(Box::new(MemoryBackend)).expect("memory backend cannot fail")
    }

    pub fn open_dir(root: impl Into<PathBuf>) -> Result<Self> {
        Self::open(Box::new(DirBackend::new(root)?))
    }

    /// The current generation; stays valid across later publishes.
    pub fn snapshot(&self) -> Arc<Generation> {
        self.state.read().unwrap_or_else(|e| e.into_inner()).current.clone()
    }

    pub fn generation(&self) -> u64 {
        self.snapshot().id
    }

    pub fn previous_generation(&self) -> Option<u64> {
        self.state
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .previous
            .as_ref()
            .map(|g| g.id)
    }

    /// Serialized bundle for the exact key, with the generation it came from.
    pub fn get_content(
        &self,
        course_id: &str,
        from_week: u32,
        to_week: u32,
        page: PageId,
        view: View,
    ) -> Result<(u64, Arc<str>)> {
        let weeks = WeekRange::new(from_week, to_week).map_err(|_| ServiceError::InvalidRange {
            from: from_week,
            to: to_week,
        })?;
        let snap = self.snapshot();
        let key = BundleKey {
            course_id: course_id.to_string(),
            weeks,
            page,
            view,
        };
        match snap.get(&key) {
            Some(raw) => Ok((snap.id, raw.clone())),
            None if !snap.has_course(course_id) => Err(ServiceError::NotFound(format!("course {course_id}"))),
            None => Err(ServiceError::missing_bundle(course_id, weeks, page, view)),
        }
    }

    /// Publishes complete runs. Each `(course, week range)` in `bundles`
    /// replaces that range wholesale; other ranges carry over.
    pub fn publish(&self, bundles: &[ContentBundle]) -> Result<u64> {
        let groups = check_complete(bundles)?;
        let _writer = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let current = self.snapshot();
        let mut next = BTreeMap::clone(&current.bundles);
        next.retain(|k, _| !groups.contains(&(k.course_id.clone(), k.weeks)));
        for b in bundles {
            next.insert(BundleKey::of(b), Arc::from(serde_json::to_string(b)?));
        }
        let generation = Generation {
            id: current.id + 1,
            bundles: next,
        };
        // generation 0 is the empty store and is never retained
        let previous = (current.id > 0).then_some(current.id);
        self.backend.persist(&generation)?;
        self.backend.activate(generation.id, previous)?;
        let id = generation.id;
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        let old = std::mem::replace(&mut state.current, Arc::new(generation));
        state.previous = previous.map(|_| old);
        Ok(id)
    }

    /// Makes the retained previous generation current again.
    pub fn rollback(&self) -> Result<u64> {
        let _writer = self.writer.lock().unwrap_or_else(|e| e.into_inner());
        let previous = self
            .state
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .previous
            .clone()
            .ok_or_else(|| ServiceError::NotFound("no previous generation".into()))?;
        self.backend.activate(previous.id, None)?;
        let mut state = self.state.write().unwrap_or_else(|e| e.into_inner());
        state.current = previous;
        state.previous = None;
        Ok(state.current.id)
    }
}

/// Every `(course, range)` present must have exactly the full set of bundle
/// kinds, each valid. Returns the groups.
fn check_complete(bundles: &[ContentBundle]) -> Result<BTreeSet<(String, WeekRange)>> {
    if bundles.is_empty() {
        return Err(ServiceError::IncompleteRun("no bundles".into()));
    }
    let mut groups: BTreeMap<(String, WeekRange), BTreeSet<(PageId, View)>> = BTreeMap::new();
    for b in bundles {
        if b.course_id.trim().is_empty() {
            return Err(ServiceError::IncompleteRun("bundle without course_id".into()));
        }
        b.validate()
            .map_err(|e| ServiceError::IncompleteRun(e.to_string()))?;
        let kinds = groups.entry((b.course_id.clone(), b.week_range)).or_default();
        if !kinds.insert(b.key()) {
            return Err(ServiceError::IncompleteRun(format!(
                "{} weeks {}: {}/{} given twice",
                b.course_id, b.week_range, b.page, b.view
            )));
        }
    }
    let expected: BTreeSet<(PageId, View)> = bundle_kinds().into_iter().collect();
    for ((course, weeks), kinds) in &groups {
        if let Some((p, v)) = expected.difference(kinds).next() {
            return Err(ServiceError::IncompleteRun(format!("{course} weeks {weeks}: missing {p}/{v}")));
        }
    }
    Ok(groups.into_keys().collect())
}
