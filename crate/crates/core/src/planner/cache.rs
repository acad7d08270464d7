// SPDX-License-Identifier: Apache-2.0

//! Generator-output cache keyed by end effector and object geometry.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};

use super::PlannerError;
use crate::geometry::MeshDigest;
use crate::taskmodel::Grasp;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub ee_name: String,
    pub digest: MeshDigest,
}

impl CacheKey {
    pub fn new(ee_name: impl Into<String>, digest: MeshDigest) -> Self {
        CacheKey {
            ee_name: ee_name.into(),
            digest,
        }
    }

    /// File stem of the on-disk entry: `<digest hex>_<ee name>`.
    pub fn file_stem(&self) -> String {
        let ee: String = self
            .ee_name
            .chars()
            .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' || c == '_' { c } else { '_' })
            .collect();
        format!("{}_{}", self.digest.to_hex(), ee)
    }
}

impl std::fmt::Display for CacheKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.file_stem())
    }
}

/// Which generator (and with which parameters) produced an entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub params_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub provenance: Provenance,
    pub grasps: Vec<Grasp>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PutOutcome {
    Inserted,
    /// An entry with different provenance was replaced.
    Overwrote(Provenance),
    /// An entry with the same provenance was replaced.
    Replaced,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum CacheMode {
    Memory,
    Disk { dir: PathBuf },
}

impl Default for CacheMode {
    fn default() -> Self {
        CacheMode::Memory
    }
}

/// In-memory or on-disk store of generator output. Readers run
/// concurrently; writers are exclusive.
#[derive(Debug)]
pub struct GraspCache {
    mode: CacheMode,
    memory: RwLock<HashMap<CacheKey, CacheEntry>>,
    disk_lock: RwLock<()>,
    warnings: Mutex<Vec<String>>,
}

impl GraspCache {
    pub fn memory() -> Self {
        Self::with_mode(CacheMode::Memory)
    }

    pub fn disk(dir: impl Into<PathBuf>) -> Result<Self, PlannerError> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir).map_err(|e| PlannerError::Cache(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Self::with_mode(CacheMode::Disk { dir }))
    }

    pub fn from_mode(mode: &CacheMode) -> Result<Self, PlannerError> {
        match mode {
            CacheMode::Memory => Ok(Self::memory()),
            CacheMode::Disk { dir } => Self::disk(dir.clone()),
        }
    }

    fn with_mode(mode: CacheMode) -> Self {
        GraspCache {
            mode,
            memory: RwLock::new(HashMap::new()),
            disk_lock: RwLock::new(()),
            warnings: Mutex::new(Vec::new()),
        }
    }

    pub fn mode(&self) -> &CacheMode {
        &self.mode
    }

    fn path_for(dir: &Path, key: &CacheKey) -> PathBuf {
        dir.join(format!("{}.json", key.file_stem()))
    }

    fn warn(&self, message: String) {
        log::warn!("{message}");
        self.warnings.lock().expect("warning log poisoned").push(message);
    }

    /// Warnings recorded since the last call (corrupt entries and the like).
    pub fn take_warnings(&self) -> Vec<String> {
        std::mem::take(&mut *self.warnings.lock().expect("warning log poisoned"))
    }

    fn read_file(&self, path: &Path) -> Option<CacheEntry> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return None,
            Err(e) => {
                self.warn(format!("cache entry {} unreadable: {e}", path.display()));
                return None;
            }
        };
        match serde_json::from_str::<CacheEntry>(&text) {
            Ok(entry) => Some(entry),
            Err(e) => {
                self.warn(format!("cache entry {} is corrupt ({e}); treating as a miss", path.display()));
                None
            }
        }
    }

    pub fn get(&self, key: &CacheKey) -> Option<CacheEntry> {
        match &self.mode {
            CacheMode::Memory => self.memory.read().expect("cache poisoned").get(key).cloned(),
            CacheMode::Disk { dir } => {
                let _guard = self.disk_lock.read().expect("cache poisoned");
                let entry = self.read_file(&Self::path_for(dir, key))?;
                if entry.key != *key {
                    self.warn(format!("cache entry for {key} holds key {}; treating as a miss", entry.key));
                    return None;
                }
                Some(entry)
            }
        }
    }

    pub fn put(&self, entry: CacheEntry) -> Result<PutOutcome, PlannerError> {
        let outcome = |old: Option<&CacheEntry>| match old {
            None => PutOutcome::Inserted,
            Some(o) if o.provenance != entry.provenance => PutOutcome::Overwrote(o.provenance.clone()),
            Some(_) => PutOutcome::Replaced,
        };
        match &self.mode {
            CacheMode::Memory => {
                let mut map = self.memory.write().expect("cache poisoned");
                let result = outcome(map.get(&entry.key));
                map.insert(entry.key.clone(), entry);
                Ok(result)
            }
            CacheMode::Disk { dir } => {
                let _guard = self.disk_lock.write().expect("cache poisoned");
                let path = Self::path_for(dir, &entry.key);
                let result = outcome(self.read_file(&path).as_ref());
                let text = serde_json::to_string_pretty(&entry).map_err(|e| PlannerError::Cache(e.to_string()))?;
                let tmp = path.with_extension("json.tmp");
                std::fs::write(&tmp, text)
                    .and_then(|_| std::fs::rename(&tmp, &path))
                    .map_err(|e| PlannerError::Cache(format!("cannot write {}: {e}", path.display())))?;
                if let PutOutcome::Overwrote(old) = &result {
                    log::info!("cache entry {} overwritten (was {} {})", entry.key, old.generator, old.params_hash);
                }
                Ok(result)
            }
        }
    }

    /// All entries, sorted by key.
    pub fn entries(&self) -> Vec<CacheEntry> {
        let mut out: Vec<CacheEntry> = match &self.mode {
            CacheMode::Memory => self.memory.read().expect("cache poisoned").values().cloned().collect(),
            CacheMode::Disk { dir } => {
                let _guard = self.disk_lock.read().expect("cache poisoned");
                let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
                    .map(|rd| rd.filter_map(|e| e.ok().map(|e| e.path())).collect())
                    .unwrap_or_default();
                paths.retain(|p| p.extension().is_some_and(|e| e == "json"));
                paths.sort();
                paths.iter().filter_map(|p| self.read_file(p)).collect()
            }
        };
        out.sort_by(|a, b| a.key.cmp(&b.key));
        out
    }

    /// Entry whose key renders as `stem` (see [`CacheKey::file_stem`]).
    pub fn find(&self, stem: &str) -> Option<CacheEntry> {
        self.entries().into_iter().find(|e| e.key.file_stem() == stem)
    }

    pub fn clear(&self) -> Result<usize, PlannerError> {
        match &self.mode {
            CacheMode::Memory => {
                let mut map = self.memory.write().expect("cache poisoned");
                let n = map.len();
                map.clear();
                Ok(n)
            }
            CacheMode::Disk { dir } => {
                let _guard = self.disk_lock.write().expect("cache poisoned");
                let mut n = 0;
                let rd = std::fs::read_dir(dir).map_err(|e| PlannerError::Cache(format!("cannot list {}: {e}", dir.display())))?;
                for e in rd.flatten() {
                    let p = e.path();
                    if p.extension().is_some_and(|x| x == "json" || x == "tmp") {
                        std::fs::remove_file(&p).map_err(|e| PlannerError::Cache(format!("cannot remove {}: {e}", p.display())))?;
                        n += 1;
                    }
                }
                Ok(n)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{box_mesh, mesh_digest, Vector3};
    use crate::kinematics::JointConfig;
    use crate::pose::pose_xyz_rpy;

    fn entry(params: &str) -> CacheEntry {
        let digest = mesh_digest(&box_mesh(Vector3::new(0.04, 0.04, 0.04)));
        CacheEntry {
            key: CacheKey::new("gripper", digest),
            provenance: Provenance {
                generator: "surface_sampling".into(),
                params_hash: params.into(),
            },
            grasps: vec![Grasp::new(
                pose_xyz_rpy([0.1, 0.2, 0.3], [0.3, -0.2, 1.0]),
                JointConfig::from_pairs([("f", 0.0123456789)]),
                "gripper",
            )],
        }
    }

    #[test]
    fn memory_put_get_and_miss() {
        let c = GraspCache::memory();
        let e = entry("a");
        assert!(c.get(&e.key).is_none());
        assert_eq!(c.put(e.clone()).unwrap(), PutOutcome::Inserted);
        assert_eq!(c.get(&e.key).unwrap(), e);
        assert_eq!(c.put(entry("b")).unwrap(), PutOutcome::Overwrote(e.provenance.clone()));
        assert_eq!(c.clear().unwrap(), 1);
        assert!(c.get(&e.key).is_none());
    }

    #[test]
    fn disk_entries_survive_a_new_instance() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry("a");
        GraspCache::disk(dir.path()).unwrap().put(e.clone()).unwrap();
        let fresh = GraspCache::disk(dir.path()).unwrap();
        assert_eq!(fresh.get(&e.key).unwrap(), e);
        assert_eq!(fresh.entries().len(), 1);
        assert_eq!(fresh.find(&e.key.file_stem()).unwrap().provenance.generator, "surface_sampling");
        assert!(dir.path().join(format!("{}.json", e.key.file_stem())).exists());
        // Memory mode does not persist.
        let mem = GraspCache::memory();
        mem.put(e.clone()).unwrap();
        assert!(GraspCache::memory().get(&e.key).is_none());
    }

    #[test]
    fn corrupt_disk_entry_is_a_warned_miss() {
        let dir = tempfile::tempdir().unwrap();
        let e = entry("a");
        let cache = GraspCache::disk(dir.path()).unwrap();
        std::fs::write(dir.path().join(format!("{}.json", e.key.file_stem())), "{ not json").unwrap();
        assert!(cache.get(&e.key).is_none());
        let w = cache.take_warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("corrupt"));
        assert_eq!(cache.put(e.clone()).unwrap(), PutOutcome::Inserted);
        assert_eq!(cache.get(&e.key).unwrap(), e);
    }
}
