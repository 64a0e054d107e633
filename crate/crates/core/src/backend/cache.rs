use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{cache_key, CompletionRequest, GenParams};

/// One cached completion, stored as a single JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request_digest: String,
    pub template_id: String,
    pub template_version: u32,
    pub rendered_text: String,
    pub params: GenParams,
    pub completion: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

impl CacheEntry {
    pub fn new(request: &CompletionRequest, completion: &str) -> Self {
        Self {
            request_digest: request.digest(),
            template_id: request.prompt.template_id.clone(),
            template_version: request.prompt.version,
            rendered_text: request.prompt.final_text.clone(),
            params: request.params.clone(),
            completion: completion.to_string(),
            created_at: unix_now(),
        }
    }

    /// Digest recomputed from the stored request fields.
    pub fn recompute_digest(&self) -> String {
        cache_key(
            &self.params.model_id,
            &self.template_id,
            self.template_version,
            &self.rendered_text,
            &self.params,
        )
    }
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

#[derive(Debug)]
pub enum CacheLookup {
    Hit(CacheEntry),
    Miss,
    /// The entry failed verification and was moved aside.
    Corrupt,
}

/// Content-addressed cache: `<dir>/<first 2 hex>/<digest>.json`.
#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, digest: &str) -> PathBuf {
        let shard = digest.get(..2).unwrap_or("xx");
        self.dir.join(shard).join(format!("{digest}.json"))
    }

    pub fn lookup(&self, digest: &str) -> CacheLookup {
        let path = self.entry_path(digest);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return CacheLookup::Miss,
            Err(e) => {
                log::warn!("cache read {} failed: {e}", path.display());
                return CacheLookup::Miss;
            }
        };
        match serde_json::from_slice::<CacheEntry>(&bytes) {
            Ok(entry) if entry.request_digest == digest && entry.recompute_digest() == digest => CacheLookup::Hit(entry),
            Ok(_) => {
                self.quarantine(&path, "digest mismatch");
                CacheLookup::Corrupt
            }
            Err(e) => {
                self.quarantine(&path, &e.to_string());
                CacheLookup::Corrupt
            }
        }
    }

    fn quarantine(&self, path: &Path, why: &str) {
        let mut target = path.as_os_str().to_owned();
        target.push(".corrupt");
        log::warn!("quarantining corrupt cache entry {} ({why})", path.display());
        if let Err(e) = fs::rename(path, &target) {
            log::warn!("could not quarantine {}: {e}", path.display());
        }
    }

    /// Writes via a temporary file in the shard directory, then renames.
    pub fn store(&self, entry: &CacheEntry) -> io::Result<()> {
        let path = self.entry_path(&entry.request_digest);
        let shard = path.parent().expect("entry path has a shard directory");
        fs::create_dir_all(shard)?;
        let mut tmp = tempfile::NamedTempFile::new_in(shard)?;
        serde_json::to_writer(&mut tmp, entry)?;
        tmp.write_all(b"\n")?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(())
    }

    /// Every readable entry file, in path order.
    pub fn entry_files(&self) -> io::Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        for shard in fs::read_dir(&self.dir)? {
            let shard = shard?.path();
            if !shard.is_dir() {
                continue;
            }
            for f in fs::read_dir(&shard)? {
                let f = f?.path();
                if f.extension().is_some_and(|x| x == "json") {
                    files.push(f);
                }
            }
        }
        files.sort();
        Ok(files)
    }

    /// Deletes entries whose `created_at` is older than `max_age` relative to `now`.
    pub fn gc(&self, max_age: Duration, now: SystemTime) -> io::Result<usize> {
        let now = now.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let cutoff = now.saturating_sub(max_age.as_secs());
        let mut removed = 0;
        for path in self.entry_files()? {
            let Ok(bytes) = fs::read(&path) else { continue };
            let Ok(entry) = serde_json::from_slice::<CacheEntry>(&bytes) else {
                continue;
            };
            if entry.created_at < cutoff {
                fs::remove_file(&path)?;
                removed += 1;
            }
        }
        Ok(removed)
    }
}
