use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ScoreItem;

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    key: String,
    score: f64,
    stored_at: u64,
}

/// SHA-256 over the scorer name and every item field, each length-prefixed
/// so that field boundaries cannot be forged by the content.
pub fn cache_key(scorer: &str, item: &ScoreItem) -> String {
    let mut h = Sha256::new();
    let mut field = |tag: u8, value: Option<&str>| {
        h.update([tag]);
        match value {
            None => h.update([0]),
            Some(v) => {
                h.update([1]);
                h.update((v.len() as u64).to_le_bytes());
                h.update(v.as_bytes());
            }
        }
    };
    field(b'n', Some(scorer));
    field(b's', item.src.as_deref());
    field(b'h', Some(&item.hyp));
    field(b'r', item.reference.as_deref());
    match &item.context {
        None => field(b'c', None),
        Some(ctx) => {
            field(b'c', Some(&ctx.len().to_string()));
            for c in ctx {
                field(b'x', Some(c));
            }
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct State {
    entries: HashMap<String, (f64, u64)>,
    writer: Option<File>,
}

/// Score cache backed by an append-only JSON Lines log. Opening compacts
/// the log (last entry per key wins, unreadable lines dropped). Any I/O
/// failure is logged and the cache keeps working in memory only.
pub struct ScoreCache {
    path: Option<PathBuf>,
    state: Mutex<State>,
}

impl std::fmt::Debug for ScoreCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoreCache").field("path", &self.path).field("len", &self.len()).finish()
    }
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn read_log(path: &Path) -> std::io::Result<HashMap<String, (f64, u64)>> {
    let mut entries = HashMap::new();
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(entries),
        Err(e) => return Err(e),
    };
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Entry>(&line) {
            Ok(e) if e.score.is_finite() => {
                entries.insert(e.key, (e.score, e.stored_at));
            }
            _ => log::warn!("{}:{}: skipping unreadable cache entry", path.display(), n + 1),
        }
    }
    Ok(entries)
}

fn compact(path: &Path, entries: &HashMap<String, (f64, u64)>) -> std::io::Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("compact.tmp");
    {
        let mut sorted: Vec<_> = entries.iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(b.0));
        let mut out = std::io::BufWriter::new(File::create(&tmp)?);
        for (key, &(score, stored_at)) in sorted {
            serde_json::to_writer(&mut out, &Entry { key: key.clone(), score, stored_at })?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
    }
    fs::rename(&tmp, path)?;
    OpenOptions::new().append(true).open(path)
}

impl ScoreCache {
    pub fn in_memory() -> Self {
        ScoreCache {
            path: None,
            state: Mutex::new(State { entries: HashMap::new(), writer: None }),
        }
    }

    /// Opens (creating if needed) and compacts the log at `path`.
    pub fn open(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        let entries = match read_log(&path) {
            Ok(e) => e,
            Err(e) => {
                log::warn!("score cache {}: {e}; continuing without persistence", path.display());
                return Self::in_memory();
            }
        };
        let writer = match compact(&path, &entries) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("score cache {}: {e}; continuing without persistence", path.display());
                None
            }
        };
        ScoreCache {
            path: Some(path),
            state: Mutex::new(State { entries, writer }),
        }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.lock().entries.get(key).map(|e| e.0)
    }

    pub fn len(&self) -> usize {
        self.lock().entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().unwrap_or_else(|p| p.into_inner())
    }

    /// Records scores in memory and appends them to the log as one write.
    pub fn insert_many(&self, scores: impl IntoIterator<Item = (String, f64)>) {
        let stored_at = now();
        let mut state = self.lock();
        let mut buf = Vec::new();
        for (key, score) in scores {
            if state.writer.is_some() {
                let entry = Entry { key: key.clone(), score, stored_at };
                serde_json::to_writer(&mut buf, &entry).expect("cache entry serializes");
                buf.push(b'\n');
            }
            state.entries.insert(key, (score, stored_at));
        }
        if buf.is_empty() {
            return;
        }
        let failed = state
            .writer
            .as_mut()
            .map(|w| w.write_all(&buf).and_then(|_| w.flush()))
            .and_then(Result::err);
        if let Some(e) = failed {
            log::warn!(
                "score cache {}: write failed ({e}); continuing without persistence",
                self.path.as_deref().map_or_else(String::new, |p| p.display().to_string())
            );
            state.writer = None;
        }
    }
}
