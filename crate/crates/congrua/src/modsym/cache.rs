//! JSON-lines cache of Hecke eigenvalue lists, keyed by
//! `(level, weight, label)`.  Each line is one record; later records with
//! the same key supersede earlier ones.

use super::Result;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QexpRecord {
    pub schema: u32,
    pub level: u64,
    pub weight: usize,
    pub label: String,
    /// `(ℓ, a_ℓ)` for primes `ℓ`.
    pub aps: Vec<(u64, i64)>,
}

/// Load the cached eigenvalues for a key, if present.
pub fn cache_load(
    path: &Path,
    level: u64,
    weight: usize,
    label: &str,
) -> Result<Option<BTreeMap<u64, i64>>> {
    if !path.exists() {
        return Ok(None);
    }
    let text = std::fs::read_to_string(path)?;
    let mut found = None;
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let Ok(rec) = serde_json::from_str::<QexpRecord>(line) else { continue };
        if rec.schema == 1 && rec.level == level && rec.weight == weight && rec.label == label {
            found = Some(rec.aps.into_iter().collect());
        }
    }
    Ok(found)
}

/// Append a record for a key.
pub fn cache_store(
    path: &Path,
    level: u64,
    weight: usize,
    label: &str,
    aps: &BTreeMap<u64, i64>,
) -> Result<()> {
    let rec = QexpRecord {
        schema: 1,
        level,
        weight,
        label: label.to_string(),
        aps: aps.iter().map(|(&l, &a)| (l, a)).collect(),
    };
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    writeln!(file, "{}", serde_json::to_string(&rec).expect("serializable record"))?;
    Ok(())
}
