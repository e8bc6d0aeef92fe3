//! `manifest.txt`: one `key=value` per line, no timestamps, ending with a
//! SHA-256 over every other file in the directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::UsageError;

pub const MANIFEST_NAME: &str = "manifest.txt";
pub const HASH_KEY: &str = "content_sha256";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(command: &str) -> Self {
        let mut m = Self::default();
        m.push("tool", "fpcam");
        m.push("version", env!("CARGO_PKG_VERSION"));
        m.push("command", command);
        m
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn extend(&mut self, entries: impl IntoIterator<Item = (String, String)>) {
        self.entries.extend(entries);
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// Hashes the directory contents and writes the manifest; returns the hash.
    pub fn write(&self, dir: &Path) -> Result<String> {
        let hash = content_hash(dir)?;
        let mut text = String::new();
        for (k, v) in &self.entries {
            text.push_str(&format!("{k}={v}\n"));
        }
        text.push_str(&format!("{HASH_KEY}={hash}\n"));
        let path = dir.join(MANIFEST_NAME);
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(hash)
    }
}

/// Parsed manifest of an earlier run.
pub fn read_manifest(dir: &Path) -> Result<BTreeMap<String, String>> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            fpcam_core::Error::Format(format!("{}:{}: expected key=value", path.display(), n + 1))
        })?;
        out.insert(k.to_string(), v.to_string());
    }
    Ok(out)
}

pub fn manifest_value<'a>(m: &'a BTreeMap<String, String>, key: &str) -> Result<&'a str> {
    m.get(key)
        .map(String::as_str)
        .ok_or_else(|| UsageError(format!("manifest has no '{key}' entry")).into())
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path.strip_prefix(root).ok() != Some(Path::new(MANIFEST_NAME)) {
            out.push(path);
        }
    }
    Ok(())
}

/// SHA-256 over (relative path, length, bytes) of every file except the
/// top-level manifest, in sorted path order.
pub fn content_hash(dir: &Path) -> Result<String> {
    let mut files = Vec::new();
    collect_files(dir, dir, &mut files)?;
    let mut rel: Vec<(String, PathBuf)> = files
        .into_iter()
        .map(|p| {
            let r = p.strip_prefix(dir).unwrap_or(&p);
            let name = r.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            (name, p)
        })
        .collect();
    rel.sort();
    let mut hasher = Sha256::new();
    for (name, path) in rel {
        let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
        hasher.update(name.as_bytes());
        hasher.update([0u8]);
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(&bytes);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_manifest_and_tracks_content() {
        let dir = std::env::temp_dir().join(format!("fpcam-manifest-{}", std::process::id()));
        fs::create_dir_all(dir.join("plotdata")).unwrap();
        fs::write(dir.join("a.bin"), [1u8, 2, 3]).unwrap();
        fs::write(dir.join("plotdata/x.csv"), "a,b\n").unwrap();
        let mut m = Manifest::new("test");
        m.push("k", 5);
        let h1 = m.write(&dir).unwrap();
        assert_eq!(content_hash(&dir).unwrap(), h1);
        let parsed = read_manifest(&dir).unwrap();
        assert_eq!(parsed["k"], "5");
        assert_eq!(parsed[HASH_KEY], h1);
        fs::write(dir.join("plotdata/x.csv"), "a,c\n").unwrap();
        assert_ne!(content_hash(&dir).unwrap(), h1);
        fs::remove_dir_all(&dir).unwrap();
    }
}
