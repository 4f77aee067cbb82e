use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Read};
use std::path::Path;

use sha2::{Digest, Sha256};
use walkdir::WalkDir;

pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Drift {
    pub changed: Vec<String>,
    pub added: Vec<String>,
    pub removed: Vec<String>,
}

impl Drift {
    pub fn is_empty(&self) -> bool {
        self.changed.is_empty() && self.added.is_empty() && self.removed.is_empty()
    }
}

pub fn sha256_file(path: &Path) -> io::Result<(String, u64)> {
    let mut f = fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
        total += n as u64;
    }
    let hex = h.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok((hex, total))
}

/// Digests every file under `dir` except the manifest itself, sorted by path.
pub fn build_manifest(dir: impl AsRef<Path>) -> io::Result<Vec<ManifestEntry>> {
    let dir = dir.as_ref();
    let mut out = Vec::new();
    for entry in WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(io::Error::other)?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(dir).map_err(io::Error::other)?;
        let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        if path == MANIFEST_FILE {
            continue;
        }
        let (sha256, bytes) = sha256_file(entry.path())?;
        out.push(ManifestEntry { path, sha256, bytes });
    }
    Ok(out)
}

pub fn write_manifest(dir: impl AsRef<Path>, entries: &[ManifestEntry]) -> io::Result<()> {
    let mut s = String::new();
    for e in entries {
        s.push_str(&format!("{}\t{}\t{}\n", e.path, e.sha256, e.bytes));
    }
    fs::write(dir.as_ref().join(MANIFEST_FILE), s)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> io::Result<Option<Vec<ManifestEntry>>> {
    let text = match fs::read_to_string(dir.as_ref().join(MANIFEST_FILE)) {
        Ok(t) => t,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e),
    };
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let f: Vec<&str> = line.split('\t').collect();
        let bytes = f.get(2).and_then(|b| b.parse().ok());
        match (f.len(), bytes) {
            (3, Some(bytes)) => out.push(ManifestEntry { path: f[0].into(), sha256: f[1].into(), bytes }),
            _ => {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("{MANIFEST_FILE}:{}: expected path, digest, size", n + 1),
                ))
            }
        }
    }
    Ok(Some(out))
}

pub fn diff_manifests(old: &[ManifestEntry], new: &[ManifestEntry]) -> Drift {
    let old: BTreeMap<&str, &str> = old.iter().map(|e| (e.path.as_str(), e.sha256.as_str())).collect();
    let new: BTreeMap<&str, &str> = new.iter().map(|e| (e.path.as_str(), e.sha256.as_str())).collect();
    let mut d = Drift::default();
    for (p, h) in &new {
        match old.get(p) {
            None => d.added.push(p.to_string()),
            Some(o) if o != h => d.changed.push(p.to_string()),
            Some(_) => {}
        }
    }
    d.removed = old.keys().filter(|p| !new.contains_key(*p)).map(|p| p.to_string()).collect();
    d
}
