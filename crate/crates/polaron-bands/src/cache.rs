//! Stage cache: one JSON file per (stage, key), where the key is the
//! content hash of every input that determines the stage.
//!
//! A file records its schema version, stage, key and the SHA-256 of the
//! compact serialization of its payload. Payload floats are written in
//! shortest round-trip form and parsed exactly, so a load reproduces the
//! stored values bit for bit and re-serializes to the same checksum.

use std::path::{Path, PathBuf};

use serde::de::{DeserializeOwned, IgnoredAny};
use serde::{Deserialize, Serialize};

use crate::config::content_hash;
use crate::emit::write_atomic;
use crate::error::CliError;

/// Layout version of cache files; older files are recomputed.
pub const CACHE_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a, T> {
    schema_version: u32,
    stage: &'a str,
    key: &'a str,
    core_version: &'a str,
    payload_sha256: String,
    payload: &'a T,
}

#[derive(Deserialize)]
struct Header {
    stage: String,
    key: String,
    payload_sha256: String,
    #[allow(dead_code)]
    payload: IgnoredAny,
}

#[derive(Deserialize)]
struct EnvelopeIn<T> {
    payload: T,
}

/// Outcome of [`Cache::load`].
#[derive(Debug)]
pub enum Lookup<T> {
    Hit(T),
    Miss,
    /// Present but written under another schema version.
    Stale(String),
}

#[derive(Debug, Clone)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, stage: &str, key: &str) -> PathBuf {
        self.dir
            .join(format!("{stage}-{}.json", &key[..key.len().min(16)]))
    }

    pub fn store<T: Serialize>(
        &self,
        stage: &str,
        key: &str,
        value: &T,
    ) -> Result<PathBuf, CliError> {
        let path = self.path(stage, key);
        let env = EnvelopeOut {
            schema_version: CACHE_SCHEMA_VERSION,
            stage,
            key,
            core_version: polaron_core::VERSION,
            payload_sha256: content_hash(value),
            payload: value,
        };
        let bytes = serde_json::to_vec(&env).map_err(|e| CliError::Cache {
            path: path.clone(),
            reason: format!("cannot serialize: {e}"),
        })?;
        write_atomic(&path, &bytes)?;
        Ok(path)
    }

    /// Loads the entry for `(stage, key)`. Unparsable files and key or
    /// checksum mismatches are errors, never misses.
    pub fn load<T: Serialize + DeserializeOwned>(
        &self,
        stage: &str,
        key: &str,
    ) -> Result<Lookup<T>, CliError> {
        let path = self.path(stage, key);
        let bytes = match std::fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Lookup::Miss),
            Err(e) => return Err(CliError::io(path, e)),
        };
        let bad = |reason: String| CliError::Cache {
            path: path.clone(),
            reason,
        };
        #[derive(Deserialize)]
        struct Version {
            schema_version: u32,
        }
        let version: Version = serde_json::from_slice(&bytes)
            .map_err(|e| bad(format!("truncated or malformed cache file: {e}")))?;
        if version.schema_version != CACHE_SCHEMA_VERSION {
            return Ok(Lookup::Stale(format!(
                "cache {} has schema_version {} (current {CACHE_SCHEMA_VERSION}); recomputing",
                path.display(),
                version.schema_version
            )));
        }
        let header: Header = serde_json::from_slice(&bytes)
            .map_err(|e| bad(format!("truncated or malformed cache file: {e}")))?;
        if header.stage != stage || header.key != key {
            return Err(bad(format!(
                "cache hash mismatch: entry is ({}, {}), expected ({stage}, {key})",
                header.stage, header.key
            )));
        }
        let env: EnvelopeIn<T> = serde_json::from_slice(&bytes)
            .map_err(|e| bad(format!("cache payload does not decode: {e}")))?;
        let sum = content_hash(&env.payload);
        if sum != header.payload_sha256 {
            return Err(bad(format!(
                "cache hash mismatch: payload checksum {sum} differs from recorded {}",
                header.payload_sha256
            )));
        }
        Ok(Lookup::Hit(env.payload))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Payload {
        x: f64,
        v: Vec<f64>,
    }

    fn sample() -> Payload {
        Payload {
            x: -6.871654321987654e-4,
            v: vec![0.1, 1.0 / 3.0, f64::MIN_POSITIVE, 1e300],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        c.store("s", "k0123456789abcdef", &sample()).unwrap();
        match c.load::<Payload>("s", "k0123456789abcdef").unwrap() {
            Lookup::Hit(p) => {
                assert_eq!(p, sample());
                assert_eq!(p.x.to_bits(), sample().x.to_bits());
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            c.load::<Payload>("s", "other").unwrap(),
            Lookup::Miss
        ));
    }

    #[test]
    fn tampered_payload_is_hash_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let p = c.store("s", "key", &sample()).unwrap();
        let text = std::fs::read_to_string(&p).unwrap().replace("0.1", "0.2");
        std::fs::write(&p, text).unwrap();
        let e = c.load::<Payload>("s", "key").unwrap_err();
        assert!(e.to_string().contains("hash mismatch"), "{e}");
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn truncated_file_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let p = c.store("s", "key", &sample()).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() / 2]).unwrap();
        let e = c.load::<Payload>("s", "key").unwrap_err();
        assert!(e.to_string().contains("truncated"), "{e}");
    }

    #[test]
    fn old_schema_is_stale() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let p = c.store("s", "key", &sample()).unwrap();
        let text = std::fs::read_to_string(&p)
            .unwrap()
            .replace("\"schema_version\":1", "\"schema_version\":0");
        std::fs::write(&p, text).unwrap();
        assert!(matches!(
            c.load::<Payload>("s", "key").unwrap(),
            Lookup::Stale(_)
        ));
    }
}
