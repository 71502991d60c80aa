//! Byte-deterministic artifact writing: fixed float format, header
//! comments carrying the provenance, and atomic replacement.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Version of every emitted table and JSON document.
pub const SCHEMA_VERSION: u32 = 1;

/// Trace-coefficient note attached to every artifact.
pub const TRACE_CONVENTION: &str = "ZPE = (1/2) Tr(sqrt(H) - 1) (trace coefficient 1/2); \
     the coefficient-1 convention gives 2*ZPE";

/// C `%.12e`: twelve mantissa decimals, signed exponent of at least two
/// digits.
pub fn fmt_e(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.12e}");
    let (mant, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mant}e{sign}{:02}", exp.abs())
}

/// Provenance shared by all artifacts of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub config_hash: String,
    pub core_version: String,
    pub cli_version: String,
    pub trace_convention: String,
    pub k_proxy: f64,
    pub c_err: f64,
}

impl Provenance {
    pub fn new(config_hash: String, k_proxy: f64, c_err: f64) -> Self {
        Provenance {
            schema_version: SCHEMA_VERSION,
            config_hash,
            core_version: polaron_core::VERSION.into(),
            cli_version: env!("CARGO_PKG_VERSION").into(),
            trace_convention: TRACE_CONVENTION.into(),
            k_proxy,
            c_err,
        }
    }

    fn header_lines(&self, name: &str) -> Vec<String> {
        vec![
            format!(
                "{name} schema_version={} config_hash={}",
                self.schema_version, self.config_hash
            ),
            format!(
                "polaron-core {} polaron-bands {}",
                self.core_version, self.cli_version
            ),
            format!("convention: {}", self.trace_convention),
            format!(
                "K = infinity proxy: K = {}; c_err = {}",
                fmt_e(self.k_proxy),
                fmt_e(self.c_err)
            ),
        ]
    }
}

/// A CSV table with `#` comment lines above the column header.
#[derive(Debug, Clone)]
pub struct Table {
    name: String,
    comments: Vec<String>,
    columns: Vec<&'static str>,
    rows: Vec<String>,
}

impl Table {
    pub fn new(name: &str, prov: &Provenance, columns: &[&'static str]) -> Self {
        Table {
            name: name.into(),
            comments: prov.header_lines(name),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    /// Appends a row of already formatted fields.
    pub fn row(&mut self, fields: Vec<String>) {
        debug_assert_eq!(fields.len(), self.columns.len());
        self.rows.push(fields.join(","));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            out.push_str("# ");
            out.push_str(c);
            out.push('\n');
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(r);
            out.push('\n');
        }
        out
    }

    /// Writes `<dir>/<name>` atomically and returns the path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(&self.name);
        write_atomic(&path, self.render().as_bytes())?;
        Ok(path)
    }
}

/// Writes `bytes` to a temporary file next to `path`, then renames it
/// over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(bytes)
        .map_err(|e| CliError::io(tmp.path().to_path_buf(), e))?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let perms = std::fs::Permissions::from_mode(0o644);
        tmp.as_file()
            .set_permissions(perms)
            .map_err(|e| CliError::io(tmp.path().to_path_buf(), e))?;
    }
    tmp.as_file()
        .sync_all()
        .map_err(|e| CliError::io(tmp.path().to_path_buf(), e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Pretty JSON with the provenance as the `provenance` field.
pub fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    prov: &Provenance,
    body: &T,
) -> Result<PathBuf, CliError> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        schema_version: u32,
        config_hash: &'a str,
        provenance: &'a Provenance,
        #[serde(flatten)]
        body: &'a T,
    }
    let doc = Doc {
        schema_version: prov.schema_version,
        config_hash: &prov.config_hash,
        provenance: prov,
        body,
    };
    let mut text = serde_json::to_string_pretty(&doc)
        .map_err(|e| CliError::Config(format!("cannot serialize {name}: {e}")))?;
    text.push('\n');
    let path = dir.join(name);
    write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
