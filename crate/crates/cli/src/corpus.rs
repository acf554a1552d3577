//! Image discovery and ground-truth tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ImageEntry {
    /// File name without its extension.
    pub id: String,
    pub path: PathBuf,
}

/// `.png` and `.ppm` files directly inside `dir`, sorted by id.
pub fn list_images(dir: &Path) -> Result<Vec<ImageEntry>, CliError> {
    let io = |source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut entries = Vec::new();
    for item in fs::read_dir(dir).map_err(io)? {
        let path = item.map_err(io)?.path();
        if !path.is_file() {
            continue;
        }
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if !matches!(ext.as_deref(), Some("png" | "ppm")) {
            continue;
        }
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        entries.push(ImageEntry { id, path });
    }
    entries.sort_by(|a, b| (&a.id, &a.path).cmp(&(&b.id, &b.path)));
    Ok(entries)
}

/// Reads an `id,cdr` table.
pub fn read_cdr_table(path: &Path) -> Result<BTreeMap<String, f64>, CliError> {
    let bad = |msg: String| CliError::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.len() < 2 || &headers[0] != "id" || &headers[1] != "cdr" {
        return Err(bad("expected an `id,cdr` header".into()));
    }
    let mut table = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let cdr: f64 = record[1].parse().map_err(|_| bad(format!("bad CDR `{}`", &record[1])))?;
        table.insert(record[0].to_string(), cdr);
    }
    Ok(table)
}
