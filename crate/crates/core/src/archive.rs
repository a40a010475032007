//! Snapshot archives: a directory holding the validated ingestion files
//! unchanged next to a `manifest.json` that records their checksum, the
//! version list and row counts.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::store::{IngestError, Snapshot, ALIGNMENTS_FILE, RECORDS_FILE, REDIRECTS_FILE};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ARCHIVE_FORMAT: &str = "classmark-snapshot/1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub records: usize,
    pub redirects: usize,
    pub alignments: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub checksum: String,
    pub versions: Vec<String>,
    pub counts: Counts,
}

impl Manifest {
    pub fn describe(snapshot: &Snapshot) -> Manifest {
        Manifest {
            format: ARCHIVE_FORMAT.to_string(),
            checksum: snapshot.checksum().to_string(),
            versions: snapshot.versions().iter().map(|v| v.label.clone()).collect(),
            counts: Counts {
                records: snapshot.records().len(),
                redirects: snapshot.redirects().count(),
                alignments: snapshot.alignments().len(),
            },
        }
    }
}

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("checksum mismatch: manifest says {expected}, files hash to {actual}")]
    ChecksumMismatch { expected: String, actual: String },
}

/// Ingestion files plus the snapshot they produced.
pub struct Ingested {
    pub snapshot: Snapshot,
    files: [(&'static str, Vec<u8>); 3],
}

impl Ingested {
    /// Reads and validates the three ingestion files in `dir`.
    pub fn read(dir: &Path) -> Result<Ingested, ArchiveError> {
        let read = |name: &'static str| {
            let path = dir.join(name);
            fs::read(&path).map_err(|source| ArchiveError::Io { path, source })
        };
        let files = [
            (RECORDS_FILE, read(RECORDS_FILE)?),
            (REDIRECTS_FILE, read(REDIRECTS_FILE)?),
            (ALIGNMENTS_FILE, read(ALIGNMENTS_FILE)?),
        ];
        let snapshot = Snapshot::load_bytes(&files[0].1, &files[1].1, &files[2].1)?;
        Ok(Ingested { snapshot, files })
    }

    /// Writes the archive into `out`, creating it if needed, and returns the
    /// manifest written.
    pub fn write(&self, out: &Path) -> Result<Manifest, ArchiveError> {
        let io = |path: PathBuf| move |source| ArchiveError::Io { path, source };
        fs::create_dir_all(out).map_err(io(out.to_path_buf()))?;
        for (name, bytes) in &self.files {
            let path = out.join(name);
            fs::write(&path, bytes).map_err(io(path.clone()))?;
        }
        let manifest = Manifest::describe(&self.snapshot);
        let path = out.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(io(path.clone()))?;
        Ok(manifest)
    }
}

/// Opens an archive directory. When a manifest is present the files must
/// hash to its checksum; a bare directory of ingestion files is also
/// accepted, which is convenient for development data.
pub fn open(dir: &Path) -> Result<Snapshot, ArchiveError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest = match fs::read(&manifest_path) {
        Ok(bytes) => Some(
            serde_json::from_slice::<Manifest>(&bytes).map_err(|e| ArchiveError::Manifest {
                path: manifest_path.clone(),
                message: e.to_string(),
            })?,
        ),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(source) => {
            return Err(ArchiveError::Io {
                path: manifest_path,
                source,
            })
        }
    };
    let snapshot = Ingested::read(dir)?.snapshot;
    if let Some(m) = manifest {
        if m.format != ARCHIVE_FORMAT {
            return Err(ArchiveError::Manifest {
                path: manifest_path,
                message: format!("unsupported format `{}`", m.format),
            });
        }
        if m.checksum != snapshot.checksum() {
            return Err(ArchiveError::ChecksumMismatch {
                expected: m.checksum,
                actual: snapshot.checksum().to_string(),
            });
        }
    }
    Ok(snapshot)
}
