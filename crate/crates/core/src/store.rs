//! Content-addressed artifact storage.
//!
//! Every artifact lives at `{root}/artifacts/{aa}/{digest}` where `digest` is
//! the lowercase hex SHA-256 of its bytes and `aa` its first two characters.
//! Writes go through a temporary file and an atomic rename, so concurrent
//! readers never observe partial artifacts.

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("artifact {0} not found")]
    NotFound(ArtifactId),
    #[error("artifact {0} is corrupt: content digest does not match")]
    Corrupt(ArtifactId),
    #[error("invalid artifact id {0:?}")]
    InvalidId(String),
    #[error("artifact store I/O error: {0}")]
    Io(#[from] io::Error),
}

/// Hex SHA-256 digest naming an artifact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ArtifactId(String);

impl ArtifactId {
    pub fn of(bytes: &[u8]) -> Self {
        ArtifactId(hex::encode(Sha256::digest(bytes)))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ArtifactId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ArtifactId {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.len() == 64 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            Ok(ArtifactId(s.to_string()))
        } else {
            Err(StoreError::InvalidId(s.to_string()))
        }
    }
}

impl TryFrom<String> for ArtifactId {
    type Error = StoreError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ArtifactId> for String {
    fn from(id: ArtifactId) -> Self {
        id.0
    }
}

#[derive(Debug, Clone)]
pub struct ArtifactStore {
    root: PathBuf,
}

impl ArtifactStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("artifacts"))?;
        Ok(Self { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_of(&self, id: &ArtifactId) -> PathBuf {
        self.root.join("artifacts").join(&id.0[..2]).join(&id.0)
    }

    pub fn put(&self, bytes: &[u8]) -> Result<ArtifactId, StoreError> {
        let id = ArtifactId::of(bytes);
        let path = self.path_of(&id);
        if path.exists() {
            return Ok(id);
        }
        let dir = path.parent().expect("artifact path has a parent");
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        match tmp.persist_noclobber(&path) {
            Ok(_) => {}
            // Lost a race against an identical write.
            Err(e) if path.exists() => drop(e),
            Err(e) => return Err(StoreError::Io(e.error)),
        }
        Ok(id)
    }

    pub fn get(&self, id: &ArtifactId) -> Result<Vec<u8>, StoreError> {
        match fs::read(self.path_of(id)) {
            Ok(bytes) => {
                if ArtifactId::of(&bytes) != *id {
                    return Err(StoreError::Corrupt(id.clone()));
                }
                Ok(bytes)
            }
            Err(e) if e.kind() == io::ErrorKind::NotFound => Err(StoreError::NotFound(id.clone())),
            Err(e) => Err(e.into()),
        }
    }

    pub fn contains(&self, id: &ArtifactId) -> bool {
        self.path_of(id).is_file()
    }

    /// Removes an artifact. Callers are responsible for checking that no
    /// project still references it.
    pub fn remove(&self, id: &ArtifactId) -> Result<bool, StoreError> {
        match fs::remove_file(self.path_of(id)) {
            Ok(()) => Ok(true),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(false),
            Err(e) => Err(e.into()),
        }
    }

    /// Appends one JSON line to `{root}/projects/{project}/{name}`.
    pub fn append_log(
        &self,
        project: &str,
        name: &str,
        line: &impl Serialize,
    ) -> Result<(), StoreError> {
        let dir = self.project_dir(project);
        fs::create_dir_all(&dir)?;
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(name))?;
        let mut buf = serde_json::to_vec(line).map_err(io::Error::other)?;
        buf.push(b'\n');
        f.write_all(&buf)?;
        Ok(())
    }

    pub fn project_dir(&self, project: &str) -> PathBuf {
        self.root.join("projects").join(project)
    }
}
