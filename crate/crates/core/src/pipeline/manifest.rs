use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::error::{Error, Result};

pub const MANIFEST_DIR: &str = "manifests";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn hash_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::file(path, e))?))
}

/// Record of one stage execution. Holds no timestamps so that identical
/// runs produce identical manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    /// Artifact path (relative to the output directory, or as configured
    /// for external inputs) to content hash.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    /// False while the stage runs or if it failed part-way.
    pub complete: bool,
}

/// Bookkeeping for a running stage.
pub struct StageRun {
    out: PathBuf,
    manifest: Manifest,
}

fn manifest_path(out: &Path, name: &str) -> PathBuf {
    out.join(MANIFEST_DIR).join(format!("{name}.json"))
}

pub fn read_manifests(out: &Path) -> Result<Vec<Manifest>> {
    let dir = out.join(MANIFEST_DIR);
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(|e| Error::file(&dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::file(&dir, err)))
        .collect::<Result<_>>()?;
    paths.sort();
    paths
        .iter()
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::file(p, e))?;
            Ok(serde_json::from_str(&text)?)
        })
        .collect()
}

impl StageRun {
    /// Starts a stage and leaves an incomplete manifest behind until
    /// [`StageRun::finish`] succeeds.
    pub fn begin(cfg: &RunConfig, name: &str) -> Result<Self> {
        let out = cfg.out_dir();
        let run = StageRun {
            out,
            manifest: Manifest {
                stage: name.to_owned(),
                version: env!("CARGO_PKG_VERSION").to_owned(),
                seed: cfg.split.seed,
                config_sha256: cfg.fingerprint(),
                inputs: BTreeMap::new(),
                outputs: BTreeMap::new(),
                complete: false,
            },
        };
        run.save()?;
        Ok(run)
    }

    fn save(&self) -> Result<()> {
        let p = manifest_path(&self.out, &self.manifest.stage);
        write_file(&p, &to_pretty(&self.manifest)?)
    }

    /// Resolves and hashes an upstream artifact. An artifact that is absent,
    /// or whose producing stage did not complete, is reported missing.
    pub fn input(&mut self, rel: &str) -> Result<PathBuf> {
        let path = self.out.join(rel);
        if !path.exists() {
            return Err(Error::MissingArtifact(path));
        }
        for m in read_manifests(&self.out)? {
            if m.outputs.contains_key(rel) && !m.complete {
                return Err(Error::MissingArtifact(path));
            }
        }
        self.manifest.inputs.insert(rel.to_owned(), hash_file(&path)?);
        Ok(path)
    }

    /// Hashes an input that lives outside the output directory.
    pub fn external_input(&mut self, key: &str, path: &Path) -> Result<()> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_owned()));
        }
        self.manifest.inputs.insert(key.to_owned(), hash_file(path)?);
        Ok(())
    }

    /// Records an input whose hash the caller computed.
    pub fn record_input(&mut self, key: &str, hash: String) {
        self.manifest.inputs.insert(key.to_owned(), hash);
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        write_file(&self.out.join(rel), bytes)?;
        self.manifest.outputs.insert(rel.to_owned(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        self.write(rel, &to_pretty(value)?)
    }

    pub fn write_jsonl<T: Serialize>(&mut self, rel: &str, rows: &[T]) -> Result<()> {
        self.write(rel, &to_jsonl(rows)?)
    }

    pub fn finish(mut self) -> Result<Manifest> {
        self.manifest.complete = true;
        self.save()?;
        Ok(self.manifest)
    }
}

pub fn to_pretty<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

pub fn to_jsonl<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    Ok(buf)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::file(path, e))
}

/// Fails unless every manifest is complete, shares one configuration and
/// agrees with the artifacts currently on disk.
pub fn check_consistent(out: &Path, manifests: &[Manifest]) -> Result<()> {
    let mut configs: Vec<&str> = manifests.iter().map(|m| m.config_sha256.as_str()).collect();
    configs.dedup();
    if configs.len() > 1 {
        return Err(Error::Inconsistent(format!(
            "artifacts come from {} different configurations",
            configs.len()
        )));
    }
    let mut produced: BTreeMap<&str, &str> = BTreeMap::new();
    for m in manifests {
        if !m.complete {
            return Err(Error::Inconsistent(format!("stage {} did not complete", m.stage)));
        }
        for (k, h) in &m.outputs {
            produced.insert(k, h);
        }
    }
    for m in manifests {
        for (k, h) in &m.inputs {
            if let Some(p) = produced.get(k.as_str()) {
                if p != h {
                    return Err(Error::Inconsistent(format!(
                        "stage {} used a different {k} than the one now on disk",
                        m.stage
                    )));
                }
            }
        }
    }
    for (k, h) in produced {
        let path = out.join(k);
        if !path.exists() {
            return Err(Error::MissingArtifact(path));
        }
        if hash_file(&path)? != h {
            return Err(Error::Inconsistent(format!("{k} changed after its stage ran")));
        }
    }
    Ok(())
}
