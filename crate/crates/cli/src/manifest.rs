//! `manifest.json`: one entry per stage with hashed inputs and outputs.

use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const FILE_NAME: &str = "manifest.json";

/// Pipeline order, used to keep manifest entries sorted.
pub const STAGES: [&str; 11] = [
    "ingest",
    "filter",
    "train-vae",
    "encode",
    "fit-gmm",
    "train-clf",
    "sample",
    "screen",
    "metrics",
    "scaffolds",
    "dice-hist",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub master_seed: u64,
    pub seed: u64,
    pub config: Value,
    pub config_hash: String,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub started: String,
    pub finished: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: Vec<StageRecord>,
}

pub fn sha256_file(path: &Path) -> Result<FileRecord, CliError> {
    let mut f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = f.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(FileRecord {
        path: path.display().to_string(),
        sha256: h.finalize().iter().map(|b| format!("{b:02x}")).collect(),
        bytes,
    })
}

impl Manifest {
    pub fn load(work: &Path) -> Result<Self, CliError> {
        let p = work.join(FILE_NAME);
        if !p.exists() {
            return Ok(Manifest::default());
        }
        let text = fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
    }

    pub fn save(&self, work: &Path) -> Result<(), CliError> {
        let p = work.join(FILE_NAME);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    }

    /// Replaces any earlier entry for the same stage.
    pub fn record(&mut self, r: StageRecord) {
        self.stages.retain(|s| s.stage != r.stage);
        self.stages.push(r);
        let pos = |s: &StageRecord| STAGES.iter().position(|&x| x == s.stage).unwrap_or(STAGES.len());
        self.stages.sort_by_key(pos);
    }

    pub fn stage(&self, name: &str) -> Option<&StageRecord> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(stage: &str, hash: &str) -> StageRecord {
        StageRecord {
            stage: stage.into(),
            master_seed: 0,
            seed: 1,
            config: Value::Null,
            config_hash: hash.into(),
            inputs: vec![],
            outputs: vec![],
            started: String::new(),
            finished: String::new(),
        }
    }

    #[test]
    fn record_replaces_and_orders() {
        let mut m = Manifest::default();
        m.record(rec("screen", "a"));
        m.record(rec("ingest", "b"));
        m.record(rec("screen", "c"));
        let names: Vec<&str> = m.stages.iter().map(|s| s.stage.as_str()).collect();
        assert_eq!(names, ["ingest", "screen"]);
        assert_eq!(m.stage("screen").unwrap().config_hash, "c");
    }

    #[test]
    fn file_hash_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.txt");
        fs::write(&p, "abc").unwrap();
        let r = sha256_file(&p).unwrap();
        assert_eq!(r.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert_eq!(r.bytes, 3);
        let mut m = Manifest::default();
        m.record(rec("ingest", "h"));
        m.save(dir.path()).unwrap();
        assert_eq!(Manifest::load(dir.path()).unwrap(), m);
    }
}
