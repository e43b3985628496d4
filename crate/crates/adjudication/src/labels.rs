//! Append-only label log and the effective decision map.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::AdjudicationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Uncertain,
    Reject,
}

impl Decision {
    pub const ALL: [Decision; 3] = [Decision::Accept, Decision::Uncertain, Decision::Reject];

    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Accept => "accept",
            Decision::Uncertain => "uncertain",
            Decision::Reject => "reject",
        }
    }

    pub fn parse(s: &str) -> Option<Decision> {
        Decision::ALL.into_iter().find(|d| d.as_str() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub seq: u64,
    pub scaffold_id: String,
    pub decision: Decision,
    pub annotator: String,
    pub timestamp: String,
    #[serde(default)]
    pub note: String,
}

/// History plus last-write-wins views per scaffold and per (scaffold, annotator).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelState {
    history: Vec<LabelRecord>,
    effective: BTreeMap<String, usize>,
    by_annotator: BTreeMap<(String, String), usize>,
}

impl LabelState {
    pub fn apply(&mut self, r: LabelRecord) {
        let i = self.history.len();
        self.effective.insert(r.scaffold_id.clone(), i);
        self.by_annotator.insert((r.scaffold_id.clone(), r.annotator.clone()), i);
        self.history.push(r);
    }

    pub fn history(&self) -> &[LabelRecord] {
        &self.history
    }

    pub fn next_seq(&self) -> u64 {
        self.history.last().map_or(1, |r| r.seq + 1)
    }

    pub fn decision(&self, scaffold: &str) -> Option<Decision> {
        self.effective.get(scaffold).map(|&i| self.history[i].decision)
    }

    pub fn latest(&self, scaffold: &str) -> Option<&LabelRecord> {
        self.effective.get(scaffold).map(|&i| &self.history[i])
    }

    pub fn effective(&self) -> BTreeMap<String, Decision> {
        self.effective.iter().map(|(k, &i)| (k.clone(), self.history[i].decision)).collect()
    }

    pub fn by_annotator(&self) -> BTreeMap<(String, String), Decision> {
        self.by_annotator.iter().map(|(k, &i)| (k.clone(), self.history[i].decision)).collect()
    }

    pub fn scaffold_history(&self, scaffold: &str) -> Vec<&LabelRecord> {
        self.history.iter().filter(|r| r.scaffold_id == scaffold).collect()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReplayReport {
    pub records: usize,
    /// 1-based line numbers that did not parse, typically a write cut short.
    pub skipped_lines: Vec<usize>,
}

/// Newline-delimited JSON, one record per line, synced after every append.
#[derive(Debug)]
pub struct LabelLog {
    path: PathBuf,
    file: File,
}

impl LabelLog {
    /// Opens or creates the log and replays it. A trailing partial line is
    /// closed with a newline so later appends start on a fresh line.
    pub fn open(path: &Path) -> Result<(Self, LabelState, ReplayReport), AdjudicationError> {
        let io = |e: std::io::Error| AdjudicationError::Io(path.display().to_string(), e.to_string());
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path).map_err(io)?;
        let mut text = String::new();
        file.read_to_string(&mut text).map_err(io)?;
        let (state, report) = replay(&text);
        if !text.is_empty() && !text.ends_with('\n') {
            file.write_all(b"\n").map_err(io)?;
            file.sync_data().map_err(io)?;
        }
        Ok((
            LabelLog {
                path: path.to_path_buf(),
                file,
            },
            state,
            report,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, r: &LabelRecord) -> Result<(), AdjudicationError> {
        let io = |e: std::io::Error| AdjudicationError::Io(self.path.display().to_string(), e.to_string());
        let mut line = serde_json::to_vec(r).map_err(|e| AdjudicationError::Internal(e.to_string()))?;
        line.push(b'\n');
        self.file.write_all(&line).map_err(io)?;
        self.file.sync_data().map_err(io)
    }
}

pub fn replay(text: &str) -> (LabelState, ReplayReport) {
    let mut state = LabelState::default();
    let mut report = ReplayReport::default();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LabelRecord>(line) {
            Ok(r) => {
                state.apply(r);
                report.records += 1;
            }
            Err(_) => report.skipped_lines.push(n + 1),
        }
    }
    (state, report)
}
