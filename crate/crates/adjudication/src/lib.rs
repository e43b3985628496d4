//! Expert adjudication backend: candidate and scaffold store, label log,
//! scaffold network, export and depiction, served over HTTP.

pub mod api;
pub mod depict;
pub mod export;
pub mod labels;
pub mod network;
pub mod store;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock, RwLockReadGuard};

use chrono::{SecondsFormat, Utc};
use serde::Deserialize;
use thiserror::Error;

pub use export::{export_adjudicated, ExportReport};
pub use labels::{Decision, LabelLog, LabelRecord, LabelState, ReplayReport};
pub use network::{build_network, NetworkGraph, DEFAULT_THRESHOLD};
pub use store::{Candidate, CandidateInput, Scaffold, Store};

pub const DEFAULT_ANNOTATOR: &str = "sme";

#[derive(Debug, Error)]
pub enum AdjudicationError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("candidate file: {0}")]
    CandidateFile(String),
    #[error("unknown scaffold {0}")]
    UnknownScaffold(String),
    #[error("unknown id {0}")]
    UnknownId(String),
    #[error("invalid decision {0:?}; expected accept, uncertain or reject")]
    InvalidDecision(String),
    #[error("no labels recorded yet")]
    NoLabels,
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("internal error: {0}")]
    Internal(String),
}

#[derive(Debug, Clone, Deserialize)]
pub struct LabelSubmission {
    pub scaffold_id: String,
    pub decision: String,
    #[serde(default)]
    pub annotator: Option<String>,
    #[serde(default)]
    pub note: Option<String>,
}

/// Store plus label state; label writes go through a single log writer.
#[derive(Debug)]
pub struct Service {
    store: Store,
    labels: RwLock<LabelState>,
    log: Mutex<LabelLog>,
    replay: ReplayReport,
}

impl Service {
    pub fn open(candidates: &Path, labels: &Path) -> Result<Self, AdjudicationError> {
        Self::with_store(Store::load(candidates)?, labels)
    }

    pub fn with_store(store: Store, labels: &Path) -> Result<Self, AdjudicationError> {
        let (log, state, replay) = LabelLog::open(labels)?;
        Ok(Service {
            store,
            labels: RwLock::new(state),
            log: Mutex::new(log),
            replay,
        })
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn replay_report(&self) -> &ReplayReport {
        &self.replay
    }

    pub fn labels(&self) -> RwLockReadGuard<'_, LabelState> {
        self.labels.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn effective_labels(&self) -> BTreeMap<String, Decision> {
        self.labels().effective()
    }

    pub fn submit(&self, sub: LabelSubmission) -> Result<LabelRecord, AdjudicationError> {
        if self.store.scaffold(&sub.scaffold_id).is_none() {
            return Err(AdjudicationError::UnknownScaffold(sub.scaffold_id));
        }
        let decision = Decision::parse(&sub.decision).ok_or(AdjudicationError::InvalidDecision(sub.decision))?;
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        let record = LabelRecord {
            seq: self.labels().next_seq(),
            scaffold_id: sub.scaffold_id,
            decision,
            annotator: sub.annotator.unwrap_or_else(|| DEFAULT_ANNOTATOR.to_string()),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            note: sub.note.unwrap_or_default(),
        };
        log.append(&record)?;
        self.labels.write().unwrap_or_else(|e| e.into_inner()).apply(record.clone());
        Ok(record)
    }

    pub fn network(&self, threshold: f64) -> NetworkGraph {
        build_network(&self.store, &self.labels(), threshold)
    }

    pub fn export(&self) -> Result<ExportReport, AdjudicationError> {
        export_adjudicated(&self.store, &self.labels())
    }

    /// Depiction of a candidate or scaffold by id.
    pub fn depict(&self, id: &str) -> Result<String, AdjudicationError> {
        if let Some(c) = self.store.candidate(id) {
            return Ok(depict::depict_svg(&c.mol, &format!("{} {}", c.id, c.smiles)));
        }
        if let Some(s) = self.store.scaffold(id) {
            return Ok(depict::depict_svg(&s.mol, &format!("{} {}", s.id, s.smiles)));
        }
        Err(AdjudicationError::UnknownId(id.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct ServeConfig {
    pub host: [u8; 4],
    pub port: u16,
    pub data_dir: PathBuf,
    pub candidates: Option<PathBuf>,
    pub labels: Option<PathBuf>,
}

impl ServeConfig {
    pub fn candidates_path(&self) -> PathBuf {
        self.candidates.clone().unwrap_or_else(|| self.data_dir.join("candidates.json"))
    }

    pub fn labels_path(&self) -> PathBuf {
        self.labels.clone().unwrap_or_else(|| self.data_dir.join("labels.ndjson"))
    }
}

pub async fn serve(cfg: ServeConfig) -> Result<(), AdjudicationError> {
    let svc = Arc::new(Service::open(&cfg.candidates_path(), &cfg.labels_path())?);
    let addr = SocketAddr::from((cfg.host, cfg.port));
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|e| AdjudicationError::Io(addr.to_string(), e.to_string()))?;
    eprintln!(
        "serving {} candidates, {} scaffolds, {} label records on http://{}",
        svc.store().candidates().len(),
        svc.store().scaffolds().len(),
        svc.labels().history().len(),
        addr
    );
    axum::serve(listener, api::router(svc))
        .await
        .map_err(|e| AdjudicationError::Io(addr.to_string(), e.to_string()))
}
