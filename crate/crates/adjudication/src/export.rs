//! Adjudication report grouped by decision.

use std::fmt::Write;

use pagforge_core::descriptors::DescriptorVector;
use serde::Serialize;

use crate::labels::{Decision, LabelState};
use crate::store::Store;
use crate::AdjudicationError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParentEntry {
    pub id: String,
    pub smiles: String,
    /// Predicted probability of the low-LUMO class, not a computed energy.
    pub classifier_probability: f64,
    pub descriptors: DescriptorVector,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescriptorSummary {
    pub mean_mw: f64,
    pub mean_logp: f64,
    pub mean_sa: f64,
    pub mean_num_atoms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaffoldEntry {
    pub id: String,
    pub smiles: String,
    pub note: String,
    pub parents: Vec<ParentEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionGroup {
    pub decision: Decision,
    pub scaffolds: Vec<ScaffoldEntry>,
    pub parent_count: usize,
    pub mean_classifier_probability: Option<f64>,
    pub descriptor_summary: Option<DescriptorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExportReport {
    pub labelled_scaffolds: usize,
    pub unlabelled_scaffolds: usize,
    pub label_records: usize,
    pub groups: Vec<DecisionGroup>,
}

impl ExportReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Accepted scaffolds first, each followed by its parent molecules with
    /// the classifier probability in the energy annotation slot.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            let _ = writeln!(out, "== {} ({} scaffolds, {} parents)", g.decision.as_str(), g.scaffolds.len(), g.parent_count);
            if let Some(p) = g.mean_classifier_probability {
                let _ = writeln!(out, "mean classifier probability: {p:.3}");
            }
            for s in &g.scaffolds {
                let _ = writeln!(out, "{}  {}", s.id, s.smiles);
                if !s.note.is_empty() {
                    let _ = writeln!(out, "  note: {}", s.note);
                }
                for p in &s.parents {
                    let _ = writeln!(out, "  {}  {}  p(low LUMO) = {:.3}", p.id, p.smiles, p.classifier_probability);
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn export_adjudicated(store: &Store, labels: &LabelState) -> Result<ExportReport, AdjudicationError> {
    let effective = labels.effective();
    let known: Vec<(&String, &Decision)> = effective.iter().filter(|(k, _)| store.scaffold(k).is_some()).collect();
    if known.is_empty() {
        return Err(AdjudicationError::NoLabels);
    }
    let groups = Decision::ALL
        .into_iter()
        .map(|d| {
            let scaffolds: Vec<ScaffoldEntry> = known
                .iter()
                .filter(|(_, &x)| x == d)
                .map(|(id, _)| {
                    let s = store.scaffold(id).expect("filtered to known scaffolds");
                    ScaffoldEntry {
                        id: s.id.clone(),
                        smiles: s.smiles.clone(),
                        note: labels.latest(id).map(|r| r.note.clone()).unwrap_or_default(),
                        parents: s
                            .parents
                            .iter()
                            .filter_map(|p| store.candidate(p))
                            .map(|c| ParentEntry {
                                id: c.id.clone(),
                                smiles: c.smiles.clone(),
                                classifier_probability: c.classifier_score,
                                descriptors: c.descriptors,
                            })
                            .collect(),
                    }
                })
                .collect();
            let mut parents: Vec<&ParentEntry> = scaffolds.iter().flat_map(|s| &s.parents).collect();
            parents.sort_by(|a, b| a.id.cmp(&b.id));
            parents.dedup_by(|a, b| a.id == b.id);
            let n = parents.len() as f64;
            let mean = |f: &dyn Fn(&ParentEntry) -> f64| parents.iter().map(|p| f(p)).sum::<f64>() / n;
            DecisionGroup {
                decision: d,
                parent_count: parents.len(),
                mean_classifier_probability: (!parents.is_empty()).then(|| mean(&|p| p.classifier_probability)),
                descriptor_summary: (!parents.is_empty()).then(|| DescriptorSummary {
                    mean_mw: mean(&|p| p.descriptors.mw),
                    mean_logp: mean(&|p| p.descriptors.logp),
                    mean_sa: mean(&|p| p.descriptors.sa),
                    mean_num_atoms: mean(&|p| p.descriptors.num_atoms as f64),
                }),
                scaffolds,
            }
        })
        .collect();
    Ok(ExportReport {
        labelled_scaffolds: known.len(),
        unlabelled_scaffolds: store.scaffolds().len() - known.len(),
        label_records: labels.history().len(),
        groups,
    })
}
