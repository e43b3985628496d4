//! Candidate and scaffold store built from a candidate file.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use pagforge_core::chem::{canonical_smiles, parse_smiles, Molecule};
use pagforge_core::descriptors::{default_fingerprint, DescriptorVector, Fingerprint};
use pagforge_core::screening::{fragment_scaffolds, is_sulfonium};
use serde::{Deserialize, Serialize};

use crate::AdjudicationError;

/// One row of the candidate file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateInput {
    pub id: String,
    pub smiles: String,
    pub classifier_score: f64,
    pub max_ref_similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub id: String,
    pub smiles: String,
    pub scaffold_ids: Vec<String>,
    pub descriptors: DescriptorVector,
    pub classifier_score: f64,
    pub max_ref_similarity: f64,
    #[serde(skip)]
    pub mol: Molecule,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scaffold {
    pub id: String,
    pub smiles: String,
    pub parents: Vec<String>,
    pub descriptors: DescriptorVector,
    #[serde(skip)]
    pub mol: Molecule,
    #[serde(skip)]
    pub fingerprint: Fingerprint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Store {
    candidates: Vec<Candidate>,
    scaffolds: Vec<Scaffold>,
    candidate_index: BTreeMap<String, usize>,
    scaffold_index: BTreeMap<String, usize>,
}

impl Store {
    pub fn load(path: &Path) -> Result<Self, AdjudicationError> {
        let text = std::fs::read_to_string(path).map_err(|e| AdjudicationError::Io(path.display().to_string(), e.to_string()))?;
        let inputs: Vec<CandidateInput> =
            serde_json::from_str(&text).map_err(|e| AdjudicationError::CandidateFile(e.to_string()))?;
        Self::from_inputs(inputs)
    }

    /// Scaffolds are the sulfonium ring scaffolds of each candidate's BRICS
    /// fragments, numbered in canonical-SMILES order.
    pub fn from_inputs(inputs: Vec<CandidateInput>) -> Result<Self, AdjudicationError> {
        let mut seen = BTreeSet::new();
        let mut parsed = Vec::with_capacity(inputs.len());
        let mut scaffold_mols: BTreeMap<String, (Molecule, BTreeSet<String>)> = BTreeMap::new();
        for c in inputs {
            if !seen.insert(c.id.clone()) {
                return Err(AdjudicationError::CandidateFile(format!("duplicate id {}", c.id)));
            }
            if !(c.classifier_score > 0.0 && c.classifier_score < 1.0) {
                return Err(AdjudicationError::CandidateFile(format!(
                    "{}: classifier_score {} outside (0, 1)",
                    c.id, c.classifier_score
                )));
            }
            if !(0.0..=1.0).contains(&c.max_ref_similarity) {
                return Err(AdjudicationError::CandidateFile(format!(
                    "{}: max_ref_similarity {} outside [0, 1]",
                    c.id, c.max_ref_similarity
                )));
            }
            let mol = parse_smiles(&c.smiles).map_err(|e| AdjudicationError::CandidateFile(format!("{}: {e}", c.id)))?;
            let mut keys = Vec::new();
            for (key, scaffold) in fragment_scaffolds(&mol) {
                if is_sulfonium(&scaffold) {
                    scaffold_mols
                        .entry(key.clone())
                        .or_insert_with(|| (scaffold, BTreeSet::new()))
                        .1
                        .insert(c.id.clone());
                    keys.push(key);
                }
            }
            parsed.push((c, mol, keys));
        }
        let width = scaffold_mols.len().to_string().len().max(4);
        let scaffold_index: BTreeMap<String, usize> = scaffold_mols.keys().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        let scaffold_id = |i: usize| format!("S{:0width$}", i + 1);
        let scaffolds: Vec<Scaffold> = scaffold_mols
            .into_iter()
            .enumerate()
            .map(|(i, (smiles, (mol, parents)))| Scaffold {
                id: scaffold_id(i),
                smiles,
                parents: parents.into_iter().collect(),
                descriptors: DescriptorVector::compute(&mol),
                fingerprint: default_fingerprint(&mol),
                mol,
            })
            .collect();
        let candidates: Vec<Candidate> = parsed
            .into_iter()
            .map(|(c, mol, keys)| Candidate {
                scaffold_ids: keys.iter().map(|k| scaffold_id(scaffold_index[k])).collect(),
                smiles: canonical_smiles(&mol),
                descriptors: DescriptorVector::compute(&mol),
                id: c.id,
                classifier_score: c.classifier_score,
                max_ref_similarity: c.max_ref_similarity,
                mol,
            })
            .collect();
        Ok(Store {
            candidate_index: candidates.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect(),
            scaffold_index: scaffolds.iter().enumerate().map(|(i, s)| (s.id.clone(), i)).collect(),
            candidates,
            scaffolds,
        })
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn scaffolds(&self) -> &[Scaffold] {
        &self.scaffolds
    }

    pub fn candidate(&self, id: &str) -> Option<&Candidate> {
        self.candidate_index.get(id).map(|&i| &self.candidates[i])
    }

    pub fn scaffold(&self, id: &str) -> Option<&Scaffold> {
        self.scaffold_index.get(id).map(|&i| &self.scaffolds[i])
    }

    /// Candidates by descending classifier score, ties by id.
    pub fn queue_order(&self) -> Vec<&Candidate> {
        let mut v: Vec<&Candidate> = self.candidates.iter().collect();
        v.sort_by(|a, b| b.classifier_score.total_cmp(&a.classifier_score).then_with(|| a.id.cmp(&b.id)));
        v
    }
}
