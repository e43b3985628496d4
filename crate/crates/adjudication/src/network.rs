//! Scaffold and molecule network: scaffold pairs linked below a Dice
//! distance threshold, molecules linked to the scaffolds derived from them.

use pagforge_core::descriptors::{dice_distance, DescriptorVector, Fingerprint};
use serde::Serialize;

use crate::labels::{Decision, LabelState};
use crate::store::Store;

pub const DEFAULT_THRESHOLD: f64 = 0.65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Scaffold,
    Molecule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Similarity,
    Derivation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Node {
    pub id: String,
    pub kind: NodeKind,
    pub smiles: String,
    pub decision: Option<Decision>,
    pub classifier_score: Option<f64>,
    pub descriptors: DescriptorVector,
    pub depiction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Edge {
    pub source: String,
    pub target: String,
    pub kind: EdgeKind,
    pub dice_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetworkGraph {
    pub threshold: f64,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

impl NetworkGraph {
    pub fn similarity_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Similarity)
    }

    pub fn derivation_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.kind == EdgeKind::Derivation)
    }
}

/// Pairs `i < j` with `dice_distance < threshold`.
pub fn similarity_edges(fps: &[(&str, &Fingerprint)], threshold: f64) -> Vec<Edge> {
    let mut out = Vec::new();
    for (i, (a, fa)) in fps.iter().enumerate() {
        for (b, fb) in &fps[i + 1..] {
            let d = dice_distance(fa, fb).expect("scaffold fingerprints share one width");
            if d < threshold {
                out.push(Edge {
                    source: a.to_string(),
                    target: b.to_string(),
                    kind: EdgeKind::Similarity,
                    dice_distance: Some(d),
                });
            }
        }
    }
    out
}

/// Display state of a molecule from its scaffolds: any reject, else any
/// uncertain, else accept when at least one scaffold is accepted.
pub fn propagated_decision(decisions: impl IntoIterator<Item = Option<Decision>>) -> Option<Decision> {
    decisions.into_iter().flatten().max()
}

pub fn build_network(store: &Store, labels: &LabelState, threshold: f64) -> NetworkGraph {
    let mut nodes = Vec::new();
    for s in store.scaffolds() {
        nodes.push(Node {
            id: s.id.clone(),
            kind: NodeKind::Scaffold,
            smiles: s.smiles.clone(),
            decision: labels.decision(&s.id),
            classifier_score: None,
            descriptors: s.descriptors,
            depiction: format!("/api/v1/depict/{}", s.id),
        });
    }
    for c in store.candidates() {
        nodes.push(Node {
            id: c.id.clone(),
            kind: NodeKind::Molecule,
            smiles: c.smiles.clone(),
            decision: propagated_decision(c.scaffold_ids.iter().map(|s| labels.decision(s))),
            classifier_score: Some(c.classifier_score),
            descriptors: c.descriptors,
            depiction: format!("/api/v1/depict/{}", c.id),
        });
    }
    let fps: Vec<(&str, &Fingerprint)> = store.scaffolds().iter().map(|s| (s.id.as_str(), &s.fingerprint)).collect();
    let mut edges = similarity_edges(&fps, threshold);
    for c in store.candidates() {
        for s in &c.scaffold_ids {
            edges.push(Edge {
                source: c.id.clone(),
                target: s.clone(),
                kind: EdgeKind::Derivation,
                dice_distance: None,
            });
        }
    }
    NetworkGraph { threshold, nodes, edges }
}
