use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chem::Element;
use crate::descriptors::DescriptorVector;

use super::{Compound, DatasetError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds<T> {
    pub min: T,
    pub max: T,
}

impl<T: PartialOrd + Copy> Bounds<T> {
    pub fn contains(&self, v: T) -> bool {
        self.min <= v && v <= self.max
    }
}

/// Inclusive per-property bounds plus the permitted element vocabulary
/// (hydrogen is always permitted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyWindow {
    pub num_atoms: Bounds<usize>,
    pub logp: Bounds<f64>,
    pub sa: Bounds<f64>,
    pub mw: Bounds<f64>,
    pub ring_count: Bounds<usize>,
    pub max_ring_size: Bounds<usize>,
    pub allowed_elements: BTreeSet<Element>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowRule {
    NumAtoms,
    Logp,
    Sa,
    Mw,
    RingCount,
    MaxRingSize,
    Elements,
}

impl PropertyWindow {
    pub fn table1() -> Self {
        serde_json::from_str(include_str!("../../../../data/table1.json")).expect("bundled window parses")
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(path).map_err(|e| DatasetError::Io(path.display().to_string(), e.to_string()))?;
        let w: PropertyWindow =
            serde_json::from_str(&text).map_err(|e| DatasetError::Config(path.display().to_string(), e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let ok = self.num_atoms.min <= self.num_atoms.max
            && self.logp.min <= self.logp.max
            && self.sa.min <= self.sa.max
            && self.mw.min <= self.mw.max
            && self.ring_count.min <= self.ring_count.max
            && self.max_ring_size.min <= self.max_ring_size.max;
        if ok {
            Ok(())
        } else {
            Err(DatasetError::Config("window".into(), "min exceeds max".into()))
        }
    }

    /// Every rule the compound violates, in a fixed order.
    pub fn violations(&self, c: &Compound) -> Vec<WindowRule> {
        let d = DescriptorVector::compute(&c.mol);
        let mut out = Vec::new();
        if !self.num_atoms.contains(d.num_atoms) {
            out.push(WindowRule::NumAtoms);
        }
        if !self.logp.contains(d.logp) {
            out.push(WindowRule::Logp);
        }
        if !self.sa.contains(d.sa) {
            out.push(WindowRule::Sa);
        }
        if !self.mw.contains(d.mw) {
            out.push(WindowRule::Mw);
        }
        if !self.ring_count.contains(d.ring_count) {
            out.push(WindowRule::RingCount);
        }
        if !self.max_ring_size.contains(d.max_ring_size) {
            out.push(WindowRule::MaxRingSize);
        }
        if c
            .mol
            .atoms
            .iter()
            .any(|a| a.element != Element::H && !self.allowed_elements.contains(&a.element))
        {
            out.push(WindowRule::Elements);
        }
        out
    }
}
