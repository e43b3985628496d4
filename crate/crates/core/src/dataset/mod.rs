//! Corpus ingestion, cation selection, property windowing, labels and tokens.

mod ingest;
mod tokens;
mod window;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest, ingest_str, Compound, Duplicate, IngestReport, LineError, OnError, Record};
pub use tokens::{
    split_tokens, TokenError, Vocabulary, BOS, BOS_ID, DEFAULT_MAX_LEN, EOS, EOS_ID, PAD, PAD_ID,
};
pub use window::{Bounds, PropertyWindow, WindowRule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DatasetError {
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("line {line}: cannot parse {smiles:?}: {message}")]
    Parse { line: usize, smiles: String, message: String },
    #[error("line {line}: bad {field} value {value:?}")]
    BadField { line: usize, field: &'static str, value: String },
    #[error("invalid configuration {0}: {1}")]
    Config(String, String),
    #[error("record {0} has no LUMO value")]
    MissingLumo(String),
}

/// Single-component molecules with net formal charge exactly +1.
pub fn keep_cations(compounds: Vec<Compound>) -> Vec<Compound> {
    compounds.into_iter().filter(is_monocation).collect()
}

pub fn is_monocation(c: &Compound) -> bool {
    c.mol.components().1 == 1 && c.mol.net_charge() == 1
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub dropped: usize,
    /// A record failing several rules is counted under each.
    pub dropped_by_rule: BTreeMap<WindowRule, usize>,
}

pub fn filter_window(compounds: Vec<Compound>, window: &PropertyWindow) -> (Vec<Compound>, FilterReport) {
    let mut report = FilterReport {
        input: compounds.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for c in compounds {
        let v = window.violations(&c);
        if v.is_empty() {
            kept.push(c);
        } else {
            for r in v {
                *report.dropped_by_rule.entry(r).or_default() += 1;
            }
        }
    }
    report.kept = kept.len();
    report.dropped = report.input - report.kept;
    (kept, report)
}

/// Positive iff LUMO is at or below the threshold.
pub fn label_lumo(records: &[Record], threshold_ev: f64) -> Result<Vec<bool>, DatasetError> {
    records
        .iter()
        .map(|r| match r.lumo_ev {
            Some(l) => Ok(l <= threshold_ev),
            None => Err(DatasetError::MissingLumo(r.id.clone())),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Compound {
        Compound::from_smiles(s, s).unwrap()
    }

    #[test]
    fn cation_selection() {
        let kept = keep_cations(vec![c("C[S+](C)C"), c("c1ccccc1"), c("[NH4+].[Cl-]"), c("C[N+](C)(C)CC[N+](C)(C)C")]);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].record.smiles, "C[S+](C)C");
    }

    #[test]
    fn table1_window() {
        let w = PropertyWindow::table1();
        let (kept, rep) = filter_window(vec![c("C[S+](C)C"), c("C[P+](C)(C)C")], &w);
        assert_eq!(kept.len(), 1);
        assert_eq!(rep.dropped_by_rule.get(&WindowRule::Elements), Some(&1));
    }

    #[test]
    fn mw_lower_bound() {
        let mut w = PropertyWindow::table1();
        w.num_atoms.min = 1;
        assert!(w.violations(&c("C[NH3+]")).contains(&WindowRule::Mw));
        assert!(!w.violations(&c("CC(C)[NH3+]")).contains(&WindowRule::Mw));
    }

    #[test]
    fn lumo_threshold_inclusive() {
        let recs: Vec<Record> = [-5.2, -4.9, -5.0]
            .iter()
            .map(|&l| Record {
                smiles: "C".into(),
                id: "x".into(),
                lumo_ev: Some(l),
            })
            .collect();
        assert_eq!(label_lumo(&recs, -5.0).unwrap(), vec![true, false, true]);
        let missing = Record {
            smiles: "C".into(),
            id: "m".into(),
            lumo_ev: None,
        };
        assert!(matches!(label_lumo(&[missing], -5.0), Err(DatasetError::MissingLumo(_))));
    }
}
