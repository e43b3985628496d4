use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chem::{canonical_smiles, parse_smiles, Molecule};

use super::DatasetError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub smiles: String,
    pub id: String,
    pub lumo_ev: Option<f64>,
}

/// A record together with its parsed graph.
#[derive(Debug, Clone)]
pub struct Compound {
    pub record: Record,
    pub mol: Molecule,
    pub canonical: String,
}

impl Compound {
    pub fn from_record(record: Record) -> Result<Self, crate::chem::ChemError> {
        let mol = parse_smiles(&record.smiles)?;
        let canonical = canonical_smiles(&mol);
        Ok(Compound { record, mol, canonical })
    }

    pub fn from_smiles(smiles: &str, id: impl Into<String>) -> Result<Self, crate::chem::ChemError> {
        Self::from_record(Record {
            smiles: smiles.to_string(),
            id: id.into(),
            lumo_ev: None,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LineError {
    pub line: usize,
    pub smiles: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Duplicate {
    pub line: usize,
    pub first_line: usize,
    pub canonical: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub source: String,
    pub lines_read: usize,
    pub records: usize,
    pub skipped: Vec<LineError>,
    pub duplicates: Vec<Duplicate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OnError {
    Skip,
    Fail,
}

/// Read a SMILES-per-line file (optional tab-separated id) or a CSV with
/// header `smiles,id,lumo_ev`. Blank lines and `#` comments are ignored.
pub fn ingest(path: &Path, on_error: OnError) -> Result<(Vec<Compound>, IngestReport), DatasetError> {
    let text = fs::read_to_string(path).map_err(|e| DatasetError::Io(path.display().to_string(), e.to_string()))?;
    ingest_str(&text, &path.display().to_string(), on_error)
}

pub fn ingest_str(text: &str, source: &str, on_error: OnError) -> Result<(Vec<Compound>, IngestReport), DatasetError> {
    let mut lines = text.lines().enumerate().peekable();
    let csv = lines
        .peek()
        .map(|(_, l)| l.trim().to_ascii_lowercase().starts_with("smiles,"))
        .unwrap_or(false);
    let mut lumo_col = None;
    let mut id_col = None;
    if csv {
        let header: Vec<String> = lines.next().unwrap().1.split(',').map(|h| h.trim().to_ascii_lowercase()).collect();
        id_col = header.iter().position(|h| h == "id");
        lumo_col = header.iter().position(|h| h == "lumo_ev");
    }

    let mut report = IngestReport {
        source: source.to_string(),
        ..Default::default()
    };
    let mut out = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    for (i, raw) in lines {
        let line_no = i + 1;
        report.lines_read += 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (smiles, id, lumo) = if csv {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let id = id_col.and_then(|c| fields.get(c)).map(|s| s.to_string());
            let lumo = match lumo_col.and_then(|c| fields.get(c)) {
                Some(v) if !v.is_empty() => Some(v.parse::<f64>().map_err(|_| DatasetError::BadField {
                    line: line_no,
                    field: "lumo_ev",
                    value: v.to_string(),
                })?),
                _ => None,
            };
            (fields[0].to_string(), id, lumo)
        } else {
            let mut parts = line.split('\t');
            let smiles = parts.next().unwrap().trim().to_string();
            let id = parts.next().map(|s| s.trim().to_string()).filter(|s| !s.is_empty());
            (smiles, id, None)
        };
        if let Some(l) = lumo {
            if !l.is_finite() {
                return Err(DatasetError::BadField {
                    line: line_no,
                    field: "lumo_ev",
                    value: l.to_string(),
                });
            }
        }
        let record = Record {
            id: id.unwrap_or_else(|| format!("L{line_no}")),
            smiles,
            lumo_ev: lumo,
        };
        match Compound::from_record(record) {
            Ok(c) => {
                if let Some(&first) = first_seen.get(&c.canonical) {
                    report.duplicates.push(Duplicate {
                        line: line_no,
                        first_line: first,
                        canonical: c.canonical.clone(),
                    });
                } else {
                    first_seen.insert(c.canonical.clone(), line_no);
                }
                out.push(c);
            }
            Err(e) => match on_error {
                OnError::Fail => {
                    return Err(DatasetError::Parse {
                        line: line_no,
                        smiles: raw.trim().to_string(),
                        message: e.to_string(),
                    })
                }
                OnError::Skip => report.skipped.push(LineError {
                    line: line_no,
                    smiles: raw.trim().to_string(),
                    message: e.to_string(),
                }),
            },
        }
    }
    report.records = out.len();
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_valid_lines() {
        let (recs, rep) = ingest_str("C[S+](C)C\tA\nc1ccccc1\tB\n\nCCO\n", "t", OnError::Fail).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(rep.records, 3);
        assert_eq!(recs[2].record.id, "L4");
    }

    #[test]
    fn strict_mode_reports_line() {
        let err = ingest_str("CCO\nC1CC\n", "t", OnError::Fail).unwrap_err();
        assert!(matches!(err, DatasetError::Parse { line: 2, .. }), "{err:?}");
        let (recs, rep) = ingest_str("CCO\nC1CC\n", "t", OnError::Skip).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(rep.skipped[0].line, 2);
    }

    #[test]
    fn duplicates_flagged() {
        let (recs, rep) = ingest_str("CCO\nOCC\nC\n", "t", OnError::Fail).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(rep.duplicates.len(), 1);
        assert_eq!((rep.duplicates[0].line, rep.duplicates[0].first_line), (2, 1));
    }

    #[test]
    fn csv_with_lumo() {
        let (recs, _) = ingest_str("smiles,id,lumo_ev\nC[S+](C)C,P1,-5.2\nCC[S+](C)C,P2,\n", "t", OnError::Fail).unwrap();
        assert_eq!(recs[0].record.lumo_ev, Some(-5.2));
        assert_eq!(recs[0].record.id, "P1");
        assert_eq!(recs[1].record.lumo_ev, None);
    }
}
