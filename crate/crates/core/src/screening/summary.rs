use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::chem::{canonical_smiles, Molecule};

use super::{brics_fragments, is_sulfonium, murcko_scaffold};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaffoldRecord {
    pub scaffold: String,
    pub parents: Vec<String>,
    pub is_sulfonium: bool,
    pub is_novel: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaffoldCounts {
    pub molecules: usize,
    pub scaffolds: usize,
    pub sulfonium_scaffolds: usize,
    pub novel_sulfonium_scaffolds: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaffoldSummary {
    pub reference: ScaffoldCounts,
    pub generated: ScaffoldCounts,
    pub records: Vec<ScaffoldRecord>,
}

/// Canonical scaffolds of every fragment: fragment, then side-chain removal.
pub fn fragment_scaffolds(mol: &Molecule) -> BTreeMap<String, Molecule> {
    let mut out = BTreeMap::new();
    for frag in brics_fragments(mol) {
        if let Some(s) = murcko_scaffold(&frag) {
            out.entry(canonical_smiles(&s)).or_insert(s);
        }
    }
    out
}

struct Collected {
    molecules: usize,
    scaffolds: BTreeMap<String, (bool, Vec<String>)>,
}

fn collect<'a>(mols: impl IntoIterator<Item = (&'a str, &'a Molecule)>) -> Collected {
    let mut scaffolds: BTreeMap<String, (bool, Vec<String>)> = BTreeMap::new();
    let mut molecules = 0;
    for (id, m) in mols {
        molecules += 1;
        for (smi, s) in fragment_scaffolds(m) {
            scaffolds
                .entry(smi)
                .or_insert_with(|| (is_sulfonium(&s), Vec::new()))
                .1
                .push(id.to_string());
        }
    }
    Collected { molecules, scaffolds }
}

/// Table-3 style accounting of generated versus reference scaffolds.
pub fn scaffold_summary<'a>(
    generated: impl IntoIterator<Item = (&'a str, &'a Molecule)>,
    reference: impl IntoIterator<Item = (&'a str, &'a Molecule)>,
) -> ScaffoldSummary {
    let gen = collect(generated);
    let refs = collect(reference);
    let ref_set: BTreeSet<&String> = refs.scaffolds.keys().collect();
    let records: Vec<ScaffoldRecord> = gen
        .scaffolds
        .iter()
        .map(|(smi, (sulf, parents))| ScaffoldRecord {
            scaffold: smi.clone(),
            parents: parents.clone(),
            is_sulfonium: *sulf,
            is_novel: !ref_set.contains(smi),
        })
        .collect();
    let counts = |c: &Collected| ScaffoldCounts {
        molecules: c.molecules,
        scaffolds: c.scaffolds.len(),
        sulfonium_scaffolds: c.scaffolds.values().filter(|v| v.0).count(),
        novel_sulfonium_scaffolds: None,
    };
    let mut generated = counts(&gen);
    generated.novel_sulfonium_scaffolds = Some(records.iter().filter(|r| r.is_sulfonium && r.is_novel).count());
    ScaffoldSummary {
        reference: counts(&refs),
        generated,
        records,
    }
}

impl ScaffoldSummary {
    pub fn sulfonium_records(&self) -> impl Iterator<Item = &ScaffoldRecord> {
        self.records.iter().filter(|r| r.is_sulfonium)
    }

    pub fn to_table(&self) -> String {
        let row = |label: &str, r: String, g: String| format!("{label:<26}| {r:>9} | {g:>9}\n");
        let dash = |v: Option<usize>| v.map_or("--".to_string(), |x| x.to_string());
        let mut out = row("", "Reference".into(), "Generated".into());
        out.push_str(&format!("{}\n", "-".repeat(50)));
        out.push_str(&row(
            "Sulfonium cations",
            self.reference.molecules.to_string(),
            self.generated.molecules.to_string(),
        ));
        out.push_str(&row(
            "All scaffolds",
            self.reference.scaffolds.to_string(),
            self.generated.scaffolds.to_string(),
        ));
        out.push_str(&row(
            "Sulfonium scaffolds",
            self.reference.sulfonium_scaffolds.to_string(),
            self.generated.sulfonium_scaffolds.to_string(),
        ));
        out.push_str(&row(
            "Novel sulfonium scaffolds",
            dash(self.reference.novel_sulfonium_scaffolds),
            dash(self.generated.novel_sulfonium_scaffolds),
        ));
        out
    }
}
