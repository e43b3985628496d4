//! Regenerate the bundled synthetic corpora under `<out>` (default `data/`).

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use pagforge_core::synth;

fn main() -> std::io::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    fs::create_dir_all(&out)?;

    let mut f = fs::File::create(out.join("minizinc.smi"))?;
    for (smiles, id) in synth::mini_zinc(5000, 20_221) {
        writeln!(f, "{smiles}\t{id}")?;
    }

    let mut f = fs::File::create(out.join("pag_reference.csv"))?;
    writeln!(f, "smiles,id,lumo_ev")?;
    for (smiles, id, lumo) in synth::reference_set(300, 1353) {
        writeln!(f, "{smiles},{id},{lumo:.3}")?;
    }

    let mut f = fs::File::create(out.join("roundtrip_1000.smi"))?;
    for (i, smiles) in synth::roundtrip_corpus(1000, 1000).into_iter().enumerate() {
        writeln!(f, "{smiles}\tRT{:04}", i + 1)?;
    }
    Ok(())
}
