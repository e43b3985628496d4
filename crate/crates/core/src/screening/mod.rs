//! Post-generation filters, similarity binning, fragments, scaffolds and
//! pairwise-distance histograms.

mod binning;
mod brics;
mod filters;
mod histogram;
mod murcko;
mod summary;

use thiserror::Error;

use crate::descriptors::DescriptorError;

pub use binning::{max_similarities, similarity_binning, BinningConfig, BinningResult, SimilarityBin};
pub use brics::{brics_bonds, brics_fragment_smiles, brics_fragments, environments, Env};
pub use filters::{chem_filters, contains_amine, is_sulfonium, verdict_for, FilterConfig, FilterRule, FilterVerdict};
pub use histogram::{dice_histogram, DiceHistogram};
pub use murcko::murcko_scaffold;
pub use summary::{fragment_scaffolds, scaffold_summary, ScaffoldCounts, ScaffoldRecord, ScaffoldSummary};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScreeningError {
    #[error("reference set is empty")]
    EmptyReference,
    #[error("need at least 2 molecules, got {0}")]
    TooFewMolecules(usize),
    #[error("bin width {0} outside (0, 1]")]
    BadBinWidth(f64),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
}
