pub mod chem;
pub mod dataset;
pub mod descriptors;
pub mod metrics;
pub mod screening;
pub mod synth;
