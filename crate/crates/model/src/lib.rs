//! Latent-space models: the sequence autoencoder, the latent density,
//! attribute classifiers and the conditional rejection sampler.

pub mod classifier;
pub mod container;
pub mod gmm;
pub mod sampler;
pub mod seed;
pub mod vae;

pub use container::{Container, ContainerError, Tensor};
pub use seed::derive_seed;
