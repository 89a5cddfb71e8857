//! Measurement machinery for accuracy/diversity trade-offs in image captioning.
//!
//! The crate is organised by concern:
//!
//! - [`corpus`]: caption data model, tokenization and JSON-lines ingestion.
//! - [`ngram_metrics`]: BLEU, ROUGE-L, CIDEr-D and the count-based diversity
//!   metrics (Div-n, mBLEU-N, unique sentence ratio).
//! - [`spectral_diversity`]: self-CIDEr, the spectral diversity of a caption set.
//! - [`variational`]: diagonal Gaussians, Gaussian mixtures, the chain-rule KL
//!   upper bound between mixtures and the variational loss assembly.
//! - [`scst_lab`]: a seeded REINFORCE simulator comparing greedy,
//!   average-of-rest and range-median reward baselines.
//! - [`tradeoff`]: trade-off profit rate, trade-off conversion rate and the
//!   zero-profit boundary.
//!
//! All stochastic routines draw from [`rng::stream`], so every result is
//! reproducible bit-for-bit from its seed.

pub mod corpus;
pub mod error;
pub mod linalg;
pub mod ngram_metrics;
pub mod rng;
pub mod scst_lab;
pub mod spectral_diversity;
pub mod tradeoff;
pub mod variational;

pub use error::{Error, Result};
