//! Debiased negative-label OOD scoring for vision-language embeddings.
//!
//! Given unit-norm image and text embeddings from a dual-encoder model, this
//! crate scores test images for out-of-distribution-ness against a set of
//! in-distribution (ID) label embeddings and a wild, unlabeled label corpus.
//! The wild corpus is modelled as a mixture of positives (close to ID labels)
//! and negatives; the debiased score subtracts a synthesized-positive
//! correction from the wild exponential mass instead of treating every wild
//! label as a negative.
//!
//! The pipeline:
//!
//! 1. [`selection`] ranks the wild corpus by kNN representativeness, keeps the
//!    top `L` and partitions them into `B` groups.
//! 2. [`positives`] synthesizes one positive-label embedding per ID label by
//!    a small Gaussian perturbation followed by re-normalization.
//! 3. [`scoring`] computes the grouped debiased score (plus MCM and NegLabel
//!    baselines), and [`metrics`] evaluates AUROC / FPR95.
//!
//! [`oracle`] and [`verify`] hold exact enumeration and Monte-Carlo checks of
//! the estimator's limit and bias; [`synthetic`] builds seeded desk-scale
//! benchmarks with a known mixture.
//!
//! The crate is `no_std` (with `alloc`); file formats and the CLI live in the
//! `negbias` companion crate.
//!
//! ```
//! use negbias_core::{EmbeddingMatrix, similarity};
//!
//! let m = EmbeddingMatrix::new(2, 2, vec![1.0, 0.0, 0.6, 0.8], None).unwrap();
//! let h = similarity::affinity(m.row(0), m.row(1), 0.01).unwrap();
//! assert!((h - 0.006).abs() < 1e-9);
//! ```

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

mod error;
mod types;

pub mod metrics;
pub mod oracle;
pub mod positives;
pub mod rng;
pub mod scoring;
pub mod selection;
pub mod similarity;
pub mod synthetic;
pub mod verify;

pub use error::{Error, Result};
pub use types::{
    validate, EmbeddingMatrix, GroupingMode, LambdaMode, Method, ScoreConfig, ScoreReport, NORM_TOLERANCE,
};
