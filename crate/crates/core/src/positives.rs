//! Synthetic positive-label embeddings.
//!
//! Each ID text embedding `z` is mapped to `(z + σε) / ‖z + σε‖` with
//! `ε ~ N(0, I_d)`. One `ε` is drawn per ID label per bank, in row order, from
//! the positives stream of the run seed.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{standard_normal_vec, stream_rng, STREAM_POSITIVES};
use crate::{EmbeddingMatrix, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositiveBank {
    /// One synthesized positive per ID label, same order and labels.
    pub vectors: EmbeddingMatrix,
    pub sigma: f64,
    pub seed: u64,
}

/// Perturbs a unit vector and projects it back onto the sphere.
///
/// Always consumes one `d`-dimensional normal draw; with `sigma == 0` the
/// input is returned unchanged.
pub fn perturb<R: Rng + ?Sized>(z: &[f32], sigma: f64, rng: &mut R) -> Result<Vec<f32>> {
    for _ in 0..2 {
        let eps = standard_normal_vec(rng, z.len());
        if sigma == 0.0 {
            return Ok(z.to_vec());
        }
        let moved: Vec<f64> = z
            .iter()
            .zip(&eps)
            .map(|(&zi, &ei)| f64::from(zi) + sigma * ei)
            .collect();
        let norm = libm::sqrt(moved.iter().map(|v| v * v).sum());
        if norm > f64::MIN_POSITIVE && norm.is_finite() {
            return Ok(moved.iter().map(|v| (v / norm) as f32).collect());
        }
    }
    Err(Error::ZeroNormResult)
}

pub fn synthesize_bank(id_texts: &EmbeddingMatrix, sigma: f64, seed: u64) -> Result<PositiveBank> {
    crate::validate(id_texts)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(alloc::format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    let mut rng = stream_rng(seed, STREAM_POSITIVES);
    let mut data = Vec::with_capacity(id_texts.data().len());
    for row in id_texts.iter_rows() {
        data.extend(perturb(row, sigma, &mut rng)?);
    }
    let labels = id_texts.labels().map(<[_]>::to_vec);
    let vectors = EmbeddingMatrix::new(id_texts.rows(), id_texts.dim(), data, labels)?;
    Ok(PositiveBank { vectors, sigma, seed })
}
