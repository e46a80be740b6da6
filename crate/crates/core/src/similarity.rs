//! Temperature-scaled affinities between image and text embeddings.
//!
//! `affinity(x, t) = κ · ⟨x, t⟩`. Dot products accumulate in `f64` even though
//! embeddings are stored as `f32`; the debiased score subtracts nearly equal
//! exponential sums and is sensitive to rounding.

use alloc::vec::Vec;

use crate::{EmbeddingMatrix, Error, Result};

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

pub fn affinity(image: &[f32], text: &[f32], kappa: f64) -> Result<f64> {
    if image.len() != text.len() {
        return Err(Error::DimensionMismatch {
            left: image.len(),
            right: text.len(),
        });
    }
    Ok(kappa * dot(image, text))
}

/// Dense row-major matrix of affinities: one row per image, one column per text.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl AffinityMatrix {
    pub fn from_raw(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::RaggedData {
                len: data.len(),
                expected: rows * cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> AffinityMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        AffinityMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Largest `|value|`, or 0 for an empty matrix.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn affinity_matrix(images: &EmbeddingMatrix, texts: &EmbeddingMatrix, kappa: f64) -> Result<AffinityMatrix> {
    if images.dim() != texts.dim() {
        return Err(Error::DimensionMismatch {
            left: images.dim(),
            right: texts.dim(),
        });
    }
    let mut data = Vec::with_capacity(images.rows() * texts.rows());
    for x in images.iter_rows() {
        data.extend(texts.iter_rows().map(|t| kappa * dot(x, t)));
    }
    AffinityMatrix::from_raw(images.rows(), texts.rows(), data)
}
