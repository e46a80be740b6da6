use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Allowed deviation of a row's Euclidean norm from 1.
///
/// Exporters write 32-bit floats, so exact unit norm is not expected.
pub const NORM_TOLERANCE: f64 = 1e-4;

/// Row-major matrix of unit-norm embeddings, optionally carrying one label
/// string per row.
///
/// Labels are sidecar data only; no numerical routine reads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    data: Vec<f32>,
    labels: Option<Vec<String>>,
}

impl EmbeddingMatrix {
    /// Builds a matrix and runs [`validate`] on it.
    pub fn new(rows: usize, dim: usize, data: Vec<f32>, labels: Option<Vec<String>>) -> Result<Self> {
        let m = Self::from_raw(rows, dim, data, labels)?;
        validate(&m)?;
        Ok(m)
    }

    /// Builds a matrix checking only that `data` has `rows * dim` entries.
    ///
    /// Use [`validate`] before handing the result to the scoring pipeline.
    pub fn from_raw(rows: usize, dim: usize, data: Vec<f32>, labels: Option<Vec<String>>) -> Result<Self> {
        let expected = rows.checked_mul(dim).ok_or(Error::RaggedData {
            len: data.len(),
            expected: usize::MAX,
        })?;
        if data.len() != expected {
            return Err(Error::RaggedData {
                len: data.len(),
                expected,
            });
        }
        Ok(Self {
            rows,
            dim,
            data,
            labels,
        })
    }

    /// Builds a validated matrix from row vectors.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R], labels: Option<Vec<String>>) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, data, labels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        self.data.chunks_exact(self.dim.max(1)).take(self.rows)
    }

    /// Copies the given rows (and their labels) into a new matrix, in order.
    ///
    /// Panics if an index is out of bounds.
    pub fn select_rows(&self, indices: &[usize]) -> EmbeddingMatrix {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| indices.iter().map(|&i| l[i].clone()).collect());
        EmbeddingMatrix {
            rows: indices.len(),
            dim: self.dim,
            data,
            labels,
        }
    }

    pub fn with_labels(mut self, labels: Option<Vec<String>>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != self.rows {
                return Err(Error::LabelCountMismatch {
                    labels: l.len(),
                    rows: self.rows,
                });
            }
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn into_parts(self) -> (usize, usize, Vec<f32>, Option<Vec<String>>) {
        (self.rows, self.dim, self.data, self.labels)
    }
}

/// Checks every [`EmbeddingMatrix`] invariant, reporting the first violation.
///
/// Rows outside [`NORM_TOLERANCE`] are rejected, never renormalized.
pub fn validate(matrix: &EmbeddingMatrix) -> Result<()> {
    if matrix.rows == 0 {
        return Err(Error::EmptyMatrix);
    }
    if matrix.dim < 2 {
        return Err(Error::DimensionTooSmall(matrix.dim));
    }
    if let Some(labels) = &matrix.labels {
        if labels.len() != matrix.rows {
            return Err(Error::LabelCountMismatch {
                labels: labels.len(),
                rows: matrix.rows,
            });
        }
    }
    for (index, row) in matrix.iter_rows().enumerate() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteRow { index });
        }
        let norm = libm::sqrt(row.iter().map(|&v| f64::from(v) * f64::from(v)).sum::<f64>());
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NonUnitRow { index, norm });
        }
    }
    Ok(())
}

/// How the weighting constant λ is resolved for each wild pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    /// λ equals the number of wild labels in the pool being scored.
    GroupSize,
    Fixed(f64),
}

impl LambdaMode {
    pub fn resolve(self, pool_size: usize) -> f64 {
        match self {
            LambdaMode::GroupSize => pool_size as f64,
            LambdaMode::Fixed(v) => v,
        }
    }
}

/// Assignment of selected wild labels to groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingMode {
    /// Selected index `i` (in representativeness order) goes to group `i mod B`.
    #[default]
    RoundRobin,
    /// Seeded random permutation of the selected set, then contiguous chunks.
    Random,
}

/// Hyperparameters of the scoring pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Temperature κ applied to cosine similarities.
    pub kappa: f64,
    /// Mixture prior τ of positives in the wild corpus.
    pub tau: f64,
    /// Perturbation scale σ for positive synthesis.
    pub sigma: f64,
    /// Number of wild labels kept after representativeness ranking (L).
    #[serde(rename = "L", alias = "top")]
    pub top: usize,
    /// Number of wild-label groups (B).
    #[serde(rename = "B", alias = "groups")]
    pub groups: usize,
    /// Neighbor count α of the representativeness score.
    pub alpha: usize,
    pub lambda_mode: LambdaMode,
    /// Floor applied to the corrected negative mass.
    pub mass_floor: f64,
    pub seed: u64,
    pub grouping: GroupingMode,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self {
            kappa: 0.01,
            tau: 0.5,
            sigma: 0.001,
            top: 12_000,
            groups: 100,
            alpha: 100,
            lambda_mode: LambdaMode::GroupSize,
            mass_floor: 1e-12,
            seed: 0,
            grouping: GroupingMode::RoundRobin,
        }
    }
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return bad(format!("tau must lie in [0, 1), got {}", self.tau));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be non-negative, got {}", self.sigma));
        }
        if self.groups == 0 || self.groups > self.top {
            return bad(format!("need 1 <= B <= L, got B = {}, L = {}", self.groups, self.top));
        }
        if self.alpha == 0 {
            return bad(String::from("alpha must be at least 1"));
        }
        if !(self.mass_floor > 0.0 && self.mass_floor.is_finite()) {
            return bad(format!("mass_floor must be positive, got {}", self.mass_floor));
        }
        if let LambdaMode::Fixed(v) = self.lambda_mode {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("fixed lambda must be positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Scoring function selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Mcm,
    #[serde(rename = "neglabel")]
    NegLabel,
    Debiased,
    #[serde(rename = "grouped")]
    GroupedDebiased,
    AsymptoticUnbiased,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mcm" => Ok(Method::Mcm),
            "neglabel" => Ok(Method::NegLabel),
            "debiased" => Ok(Method::Debiased),
            "grouped" => Ok(Method::GroupedDebiased),
            "asymptotic_unbiased" => Ok(Method::AsymptoticUnbiased),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// Per-input scores for one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub method: Method,
    pub scores: Vec<f64>,
    /// Inputs for which the corrected negative mass hit the floor at least once.
    pub clamp_count: usize,
    /// Total floor hits, counting each group separately.
    pub clamp_events: usize,
    pub config: ScoreConfig,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn orthonormal_rows_validate() {
        let m = EmbeddingMatrix::from_raw(2, 2, vec![1.0, 0.0, 0.0, 1.0], None).unwrap();
        assert_eq!(validate(&m), Ok(()));
    }

    #[test]
    fn non_unit_row_is_reported() {
        let m = EmbeddingMatrix::from_raw(1, 2, vec![2.0, 0.0], None).unwrap();
        assert_eq!(validate(&m), Err(Error::NonUnitRow { index: 0, norm: 2.0 }));
    }

    #[test]
    fn first_violating_row_wins() {
        let m = EmbeddingMatrix::from_raw(3, 2, vec![1.0, 0.0, 0.5, 0.0, 3.0, 0.0], None).unwrap();
        assert!(matches!(validate(&m), Err(Error::NonUnitRow { index: 1, .. })));
    }

    #[test]
    fn label_count_mismatch() {
        let m = EmbeddingMatrix::from_raw(2, 2, vec![1.0, 0.0, 0.0, 1.0], Some(vec!["a".into()])).unwrap();
        assert_eq!(validate(&m), Err(Error::LabelCountMismatch { labels: 1, rows: 2 }));
    }

    #[test]
    fn empty_and_degenerate_shapes() {
        let m = EmbeddingMatrix::from_raw(0, 4, vec![], None).unwrap();
        assert_eq!(validate(&m), Err(Error::EmptyMatrix));
        let m = EmbeddingMatrix::from_raw(1, 1, vec![1.0], None).unwrap();
        assert_eq!(validate(&m), Err(Error::DimensionTooSmall(1)));
        assert!(matches!(
            EmbeddingMatrix::from_raw(2, 2, vec![1.0; 3], None),
            Err(Error::RaggedData { len: 3, expected: 4 })
        ));
    }

    #[test]
    fn norm_tolerance_is_inclusive_of_f32_noise() {
        let m = EmbeddingMatrix::new(1, 2, vec![1.00005, 0.0], None);
        assert!(m.is_ok());
        let m = EmbeddingMatrix::new(1, 2, vec![1.001, 0.0], None);
        assert!(matches!(m, Err(Error::NonUnitRow { .. })));
    }

    #[test]
    fn select_rows_carries_labels() {
        let m = EmbeddingMatrix::new(
            3,
            2,
            vec![1.0, 0.0, 0.0, 1.0, -1.0, 0.0],
            Some(vec!["a".into(), "b".into(), "c".into()]),
        )
        .unwrap();
        let s = m.select_rows(&[2, 0]);
        assert_eq!(s.row(0), &[-1.0, 0.0]);
        assert_eq!(s.labels().unwrap(), &[String::from("c"), String::from("a")]);
    }

    #[test]
    fn config_defaults_and_validation() {
        let c = ScoreConfig::default();
        assert_eq!((c.kappa, c.tau, c.sigma), (0.01, 0.5, 0.001));
        assert_eq!((c.top, c.groups, c.alpha), (12_000, 100, 100));
        assert!(c.validate().is_ok());

        for bad in [
            ScoreConfig {
                kappa: 0.0,
                ..c.clone()
            },
            ScoreConfig { tau: 1.0, ..c.clone() },
            ScoreConfig {
                sigma: -1.0,
                ..c.clone()
            },
            ScoreConfig { groups: 0, ..c.clone() },
            ScoreConfig {
                groups: 20,
                top: 10,
                ..c.clone()
            },
            ScoreConfig { alpha: 0, ..c.clone() },
            ScoreConfig {
                mass_floor: 0.0,
                ..c.clone()
            },
            ScoreConfig {
                lambda_mode: LambdaMode::Fixed(0.0),
                ..c.clone()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidConfig(_))), "{bad:?}");
        }
        assert!(ScoreConfig { tau: 0.0, ..c }.validate().is_ok());
    }

    #[test]
    fn method_names() {
        assert_eq!("grouped".parse::<Method>(), Ok(Method::GroupedDebiased));
        assert_eq!("neglabel".parse::<Method>(), Ok(Method::NegLabel));
        assert!("energy".parse::<Method>().is_err());
    }
}
