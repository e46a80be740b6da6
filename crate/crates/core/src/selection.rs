//! Representativeness ranking of the wild corpus, top-`L` selection and
//! grouping.
//!
//! The representativeness of row `i` is
//! `-ln Σ_{j ∈ kNN(i, α)} ‖y_i − y_j‖²`: rows in dense regions score high.
//! Neighbors are found by exact Euclidean distance on the same unit-norm
//! embeddings used for scoring. Ties, both inside a neighbor set and in the
//! global ranking, break by ascending row index.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::rng::{stream_rng, STREAM_GROUPING};
use crate::{EmbeddingMatrix, Error, GroupingMode, Result, ScoreConfig};

/// Squared-distance sums below this are clamped before taking the log.
pub const MIN_NEIGHBOR_MASS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Corpus row indices sorted by decreasing representativeness.
    pub order: Vec<usize>,
    /// Representativeness of each corpus row, indexed by original row.
    pub rep_scores: Vec<f64>,
    /// First `L` entries of `order`.
    pub selected: Vec<usize>,
    /// `B` disjoint groups of corpus indices, each of size `floor(L / B)`.
    pub groups: Vec<Vec<usize>>,
}

impl SelectionResult {
    /// Group members concatenated group by group.
    pub fn grouped_indices(&self) -> Vec<usize> {
        self.groups.iter().flatten().copied().collect()
    }
}

pub fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = f64::from(x) - f64::from(y);
            d * d
        })
        .sum()
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

fn check_alpha(corpus: &EmbeddingMatrix, alpha: usize) -> Result<()> {
    if corpus.rows() < 2 {
        return Err(Error::TooFewRows {
            rows: corpus.rows(),
            needed: 2,
        });
    }
    if alpha == 0 || alpha > corpus.rows() - 1 {
        return Err(Error::AlphaTooLarge {
            alpha,
            max: corpus.rows() - 1,
        });
    }
    Ok(())
}

/// The `alpha` nearest rows to row `i` (self excluded) with their squared
/// distances, nearest first.
pub fn nearest_neighbors(corpus: &EmbeddingMatrix, i: usize, alpha: usize) -> Result<Vec<(f64, usize)>> {
    check_alpha(corpus, alpha)?;
    let mut buf = Vec::with_capacity(corpus.rows());
    knn_into(corpus, i, alpha, &mut buf);
    Ok(buf)
}

/// Leaves the `alpha` nearest neighbors of row `i` in `buf`, nearest first.
fn knn_into(corpus: &EmbeddingMatrix, i: usize, alpha: usize, buf: &mut Vec<(f64, usize)>) {
    buf.clear();
    let yi = corpus.row(i);
    buf.extend(
        corpus
            .iter_rows()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, yj)| (squared_distance(yi, yj), j)),
    );
    if alpha < buf.len() {
        buf.select_nth_unstable_by(alpha - 1, by_distance_then_index);
        buf.truncate(alpha);
    }
    buf.sort_unstable_by(by_distance_then_index);
}

pub fn representativeness(corpus: &EmbeddingMatrix, alpha: usize) -> Result<Vec<f64>> {
    check_alpha(corpus, alpha)?;
    let mut buf = Vec::with_capacity(corpus.rows());
    Ok((0..corpus.rows())
        .map(|i| {
            knn_into(corpus, i, alpha, &mut buf);
            let mass: f64 = buf.iter().map(|(d, _)| d).sum();
            -libm::log(mass.max(MIN_NEIGHBOR_MASS))
        })
        .collect())
}

/// Ranks the corpus, keeps the top `config.top` rows and splits them into
/// `config.groups` equal groups; the `L mod B` remainder is discarded.
pub fn select_and_partition(corpus: &EmbeddingMatrix, config: &ScoreConfig) -> Result<SelectionResult> {
    config.validate()?;
    if config.top > corpus.rows() {
        return Err(Error::LNotAvailable {
            top: config.top,
            rows: corpus.rows(),
        });
    }
    let rep_scores = representativeness(corpus, config.alpha)?;
    let mut order: Vec<usize> = (0..corpus.rows()).collect();
    order.sort_by(|&a, &b| rep_scores[b].total_cmp(&rep_scores[a]).then(a.cmp(&b)));
    let selected = order[..config.top].to_vec();
    let groups = partition(&selected, config.groups, config.grouping, config.seed);
    Ok(SelectionResult {
        order,
        rep_scores,
        selected,
        groups,
    })
}

/// Splits `selected` into `b` groups of `selected.len() / b` members.
pub fn partition(selected: &[usize], b: usize, mode: GroupingMode, seed: u64) -> Vec<Vec<usize>> {
    if b == 0 {
        return Vec::new();
    }
    let size = selected.len() / b;
    match mode {
        GroupingMode::RoundRobin => (0..b)
            .map(|g| (0..size).map(|k| selected[k * b + g]).collect())
            .collect(),
        GroupingMode::Random => {
            let mut shuffled = selected.to_vec();
            shuffled.shuffle(&mut stream_rng(seed, STREAM_GROUPING));
            shuffled
                .chunks_exact(size.max(1))
                .take(b)
                .map(|c| c[..size].to_vec())
                .collect()
        }
    }
}
