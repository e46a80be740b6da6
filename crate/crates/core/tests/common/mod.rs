#![allow(dead_code)]

use negbias_core::oracle::DiscreteLabelSpace;
use negbias_core::rng::{standard_normal_vec, stream_rng};
use negbias_core::EmbeddingMatrix;
use rand::Rng;

pub fn unit_rows(seed: u64, rows: usize, dim: usize) -> EmbeddingMatrix {
    let mut rng = stream_rng(seed, 99);
    let data: Vec<Vec<f32>> = (0..rows)
        .map(|_| {
            let v = standard_normal_vec(&mut rng, dim);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| (x / n) as f32).collect()
        })
        .collect();
    EmbeddingMatrix::from_rows(&data, None).unwrap()
}

pub fn simplex(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, 98);
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

pub fn uniform(seed: u64, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 97);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Random realizable mixture over `labels` points in dimension 3, plus the
/// affinities of a random image against them and `k` random ID affinities.
pub fn random_space(
    seed: u64,
    labels: usize,
    tau: f64,
    kappa: f64,
    k: usize,
) -> (DiscreteLabelSpace, Vec<f64>, Vec<f64>) {
    let emb = unit_rows(seed, labels, 3);
    let space =
        DiscreteLabelSpace::from_components(emb, simplex(seed, labels), simplex(seed ^ 0x5555, labels), tau).unwrap();
    let image = unit_rows(seed.wrapping_add(1), 1, 3);
    let x_aff = space.affinities(image.row(0), kappa).unwrap();
    let id_aff = uniform(seed, k, -kappa, kappa);
    (space, x_aff, id_aff)
}
