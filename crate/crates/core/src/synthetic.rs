//! Seeded desk-scale benchmarks on the unit sphere.
//!
//! ID anchors double as the ID label embeddings. ID images cluster around
//! them, OOD images cluster around separate OOD anchors, and the wild corpus
//! mixes positives (around ID anchors) with negatives (around OOD anchors) at
//! a known rate. The ground-truth tags are for evaluation only.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{standard_normal_vec, stream_rng, StreamRng, STREAM_SYNTHETIC};
use crate::similarity::dot;
use crate::{EmbeddingMatrix, Error, Result};

const REJECTION_ATTEMPTS: usize = 10_000;

type Rows = Vec<Vec<f32>>;

/// Draws `count` rows `ℓ₂(center + spread·ε)`.
pub fn sample_cluster<R: Rng + ?Sized>(
    center: &[f32],
    spread: f64,
    count: usize,
    rng: &mut R,
) -> Result<EmbeddingMatrix> {
    let mut data = Vec::with_capacity(count * center.len());
    for _ in 0..count {
        data.extend(perturb_row(center, spread, rng));
    }
    EmbeddingMatrix::new(count, center.len(), data, None)
}

fn perturb_row<R: Rng + ?Sized>(center: &[f32], spread: f64, rng: &mut R) -> Vec<f32> {
    let eps = standard_normal_vec(rng, center.len());
    let v: Vec<f64> = center
        .iter()
        .zip(&eps)
        .map(|(&c, &e)| f64::from(c) + spread * e)
        .collect();
    normalize(&v)
}

fn normalize(v: &[f64]) -> Vec<f32> {
    let n = libm::sqrt(v.iter().map(|x| x * x).sum());
    v.iter().map(|x| (x / n) as f32).collect()
}

fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f32> {
    normalize(&standard_normal_vec(rng, dim))
}

/// Per-cluster perturbation scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spreads {
    pub id_image: f64,
    pub ood_image: f64,
    pub wild_positive: f64,
    pub wild_negative: f64,
}

impl Default for Spreads {
    fn default() -> Self {
        Self {
            id_image: 0.2,
            ood_image: 0.2,
            wild_positive: 0.05,
            wild_negative: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub dim: usize,
    /// Number of ID labels (K).
    pub k: usize,
    /// Wild corpus size (T).
    pub t: usize,
    /// Fraction of wild rows drawn around ID anchors.
    pub tau: f64,
    pub ood_anchors: usize,
    pub n_id_images: usize,
    pub n_ood_images: usize,
    pub spreads: Spreads,
    /// Largest allowed cosine between an OOD anchor and any ID anchor.
    pub separation: f64,
    pub seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            k: 10,
            t: 2000,
            tau: 0.5,
            ood_anchors: 10,
            n_id_images: 500,
            n_ood_images: 500,
            spreads: Spreads::default(),
            separation: 0.0,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WildTag {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    pub id_texts: EmbeddingMatrix,
    pub id_images: EmbeddingMatrix,
    pub ood_images: EmbeddingMatrix,
    pub wild_corpus: EmbeddingMatrix,
    pub wild_truth: Vec<WildTag>,
    pub true_tau: f64,
    pub ood_anchors: EmbeddingMatrix,
}

/// Fresh Gaussian draw projected onto the orthogonal complement of `basis`.
fn orthogonal_draw(dim: usize, basis: &[Vec<f64>], rng: &mut StreamRng) -> Vec<f64> {
    loop {
        let mut v = standard_normal_vec(rng, dim);
        for b in basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
        let n = libm::sqrt(v.iter().map(|x| x * x).sum());
        if n > 1e-6 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// ID anchors are independent uniform directions. Each OOD anchor is found by
/// rejection against `separation`; if that keeps failing and the ID span
/// leaves room, it is drawn from the orthogonal complement of the ID anchors.
fn place_anchors(cfg: &BenchmarkConfig, rng: &mut StreamRng) -> Result<(Rows, Rows)> {
    let id: Vec<Vec<f32>> = (0..cfg.k).map(|_| random_unit(cfg.dim, rng)).collect();
    let mut id_basis: Option<Vec<Vec<f64>>> = None;
    let mut ood = Vec::with_capacity(cfg.ood_anchors);
    for _ in 0..cfg.ood_anchors {
        let found = (0..REJECTION_ATTEMPTS)
            .map(|_| random_unit(cfg.dim, rng))
            .find(|c| id.iter().all(|a| dot(a, c) <= cfg.separation));
        let anchor = match found {
            Some(c) => c,
            None if cfg.separation >= 0.0 && cfg.k < cfg.dim => {
                let basis = id_basis.get_or_insert_with(|| {
                    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cfg.k);
                    for a in &id {
                        let raw: Vec<f64> = a.iter().map(|&x| f64::from(x)).collect();
                        let mut v = raw.clone();
                        for b in &basis {
                            let p: f64 = raw.iter().zip(b).map(|(x, y)| x * y).sum();
                            for (x, y) in v.iter_mut().zip(b) {
                                *x -= p * y;
                            }
                        }
                        let n = libm::sqrt(v.iter().map(|x| x * x).sum());
                        if n > 1e-9 {
                            basis.push(v.iter().map(|x| x / n).collect());
                        }
                    }
                    basis
                });
                normalize(&orthogonal_draw(cfg.dim, basis, rng))
            }
            None => {
                return Err(Error::InfeasibleSeparation {
                    dim: cfg.dim,
                    separation: cfg.separation,
                })
            }
        };
        ood.push(anchor);
    }
    Ok((id, ood))
}

fn check(cfg: &BenchmarkConfig) -> Result<()> {
    let bad = |m: String| Err(Error::InvalidConfig(m));
    if !(cfg.tau > 0.0 && cfg.tau < 1.0) {
        return bad(format!("tau must lie in (0, 1), got {}", cfg.tau));
    }
    if cfg.k < 2 {
        return bad(format!("need K >= 2, got {}", cfg.k));
    }
    if cfg.t < 100 {
        return bad(format!("need T >= 100, got {}", cfg.t));
    }
    if cfg.dim < 2 || cfg.ood_anchors == 0 {
        return bad(String::from("need dim >= 2 and at least one OOD anchor"));
    }
    if cfg.n_id_images == 0 || cfg.n_ood_images == 0 {
        return bad(String::from("image counts must be positive"));
    }
    let s = cfg.spreads;
    if [s.id_image, s.ood_image, s.wild_positive, s.wild_negative]
        .iter()
        .any(|v| !(*v > 0.0 && v.is_finite()))
    {
        return bad(String::from("spreads must be positive"));
    }
    Ok(())
}

fn stack(rows: &[Vec<f32>], prefix: &str) -> Result<EmbeddingMatrix> {
    let labels = (0..rows.len()).map(|i| format!("{prefix}_{i}")).collect();
    EmbeddingMatrix::from_rows(rows, Some(labels))
}

fn cluster_rows(anchors: &[Vec<f32>], spread: f64, count: usize, rng: &mut StreamRng) -> Vec<Vec<f32>> {
    (0..count)
        .map(|i| perturb_row(&anchors[i % anchors.len()], spread, rng))
        .collect()
}

pub fn build_benchmark(cfg: &BenchmarkConfig) -> Result<SyntheticBenchmark> {
    check(cfg)?;
    let mut rng = stream_rng(cfg.seed, STREAM_SYNTHETIC);
    let (id_anchors, ood_anchors) = place_anchors(cfg, &mut rng)?;
    let s = cfg.spreads;

    let id_images = cluster_rows(&id_anchors, s.id_image, cfg.n_id_images, &mut rng);
    let ood_images = cluster_rows(&ood_anchors, s.ood_image, cfg.n_ood_images, &mut rng);

    let n_pos = libm::round(cfg.tau * cfg.t as f64) as usize;
    let mut wild: Vec<(Vec<f32>, WildTag)> = cluster_rows(&id_anchors, s.wild_positive, n_pos, &mut rng)
        .into_iter()
        .map(|r| (r, WildTag::Positive))
        .chain(
            cluster_rows(&ood_anchors, s.wild_negative, cfg.t - n_pos, &mut rng)
                .into_iter()
                .map(|r| (r, WildTag::Negative)),
        )
        .collect();
    wild.shuffle(&mut rng);
    let (wild_rows, wild_truth): (Vec<_>, Vec<_>) = wild.into_iter().unzip();

    Ok(SyntheticBenchmark {
        id_texts: stack(&id_anchors, "id")?,
        id_images: stack(&id_images, "id_image")?,
        ood_images: stack(&ood_images, "ood_image")?,
        wild_corpus: stack(&wild_rows, "wild")?,
        wild_truth,
        true_tau: n_pos as f64 / cfg.t as f64,
        ood_anchors: stack(&ood_anchors, "ood_anchor")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_cos(m: &EmbeddingMatrix, c: &[f32]) -> f64 {
        m.iter_rows().map(|r| dot(r, c)).sum::<f64>() / m.rows() as f64
    }

    #[test]
    fn tiny_spread_collapses_to_center() {
        let c = [0.6f32, 0.0, 0.8];
        let mut rng = stream_rng(1, STREAM_SYNTHETIC);
        let m = sample_cluster(&c, 1e-9, 5, &mut rng).unwrap();
        for r in m.iter_rows() {
            assert!(r.iter().zip(&c).all(|(a, b)| (a - b).abs() < 1e-6));
        }
    }

    #[test]
    fn cosine_shrinks_with_spread() {
        let mut c = alloc::vec![0.0f32; 32];
        c[3] = 1.0;
        let cos: Vec<f64> = [0.01, 0.1, 1.0]
            .iter()
            .map(|&s| mean_cos(&sample_cluster(&c, s, 400, &mut stream_rng(2, 0)).unwrap(), &c))
            .collect();
        assert!(cos[0] > cos[1] && cos[1] > cos[2], "{cos:?}");
    }

    #[test]
    fn cluster_is_reproducible() {
        let c = [1.0f32, 0.0];
        let a = sample_cluster(&c, 0.3, 10, &mut stream_rng(3, 0)).unwrap();
        let b = sample_cluster(&c, 0.3, 10, &mut stream_rng(3, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mixture_count_and_validity() {
        let cfg = BenchmarkConfig {
            dim: 16,
            k: 3,
            t: 1000,
            ood_anchors: 3,
            n_id_images: 20,
            n_ood_images: 20,
            ..BenchmarkConfig::default()
        };
        let b = build_benchmark(&cfg).unwrap();
        let pos = b.wild_truth.iter().filter(|t| **t == WildTag::Positive).count();
        assert!((pos as i64 - 500).abs() <= 1);
        assert!((b.true_tau - 0.5).abs() <= 1.0 / 1000.0);
        for m in [&b.id_texts, &b.id_images, &b.ood_images, &b.wild_corpus] {
            assert!(crate::validate(m).is_ok());
            assert_eq!(m.dim(), 16);
        }
        assert_eq!(b.wild_corpus.rows(), 1000);
        assert_eq!(build_benchmark(&cfg).unwrap(), b);
    }

    #[test]
    fn ood_anchors_respect_separation() {
        // K = 40 makes rejection at separation 0 hopeless (2^-40), forcing
        // the orthogonal-complement fallback.
        for (k, separation) in [(4, 0.0), (40, 0.0), (10, 0.2)] {
            let cfg = BenchmarkConfig {
                dim: 64,
                k,
                t: 100,
                ood_anchors: 4,
                separation,
                n_id_images: 4,
                n_ood_images: 4,
                ..BenchmarkConfig::default()
            };
            let b = build_benchmark(&cfg).unwrap();
            for a in b.id_texts.iter_rows() {
                for o in b.ood_anchors.iter_rows() {
                    assert!(dot(a, o) <= separation + 1e-6);
                }
            }
        }
    }

    #[test]
    fn infeasible_separation() {
        let cfg = BenchmarkConfig {
            dim: 2,
            k: 2,
            t: 100,
            ood_anchors: 2,
            separation: -0.99,
            n_id_images: 2,
            n_ood_images: 2,
            ..BenchmarkConfig::default()
        };
        assert!(matches!(
            build_benchmark(&cfg),
            Err(Error::InfeasibleSeparation { dim: 2, .. })
        ));
    }

    #[test]
    fn rejects_bad_parameters() {
        for cfg in [
            BenchmarkConfig {
                tau: 0.0,
                ..BenchmarkConfig::default()
            },
            BenchmarkConfig {
                k: 1,
                ..BenchmarkConfig::default()
            },
            BenchmarkConfig {
                t: 99,
                ..BenchmarkConfig::default()
            },
        ] {
            assert!(matches!(build_benchmark(&cfg), Err(Error::InvalidConfig(_))));
        }
    }
}
