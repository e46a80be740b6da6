//! Seeded experiment drivers shared by the CLI and the acceptance suite.

use negbias_core::metrics::auroc;
use negbias_core::oracle::{exact_neg_mean, exact_unbiased_score, expansion_score, DiscreteLabelSpace};
use negbias_core::positives::synthesize_bank;
use negbias_core::rng::{standard_normal_vec, stream_rng, StreamRng};
use negbias_core::scoring::{score_all, score_asymptotic_unbiased, ScoringContext};
use negbias_core::selection::select_and_partition;
use negbias_core::synthetic::SyntheticBenchmark;
use negbias_core::verify::{run_bias_experiment, BiasExperimentConfig, BiasExperimentReport};
use negbias_core::{EmbeddingMatrix, Method, ScoreConfig};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;

const EXPERIMENT_STREAM: u64 = 17;
const SPACE_DIM: usize = 3;

/// A label space together with one test image's affinities to it and the
/// image's ID affinities.
#[derive(Debug, Clone)]
pub struct LabelSpaceCase {
    pub space: DiscreteLabelSpace,
    pub x_aff: Vec<f64>,
    pub id_aff: Vec<f64>,
}

fn unit_rows(rng: &mut StreamRng, rows: usize) -> Result<EmbeddingMatrix> {
    let data: Vec<Vec<f32>> = (0..rows)
        .map(|_| {
            let v = standard_normal_vec(rng, SPACE_DIM);
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter().map(|x| (x / n) as f32).collect()
        })
        .collect();
    Ok(EmbeddingMatrix::from_rows(&data, None)?)
}

fn simplex(rng: &mut StreamRng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Random realizable mixture `Q = τP⁺ + (1−τ)P⁻` over `labels` unit vectors,
/// with a random image and `k` random ID affinities in `[−κ, κ]`.
pub fn random_case(rng: &mut StreamRng, labels: usize, tau: f64, kappa: f64, k: usize) -> Result<LabelSpaceCase> {
    let embeddings = unit_rows(rng, labels)?;
    let pplus = simplex(rng, labels);
    let pminus = simplex(rng, labels);
    let space = DiscreteLabelSpace::from_components(embeddings, pplus, pminus, tau)?;
    let image = unit_rows(rng, 1)?;
    let x_aff = space.affinities(image.row(0), kappa)?;
    let id_aff = (0..k).map(|_| rng.random_range(-kappa..=kappa)).collect();
    Ok(LabelSpaceCase { space, x_aff, id_aff })
}

pub fn seeded_case(seed: u64, labels: usize, tau: f64, kappa: f64, k: usize) -> Result<LabelSpaceCase> {
    random_case(&mut stream_rng(seed, EXPERIMENT_STREAM), labels, tau, kappa, k)
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentitySuite {
    pub spaces: usize,
    pub evaluations: usize,
    pub max_deviation: f64,
}

/// Compares enumeration against the binomial expansion on `spaces` random
/// spaces (1–6 labels, τ alternating 0.2 / 0.5), for every `r` in 1..=3.
pub fn identity_suite(seed: u64, spaces: usize) -> Result<IdentitySuite> {
    let mut rng = stream_rng(seed, EXPERIMENT_STREAM);
    let mut max_deviation: f64 = 0.0;
    let mut evaluations = 0;
    for s in 0..spaces {
        let labels = rng.random_range(1..=6);
        let tau = if s % 2 == 0 { 0.2 } else { 0.5 };
        let kappa = [0.01, 1.0, 5.0][s % 3];
        let k = rng.random_range(1..=4);
        let lambda = rng.random_range(0.1..10.0);
        let case = random_case(&mut rng, labels, tau, kappa, k)?;
        for r in 1..=3 {
            let a = exact_unbiased_score(&case.space, &case.x_aff, &case.id_aff, r, lambda)?;
            let b = expansion_score(&case.space, &case.x_aff, &case.id_aff, r, lambda)?;
            max_deviation = max_deviation.max((a - b).abs());
            evaluations += 1;
        }
    }
    Ok(IdentitySuite {
        spaces,
        evaluations,
        max_deviation,
    })
}

/// `|exact(r) − limit|` for `r = 1..=max_r`.
pub fn convergence_gaps(case: &LabelSpaceCase, lambda: f64, max_r: usize) -> Result<Vec<f64>> {
    let limit = score_asymptotic_unbiased(&case.id_aff, exact_neg_mean(&case.space, &case.x_aff)?, lambda)?;
    (1..=max_r)
        .map(|r| Ok((exact_unbiased_score(&case.space, &case.x_aff, &case.id_aff, r, lambda)? - limit).abs()))
        .collect()
}

/// JSON settings of the bias-rate experiment. The label space is drawn from
/// `space_seed` unless given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiasRunConfig {
    pub kappa: f64,
    pub tau: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    pub grid: Vec<(usize, usize)>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "four")]
    pub labels: usize,
    #[serde(default)]
    pub space_seed: u64,
    #[serde(default)]
    pub space: Option<ExplicitSpace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitSpace {
    pub embeddings: Vec<Vec<f32>>,
    pub q_weights: Vec<f64>,
    pub pplus_weights: Vec<f64>,
    pub image: Vec<f32>,
    pub id_affinities: Vec<f64>,
}

fn one() -> f64 {
    1.0
}

fn four() -> usize {
    4
}

pub fn run_bias(config: &BiasRunConfig) -> Result<BiasExperimentReport> {
    let case = match &config.space {
        Some(s) => {
            let space = DiscreteLabelSpace::new(
                EmbeddingMatrix::from_rows(&s.embeddings, None)?,
                s.q_weights.clone(),
                s.pplus_weights.clone(),
                config.tau,
            )?;
            let x_aff = space.affinities(&s.image, config.kappa)?;
            LabelSpaceCase {
                space,
                x_aff,
                id_aff: s.id_affinities.clone(),
            }
        }
        None => seeded_case(config.space_seed, config.labels, config.tau, config.kappa, 2)?,
    };
    let experiment = BiasExperimentConfig {
        kappa: config.kappa,
        lambda: config.lambda,
        grid: config.grid.clone(),
        trials: config.trials,
        seed: config.seed,
    };
    Ok(run_bias_experiment(
        &case.space,
        &case.x_aff,
        &case.id_aff,
        &experiment,
    )?)
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodResult {
    pub method: Method,
    pub auroc: f64,
    pub clamped_inputs: usize,
}

/// Runs selection, positive synthesis and scoring on a benchmark, returning
/// the AUROC of each method with ID images as the positive class.
pub fn evaluate_benchmark(
    bench: &SyntheticBenchmark,
    config: &ScoreConfig,
    methods: &[Method],
) -> Result<Vec<MethodResult>> {
    let selection = select_and_partition(&bench.wild_corpus, config)?;
    let bank = synthesize_bank(&bench.id_texts, config.sigma, config.seed)?;
    let context = |images: &EmbeddingMatrix| {
        ScoringContext::from_embeddings(
            images,
            &bench.id_texts,
            Some((&bench.wild_corpus, &selection.groups)),
            Some(&bank.vectors),
            config.clone(),
        )
    };
    let id_ctx = context(&bench.id_images)?;
    let ood_ctx = context(&bench.ood_images)?;
    methods
        .iter()
        .map(|&method| {
            let id = score_all(&id_ctx, method)?;
            let ood = score_all(&ood_ctx, method)?;
            Ok(MethodResult {
                method,
                auroc: auroc(&id.scores, &ood.scores)?,
                clamped_inputs: id.clamp_count + ood.clamp_count,
            })
        })
        .collect()
}
