//! OOD scoring functions.
//!
//! All scores are "ID confidences" in `(0, 1]`: larger means more
//! in-distribution, and [`detect`] thresholds them inclusively.
//!
//! * [`score_mcm`]: maximum softmax over the ID affinities.
//! * [`score_neglabel`]: per-group ratio of ID mass to ID-plus-wild mass,
//!   averaged over groups.
//! * [`score_debiased`] / [`score_grouped_debiased`]: the wild mass is
//!   averaged and corrected by `τ` times the mean synthesized-positive mass,
//!
//!   ```text
//!   A = (1 − τ) / λ · Σ_i e^{h(x, y_i)}
//!   W = mean_j e^{h(x, ỹ_j)} − τ · mean_i e^{g(x, y_i)}
//!   S = A / (A + max(W, floor))
//!   ```
//!
//! * [`score_asymptotic_unbiased`]: the large-sample limit, given the exact
//!   negative-label mean.
//!
//! Exponential sums subtract the largest affinity first, so `κ` well above 1
//! is safe.

use alloc::format;
use alloc::vec::Vec;
use core::ops::Range;

use crate::similarity::{affinity_matrix, AffinityMatrix};
use crate::{EmbeddingMatrix, Error, Method, Result, ScoreConfig, ScoreReport};

/// Slack allowed on `|affinity| <= κ` for rounding in exported embeddings.
pub const AFFINITY_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Id,
    Ood,
}

/// ID iff `score >= beta`.
pub fn detect(score: f64, beta: f64) -> Decision {
    if score >= beta {
        Decision::Id
    } else {
        Decision::Ood
    }
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn sum_exp_shifted(values: &[f64], shift: f64) -> f64 {
    values.iter().map(|&v| libm::exp(v - shift)).sum()
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")))
    }
}

/// `Σe^{id} / (Σe^{id} + (λ/r)·Σe^{neg})` with `r = neg_aff.len()`.
pub fn phi(id_aff: &[f64], neg_aff: &[f64], lambda: f64) -> Result<f64> {
    if id_aff.is_empty() || neg_aff.is_empty() {
        return Err(Error::EmptyAffinities);
    }
    check_lambda(lambda)?;
    let shift = max_of(id_aff).max(max_of(neg_aff));
    let id_mass = sum_exp_shifted(id_aff, shift);
    let neg_mass = sum_exp_shifted(neg_aff, shift);
    Ok(id_mass / (id_mass + lambda / neg_aff.len() as f64 * neg_mass))
}

pub fn score_mcm(id_aff: &[f64]) -> Result<f64> {
    if id_aff.is_empty() {
        return Err(Error::EmptyAffinities);
    }
    let shift = max_of(id_aff);
    Ok(1.0 / sum_exp_shifted(id_aff, shift))
}

/// NegLabel score over explicit wild groups.
pub fn neglabel_score<'a, I>(id_aff: &[f64], groups: I) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    if id_aff.is_empty() {
        return Err(Error::EmptyAffinities);
    }
    let id_max = max_of(id_aff);
    let mut total = 0.0;
    let mut count = 0usize;
    for group in groups {
        if group.is_empty() {
            return Err(Error::EmptyGroups);
        }
        let shift = id_max.max(max_of(group));
        let id_mass = sum_exp_shifted(id_aff, shift);
        total += id_mass / (id_mass + sum_exp_shifted(group, shift));
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyGroups);
    }
    Ok(total / count as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DebiasedScore {
    pub score: f64,
    /// The corrected negative mass was at or below the floor.
    pub clamped: bool,
}

/// Debiased ratio from (possibly commonly rescaled) exponential masses.
///
/// `id_mass` is `Σe^{id}`, `wild_mean` the mean wild exponential and
/// `pos_mean` the mean positive exponential; `floor` must be in the same
/// units as the masses.
pub fn debiased_from_masses(
    id_mass: f64,
    wild_mean: f64,
    pos_mean: f64,
    tau: f64,
    lambda: f64,
    floor: f64,
) -> DebiasedScore {
    let a = (1.0 - tau) / lambda * id_mass;
    let w = wild_mean - tau * pos_mean;
    let (w, clamped) = if w <= floor { (floor, true) } else { (w, false) };
    DebiasedScore {
        score: a / (a + w),
        clamped,
    }
}

/// Debiased score of one input against a single wild pool.
pub fn debiased_score(
    id_aff: &[f64],
    wild_aff: &[f64],
    pos_aff: &[f64],
    tau: f64,
    lambda: f64,
    mass_floor: f64,
) -> Result<DebiasedScore> {
    if id_aff.is_empty() || pos_aff.is_empty() {
        return Err(Error::EmptyAffinities);
    }
    if wild_aff.is_empty() {
        return Err(Error::EmptyGroups);
    }
    check_lambda(lambda)?;
    let shift = max_of(id_aff).max(max_of(wild_aff)).max(max_of(pos_aff));
    let id_mass = sum_exp_shifted(id_aff, shift);
    let wild_mean = sum_exp_shifted(wild_aff, shift) / wild_aff.len() as f64;
    let pos_mean = sum_exp_shifted(pos_aff, shift) / pos_aff.len() as f64;
    let floor = libm::exp(libm::log(mass_floor) - shift);
    Ok(debiased_from_masses(id_mass, wild_mean, pos_mean, tau, lambda, floor))
}

/// Large-sample limit `Σe^{id} / (Σe^{id} + λ·E⁻[e^h])`.
pub fn score_asymptotic_unbiased(id_aff: &[f64], exact_neg_mean: f64, lambda: f64) -> Result<f64> {
    if id_aff.is_empty() {
        return Err(Error::EmptyAffinities);
    }
    if exact_neg_mean.is_nan() || exact_neg_mean <= 0.0 {
        return Err(Error::NonPositiveMean(exact_neg_mean));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidConfig(format!(
            "lambda must be non-negative, got {lambda}"
        )));
    }
    let id_mass: f64 = id_aff.iter().map(|&v| libm::exp(v)).sum();
    Ok(id_mass / (id_mass + lambda * exact_neg_mean))
}

/// Precomputed affinities of a batch of test inputs.
///
/// Wild columns are stored group by group; `groups` are contiguous column
/// ranges covering all of them.
#[derive(Debug, Clone)]
pub struct ScoringContext {
    id: AffinityMatrix,
    wild: AffinityMatrix,
    groups: Vec<Range<usize>>,
    positives: AffinityMatrix,
    config: ScoreConfig,
}

/// One input's affinity rows.
#[derive(Debug, Clone, Copy)]
pub struct InputAffinities<'a> {
    pub id: &'a [f64],
    pub wild: &'a [f64],
    pub positives: &'a [f64],
}

impl ScoringContext {
    pub fn new(
        id: AffinityMatrix,
        wild: AffinityMatrix,
        groups: Vec<Range<usize>>,
        positives: AffinityMatrix,
        config: ScoreConfig,
    ) -> Result<Self> {
        config.validate()?;
        let n = id.rows();
        for m in [&wild, &positives] {
            if m.rows() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: m.rows(),
                });
            }
        }
        if id.cols() == 0 {
            return Err(Error::EmptyAffinities);
        }
        let mut next = 0;
        for g in &groups {
            if g.start != next || g.end <= g.start {
                return Err(Error::InvalidConfig(format!(
                    "group ranges must tile the wild columns, found {g:?} at column {next}"
                )));
            }
            next = g.end;
        }
        if next != wild.cols() {
            return Err(Error::InvalidConfig(format!(
                "groups cover {next} of {} wild columns",
                wild.cols()
            )));
        }
        let limit = config.kappa + AFFINITY_SLACK;
        for m in [&id, &wild, &positives] {
            if let Some(k) = m.data().iter().position(|v| v.is_nan() || v.abs() > limit) {
                return Err(Error::AffinityOutOfRange {
                    row: k / m.cols(),
                    col: k % m.cols(),
                    value: m.data()[k],
                    kappa: config.kappa,
                });
            }
        }
        Ok(Self {
            id,
            wild,
            groups,
            positives,
            config,
        })
    }

    /// Computes all affinities from embeddings.
    ///
    /// `groups` index rows of `wild`; `positives` may be omitted for methods
    /// that do not use them.
    pub fn from_embeddings(
        images: &EmbeddingMatrix,
        id_texts: &EmbeddingMatrix,
        wild: Option<(&EmbeddingMatrix, &[Vec<usize>])>,
        positives: Option<&EmbeddingMatrix>,
        config: ScoreConfig,
    ) -> Result<Self> {
        let kappa = config.kappa;
        let id = affinity_matrix(images, id_texts, kappa)?;
        let (wild_aff, ranges) = match wild {
            Some((corpus, groups)) => {
                let mut order = Vec::new();
                let mut ranges = Vec::with_capacity(groups.len());
                for g in groups {
                    if let Some(&bad) = g.iter().find(|&&i| i >= corpus.rows()) {
                        return Err(Error::InvalidConfig(format!(
                            "group member {bad} is out of range for {} wild rows",
                            corpus.rows()
                        )));
                    }
                    ranges.push(order.len()..order.len() + g.len());
                    order.extend_from_slice(g);
                }
                (affinity_matrix(images, &corpus.select_rows(&order), kappa)?, ranges)
            }
            None => (AffinityMatrix::from_raw(images.rows(), 0, Vec::new())?, Vec::new()),
        };
        let pos_aff = match positives {
            Some(p) => affinity_matrix(images, p, kappa)?,
            None => AffinityMatrix::from_raw(images.rows(), 0, Vec::new())?,
        };
        Self::new(id, wild_aff, ranges, pos_aff, config)
    }

    pub fn len(&self) -> usize {
        self.id.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.id.rows() == 0
    }

    pub fn config(&self) -> &ScoreConfig {
        &self.config
    }

    pub fn groups(&self) -> &[Range<usize>] {
        &self.groups
    }

    pub fn input(&self, i: usize) -> InputAffinities<'_> {
        InputAffinities {
            id: self.id.row(i),
            wild: self.wild.row(i),
            positives: self.positives.row(i),
        }
    }
}

pub fn score_neglabel(ctx: &ScoringContext, i: usize) -> Result<f64> {
    let x = ctx.input(i);
    neglabel_score(x.id, ctx.groups.iter().map(|g| &x.wild[g.clone()]))
}

/// Debiased score with every wild column in one pool.
pub fn score_debiased(ctx: &ScoringContext, i: usize) -> Result<DebiasedScore> {
    let x = ctx.input(i);
    let c = &ctx.config;
    let lambda = c.lambda_mode.resolve(x.wild.len());
    debiased_score(x.id, x.wild, x.positives, c.tau, lambda, c.mass_floor)
}

/// Mean of per-group debiased scores and the number of groups that clamped.
pub fn score_grouped_debiased(ctx: &ScoringContext, i: usize) -> Result<(f64, usize)> {
    if ctx.groups.is_empty() {
        return Err(Error::EmptyGroups);
    }
    let x = ctx.input(i);
    let c = &ctx.config;
    let mut total = 0.0;
    let mut clamps = 0;
    for g in &ctx.groups {
        let lambda = c.lambda_mode.resolve(g.len());
        let s = debiased_score(x.id, &x.wild[g.clone()], x.positives, c.tau, lambda, c.mass_floor)?;
        total += s.score;
        clamps += usize::from(s.clamped);
    }
    Ok((total / ctx.groups.len() as f64, clamps))
}

/// Scores every input with `method`.
pub fn score_all(ctx: &ScoringContext, method: Method) -> Result<ScoreReport> {
    let mut scores = Vec::with_capacity(ctx.len());
    let mut clamp_count = 0;
    let mut clamp_events = 0;
    for i in 0..ctx.len() {
        let (s, clamps) = match method {
            Method::Mcm => (score_mcm(ctx.input(i).id)?, 0),
            Method::NegLabel => (score_neglabel(ctx, i)?, 0),
            Method::Debiased => {
                let d = score_debiased(ctx, i)?;
                (d.score, usize::from(d.clamped))
            }
            Method::GroupedDebiased => score_grouped_debiased(ctx, i)?,
            Method::AsymptoticUnbiased => return Err(Error::UnsupportedMethod(method)),
        };
        scores.push(s);
        clamp_count += usize::from(clamps > 0);
        clamp_events += clamps;
    }
    Ok(ScoreReport {
        method,
        scores,
        clamp_count,
        clamp_events,
        config: ctx.config.clone(),
    })
}

/// Asymptotic scores given each input's exact negative-label mean.
pub fn score_all_asymptotic(ctx: &ScoringContext, exact_neg_means: &[f64]) -> Result<ScoreReport> {
    if exact_neg_means.len() != ctx.len() {
        return Err(Error::DimensionMismatch {
            left: ctx.len(),
            right: exact_neg_means.len(),
        });
    }
    let lambda = ctx.config.lambda_mode.resolve(ctx.wild.cols());
    let scores = exact_neg_means
        .iter()
        .enumerate()
        .map(|(i, &mean)| score_asymptotic_unbiased(ctx.input(i).id, mean, lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreReport {
        method: Method::AsymptoticUnbiased,
        scores,
        clamp_count: 0,
        clamp_events: 0,
        config: ctx.config.clone(),
    })
}

#[cfg(test)]
#[allow(clippy::single_range_in_vec_init)]
mod tests {
    use super::*;
    use crate::LambdaMode;
    use alloc::vec;

    fn e(x: f64) -> f64 {
        libm::exp(x)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&[0.0], &[0.0], 1.0).unwrap(), 0.5);
        assert_eq!(phi(&[0.0, 0.0], &[0.0, 0.0], 2.0).unwrap(), 0.5);
        let want = e(0.01) / (e(0.01) + e(-0.01));
        assert!(close(phi(&[0.01], &[-0.01], 1.0).unwrap(), want, 1e-15));
        assert!(close(want, 0.505, 1e-4));
        assert_eq!(phi(&[], &[0.0], 1.0), Err(Error::EmptyAffinities));
        assert_eq!(phi(&[0.0], &[], 1.0), Err(Error::EmptyAffinities));
    }

    #[test]
    fn mcm_examples() {
        assert_eq!(score_mcm(&[0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(score_mcm(&[0.3]).unwrap(), 1.0);
        assert_eq!(score_mcm(&[-7.0]).unwrap(), 1.0);
        let want = e(1.0) / (e(1.0) + 1.0);
        assert!(close(score_mcm(&[1.0, 0.0]).unwrap(), want, 1e-15));
        assert!(close(want, 0.731, 1e-3));
        assert_eq!(score_mcm(&[]), Err(Error::EmptyAffinities));
    }

    #[test]
    fn neglabel_examples() {
        let zero: &[f64] = &[0.0];
        assert_eq!(neglabel_score(&[0.0], [zero]).unwrap(), 0.5);
        let g: &[f64] = &[0.01, -0.005];
        let one = neglabel_score(&[0.002, 0.0], [g]).unwrap();
        let two = neglabel_score(&[0.002, 0.0], [g, g]).unwrap();
        assert!(close(one, two, 1e-15));
        let none: [&[f64]; 0] = [];
        assert_eq!(neglabel_score(&[0.0], none), Err(Error::EmptyGroups));
    }

    #[test]
    fn neglabel_matches_scalar_loop() {
        let id = [0.004, -0.002, 0.009];
        let wild = [0.001, 0.0, -0.003, 0.007, 0.002, -0.008, 0.005, 0.006, -0.001];
        let groups: Vec<&[f64]> = wild.chunks(3).collect();
        let got = neglabel_score(&id, groups.iter().copied()).unwrap();
        let sid: f64 = id.iter().map(|&v| e(v)).sum();
        let mut want = 0.0;
        for g in &groups {
            let sg: f64 = g.iter().map(|&v| e(v)).sum();
            want += sid / (sid + sg);
        }
        assert!(close(got, want / 3.0, 1e-14));
    }

    #[test]
    fn debiased_hand_example() {
        // K = m = λ = 1, τ = 0.5, all affinities 0: A = 0.5, W = 1 − 0.5.
        let s = debiased_score(&[0.0], &[0.0], &[0.0], 0.5, 1.0, 1e-12).unwrap();
        assert_eq!(
            s,
            DebiasedScore {
                score: 0.5,
                clamped: false
            }
        );
    }

    #[test]
    fn debiased_tau_zero_drops_the_correction() {
        let id = [0.003, -0.004];
        let wild = [0.002, 0.009, -0.001];
        let pos = [0.008, 0.01];
        let lambda = 3.0;
        let got = debiased_score(&id, &wild, &pos, 0.0, lambda, 1e-12).unwrap();
        let a: f64 = id.iter().map(|&v| e(v)).sum::<f64>() / lambda;
        let w: f64 = wild.iter().map(|&v| e(v)).sum::<f64>() / 3.0;
        assert!(close(got.score, a / (a + w), 1e-12));
        assert!(!got.clamped);
    }

    #[test]
    fn debiased_clamps_negative_mass() {
        // Positives much closer than wild labels: W = e^{-1} − 0.9·e^{1} < 0.
        let s = debiased_score(&[0.0], &[-1.0], &[1.0], 0.9, 1.0, 1e-12).unwrap();
        assert!(s.clamped);
        let a = 0.1;
        assert!(close(s.score, a / (a + 1e-12), 1e-12));
        assert!(s.score > 0.0 && s.score <= 1.0);
    }

    #[test]
    fn debiased_is_stable_for_large_kappa() {
        let id = [95.0, 80.0];
        let wild = [90.0, -100.0];
        let pos = [85.0, 70.0];
        let s = debiased_score(&id, &wild, &pos, 0.5, 2.0, 1e-12).unwrap();
        assert!(s.score.is_finite() && s.score > 0.0 && s.score <= 1.0);
        assert!(!s.clamped);
        let shifted = debiased_score(&[-5.0, -20.0], &[-10.0, -200.0], &[-15.0, -30.0], 0.5, 2.0, 1e-12).unwrap();
        assert!(close(s.score, shifted.score, 1e-12));
    }

    #[test]
    fn asymptotic_examples() {
        assert_eq!(score_asymptotic_unbiased(&[0.0], 1.0, 1.0).unwrap(), 0.5);
        assert!(score_asymptotic_unbiased(&[0.0], 1.0, 1e-300).unwrap() > 1.0 - 1e-12);
        let mean = (e(0.01) + e(-0.01)) / 2.0;
        let got = score_asymptotic_unbiased(&[0.0, 0.005], mean, 1.0).unwrap();
        let sid = 1.0 + e(0.005);
        assert!(close(got, sid / (sid + mean), 1e-15));
        assert_eq!(
            score_asymptotic_unbiased(&[0.0], 0.0, 1.0),
            Err(Error::NonPositiveMean(0.0))
        );
    }

    #[test]
    fn detect_is_inclusive() {
        assert_eq!(detect(0.9, 0.5), Decision::Id);
        assert_eq!(detect(0.5, 0.5), Decision::Id);
        assert_eq!(detect(0.4, 0.5), Decision::Ood);
    }

    fn toy_context(groups: Vec<Range<usize>>, wild: Vec<f64>, wild_cols: usize) -> ScoringContext {
        let cfg = ScoreConfig {
            top: wild_cols.max(1),
            groups: groups.len().max(1),
            ..ScoreConfig::default()
        };
        ScoringContext::new(
            AffinityMatrix::from_raw(1, 2, vec![0.004, -0.001]).unwrap(),
            AffinityMatrix::from_raw(1, wild_cols, wild).unwrap(),
            groups,
            AffinityMatrix::from_raw(1, 2, vec![0.0039, -0.0012]).unwrap(),
            cfg,
        )
        .unwrap()
    }

    #[test]
    fn single_group_equals_single_pool() {
        let ctx = toy_context(vec![0..4], vec![0.001, -0.002, 0.003, 0.0], 4);
        let (grouped, _) = score_grouped_debiased(&ctx, 0).unwrap();
        assert_eq!(grouped, score_debiased(&ctx, 0).unwrap().score);
    }

    #[test]
    fn grouped_is_mean_of_independent_pools() {
        let wild = vec![0.001, -0.002, 0.003, 0.0, 0.005, -0.004, 0.002, 0.006];
        let ctx = toy_context(vec![0..2, 2..4, 4..6, 6..8], wild.clone(), 8);
        let (got, clamps) = score_grouped_debiased(&ctx, 0).unwrap();
        let x = ctx.input(0);
        let mut want = 0.0;
        for g in wild.chunks(2) {
            want += debiased_score(x.id, g, x.positives, 0.5, 2.0, 1e-12).unwrap().score;
        }
        assert!(close(got, want / 4.0, 1e-15));
        assert_eq!(clamps, 0);
    }

    #[test]
    fn identical_groups_equal_one_group() {
        let ctx = toy_context(vec![0..2, 2..4], vec![0.001, -0.002, 0.001, -0.002], 4);
        let (grouped, _) = score_grouped_debiased(&ctx, 0).unwrap();
        let x = ctx.input(0);
        let one = debiased_score(x.id, &x.wild[..2], x.positives, 0.5, 2.0, 1e-12).unwrap();
        assert!(close(grouped, one.score, 1e-15));
    }

    #[test]
    fn context_rejects_bad_groups_and_ranges() {
        let cfg = ScoreConfig {
            top: 4,
            groups: 2,
            ..ScoreConfig::default()
        };
        let mk = |groups: Vec<Range<usize>>, wild: Vec<f64>| {
            ScoringContext::new(
                AffinityMatrix::from_raw(1, 1, vec![0.0]).unwrap(),
                AffinityMatrix::from_raw(1, 4, wild).unwrap(),
                groups,
                AffinityMatrix::from_raw(1, 1, vec![0.0]).unwrap(),
                cfg.clone(),
            )
        };
        assert!(mk(vec![0..2, 2..4], vec![0.0; 4]).is_ok());
        assert!(mk(vec![0..2, 3..4], vec![0.0; 4]).is_err());
        assert!(mk(vec![0..2], vec![0.0; 4]).is_err());
        assert!(matches!(
            mk(vec![0..2, 2..4], vec![0.0, 0.0, 0.5, 0.0]),
            Err(Error::AffinityOutOfRange { row: 0, col: 2, .. })
        ));
    }

    #[test]
    fn score_all_reports_clamps() {
        let cfg = ScoreConfig {
            kappa: 1.0,
            tau: 0.9,
            top: 2,
            groups: 2,
            lambda_mode: LambdaMode::Fixed(1.0),
            ..ScoreConfig::default()
        };
        let ctx = ScoringContext::new(
            AffinityMatrix::from_raw(2, 1, vec![0.0, 0.0]).unwrap(),
            AffinityMatrix::from_raw(2, 2, vec![-1.0, 1.0, 0.0, 0.0]).unwrap(),
            vec![0..1, 1..2],
            AffinityMatrix::from_raw(2, 1, vec![1.0, 0.0]).unwrap(),
            cfg,
        )
        .unwrap();
        let r = score_all(&ctx, Method::GroupedDebiased).unwrap();
        assert_eq!(r.scores.len(), 2);
        // Input 0: group 0 clamps (e^-1 − 0.9e < 0), group 1 does not (e − 0.9e > 0).
        assert_eq!((r.clamp_count, r.clamp_events), (1, 1));
        assert!(r.scores.iter().all(|s| s.is_finite() && *s > 0.0 && *s <= 1.0));
        assert_eq!(
            score_all(&ctx, Method::AsymptoticUnbiased),
            Err(Error::UnsupportedMethod(Method::AsymptoticUnbiased))
        );
        let a = score_all_asymptotic(&ctx, &[1.0, 1.0]).unwrap();
        assert_eq!(a.scores, vec![0.5, 0.5]);
    }
}
