//! Exact evaluators over small discrete label spaces.
//!
//! A [`DiscreteLabelSpace`] fixes a wild distribution `Q`, a positive
//! distribution `P⁺` and a prior `τ`; the negative distribution is implied by
//! `P⁻ = (Q − τP⁺) / (1 − τ)`. Expectations over `r`-tuples of labels are
//! evaluated by full enumeration, so results are exact up to rounding. These
//! routines refuse to run above the enumeration cap rather than fall back to
//! sampling.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::scoring::phi;
use crate::{EmbeddingMatrix, Error, Result};

/// Largest label count accepted by the enumerating evaluators.
pub const MAX_LABELS: usize = 8;
/// Largest tuple length accepted by the enumerating evaluators.
pub const MAX_TUPLE: usize = 6;

const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLabelSpace {
    embeddings: EmbeddingMatrix,
    q_weights: Vec<f64>,
    pplus_weights: Vec<f64>,
    neg_weights: Vec<f64>,
    tau: f64,
}

fn check_weights(name: &str, w: &[f64], rows: usize) -> Result<()> {
    if w.len() != rows {
        return Err(Error::InvalidDistribution(format!(
            "{name} has {} weights for {rows} labels",
            w.len()
        )));
    }
    if let Some(v) = w.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::InvalidDistribution(format!("{name} has weight {v}")));
    }
    let total: f64 = w.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::InvalidDistribution(format!("{name} sums to {total}")));
    }
    Ok(())
}

impl DiscreteLabelSpace {
    /// Validates both distributions and that `Q − τP⁺` is a non-negative
    /// measure (up to 1e-12), i.e. the mixture is realizable.
    pub fn new(embeddings: EmbeddingMatrix, q_weights: Vec<f64>, pplus_weights: Vec<f64>, tau: f64) -> Result<Self> {
        crate::validate(&embeddings)?;
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidConfig(format!("tau must lie in [0, 1), got {tau}")));
        }
        check_weights("Q", &q_weights, embeddings.rows())?;
        check_weights("P+", &pplus_weights, embeddings.rows())?;
        let neg_weights: Vec<f64> = q_weights
            .iter()
            .zip(&pplus_weights)
            .map(|(q, p)| (q - tau * p) / (1.0 - tau))
            .collect();
        if let Some((index, &weight)) = neg_weights.iter().enumerate().find(|(_, w)| **w < -WEIGHT_TOLERANCE) {
            return Err(Error::UnrealizableMixture { index, weight });
        }
        Ok(Self {
            embeddings,
            q_weights,
            pplus_weights,
            neg_weights,
            tau,
        })
    }

    /// Builds the space from its two components; `Q = τP⁺ + (1 − τ)P⁻`.
    pub fn from_components(
        embeddings: EmbeddingMatrix,
        pplus_weights: Vec<f64>,
        pminus_weights: Vec<f64>,
        tau: f64,
    ) -> Result<Self> {
        check_weights("P-", &pminus_weights, embeddings.rows())?;
        let q = pplus_weights
            .iter()
            .zip(&pminus_weights)
            .map(|(p, n)| tau * p + (1.0 - tau) * n)
            .collect();
        Self::new(embeddings, q, pplus_weights, tau)
    }

    pub fn len(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.embeddings.rows() == 0
    }

    pub fn embeddings(&self) -> &EmbeddingMatrix {
        &self.embeddings
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn q_weights(&self) -> &[f64] {
        &self.q_weights
    }

    pub fn pplus_weights(&self) -> &[f64] {
        &self.pplus_weights
    }

    /// Derived `P⁻` weights (may contain values down to −1e-12).
    pub fn neg_weights(&self) -> &[f64] {
        &self.neg_weights
    }

    /// Affinities of `image` against every label.
    pub fn affinities(&self, image: &[f32], kappa: f64) -> Result<Vec<f64>> {
        self.embeddings
            .iter_rows()
            .map(|t| crate::similarity::affinity(image, t, kappa))
            .collect()
    }

    /// Same space with labels reordered by `perm` (new label `i` is old `perm[i]`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let pick = |w: &[f64]| perm.iter().map(|&i| w[i]).collect::<Vec<_>>();
        Self::new(
            self.embeddings.select_rows(perm),
            pick(&self.q_weights),
            pick(&self.pplus_weights),
            self.tau,
        )
    }

    fn check_enumeration(&self, x_aff: &[f64], r: usize) -> Result<()> {
        if x_aff.len() != self.len() {
            return Err(Error::DimensionMismatch {
                left: self.len(),
                right: x_aff.len(),
            });
        }
        if r == 0 || r > MAX_TUPLE || self.len() > MAX_LABELS {
            return Err(Error::EnumerationTooLarge { labels: self.len(), r });
        }
        Ok(())
    }
}

/// Calls `f(tuple)` for every `r`-tuple over `0..labels`, in odometer order.
fn for_each_tuple(labels: usize, r: usize, mut f: impl FnMut(&[usize])) {
    let mut idx = vec![0usize; r];
    loop {
        f(&idx);
        let mut pos = r;
        loop {
            if pos == 0 {
                return;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < labels {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// `E[Φ]` where tuple position `i` is drawn from `weights_at(i)`.
fn tuple_expectation<'a>(
    x_aff: &[f64],
    id_aff: &[f64],
    r: usize,
    lambda: f64,
    weights_at: impl Fn(usize) -> &'a [f64],
) -> Result<f64> {
    let mut total = 0.0;
    let mut neg = vec![0.0; r];
    let mut err = None;
    for_each_tuple(x_aff.len(), r, |tuple| {
        let mut w = 1.0;
        for (pos, &label) in tuple.iter().enumerate() {
            w *= weights_at(pos)[label];
            neg[pos] = x_aff[label];
        }
        if w != 0.0 {
            match phi(id_aff, &neg, lambda) {
                Ok(v) => total += w * v,
                Err(e) => err = Some(e),
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

/// `E_{ŷ₁..ŷ_r ~ P⁻}[Φ(x, ŷ)]` by enumeration of all `r`-tuples.
pub fn exact_unbiased_score(
    space: &DiscreteLabelSpace,
    x_aff: &[f64],
    id_aff: &[f64],
    r: usize,
    lambda: f64,
) -> Result<f64> {
    space.check_enumeration(x_aff, r)?;
    tuple_expectation(x_aff, id_aff, r, lambda, |_| space.neg_weights())
}

/// The same expectation via the binomial expansion of `(Q − τP⁺)^r`:
/// `Σ_k C(r,k)(−τ)^k/(1−τ)^r · E[Φ]` with the first `k` labels from `P⁺` and
/// the rest from `Q`.
pub fn expansion_score(
    space: &DiscreteLabelSpace,
    x_aff: &[f64],
    id_aff: &[f64],
    r: usize,
    lambda: f64,
) -> Result<f64> {
    space.check_enumeration(x_aff, r)?;
    let tau = space.tau();
    let scale = libm::pow(1.0 - tau, -(r as f64));
    let mut total = 0.0;
    let mut binom = 1.0;
    for k in 0..=r {
        if k > 0 {
            binom = binom * (r - k + 1) as f64 / k as f64;
        }
        let coeff = binom * libm::pow(-tau, k as f64) * scale;
        if coeff == 0.0 {
            continue;
        }
        let e = tuple_expectation(x_aff, id_aff, r, lambda, |pos| {
            if pos < k {
                space.pplus_weights()
            } else {
                space.q_weights()
            }
        })?;
        total += coeff * e;
    }
    Ok(total)
}

fn weighted_exp_mean(weights: &[f64], x_aff: &[f64]) -> f64 {
    weights.iter().zip(x_aff).map(|(w, &a)| w * libm::exp(a)).sum()
}

/// `E_{ŷ~P⁻}[e^{h(x,ŷ)}]`.
pub fn exact_neg_mean(space: &DiscreteLabelSpace, x_aff: &[f64]) -> Result<f64> {
    check_len(space, x_aff)?;
    Ok(weighted_exp_mean(space.neg_weights(), x_aff))
}

/// `E_{ŷ~Q}[e^{h(x,ŷ)}]`.
pub fn exact_wild_mean(space: &DiscreteLabelSpace, x_aff: &[f64]) -> Result<f64> {
    check_len(space, x_aff)?;
    Ok(weighted_exp_mean(space.q_weights(), x_aff))
}

/// `E_{ŷ~P⁺}[e^{h(x,ŷ)}]`.
pub fn exact_pos_mean(space: &DiscreteLabelSpace, x_aff: &[f64]) -> Result<f64> {
    check_len(space, x_aff)?;
    Ok(weighted_exp_mean(space.pplus_weights(), x_aff))
}

fn check_len(space: &DiscreteLabelSpace, x_aff: &[f64]) -> Result<()> {
    if x_aff.len() != space.len() {
        return Err(Error::DimensionMismatch {
            left: space.len(),
            right: x_aff.len(),
        });
    }
    Ok(())
}
