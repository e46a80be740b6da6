//! AUROC and FPR at a fixed TPR.
//!
//! ID is the positive class and larger scores mean "more ID". Ties at the
//! threshold count as detections for both classes.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub auroc: f64,
    pub fpr95: f64,
    pub threshold_beta: f64,
    pub tpr_target: f64,
    pub n_id: usize,
    pub n_ood: usize,
}

fn check(scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::NonFiniteScore(i));
    }
    Ok(())
}

/// `P(id > ood) + ½·P(id = ood)` via midranks, `O((n+m) log(n+m))`.
pub fn auroc(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check(id_scores)?;
    check(ood_scores)?;
    let mut all: Vec<(f64, bool)> = id_scores
        .iter()
        .map(|&s| (s, true))
        .chain(ood_scores.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Twice the rank sum of ID scores, with 1-based midranks; kept integral.
    let mut id_rank_sum2: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let ids = all[i..j].iter().filter(|e| e.1).count() as u128;
        // Midrank of positions i+1..=j is (i + 1 + j) / 2.
        id_rank_sum2 += ids * (i as u128 + 1 + j as u128);
        i = j;
    }
    let n_id = id_scores.len() as u128;
    let n_ood = ood_scores.len() as u128;
    let u2 = id_rank_sum2 - n_id * (n_id + 1);
    Ok(u2 as f64 / (2.0 * (n_id * n_ood) as f64))
}

/// Pairwise-count AUROC, `O(n·m)`; the reference definition.
pub fn auroc_pairwise(id_scores: &[f64], ood_scores: &[f64]) -> Result<f64> {
    check(id_scores)?;
    check(ood_scores)?;
    let mut twice = 0u64;
    for &a in id_scores {
        for &b in ood_scores {
            twice += if a > b {
                2
            } else if a == b {
                1
            } else {
                0
            };
        }
    }
    Ok(twice as f64 / (2.0 * id_scores.len() as f64 * ood_scores.len() as f64))
}

/// Smallest count `c` with `c / n >= target`.
fn required_count(target: f64, n: usize) -> usize {
    let mut c = libm::ceil(target * n as f64) as usize;
    while c > 0 && (c - 1) as f64 / n as f64 >= target {
        c -= 1;
    }
    while c < n && (c as f64 / n as f64) < target {
        c += 1;
    }
    c.clamp(1, n)
}

/// Largest threshold `β` keeping `#{id ≥ β} / n_id ≥ tpr_target`, and the
/// OOD fraction `#{ood ≥ β} / n_ood` at that threshold.
pub fn fpr_at_tpr(id_scores: &[f64], ood_scores: &[f64], tpr_target: f64) -> Result<(f64, f64)> {
    check(id_scores)?;
    check(ood_scores)?;
    if !(tpr_target > 0.0 && tpr_target <= 1.0) {
        return Err(Error::InvalidTpr(tpr_target));
    }
    let mut sorted = id_scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let beta = sorted[required_count(tpr_target, sorted.len()) - 1];
    let fp = ood_scores.iter().filter(|&&s| s >= beta).count();
    Ok((fp as f64 / ood_scores.len() as f64, beta))
}

pub fn evaluate(id_scores: &[f64], ood_scores: &[f64], tpr_target: f64) -> Result<EvalReport> {
    let auroc = auroc(id_scores, ood_scores)?;
    let (fpr95, threshold_beta) = fpr_at_tpr(id_scores, ood_scores, tpr_target)?;
    Ok(EvalReport {
        auroc,
        fpr95,
        threshold_beta,
        tpr_target,
        n_id: id_scores.len(),
        n_ood: ood_scores.len(),
    })
}
