mod common;

use common::{uniform, unit_rows};
use negbias_core::scoring::{
    debiased_score, neglabel_score, phi, score_all, score_debiased, score_grouped_debiased, score_mcm, ScoringContext,
};
use negbias_core::similarity::{affinity_matrix, AffinityMatrix};
use negbias_core::{Method, ScoreConfig};
use proptest::prelude::*;

fn kappa() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.01), Just(1.0), Just(10.0), Just(100.0), 0.001f64..100.0]
}

/// Random context with `n` inputs, `k` ID labels, `b` groups of `g` wild
/// labels and `p` positives.
#[allow(clippy::too_many_arguments)]
fn context(seed: u64, n: usize, k: usize, b: usize, g: usize, p: usize, kappa: f64, tau: f64) -> ScoringContext {
    let config = ScoreConfig {
        kappa,
        tau,
        top: b * g,
        groups: b,
        ..ScoreConfig::default()
    };
    let m = |s: u64, cols: usize| AffinityMatrix::from_raw(n, cols, uniform(s, n * cols, -kappa, kappa)).unwrap();
    let groups = (0..b).map(|i| i * g..(i + 1) * g).collect();
    ScoringContext::new(m(seed, k), m(seed + 1, b * g), groups, m(seed + 2, p), config).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scores_are_in_unit_interval(
        seed in any::<u32>(),
        kappa in kappa(),
        tau in 0.0f64..0.95,
        k in 1usize..6,
        b in 1usize..5,
        g in 1usize..6,
    ) {
        let ctx = context(u64::from(seed), 8, k, b, g, k, kappa, tau);
        for method in [Method::Mcm, Method::NegLabel, Method::Debiased, Method::GroupedDebiased] {
            let report = score_all(&ctx, method).unwrap();
            for s in report.scores {
                prop_assert!(s.is_finite() && s > 0.0 && s <= 1.0, "{:?}: {}", method, s);
            }
        }
    }

    #[test]
    fn raising_an_id_affinity_never_lowers_scores(
        seed in any::<u32>(),
        kappa in kappa(),
        tau in 0.0f64..0.9,
        j in 0usize..4,
        bump in 0.0f64..1.0,
    ) {
        let s = u64::from(seed);
        let id = uniform(s, 4, -kappa, kappa);
        let mut raised = id.clone();
        raised[j] = (raised[j] + bump * kappa).min(kappa);
        let wild = uniform(s + 1, 9, -kappa, kappa);
        let pos = uniform(s + 2, 4, -kappa, kappa);
        let groups = || wild.chunks(3);
        prop_assert!(neglabel_score(&raised, groups()).unwrap() >= neglabel_score(&id, groups()).unwrap());
        let lo = debiased_score(&id, &wild, &pos, tau, 9.0, 1e-12).unwrap();
        let hi = debiased_score(&raised, &wild, &pos, tau, 9.0, 1e-12).unwrap();
        prop_assert!(hi.score >= lo.score);
    }

    #[test]
    fn raising_a_wild_affinity_never_raises_debiased(
        seed in any::<u32>(),
        kappa in kappa(),
        tau in 0.0f64..0.9,
        j in 0usize..6,
        bump in 0.0f64..1.0,
    ) {
        let s = u64::from(seed);
        let id = uniform(s, 3, -kappa, kappa);
        let wild = uniform(s + 1, 6, -kappa, kappa);
        let mut raised = wild.clone();
        raised[j] = (raised[j] + bump * kappa).min(kappa);
        let pos = uniform(s + 2, 3, -kappa, kappa);
        let lo = debiased_score(&id, &wild, &pos, tau, 6.0, 1e-12).unwrap();
        let hi = debiased_score(&id, &raised, &pos, tau, 6.0, 1e-12).unwrap();
        if !lo.clamped && !hi.clamped {
            prop_assert!(hi.score <= lo.score);
        }
    }

    #[test]
    fn mcm_argmax_survives_kappa_scaling(seed in any::<u32>(), kappa in kappa(), c in 0.01f64..10.0) {
        let s = u64::from(seed);
        let images = unit_rows(s, 5, 8);
        let texts = unit_rows(s + 1, 4, 8);
        let a = affinity_matrix(&images, &texts, kappa).unwrap();
        let b = affinity_matrix(&images, &texts, kappa * c).unwrap();
        let argmax = |r: &[f64]| (0..r.len()).max_by(|&x, &y| r[x].total_cmp(&r[y])).unwrap();
        for i in 0..5 {
            prop_assert_eq!(argmax(a.row(i)), argmax(b.row(i)));
            prop_assert!(score_mcm(b.row(i)).unwrap() > 0.0);
        }
    }

    #[test]
    fn identical_groups_match_a_single_group(
        seed in any::<u32>(),
        kappa in kappa(),
        tau in 0.0f64..0.9,
        b in 1usize..6,
        g in 1usize..6,
    ) {
        let s = u64::from(seed);
        let id = uniform(s, 3, -kappa, kappa);
        let group = uniform(s + 1, g, -kappa, kappa);
        let pos = uniform(s + 2, 3, -kappa, kappa);
        let mut wild = Vec::new();
        for rot in 0..b {
            let mut copy = group.clone();
            copy.rotate_left(rot % g);
            wild.extend(copy);
        }
        let config = ScoreConfig { kappa, tau, top: b * g, groups: b, ..ScoreConfig::default() };
        let row = |v: &[f64]| AffinityMatrix::from_raw(1, v.len(), v.to_vec()).unwrap();
        let ctx = ScoringContext::new(row(&id), row(&wild), (0..b).map(|i| i * g..(i + 1) * g).collect(), row(&pos), config).unwrap();
        let single = debiased_score(&id, &group, &pos, tau, g as f64, 1e-12).unwrap();
        let (grouped, _) = score_grouped_debiased(&ctx, 0).unwrap();
        prop_assert!((grouped - single.score).abs() <= 1e-12 * single.score.max(1e-300));
    }

    #[test]
    fn tau_zero_is_the_wild_only_score(seed in any::<u32>(), kappa in kappa(), m in 1usize..12) {
        let s = u64::from(seed);
        let id = uniform(s, 4, -kappa, kappa);
        let wild = uniform(s + 1, m, -kappa, kappa);
        let pos = uniform(s + 2, 4, -kappa, kappa);
        let lambda = m as f64;
        let d = debiased_score(&id, &wild, &pos, 0.0, lambda, 1e-300).unwrap();
        let reference = phi(&id, &wild, lambda).unwrap();
        prop_assert!((d.score - reference).abs() <= 1e-12);
    }

    #[test]
    fn one_group_equals_single_pool(seed in any::<u32>(), kappa in kappa(), tau in 0.0f64..0.9, m in 1usize..20) {
        let ctx = context(u64::from(seed), 6, 3, 1, m, 3, kappa, tau);
        for i in 0..ctx.len() {
            let (grouped, clamps) = score_grouped_debiased(&ctx, i).unwrap();
            let single = score_debiased(&ctx, i).unwrap();
            prop_assert_eq!(grouped, single.score);
            prop_assert_eq!(clamps, usize::from(single.clamped));
        }
    }
}
