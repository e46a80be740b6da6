mod common;

use common::random_space;
use negbias_core::verify::{bias_bound, run_bias_experiment, BiasExperimentConfig};

#[test]
fn bound_dominates_across_kappa_and_tau() {
    for kappa in [0.01, 1.0] {
        for tau in [0.25, 0.5] {
            let (space, x_aff, id_aff) = random_space(11, 5, tau, kappa, 3);
            let config = BiasExperimentConfig {
                kappa,
                lambda: 1.0,
                grid: vec![(100, 100), (1000, 100), (100, 1000), (1000, 1000)],
                trials: 200,
                seed: 3,
            };
            let report = run_bias_experiment(&space, &x_aff, &id_aff, &config).unwrap();
            assert!(report.bound_holds(), "kappa={kappa} tau={tau}: {report:?}");
            assert!(report.mean_delta.iter().all(|d| *d >= 0.0));
            for (b, &(m, n)) in report.bound.iter().zip(&config.grid) {
                assert_eq!(*b, bias_bound(kappa, tau, m, n));
            }
        }
    }
}
