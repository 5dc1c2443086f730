//! Cross-module properties checked on random inputs through the public API.

use proptest::prelude::*;
use thermiq::dynamics::{koopman_build, ClassicalHamiltonian};
use thermiq::linalg::{self, c, CMat};
use thermiq::measure::{born_instrument, q_probabilities, sample_events};
use thermiq::qcore::{nearest_spectral_value, q_expectation, random};
use thermiq::stochastic::{master_integrate, LindbladModel};
use thermiq::stokes::{coherence_to_stokes, stokes_to_coherence, CoherenceMatrix};
use thermiq::tomography::{measure_suite, reconstruct_state, standard_test_suite, Sampling};
use thermiq::{io, rng, DensityOperator};

struct Quartic(f64);

impl ClassicalHamiltonian for Quartic {
    fn value(&self, p: f64, q: f64) -> f64 {
        0.5 * p * p + self.0 * q.powi(4) - 0.5 * q * q
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn born_probabilities_sum_to_one(seed in any::<u64>(), n in 2usize..6) {
        let mut r = rng::seeded(seed);
        let rho = random::density(n, &mut r);
        let a = random::hermitian(n, &mut r);
        let probs = q_probabilities(&rho, &born_instrument(&a).unwrap()).unwrap();
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(probs.iter().all(|&p| p >= 0.0));
        // the Born-weighted mean of eigenvalues is the q-expectation
        let values = born_instrument(&a).unwrap().outcome_values().unwrap();
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        prop_assert!((mean - q_expectation(&rho, &a).unwrap()).abs() < 1e-9);
        let prox = nearest_spectral_value(&rho, &a).unwrap();
        prop_assert!(prox.gap <= prox.sigma + 1e-10);
    }

    #[test]
    fn event_counts_add_up(seed in any::<u64>(), n in 1u64..5000) {
        let mut r = rng::seeded(seed);
        let rho = random::density(3, &mut r);
        let povm = born_instrument(&random::hermitian(3, &mut r)).unwrap();
        let s = sample_events(&rho, &povm, n, seed).unwrap();
        prop_assert_eq!(s.counts.iter().map(|(_, k)| k).sum::<u64>(), n);
        prop_assert_eq!(sample_events(&rho, &povm, n, seed).unwrap(), s);
    }

    #[test]
    fn exact_tomography_inverts(seed in any::<u64>(), n in 2usize..5) {
        let truth = random::density(n, &mut rng::seeded(seed));
        let table = measure_suite(&truth, &standard_test_suite(n).unwrap(), Sampling::Exact).unwrap();
        let rec = reconstruct_state(&table, n).unwrap();
        prop_assert!(rec.state.trace_distance(&truth).unwrap() < 1e-10);
        let back = io::frequencies_from_csv(&io::frequencies_to_csv(&table)).unwrap();
        prop_assert_eq!(back, table);
    }

    #[test]
    fn stokes_round_trip(seed in any::<u64>()) {
        let rho = random::density(2, &mut rng::seeded(seed));
        let coh = CoherenceMatrix::new(rho.matrix() * c(2.5, 0.0)).unwrap();
        let s = coherence_to_stokes(&coh);
        let back = stokes_to_coherence(&s).unwrap();
        prop_assert!(linalg::max_abs(&(back.matrix() - coh.matrix())) < 1e-12);
    }

    #[test]
    fn koopman_generator_is_hermitian(strength in 0.01f64..1.0) {
        let model = koopman_build(&Quartic(strength), 2.5, 16).unwrap();
        prop_assert!(linalg::hermitian_residual(&model.hhat_dense()) <= 1e-12);
    }

    #[test]
    fn lindblad_paths_stay_valid(seed in any::<u64>()) {
        let mut r = rng::seeded(seed);
        let h = random::hermitian(3, &mut r);
        let jumps: Vec<CMat> = (0..2).map(|_| random::ginibre(3, 3, &mut r) * c(0.3, 0.0)).collect();
        let model = LindbladModel::new(h, jumps).unwrap();
        let rho0 = random::density(3, &mut r);
        let path = master_integrate(&model, &rho0, 1.0, 0.005).unwrap();
        prop_assert!(path.max_trace_drift <= 1e-8);
        for rho in &path.states {
            let (trace, negativity, herm) = rho.residuals().unwrap();
            prop_assert!(herm < 1e-12 && trace < 1e-12 && negativity < 1e-9);
        }
    }
}

#[test]
fn density_json_rejects_invalid_states() {
    let not_psd = CMat::from_row_slice(2, 2, &[c(1.5, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.5, 0.0)]);
    assert!(io::density_from_json(&io::matrix_to_json(&not_psd)).is_err());
    let ok = DensityOperator::maximally_mixed(2);
    assert_eq!(io::density_from_json(&io::matrix_to_json(ok.matrix())).unwrap(), ok);
}
