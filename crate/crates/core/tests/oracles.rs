//! Oracle checks plus simulation sanity tests.

mod common;

use common::oracle_checks;
use ssalt_core::bootstrap::replicate_rng;
use ssalt_core::model::cell_probabilities;
use ssalt_core::simulation::{generate_contaminated, run_mse_study, SimulationScenario};

#[test]
fn derivative_matrix_matches_central_differences() {
    oracle_checks::derivative_matrix_matches_central_differences();
}

#[test]
fn cell_probabilities_match_quadrature() {
    oracle_checks::cell_probabilities_match_quadrature();
}

#[test]
fn mttf_identity_matches_quadrature() {
    oracle_checks::mttf_identity_matches_quadrature();
}

#[test]
fn mle_matches_independent_likelihood_maximizer() {
    oracle_checks::mle_matches_independent_likelihood_maximizer();
}

#[test]
fn influence_function_matches_contamination_refit() {
    oracle_checks::influence_function_matches_contamination_refit();
}

#[test]
fn simulated_frequencies_follow_cell_probabilities() {
    oracle_checks::simulated_frequencies_follow_cell_probabilities();
}

#[test]
fn mse_shrinks_with_sample_size() {
    let base = SimulationScenario {
        replications: 300,
        betas: vec![0.0, 0.5],
        ..SimulationScenario::reference()
    };
    let small = run_mse_study(&base).unwrap();
    let large = run_mse_study(&SimulationScenario {
        sample_size: 4 * base.sample_size,
        ..base.clone()
    })
    .unwrap();
    for (s, l) in small.mse.iter().zip(&large.mse) {
        for (a, b) in s.params.iter().zip(&l.params) {
            let ratio = a / b;
            assert!((3.0..=5.0).contains(&ratio), "beta {}: ratio {ratio}", s.beta);
        }
    }
}

#[test]
fn contamination_adds_expected_mass() {
    let s = SimulationScenario::reference().with_contamination(0.2);
    let clean = cell_probabilities(&s.true_params, &s.design);
    let draws = 10_000;
    let mut totals = vec![0.0; s.design.num_cells()];
    for r in 0..draws {
        let d = generate_contaminated(&s, &mut replicate_rng(5, r)).unwrap();
        for (t, c) in totals.iter_mut().zip(d.cells()) {
            *t += c as f64;
        }
    }
    let m = (0.2 * s.sample_size as f64).floor();
    let clean_n = s.sample_size as f64 - m;
    let targets: Vec<usize> = s
        .contamination_cells
        .iter()
        .map(|&(l, j)| s.design.cell_index(l, j))
        .collect();
    let observed: f64 = targets.iter().map(|&c| totals[c] / draws as f64).sum();
    let expected: f64 = targets.iter().map(|&c| clean_n * clean[c]).sum::<f64>() + m;
    assert!(
        (observed - expected).abs() / expected < 0.01,
        "{observed} vs {expected}"
    );
}
