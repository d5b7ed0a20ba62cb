//! Benchmark fixtures.

use ssalt_core::bootstrap::{replicate_rng, simulate_units};
use ssalt_core::{CountData, ModelParams, SimulationScenario, StepStressDesign};

/// Simulation reference design and parameters with one simulated dataset.
pub fn reference_fixture(seed: u64) -> (StepStressDesign, ModelParams, CountData) {
    let s = SimulationScenario::reference();
    let data = simulate_units(&s.true_params, &s.design, s.sample_size, &mut replicate_rng(seed, 0));
    (s.design, s.true_params, data)
}
