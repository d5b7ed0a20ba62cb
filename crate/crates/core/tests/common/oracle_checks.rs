//! Independent numerical oracles for the model, estimator and simulator.
//! Each check panics with a diagnostic on failure.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssalt_core::bootstrap::{replicate_rng, simulate_units};
use ssalt_core::characteristics::{self, Characteristic, Scope};
use ssalt_core::estimation::{fit, fit_distribution, FitOptions};
use ssalt_core::model::{cell_probabilities, derivative_matrix, relative_risks_at, ModelParams, StepStressDesign};
use ssalt_core::optimize::nelder_mead;
use ssalt_core::robustness::influence_matrix;
use ssalt_core::simulation::SimulationScenario;

fn reference() -> (StepStressDesign, ModelParams) {
    let s = SimulationScenario::reference();
    (s.design, s.true_params)
}

fn random_instance(rng: &mut ChaCha8Rng) -> (StepStressDesign, ModelParams) {
    let r = rng.random_range(1..=3);
    let x1: f64 = rng.random_range(0.0..40.0);
    let x2 = x1 + rng.random_range(1.0..15.0);
    let n_before = rng.random_range(1..=4);
    let n_after = rng.random_range(1..=4);
    let mut its = Vec::new();
    let mut t = 0.0;
    for _ in 0..n_before {
        t += rng.random_range(2.0..15.0);
        its.push(t);
    }
    let tau1 = t;
    for _ in 0..n_after {
        t += rng.random_range(2.0..15.0);
        its.push(t);
    }
    let design = StepStressDesign::new((x1, x2), tau1, t, its, r, x1 - 5.0).unwrap();
    // scales between roughly e^2 and e^6 at the test stresses
    let blocks: Vec<(f64, f64)> = (0..r)
        .map(|_| {
            let a1 = rng.random_range(-0.08..0.0);
            let log_scale = rng.random_range(2.5..5.5);
            (log_scale - a1 * x1, a1)
        })
        .collect();
    (design, ModelParams::from_blocks(&blocks).unwrap())
}

pub fn derivative_matrix_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let (design, params) = random_instance(&mut rng);
        let w = derivative_matrix(&params, &design);
        let mut fd = DMatrix::zeros(w.nrows(), w.ncols());
        for c in 0..w.ncols() {
            let h = 1e-6 * params.as_slice()[c].abs().max(1.0);
            let mut up = params.as_slice().to_vec();
            let mut dn = up.clone();
            up[c] += h;
            dn[c] -= h;
            let pu = cell_probabilities(&ModelParams::new(up).unwrap(), &design);
            let pd = cell_probabilities(&ModelParams::new(dn).unwrap(), &design);
            for r in 0..w.nrows() {
                fd[(r, c)] = (pu[r] - pd[r]) / (2.0 * h);
            }
        }
        let err = (&w - &fd).amax() / w.amax();
        assert!(err < 1e-6, "relative error {err:e} for {params:?}");
    }
}

/// Adaptive Simpson quadrature.
fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 50)
}

/// Density of (T, cause j) written out directly from the cumulative exposure model.
fn joint_pdf(params: &ModelParams, design: &StepStressDesign, t: f64, j: usize) -> f64 {
    let r = params.num_risks();
    let theta = |k: usize, x: f64| (params.a0(k) + params.a1(k) * x).exp();
    let (x, shift): (f64, Box<dyn Fn(usize) -> f64>) = if t < design.tau1() {
        (design.x1(), Box::new(|_| 0.0))
    } else {
        let (x1, x2, tau1) = (design.x1(), design.x2(), design.tau1());
        (
            design.x2(),
            Box::new(move |k| tau1 * theta(k, x2) / theta(k, x1) - tau1),
        )
    };
    let exposure: f64 = (0..r).map(|k| (t + shift(k)) / theta(k, x)).sum();
    (-exposure).exp() / theta(j, x)
}

pub fn cell_probabilities_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut instances = vec![reference()];
    instances.extend((0..10).map(|_| random_instance(&mut rng)));
    for (design, params) in instances {
        let p = cell_probabilities(&params, &design);
        let mut failed_mass = 0.0;
        for l in 0..design.num_intervals() {
            let (lo, hi) = design.interval_bounds(l);
            for j in 0..design.num_risks() {
                let q = integrate(&|t| joint_pdf(&params, &design, t, j), lo, hi, 1e-13);
                failed_mass += q;
                let c = design.cell_index(l, j);
                assert!((q - p[c]).abs() < 1e-8, "cell {c}: {q} vs {}", p[c]);
            }
        }
        assert!((1.0 - failed_mass - p.survival()).abs() < 1e-8);
    }
}

pub fn mttf_identity_matches_quadrature() {
    let (_, params) = reference();
    for x0 in [0.0, 25.0, 40.0] {
        let e = characteristics::value(&params, x0, Characteristic::Mttf, Scope::Overall);
        let rate: f64 = (0..params.num_risks()).map(|j| params.rate(j, x0)).sum();
        let density = |t: f64| {
            (0..params.num_risks())
                .map(|j| params.rate(j, x0) * (-t * rate).exp())
                .sum::<f64>()
        };
        let mean = integrate(&|t| t * density(t), 0.0, 60.0 / rate, 1e-12);
        assert!((mean - e).abs() / e < 1e-8, "x0 {x0}: {mean} vs {e}");
    }
}

/// Multinomial log-likelihood built from survival differences and within-level cause shares.
fn log_likelihood(params: &[f64], design: &StepStressDesign, counts: &[u64]) -> f64 {
    let p = ModelParams::new(params.to_vec()).unwrap();
    let r = p.num_risks();
    let survival = |t: f64| {
        let theta = |k: usize, x: f64| (p.a0(k) + p.a1(k) * x).exp();
        if t <= design.tau1() {
            (-(0..r).map(|k| t / theta(k, design.x1())).sum::<f64>()).exp()
        } else {
            let h = |k: usize| design.tau1() * (theta(k, design.x2()) / theta(k, design.x1()) - 1.0);
            (-(0..r).map(|k| (t + h(k)) / theta(k, design.x2())).sum::<f64>()).exp()
        }
    };
    let mut ll = 0.0;
    for l in 0..design.num_intervals() {
        let (lo, hi) = design.interval_bounds(l);
        let x = if hi <= design.tau1() { design.x1() } else { design.x2() };
        let rates: Vec<f64> = (0..r).map(|k| (-(p.a0(k) + p.a1(k) * x)).exp()).collect();
        let total: f64 = rates.iter().sum();
        let mass = survival(lo) - survival(hi);
        for j in 0..r {
            let n = counts[design.cell_index(l, j)] as f64;
            if n > 0.0 {
                ll += n * (rates[j] / total * mass).ln();
            }
        }
    }
    ll + counts[design.survival_cell()] as f64 * survival(design.tau2()).ln()
}

pub fn mle_matches_independent_likelihood_maximizer() {
    let (design, truth) = reference();
    for seed in 0..3 {
        let data = simulate_units(&truth, &design, 360, &mut replicate_rng(100, seed));
        assert!(data.is_well_posed(&design));
        let mdpde = fit(&data, &design, 0.0, &FitOptions::default()).unwrap();
        let cells = data.cells();
        let neg_ll = |x: &DVector<f64>| -log_likelihood(x.as_slice(), &design, &cells);
        let mut x = DVector::from_column_slice(truth.as_slice());
        for _ in 0..6 {
            x = nelder_mead(neg_ll, &x, 0.01, 20_000, 1e-16).0;
        }
        for (a, b) in mdpde.params.as_slice().iter().zip(x.iter()) {
            assert!((a - b).abs() < 1e-6 * a.abs().max(1.0), "seed {seed}: {a} vs {b}");
        }
    }
}

pub fn influence_function_matches_contamination_refit() {
    let (design, truth) = reference();
    let p = cell_probabilities(&truth, &design);
    let eps = 1e-4;
    let options = FitOptions {
        multi_start: false,
        initial: Some(truth.clone()),
        compute_covariance: false,
        gradient_tolerance: 1e-12,
        ..FitOptions::default()
    };
    for beta in [0.0, 0.5, 1.0] {
        let ifs = influence_matrix(&truth, &design, beta).unwrap();
        for cell in 0..design.num_cells() {
            let mut mixed: Vec<f64> = p.as_slice().iter().map(|v| (1.0 - eps) * v).collect();
            mixed[cell] += eps;
            let f = fit_distribution(&mixed, 1_000_000, &design, beta, &options).unwrap();
            let fd =
                (DVector::from_column_slice(f.params.as_slice()) - DVector::from_column_slice(truth.as_slice())) / eps;
            let exact = ifs.column(cell);
            let rel = (&fd - exact).norm() / exact.norm();
            assert!(rel < 0.01, "beta {beta} cell {cell}: relative error {rel}");
        }
    }
}

pub fn simulated_frequencies_follow_cell_probabilities() {
    let (design, truth) = reference();
    let n = 1_000_000u64;
    let data = simulate_units(&truth, &design, n, &mut replicate_rng(9, 0));
    let p = cell_probabilities(&truth, &design);
    for (c, &count) in data.cells().iter().enumerate() {
        let expected = n as f64 * p[c];
        let sd = (n as f64 * p[c] * (1.0 - p[c])).sqrt();
        assert!(
            (count as f64 - expected).abs() < 3.0 * sd,
            "cell {c}: {count} vs {expected:.1} ± {sd:.1}"
        );
    }

    // cause shares among failures before the stress change
    let pi1 = relative_risks_at(&truth, design.x1());
    let before: Vec<u64> = (0..design.num_risks())
        .map(|j| {
            (0..design.num_intervals())
                .filter(|&l| design.interval_bounds(l).1 <= design.tau1())
                .map(|l| data.count(l, j))
                .sum()
        })
        .collect();
    let total: u64 = before.iter().sum();
    for j in 0..design.num_risks() {
        let share = before[j] as f64 / total as f64;
        let sd = (pi1[j] * (1.0 - pi1[j]) / total as f64).sqrt();
        assert!((share - pi1[j]).abs() < 3.0 * sd);
    }
}
