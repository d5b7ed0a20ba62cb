//! Subcommand implementations. Each prints aligned tables and optionally
//! writes the same numbers as JSON.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use ssalt_core::bootstrap::{bca_interval, bca_interval_for_fit, BcaInterval};
use ssalt_core::characteristics::{self, CharacteristicEstimate};
use ssalt_core::estimation::{fit as fit_model, param_confidence_intervals};
use ssalt_core::io::{bundled, load_dataset, load_scenario, parse_dataset, save_report};
use ssalt_core::robustness::{sensitivity_curve, SensitivityCurve, SensitivityKind};
use ssalt_core::simulation::{run_coverage_study, run_mse_study, IntervalMethod, SimulationReport};
use ssalt_core::{
    BootstrapConfig, BootstrapTarget, Characteristic, Dataset, Error, FitOptions, FitResult, Interval, LoadOptions,
    ModelParams, Result, Scope, StepStressDesign,
};

use crate::table::{interval, num, sci, Table};
use crate::{
    BootstrapArgs, Bundled, CharacterizeArgs, FitArgs, InputArgs, SensitivityArgs, SimulateArgs, Study, TargetKind,
};

fn load(bundle: Option<Bundled>, path: Option<&Path>, time_scale: f64, normalize: Option<bool>) -> Result<Dataset> {
    let options = LoadOptions {
        time_scale,
        normalize_stress: normalize,
    };
    match (bundle, path) {
        (Some(Bundled::ElectronicDevices), _) => parse_dataset(bundled::ELECTRONIC_DEVICES, &options),
        (Some(Bundled::ElectronicDevicesIt400), _) => parse_dataset(bundled::ELECTRONIC_DEVICES_IT400, &options),
        (None, Some(p)) => load_dataset(p, &options),
        (None, None) => Err(Error::InvalidData("no dataset given".into())),
    }
}

fn load_input(input: &InputArgs) -> Result<Dataset> {
    load(
        input.bundled,
        input.dataset.as_deref(),
        input.time_scale,
        input.normalize_stress,
    )
}

fn emit<T: Serialize>(text: &str, report: &T, out: Option<&Path>) -> Result<()> {
    print!("{text}");
    if let Some(path) = out {
        save_report(report, path)?;
    }
    Ok(())
}

fn fit_beta(dataset: &Dataset, beta: f64) -> Result<FitResult> {
    fit_model(&dataset.data, &dataset.design, beta, &FitOptions::default())
}

fn param_names(risks: usize) -> Vec<String> {
    (1..=risks).flat_map(|j| [format!("a0{j}"), format!("a1{j}")]).collect()
}

fn cell_label(design: &StepStressDesign, cell: usize) -> String {
    if cell == design.survival_cell() {
        "survivors".into()
    } else {
        let r = design.num_risks();
        format!("interval {} risk {}", cell / r + 1, cell % r + 1)
    }
}

fn scope_from(cause: Option<usize>) -> Result<Scope> {
    match cause {
        None => Ok(Scope::Overall),
        Some(0) => Err(Error::InvalidParams("risks are numbered from 1".into())),
        Some(j) => Ok(Scope::Cause(j - 1)),
    }
}

fn characteristic_for(kind: TargetKind, t0: Option<f64>, alpha0: f64) -> Result<Characteristic> {
    let c = match kind {
        TargetKind::Mttf => Characteristic::Mttf,
        TargetKind::Reliability => Characteristic::Reliability {
            mission_time: t0.ok_or_else(|| Error::InvalidParams("--t0 is required for the reliability".into()))?,
        },
        TargetKind::Quantile => Characteristic::Quantile { alpha0 },
        TargetKind::Param => {
            return Err(Error::InvalidParams(
                "a parameter is not a lifetime characteristic".into(),
            ))
        }
    };
    c.validate()?;
    Ok(c)
}

#[derive(Serialize)]
struct DatasetSummary {
    sample_size: u64,
    stress_levels: (f64, f64),
    x0: f64,
    tau1: f64,
    tau2: f64,
    inspection_times: Vec<f64>,
    risks: usize,
    time_scale: f64,
    counts: Vec<Vec<u64>>,
    survivors: u64,
}

impl DatasetSummary {
    fn new(d: &Dataset) -> Self {
        let g = &d.design;
        Self {
            sample_size: d.data.total(),
            stress_levels: (g.x1(), g.x2()),
            x0: g.x0(),
            tau1: g.tau1(),
            tau2: g.tau2(),
            inspection_times: g.inspection_times().to_vec(),
            risks: g.num_risks(),
            time_scale: d.time_scale,
            counts: (0..g.num_intervals())
                .map(|l| (0..g.num_risks()).map(|j| d.data.count(l, j)).collect())
                .collect(),
            survivors: d.data.survivors(),
        }
    }

    fn describe(&self) -> String {
        format!(
            "N = {}, stress levels ({}, {}), x0 = {}, tau1 = {}, tau2 = {}, {} risks, {} survivors\n",
            self.sample_size,
            self.stress_levels.0,
            self.stress_levels.1,
            self.x0,
            self.tau1,
            self.tau2,
            self.risks,
            self.survivors
        )
    }
}

#[derive(Serialize)]
struct FitRow {
    beta: f64,
    params: Vec<f64>,
    standard_errors: Vec<f64>,
    intervals: Vec<Interval>,
    /// Asymptotic covariance of `sqrt(N)(a_hat - a)`.
    covariance: Vec<Vec<f64>>,
    loss: f64,
    converged: bool,
    iterations: usize,
    gradient_norm: f64,
    information_condition: Option<f64>,
}

#[derive(Serialize)]
struct FitReport {
    dataset: DatasetSummary,
    level: f64,
    fits: Vec<FitRow>,
}

pub fn fit(args: &FitArgs) -> Result<()> {
    let dataset = load_input(&args.input)?;
    let level = args.common.level;
    let names = param_names(dataset.design.num_risks());
    let summary = DatasetSummary::new(&dataset);
    let mut text = summary.describe();
    let mut rows = Vec::new();
    for &beta in &args.common.betas {
        let f = fit_beta(&dataset, beta)?;
        let cov = f.covariance()?;
        rows.push(FitRow {
            beta,
            params: f.params.as_slice().to_vec(),
            standard_errors: f.standard_errors()?,
            intervals: param_confidence_intervals(&f, level)?,
            covariance: cov.row_iter().map(|r| r.iter().copied().collect()).collect(),
            loss: f.loss,
            converged: f.converged,
            iterations: f.iterations,
            gradient_norm: f.gradient_norm,
            information_condition: f.information_condition,
        });
    }
    for row in &rows {
        let _ = writeln!(
            text,
            "\nbeta = {}  (loss {:.6e}, {} iterations)",
            row.beta, row.loss, row.iterations
        );
        let mut t = Table::new(["param", "estimate", "std error", &format!("{:.0}% CI", 100.0 * level)]);
        for (k, name) in names.iter().enumerate() {
            t.row([
                name.clone(),
                num(row.params[k]),
                num(row.standard_errors[k]),
                interval(row.intervals[k].lower, row.intervals[k].upper),
            ]);
        }
        text.push_str(&t.render());
        text.push_str("covariance of sqrt(N)(a_hat - a):\n");
        let mut t = Table::new(std::iter::once(String::new()).chain(names.iter().cloned()));
        for (k, r) in row.covariance.iter().enumerate() {
            t.row(std::iter::once(names[k].clone()).chain(r.iter().map(|&v| sci(v))));
        }
        text.push_str(&t.render());
    }
    let report = FitReport {
        dataset: summary,
        level,
        fits: rows,
    };
    emit(&text, &report, args.common.out.as_deref())
}

#[derive(Serialize)]
struct CharacteristicRow {
    beta: f64,
    label: String,
    estimate: CharacteristicEstimate,
    bca: Option<BcaInterval>,
}

#[derive(Serialize)]
struct CharacterizeReport {
    dataset: DatasetSummary,
    level: f64,
    bootstrap_replicates: usize,
    seed: u64,
    rows: Vec<CharacteristicRow>,
}

pub fn characterize(args: &CharacterizeArgs) -> Result<()> {
    let dataset = load_input(&args.input)?;
    let level = args.common.level;
    let scope = scope_from(args.cause)?;
    let mut kinds = vec![Characteristic::Mttf];
    if let Some(t0) = args.t0 {
        kinds.push(characteristic_for(TargetKind::Reliability, Some(t0), args.alpha0)?);
    }
    kinds.push(characteristic_for(TargetKind::Quantile, None, args.alpha0)?);

    let mut rows = Vec::new();
    for &beta in &args.common.betas {
        let f = fit_beta(&dataset, beta)?;
        for &kind in &kinds {
            let estimate = characteristics::estimate(&f, &dataset.design, kind, scope, level)?;
            let bca = if args.replicates > 0 {
                let config = BootstrapConfig {
                    level,
                    ..BootstrapConfig::new(
                        args.replicates,
                        args.seed,
                        BootstrapTarget::Characteristic { kind, scope },
                    )
                };
                Some(bca_interval_for_fit(&f, &dataset.data, &dataset.design, &config)?.bca)
            } else {
                None
            };
            rows.push(CharacteristicRow {
                beta,
                label: kind.label(),
                estimate,
                bca,
            });
        }
    }

    let summary = DatasetSummary::new(&dataset);
    let mut text = summary.describe();
    if let Scope::Cause(j) = scope {
        let _ = writeln!(text, "marginal lifetime of risk {}", j + 1);
    }
    let mut header = vec![
        "beta",
        "quantity",
        "estimate",
        "std error",
        "direct CI",
        "transformed CI",
    ];
    if args.replicates > 0 {
        header.push("BCa CI");
    }
    let mut t = Table::new(header);
    for r in &rows {
        let e = &r.estimate;
        let mut cells = vec![
            r.beta.to_string(),
            r.label.clone(),
            num(e.value),
            num(e.std_error),
            interval(e.ci_direct.lower, e.ci_direct.upper),
            interval(e.ci_transformed.lower, e.ci_transformed.upper) + if e.transformed_fallback { "*" } else { "" },
        ];
        if let Some(b) = &r.bca {
            cells.push(interval(b.interval.lower, b.interval.upper));
        }
        t.row(cells);
    }
    text.push_str(&t.render());
    if rows.iter().any(|r| r.estimate.transformed_fallback) {
        text.push_str("* transformed interval undefined; direct interval shown\n");
    }
    let report = CharacterizeReport {
        dataset: summary,
        level,
        bootstrap_replicates: args.replicates,
        seed: args.seed,
        rows,
    };
    emit(&text, &report, args.common.out.as_deref())
}

#[derive(Serialize)]
struct BootstrapRow {
    beta: f64,
    bca: BcaInterval,
    discarded: usize,
    jackknife_skipped: u64,
}

#[derive(Serialize)]
struct BootstrapReport {
    dataset: DatasetSummary,
    target: BootstrapTarget,
    replicates: usize,
    seed: u64,
    level: f64,
    rows: Vec<BootstrapRow>,
}

pub fn bootstrap(args: &BootstrapArgs) -> Result<()> {
    let dataset = load_input(&args.input)?;
    let target = match args.target {
        TargetKind::Param => match args.param {
            Some(k) if k >= 1 => BootstrapTarget::Parameter(k - 1),
            _ => return Err(Error::InvalidParams("--param takes a one-based parameter index".into())),
        },
        kind => BootstrapTarget::Characteristic {
            kind: characteristic_for(kind, args.t0, args.alpha0)?,
            scope: scope_from(args.cause)?,
        },
    };
    let config = BootstrapConfig {
        level: args.common.level,
        ..BootstrapConfig::new(args.replicates, args.seed, target)
    };
    let mut rows = Vec::new();
    for &beta in &args.common.betas {
        let r = bca_interval(&dataset.data, &dataset.design, beta, &config)?;
        rows.push(BootstrapRow {
            beta,
            bca: r.bca,
            discarded: r.discarded,
            jackknife_skipped: r.jackknife_skipped,
        });
    }

    let summary = DatasetSummary::new(&dataset);
    let mut text = summary.describe();
    let target_label = match target {
        BootstrapTarget::Characteristic { kind, .. } => kind.label(),
        BootstrapTarget::Parameter(k) => param_names(dataset.design.num_risks())[k].clone(),
    };
    let _ = writeln!(
        text,
        "BCa bootstrap of {target_label}: B = {}, seed = {}",
        args.replicates, args.seed
    );
    let mut t = Table::new([
        "beta",
        "estimate",
        "BCa CI",
        "z0",
        "acceleration",
        "orders",
        "discarded",
    ]);
    for r in &rows {
        let b = &r.bca;
        t.row([
            r.beta.to_string(),
            num(b.estimate),
            interval(b.interval.lower, b.interval.upper) + if b.percentile_fallback { "*" } else { "" },
            num(b.bias_correction),
            num(b.acceleration),
            format!("{}..{}", b.lower_index, b.upper_index),
            r.discarded.to_string(),
        ]);
    }
    text.push_str(&t.render());
    if rows.iter().any(|r| r.bca.percentile_fallback) {
        text.push_str("* bias correction infinite; plain percentile interval shown\n");
    }
    let report = BootstrapReport {
        dataset: summary,
        target,
        replicates: args.replicates,
        seed: args.seed,
        level: args.common.level,
        rows,
    };
    emit(&text, &report, args.common.out.as_deref())
}

#[derive(Serialize)]
struct SensitivityReport {
    params: Vec<f64>,
    gross_error: SensitivityCurve,
    self_standardized: SensitivityCurve,
}

pub fn sensitivity(args: &SensitivityArgs) -> Result<()> {
    let (design, params, source): (StepStressDesign, ModelParams, &str) = match &args.scenario {
        Some(path) => {
            let s = load_scenario(path)?.scenario;
            (s.design, s.true_params, "scenario true parameters")
        }
        None => {
            let dataset = load(
                args.bundled,
                args.dataset.as_deref(),
                args.time_scale,
                args.normalize_stress,
            )?;
            let f = fit_beta(&dataset, 0.0)?;
            (dataset.design, f.params, "beta = 0 fit")
        }
    };
    let betas: Vec<f64> = if args.betas.is_empty() {
        (0..=10).map(|i| i as f64 / 10.0).collect()
    } else {
        args.betas.clone()
    };
    let gross = sensitivity_curve(&params, &design, &betas, SensitivityKind::GrossError)?;
    let standardized = sensitivity_curve(&params, &design, &betas, SensitivityKind::SelfStandardized)?;

    let names = param_names(design.num_risks());
    let shown: Vec<String> = names
        .iter()
        .zip(params.as_slice())
        .map(|(n, v)| format!("{n} = {v:.4}"))
        .collect();
    let mut text = format!("model at {source}: {}\n", shown.join(", "));
    let mut t = Table::new(["beta", "gross error", "worst cell", "self-standardized", "worst cell"]);
    for (i, beta) in betas.iter().enumerate() {
        t.row([
            beta.to_string(),
            num(gross.values[i]),
            cell_label(&design, gross.worst_cells[i]),
            num(standardized.values[i]),
            cell_label(&design, standardized.worst_cells[i]),
        ]);
    }
    text.push_str(&t.render());
    let report = SensitivityReport {
        params: params.as_slice().to_vec(),
        gross_error: gross,
        self_standardized: standardized,
    };
    emit(&text, &report, args.out.as_deref())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let file = load_scenario(&args.scenario)?;
    let mut scenario = file.scenario;
    if !args.betas.is_empty() {
        scenario.betas = args.betas.clone();
    }
    if let Some(reps) = args.reps {
        scenario.replications = reps;
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    if let Some(b) = args.replicates {
        scenario.bootstrap_replicates = b;
    }
    if let Some(level) = args.level {
        scenario.level = level;
    }
    let characteristic = characteristic_for(args.coverage_of, args.t0.or(Some(scenario.mission_time)), args.alpha0)?;
    let mut methods = vec![IntervalMethod::Direct, IntervalMethod::Transformed];
    if args.bca {
        methods.push(IntervalMethod::Bca);
    }

    let mut report = SimulationReport::default();
    for &eps in &file.epsilons {
        let s = scenario.clone().with_contamination(eps);
        if matches!(args.study, Study::Mse | Study::Both) {
            report.extend(run_mse_study(&s)?);
        }
        if matches!(args.study, Study::Coverage | Study::Both) {
            report.extend(run_coverage_study(&s, characteristic, &methods)?);
        }
    }

    let mut text = format!(
        "N = {}, {} replications, seed {}, contamination cells {}\n",
        scenario.sample_size,
        scenario.replications,
        scenario.seed,
        scenario
            .contamination_cells
            .iter()
            .map(|&(l, j)| format!("({}, {})", l + 1, j + 1))
            .collect::<Vec<_>>()
            .join(" ")
    );
    if !report.mse.is_empty() {
        let names = param_names(scenario.design.num_risks());
        let mut header = vec!["epsilon".to_string(), "beta".into()];
        header.extend(names.iter().map(|n| format!("MSE {n}")));
        header.extend([
            "MSE MTTF".into(),
            "MSE median".into(),
            format!("MSE R({})", scenario.mission_time),
            "used".into(),
        ]);
        let mut t = Table::new(header);
        for r in &report.mse {
            let mut cells = vec![r.epsilon.to_string(), r.beta.to_string()];
            cells.extend(r.params.iter().map(|&v| sci(v)));
            cells.extend([sci(r.mttf), sci(r.median), sci(r.reliability)]);
            cells.push(r.replicates_used.to_string());
            t.row(cells);
        }
        text.push('\n');
        text.push_str(&t.render());
    }
    if !report.coverage.is_empty() {
        let _ = writeln!(
            text,
            "\ncoverage of {} intervals at level {}",
            characteristic.label(),
            scenario.level
        );
        let mut t = Table::new(["epsilon", "beta", "method", "coverage", "mean width", "used"]);
        for r in &report.coverage {
            t.row([
                r.epsilon.to_string(),
                r.beta.to_string(),
                r.method.label().to_string(),
                format!("{:.3}", r.coverage),
                num(r.mean_width),
                r.replicates_used.to_string(),
            ]);
        }
        text.push_str(&t.render());
    }
    emit(&text, &report, args.out.as_deref())
}
