//! Plain-text dataset and scenario files, Arrhenius stress levels, JSON reports
//! and the bundled electronic-device data.
//!
//! A dataset file has `key = value` header lines followed by comma-separated
//! rows `IT, n_1, …, n_R`; `#` starts a comment. Survivors are `N − Σ counts`.
//!
//! ```text
//! N = 35
//! tau1 = 5
//! tau2 = 6
//! stress = 0, 1
//! x0 = 0
//! risks = 2
//! 2, 2, 5
//! 3, 6, 0
//! ```
//!
//! Instead of `stress`/`x0`, `temperatures = T1, T2` with
//! `reference_temperature = T0` derives the stress levels from the Arrhenius law.

use std::fmt::Write as _;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimation::CountData;
use crate::model::{ModelParams, StepStressDesign};
use crate::simulation::SimulationScenario;

/// Boltzmann constant in eV/K at the precision used for the bundled analysis.
pub const BOLTZMANN_EV: f64 = 8.36e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrheniusSpec {
    /// Normal operating temperature `T0` in Kelvin.
    pub reference: f64,
    /// Test temperatures in Kelvin, in stress order.
    pub levels: Vec<f64>,
    pub boltzmann: f64,
}

impl ArrheniusSpec {
    pub fn new(reference: f64, levels: Vec<f64>) -> Self {
        Self {
            reference,
            levels,
            boltzmann: BOLTZMANN_EV,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.reference > 0.0) || self.levels.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
            return Err(Error::InvalidDesign("temperatures must be positive".into()));
        }
        if !(self.boltzmann > 0.0) {
            return Err(Error::InvalidDesign("Boltzmann constant must be positive".into()));
        }
        Ok(())
    }
}

/// `x = −(1/K)(1/T0 − 1/T)`; zero at the reference temperature.
pub fn arrhenius_stress_at(spec: &ArrheniusSpec, temperature: f64) -> f64 {
    // + 0.0 turns the -0.0 at the reference temperature into 0.0
    -(1.0 / spec.reference - 1.0 / temperature) / spec.boltzmann + 0.0
}

/// Stress levels for `spec.levels`; with `normalize`, divided by the value of
/// the last test level so that it maps to 1.
pub fn arrhenius_stress(spec: &ArrheniusSpec, normalize: bool) -> Result<Vec<f64>> {
    spec.validate()?;
    let raw: Vec<f64> = spec.levels.iter().map(|&t| arrhenius_stress_at(spec, t)).collect();
    if !normalize {
        return Ok(raw);
    }
    let scale = *raw
        .last()
        .ok_or_else(|| Error::InvalidDesign("no test temperatures".into()))?;
    if scale == 0.0 {
        return Err(Error::InvalidDesign(
            "last test temperature equals the reference; cannot normalize".into(),
        ));
    }
    Ok(raw.into_iter().map(|x| x / scale + 0.0).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StressSource {
    Levels,
    Arrhenius { spec: ArrheniusSpec, normalized: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub design: StepStressDesign,
    pub data: CountData,
    pub stress_source: StressSource,
    /// Factor the file's times were divided by.
    pub time_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptions {
    /// Divide every time in the file by this factor.
    pub time_scale: f64,
    /// Overrides the file's `normalize_stress` setting for temperature headers.
    pub normalize_stress: Option<bool>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            time_scale: 1.0,
            normalize_stress: None,
        }
    }
}

fn parse_f64(line: usize, field: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("not a number: `{}`", field.trim())))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("not a finite number: `{}`", field.trim())));
    }
    Ok(v)
}

fn parse_u64(line: usize, field: &str) -> Result<u64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("not a nonnegative integer: `{}`", field.trim())))
}

fn parse_list(line: usize, value: &str) -> Result<Vec<f64>> {
    value.split(',').map(|f| parse_f64(line, f)).collect()
}

fn parse_bool(line: usize, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(Error::parse(line, format!("expected true or false, got `{other}`"))),
    }
}

/// Non-empty lines with comments removed, numbered from 1.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

#[derive(Default)]
struct Header {
    n: Option<(usize, u64)>,
    tau1: Option<(usize, f64)>,
    tau2: Option<(usize, f64)>,
    stress: Option<(usize, Vec<f64>)>,
    x0: Option<(usize, f64)>,
    risks: Option<(usize, u64)>,
    temperatures: Option<(usize, Vec<f64>)>,
    reference_temperature: Option<(usize, f64)>,
    normalize: Option<bool>,
}

fn duplicate<T>(slot: &Option<T>, line: usize, key: &str) -> Result<()> {
    if slot.is_some() {
        return Err(Error::parse(line, format!("duplicate header `{key}`")));
    }
    Ok(())
}

pub fn parse_dataset(text: &str, options: &LoadOptions) -> Result<Dataset> {
    if !(options.time_scale > 0.0) || !options.time_scale.is_finite() {
        return Err(Error::InvalidDesign(format!(
            "time scale must be positive, got {}",
            options.time_scale
        )));
    }
    let mut h = Header::default();
    let mut rows: Vec<(usize, f64, Vec<u64>)> = Vec::new();
    let mut last_line = 0;

    for (ln, line) in content_lines(text) {
        last_line = ln;
        if let Some((key, value)) = line.split_once('=') {
            if !rows.is_empty() {
                return Err(Error::parse(ln, "header line after data rows"));
            }
            let key = key.trim();
            match key {
                "N" => {
                    duplicate(&h.n, ln, key)?;
                    h.n = Some((ln, parse_u64(ln, value)?));
                }
                "tau1" => {
                    duplicate(&h.tau1, ln, key)?;
                    h.tau1 = Some((ln, parse_f64(ln, value)?));
                }
                "tau2" => {
                    duplicate(&h.tau2, ln, key)?;
                    h.tau2 = Some((ln, parse_f64(ln, value)?));
                }
                "stress" => {
                    duplicate(&h.stress, ln, key)?;
                    h.stress = Some((ln, parse_list(ln, value)?));
                }
                "x0" => {
                    duplicate(&h.x0, ln, key)?;
                    h.x0 = Some((ln, parse_f64(ln, value)?));
                }
                "risks" => {
                    duplicate(&h.risks, ln, key)?;
                    h.risks = Some((ln, parse_u64(ln, value)?));
                }
                "temperatures" => {
                    duplicate(&h.temperatures, ln, key)?;
                    h.temperatures = Some((ln, parse_list(ln, value)?));
                }
                "reference_temperature" => {
                    duplicate(&h.reference_temperature, ln, key)?;
                    h.reference_temperature = Some((ln, parse_f64(ln, value)?));
                }
                "normalize_stress" => {
                    duplicate(&h.normalize, ln, key)?;
                    h.normalize = Some(parse_bool(ln, value)?);
                }
                other => return Err(Error::parse(ln, format!("unknown header key `{other}`"))),
            }
        } else {
            let mut fields = line.split(',');
            let it = parse_f64(ln, fields.next().unwrap_or(""))?;
            let counts = fields.map(|f| parse_u64(ln, f)).collect::<Result<Vec<_>>>()?;
            if counts.is_empty() {
                return Err(Error::parse(
                    ln,
                    "data row needs an inspection time and at least one count",
                ));
            }
            rows.push((ln, it / options.time_scale, counts));
        }
    }

    let eof = last_line + 1;
    let missing = |key: &str| Error::parse(eof, format!("missing header `{key}`"));
    let (n_line, n) = h.n.ok_or_else(|| missing("N"))?;
    let (_, tau1) = h.tau1.ok_or_else(|| missing("tau1"))?;
    let (t2_line, tau2) = h.tau2.ok_or_else(|| missing("tau2"))?;
    let (tau1, tau2) = (tau1 / options.time_scale, tau2 / options.time_scale);
    if rows.is_empty() {
        return Err(Error::parse(eof, "no data rows"));
    }
    let num_risks = rows[0].2.len();
    if let Some((ln, r)) = h.risks {
        if r as usize != num_risks {
            return Err(Error::parse(
                ln,
                format!("header declares {r} risks but rows have {num_risks} counts"),
            ));
        }
    }
    if let Some((ln, _, c)) = rows.iter().find(|(_, _, c)| c.len() != num_risks) {
        return Err(Error::parse(
            *ln,
            format!("expected {num_risks} counts, found {}", c.len()),
        ));
    }

    let (x1, x2, x0, stress_source) = match (h.stress, h.temperatures) {
        (Some(_), Some((ln, _))) => return Err(Error::parse(ln, "give either `stress` or `temperatures`, not both")),
        (None, None) => return Err(missing("stress")),
        (Some((ln, s)), None) => {
            if s.len() != 2 {
                return Err(Error::parse(ln, format!("expected two stress levels, got {}", s.len())));
            }
            let (_, x0) = h.x0.ok_or_else(|| missing("x0"))?;
            (s[0], s[1], x0, StressSource::Levels)
        }
        (None, Some((ln, temps))) => {
            if temps.len() != 2 {
                return Err(Error::parse(
                    ln,
                    format!("expected two temperatures, got {}", temps.len()),
                ));
            }
            if let Some((xl, _)) = h.x0 {
                return Err(Error::parse(xl, "`x0` is implied by `reference_temperature`"));
            }
            let (_, t0) = h
                .reference_temperature
                .ok_or_else(|| missing("reference_temperature"))?;
            let normalized = options.normalize_stress.or(h.normalize).unwrap_or(true);
            let spec = ArrheniusSpec::new(t0, temps);
            let xs = arrhenius_stress(&spec, normalized).map_err(|e| Error::parse(ln, e.to_string()))?;
            (xs[0], xs[1], 0.0, StressSource::Arrhenius { spec, normalized })
        }
    };

    let its: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let design = StepStressDesign::new((x1, x2), tau1, tau2, its, num_risks, x0)
        .map_err(|e| Error::parse(t2_line, e.to_string()))?;
    let counts: Vec<Vec<u64>> = rows.into_iter().map(|r| r.2).collect();
    let data = CountData::with_total(counts, n).map_err(|e| Error::parse(n_line, e.to_string()))?;
    Ok(Dataset {
        design,
        data,
        stress_source,
        time_scale: options.time_scale,
    })
}

pub fn load_dataset(path: impl AsRef<Path>, options: &LoadOptions) -> Result<Dataset> {
    parse_dataset(&std::fs::read_to_string(path)?, options)
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

/// Serializes a dataset in file format at the dataset's own time scale.
pub fn write_dataset(dataset: &Dataset) -> String {
    let d = &dataset.design;
    let scale = dataset.time_scale;
    let mut out = String::new();
    let _ = writeln!(out, "N = {}", dataset.data.total());
    let _ = writeln!(out, "tau1 = {}", d.tau1() * scale);
    let _ = writeln!(out, "tau2 = {}", d.tau2() * scale);
    match &dataset.stress_source {
        StressSource::Levels => {
            let _ = writeln!(out, "stress = {}", join(&[d.x1(), d.x2()]));
            let _ = writeln!(out, "x0 = {}", d.x0());
        }
        StressSource::Arrhenius { spec, normalized } => {
            let _ = writeln!(out, "temperatures = {}", join(&spec.levels));
            let _ = writeln!(out, "reference_temperature = {}", spec.reference);
            let _ = writeln!(out, "normalize_stress = {normalized}");
        }
    }
    let _ = writeln!(out, "risks = {}", d.num_risks());
    for (l, it) in d.inspection_times().iter().enumerate() {
        let counts: Vec<String> = (0..d.num_risks())
            .map(|j| dataset.data.count(l, j).to_string())
            .collect();
        let _ = writeln!(out, "{}, {}", it * scale, counts.join(", "));
    }
    out
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_dataset(dataset))?;
    Ok(())
}

/// Scenario file contents: the scenario plus the contamination fractions to sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: SimulationScenario,
    pub epsilons: Vec<f64>,
}

/// Parses a `key = value` scenario file. Unset keys keep the reference
/// scenario's values; intervals and risks are one-based.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    let base = SimulationScenario::reference();
    let d = &base.design;
    let mut stress = (d.x1(), d.x2());
    let (mut tau1, mut tau2, mut x0) = (d.tau1(), d.tau2(), d.x0());
    let mut its = d.inspection_times().to_vec();
    let mut risks = d.num_risks();
    let mut params = base.true_params.as_slice().to_vec();
    let mut intervals: Option<Vec<usize>> = None;
    let mut risk_filter: Option<Vec<usize>> = None;
    let mut epsilons = vec![base.contamination];
    let mut s = base.clone();
    let mut last = 0;

    let index_list = |ln: usize, v: &str| -> Result<Vec<usize>> {
        v.split(',')
            .map(|f| {
                let k = parse_u64(ln, f)? as usize;
                if k == 0 {
                    return Err(Error::parse(ln, "indices are one-based"));
                }
                Ok(k - 1)
            })
            .collect()
    };

    for (ln, line) in content_lines(text) {
        last = ln;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(ln, "expected `key = value`"))?;
        match key.trim() {
            "stress" => {
                let v = parse_list(ln, value)?;
                if v.len() != 2 {
                    return Err(Error::parse(ln, "expected two stress levels"));
                }
                stress = (v[0], v[1]);
            }
            "tau1" => tau1 = parse_f64(ln, value)?,
            "tau2" => tau2 = parse_f64(ln, value)?,
            "x0" => x0 = parse_f64(ln, value)?,
            "inspection_times" => its = parse_list(ln, value)?,
            "risks" => risks = parse_u64(ln, value)? as usize,
            "params" => params = parse_list(ln, value)?,
            "N" => s.sample_size = parse_u64(ln, value)?,
            "epsilon" => epsilons = parse_list(ln, value)?,
            "contamination_intervals" => intervals = Some(index_list(ln, value)?),
            "contamination_risks" => risk_filter = Some(index_list(ln, value)?),
            "replications" => s.replications = parse_u64(ln, value)? as usize,
            "betas" => s.betas = parse_list(ln, value)?,
            "seed" => s.seed = parse_u64(ln, value)?,
            "max_regenerations" => s.max_regenerations = parse_u64(ln, value)? as usize,
            "mission_time" => s.mission_time = parse_f64(ln, value)?,
            "bootstrap_replicates" => s.bootstrap_replicates = parse_u64(ln, value)? as usize,
            "level" => s.level = parse_f64(ln, value)?,
            other => return Err(Error::parse(ln, format!("unknown scenario key `{other}`"))),
        }
    }
    let at_end = |e: Error| Error::parse(last + 1, e.to_string());
    s.design = StepStressDesign::new(stress, tau1, tau2, its, risks, x0).map_err(at_end)?;
    s.true_params = ModelParams::new(params).map_err(at_end)?;
    let intervals = intervals.unwrap_or_else(|| {
        let mut seen: Vec<usize> = base.contamination_cells.iter().map(|c| c.0).collect();
        seen.dedup();
        seen
    });
    let risk_list = risk_filter.unwrap_or_else(|| (0..risks).collect());
    s.contamination_cells = intervals
        .iter()
        .flat_map(|&l| risk_list.iter().map(move |&j| (l, j)))
        .collect();
    for &eps in &epsilons {
        s.contamination = eps;
        s.validate().map_err(at_end)?;
    }
    s.contamination = epsilons[0];
    Ok(ScenarioFile { scenario: s, epsilons })
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile> {
    parse_scenario(&std::fs::read_to_string(path)?)
}

pub fn to_json<T: Serialize>(report: &T) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::InvalidData(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
}

pub fn save_report<T: Serialize>(report: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut text = to_json(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_report<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}

/// Bundled interval-censored solar lighting device data (35 units, two failure modes).
pub mod bundled {
    use super::*;

    /// Second inspection at 300 hours.
    pub const ELECTRONIC_DEVICES: &str = include_str!("../data/electronic_devices.txt");
    /// Second inspection at 400 hours.
    pub const ELECTRONIC_DEVICES_IT400: &str = include_str!("../data/electronic_devices_it400.txt");

    pub fn electronic_devices() -> Dataset {
        parse_dataset(ELECTRONIC_DEVICES, &LoadOptions::default()).expect("bundled dataset parses")
    }

    pub fn electronic_devices_it400() -> Dataset {
        parse_dataset(ELECTRONIC_DEVICES_IT400, &LoadOptions::default()).expect("bundled dataset parses")
    }
}
