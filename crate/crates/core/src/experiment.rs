//! Batch experiment runner: config parsing, frequency sweeps, plot-ready CSV
//! output and the quantum/classical cross-check.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bethe::{bethe_amplitudes, extract_rapidities, refine_static_roots, RapiditySet, Root};
use crate::classical::{continue_tracks, integrate_flow, pair_roots, FlowOptions};
use crate::error::{Error, HaltReason, Result};
use crate::propagator::{
    convergence_check, run_from, run_with, DriveProtocol, RunOptions, StroboscopicRecord, TimeSample,
    DEFAULT_STEPS_PER_CYCLE,
};
use crate::sector::{build_hamiltonian, SectorParams};
use crate::spectral::{diagonalize, ground_state};
use crate::thermo::{cycle_weights, fit_boltzmann, BoltzmannFit, WeightDistribution};

pub const CONFIG_FORMAT: &str = "tavis-config/1";
pub const OUTPUT_FORMAT: &str = "tavis-output/1";
/// Pass threshold for paired-root distances in the cross-check, in units of g.
pub const CROSSCHECK_TOL: f64 = 1e-4;
/// Relative tolerance of the classical integrator during the cross-check.
pub const CROSSCHECK_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriveKind {
    Cosine,
    Constant,
}

/// Experiment description. Serialized as flat TOML:
///
/// ```toml
/// format = "tavis-config/1"
/// spin = 6.0
/// excitations = 4
/// coupling = 1.0
/// delta0 = 5.0
/// frequencies = [3.57, 3.68, 3.75]
/// cycles = 4000
/// steps_per_cycle = 8000
/// ```
///
/// The remaining keys are optional; see the field defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_format")]
    pub format: String,
    pub spin: f64,
    pub excitations: usize,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    pub delta0: f64,
    pub frequencies: Vec<f64>,
    pub cycles: usize,
    #[serde(default = "default_steps")]
    pub steps_per_cycle: usize,
    #[serde(default = "default_drive")]
    pub drive: DriveKind,
    /// Within-cycle samples written to the time series; must divide `steps_per_cycle`.
    #[serde(default = "default_samples")]
    pub samples_per_cycle: usize,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Seed for randomized modes (`selftest`).
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "yes")]
    pub emit_timeseries: bool,
    #[serde(default = "yes")]
    pub emit_strobe: bool,
    #[serde(default = "yes")]
    pub emit_weights: bool,
    #[serde(default)]
    pub emit_classical_crosscheck: bool,
    #[serde(default = "default_crosscheck_cycles")]
    pub crosscheck_cycles: usize,
}

fn default_format() -> String {
    CONFIG_FORMAT.to_string()
}
fn default_coupling() -> f64 {
    1.0
}
fn default_steps() -> usize {
    DEFAULT_STEPS_PER_CYCLE
}
fn default_drive() -> DriveKind {
    DriveKind::Cosine
}
fn default_samples() -> usize {
    40
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}
fn yes() -> bool {
    true
}
fn default_crosscheck_cycles() -> usize {
    5
}

impl ExperimentConfig {
    /// The three-frequency sweep of the reference study.
    pub fn reference() -> Self {
        Self {
            format: default_format(),
            spin: 6.0,
            excitations: 4,
            coupling: 1.0,
            delta0: 5.0,
            frequencies: vec![3.57, 3.68, 3.75],
            cycles: 4000,
            steps_per_cycle: default_steps(),
            drive: DriveKind::Cosine,
            samples_per_cycle: default_samples(),
            output_dir: default_output(),
            seed: 0,
            emit_timeseries: true,
            emit_strobe: true,
            emit_weights: true,
            emit_classical_crosscheck: false,
            crosscheck_cycles: default_crosscheck_cycles(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CONFIG_FORMAT {
            return Err(Error::Config(format!(
                "unsupported format {:?}, expected {CONFIG_FORMAT:?}",
                self.format
            )));
        }
        if self.frequencies.is_empty() {
            return Err(Error::Config("at least one frequency is required".into()));
        }
        if let Some(w) = self.frequencies.iter().find(|w| **w <= 0.0 || !w.is_finite()) {
            return Err(Error::Config(format!("frequencies must be positive, got {w}")));
        }
        if self.steps_per_cycle == 0 {
            return Err(Error::Config("steps_per_cycle must be positive".into()));
        }
        if self.samples_per_cycle == 0 || self.steps_per_cycle % self.samples_per_cycle != 0 {
            return Err(Error::Config("samples_per_cycle must divide steps_per_cycle".into()));
        }
        if self.cycles == 0 && self.emit_weights {
            return Err(Error::EmptyAverage);
        }
        self.sector(self.frequencies[0])?;
        Ok(())
    }

    pub fn sector(&self, omega: f64) -> Result<SectorParams<f64>> {
        SectorParams::from_spin(self.spin, self.excitations, self.coupling, self.delta0, omega)
    }

    pub fn drive(&self, omega: f64) -> DriveProtocol<f64> {
        match self.drive {
            DriveKind::Cosine => DriveProtocol::cosine(self.delta0, omega),
            DriveKind::Constant => DriveProtocol::constant(self.delta0, omega),
        }
    }
}

/// Everything computed for one drive frequency.
#[derive(Debug, Clone)]
pub struct FrequencyResult {
    pub omega: f64,
    pub records: Vec<StroboscopicRecord<f64>>,
    pub timeseries: Vec<TimeSample<f64>>,
    pub ground_energy: f64,
    pub eigenvalues: Vec<f64>,
    /// `None` when `cycles = 0`.
    pub weights: Option<WeightDistribution<f64>>,
    pub fit: Option<BoltzmannFit<f64>>,
    pub nb_min: f64,
    pub nb_max: f64,
}

impl FrequencyResult {
    /// Cycle-averaged energy above the ground state of `H(Δ₀)`.
    pub fn absorbed_energy(&self) -> Option<f64> {
        self.weights.as_ref().map(|w| w.mean_energy - self.ground_energy)
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.records
            .iter()
            .map(|r| (r.state.norm() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Boltzmann fit that degrades to the limiting distribution when the mean
/// energy sits on a spectral edge.
fn fit_or_saturate(w: &WeightDistribution<f64>) -> Result<BoltzmannFit<f64>> {
    match fit_boltzmann(w) {
        Err(Error::SaturatedFit { positive }) => {
            let beta = if positive { f64::INFINITY } else { f64::NEG_INFINITY };
            let mut weights = vec![0.0; w.c.len()];
            let edge = if positive { 0 } else { w.c.len() - 1 };
            weights[edge] = 1.0;
            let l1_distance = w.c.iter().zip(&weights).map(|(a, b)| (a - b).abs()).sum();
            Ok(BoltzmannFit {
                beta,
                weights,
                l1_distance,
                kl_divergence: f64::INFINITY,
            })
        }
        other => other,
    }
}

/// Propagates one frequency and reduces it to weights, fit and `N_b` range.
/// Time-series samples are collected when `sample` is set.
pub fn simulate_frequency(config: &ExperimentConfig, omega: f64, sample: bool) -> Result<FrequencyResult> {
    let params = config.sector(omega)?;
    let drive = config.drive(omega);
    let stride = config.steps_per_cycle / config.samples_per_cycle;
    let opts = RunOptions {
        steps_per_cycle: config.steps_per_cycle,
        sample_stride: Some(stride),
    };
    let mut timeseries = Vec::new();
    let mut nb_min = f64::INFINITY;
    let mut nb_max = f64::NEG_INFINITY;
    let records = run_with(&params, &drive, config.cycles, opts, |s| {
        nb_min = nb_min.min(s.boson_number);
        nb_max = nb_max.max(s.boson_number);
        if sample {
            timeseries.push(*s);
        }
    })?;
    // stroboscopic times carry Δ(t_p) = Δ₀ for the cosine drive
    let spectrum = diagonalize(&build_hamiltonian(&params, drive.delta(0.0)));
    let (weights, fit) = if config.cycles > 0 {
        let w = cycle_weights(&records, &spectrum)?;
        let f = fit_or_saturate(&w)?;
        (Some(w), Some(f))
    } else {
        (None, None)
    };
    Ok(FrequencyResult {
        omega,
        records,
        timeseries,
        ground_energy: spectrum.values[0],
        eigenvalues: spectrum.values.clone(),
        weights,
        fit,
        nb_min,
        nb_max,
    })
}

/// Stroboscopic rapidities with track indices continued across cycles.
pub fn stroboscopic_rapidities(
    records: &[StroboscopicRecord<f64>],
    params: &SectorParams<f64>,
) -> Result<Vec<RapiditySet<f64>>> {
    let mut out: Vec<RapiditySet<f64>> = Vec::with_capacity(records.len());
    for r in records {
        let set = extract_rapidities(&r.state, params)?;
        let set = match out.last() {
            Some(prev) => continue_tracks(prev, &set),
            None => set,
        };
        out.push(set);
    }
    Ok(out)
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// Name fragment for a frequency, e.g. `3.57`.
pub fn omega_tag(omega: f64) -> String {
    format!("{omega}")
}

fn header(config: &ExperimentConfig, panel: &str, extra: &[(&str, String)]) -> String {
    let mut h = String::new();
    let _ = writeln!(h, "# format: {OUTPUT_FORMAT}");
    let _ = writeln!(h, "# panel: {panel}");
    for line in config.to_toml().lines() {
        let _ = writeln!(h, "# config: {line}");
    }
    for (k, v) in extra {
        let _ = writeln!(h, "# {k}: {v}");
    }
    h
}

fn write_file(dir: &Path, name: &str, body: String) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

fn write_timeseries(config: &ExperimentConfig, dir: &Path, res: &FrequencyResult) -> Result<PathBuf> {
    let mut s = header(config, "timeseries", &[("omega", fmt_f64(res.omega))]);
    s.push_str("t,N_b,mean_energy,norm_defect\n");
    for x in &res.timeseries {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(x.t),
            fmt_f64(x.boson_number),
            fmt_f64(x.mean_energy),
            fmt_f64(x.norm_defect)
        );
    }
    write_file(dir, &format!("timeseries_{}.csv", omega_tag(res.omega)), s)
}

fn write_strobe(config: &ExperimentConfig, dir: &Path, res: &FrequencyResult) -> Result<PathBuf> {
    let params = config.sector(res.omega)?;
    let sets = stroboscopic_rapidities(&res.records, &params)?;
    let mut s = header(config, "strobe", &[("omega", fmt_f64(res.omega))]);
    s.push_str("p,alpha,re_lambda,im_lambda,diverged\n");
    for (rec, set) in res.records.iter().zip(&sets) {
        for (alpha, root) in set.roots.iter().enumerate() {
            let (re, im, flag) = match root {
                Root::Finite(z) => (fmt_f64(z.re), fmt_f64(z.im), 0),
                Root::AtInfinity => ("inf".to_string(), "nan".to_string(), 1),
                Root::AtZero => ("0".to_string(), "0".to_string(), 1),
            };
            let _ = writeln!(s, "{},{alpha},{re},{im},{flag}", rec.p);
        }
    }
    write_file(dir, &format!("strobe_{}.csv", omega_tag(res.omega)), s)
}

fn write_weights(config: &ExperimentConfig, dir: &Path, res: &FrequencyResult) -> Result<PathBuf> {
    let (w, fit) = match (&res.weights, &res.fit) {
        (Some(w), Some(f)) => (w, f),
        _ => return Err(Error::EmptyAverage),
    };
    let extra = [
        ("omega", fmt_f64(res.omega)),
        ("beta", fmt_f64(fit.beta)),
        ("l1_distance", fmt_f64(fit.l1_distance)),
        ("kl_divergence", fmt_f64(fit.kl_divergence)),
        ("mean_energy", fmt_f64(w.mean_energy)),
        ("cycles_averaged", w.cycles.to_string()),
    ];
    let mut s = header(config, "weights", &extra);
    s.push_str("alpha,E_alpha,c_alpha,c_boltzmann\n");
    for (a, ((e, c), b)) in w.eigenvalues.iter().zip(&w.c).zip(&fit.weights).enumerate() {
        let _ = writeln!(s, "{a},{},{},{}", fmt_f64(*e), fmt_f64(*c), fmt_f64(*b));
    }
    write_file(dir, &format!("weights_{}.csv", omega_tag(res.omega)), s)
}

fn write_summary(config: &ExperimentConfig, dir: &Path, results: &[FrequencyResult]) -> Result<PathBuf> {
    let mut s = header(config, "summary", &[]);
    s.push_str("omega,nb_min,nb_max,ground_energy,mean_energy,absorbed_energy,beta,l1_distance,kl_divergence,max_norm_defect\n");
    for r in results {
        let na = || "nan".to_string();
        let mean = r.weights.as_ref().map(|w| fmt_f64(w.mean_energy)).unwrap_or_else(na);
        let absorbed = r.absorbed_energy().map(fmt_f64).unwrap_or_else(na);
        let (beta, l1, kl) = match &r.fit {
            Some(f) => (fmt_f64(f.beta), fmt_f64(f.l1_distance), fmt_f64(f.kl_divergence)),
            None => (na(), na(), na()),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{mean},{absorbed},{beta},{l1},{kl},{}",
            fmt_f64(r.omega),
            fmt_f64(r.nb_min),
            fmt_f64(r.nb_max),
            fmt_f64(r.ground_energy),
            fmt_f64(r.max_norm_defect())
        );
    }
    write_file(dir, "summary.csv", s)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let probe = dir.join(".write-probe");
    fs::write(&probe, b"")?;
    fs::remove_file(probe)?;
    Ok(())
}

/// Outcome of [`run_experiment`].
#[derive(Debug)]
pub struct ExperimentOutput {
    pub results: Vec<FrequencyResult>,
    pub files: Vec<PathBuf>,
    pub crosschecks: Vec<CrosscheckReport>,
}

/// Runs every frequency (in parallel) and writes the requested CSV panels
/// plus `summary.csv` into `config.output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let dir = config.output_dir.clone();
    prepare_dir(&dir)?;
    let per_freq: Vec<Result<(FrequencyResult, Vec<PathBuf>)>> = config
        .frequencies
        .par_iter()
        .map(|&omega| {
            let res = simulate_frequency(config, omega, config.emit_timeseries)?;
            let mut files = Vec::new();
            if config.emit_timeseries {
                files.push(write_timeseries(config, &dir, &res)?);
            }
            if config.emit_strobe {
                files.push(write_strobe(config, &dir, &res)?);
            }
            if config.emit_weights {
                files.push(write_weights(config, &dir, &res)?);
            }
            Ok((res, files))
        })
        .collect();
    let mut results = Vec::new();
    let mut files = Vec::new();
    for r in per_freq {
        let (res, f) = r?;
        results.push(res);
        files.extend(f);
    }
    files.push(write_summary(config, &dir, &results)?);
    let crosschecks = if config.emit_classical_crosscheck {
        let reports = crosscheck_classical(config, config.crosscheck_cycles)?;
        files.extend(reports.iter().filter_map(|r| r.file.clone()));
        reports
    } else {
        Vec::new()
    };
    Ok(ExperimentOutput {
        results,
        files,
        crosschecks,
    })
}

/// Per-frequency result of the quantum/classical comparison.
#[derive(Debug, Clone)]
pub struct CrosscheckReport {
    pub omega: f64,
    /// `(p, max paired-root distance)` for each compared cycle.
    pub distances: Vec<(usize, f64)>,
    pub max_distance: f64,
    /// Set when the classical integrator stopped early.
    pub halt: Option<(HaltReason, f64)>,
    pub passed: bool,
    pub file: Option<PathBuf>,
}

/// Compares extracted rapidities of the propagated state with the classical
/// rapidity flow, both started from the (Newton-refined) ground-state roots.
pub fn crosscheck_frequency(config: &ExperimentConfig, omega: f64, horizon_cycles: usize) -> Result<CrosscheckReport> {
    let params = config.sector(omega)?;
    params.require_rapidities()?;
    let delta_start = config.drive(omega).delta(0.0);
    let initial = extract_rapidities(&ground_state(&params, delta_start), &params)?;
    let (initial, _) = refine_static_roots(&initial, &params, delta_start)?;
    crosscheck_from(config, omega, &initial, horizon_cycles)
}

/// Cross-check from an arbitrary finite rapidity set. A classical halt is
/// reported in the result rather than returned as an error.
pub fn crosscheck_from(
    config: &ExperimentConfig,
    omega: f64,
    initial: &RapiditySet<f64>,
    horizon_cycles: usize,
) -> Result<CrosscheckReport> {
    let params = config.sector(omega)?;
    params.require_rapidities()?;
    let drive = config.drive(omega);
    let (state, _) = bethe_amplitudes(initial, &params)?;
    let quantum = run_from(
        &state,
        &params,
        &drive,
        horizon_cycles,
        RunOptions {
            steps_per_cycle: config.steps_per_cycle,
            sample_stride: None,
        },
        |_| {},
    )?;
    let t_final = drive.cycle_time(horizon_cycles);
    let opts = FlowOptions {
        rtol: CROSSCHECK_RTOL,
        atol: CROSSCHECK_RTOL * 1e-2,
        ..FlowOptions::default()
    };
    let (traj, halt) = match integrate_flow(initial, &params, &drive, t_final, opts) {
        Ok(t) => (Some(t), None),
        Err(Error::FlowHalted { reason, time }) => (None, Some((reason, time))),
        Err(e) => return Err(e),
    };
    let mut distances = Vec::new();
    if let Some(traj) = &traj {
        for rec in &quantum {
            let q = extract_rapidities(&rec.state, &params)?;
            let c = traj.at(rec.t_p).expect("strobe time sampled");
            let d = match (q.finite_values(), c.finite_values()) {
                (Ok(a), Ok(b)) => pair_roots(&a, &b).1,
                _ => f64::INFINITY,
            };
            distances.push((rec.p, d));
        }
    }
    let max_distance = distances.iter().map(|d| d.1).fold(0.0, f64::max);
    let passed = halt.is_none() && max_distance < CROSSCHECK_TOL;
    Ok(CrosscheckReport {
        omega,
        distances,
        max_distance,
        halt,
        passed,
        file: None,
    })
}

/// Runs [`crosscheck_frequency`] for every configured frequency and writes
/// `crosscheck_<ω>.csv` reports.
pub fn crosscheck_classical(config: &ExperimentConfig, horizon_cycles: usize) -> Result<Vec<CrosscheckReport>> {
    config.validate()?;
    let dir = config.output_dir.clone();
    prepare_dir(&dir)?;
    config
        .frequencies
        .par_iter()
        .map(|&omega| {
            let mut report = crosscheck_frequency(config, omega, horizon_cycles)?;
            let mut extra = vec![
                ("omega", fmt_f64(omega)),
                ("horizon_cycles", horizon_cycles.to_string()),
                ("max_distance", fmt_f64(report.max_distance)),
                ("tolerance", fmt_f64(CROSSCHECK_TOL)),
                ("status", if report.passed { "pass".into() } else { "fail".into() }),
            ];
            if let Some((reason, time)) = report.halt {
                extra.push(("halt", format!("{reason} at t = {}", fmt_f64(time))));
            }
            let mut s = header(config, "crosscheck", &extra);
            s.push_str("p,max_distance\n");
            for (p, d) in &report.distances {
                let _ = writeln!(s, "{p},{}", fmt_f64(*d));
            }
            report.file = Some(write_file(&dir, &format!("crosscheck_{}.csv", omega_tag(omega)), s)?);
            Ok(report)
        })
        .collect()
}

/// Per-frequency stroboscopic deviation between `steps_per_cycle` and double
/// resolution over `cycles` drive periods; written to `convergence.csv`.
pub fn convergence_report(config: &ExperimentConfig, cycles: usize) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    prepare_dir(&config.output_dir)?;
    let rows: Vec<(f64, f64)> = config
        .frequencies
        .par_iter()
        .map(|&omega| {
            let params = config.sector(omega)?;
            let dev = convergence_check(&params, &config.drive(omega), cycles, config.steps_per_cycle)?;
            Ok((omega, dev))
        })
        .collect::<Result<_>>()?;
    let mut s = header(config, "convergence", &[("cycles", cycles.to_string())]);
    s.push_str("omega,steps_per_cycle,max_state_deviation\n");
    for (omega, dev) in &rows {
        let _ = writeln!(s, "{},{},{}", fmt_f64(*omega), config.steps_per_cycle, fmt_f64(*dev));
    }
    write_file(&config.output_dir, "convergence.csv", s)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(dir: &Path) -> ExperimentConfig {
        ExperimentConfig {
            frequencies: vec![3.57, 3.75],
            cycles: 3,
            steps_per_cycle: 2000,
            samples_per_cycle: 20,
            output_dir: dir.to_path_buf(),
            ..ExperimentConfig::reference()
        }
    }

    #[test]
    fn config_round_trip() {
        let cfg = ExperimentConfig::reference();
        let text = cfg.to_toml();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let text = "spin = 6.0\nexcitations = 4\ndelta0 = 5.0\nfrequencies = [3.57]\ncycles = 10\n";
        let cfg = ExperimentConfig::from_toml(text).unwrap();
        assert_eq!(cfg.steps_per_cycle, 8000);
        assert_eq!(cfg.format, CONFIG_FORMAT);
    }

    #[test]
    fn config_errors() {
        let bad = [
            "spin = 6.0\nexcitations = 4\ndelta0 = 5.0\nfrequencies = [-1.0]\ncycles = 10\n",
            "spin = 6.2\nexcitations = 4\ndelta0 = 5.0\nfrequencies = [1.0]\ncycles = 10\n",
            "spin = 6.0\nexcitations = 4\ndelta0 = 5.0\nfrequencies = []\ncycles = 10\n",
            "spin = 6.0\nexcitations = 4\ndelta0 = 5.0\nfrequencies = [1.0]\ncycles = 10\nbogus = 1\n",
            "format = \"other/9\"\nspin = 6.0\nexcitations = 4\ndelta0 = 5.0\nfrequencies = [1.0]\ncycles = 10\n",
        ];
        for t in bad {
            assert_eq!(ExperimentConfig::from_toml(t).unwrap_err().exit_code(), 2, "{t}");
        }
        let empty = "spin = 6.0\nexcitations = 4\ndelta0 = 5.0\nfrequencies = [1.0]\ncycles = 0\n";
        assert!(matches!(ExperimentConfig::from_toml(empty), Err(Error::EmptyAverage)));
    }

    #[test]
    fn writes_all_panels_deterministically() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let out_a = run_experiment(&small(a.path())).unwrap();
        run_experiment(&small(b.path())).unwrap();
        assert_eq!(out_a.files.len(), 2 * 3 + 1);
        for f in &out_a.files {
            let name = f.file_name().unwrap();
            let body = |p: &Path| {
                fs::read_to_string(p)
                    .unwrap()
                    .lines()
                    .filter(|l| !l.starts_with('#'))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            assert_eq!(body(f), body(&b.path().join(name)), "{name:?}");
            let text = fs::read_to_string(f).unwrap();
            assert!(text.starts_with(&format!("# format: {OUTPUT_FORMAT}")));
            assert!(text.contains("# config: spin = 6.0"));
        }
        let strobe = fs::read_to_string(a.path().join("strobe_3.57.csv")).unwrap();
        let rows = strobe.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 1 + 4 * 4);
        let ts = fs::read_to_string(a.path().join("timeseries_3.57.csv")).unwrap();
        assert_eq!(ts.lines().filter(|l| !l.starts_with('#')).count(), 1 + 1 + 3 * 20);
    }

    #[test]
    fn unwritable_output_is_io_error() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let cfg = small(&f.path().join("sub"));
        assert_eq!(run_experiment(&cfg).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn constant_drive_crosscheck_is_stationary() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            drive: DriveKind::Constant,
            frequencies: vec![3.57],
            ..small(dir.path())
        };
        let reports = crosscheck_classical(&cfg, 2).unwrap();
        assert!(reports[0].passed);
        assert!(reports[0].max_distance < 1e-8, "{:?}", reports[0].distances);
        assert!(reports[0].file.as_ref().unwrap().exists());
    }

    #[test]
    fn near_collision_start_halts_cleanly() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig {
            frequencies: vec![3.57],
            ..small(dir.path())
        };
        let z = crate::scalar::cplx(6.7, 0.66);
        let start = RapiditySet::from_values(&[
            z,
            z + crate::scalar::cplx(2e-8, 0.0),
            crate::scalar::cplx(6.68, -2.09),
            crate::scalar::cplx(6.68, 2.09),
        ]);
        let report = crosscheck_from(&cfg, 3.57, &start, 2).unwrap();
        let (reason, time) = report.halt.expect("halt reported");
        assert!(
            matches!(reason, HaltReason::Collision | HaltReason::StepUnderflow),
            "{reason}"
        );
        assert!((0.0..1e-3).contains(&time), "{time}");
        assert!(!report.passed);
    }
}
