//! Preset measurement scenarios and the single-state `simulate` run.
//!
//! Every command builds its outputs in memory as a [`Report`] and writes
//! them in a fixed order, so the bytes depend only on the resolved
//! configuration.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use g2hbt_core::{g2_tau_gaussian, optimal_displacement, FilterSpec, GaussianState, QuadPair};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ConfigLayer, OutputFormat, ResolvedConfig, SimulationSection, TauSection};
use crate::error::RunError;
use crate::estimate::{loss_sweep, simulate_curve, CurveKind, CurveMeta, CurvePoint, G2Curve};
use crate::io::{write_table, IoError, Summary};
use crate::EstimateError;

// Measured input states of the experiment, as (V+, V-, alpha).
/// Amplitude-squeezed, weakly displaced: anti-bunched.
pub const ANTIBUNCHED: (f64, f64, f64) = (0.902, 1.137, 0.257);
/// Strong excess noise on the amplitude quadrature.
pub const THERMAL_DELAY: (f64, f64, f64) = (14.60, 1.025, 0.258);
pub const COHERENT_ALPHA: f64 = 0.5;
/// Displacement sweeps, `alpha` in `[0, 0.65]`.
pub const SWEEP_SQUEEZED: (f64, f64) = (0.902, 1.137);
pub const SWEEP_BEST: (f64, f64) = (0.890, 1.129);
pub const SWEEP_THERMAL: (f64, f64) = (12.80, 1.039);
pub const SWEEP_ALPHA_MAX: f64 = 0.65;
/// Squeezed vacuum with a trace of displacement.
pub const SUPERBUNCHED: (f64, f64, f64) = (0.901, 1.136, 0.001);
/// Loss test state and the two efficiencies.
pub const LOSS_STATE: (f64, f64, f64) = (0.894, 1.139, 0.255);
pub const LOSS_ETAS: [f64; 2] = [0.86, 0.43];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Fig3,
    Fig4,
    Superbunch,
    Loss,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [Scenario::Fig3, Scenario::Fig4, Scenario::Superbunch, Scenario::Loss];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Fig3 => "fig3",
            Scenario::Fig4 => "fig4",
            Scenario::Superbunch => "superbunch",
            Scenario::Loss => "loss",
        }
    }

    /// Settings the scenario changes relative to the global defaults.
    pub fn preset(self) -> ConfigLayer {
        let (lag_subdivision, max, steps) = match self {
            Scenario::Fig3 => (Some(2), 3.0 * PI, 301),
            Scenario::Fig4 | Scenario::Superbunch | Scenario::Loss => (None, 0.0, 1),
        };
        ConfigLayer {
            scenario: Some(self.name().to_string()),
            simulation: SimulationSection {
                lag_subdivision,
                ..Default::default()
            },
            tau: TauSection {
                max: Some(max),
                steps: Some(steps),
            },
            ..Default::default()
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| format!("unknown scenario {s:?} (expected fig3, fig4, superbunch or loss)"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

/// Files produced by one command, in write order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub files: Vec<OutputFile>,
}

impl Report {
    pub fn write_to(&self, dir: &Path) -> Result<(), IoError> {
        let wrap = |source| IoError::File {
            path: dir.to_path_buf(),
            source,
        };
        fs::create_dir_all(dir).map_err(wrap)?;
        for f in &self.files {
            let path = dir.join(&f.name);
            fs::write(&path, &f.contents).map_err(|source| IoError::File { path, source })?;
        }
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|f| f.name == name).map(|f| f.contents.as_slice())
    }

    fn push(&mut self, name: String, contents: Vec<u8>) {
        self.files.push(OutputFile { name, contents });
    }

    /// A curve table in the configured format; `key` names the first column.
    fn push_curve(&mut self, stem: &str, curve: &G2Curve, cfg: &ResolvedConfig, key: &str) -> Result<String, RunError> {
        let (name, bytes) = match cfg.output.format {
            OutputFormat::Csv => {
                let mut buf = Vec::new();
                write_table(&mut buf, curve, &cfg.to_toml(), key)?;
                (format!("{stem}.csv"), buf)
            }
            OutputFormat::Json => (format!("{stem}.json"), curve_json(curve, cfg, key)),
        };
        self.push(name.clone(), bytes);
        Ok(name)
    }

    fn push_json<T: Serialize>(&mut self, name: &str, value: &T) {
        self.push(name.to_string(), to_json(value));
    }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serialises");
    s.push('\n');
    s.into_bytes()
}

#[derive(Serialize)]
struct CurveDocument<'a> {
    config: &'a ResolvedConfig,
    key: &'a str,
    curve: &'a G2Curve,
}

/// JSON form of a curve, carrying the resolved configuration.
pub fn curve_json(curve: &G2Curve, cfg: &ResolvedConfig, key: &str) -> Vec<u8> {
    to_json(&CurveDocument { config: cfg, key, curve })
}

fn state_of((v_plus, v_minus, alpha): (f64, f64, f64)) -> GaussianState {
    GaussianState::new(v_plus, v_minus, alpha).expect("preset states are valid")
}

/// Theory curve on the configured analytic grid.
pub fn analytic_curve(state: &GaussianState, cfg: &ResolvedConfig) -> Result<G2Curve, RunError> {
    let mut c = G2Curve::analytic(state, &cfg.analytic_grid())?;
    c.meta.eta = cfg.simulation.eta;
    Ok(c)
}

fn summarize(label: &str, state: &GaussianState, curve: &G2Curve, curve_file: &str) -> Result<Summary, RunError> {
    let p = curve
        .at_zero()
        .ok_or_else(|| RunError::Usage("curve has no tau = 0 point".into()))?;
    Ok(Summary {
        label: label.to_string(),
        state: state.into(),
        eta: curve.meta.eta,
        seed: curve.meta.seed,
        g2_at_zero: p.g2,
        ci68: [p.ci68_low, p.ci68_high],
        analytic_g2: g2_tau_gaussian(state, &FilterSpec::normalized(), 0.0)?,
        curve_file: curve_file.to_string(),
        warnings: curve.meta.warnings.clone(),
    })
}

#[derive(Serialize)]
struct ScenarioSummary<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    scenario: Option<&'a str>,
    config: &'a ResolvedConfig,
    results: Vec<Summary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    minima: Vec<Minimum>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    skipped: Vec<Skipped>,
}

/// Displacement minimising `g2(0)` for one sweep.
#[derive(Debug, Clone, Serialize)]
pub struct Minimum {
    pub label: String,
    pub v_plus: f64,
    pub v_minus: f64,
    pub alpha_star: f64,
    pub g2_min: f64,
}

/// Sweep point where `g2` could not be estimated.
#[derive(Debug, Clone, Serialize)]
pub struct Skipped {
    pub label: String,
    pub alpha: f64,
    pub reason: String,
}

/// One simulated curve for the configured state, with the theory curve.
pub fn simulate_report(cfg: &ResolvedConfig) -> Result<(Report, G2Curve), RunError> {
    let state = cfg.state()?;
    let run = cfg.run_config(state, QuadPair::ALL[0]);
    let (sim, _) = simulate_curve(&run, &cfg.lags(), &cfg.estimator_options())?;
    let analytic = analytic_curve(&state, cfg)?;
    let mut report = Report::default();
    let file = report.push_curve("simulated", &sim, cfg, "tau_omega")?;
    report.push_curve("analytic", &analytic, cfg, "tau_omega")?;
    let summary = summarize("simulated", &state, &sim, &file)?;
    report.push_json(
        "summary.json",
        &ScenarioSummary {
            scenario: None,
            config: cfg,
            results: vec![summary],
            minima: Vec::new(),
            skipped: Vec::new(),
        },
    );
    Ok((report, sim))
}

pub fn run_scenario(scenario: Scenario, cfg: &ResolvedConfig) -> Result<Report, RunError> {
    if cfg.state.is_some() {
        return Err(RunError::Usage(format!(
            "scenario {scenario} uses fixed input states; drop the state parameters"
        )));
    }
    match scenario {
        Scenario::Fig3 => fig3(cfg),
        Scenario::Fig4 => fig4(cfg),
        Scenario::Superbunch => single_point(cfg, "superbunch", state_of(SUPERBUNCHED)),
        Scenario::Loss => loss(cfg),
    }
}

fn fig3(cfg: &ResolvedConfig) -> Result<Report, RunError> {
    let series = [
        ("antibunched", state_of(ANTIBUNCHED)),
        ("coherent", GaussianState::coherent(COHERENT_ALPHA)?),
        ("thermal", state_of(THERMAL_DELAY)),
    ];
    let lags = cfg.lags();
    let opts = cfg.estimator_options();
    let curves = series
        .par_iter()
        .enumerate()
        .map(|(k, (_, state))| {
            let mut run = cfg.run_config(*state, QuadPair::ALL[0]);
            run.seed = run.seed.wrapping_add(k as u64);
            Ok(simulate_curve(&run, &lags, &opts)?.0)
        })
        .collect::<Result<Vec<_>, EstimateError>>()?;

    let mut report = Report::default();
    let mut results = Vec::new();
    for ((label, state), sim) in series.iter().zip(&curves) {
        let file = report.push_curve(&format!("fig3_{label}_simulated"), sim, cfg, "tau_omega")?;
        report.push_curve(&format!("fig3_{label}_analytic"), &analytic_curve(state, cfg)?, cfg, "tau_omega")?;
        results.push(summarize(label, state, sim, &file)?);
    }
    report.push_json(
        "summary.json",
        &ScenarioSummary {
            scenario: Some("fig3"),
            config: cfg,
            results,
            minima: Vec::new(),
            skipped: Vec::new(),
        },
    );
    Ok(report)
}

/// Simulated displacement grid: 0.05 to 0.65 in steps of 0.05.
pub fn sweep_alphas() -> Vec<f64> {
    (1..=13).map(|k| k as f64 / 20.0).collect()
}

/// Dense analytic displacement grid: 0 to 0.65 in steps of 0.005.
pub fn dense_alphas() -> Vec<f64> {
    (0..=130).map(|k| k as f64 / 200.0).collect()
}

fn sweep_table(points: Vec<CurvePoint>, kind: CurveKind, cfg: &ResolvedConfig, n: usize, runs: usize) -> G2Curve {
    G2Curve {
        points,
        meta: CurveMeta {
            kind,
            state: None,
            eta: cfg.simulation.eta,
            n_samples: n,
            n_runs: runs,
            seed: Some(cfg.simulation.seed),
            warnings: Vec::new(),
        },
    }
}

fn fig4(cfg: &ResolvedConfig) -> Result<Report, RunError> {
    let series = [
        ("squeezed", SWEEP_SQUEEZED),
        ("best", SWEEP_BEST),
        ("coherent", (1.0, 1.0)),
        ("thermal", SWEEP_THERMAL),
    ];
    let alphas = sweep_alphas();
    let opts = cfg.estimator_options();
    let jobs: Vec<(usize, usize, f64)> = (0..series.len())
        .flat_map(|s| alphas.iter().map(move |&a| (s, a)))
        .enumerate()
        .map(|(k, (s, a))| (k, s, a))
        .collect();

    let outcomes = jobs
        .par_iter()
        .map(|&(k, s, alpha)| {
            let (vp, vm) = series[s].1;
            let state = GaussianState::new(vp, vm, alpha)?;
            let mut run = cfg.run_config(state, QuadPair::ALL[0]);
            run.seed = run.seed.wrapping_add(k as u64);
            match simulate_curve(&run, &[0], &opts) {
                Ok((c, _)) => Ok(Ok(c)),
                Err(e @ EstimateError::DenominatorVanishing { .. }) => Ok(Err(e.to_string())),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>, EstimateError>>()?;

    let f = FilterSpec::normalized();
    let mut report = Report::default();
    let mut results = Vec::new();
    let mut minima = Vec::new();
    let mut skipped = Vec::new();
    for (s, (label, (vp, vm))) in series.iter().enumerate() {
        let mut points = Vec::new();
        let mut sims = Vec::new();
        for (&(_, js, alpha), outcome) in jobs.iter().zip(&outcomes) {
            if js != s {
                continue;
            }
            match outcome {
                Ok(c) => {
                    let p = c.points[0];
                    points.push(CurvePoint { tau_omega: alpha, ..p });
                    sims.push((alpha, c));
                }
                Err(reason) => {
                    log::warn!("fig4 {label} alpha = {alpha}: {reason}");
                    skipped.push(Skipped {
                        label: label.to_string(),
                        alpha,
                        reason: reason.clone(),
                    });
                }
            }
        }
        let sim = sweep_table(points, CurveKind::Simulated, cfg, cfg.simulation.samples, cfg.simulation.runs);
        let file = report.push_curve(&format!("fig4_{label}_simulated"), &sim, cfg, "alpha")?;

        let mut dense = Vec::new();
        for alpha in dense_alphas() {
            match g2_tau_gaussian(&GaussianState::new(*vp, *vm, alpha)?, &f, 0.0) {
                Ok(g) => dense.push(CurvePoint {
                    tau_omega: alpha,
                    g2: g,
                    ci68_low: g,
                    ci68_high: g,
                }),
                Err(g2hbt_core::CoherenceError::Undefined) => {}
                Err(e) => return Err(e.into()),
            }
        }
        let dense = sweep_table(dense, CurveKind::Analytic, cfg, 0, 0);
        report.push_curve(&format!("fig4_{label}_analytic"), &dense, cfg, "alpha")?;

        for (alpha, c) in sims {
            let state = GaussianState::new(*vp, *vm, alpha)?;
            results.push(summarize(&format!("{label} alpha={alpha}"), &state, c, &file)?);
        }
        if let Ok(alpha_star) = optimal_displacement(*vp, *vm) {
            let state = GaussianState::new(*vp, *vm, alpha_star)?;
            minima.push(Minimum {
                label: label.to_string(),
                v_plus: *vp,
                v_minus: *vm,
                alpha_star,
                g2_min: g2_tau_gaussian(&state, &f, 0.0)?,
            });
        }
    }
    report.push_json(
        "summary.json",
        &ScenarioSummary {
            scenario: Some("fig4"),
            config: cfg,
            results,
            minima,
            skipped,
        },
    );
    Ok(report)
}

fn single_point(cfg: &ResolvedConfig, name: &str, state: GaussianState) -> Result<Report, RunError> {
    let run = cfg.run_config(state, QuadPair::ALL[0]);
    let (sim, _) = simulate_curve(&run, &cfg.lags(), &cfg.estimator_options())?;
    let mut report = Report::default();
    let file = report.push_curve(&format!("{name}_simulated"), &sim, cfg, "tau_omega")?;
    report.push_curve(&format!("{name}_analytic"), &analytic_curve(&state, cfg)?, cfg, "tau_omega")?;
    let results = vec![summarize(name, &state, &sim, &file)?];
    report.push_json(
        "summary.json",
        &ScenarioSummary {
            scenario: Some(name),
            config: cfg,
            results,
            minima: Vec::new(),
            skipped: Vec::new(),
        },
    );
    Ok(report)
}

fn loss(cfg: &ResolvedConfig) -> Result<Report, RunError> {
    let state = state_of(LOSS_STATE);
    let run = cfg.run_config(state, QuadPair::ALL[0]);
    let points = loss_sweep(&state, &LOSS_ETAS, &run, &cfg.estimator_options())?;
    let analytic = g2_tau_gaussian(&state, &FilterSpec::normalized(), 0.0)?;

    let rows: Vec<CurvePoint> = points
        .iter()
        .map(|p| CurvePoint {
            tau_omega: p.eta,
            ..p.curve.points[0]
        })
        .collect();
    // descending efficiency; the table wants an increasing key
    let mut sorted = rows.clone();
    sorted.reverse();
    let table = sweep_table(sorted, CurveKind::Simulated, cfg, cfg.simulation.samples, cfg.simulation.runs);
    let mut report = Report::default();
    let file = report.push_curve("loss_simulated", &table, cfg, "eta")?;
    let theory: Vec<CurvePoint> = LOSS_ETAS
        .iter()
        .rev()
        .map(|&eta| CurvePoint {
            tau_omega: eta,
            g2: analytic,
            ci68_low: analytic,
            ci68_high: analytic,
        })
        .collect();
    report.push_curve("loss_analytic", &sweep_table(theory, CurveKind::Analytic, cfg, 0, 0), cfg, "eta")?;

    let mut results = Vec::new();
    for p in &points {
        results.push(summarize(&format!("eta={}", p.eta), &state, &p.curve, &file)?);
    }
    report.push_json(
        "summary.json",
        &ScenarioSummary {
            scenario: Some("loss"),
            config: cfg,
            results,
            minima: Vec::new(),
            skipped: Vec::new(),
        },
    );
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::StateParams;

    fn small(s: Scenario) -> ResolvedConfig {
        let mut layer = s.preset();
        layer.simulation.samples = Some(10_000);
        layer.simulation.runs = Some(4);
        layer.simulation.seed = Some(5);
        layer.resolve().unwrap()
    }

    #[test]
    fn names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("fig5".parse::<Scenario>().is_err());
    }

    #[test]
    fn scenario_rejects_state_override() {
        let mut cfg = small(Scenario::Loss);
        cfg.state = Some(StateParams {
            v_plus: 1.0,
            v_minus: 1.0,
            alpha: 1.0,
        });
        assert!(matches!(run_scenario(Scenario::Loss, &cfg), Err(RunError::Usage(_))));
    }

    #[test]
    fn fig3_files_and_grid() {
        let cfg = small(Scenario::Fig3);
        let r = run_scenario(Scenario::Fig3, &cfg).unwrap();
        let names: Vec<_> = r.files.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names.len(), 7);
        assert_eq!(names[6], "summary.json");
        let text = std::str::from_utf8(r.get("fig3_thermal_simulated.csv").unwrap()).unwrap();
        let rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 1 + 7);
    }

    #[test]
    fn loss_scenario_is_deterministic() {
        let cfg = small(Scenario::Loss);
        assert_eq!(run_scenario(Scenario::Loss, &cfg).unwrap(), run_scenario(Scenario::Loss, &cfg).unwrap());
    }

    #[test]
    fn sweep_grids() {
        let a = sweep_alphas();
        assert_eq!(a.len(), 13);
        assert!((a[12] - SWEEP_ALPHA_MAX).abs() < 1e-12);
        assert!((dense_alphas()[130] - 0.65).abs() < 1e-12);
    }
}
