use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use g2hbt::config::{CiChoice, ConfigLayer, OutputFormat, ResolvedConfig, SimulationSection, StateSection, TauSection};
use g2hbt::error::RunError;
use g2hbt::estimate::{g2_from_moments, moment_estimates, recover_input_state, CurveKind};
use g2hbt::io::{export_dataset, import_dataset, Summary};
use g2hbt::scenario::{analytic_curve, curve_json, run_scenario, simulate_report, Report, Scenario};
use g2hbt::verify::{run_verify, Grid};
use g2hbt_core::{fock_displaced_squeezed, g2_fock, g2_isserlis, g2_tau_gaussian, g2_zero_pure, FilterSpec};
use serde::Serialize;

/// Homodyne HBT g2(tau) simulator and estimator.
#[derive(Parser)]
#[command(name = "g2hbt", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the closed-form g2(tau) for one state.
    Analytic(Common),
    /// Simulate the four-setting measurement and estimate g2(tau).
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write the detector records to this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
    /// Estimate g2(tau) from an exported dataset directory.
    Estimate {
        /// Directory holding manifest.json and the G2TS records.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a preset scenario: fig3, fig4, superbunch or loss.
    Scenario {
        name: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the closed form with the moment and Fock-basis oracles.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Delay in units of 1/Omega.
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        /// Fock-basis truncation.
        #[arg(long, default_value_t = 60)]
        trunc: usize,
    },
    /// Run the identity and oracle-equivalence checks.
    Verify {
        #[arg(long, value_enum, default_value_t = Grid::Coarse)]
        grid: Grid,
        #[arg(long, hide = true)]
        mutate: bool,
    },
}

#[derive(Args, Default)]
struct Common {
    /// TOML configuration, or an output file with an embedded configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    vplus: Option<f64>,
    #[arg(long)]
    vminus: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    /// Squeezing parameter; alternative to --vplus/--vminus.
    #[arg(long, allow_hyphen_values = true)]
    r: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Top-hat band edge in rad/s.
    #[arg(long)]
    omega: Option<f64>,
    /// Samples per run after filtering.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    oversample: Option<usize>,
    /// Post-filter samples per pi of tau*Omega.
    #[arg(long)]
    lag_subdivision: Option<usize>,
    /// Upper end of the tau*Omega grid.
    #[arg(long)]
    tau_max: Option<f64>,
    /// Points on the analytic grid.
    #[arg(long)]
    tau_steps: Option<usize>,
    #[arg(long, value_enum)]
    ci: Option<CiArg>,
    /// Output directory; without it, tables go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum CiArg {
    BetweenRun,
    Bootstrap,
}

impl Common {
    fn flag_layer(&self) -> ConfigLayer {
        ConfigLayer {
            scenario: None,
            state: StateSection {
                v_plus: self.vplus,
                v_minus: self.vminus,
                alpha: self.alpha,
                r: self.r,
            },
            simulation: SimulationSection {
                samples: self.samples,
                runs: self.runs,
                seed: self.seed,
                eta: self.eta,
                oversample: self.oversample,
                lag_subdivision: self.lag_subdivision,
                omega: self.omega,
                electronic_noise: None,
                ci: self.ci.map(|c| match c {
                    CiArg::BetweenRun => CiChoice::BetweenRun,
                    CiArg::Bootstrap => CiChoice::Bootstrap,
                }),
                bootstrap_resamples: None,
            },
            tau: TauSection {
                max: self.tau_max,
                steps: self.tau_steps,
            },
            output: g2hbt::config::OutputSection { format: self.format },
        }
    }

    fn file_layer(&self) -> Result<ConfigLayer, RunError> {
        Ok(match &self.config {
            Some(p) => ConfigLayer::load(p)?,
            None => ConfigLayer::default(),
        })
    }

    /// Defaults < `base` < config file < flags.
    fn resolve(&self, base: ConfigLayer, file: &ConfigLayer) -> Result<ResolvedConfig, RunError> {
        Ok(base.overlay(file).overlay(&self.flag_layer()).resolve()?)
    }

    fn resolve_plain(&self) -> Result<ResolvedConfig, RunError> {
        let file = self.file_layer()?;
        if file.scenario.is_some() {
            return Err(RunError::Usage(
                "configuration names a scenario; run it with the scenario command".into(),
            ));
        }
        self.resolve(ConfigLayer::default(), &file)
    }
}

fn emit(report: &Report, out: Option<&Path>, stdout_file: &str) -> Result<(), RunError> {
    match out {
        Some(dir) => report.write_to(dir)?,
        None => {
            let bytes = report
                .get(stdout_file)
                .ok_or_else(|| RunError::Usage(format!("no {stdout_file} produced")))?;
            std::io::stdout().write_all(bytes).map_err(g2hbt::io::IoError::from)?;
        }
    }
    Ok(())
}

fn curve_name(stem: &str, cfg: &ResolvedConfig) -> String {
    match cfg.output.format {
        OutputFormat::Csv => format!("{stem}.csv"),
        OutputFormat::Json => format!("{stem}.json"),
    }
}

fn curve_file(stem: &str, curve: &g2hbt::G2Curve, cfg: &ResolvedConfig) -> Result<(String, Vec<u8>), RunError> {
    let name = curve_name(stem, cfg);
    let bytes = match cfg.output.format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            g2hbt::io::write_curve_csv(&mut buf, curve, &cfg.to_toml())?;
            buf
        }
        OutputFormat::Json => curve_json(curve, cfg, "tau_omega"),
    };
    Ok((name, bytes))
}

fn json_bytes<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("plain data serialises");
    s.push('\n');
    s.into_bytes()
}

fn cmd_analytic(common: &Common) -> Result<(), RunError> {
    let cfg = common.resolve_plain()?;
    let state = cfg.state()?;
    let curve = analytic_curve(&state, &cfg)?;
    let (name, bytes) = curve_file("analytic", &curve, &cfg)?;
    let mut report = Report::default();
    report.files.push(g2hbt::scenario::OutputFile { name: name.clone(), contents: bytes });
    emit(&report, common.out.as_deref(), &name)
}

fn cmd_simulate(common: &Common, export: Option<&Path>) -> Result<(), RunError> {
    let cfg = common.resolve_plain()?;
    let (report, _) = simulate_report(&cfg)?;
    if let Some(dir) = export {
        let acq = g2hbt::acquire_all(&cfg.run_config(cfg.state()?, g2hbt_core::QuadPair::ALL[0]))?;
        export_dataset(dir, &acq)?;
    }
    emit(&report, common.out.as_deref(), &curve_name("simulated", &cfg))
}

#[derive(Serialize)]
struct EstimateSummary<'a> {
    config: &'a ResolvedConfig,
    recovered: Recovered,
    results: Vec<Summary>,
}

#[derive(Serialize)]
struct Recovered {
    v_plus: f64,
    v_minus: f64,
    alpha: f64,
    se_v_plus: f64,
    se_v_minus: f64,
    se_alpha: f64,
    projected: bool,
}

fn cmd_estimate(data: &Path, common: &Common) -> Result<(), RunError> {
    let mut cfg = common.resolve_plain()?;
    let acq = import_dataset(data)?;
    let first = acq
        .datasets
        .first()
        .ok_or_else(|| RunError::Usage("dataset has no pair settings".into()))?;
    let step = first.tau_omega_per_lag();
    let last = (cfg.tau.max / step + 1e-9).floor() as usize;
    let lags: Vec<usize> = (0..=last).collect();
    let est = moment_estimates(&acq, &lags)?;
    let mut curve = g2_from_moments(&est, &cfg.estimator_options())?;
    let rec = recover_input_state(&est)?;
    curve.meta.state = Some((&rec.state).into());
    curve.meta.kind = CurveKind::Simulated;
    cfg.state = Some((&rec.state).into());
    cfg.simulation.seed = first.config.seed;

    let (name, bytes) = curve_file("estimated", &curve, &cfg)?;
    let p = curve.points[0];
    let analytic = g2_tau_gaussian(&rec.state, &FilterSpec::normalized(), 0.0)?;
    let summary = EstimateSummary {
        config: &cfg,
        recovered: Recovered {
            v_plus: rec.v_plus,
            v_minus: rec.v_minus,
            alpha: rec.alpha,
            se_v_plus: rec.se_v_plus,
            se_v_minus: rec.se_v_minus,
            se_alpha: rec.se_alpha,
            projected: rec.projected,
        },
        results: vec![Summary {
            label: "estimated".into(),
            state: (&rec.state).into(),
            eta: first.config.eta,
            seed: Some(first.config.seed),
            g2_at_zero: p.g2,
            ci68: [p.ci68_low, p.ci68_high],
            analytic_g2: analytic,
            curve_file: name.clone(),
            warnings: curve.meta.warnings.clone(),
        }],
    };
    let mut report = Report::default();
    report.files.push(g2hbt::scenario::OutputFile { name: name.clone(), contents: bytes });
    report.files.push(g2hbt::scenario::OutputFile {
        name: "summary.json".into(),
        contents: json_bytes(&summary),
    });
    emit(&report, common.out.as_deref(), &name)
}

fn cmd_scenario(name: Option<&str>, common: &Common) -> Result<(), RunError> {
    let file = common.file_layer()?;
    let name = name
        .map(str::to_string)
        .or_else(|| file.scenario.clone())
        .ok_or_else(|| RunError::Usage("scenario name required (fig3, fig4, superbunch or loss)".into()))?;
    let scenario: Scenario = name.parse().map_err(RunError::Usage)?;
    if file.scenario.as_deref().is_some_and(|s| s != scenario.name()) {
        log::warn!("configuration names scenario {:?}; running {scenario}", file.scenario.as_deref().unwrap());
    }
    let mut cfg = common.resolve(scenario.preset(), &file)?;
    cfg.scenario = Some(scenario.name().to_string());
    let mut report = run_scenario(scenario, &cfg)?;
    report.files.push(g2hbt::scenario::OutputFile {
        name: "resolved_config.toml".into(),
        contents: cfg.to_toml().into_bytes(),
    });
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("g2hbt-out").join(scenario.name()));
    report.write_to(&out)?;
    Ok(())
}

#[derive(Serialize)]
struct OracleReport {
    state: g2hbt::estimate::StateParams,
    tau_omega: f64,
    closed_form: f64,
    moment_oracle: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pure_formula: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fock_oracle: Option<f64>,
}

fn cmd_oracle(common: &Common, tau: f64, trunc: usize) -> Result<(), RunError> {
    let cfg = common.resolve_plain()?;
    let state = cfg.state()?;
    let f = FilterSpec::normalized();
    let closed = g2_tau_gaussian(&state, &f, tau)?;
    let moment = g2_isserlis(&state, &f, tau).map_err(|e| RunError::Usage(e.to_string()))?;
    // pure states: recover r from V+ = exp(-2r)
    let pure = (state.purity() - 1.0).abs() < 1e-12;
    let (pure_formula, fock) = if pure {
        let r = -0.5 * state.v_plus().ln();
        let alpha = state.alpha();
        let fock = if tau == 0.0 {
            match fock_displaced_squeezed(r, alpha, trunc).and_then(|p| g2_fock(&p)) {
                Ok(v) => Some(v),
                Err(e) => {
                    log::warn!("Fock oracle unavailable: {e}");
                    None
                }
            }
        } else {
            None
        };
        let pf = if tau == 0.0 { g2_zero_pure(r, alpha).ok() } else { None };
        (pf, fock)
    } else {
        (None, None)
    };
    let report = OracleReport {
        state: (&state).into(),
        tau_omega: tau,
        closed_form: closed,
        moment_oracle: moment,
        pure_formula,
        fock_oracle: fock,
    };
    std::io::stdout()
        .write_all(&json_bytes(&report))
        .map_err(g2hbt::io::IoError::from)?;
    Ok(())
}

fn cmd_verify(grid: Grid, mutate: bool) -> Result<(), RunError> {
    let report = run_verify(grid, mutate);
    std::io::stdout()
        .write_all(&json_bytes(&report))
        .map_err(g2hbt::io::IoError::from)?;
    match report.failures() {
        0 => Ok(()),
        n => Err(RunError::Verify(n)),
    }
}

fn run(cli: Cli) -> Result<(), RunError> {
    match &cli.command {
        Command::Analytic(c) => cmd_analytic(c),
        Command::Simulate { common, export } => cmd_simulate(common, export.as_deref()),
        Command::Estimate { data, common } => cmd_estimate(data, common),
        Command::Scenario { name, common } => cmd_scenario(name.as_deref(), common),
        Command::Oracle { common, tau, trunc } => cmd_oracle(common, *tau, *trunc),
        Command::Verify { grid, mutate } => cmd_verify(*grid, *mutate),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Warn)
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
