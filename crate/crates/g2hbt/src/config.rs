//! Run configuration: TOML file layered as defaults < scenario preset <
//! file < command-line flags, resolved into a complete [`ResolvedConfig`]
//! that is echoed into every output.

use std::f64::consts::PI;
use std::path::Path;

use g2hbt_core::{displaced_squeezed, GaussianState, QuadPair};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{CiMethod, EstimatorOptions, StateParams};
use crate::io::leading_comment;
use crate::signal::HbtRunConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CiChoice {
    #[default]
    BetweenRun,
    Bootstrap,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSection {
    pub v_plus: Option<f64>,
    pub v_minus: Option<f64>,
    pub alpha: Option<f64>,
    /// Squeezing parameter; alternative to the two variances.
    pub r: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub samples: Option<usize>,
    pub runs: Option<usize>,
    pub seed: Option<u64>,
    pub eta: Option<f64>,
    pub oversample: Option<usize>,
    pub lag_subdivision: Option<usize>,
    /// Top-hat band edge in rad/s.
    pub omega: Option<f64>,
    pub electronic_noise: Option<f64>,
    pub ci: Option<CiChoice>,
    pub bootstrap_resamples: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauSection {
    /// Upper end of the grid in units of `tau * Omega`.
    pub max: Option<f64>,
    /// Points on the analytic grid.
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: Option<OutputFormat>,
}

/// A possibly incomplete configuration layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub scenario: Option<String>,
    #[serde(default)]
    pub state: StateSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub tau: TauSection,
    #[serde(default)]
    pub output: OutputSection,
}

macro_rules! overlay {
    ($low:expr, $high:expr; $($field:ident),+) => {
        $( $low.$field = $high.$field.or($low.$field); )+
    };
}

impl ConfigLayer {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Read a TOML file, or the configuration embedded in an output file:
    /// the leading comment block of a CSV, or the `config` member of JSON.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        if text.starts_with('#') {
            Self::parse(&leading_comment(&text))
        } else if text.trim_start().starts_with('{') {
            #[derive(Deserialize)]
            struct Embedded {
                config: ConfigLayer,
            }
            serde_json::from_str::<Embedded>(&text)
                .map(|e| e.config)
                .map_err(|e| ConfigError::Invalid(e.to_string()))
        } else {
            Self::parse(&text)
        }
    }

    /// `self` with every value set in `high` replaced.
    pub fn overlay(mut self, high: &ConfigLayer) -> Self {
        self.scenario = high.scenario.clone().or(self.scenario);
        overlay!(self.state, high.state; v_plus, v_minus, alpha, r);
        overlay!(self.simulation, high.simulation;
            samples, runs, seed, eta, oversample, lag_subdivision, omega, electronic_noise, ci, bootstrap_resamples);
        overlay!(self.tau, high.tau; max, steps);
        overlay!(self.output, high.output; format);
        self
    }

    pub fn has_state(&self) -> bool {
        let s = &self.state;
        s.v_plus.is_some() || s.v_minus.is_some() || s.alpha.is_some() || s.r.is_some()
    }

    pub fn defaults() -> Self {
        Self {
            scenario: None,
            state: StateSection::default(),
            simulation: SimulationSection {
                samples: Some(100_000),
                runs: Some(10),
                seed: Some(0),
                eta: Some(1.0),
                oversample: Some(2),
                lag_subdivision: Some(1),
                omega: Some(PI * 120e3),
                electronic_noise: Some(0.0),
                ci: Some(CiChoice::BetweenRun),
                bootstrap_resamples: Some(1000),
            },
            tau: TauSection {
                max: Some(3.0 * PI),
                steps: Some(301),
            },
            output: OutputSection {
                format: Some(OutputFormat::Csv),
            },
        }
    }

    /// Fill gaps from the defaults and check every value.
    pub fn resolve(&self) -> Result<ResolvedConfig, ConfigError> {
        let full = Self::defaults().overlay(self);
        let sim = &full.simulation;
        let st = &full.state;

        let state = match (st.r, st.v_plus, st.v_minus) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return invalid("give either the squeezing r or the variances, not both")
            }
            (Some(r), None, None) => {
                let s = displaced_squeezed(r, st.alpha.unwrap_or(0.0)).map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Some(StateParams::from(&s))
            }
            (None, Some(v_plus), Some(v_minus)) => {
                let p = StateParams {
                    v_plus,
                    v_minus,
                    alpha: st.alpha.unwrap_or(0.0),
                };
                p.to_state().map_err(|e| ConfigError::Invalid(e.to_string()))?;
                Some(p)
            }
            (None, None, None) if st.alpha.is_some() => return invalid("alpha given without v_plus/v_minus or r"),
            (None, None, None) => None,
            _ => return invalid("both v_plus and v_minus are required"),
        };

        let omega = sim.omega.unwrap();
        if !(omega.is_finite() && omega > 0.0) {
            return invalid(format!("omega = {omega} must be positive"));
        }
        let simulation = Simulation {
            samples: sim.samples.unwrap(),
            runs: sim.runs.unwrap(),
            seed: sim.seed.unwrap(),
            eta: sim.eta.unwrap(),
            oversample: sim.oversample.unwrap(),
            lag_subdivision: sim.lag_subdivision.unwrap(),
            omega,
            electronic_noise: sim.electronic_noise.unwrap(),
            ci: sim.ci.unwrap(),
            bootstrap_resamples: sim.bootstrap_resamples.unwrap(),
        };
        let tau = Tau {
            max: full.tau.max.unwrap(),
            steps: full.tau.steps.unwrap(),
        };
        if !(tau.max.is_finite() && tau.max >= 0.0) {
            return invalid(format!("tau.max = {} must be >= 0", tau.max));
        }
        if tau.steps == 0 || (tau.steps == 1 && tau.max > 0.0) {
            return invalid(format!("tau.steps = {} too small for tau.max = {}", tau.steps, tau.max));
        }
        if tau.steps > 1 && tau.max == 0.0 {
            return invalid(format!("tau.steps = {} needs tau.max > 0", tau.steps));
        }
        if simulation.ci == CiChoice::Bootstrap && simulation.bootstrap_resamples < 10 {
            return invalid("bootstrap_resamples must be at least 10");
        }
        let resolved = ResolvedConfig {
            scenario: full.scenario,
            state,
            simulation,
            tau,
            output: Output {
                format: full.output.format.unwrap(),
            },
        };
        resolved
            .run_config(GaussianState::vacuum(), QuadPair::ALL[0])
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(resolved)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub samples: usize,
    pub runs: usize,
    pub seed: u64,
    pub eta: f64,
    pub oversample: usize,
    pub lag_subdivision: usize,
    pub omega: f64,
    pub electronic_noise: f64,
    pub ci: CiChoice,
    pub bootstrap_resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tau {
    pub max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub format: OutputFormat,
}

/// Complete configuration; its TOML form reloads as a [`ConfigLayer`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<StateParams>,
    pub simulation: Simulation,
    pub tau: Tau,
    pub output: Output,
}

impl ResolvedConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain data serialises")
    }

    pub fn state(&self) -> Result<GaussianState, ConfigError> {
        match self.state {
            Some(p) => p.to_state().map_err(|e| ConfigError::Invalid(e.to_string())),
            None => invalid("no state given (use --vplus/--vminus/--alpha or --r)"),
        }
    }

    pub fn run_config(&self, state: GaussianState, pair: QuadPair) -> HbtRunConfig {
        let s = &self.simulation;
        HbtRunConfig {
            state,
            pair,
            n_samples: s.samples,
            n_runs: s.runs,
            oversample: s.oversample,
            lag_subdivision: s.lag_subdivision,
            seed: s.seed,
            eta: s.eta,
            base_rate: s.omega / PI,
            electronic_noise: s.electronic_noise,
        }
    }

    pub fn estimator_options(&self) -> EstimatorOptions {
        let ci = match self.simulation.ci {
            CiChoice::BetweenRun => CiMethod::BetweenRun,
            CiChoice::Bootstrap => CiMethod::Bootstrap {
                resamples: self.simulation.bootstrap_resamples,
                seed: self.simulation.seed,
            },
        };
        EstimatorOptions {
            ci,
            ..EstimatorOptions::default()
        }
    }

    /// Post-DSP lags covering `[0, tau.max]`; one lag is `pi / lag_subdivision`.
    pub fn lags(&self) -> Vec<usize> {
        let step = PI / self.simulation.lag_subdivision as f64;
        let last = (self.tau.max / step + 1e-9).floor() as usize;
        (0..=last).collect()
    }

    /// Evenly spaced analytic grid over `[0, tau.max]`.
    pub fn analytic_grid(&self) -> Vec<f64> {
        let n = self.tau.steps;
        if n == 1 {
            return vec![0.0];
        }
        (0..n).map(|k| self.tau.max * k as f64 / (n - 1) as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering_order() {
        let preset = ConfigLayer {
            simulation: SimulationSection {
                lag_subdivision: Some(2),
                runs: Some(5),
                ..Default::default()
            },
            ..Default::default()
        };
        let file = ConfigLayer::parse("[simulation]\nruns = 7\nseed = 3\n").unwrap();
        let flags = ConfigLayer {
            simulation: SimulationSection {
                seed: Some(9),
                ..Default::default()
            },
            ..Default::default()
        };
        let r = preset.overlay(&file).overlay(&flags).resolve().unwrap();
        assert_eq!(r.simulation.lag_subdivision, 2);
        assert_eq!(r.simulation.runs, 7);
        assert_eq!(r.simulation.seed, 9);
        assert_eq!(r.simulation.samples, 100_000);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(ConfigLayer::parse("[simulation]\nsampels = 7\n").is_err());
        assert!(ConfigLayer::parse("colour = 1\n").is_err());
        assert!(ConfigLayer::parse("[plot]\n").is_err());
    }

    #[test]
    fn resolved_config_reloads_identically() {
        let layer = ConfigLayer::parse("scenario = \"fig3\"\n[state]\nv_plus = 12.8\nv_minus = 1.039\nalpha = 0.258\n[tau]\nmax = 9.42477796076938\n").unwrap();
        let r = layer.resolve().unwrap();
        let again = ConfigLayer::parse(&r.to_toml()).unwrap().resolve().unwrap();
        assert_eq!(r, again);
        assert_eq!(r.to_toml(), again.to_toml());
    }

    #[test]
    fn state_forms() {
        let r = ConfigLayer::parse("[state]\nr = 0.5\n").unwrap().resolve().unwrap();
        let s = r.state.unwrap();
        assert!((s.v_plus - (-1.0f64).exp()).abs() < 1e-15);
        assert!(ConfigLayer::parse("[state]\nr = 0.5\nv_plus = 1\n").unwrap().resolve().is_err());
        assert!(ConfigLayer::parse("[state]\nv_plus = 0.5\nv_minus = 1\n").unwrap().resolve().is_err());
        assert!(ConfigLayer::parse("[state]\nv_plus = 2\n").unwrap().resolve().is_err());
        assert!(ConfigLayer::parse("[simulation]\nsamples = 10\n").unwrap().resolve().is_err());
    }

    #[test]
    fn grids() {
        let mut r = ConfigLayer::default().resolve().unwrap();
        assert_eq!(r.lags(), vec![0, 1, 2, 3]);
        r.simulation.lag_subdivision = 2;
        assert_eq!(r.lags().len(), 7);
        r.tau.steps = 3;
        assert_eq!(r.analytic_grid(), vec![0.0, 1.5 * PI, 3.0 * PI]);
    }
}
