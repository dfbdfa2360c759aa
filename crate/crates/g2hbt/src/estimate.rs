//! `g2(tau)` from the four quadrature-pair datasets, with 68% intervals.
//!
//! Each run yields its own set of raw quadrature moments. The point estimate
//! uses the moments pooled over runs; the interval comes from the spread of
//! the per-run `g2` values (between-run standard error with a Student-t
//! factor), or optionally from a bootstrap over runs.

use std::f64::consts::SQRT_2;

use g2hbt_core::moments::{lagged_fourth_moment, raw_second_moment};
use g2hbt_core::{g2_tau_gaussian, Arm, FilterSpec, GaussianState, QuadPair, Quadrature, QuadratureMoments};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::EstimateError;
use crate::signal::{acquire_all, HbtAcquisition, HbtRunConfig, QuadPairDataset};

/// Probability mass inside +-1 standard deviation of a normal distribution.
pub const CONFIDENCE_68: f64 = 0.682_689_492_137_086;

/// Moments of one run of one pair setting.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMoments {
    pub len: usize,
    /// `<H1(t+k)^2 H2(t)^2>` for each requested lag.
    pub fourth: Vec<f64>,
    /// `<H>` on arms `b` and `c`.
    pub first: [f64; 2],
    /// `<H^2>` on arms `b` and `c`.
    pub second: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairMoments {
    pub pair: QuadPair,
    pub lags: Vec<usize>,
    pub runs: Vec<RunMoments>,
}

/// Time-averaged moments of a dataset at the given post-DSP sample lags.
pub fn lagged_moments(dataset: &QuadPairDataset, lags: &[usize]) -> Result<PairMoments, EstimateError> {
    let runs = dataset
        .runs
        .par_iter()
        .map(|run| {
            let (h1, h2) = (run.h1.samples(), run.h2.samples());
            if h1.len() != h2.len() {
                return Err(EstimateError::Inconsistent("H1 and H2 lengths differ within a run".into()));
            }
            let n = h1.len();
            let limit = n / 10;
            let fourth = lags
                .iter()
                .map(|&lag| {
                    if lag >= limit {
                        return Err(EstimateError::LagOutOfRange { lag, limit });
                    }
                    Ok(lagged_fourth_moment(h1, h2, lag).expect("lag checked against length"))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mean = |h: &[f64]| h.iter().sum::<f64>() / n as f64;
            Ok(RunMoments {
                len: n,
                fourth,
                first: [mean(h1), mean(h2)],
                second: [raw_second_moment(h1), raw_second_moment(h2)],
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PairMoments {
        pair: dataset.pair(),
        lags: lags.to_vec(),
        runs,
    })
}

/// Moments of all four pair settings at a common lag grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimates {
    pub lags: Vec<usize>,
    pub tau_omega_per_lag: f64,
    /// In [`QuadPair::ALL`] order.
    pub pairs: Vec<PairMoments>,
    pub n_samples: usize,
    pub n_runs: usize,
    pub seed: Option<u64>,
    pub state: Option<GaussianState>,
    pub eta: f64,
}

pub fn moment_estimates(acq: &HbtAcquisition, lags: &[usize]) -> Result<MomentEstimates, EstimateError> {
    let mut datasets = Vec::with_capacity(4);
    for pair in QuadPair::ALL {
        datasets.push(acq.get(pair).ok_or(EstimateError::MissingPair(pair))?);
    }
    let first = datasets[0];
    let n_runs = first.runs.len();
    if n_runs < 2 {
        return Err(EstimateError::TooFewRuns);
    }
    let step = first.tau_omega_per_lag();
    for d in &datasets[1..] {
        if d.runs.len() != n_runs {
            return Err(EstimateError::Inconsistent("pair settings have different run counts".into()));
        }
        if (d.tau_omega_per_lag() - step).abs() > 1e-12 * step {
            return Err(EstimateError::Inconsistent("pair settings have different lag spacing".into()));
        }
    }
    let pairs = datasets
        .iter()
        .map(|d| lagged_moments(d, lags))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MomentEstimates {
        lags: lags.to_vec(),
        tau_omega_per_lag: step,
        pairs,
        n_samples: first.config.n_samples,
        n_runs,
        seed: Some(first.config.seed),
        state: Some(first.config.state),
        eta: first.config.eta,
    })
}

impl MomentEstimates {
    fn pair(&self, b: Quadrature, c: Quadrature) -> &PairMoments {
        &self.pairs[QuadPair::new(b, c).index()]
    }

    /// Per-arm first and second moments for quadrature `q`, pooled from the
    /// two pair settings that measured `q` on that arm.
    fn arm_moments(&self, arm: Arm, q: Quadrature, run: usize) -> (f64, f64) {
        let (p1, p2) = match arm {
            Arm::B => (self.pair(q, Quadrature::Plus), self.pair(q, Quadrature::Minus)),
            Arm::C => (self.pair(Quadrature::Plus, q), self.pair(Quadrature::Minus, q)),
        };
        let k = arm.index();
        let (r1, r2) = (&p1.runs[run], &p2.runs[run]);
        ((r1.first[k] + r2.first[k]) / 2.0, (r1.second[k] + r2.second[k]) / 2.0)
    }

    /// The ten moments of one run at lag index `lag_index`.
    pub fn run_quadrature_moments(&self, run: usize, lag_index: usize) -> QuadratureMoments {
        let mut m = QuadratureMoments::default();
        for b in Quadrature::BOTH {
            for c in Quadrature::BOTH {
                m.fourth[b.index()][c.index()] = self.pair(b, c).runs[run].fourth[lag_index];
            }
        }
        for arm in Arm::BOTH {
            for q in Quadrature::BOTH {
                m.second[arm.index()][q.index()] = self.arm_moments(arm, q, run).1;
            }
        }
        m
    }

    /// Moments averaged over the given runs (repeats allowed).
    pub fn pooled_quadrature_moments(&self, runs: &[usize], lag_index: usize) -> QuadratureMoments {
        average(runs.iter().map(|&r| self.run_quadrature_moments(r, lag_index)))
    }

    pub fn tau_omega(&self, lag_index: usize) -> f64 {
        self.lags[lag_index] as f64 * self.tau_omega_per_lag
    }
}

fn average(items: impl Iterator<Item = QuadratureMoments>) -> QuadratureMoments {
    let mut acc = QuadratureMoments::default();
    let mut n = 0usize;
    for m in items {
        for i in 0..2 {
            for j in 0..2 {
                acc.fourth[i][j] += m.fourth[i][j];
                acc.second[i][j] += m.second[i][j];
            }
        }
        n += 1;
    }
    let inv = 1.0 / n.max(1) as f64;
    for i in 0..2 {
        for j in 0..2 {
            acc.fourth[i][j] *= inv;
            acc.second[i][j] *= inv;
        }
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// Student-t scaled standard error of the per-run values.
    BetweenRun,
    /// Percentile interval from resampling runs with replacement.
    Bootstrap { resamples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Arm excess `sum <X^2> - 2` at or below which `g2` is refused.
    pub min_excess: f64,
    /// Arm excess below which the estimate is flagged ill-conditioned.
    pub warn_excess: f64,
    pub ci: CiMethod,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self {
            min_excess: 1e-3,
            warn_excess: 0.05,
            ci: CiMethod::BetweenRun,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateParams {
    pub v_plus: f64,
    pub v_minus: f64,
    pub alpha: f64,
}

impl From<&GaussianState> for StateParams {
    fn from(s: &GaussianState) -> Self {
        Self {
            v_plus: s.v_plus(),
            v_minus: s.v_minus(),
            alpha: s.alpha(),
        }
    }
}

impl StateParams {
    pub fn to_state(self) -> Result<GaussianState, g2hbt_core::StateError> {
        GaussianState::new(self.v_plus, self.v_minus, self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurveWarning {
    /// Near-vacuum input: small moment errors produce large `g2` errors.
    IllConditioned { excess_b: f64, excess_c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau_omega: f64,
    pub g2: f64,
    pub ci68_low: f64,
    pub ci68_high: f64,
}

impl CurvePoint {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci68_high - self.ci68_low)
    }

    pub fn covers(&self, value: f64) -> bool {
        self.ci68_low <= value && value <= self.ci68_high
    }

    pub fn overlaps(&self, low: f64, high: f64) -> bool {
        self.ci68_low <= high && low <= self.ci68_high
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    Analytic,
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub kind: CurveKind,
    pub state: Option<StateParams>,
    pub eta: f64,
    pub n_samples: usize,
    pub n_runs: usize,
    pub seed: Option<u64>,
    pub warnings: Vec<CurveWarning>,
}

/// `g2` over a strictly increasing `tau * Omega` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Curve {
    pub points: Vec<CurvePoint>,
    pub meta: CurveMeta,
}

impl G2Curve {
    /// Theory curve with zero-width intervals.
    pub fn analytic(state: &GaussianState, tau_omega: &[f64]) -> Result<Self, EstimateError> {
        let f = FilterSpec::normalized();
        let points = tau_omega
            .iter()
            .map(|&t| {
                let g = g2_tau_gaussian(state, &f, t)?;
                Ok(CurvePoint {
                    tau_omega: t,
                    g2: g,
                    ci68_low: g,
                    ci68_high: g,
                })
            })
            .collect::<Result<Vec<_>, EstimateError>>()?;
        Ok(Self {
            points,
            meta: CurveMeta {
                kind: CurveKind::Analytic,
                state: Some(state.into()),
                eta: 1.0,
                n_samples: 0,
                n_runs: 0,
                seed: None,
                warnings: Vec::new(),
            },
        })
    }

    pub fn at_zero(&self) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.tau_omega == 0.0)
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.meta
            .warnings
            .iter()
            .any(|w| matches!(w, CurveWarning::IllConditioned { .. }))
    }

    /// Grid strictly increasing and every point inside its interval.
    pub fn is_well_formed(&self) -> bool {
        self.points.windows(2).all(|w| w[0].tau_omega < w[1].tau_omega)
            && self.points.iter().all(|p| p.ci68_low <= p.g2 && p.g2 <= p.ci68_high)
    }
}

fn t_factor(runs: usize) -> f64 {
    let df = (runs - 1) as f64;
    StudentsT::new(0.0, 1.0, df)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + CONFIDENCE_68 / 2.0)
}

fn vanishing(m: &QuadratureMoments) -> EstimateError {
    EstimateError::DenominatorVanishing {
        excess_b: m.arm_excess(Arm::B),
        excess_c: m.arm_excess(Arm::C),
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Assemble `g2` and its 68% interval at every lag of `est`.
pub fn g2_from_moments(est: &MomentEstimates, opts: &EstimatorOptions) -> Result<G2Curve, EstimateError> {
    let runs = est.n_runs;
    if runs < 2 {
        return Err(EstimateError::TooFewRuns);
    }
    let all: Vec<usize> = (0..runs).collect();
    let mut warnings = Vec::new();
    let mut points = Vec::with_capacity(est.lags.len());

    for li in 0..est.lags.len() {
        let per_run: Vec<QuadratureMoments> = all.iter().map(|&r| est.run_quadrature_moments(r, li)).collect();
        let pooled = average(per_run.iter().copied());
        let g = pooled.g2(opts.min_excess).ok_or_else(|| vanishing(&pooled))?;
        if li == 0 {
            let (eb, ec) = (pooled.arm_excess(Arm::B), pooled.arm_excess(Arm::C));
            if eb < opts.warn_excess || ec < opts.warn_excess {
                log::warn!("ill-conditioned g2 estimate: arm excess b = {eb:.4e}, c = {ec:.4e}");
                warnings.push(CurveWarning::IllConditioned {
                    excess_b: eb,
                    excess_c: ec,
                });
            }
        }

        let (low, high) = match opts.ci {
            CiMethod::BetweenRun => {
                let values = per_run
                    .iter()
                    .map(|m| m.g2(opts.min_excess).ok_or_else(|| vanishing(m)))
                    .collect::<Result<Vec<_>, _>>()?;
                let mean = values.iter().sum::<f64>() / runs as f64;
                let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (runs - 1) as f64;
                let half = t_factor(runs) * (var / runs as f64).sqrt();
                (g - half, g + half)
            }
            CiMethod::Bootstrap { resamples, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(li as u64);
                let mut draws = Vec::with_capacity(resamples);
                let mut pick = vec![0usize; runs];
                for _ in 0..resamples {
                    for p in pick.iter_mut() {
                        *p = rng.random_range(0..runs);
                    }
                    let m = average(pick.iter().map(|&r| per_run[r]));
                    if let Some(v) = m.g2(opts.min_excess) {
                        draws.push(v);
                    }
                }
                if draws.is_empty() {
                    return Err(vanishing(&pooled));
                }
                draws.sort_by(f64::total_cmp);
                let tail = (1.0 - CONFIDENCE_68) / 2.0;
                (percentile(&draws, tail).min(g), percentile(&draws, 1.0 - tail).max(g))
            }
        };
        points.push(CurvePoint {
            tau_omega: est.tau_omega(li),
            g2: g,
            ci68_low: low,
            ci68_high: high,
        });
    }

    Ok(G2Curve {
        points,
        meta: CurveMeta {
            kind: CurveKind::Simulated,
            state: est.state.as_ref().map(StateParams::from),
            eta: est.eta,
            n_samples: est.n_samples,
            n_runs: runs,
            seed: est.seed,
            warnings,
        },
    })
}

/// Input-state parameters recovered from the arm records.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateEstimate {
    pub v_plus: f64,
    pub v_minus: f64,
    pub alpha: f64,
    pub se_v_plus: f64,
    pub se_v_minus: f64,
    pub se_alpha: f64,
    /// Physical state for theory overlays; equal to the raw estimate unless
    /// noise pushed `v_plus * v_minus` below one.
    pub state: GaussianState,
    pub projected: bool,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Variances and displacement at the interferometer input, from the
/// centred arm statistics: `V = 2 var(H) - 1`, `alpha = <H+> / sqrt2`.
pub fn recover_input_state(est: &MomentEstimates) -> Result<StateEstimate, EstimateError> {
    let runs = est.n_runs;
    if runs < 2 {
        return Err(EstimateError::TooFewRuns);
    }
    // per arm: (V+, V-, alpha) for every run, and pooled over runs
    let mut per_arm = [[0.0f64; 3]; 2];
    let mut se_arm = [[0.0f64; 3]; 2];
    let mut mu_plus = [0.0f64; 2];
    for arm in Arm::BOTH {
        let mut series: [Vec<f64>; 3] = Default::default();
        let mut pooled = [(0.0, 0.0); 2];
        for r in 0..runs {
            for q in Quadrature::BOTH {
                let (mu, m2) = est.arm_moments(arm, q, r);
                series[q.index()].push(2.0 * (m2 - mu * mu) - 1.0);
                pooled[q.index()].0 += mu / runs as f64;
                pooled[q.index()].1 += m2 / runs as f64;
                if q == Quadrature::Plus {
                    series[2].push(mu / SQRT_2);
                }
            }
        }
        let k = arm.index();
        for q in Quadrature::BOTH {
            let (mu, m2) = pooled[q.index()];
            per_arm[k][q.index()] = 2.0 * (m2 - mu * mu) - 1.0;
        }
        mu_plus[k] = pooled[0].0;
        per_arm[k][2] = pooled[0].0 / SQRT_2;
        for (i, s) in series.iter().enumerate() {
            se_arm[k][i] = mean_se(s).1;
        }
    }

    const NAMES: [&str; 3] = ["v_plus", "v_minus", "alpha"];
    for i in 0..3 {
        let (b, c) = (per_arm[0][i], per_arm[1][i]);
        let se = (se_arm[0][i].powi(2) + se_arm[1][i].powi(2)).sqrt();
        if (b - c).abs() > 5.0 * se {
            return Err(EstimateError::CalibrationMismatch {
                parameter: NAMES[i],
                b,
                c,
            });
        }
    }

    let pooled = |i: usize| (per_arm[0][i] + per_arm[1][i]) / 2.0;
    let pooled_se = |i: usize| (se_arm[0][i].powi(2) + se_arm[1][i].powi(2)).sqrt() / 2.0;
    let (v_plus, v_minus) = (pooled(0), pooled(1));
    let sign = if mu_plus[0] < 0.0 { -1.0 } else { 1.0 };
    let alpha = sign * (per_arm[0][2].abs() + per_arm[1][2].abs()) / 2.0;
    let (se_v_plus, se_v_minus, se_alpha) = (pooled_se(0), pooled_se(1), pooled_se(2));

    let product = v_plus * v_minus;
    let se_product = ((v_minus * se_v_plus).powi(2) + (v_plus * se_v_minus).powi(2)).sqrt();
    let (state, projected) = if product >= 1.0 {
        (GaussianState::new(v_plus, v_minus, alpha)?, false)
    } else if v_plus > 0.0 && v_minus > 0.0 && product >= 1.0 - 5.0 * se_product {
        let scale = 1.0 / product.sqrt();
        (GaussianState::new(v_plus * scale, v_minus * scale, alpha)?, true)
    } else {
        return Err(EstimateError::UnphysicalEstimate { product });
    };

    Ok(StateEstimate {
        v_plus,
        v_minus,
        alpha,
        se_v_plus,
        se_v_minus,
        se_alpha,
        state,
        projected,
    })
}

/// One point of a detection-efficiency sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LossPoint {
    pub eta: f64,
    pub curve: G2Curve,
}

/// Acquire and estimate `g2(0)` at each efficiency in `etas`.
///
/// Sweep point `k` uses seed `config.seed + k`, so the points are
/// statistically independent measurements.
pub fn loss_sweep(
    state: &GaussianState,
    etas: &[f64],
    config: &HbtRunConfig,
    opts: &EstimatorOptions,
) -> Result<Vec<LossPoint>, EstimateError> {
    if let Some(&bad) = etas.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
        return Err(EstimateError::InvalidEta(bad));
    }
    etas.par_iter()
        .enumerate()
        .map(|(k, &eta)| {
            let cfg = HbtRunConfig {
                state: *state,
                eta,
                seed: config.seed.wrapping_add(k as u64),
                ..config.clone()
            };
            let acq = acquire_all(&cfg)?;
            let est = moment_estimates(&acq, &[0])?;
            Ok(LossPoint {
                eta,
                curve: g2_from_moments(&est, opts)?,
            })
        })
        .collect()
}

/// Acquire all four settings and estimate `g2` at `lags`.
pub fn simulate_curve(config: &HbtRunConfig, lags: &[usize], opts: &EstimatorOptions) -> Result<(G2Curve, MomentEstimates), EstimateError> {
    let acq = acquire_all(config)?;
    let est = moment_estimates(&acq, lags)?;
    Ok((g2_from_moments(&est, opts)?, est))
}
