//! Seeded synthesis of homodyne detector records and the digital filter chain.
//!
//! Homodyne outcomes of Gaussian states are Gaussian random variables, so a
//! classical sampler with the right means and covariances reproduces their
//! statistics exactly. Records are synthesised as white noise at the raw
//! (oversampled) rate, low-passed with a brick-wall top-hat, and decimated.
//!
//! Every random stream is addressed by `(seed, run, pair, component)` on a
//! counter-based generator, so a dataset does not depend on the order or
//! thread in which runs are produced.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use g2hbt_core::{attenuate, Arm, FilterSpec, GaussianState, QuadPair, Quadrature};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::SignalError;

/// Processing step applied to a series, recorded for provenance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stage {
    Synthesized,
    Filtered { omega: f64 },
    Decimated { factor: usize },
    Imported,
}

/// Where a series came from: generator seed, stream address and stages.
#[derive(Debug, Clone, PartialEq)]
pub struct Lineage {
    pub seed: u64,
    pub run: u32,
    pub pair: QuadPair,
    pub stages: Vec<Stage>,
}

/// Uniformly sampled real detector record.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sample_rate: f64,
    quadrature: Quadrature,
    arm: Arm,
    /// Band limit already imposed on the record; `None` means full band.
    band: Option<FilterSpec>,
    lineage: Option<Lineage>,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sample_rate: f64, quadrature: Quadrature, arm: Arm) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::InvalidSeries("empty series"));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(SignalError::InvalidSeries("sample rate must be positive"));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(SignalError::InvalidSeries("non-finite sample"));
        }
        Ok(Self {
            samples,
            sample_rate,
            quadrature,
            arm,
            band: None,
            lineage: None,
        })
    }

    pub fn with_band(mut self, band: FilterSpec) -> Self {
        self.band = Some(band);
        self
    }

    pub fn with_lineage(mut self, lineage: Lineage) -> Self {
        self.lineage = Some(lineage);
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn quadrature(&self) -> Quadrature {
        self.quadrature
    }

    pub fn arm(&self) -> Arm {
        self.arm
    }

    pub fn band(&self) -> Option<FilterSpec> {
        self.band
    }

    pub fn lineage(&self) -> Option<&Lineage> {
        self.lineage.as_ref()
    }

    /// Nyquist frequency in rad/s.
    pub fn nyquist(&self) -> f64 {
        PI * self.sample_rate
    }

    /// Effective band edge: the imposed filter, or Nyquist when unfiltered.
    pub fn band_edge(&self) -> f64 {
        self.band.map_or(self.nyquist(), |b| b.omega())
    }

    fn push_stage(&mut self, stage: Stage) {
        if let Some(l) = self.lineage.as_mut() {
            l.stages.push(stage);
        }
    }
}

/// One HBT acquisition setting.
#[derive(Debug, Clone, PartialEq)]
pub struct HbtRunConfig {
    /// State at the interferometer input, before detection loss.
    pub state: GaussianState,
    pub pair: QuadPair,
    /// Band-limited (Nyquist-spaced) samples per run.
    pub n_samples: usize,
    pub n_runs: usize,
    /// Raw rate over final band rate; the raw rate is `oversample * base_rate`.
    pub oversample: usize,
    /// Post-DSP samples per `pi` of `tau * Omega`; the records are decimated
    /// by `oversample / lag_subdivision`.
    pub lag_subdivision: usize,
    pub seed: u64,
    /// Lumped detection efficiency.
    pub eta: f64,
    /// Final sample rate in S/s; the band edge is `pi * base_rate` rad/s.
    pub base_rate: f64,
    /// Optional white detector noise, in vacuum units over the final band.
    pub electronic_noise: f64,
}

pub const MIN_SAMPLES: usize = 10_000;
pub const MAX_OVERSAMPLE: usize = 8;

impl HbtRunConfig {
    /// Defaults mirroring the experiment: 10 runs, 240 kS/s raw, 120 kS/s final.
    pub fn new(state: GaussianState, pair: QuadPair) -> Self {
        Self {
            state,
            pair,
            n_samples: 100_000,
            n_runs: 10,
            oversample: 2,
            lag_subdivision: 1,
            seed: 0,
            eta: 1.0,
            base_rate: 120e3,
            electronic_noise: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), SignalError> {
        let bad = |m: String| Err(SignalError::InvalidConfig(m));
        if self.n_samples < MIN_SAMPLES {
            return bad(format!("n_samples = {} below {MIN_SAMPLES}", self.n_samples));
        }
        if self.n_runs < 2 {
            return bad(format!("n_runs = {} (need at least 2)", self.n_runs));
        }
        if !(2..=MAX_OVERSAMPLE).contains(&self.oversample) {
            return bad(format!("oversample = {} outside [2, {MAX_OVERSAMPLE}]", self.oversample));
        }
        if self.lag_subdivision == 0 || self.oversample % self.lag_subdivision != 0 {
            return bad(format!(
                "lag_subdivision = {} must divide oversample = {}",
                self.lag_subdivision, self.oversample
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return bad(format!("eta = {} outside [0, 1]", self.eta));
        }
        if !(self.base_rate.is_finite() && self.base_rate > 0.0) {
            return bad(format!("base_rate = {} must be positive", self.base_rate));
        }
        if !(self.electronic_noise.is_finite() && self.electronic_noise >= 0.0) {
            return bad(format!("electronic_noise = {} must be >= 0", self.electronic_noise));
        }
        Ok(())
    }

    /// The state the detectors see, after the lumped efficiency.
    pub fn detected_state(&self) -> Result<GaussianState, SignalError> {
        Ok(attenuate(&self.state, self.eta)?)
    }

    pub fn raw_rate(&self) -> f64 {
        self.base_rate * self.oversample as f64
    }

    pub fn band(&self) -> FilterSpec {
        FilterSpec::top_hat(PI * self.base_rate).expect("validated base rate")
    }

    pub fn decimation(&self) -> usize {
        self.oversample / self.lag_subdivision
    }

    pub fn raw_len(&self) -> usize {
        self.n_samples * self.oversample
    }

    pub fn with_pair(&self, pair: QuadPair) -> Self {
        Self { pair, ..self.clone() }
    }
}

/// Filtered and decimated records of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub h1: TimeSeries,
    pub h2: TimeSeries,
}

/// One quadrature-pair setting: paired `(H1, H2)` records for every run.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadPairDataset {
    pub config: HbtRunConfig,
    pub band: FilterSpec,
    pub runs: Vec<RunRecord>,
}

impl QuadPairDataset {
    pub fn pair(&self) -> QuadPair {
        self.config.pair
    }

    /// Sample rate of the post-DSP records.
    pub fn sample_rate(&self) -> f64 {
        self.runs.first().map_or(0.0, |r| r.h1.sample_rate())
    }

    /// `tau * Omega` advanced by one post-DSP sample.
    pub fn tau_omega_per_lag(&self) -> f64 {
        self.band.omega() / self.sample_rate()
    }

    pub fn total_points(&self) -> usize {
        self.runs.iter().map(|r| r.h1.len()).sum()
    }
}

/// The four pair settings of a full `g2` measurement, in [`QuadPair::ALL`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct HbtAcquisition {
    pub datasets: Vec<QuadPairDataset>,
}

impl HbtAcquisition {
    pub fn get(&self, pair: QuadPair) -> Option<&QuadPairDataset> {
        self.datasets.iter().find(|d| d.pair() == pair)
    }
}

// Stream address on the counter-based generator.
fn stream_id(run: usize, pair: QuadPair, component: u64) -> u64 {
    ((run as u64) << 8) | ((pair.index() as u64) << 4) | component
}

fn gaussian_stream(seed: u64, run: usize, pair: QuadPair, component: u64, len: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(run, pair, component));
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Raw detector records with the fluctuation amplitude scaled by `noise_gain`.
fn synth_records(config: &HbtRunConfig, run: usize, noise_gain: f64) -> Result<(TimeSeries, TimeSeries), SignalError> {
    config.validate()?;
    let state = config.detected_state()?;
    let len = config.raw_len();
    let pair = config.pair;
    let seed = config.seed;
    let mean = |q: Quadrature| match q {
        Quadrature::Plus => 2.0 * state.alpha(),
        Quadrature::Minus => 0.0,
    };
    let std_dev = |q: Quadrature| {
        noise_gain
            * match q {
                Quadrature::Plus => state.v_plus(),
                Quadrature::Minus => state.v_minus(),
            }
            .sqrt()
    };

    // Signal and vacuum quadratures feeding each arm. With i == j both arms
    // see the same realisations; otherwise the two quadratures are
    // uncorrelated for these states and are drawn independently.
    let sig_b = gaussian_stream(seed, run, pair, 0, len);
    let vac_b = gaussian_stream(seed, run, pair, 1, len);
    let (sig_c, vac_c) = if pair.same_quadrature() {
        (None, None)
    } else {
        (
            Some(gaussian_stream(seed, run, pair, 2, len)),
            Some(gaussian_stream(seed, run, pair, 3, len)),
        )
    };
    let sig_c = sig_c.as_deref().unwrap_or(&sig_b);
    let vac_c = vac_c.as_deref().unwrap_or(&vac_b);

    let (mb, sb) = (mean(pair.b), std_dev(pair.b));
    let (mc, sc) = (mean(pair.c), std_dev(pair.c));
    let mut h1: Vec<f64> = sig_b
        .iter()
        .zip(&vac_b)
        .map(|(a, v)| (mb + sb * a + noise_gain * v) * FRAC_1_SQRT_2)
        .collect();
    let mut h2: Vec<f64> = sig_c
        .iter()
        .zip(vac_c)
        .map(|(a, v)| (mc + sc * a - noise_gain * v) * FRAC_1_SQRT_2)
        .collect();

    if config.electronic_noise > 0.0 {
        let e = noise_gain * config.electronic_noise.sqrt();
        for (h, component) in [(&mut h1, 4), (&mut h2, 5)] {
            for (x, g) in h.iter_mut().zip(gaussian_stream(seed, run, pair, component, len)) {
                *x += e * g;
            }
        }
    }

    let lineage = Lineage {
        seed,
        run: run as u32,
        pair,
        stages: vec![Stage::Synthesized],
    };
    let rate = config.raw_rate();
    Ok((
        TimeSeries::new(h1, rate, pair.b, Arm::B)?.with_lineage(lineage.clone()),
        TimeSeries::new(h2, rate, pair.c, Arm::C)?.with_lineage(lineage),
    ))
}

/// Raw `(H1, H2)` records for one run, in vacuum units of the raw band.
///
/// `H1 = (X_a^i + X_v^i)/sqrt2` on arm `b`, `H2 = (X_a^j - X_v^j)/sqrt2` on
/// arm `c`, where `X_a` has the detected state's variance and mean and `X_v`
/// is vacuum.
pub fn synth_raw_pair(config: &HbtRunConfig, run_index: usize) -> Result<(TimeSeries, TimeSeries), SignalError> {
    synth_records(config, run_index, 1.0)
}

fn check_band(series: &TimeSeries, band: &FilterSpec) -> Result<(), SignalError> {
    let nyquist = series.nyquist();
    if band.omega() >= nyquist {
        return Err(SignalError::BandAboveNyquist {
            band: band.omega(),
            nyquist,
        });
    }
    Ok(())
}

/// Brick-wall weights over DFT bins; an edge bin exactly at the band gets half weight.
fn tophat_mask(len: usize, sample_rate: f64, band: &FilterSpec) -> Vec<f64> {
    let edge = band.omega() * len as f64 / (2.0 * PI * sample_rate);
    (0..len)
        .map(|m| {
            let f = if m <= len / 2 { m } else { len - m } as f64;
            if (f - edge).abs() <= 1e-9 * edge.max(1.0) {
                0.5
            } else if f < edge {
                1.0
            } else {
                0.0
            }
        })
        .collect()
}

fn apply_mask(buf: &mut [Complex64], mask: &[f64]) {
    let n = buf.len();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(n).process(buf);
    let scale = 1.0 / n as f64;
    for (x, w) in buf.iter_mut().zip(mask) {
        *x *= w * scale;
    }
    planner.plan_fft_inverse(n).process(buf);
}

/// Low-pass `series` with a top-hat of edge `band` by masking its spectrum.
pub fn tophat_filter(series: &TimeSeries, band: &FilterSpec) -> Result<TimeSeries, SignalError> {
    check_band(series, band)?;
    let mask = tophat_mask(series.len(), series.sample_rate(), band);
    let mut buf: Vec<Complex64> = series.samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    apply_mask(&mut buf, &mask);
    let mut out = series.clone();
    out.samples = buf.into_iter().map(|c| c.re).collect();
    out.band = Some(*band);
    out.push_stage(Stage::Filtered { omega: band.omega() });
    Ok(out)
}

/// Filters two equally long real records with one complex transform.
///
/// The mask is real and symmetric in frequency, so the real and imaginary
/// parts of `h1 + i h2` are filtered independently.
fn tophat_filter_pair(h1: &TimeSeries, h2: &TimeSeries, band: &FilterSpec) -> Result<(TimeSeries, TimeSeries), SignalError> {
    if h1.len() != h2.len() || h1.sample_rate() != h2.sample_rate() {
        return Err(SignalError::InvalidSeries("paired records differ in length or rate"));
    }
    check_band(h1, band)?;
    let mask = tophat_mask(h1.len(), h1.sample_rate(), band);
    let mut buf: Vec<Complex64> = h1
        .samples
        .iter()
        .zip(&h2.samples)
        .map(|(&a, &b)| Complex64::new(a, b))
        .collect();
    apply_mask(&mut buf, &mask);
    let (mut o1, mut o2) = (h1.clone(), h2.clone());
    o1.samples = buf.iter().map(|c| c.re).collect();
    o2.samples = buf.iter().map(|c| c.im).collect();
    for o in [&mut o1, &mut o2] {
        o.band = Some(*band);
        o.push_stage(Stage::Filtered { omega: band.omega() });
    }
    Ok((o1, o2))
}

/// Keeps every `factor`-th sample after checking the band fits the new rate.
pub fn decimate(series: &TimeSeries, factor: usize) -> Result<TimeSeries, SignalError> {
    if factor == 0 {
        return Err(SignalError::ZeroFactor);
    }
    if factor == 1 {
        return Ok(series.clone());
    }
    let new_rate = series.sample_rate() / factor as f64;
    let nyquist = PI * new_rate;
    let band = series.band_edge();
    if band > nyquist * (1.0 + 1e-12) {
        return Err(SignalError::AliasingRejected { factor, band, nyquist });
    }
    let mut out = series.clone();
    out.samples = series.samples.iter().step_by(factor).copied().collect();
    out.sample_rate = new_rate;
    out.push_stage(Stage::Decimated { factor });
    Ok(out)
}

fn acquire_run(config: &HbtRunConfig, run: usize) -> Result<RunRecord, SignalError> {
    // Raw samples carry `oversample` times the in-band noise power.
    let gain = (config.oversample as f64).sqrt();
    let (h1, h2) = synth_records(config, run, gain)?;
    let (h1, h2) = tophat_filter_pair(&h1, &h2, &config.band())?;
    let d = config.decimation();
    Ok(RunRecord {
        h1: decimate(&h1, d)?,
        h2: decimate(&h2, d)?,
    })
}

/// Synthesise, filter and decimate every run of one pair setting.
pub fn acquire(config: &HbtRunConfig) -> Result<QuadPairDataset, SignalError> {
    config.validate()?;
    let runs = (0..config.n_runs)
        .into_par_iter()
        .map(|r| acquire_run(config, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(QuadPairDataset {
        config: config.clone(),
        band: config.band(),
        runs,
    })
}

/// All four quadrature-pair settings, each with its own random streams.
pub fn acquire_all(config: &HbtRunConfig) -> Result<HbtAcquisition, SignalError> {
    let datasets = QuadPair::ALL
        .par_iter()
        .map(|&p| acquire(&config.with_pair(p)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HbtAcquisition { datasets })
}
