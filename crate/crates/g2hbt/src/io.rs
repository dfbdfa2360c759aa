//! File formats: binary and CSV detector records, curve CSV, summary JSON,
//! and dataset directories with a JSON manifest.
//!
//! Binary record layout (little-endian): magic `G2TS`, `u16` version, `u8`
//! arm (0 = b, 1 = c), `u8` quadrature (0 = +, 1 = -), `u32` sample count,
//! `f64` sample rate, then the `f64` samples. The header is 20 bytes.

use std::fs;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use g2hbt_core::{Arm, FilterSpec, GaussianState, QuadPair, Quadrature};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimate::{CurveKind, CurveMeta, CurvePoint, CurveWarning, G2Curve, StateParams};
use crate::signal::{HbtAcquisition, HbtRunConfig, Lineage, QuadPairDataset, RunRecord, Stage, TimeSeries};
use crate::SignalError;

pub const MAGIC: [u8; 4] = *b"G2TS";
pub const FORMAT_VERSION: u16 = 1;
pub const HEADER_LEN: usize = 20;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a G2TS record (bad magic)")]
    BadMagic,
    #[error("unsupported G2TS version {0}")]
    UnsupportedVersion(u16),
    #[error("invalid {field} code {code} in G2TS header")]
    BadLabel { field: &'static str, code: u8 },
    #[error("record truncated: header promises {expected} samples, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("record holds {0} samples, more than a u32 count allows")]
    TooLong(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("invalid manifest: {0}")]
    Manifest(String),
}

fn at(path: &Path) -> impl FnOnce(io::Error) -> IoError + '_ {
    move |source| IoError::File {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_g2ts<W: Write>(mut w: W, series: &TimeSeries) -> Result<(), IoError> {
    let count = u32::try_from(series.len()).map_err(|_| IoError::TooLong(series.len()))?;
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    header.push(series.arm().index() as u8);
    header.push(series.quadrature().index() as u8);
    header.extend_from_slice(&count.to_le_bytes());
    header.extend_from_slice(&series.sample_rate().to_le_bytes());
    w.write_all(&header)?;
    let mut body = Vec::with_capacity(8 * series.len());
    for x in series.samples() {
        body.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&body)?;
    Ok(())
}

pub fn read_g2ts<R: Read>(mut r: R) -> Result<TimeSeries, IoError> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if header[..4] != MAGIC {
        return Err(IoError::BadMagic);
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    let arm = *Arm::BOTH.get(header[6] as usize).ok_or(IoError::BadLabel {
        field: "arm",
        code: header[6],
    })?;
    let quadrature = *Quadrature::BOTH.get(header[7] as usize).ok_or(IoError::BadLabel {
        field: "quadrature",
        code: header[7],
    })?;
    let count = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let rate = f64::from_le_bytes(header[12..20].try_into().unwrap());
    let mut body = Vec::with_capacity(8 * count);
    r.take(8 * count as u64).read_to_end(&mut body)?;
    if body.len() != 8 * count {
        return Err(IoError::Truncated {
            expected: count,
            found: body.len() / 8,
        });
    }
    let samples = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(TimeSeries::new(samples, rate, quadrature, arm)?)
}

/// `index,h1,h2` rows for one run.
pub fn write_pair_csv<W: Write>(w: W, run: &RunRecord) -> Result<(), IoError> {
    let mut w = BufWriter::new(w);
    writeln!(w, "index,h1,h2")?;
    for (i, (a, b)) in run.h1.samples().iter().zip(run.h2.samples()).enumerate() {
        writeln!(w, "{i},{a},{b}")?;
    }
    w.flush()?;
    Ok(())
}

/// Read `index,h1,h2` rows back into raw sample vectors.
pub fn read_pair_csv<R: Read>(r: R) -> Result<(Vec<f64>, Vec<f64>), IoError> {
    let mut h1 = Vec::new();
    let mut h2 = Vec::new();
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if n == 0 || line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields = split_fields(line, 3, n + 1)?;
        h1.push(fields[1]);
        h2.push(fields[2]);
    }
    Ok((h1, h2))
}

fn split_fields(line: &str, expected: usize, line_no: usize) -> Result<Vec<f64>, IoError> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expected {
        return Err(IoError::Parse {
            line: line_no,
            message: format!("expected {expected} columns, found {}", fields.len()),
        });
    }
    fields
        .iter()
        .map(|f| {
            f.trim().parse::<f64>().map_err(|e| IoError::Parse {
                line: line_no,
                message: format!("{f:?}: {e}"),
            })
        })
        .collect()
}

pub const CURVE_HEADER: &str = "tau_omega,g2,ci68_low,ci68_high,n_samples,n_runs";

/// Curve table preceded by `# `-prefixed provenance lines.
pub fn write_curve_csv<W: Write>(w: W, curve: &G2Curve, provenance: &str) -> Result<(), IoError> {
    write_table(w, curve, provenance, "tau_omega")
}

/// Like [`write_curve_csv`] but with the first column named `key` (e.g. `alpha`).
pub fn write_table<W: Write>(w: W, curve: &G2Curve, provenance: &str, key: &str) -> Result<(), IoError> {
    let mut w = BufWriter::new(w);
    write_comment(&mut w, provenance)?;
    writeln!(w, "{key},g2,ci68_low,ci68_high,n_samples,n_runs")?;
    let (n, r) = (curve.meta.n_samples, curve.meta.n_runs);
    for p in &curve.points {
        writeln!(w, "{},{},{},{},{n},{r}", p.tau_omega, p.g2, p.ci68_low, p.ci68_high)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comment<W: Write>(w: &mut W, text: &str) -> io::Result<()> {
    for line in text.lines() {
        if line.is_empty() {
            writeln!(w, "#")?;
        } else {
            writeln!(w, "# {line}")?;
        }
    }
    Ok(())
}

/// Leading `# ` lines of a file with the prefix removed.
pub fn leading_comment(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        match line.strip_prefix('#') {
            Some(rest) => {
                out.push_str(rest.strip_prefix(' ').unwrap_or(rest));
                out.push('\n');
            }
            None => break,
        }
    }
    out
}

/// Parse a curve CSV. Metadata other than sizes is not stored in the
/// table, so the result carries `kind = Simulated` when intervals are
/// non-degenerate and no state.
pub fn read_curve_csv<R: Read>(r: R) -> Result<G2Curve, IoError> {
    let mut points = Vec::new();
    let mut sizes = (0usize, 0usize);
    let mut header_seen = false;
    for (n, line) in BufReader::new(r).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let f = split_fields(line, 6, n + 1)?;
        sizes = (f[4] as usize, f[5] as usize);
        points.push(CurvePoint {
            tau_omega: f[0],
            g2: f[1],
            ci68_low: f[2],
            ci68_high: f[3],
        });
    }
    let kind = if points.iter().any(|p| p.ci68_low != p.ci68_high) {
        CurveKind::Simulated
    } else {
        CurveKind::Analytic
    };
    Ok(G2Curve {
        points,
        meta: CurveMeta {
            kind,
            state: None,
            eta: 1.0,
            n_samples: sizes.0,
            n_runs: sizes.1,
            seed: None,
            warnings: Vec::new(),
        },
    })
}

/// One simulated curve condensed to its `tau = 0` result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub label: String,
    pub state: StateParams,
    pub eta: f64,
    pub seed: Option<u64>,
    pub g2_at_zero: f64,
    pub ci68: [f64; 2],
    pub analytic_g2: f64,
    pub curve_file: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<CurveWarning>,
}

/// Mirror of [`HbtRunConfig`] without the pair, for manifests.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigRecord {
    pub state: StateParams,
    pub n_samples: usize,
    pub n_runs: usize,
    pub oversample: usize,
    pub lag_subdivision: usize,
    pub seed: u64,
    pub eta: f64,
    pub base_rate: f64,
    pub electronic_noise: f64,
}

impl From<&HbtRunConfig> for RunConfigRecord {
    fn from(c: &HbtRunConfig) -> Self {
        Self {
            state: (&c.state).into(),
            n_samples: c.n_samples,
            n_runs: c.n_runs,
            oversample: c.oversample,
            lag_subdivision: c.lag_subdivision,
            seed: c.seed,
            eta: c.eta,
            base_rate: c.base_rate,
            electronic_noise: c.electronic_noise,
        }
    }
}

impl RunConfigRecord {
    pub fn to_config(&self, pair: QuadPair) -> Result<HbtRunConfig, IoError> {
        let state: GaussianState = self
            .state
            .to_state()
            .map_err(|e| IoError::Manifest(e.to_string()))?;
        Ok(HbtRunConfig {
            state,
            pair,
            n_samples: self.n_samples,
            n_runs: self.n_runs,
            oversample: self.oversample,
            lag_subdivision: self.lag_subdivision,
            seed: self.seed,
            eta: self.eta,
            base_rate: self.base_rate,
            electronic_noise: self.electronic_noise,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRun {
    pub h1: String,
    pub h2: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestPair {
    /// `pp`, `pm`, `mp` or `mm`.
    pub pair: String,
    pub runs: Vec<ManifestRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u16,
    /// Top-hat band edge in rad/s; `tau * Omega` per lag is `band / sample_rate`.
    pub band: f64,
    pub config: RunConfigRecord,
    pub pairs: Vec<ManifestPair>,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(at(path))
}

/// Write every run of every pair as G2TS files plus `manifest.json`.
pub fn export_dataset(dir: &Path, acq: &HbtAcquisition) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(at(dir))?;
    let first = acq
        .datasets
        .first()
        .ok_or_else(|| IoError::Manifest("no datasets to export".into()))?;
    let mut pairs = Vec::new();
    for ds in &acq.datasets {
        let tag = ds.pair().tag();
        let mut runs = Vec::new();
        for (k, run) in ds.runs.iter().enumerate() {
            let names = [format!("{tag}_run{k:03}_b.g2ts"), format!("{tag}_run{k:03}_c.g2ts")];
            for (name, series) in names.iter().zip([&run.h1, &run.h2]) {
                let mut buf = Vec::new();
                write_g2ts(&mut buf, series)?;
                write_file(&dir.join(name), &buf)?;
            }
            let [h1, h2] = names;
            runs.push(ManifestRun { h1, h2 });
        }
        pairs.push(ManifestPair {
            pair: tag.to_string(),
            runs,
        });
    }
    let manifest = Manifest {
        version: FORMAT_VERSION,
        band: first.band.omega(),
        config: (&first.config).into(),
        pairs,
    };
    let mut json = serde_json::to_string_pretty(&manifest)?;
    json.push('\n');
    write_file(&dir.join(MANIFEST_NAME), json.as_bytes())
}

fn read_series(dir: &Path, name: &str, arm: Arm, quadrature: Quadrature, band: FilterSpec, lineage: Lineage) -> Result<TimeSeries, IoError> {
    let path = dir.join(name);
    let file = fs::File::open(&path).map_err(at(&path))?;
    let s = read_g2ts(BufReader::new(file))?;
    if s.arm() != arm || s.quadrature() != quadrature {
        return Err(IoError::Manifest(format!(
            "{name}: labelled {}{} but listed as {}{}",
            s.arm().symbol(),
            s.quadrature(),
            arm.symbol(),
            quadrature
        )));
    }
    Ok(s.with_band(band).with_lineage(lineage))
}

/// Load a directory written by [`export_dataset`] (or hand-assembled with
/// the same manifest layout).
pub fn import_dataset(dir: &Path) -> Result<HbtAcquisition, IoError> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(at(&path))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.version != FORMAT_VERSION {
        return Err(IoError::UnsupportedVersion(manifest.version));
    }
    let band = FilterSpec::top_hat(manifest.band).ok_or_else(|| IoError::Manifest(format!("band {}", manifest.band)))?;
    let mut datasets = Vec::new();
    for mp in &manifest.pairs {
        let pair = QuadPair::parse(&mp.pair).ok_or_else(|| IoError::Manifest(format!("unknown pair {:?}", mp.pair)))?;
        if datasets.iter().any(|d: &QuadPairDataset| d.pair() == pair) {
            return Err(IoError::Manifest(format!("pair {} listed twice", mp.pair)));
        }
        let runs = mp
            .runs
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let lineage = Lineage {
                    seed: manifest.config.seed,
                    run: k as u32,
                    pair,
                    stages: vec![Stage::Imported],
                };
                Ok(RunRecord {
                    h1: read_series(dir, &r.h1, Arm::B, pair.b, band, lineage.clone())?,
                    h2: read_series(dir, &r.h2, Arm::C, pair.c, band, lineage)?,
                })
            })
            .collect::<Result<Vec<_>, IoError>>()?;
        let mut config = manifest.config.to_config(pair)?;
        config.n_runs = runs.len();
        datasets.push(QuadPairDataset { config, band, runs });
    }
    datasets.sort_by_key(|d| d.pair().index());
    Ok(HbtAcquisition { datasets })
}
