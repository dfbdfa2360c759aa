use g2hbt::estimate::{CurveKind, CurveMeta, CurvePoint, G2Curve};
use g2hbt::io::{
    export_dataset, import_dataset, leading_comment, read_curve_csv, read_g2ts, read_pair_csv, write_curve_csv,
    write_g2ts, write_pair_csv, IoError,
};
use g2hbt::signal::RunRecord;
use g2hbt::{acquire_all, g2_from_moments, moment_estimates, EstimatorOptions, HbtRunConfig, TimeSeries};
use g2hbt_core::{Arm, GaussianState, QuadPair, Quadrature};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

fn series() -> impl Strategy<Value = TimeSeries> {
    (
        prop::collection::vec(finite(), 1..200),
        1e-3f64..1e9,
        prop::sample::select(Quadrature::BOTH.to_vec()),
        prop::sample::select(Arm::BOTH.to_vec()),
    )
        .prop_map(|(s, rate, q, a)| TimeSeries::new(s, rate, q, a).unwrap())
}

proptest! {
    #[test]
    fn g2ts_round_trips_bitwise(s in series()) {
        let mut buf = Vec::new();
        write_g2ts(&mut buf, &s).unwrap();
        let back = read_g2ts(&buf[..]).unwrap();
        prop_assert_eq!(back.samples(), s.samples());
        prop_assert_eq!(back.sample_rate(), s.sample_rate());
        prop_assert_eq!(back.quadrature(), s.quadrature());
        prop_assert_eq!(back.arm(), s.arm());
    }

    #[test]
    fn truncated_g2ts_is_rejected(s in series(), cut in 1usize..8) {
        let mut buf = Vec::new();
        write_g2ts(&mut buf, &s).unwrap();
        buf.truncate(buf.len() - cut);
        let truncated = matches!(read_g2ts(&buf[..]), Err(IoError::Truncated { .. }));
        prop_assert!(truncated);
    }

    #[test]
    fn pair_csv_round_trips(samples in prop::collection::vec((finite(), finite()), 1..100)) {
        let (a, b): (Vec<f64>, Vec<f64>) = samples.into_iter().unzip();
        let run = RunRecord {
            h1: TimeSeries::new(a.clone(), 1.0, Quadrature::Plus, Arm::B).unwrap(),
            h2: TimeSeries::new(b.clone(), 1.0, Quadrature::Plus, Arm::C).unwrap(),
        };
        let mut buf = Vec::new();
        write_pair_csv(&mut buf, &run).unwrap();
        let (h1, h2) = read_pair_csv(&buf[..]).unwrap();
        prop_assert_eq!(h1, a);
        prop_assert_eq!(h2, b);
    }

    #[test]
    fn curve_csv_round_trips(rows in prop::collection::vec((finite(), 0f64..1.0, 0f64..1.0), 1..40), n in 10_000usize..1_000_000, runs in 2usize..20) {
        let mut tau = 0.0;
        let points = rows
            .iter()
            .map(|&(g, lo, hi)| {
                tau += 0.25;
                CurvePoint { tau_omega: tau, g2: g, ci68_low: g - lo, ci68_high: g + hi }
            })
            .collect();
        let curve = G2Curve {
            points,
            meta: CurveMeta { kind: CurveKind::Simulated, state: None, eta: 1.0, n_samples: n, n_runs: runs, seed: None, warnings: vec![] },
        };
        let mut buf = Vec::new();
        write_curve_csv(&mut buf, &curve, "seed = 3\n[tau]\nmax = 1.0").unwrap();
        let back = read_curve_csv(&buf[..]).unwrap();
        prop_assert_eq!(&back.points, &curve.points);
        prop_assert_eq!(back.meta.n_samples, n);
        prop_assert_eq!(back.meta.n_runs, runs);
        prop_assert_eq!(leading_comment(std::str::from_utf8(&buf).unwrap()), "seed = 3\n[tau]\nmax = 1.0\n");
    }
}

#[test]
fn exported_dataset_reproduces_the_estimate() {
    let cfg = HbtRunConfig {
        n_samples: 10_000,
        n_runs: 3,
        lag_subdivision: 2,
        seed: 21,
        eta: 0.9,
        ..HbtRunConfig::new(GaussianState::new(3.0, 0.7, 0.4).unwrap(), QuadPair::ALL[0])
    };
    let acq = acquire_all(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    export_dataset(dir.path(), &acq).unwrap();
    let back = import_dataset(dir.path()).unwrap();

    assert_eq!(back.datasets.len(), 4);
    for (a, b) in acq.datasets.iter().zip(&back.datasets) {
        assert_eq!(a.pair(), b.pair());
        assert_eq!(a.config, b.config);
        assert_eq!(a.tau_omega_per_lag(), b.tau_omega_per_lag());
        for (ra, rb) in a.runs.iter().zip(&b.runs) {
            assert_eq!(ra.h1.samples(), rb.h1.samples());
            assert_eq!(ra.h2.samples(), rb.h2.samples());
        }
    }
    let opts = EstimatorOptions::default();
    let lags = [0, 1, 2];
    let c1 = g2_from_moments(&moment_estimates(&acq, &lags).unwrap(), &opts).unwrap();
    let c2 = g2_from_moments(&moment_estimates(&back, &lags).unwrap(), &opts).unwrap();
    assert_eq!(c1, c2);
}

#[test]
fn manifest_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(import_dataset(dir.path()), Err(IoError::File { .. })));
    std::fs::write(dir.path().join("manifest.json"), "{\"version\": 1, \"extra\": 2}").unwrap();
    assert!(matches!(import_dataset(dir.path()), Err(IoError::Json(_))));
}
