//! Acceptance suite.
//!
//! One test per criterion; each prints a `PASS criterion N` line (visible
//! with `--nocapture`) and enforces its stated tolerances and runtime
//! budget. Criteria that exercise the binary run it exactly as a user
//! would and compare output trees byte for byte.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use bispectral::bispec::{bicoherence, bispectrum, bispectrum_full, detect_peaks, surrogate_test};
use bispectral::ingest::{parse_ticks, sessionize, transform, PriceColumn, TransformSpec};
use bispectral::rng::SplitMix64;
use bispectral::spectral::{dft, dft_reference, mean_power_spectrum, power_spectrum, TimeSeries};
use bispectral::synth::{generate, Coupling, SynthParams};

const SIZES: [usize; 4] = [8, 64, 256, 1024];
const SERIES_PER_SIZE: usize = 25;

fn pass(criterion: u32, detail: &str) {
    println!("PASS criterion {criterion}: {detail}");
}

fn random_series(n: usize, seed: u64) -> TimeSeries {
    let mut rng = SplitMix64::new(seed);
    TimeSeries::new(
        (0..n).map(|_| rng.next_symmetric(1.0)).collect(),
        1.0,
        "corpus",
    )
    .unwrap()
}

fn benchmark_params(coupling: Coupling, noise: f64, seed: u64) -> SynthParams {
    SynthParams {
        n: 256,
        m: 64,
        k_alpha: 5,
        k_beta: 9,
        coupling,
        noise_amplitude: noise,
        seed,
        ..SynthParams::default()
    }
}

#[test]
fn criterion_01_oracle_equivalence() {
    let start = Instant::now();
    let mut checked = 0;
    for (si, &n) in SIZES.iter().enumerate() {
        for i in 0..SERIES_PER_SIZE {
            let series = random_series(n, (si * SERIES_PER_SIZE + i) as u64);
            let fast = dft(&series).unwrap();
            let reference = dft_reference(&series);
            let scale = reference
                .bins()
                .iter()
                .map(|c| c.norm())
                .fold(1.0_f64, f64::max);
            for (k, (a, b)) in fast.bins().iter().zip(reference.bins()).enumerate() {
                assert!(
                    (a - b).norm() <= 1e-9 * scale,
                    "n={n} series={i} bin={k}: {a} vs {b}"
                );
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    assert_eq!(checked, 100);
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    pass(
        1,
        &format!("fast == naive reference within 1e-9 on 100 series, {elapsed:?}"),
    );
}

#[test]
fn criterion_02_parseval_and_conjugate_symmetry() {
    for (si, &n) in SIZES.iter().enumerate() {
        for i in 0..SERIES_PER_SIZE {
            let series = random_series(n, (si * SERIES_PER_SIZE + i) as u64);
            let spectrum = dft(&series).unwrap();

            let time_energy = series.energy();
            let freq_energy = power_spectrum(&spectrum).total() / n as f64;
            assert!(
                (time_energy - freq_energy).abs() <= 1e-9 * time_energy.max(1.0),
                "parseval n={n} series={i}"
            );

            let scale = spectrum
                .bins()
                .iter()
                .map(|c| c.norm())
                .fold(1.0_f64, f64::max);
            for k in 1..n {
                let diff = (spectrum.bins()[n - k] - spectrum.bins()[k].conj()).norm();
                assert!(diff <= 1e-9 * scale, "symmetry n={n} series={i} k={k}");
            }
        }
    }
    pass(
        2,
        "Parseval and conjugate symmetry within 1e-9 on the same corpus",
    );
}

#[test]
fn criterion_03_coupled_benchmark_detection() {
    let start = Instant::now();
    let params = benchmark_params(Coupling::Coupled, 0.05, 42);
    let ensemble = generate(&params).unwrap();
    let est = bispectrum(&ensemble.spectra().unwrap()).unwrap();
    let map = bicoherence(&est, 1e-12).unwrap();
    let report = detect_peaks(&map, &est, 0.6).unwrap();

    assert_eq!(report.peaks.len(), 1, "expected exactly one peak");
    let peak = &report.peaks[0];
    assert_eq!((peak.ka, peak.kb), (9, 5));
    assert!(peak.b2 >= 0.9, "b2 = {}", peak.b2);
    assert!(peak.biphase.abs() <= 0.1, "biphase = {}", peak.biphase);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
    pass(
        3,
        &format!(
            "coupled m=64 n=256 noise=0.05 seed=42: one peak at (9,5), b2 = {:.6}, biphase = {:+.6}, {elapsed:?}",
            peak.b2, peak.biphase
        ),
    );
}

#[test]
fn criterion_04_uncoupled_benchmark_null() {
    let start = Instant::now();
    // The matched fixture seed plus a 20-seed sweep of the null.
    let mut max_b2: f64 = 0.0;
    for seed in std::iter::once(42).chain(100..120) {
        let params = benchmark_params(Coupling::Independent, 0.05, seed);
        let est = bispectrum(&generate(&params).unwrap().spectra().unwrap()).unwrap();
        let map = bicoherence(&est, 1e-12).unwrap();
        let report = detect_peaks(&map, &est, 0.6).unwrap();
        assert!(
            report.peaks.is_empty(),
            "seed {seed}: unexpected peaks {:?}",
            report.peaks
        );
        let b2 = map.b2_at(9, 5).unwrap();
        assert!(b2 <= 0.1, "seed {seed}: b2 = {b2}");
        max_b2 = max_b2.max(b2);
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    pass(
        4,
        &format!("uncoupled: zero peaks, max b2 at (9,5) = {max_b2:.6} over 20 seeds, {elapsed:?}"),
    );
}

#[test]
fn criterion_05_power_spectrum_indistinguishability() {
    // Matched seeds, noise 0: the ensembles differ only in theta_gamma.
    let coupled = generate(&benchmark_params(Coupling::Coupled, 0.0, 42)).unwrap();
    let uncoupled = generate(&benchmark_params(Coupling::Independent, 0.0, 42)).unwrap();

    let power_coupled = mean_power_spectrum(&coupled.spectra().unwrap()).unwrap();
    let power_uncoupled = mean_power_spectrum(&uncoupled.spectra().unwrap()).unwrap();
    let scale = power_coupled
        .power()
        .iter()
        .cloned()
        .fold(1.0_f64, f64::max);
    let mut worst = 0.0_f64;
    for (a, b) in power_coupled.power().iter().zip(power_uncoupled.power()) {
        worst = worst.max((a - b).abs());
        assert!(
            (a - b).abs() <= 1e-9 * scale,
            "power spectra differ: {a} vs {b}"
        );
    }

    let b2_of = |ensemble: &bispectral::synth::Ensemble| {
        let est = bispectrum(&ensemble.spectra().unwrap()).unwrap();
        bicoherence(&est, 1e-12).unwrap().b2_at(9, 5).unwrap()
    };
    let b2_coupled = b2_of(&coupled);
    let b2_uncoupled = b2_of(&uncoupled);
    assert!(
        b2_coupled - b2_uncoupled >= 0.8,
        "b2 separation too small: {b2_coupled} vs {b2_uncoupled}"
    );
    pass(
        5,
        &format!(
            "power spectra equal (worst diff {worst:.3e} of peak {scale:.3e}); b2 separation {:.6}",
            b2_coupled - b2_uncoupled
        ),
    );
}

#[test]
fn criterion_06_noiseless_exactness() {
    let params = benchmark_params(Coupling::Coupled, 0.0, 42);
    let est = bispectrum(&generate(&params).unwrap().spectra().unwrap()).unwrap();
    let map = bicoherence(&est, 1e-12).unwrap();

    let b2 = map.b2_at(9, 5).unwrap();
    assert!((b2 - 1.0).abs() <= 1e-9, "b2 = {b2}");

    let mean_magnitude = est.mean_at(9, 5).unwrap().norm();
    let expected = 128.0_f64.powi(3);
    assert!(
        (mean_magnitude - expected).abs() <= 1e-6 * expected,
        "|mean P| = {mean_magnitude}, expected {expected}"
    );
    pass(
        6,
        &format!("noiseless: b2 = 1 within 1e-9, |mean P| = {mean_magnitude:.3} ~= 128^3"),
    );
}

#[test]
fn criterion_07_bispectral_laws() {
    // Circular shift invariance of |P| (sum rule makes phase shifts cancel).
    let params = SynthParams {
        m: 8,
        noise_amplitude: 0.05,
        seed: 13,
        ..benchmark_params(Coupling::Coupled, 0.05, 13)
    };
    let ensemble = generate(&params).unwrap();
    let est = bispectrum(&ensemble.spectra().unwrap()).unwrap();
    let shift = 101;
    let shifted: Vec<_> = ensemble
        .realizations()
        .iter()
        .map(|series| {
            let v = series.values();
            let rotated: Vec<f64> = (0..v.len()).map(|t| v[(t + shift) % v.len()]).collect();
            dft(&TimeSeries::new(rotated, 1.0, "shifted").unwrap()).unwrap()
        })
        .collect();
    let est_shifted = bispectrum(&shifted).unwrap();
    for (ka, kb) in est.domain().cells() {
        let a = est.acc_at(ka, kb).unwrap().norm();
        let b = est_shifted.acc_at(ka, kb).unwrap().norm();
        assert!((a - b).abs() <= 1e-9 * a.max(1.0), "shift at ({ka},{kb})");
    }

    // Cubic amplitude scaling of |P|, b2 invariance.
    let map = bicoherence(&est, 1e-12).unwrap();
    let c = 3.0_f64;
    let scaled: Vec<_> = ensemble
        .realizations()
        .iter()
        .map(|series| {
            let values: Vec<f64> = series.values().iter().map(|v| c * v).collect();
            dft(&TimeSeries::new(values, 1.0, "scaled").unwrap()).unwrap()
        })
        .collect();
    let est_scaled = bispectrum(&scaled).unwrap();
    let map_scaled = bicoherence(&est_scaled, 1e-12).unwrap();
    for (ka, kb) in est.domain().cells() {
        let base = est.acc_at(ka, kb).unwrap().norm();
        let scaled_mag = est_scaled.acc_at(ka, kb).unwrap().norm();
        assert!(
            (scaled_mag - c.powi(3) * base).abs() <= 1e-9 * (c.powi(3) * base).max(1.0),
            "cubic scaling at ({ka},{kb})"
        );
        let (b_base, b_scaled) = (
            map.b2_at(ka, kb).unwrap(),
            map_scaled.b2_at(ka, kb).unwrap(),
        );
        assert!((b_base - b_scaled).abs() <= 1e-9, "b2 drift at ({ka},{kb})");
    }

    // Full-matrix symmetry P(a,b) = P(b,a), exact, n = 32.
    let small = SynthParams {
        n: 32,
        m: 4,
        k_alpha: 3,
        k_beta: 4,
        noise_amplitude: 0.05,
        seed: 5,
        ..SynthParams::default()
    };
    let matrix = bispectrum_full(&generate(&small).unwrap().spectra().unwrap()).unwrap();
    for (a, row) in matrix.iter().enumerate() {
        for (b, value) in row.iter().enumerate() {
            assert_eq!(*value, matrix[b][a], "P({a},{b}) != P({b},{a})");
        }
    }
    pass(
        7,
        "circular-shift invariance, cubic scaling, b2 invariance, exact symmetry",
    );
}

#[test]
fn criterion_08_surrogate_calibration() {
    let start = Instant::now();

    let coupled = generate(&benchmark_params(Coupling::Coupled, 0.05, 42)).unwrap();
    let test = surrogate_test(coupled.realizations(), (9, 5), 99, 7).unwrap();
    assert!(test.p_value <= 0.05, "coupled p = {}", test.p_value);

    let mut null_holds = 0;
    for seed in 100..120 {
        let uncoupled = generate(&benchmark_params(Coupling::Independent, 0.05, seed)).unwrap();
        let null = surrogate_test(uncoupled.realizations(), (9, 5), 99, 7).unwrap();
        if null.p_value >= 0.05 {
            null_holds += 1;
        }
    }
    assert!(null_holds >= 18, "null held in only {null_holds}/20 trials");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    pass(
        8,
        &format!(
            "coupled p = {:.4}; null held in {null_holds}/20 trials, {elapsed:?}",
            test.p_value
        ),
    );
}

fn fixture_path() -> &'static str {
    concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/ticks_3day.csv")
}

const ANALYZE_FILES: [&str; 5] = [
    "spectrum.csv",
    "bispectrum.csv",
    "bicoherence.csv",
    "bicoherence.pgm",
    "report.txt",
];

#[test]
fn criterion_09_ingestion_end_to_end() {
    let text = fs::read_to_string(fixture_path()).unwrap();
    let parsed = parse_ticks(text.as_bytes()).unwrap();
    let sessions = sessionize(&parsed.records, 60, PriceColumn::Close).unwrap();
    assert_eq!(sessions.sessions.len(), 3);
    assert_eq!(sessions.total_fills(), 1);
    for session in &sessions.sessions {
        assert_eq!(session.series.len(), 375);
    }

    let returns = transform(&sessions, TransformSpec::LogReturn).unwrap();
    for (before, after) in sessions.sessions.iter().zip(&returns.sessions) {
        assert_eq!(after.series.len(), before.series.len() - 1);
    }

    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ticks");
    let output = Command::new(env!("CARGO_BIN_EXE_bispectral"))
        .args([
            "analyze",
            "--input",
            fixture_path(),
            "--out",
            out.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        output.status.success(),
        "analyze failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    for name in ANALYZE_FILES {
        assert!(out.join(name).exists(), "{name} missing");
    }
    pass(
        9,
        "3 sessions, fill count 1, log-return lengths 374, analyze exit 0 with all five files",
    );
}

/// Runs the criterion-3 pipeline (synth + analyze) with paths relative
/// to `root`, so two runs under different roots produce comparable trees.
fn run_coupled_benchmark_pipeline(root: &Path) {
    let bin = env!("CARGO_BIN_EXE_bispectral");
    let synth = Command::new(bin)
        .current_dir(root)
        .args([
            "synth", "--mode", "coupled", "--seed", "42", "--out", "synth",
        ])
        .output()
        .unwrap();
    assert!(
        synth.status.success(),
        "{}",
        String::from_utf8_lossy(&synth.stderr)
    );
    let analyze = Command::new(bin)
        .current_dir(root)
        .args([
            "analyze",
            "--input",
            "synth/ensemble.csv",
            "--out",
            "analysis",
        ])
        .output()
        .unwrap();
    assert!(
        analyze.status.success(),
        "{}",
        String::from_utf8_lossy(&analyze.stderr)
    );
}

fn assert_identical_trees(a: &Path, b: &Path, files: &[&str]) {
    for name in files {
        let left = fs::read(a.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let right = fs::read(b.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(left, right, "{name} differs between identical runs");
    }
}

#[test]
fn criterion_10_determinism() {
    // Criterion 3 pipeline, twice.
    let root_a = tempfile::tempdir().unwrap();
    let root_b = tempfile::tempdir().unwrap();
    run_coupled_benchmark_pipeline(root_a.path());
    run_coupled_benchmark_pipeline(root_b.path());
    assert_identical_trees(
        &root_a.path().join("synth"),
        &root_b.path().join("synth"),
        &["ensemble.csv", "phases.csv", "config.txt"],
    );
    let analysis_files: Vec<&str> = ANALYZE_FILES
        .iter()
        .copied()
        .chain(std::iter::once("config.txt"))
        .collect();
    assert_identical_trees(
        &root_a.path().join("analysis"),
        &root_b.path().join("analysis"),
        &analysis_files,
    );

    // Criterion 9 pipeline, twice.
    let bin = env!("CARGO_BIN_EXE_bispectral");
    let tick_a = tempfile::tempdir().unwrap();
    let tick_b = tempfile::tempdir().unwrap();
    for dir in [&tick_a, &tick_b] {
        let output = Command::new(bin)
            .current_dir(dir.path())
            .args(["analyze", "--input", fixture_path(), "--out", "ticks"])
            .output()
            .unwrap();
        assert!(output.status.success());
    }
    assert_identical_trees(
        &tick_a.path().join("ticks"),
        &tick_b.path().join("ticks"),
        &analysis_files,
    );
    pass(10, "repeated runs produce byte-identical output trees");
}
