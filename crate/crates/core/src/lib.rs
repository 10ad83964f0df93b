//! Bispectrum and bicoherence analysis for time-series data.
//!
//! The ordinary power spectrum `|F(k)|²` tells you which cycles a series
//! contains but throws away every phase, so it cannot see whether three
//! cycles are locked into a fixed phase relationship. This crate computes
//! the quantity that can: the bispectrum
//! `P(ka, kb) = F(ka)·F(kb)·conj(F(ka+kb))`, averaged over an ensemble of
//! realizations or data segments, normalized into bicoherence, scanned for
//! peaks, and significance-tested against phase-randomized surrogates.
//!
//! The library is the primary interface; each major capability has a
//! runnable example:
//!
//! ```text
//! examples/
//! ├── dft_roundtrip.rs         # fast transform vs naive oracle, Parseval, inverse
//! ├── coupled_vs_uncoupled.rs  # identical power spectra, very different bicoherence
//! ├── detect_coupling.rs       # full detection pipeline with peak report
//! ├── surrogate_significance.rs# p-values from phase-randomized surrogates
//! ├── tick_pipeline.rs         # minute-bar CSV -> sessions -> segments -> analysis
//! └── bicoherence_heatmap.rs   # PGM heatmap export
//! ```
//!
//! Run one with `cargo run --example detect_coupling`.
//!
//! A thin `bispectral` binary wraps the same pipeline as subcommands
//! (`synth`, `analyze`, `peaks`, `surrogate`, `report`); see
//! [`cli::USAGE`] or the README.
//!
//! # Quick start
//!
//! ```
//! use bispectral::bispec::{bicoherence, bispectrum, detect_peaks};
//! use bispectral::synth::{generate, SynthParams};
//!
//! // Dataset with a planted phase relation θγ = θα + θβ at bins 5, 9, 14.
//! let ensemble = generate(&SynthParams::default()).unwrap();
//! let est = bispectrum(&ensemble.spectra().unwrap()).unwrap();
//! let map = bicoherence(&est, 1e-12).unwrap();
//! let report = detect_peaks(&map, &est, 0.6).unwrap();
//! assert_eq!((report.peaks[0].ka, report.peaks[0].kb), (9, 5));
//! ```
//!
//! # Reproducibility
//!
//! Everything that draws randomness is seeded through the SplitMix64
//! generator in [`rng`], and per-realization/surrogate sub-streams are
//! derived statelessly, so the same seed always produces the same bytes.

pub mod bispec;
pub mod cli;
pub mod error;
pub mod heatmap;
pub mod ingest;
pub mod rng;
pub mod spectral;
pub mod synth;

pub use error::{Error, Result};
