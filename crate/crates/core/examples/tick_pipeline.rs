//! Minute-bar market data end to end: CSV -> sessions -> log returns ->
//! segments -> bicoherence peak scan.
//!
//! Uses the bundled three-day fixture (one trading session per day, one
//! planted missing minute). Segments never cross a session boundary.
//!
//! ```bash
//! cargo run --example tick_pipeline
//! ```

use bispectral::bispec::{bicoherence, bispectrum, coupling_index, detect_peaks};
use bispectral::ingest::{
    parse_ticks, segment, sessionize, transform, PriceColumn, TransformSpec, Window,
};
use bispectral::spectral::dft;

fn main() -> bispectral::Result<()> {
    let csv = include_str!("../tests/fixtures/ticks_3day.csv");
    let parsed = parse_ticks(csv.as_bytes())?;
    println!(
        "parsed {} records ({} duplicate timestamps collapsed)",
        parsed.records.len(),
        parsed.duplicates_collapsed
    );

    let sessions = sessionize(&parsed.records, 60, PriceColumn::Close)?;
    for session in &sessions.sessions {
        println!(
            "  session {}: {} samples, {} filled minute(s)",
            session.date,
            session.series.len(),
            session.fills
        );
    }

    let returns = transform(&sessions, TransformSpec::LogReturn)?;
    let segmented = segment(&returns, 256, 0.0, Window::Rectangular)?;
    println!(
        "{} segment(s) of 256 log returns, {} trailing samples dropped",
        segmented.segments.len(),
        segmented.dropped_samples
    );

    let spectra = segmented
        .segments
        .iter()
        .map(dft)
        .collect::<bispectral::Result<Vec<_>>>()?;
    let est = bispectrum(&spectra)?;
    let map = bicoherence(&est, 1e-12)?;
    let peaks = detect_peaks(&map, &est, 0.6)?;
    println!(
        "peaks at threshold 0.6: {} (coupling index {:.6})",
        peaks.peaks.len(),
        coupling_index(&map)?
    );
    println!(
        "note: with only {} segments the null floor 1/m is {:.3}",
        est.m(),
        1.0 / est.m() as f64
    );
    Ok(())
}
