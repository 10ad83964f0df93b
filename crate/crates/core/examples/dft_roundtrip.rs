//! Fast transform vs the naive reference oracle, Parseval's identity,
//! and the inverse round trip.
//!
//! ```bash
//! cargo run --example dft_roundtrip
//! ```

use bispectral::cli::spectrum_to_csv;
use bispectral::rng::SplitMix64;
use bispectral::spectral::{dft, dft_reference, inverse_dft, power_spectrum, TimeSeries};

fn main() -> bispectral::Result<()> {
    let n = 256;
    let mut rng = SplitMix64::new(7);
    let values: Vec<f64> = (0..n).map(|_| rng.next_symmetric(1.0)).collect();
    let series = TimeSeries::new(values, 1.0, "random demo")?;

    // The fast radix-2 path must agree with the literal O(N²) summation.
    let fast = dft(&series)?;
    let reference = dft_reference(&series);
    let scale = reference
        .bins()
        .iter()
        .map(|c| c.norm())
        .fold(1.0_f64, f64::max);
    let worst = fast
        .bins()
        .iter()
        .zip(reference.bins())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0_f64, f64::max);
    println!(
        "fast vs reference: worst bin error {:.3e} (scale {:.3e})",
        worst, scale
    );
    assert!(worst <= 1e-9 * scale);

    // Parseval: time-domain energy equals (1/N) * spectral energy.
    let time_energy = series.energy();
    let freq_energy = power_spectrum(&fast).total() / n as f64;
    println!("parseval: {:.12} vs {:.12}", time_energy, freq_energy);
    assert!((time_energy - freq_energy).abs() <= 1e-9 * time_energy);

    // inverse(dft(x)) reproduces x; the inverse carries the 1/N factor.
    let back = inverse_dft(&fast)?;
    let round_trip_error = series
        .values()
        .iter()
        .zip(back.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    println!("round trip: worst sample error {round_trip_error:.3e}");
    assert!(round_trip_error <= 1e-9);

    // The complex spectrum CSV format (bin,re,im):
    let csv = spectrum_to_csv(&fast);
    println!("\nspectrum.csv preview:");
    for line in csv.lines().take(4) {
        println!("  {line}");
    }
    Ok(())
}
