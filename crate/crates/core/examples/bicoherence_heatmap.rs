//! Renders a bicoherence map as a binary PGM heatmap: `ka` increases
//! downward, `kb` rightward, brightness is linear in b² with the map
//! maximum at 255. The single coupled cell shows up as one bright pixel.
//!
//! ```bash
//! cargo run --example bicoherence_heatmap
//! ```

use bispectral::bispec::{bicoherence, bispectrum};
use bispectral::heatmap::HeatmapImage;
use bispectral::synth::{generate, SynthParams};

fn main() -> bispectral::Result<()> {
    let ensemble = generate(&SynthParams {
        noise_amplitude: 0.05,
        seed: 42,
        ..SynthParams::default()
    })?;
    let est = bispectrum(&ensemble.spectra()?)?;
    let map = bicoherence(&est, 1e-12)?;

    let domain = map.domain();
    let grid: Vec<Vec<f64>> = (1..=domain.ka_max())
        .map(|ka| {
            (1..=domain.kb_max())
                .map(|kb| {
                    map.b2_at(ka, kb)
                        .filter(|_| map.is_valid(ka, kb))
                        .unwrap_or(0.0)
                })
                .collect()
        })
        .collect();

    let image = HeatmapImage::from_matrix(&grid)?;
    let path = std::env::temp_dir().join("bicoherence.pgm");
    image.write_pgm(&path)?;

    println!(
        "wrote {}x{} PGM to {}",
        image.width(),
        image.height(),
        path.display()
    );
    let brightest = image
        .pixels()
        .iter()
        .enumerate()
        .max_by_key(|(_, &v)| v)
        .unwrap();
    println!(
        "brightest pixel: row ka={}, column kb={} (byte {})",
        brightest.0 / image.width() + 1,
        brightest.0 % image.width() + 1,
        brightest.1
    );
    Ok(())
}
