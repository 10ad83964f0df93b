//! Binary PGM (P5) heatmap rendering of real-valued matrices.
//!
//! The pixel map is linear: the matrix maximum maps to byte 255 and 0.0
//! maps to byte 0, rounding halves up; an all-zero matrix produces
//! all-zero pixels. Rows render top to bottom in matrix order (for
//! bicoherence maps: `ka` increases downward, `kb` rightward), and any
//! cell the caller filled with 0.0 — including outside-domain padding —
//! stays byte 0.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit grayscale image ready for PGM export.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeatmapImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl HeatmapImage {
    /// Scales a rectangular matrix into pixels.
    ///
    /// Rejects empty or ragged matrices and non-finite entries; negative
    /// entries clamp to byte 0.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        let height = matrix.len();
        let width = matrix.first().map(Vec::len).unwrap_or(0);
        if height == 0 || width == 0 {
            return Err(Error::Constraint("heatmap matrix must be non-empty".into()));
        }
        let mut max = 0.0_f64;
        for (row_index, row) in matrix.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Constraint(format!(
                    "heatmap matrix is ragged: row 0 has {width} cells, row {row_index} has {}",
                    row.len()
                )));
            }
            for &value in row {
                if !value.is_finite() {
                    return Err(Error::Constraint(format!(
                        "heatmap matrix contains a non-finite value in row {row_index}"
                    )));
                }
                max = max.max(value);
            }
        }

        let mut pixels = Vec::with_capacity(width * height);
        for row in matrix {
            for &value in row {
                let byte = if max > 0.0 {
                    (value.max(0.0) / max * 255.0).round() as u8
                } else {
                    0
                };
                pixels.push(byte);
            }
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Binary PGM encoding: `P5`, dimensions, `255`, then one byte per
    /// cell in row-major order.
    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut bytes = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        bytes.extend_from_slice(&self.pixels);
        bytes
    }

    pub fn write_pgm(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_pgm_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Renders a matrix straight to a PGM file.
pub fn write_heatmap(matrix: &[Vec<f64>], path: &Path) -> Result<()> {
    HeatmapImage::from_matrix(matrix)?.write_pgm(path)
}
