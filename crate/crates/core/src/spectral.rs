//! Discrete Fourier transform engine: a fast radix-2 path, a naive
//! reference implementation that serves as its testing oracle, and the
//! derived power spectrum.
//!
//! Convention: the forward transform is the unnormalized sum
//! `F(k) = Σ_t f(t) · e^(−i 2π k t / N)` over bins `k ∈ {0, …, N−1}`
//! (bin `k` corresponds to the angular frequency `2πk/N` radians per
//! sample); the inverse carries the `1/N` factor so that
//! `inverse ∘ forward` is the identity. The power spectrum `|F(k)|²`
//! discards every phase, which is exactly why the bispectrum in
//! [`crate::bispec`] exists.

use num_complex::Complex64;
use std::f64::consts::TAU;

use crate::error::{Error, Result};

/// Tag recorded on every [`Spectrum`] naming the transform convention.
pub const CONVENTION: &str = "unnormalized-forward";

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A uniformly sampled real-valued series.
///
/// Invariants enforced at construction: at least 2 samples, every sample
/// finite, positive sample spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
    label: String,
}

impl TimeSeries {
    /// Validates and wraps raw samples.
    ///
    /// `dt` is the sample spacing in seconds; use `1.0` for abstract
    /// index time.
    pub fn new(values: Vec<f64>, dt: f64, label: impl Into<String>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::SeriesTooShort(values.len()));
        }
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteSample { index, value });
            }
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::NonPositiveDt(dt));
        }
        Ok(Self {
            values,
            dt,
            label: label.into(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // length >= 2 by construction
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Same samples under a new provenance label.
    pub fn relabeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Sum of squared samples (time-domain energy).
    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// How [`dft_with_policy`] treats a length that is not a power of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthPolicy {
    /// Reject the series (the default behaviour of [`dft`]).
    Strict,
    /// Zero-pad to the next power of two.
    ZeroPad,
    /// Truncate to the previous power of two.
    Truncate,
}

/// Records whether a spectrum was computed from padded or truncated input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LengthAdjustment {
    None,
    ZeroPadded { original: usize },
    Truncated { original: usize },
}

/// Complex DFT output over `n` frequency bins, unnormalized forward
/// convention (see [`CONVENTION`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    bins: Vec<Complex64>,
    n: usize,
    adjustment: LengthAdjustment,
}

impl Spectrum {
    /// Wraps raw bins, rejecting non-finite entries.
    pub fn new(bins: Vec<Complex64>) -> Result<Self> {
        Self::with_adjustment(bins, LengthAdjustment::None)
    }

    fn with_adjustment(bins: Vec<Complex64>, adjustment: LengthAdjustment) -> Result<Self> {
        for (index, bin) in bins.iter().enumerate() {
            if !bin.re.is_finite() || !bin.im.is_finite() {
                return Err(Error::NonFiniteBin(index));
            }
        }
        let n = bins.len();
        Ok(Self {
            bins,
            n,
            adjustment,
        })
    }

    pub fn bins(&self) -> &[Complex64] {
        &self.bins
    }

    /// Transform length `N` (equals `bins().len()`).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn convention(&self) -> &'static str {
        CONVENTION
    }

    /// Length metadata: whether the source series was padded or truncated.
    pub fn adjustment(&self) -> LengthAdjustment {
        self.adjustment
    }
}

/// `|F(k)|²` per bin; non-negative by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerSpectrum {
    power: Vec<f64>,
}

impl PowerSpectrum {
    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    /// Total spectral energy `Σ_k |F(k)|²`.
    pub fn total(&self) -> f64 {
        self.power.iter().sum()
    }
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// Naive `O(N²)` evaluation of the forward transform by literal summation.
///
/// Works for any length and serves as the independent oracle for [`dft`].
pub fn dft_reference(series: &TimeSeries) -> Spectrum {
    let n = series.len();
    let mut bins = vec![Complex64::new(0.0, 0.0); n];
    for (k, bin) in bins.iter_mut().enumerate() {
        let mut sum = Complex64::new(0.0, 0.0);
        for (t, &x) in series.values().iter().enumerate() {
            let angle = -TAU * (k as f64) * (t as f64) / (n as f64);
            sum += x * Complex64::from_polar(1.0, angle);
        }
        *bin = sum;
    }
    Spectrum {
        bins,
        n,
        adjustment: LengthAdjustment::None,
    }
}

/// Fast forward transform. The series length must be a power of two;
/// see [`dft_with_policy`] for the padding and truncation escape hatches.
pub fn dft(series: &TimeSeries) -> Result<Spectrum> {
    dft_with_policy(series, LengthPolicy::Strict)
}

/// Fast forward transform with an explicit non-power-of-two policy.
///
/// Padding or truncation is flagged in the output's
/// [`Spectrum::adjustment`] metadata because either changes what each bin
/// index means.
pub fn dft_with_policy(series: &TimeSeries, policy: LengthPolicy) -> Result<Spectrum> {
    let len = series.len();
    let (mut bins, adjustment) = if len.is_power_of_two() {
        let bins: Vec<Complex64> = series
            .values()
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        (bins, LengthAdjustment::None)
    } else {
        match policy {
            LengthPolicy::Strict => {
                return Err(Error::NotPowerOfTwo {
                    len,
                    next: len.next_power_of_two(),
                    prev: previous_power_of_two(len),
                });
            }
            LengthPolicy::ZeroPad => {
                let target = len.next_power_of_two();
                let mut bins: Vec<Complex64> = series
                    .values()
                    .iter()
                    .map(|&v| Complex64::new(v, 0.0))
                    .collect();
                bins.resize(target, Complex64::new(0.0, 0.0));
                (bins, LengthAdjustment::ZeroPadded { original: len })
            }
            LengthPolicy::Truncate => {
                let target = previous_power_of_two(len);
                let bins: Vec<Complex64> = series.values()[..target]
                    .iter()
                    .map(|&v| Complex64::new(v, 0.0))
                    .collect();
                (bins, LengthAdjustment::Truncated { original: len })
            }
        }
    };
    fft_in_place(&mut bins, false);
    let n = bins.len();
    Ok(Spectrum {
        bins,
        n,
        adjustment,
    })
}

/// Inverse transform carrying the `1/N` factor, so
/// `inverse_dft(&dft(&x)?)` reproduces `x`.
///
/// The result is returned as a real series: for spectra of real signals
/// the imaginary part of the inverse is rounding residue (below 1e-9)
/// and is discarded. The output uses abstract index time (`dt = 1`).
pub fn inverse_dft(spectrum: &Spectrum) -> Result<TimeSeries> {
    let n = spectrum.n();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo {
            len: n,
            next: n.next_power_of_two(),
            prev: previous_power_of_two(n),
        });
    }
    let mut bins = spectrum.bins().to_vec();
    fft_in_place(&mut bins, true);
    let scale = 1.0 / n as f64;
    let values: Vec<f64> = bins.iter().map(|c| c.re * scale).collect();
    TimeSeries::new(values, 1.0, "inverse-dft")
}

/// Squared magnitude of every bin.
pub fn power_spectrum(spectrum: &Spectrum) -> PowerSpectrum {
    PowerSpectrum {
        power: spectrum.bins().iter().map(|c| c.norm_sqr()).collect(),
    }
}

/// Per-bin mean of `|F(k)|²` over a batch of equal-length spectra.
pub fn mean_power_spectrum(spectra: &[Spectrum]) -> Result<PowerSpectrum> {
    let n = check_same_length(spectra)?;
    let mut power = vec![0.0; n];
    for spectrum in spectra {
        for (acc, bin) in power.iter_mut().zip(spectrum.bins()) {
            *acc += bin.norm_sqr();
        }
    }
    let scale = 1.0 / spectra.len() as f64;
    for entry in &mut power {
        *entry *= scale;
    }
    Ok(PowerSpectrum { power })
}

/// Validates that a batch of spectra is non-empty and shares one length;
/// returns that length.
pub(crate) fn check_same_length(spectra: &[Spectrum]) -> Result<usize> {
    let first = spectra.first().ok_or(Error::EmptySpectra)?;
    let expected = first.n();
    for (position, spectrum) in spectra.iter().enumerate() {
        if spectrum.n() != expected {
            return Err(Error::MismatchedLengths {
                expected,
                got: spectrum.n(),
                position,
            });
        }
    }
    Ok(expected)
}

fn previous_power_of_two(len: usize) -> usize {
    debug_assert!(len >= 2);
    if len.is_power_of_two() {
        len
    } else {
        len.next_power_of_two() / 2
    }
}

/// Iterative radix-2 decimation-in-time FFT. `bins.len()` must be a
/// power of two. The inverse direction omits the `1/N` factor; callers
/// apply it.
fn fft_in_place(bins: &mut [Complex64], inverse: bool) {
    let n = bins.len();
    debug_assert!(n.is_power_of_two());
    if n < 2 {
        return;
    }

    // Bit-reversal permutation.
    let shift = usize::BITS - n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> shift;
        if i < j {
            bins.swap(i, j);
        }
    }

    // Twiddle table for the largest stage; earlier stages stride through it.
    let sign = if inverse { 1.0 } else { -1.0 };
    let step = sign * TAU / n as f64;
    let twiddles: Vec<Complex64> = (0..n / 2)
        .map(|k| Complex64::from_polar(1.0, k as f64 * step))
        .collect();

    let mut width = 2;
    while width <= n {
        let stride = n / width;
        for block in (0..n).step_by(width) {
            for k in 0..width / 2 {
                let z = twiddles[k * stride];
                let even = bins[block + k];
                let odd = bins[block + k + width / 2] * z;
                bins[block + k] = even + odd;
                bins[block + k + width / 2] = even - odd;
            }
        }
        width <<= 1;
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
