//! Bispectrum estimation, bicoherence, peak detection and surrogate
//! significance testing.
//!
//! The bispectrum of a spectrum `F` is
//!
//! ```text
//! P(ka, kb) = F(ka) · F(kb) · conj(F(ka + kb))
//! ```
//!
//! Its magnitude alone cannot separate coupled from uncoupled phases —
//! for a single realization `|P|` is just a product of mode magnitudes —
//! so the estimator here accumulates `P` over an ensemble of
//! realizations or data segments. Under a fixed phase relation
//! `θγ = θα + θβ` the per-segment biphases agree and the accumulated sum
//! grows coherently; under independent phases it random-walks toward
//! zero. The bicoherence `b²` normalizes the accumulated magnitude into
//! `[0, 1]` (1 for perfect coupling, expectation ≈ 1/m under the
//! independent-phase null with m averages).
//!
//! Only the non-redundant principal domain `1 ≤ kb ≤ ka`,
//! `ka + kb ≤ n/2` is stored; [`bispectrum_full`] exists as a
//! diagnostic for verifying the symmetries that make the rest redundant.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::rng::{stream_seed, SplitMix64};
use crate::spectral::{check_same_length, dft, Spectrum, TimeSeries};

/// Accumulator magnitudes below this carry no usable phase.
const PHASE_EPSILON: f64 = 1e-12;

/// Slack applied when comparing bicoherence against a detection
/// threshold, so a mathematically exact 1.0 passes a threshold of 1.0
/// despite rounding.
const THRESHOLD_SLACK: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Principal domain
// ---------------------------------------------------------------------------

/// The non-redundant bin-pair region `{(ka, kb) : 1 ≤ kb ≤ ka, ka + kb ≤ n/2}`
/// for real signals of length `n`, with a dense row-major cell layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrincipalDomain {
    n: usize,
    row_start: Vec<usize>, // indexed by ka, 0 for ka < 1
    total: usize,
}

impl PrincipalDomain {
    pub fn new(n: usize) -> Self {
        let half = n / 2;
        let ka_max = half.saturating_sub(1);
        let mut row_start = Vec::with_capacity(ka_max + 2);
        row_start.push(0); // ka = 0 never indexes
        let mut total = 0;
        for ka in 1..=ka_max {
            row_start.push(total);
            total += Self::row_len(ka, half);
        }
        row_start.push(total);
        Self {
            n,
            row_start,
            total,
        }
    }

    fn row_len(ka: usize, half: usize) -> usize {
        ka.min(half - ka)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Largest valid `ka` (rows of the domain).
    pub fn ka_max(&self) -> usize {
        (self.n / 2).saturating_sub(1)
    }

    /// Largest `kb` reached anywhere in the domain.
    pub fn kb_max(&self) -> usize {
        self.n / 4
    }

    pub fn cell_count(&self) -> usize {
        self.total
    }

    pub fn contains(&self, ka: usize, kb: usize) -> bool {
        kb >= 1 && kb <= ka && ka + kb <= self.n / 2
    }

    /// Dense index of a cell, or `None` outside the domain.
    pub fn index(&self, ka: usize, kb: usize) -> Option<usize> {
        if self.contains(ka, kb) {
            Some(self.row_start[ka] + (kb - 1))
        } else {
            None
        }
    }

    /// Cells in deterministic order: `ka` ascending, then `kb` ascending.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let half = self.n / 2;
        (1..=self.ka_max())
            .flat_map(move |ka| (1..=Self::row_len(ka, half)).map(move |kb| (ka, kb)))
    }
}

// ---------------------------------------------------------------------------
// Estimate and derived maps
// ---------------------------------------------------------------------------

/// Accumulated bispectrum over `m` segments, together with the power
/// accumulators the bicoherence normalization needs.
#[derive(Debug, Clone)]
pub struct BispectrumEstimate {
    domain: PrincipalDomain,
    m: usize,
    /// Σ over segments of `F(ka)·F(kb)·conj(F(ka+kb))`.
    acc: Vec<Complex64>,
    /// Σ of `|F(ka)·F(kb)|²`.
    p_ab: Vec<f64>,
    /// Σ of `|F(ka+kb)|²`.
    p_g: Vec<f64>,
}

impl BispectrumEstimate {
    pub fn domain(&self) -> &PrincipalDomain {
        &self.domain
    }

    /// Segment length `n`.
    pub fn n(&self) -> usize {
        self.domain.n()
    }

    /// Number of segments accumulated.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Raw accumulated `P` at a cell, `None` outside the domain.
    pub fn acc_at(&self, ka: usize, kb: usize) -> Option<Complex64> {
        self.domain.index(ka, kb).map(|i| self.acc[i])
    }

    /// Mean bispectrum `acc / m` at a cell.
    pub fn mean_at(&self, ka: usize, kb: usize) -> Option<Complex64> {
        self.acc_at(ka, kb).map(|c| c / self.m as f64)
    }
}

/// Normalized squared bicoherence over the principal domain, with a
/// validity mask for cells whose denominators sit below the power floor.
#[derive(Debug, Clone)]
pub struct BicoherenceMap {
    domain: PrincipalDomain,
    b2: Vec<f64>,
    valid: Vec<bool>,
}

impl BicoherenceMap {
    pub fn domain(&self) -> &PrincipalDomain {
        &self.domain
    }

    pub fn n(&self) -> usize {
        self.domain.n()
    }

    /// `b²` at a cell (0.0 on invalid cells), `None` outside the domain.
    pub fn b2_at(&self, ka: usize, kb: usize) -> Option<f64> {
        self.domain.index(ka, kb).map(|i| self.b2[i])
    }

    pub fn is_valid(&self, ka: usize, kb: usize) -> bool {
        self.domain
            .index(ka, kb)
            .map(|i| self.valid[i])
            .unwrap_or(false)
    }

    /// The valid cell with the largest `b²`, ties broken by `(ka, kb)`.
    pub fn max_valid_cell(&self) -> Option<(usize, usize, f64)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (ka, kb) in self.domain.cells() {
            let i = self.domain.index(ka, kb).unwrap();
            if !self.valid[i] {
                continue;
            }
            let candidate = (ka, kb, self.b2[i]);
            best = match best {
                None => Some(candidate),
                Some(current) if candidate.2 > current.2 => Some(candidate),
                other => other,
            };
        }
        best
    }
}

/// One detected hotspot.
#[derive(Debug, Clone, PartialEq)]
pub struct Peak {
    pub ka: usize,
    pub kb: usize,
    /// `|acc / m|`, the magnitude of the mean bispectrum.
    pub mean_magnitude: f64,
    pub b2: f64,
    /// Biphase `arg(acc)` in `(−π, π]`.
    pub biphase: f64,
    /// Surrogate p-value when one was attached; `None` otherwise.
    pub p_value: Option<f64>,
}

/// Detected hotspots, sorted by `b²` descending with `(ka, kb)`
/// lexicographic ascending as the tie-break.
#[derive(Debug, Clone)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub threshold_b2: f64,
    pub surrogates_used: usize,
}

/// Outcome of a surrogate significance test at one cell.
#[derive(Debug, Clone)]
pub struct SurrogateTest {
    pub target: (usize, usize),
    pub observed_b2: f64,
    /// `b²` of each phase-randomized surrogate, in surrogate order.
    pub surrogate_b2: Vec<f64>,
    /// `(1 + #{surrogates ≥ observed}) / (n_surrogates + 1)`.
    pub p_value: f64,
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Accumulates the bispectrum and its normalization powers over a batch
/// of equal-length spectra (one per realization or segment).
pub fn bispectrum(spectra: &[Spectrum]) -> Result<BispectrumEstimate> {
    let n = check_same_length(spectra)?;
    let domain = PrincipalDomain::new(n);
    let mut acc = vec![Complex64::new(0.0, 0.0); domain.cell_count()];
    let mut p_ab = vec![0.0; domain.cell_count()];
    let mut p_g = vec![0.0; domain.cell_count()];
    for spectrum in spectra {
        let bins = spectrum.bins();
        for (ka, kb) in domain.cells() {
            let i = domain.index(ka, kb).unwrap();
            let pair = bins[ka] * bins[kb];
            acc[i] += pair * bins[ka + kb].conj();
            p_ab[i] += pair.norm_sqr();
            p_g[i] += bins[ka + kb].norm_sqr();
        }
    }
    Ok(BispectrumEstimate {
        domain,
        m: spectra.len(),
        acc,
        p_ab,
        p_g,
    })
}

/// Full redundant bispectrum matrix `P(a, b)` for `a, b ∈ [0, n)` with
/// wrap-around indexing of `F(a + b)`, accumulated over the batch.
///
/// Diagnostic mode only: for real signals everything outside the
/// principal domain is determined by symmetry, which this function
/// exists to demonstrate.
pub fn bispectrum_full(spectra: &[Spectrum]) -> Result<Vec<Vec<Complex64>>> {
    let n = check_same_length(spectra)?;
    let mut matrix = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for spectrum in spectra {
        let bins = spectrum.bins();
        for (a, row) in matrix.iter_mut().enumerate() {
            for (b, cell) in row.iter_mut().enumerate() {
                *cell += bins[a] * bins[b] * bins[(a + b) % n].conj();
            }
        }
    }
    Ok(matrix)
}

/// Normalizes an estimate into squared bicoherence.
///
/// `power_floor` is a relative factor: a cell is valid when its
/// denominator `p_ab · p_g` exceeds `power_floor ×` the largest
/// denominator in the map. Cells below the floor are masked invalid
/// instead of dividing by (near) zero; an all-zero estimate masks
/// everything.
pub fn bicoherence(est: &BispectrumEstimate, power_floor: f64) -> Result<BicoherenceMap> {
    if !power_floor.is_finite() || power_floor <= 0.0 {
        return Err(Error::Constraint(format!(
            "power_floor must be positive and finite, got {power_floor}"
        )));
    }
    let denominators: Vec<f64> = est
        .p_ab
        .iter()
        .zip(&est.p_g)
        .map(|(ab, g)| ab * g)
        .collect();
    let max_denominator = denominators.iter().cloned().fold(0.0_f64, f64::max);
    let floor = power_floor * max_denominator;
    let mut b2 = vec![0.0; denominators.len()];
    let mut valid = vec![false; denominators.len()];
    for (i, &denominator) in denominators.iter().enumerate() {
        if max_denominator > 0.0 && denominator > floor {
            b2[i] = est.acc[i].norm_sqr() / denominator;
            valid[i] = true;
        }
    }
    Ok(BicoherenceMap {
        domain: est.domain.clone(),
        b2,
        valid,
    })
}

/// Biphase `arg(acc)` at one cell, in `(−π, π]`.
///
/// Errors when the accumulator magnitude is below 1e-12 — a vanishing
/// accumulator carries no phase information.
pub fn biphase(est: &BispectrumEstimate, ka: usize, kb: usize) -> Result<f64> {
    let value = est
        .acc_at(ka, kb)
        .ok_or(Error::OutsideDomain { ka, kb, n: est.n() })?;
    if value.norm() < PHASE_EPSILON {
        return Err(Error::NoPhaseInformation { ka, kb });
    }
    Ok(into_half_open(value.arg()))
}

/// Maps the closed interval `[−π, π]` returned by `atan2` onto `(−π, π]`.
fn into_half_open(phase: f64) -> f64 {
    if phase == -PI {
        PI
    } else {
        phase
    }
}

/// Lists every valid cell whose `b²` reaches `threshold_b2` (with 1e-9
/// slack so an exact 1.0 passes a threshold of 1.0), sorted by `b²`
/// descending, ties by `(ka, kb)` ascending. An empty list is a valid
/// result.
pub fn detect_peaks(
    map: &BicoherenceMap,
    est: &BispectrumEstimate,
    threshold_b2: f64,
) -> Result<PeakReport> {
    if !(threshold_b2 > 0.0 && threshold_b2 <= 1.0) {
        return Err(Error::Constraint(format!(
            "threshold_b2 must lie in (0, 1], got {threshold_b2}"
        )));
    }
    if map.n() != est.n() {
        return Err(Error::Constraint(format!(
            "bicoherence map (n = {}) and estimate (n = {}) do not match",
            map.n(),
            est.n()
        )));
    }
    let mut peaks = Vec::new();
    for (ka, kb) in map.domain.cells() {
        let i = map.domain.index(ka, kb).unwrap();
        if !map.valid[i] || map.b2[i] + THRESHOLD_SLACK < threshold_b2 {
            continue;
        }
        let acc = est.acc[i];
        peaks.push(Peak {
            ka,
            kb,
            mean_magnitude: acc.norm() / est.m as f64,
            b2: map.b2[i],
            biphase: into_half_open(acc.arg()),
            p_value: None,
        });
    }
    peaks.sort_by(|a, b| {
        b.b2.partial_cmp(&a.b2)
            .expect("bicoherence values are finite")
            .then((a.ka, a.kb).cmp(&(b.ka, b.kb)))
    });
    Ok(PeakReport {
        peaks,
        threshold_b2,
        surrogates_used: 0,
    })
}

/// Mean `b²` over the valid principal domain — a scalar degree of phase
/// coupling (0 = no cell shows coupling, 1 = every cell fully coupled).
pub fn coupling_index(map: &BicoherenceMap) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, &valid) in map.valid.iter().enumerate() {
        if valid {
            sum += map.b2[i];
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::AllCellsInvalid);
    }
    Ok(sum / count as f64)
}

/// Replaces every phase of a spectrum with fresh uniform draws while
/// preserving bin magnitudes and the conjugate symmetry of a real
/// signal. DC and Nyquist (which are real for real input) are kept.
pub fn phase_randomize(spectrum: &Spectrum, rng: &mut SplitMix64) -> Result<Spectrum> {
    let n = spectrum.n();
    let bins = spectrum.bins();
    let mut randomized = bins.to_vec();
    for k in 1..n.div_ceil(2) {
        let rotated = Complex64::from_polar(bins[k].norm(), rng.next_angle());
        randomized[k] = rotated;
        randomized[n - k] = rotated.conj();
    }
    Spectrum::new(randomized)
}

/// Surrogate significance test of the bicoherence at one target cell.
///
/// Each of the `n_surrogates` surrogates phase-randomizes every segment
/// and recomputes `b²` at the target; the p-value is
/// `(1 + #{surrogates ≥ observed}) / (n_surrogates + 1)`. Surrogate `s`
/// draws from an independent stream seeded by `(seed, s)`.
pub fn surrogate_test(
    segments: &[TimeSeries],
    target: (usize, usize),
    n_surrogates: usize,
    seed: u64,
) -> Result<SurrogateTest> {
    if n_surrogates < 19 {
        return Err(Error::Constraint(format!(
            "n_surrogates must be at least 19 for a usable p-value resolution, got {n_surrogates}"
        )));
    }
    let spectra: Vec<Spectrum> = segments.iter().map(dft).collect::<Result<_>>()?;
    let n = check_same_length(&spectra)?;
    let (ka, kb) = target;
    let domain = PrincipalDomain::new(n);
    if !domain.contains(ka, kb) {
        return Err(Error::OutsideDomain { ka, kb, n });
    }

    let observed_b2 = b2_at(&spectra, ka, kb);
    let mut surrogate_b2 = Vec::with_capacity(n_surrogates);
    let mut randomized = Vec::with_capacity(spectra.len());
    for s in 0..n_surrogates {
        let mut rng = SplitMix64::new(stream_seed(seed, s as u64));
        randomized.clear();
        for spectrum in &spectra {
            randomized.push(phase_randomize(spectrum, &mut rng)?);
        }
        surrogate_b2.push(b2_at(&randomized, ka, kb));
    }
    let exceeding = surrogate_b2.iter().filter(|&&b| b >= observed_b2).count();
    let p_value = (1 + exceeding) as f64 / (n_surrogates + 1) as f64;
    Ok(SurrogateTest {
        target,
        observed_b2,
        surrogate_b2,
        p_value,
    })
}

/// Re-runs the surrogate test at every peak of a report, attaching the
/// resulting p-values. Peak `i` uses the seed stream `(seed, i)`.
pub fn confirm_peaks(
    report: &PeakReport,
    segments: &[TimeSeries],
    n_surrogates: usize,
    seed: u64,
) -> Result<PeakReport> {
    let mut confirmed = report.clone();
    for (i, peak) in confirmed.peaks.iter_mut().enumerate() {
        let test = surrogate_test(
            segments,
            (peak.ka, peak.kb),
            n_surrogates,
            stream_seed(seed, i as u64),
        )?;
        peak.p_value = Some(test.p_value);
    }
    confirmed.surrogates_used = n_surrogates;
    Ok(confirmed)
}

/// Squared bicoherence at a single cell, with a zero denominator mapped
/// to 0 rather than NaN.
fn b2_at(spectra: &[Spectrum], ka: usize, kb: usize) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    let mut p_ab = 0.0;
    let mut p_g = 0.0;
    for spectrum in spectra {
        let bins = spectrum.bins();
        let pair = bins[ka] * bins[kb];
        acc += pair * bins[ka + kb].conj();
        p_ab += pair.norm_sqr();
        p_g += bins[ka + kb].norm_sqr();
    }
    let denominator = p_ab * p_g;
    if denominator == 0.0 {
        0.0
    } else {
        acc.norm_sqr() / denominator
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
