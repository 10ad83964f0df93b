//! Synthetic benchmark datasets: ensembles of three-cosine signals.
//!
//! Each realization is
//! `f(t) = A·cos(2π kα t/n + θα) + A·cos(2π kβ t/n + θβ) + A·cos(2π kγ t/n + θγ)`
//! plus optional low-amplitude noise. Two coupling modes exist:
//!
//! * **independent** — θα, θβ, θγ are all drawn independently; the three
//!   cycles share no phase relationship.
//! * **coupled** — θγ = θα + θβ; the γ cycle carries a fixed phase
//!   relation to the other two, the signature that bispectral analysis
//!   detects.
//!
//! Both modes produce identical power spectra (phases are invisible
//! there), which is the whole point of the benchmark pair.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::rng::{stream_seed, SplitMix64};
use crate::spectral::{dft, Spectrum, TimeSeries};

/// Phase relationship between the γ component and the α/β components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    /// θγ drawn independently of θα and θβ.
    Independent,
    /// θγ = θα + θβ.
    Coupled,
}

/// How the γ frequency bin is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KGammaRule {
    /// kγ = kα + kβ (the bin the bispectrum conjugates, so a coupled
    /// component lands exactly where the detector looks).
    Sum,
    /// A caller-chosen bin, e.g. to place the third component at a
    /// period-sum frequency instead.
    Explicit(usize),
}

/// Generator parameters. `validate` names the violated constraint on
/// rejection; every generating function calls it first.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    /// Samples per realization; must be a power of two.
    pub n: usize,
    /// Realization count.
    pub m: usize,
    /// First component bin. The (kα, kβ) pair is unordered: the signal
    /// is symmetric in the two components.
    pub k_alpha: usize,
    /// Second component bin.
    pub k_beta: usize,
    pub k_gamma_rule: KGammaRule,
    pub coupling: Coupling,
    /// Per-component amplitude.
    pub amplitude: f64,
    /// Half-width of the uniform noise added to every sample; 0 disables.
    pub noise_amplitude: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            n: 256,
            m: 64,
            k_alpha: 5,
            k_beta: 9,
            k_gamma_rule: KGammaRule::Sum,
            coupling: Coupling::Coupled,
            amplitude: 1.0,
            noise_amplitude: 0.0,
            seed: 0,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        let constraint = |text: String| Err(Error::Constraint(text));
        if !self.n.is_power_of_two() || self.n < 2 {
            return constraint(format!("n must be a power of two >= 2, got {}", self.n));
        }
        if self.m < 1 {
            return constraint("m must be >= 1".into());
        }
        if self.k_alpha < 1 {
            return constraint(format!("k_alpha must be >= 1, got {}", self.k_alpha));
        }
        if self.k_beta < 1 {
            return constraint(format!("k_beta must be >= 1, got {}", self.k_beta));
        }
        if self.k_alpha + self.k_beta >= self.n / 2 {
            return constraint(format!(
                "k_alpha + k_beta must stay below n/2 (Nyquist): {} + {} >= {}",
                self.k_alpha,
                self.k_beta,
                self.n / 2
            ));
        }
        if let KGammaRule::Explicit(k_gamma) = self.k_gamma_rule {
            if k_gamma < 1 || k_gamma >= self.n / 2 {
                return constraint(format!(
                    "explicit k_gamma must lie in 1..{} (below Nyquist), got {k_gamma}",
                    self.n / 2
                ));
            }
        }
        if !self.amplitude.is_finite() || self.amplitude <= 0.0 {
            return constraint(format!(
                "amplitude must be positive and finite, got {}",
                self.amplitude
            ));
        }
        if !self.noise_amplitude.is_finite() || self.noise_amplitude < 0.0 {
            return constraint(format!(
                "noise_amplitude must be >= 0 and finite, got {}",
                self.noise_amplitude
            ));
        }
        Ok(())
    }

    /// The γ bin under the configured rule.
    pub fn k_gamma(&self) -> usize {
        match self.k_gamma_rule {
            KGammaRule::Sum => self.k_alpha + self.k_beta,
            KGammaRule::Explicit(k) => k,
        }
    }
}

/// The phases one realization was built from. Under coupled mode,
/// `theta_gamma` is stored as the exact sum `theta_alpha + theta_beta`
/// (not reduced mod 2π), so the coupling identity holds bit for bit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTriple {
    pub theta_alpha: f64,
    pub theta_beta: f64,
    pub theta_gamma: f64,
}

/// A batch of equal-length realizations plus the phases that produced
/// them. Ingested (non-synthetic) segment batches carry no params and no
/// phase records.
#[derive(Debug, Clone)]
pub struct Ensemble {
    realizations: Vec<TimeSeries>,
    params: Option<SynthParams>,
    phases: Vec<PhaseTriple>,
}

impl Ensemble {
    /// Wraps externally produced segments (ingested data) as an ensemble.
    pub fn from_segments(segments: Vec<TimeSeries>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::Constraint("ensemble needs at least one realization".into()))?;
        let len = first.len();
        for segment in &segments {
            if segment.len() != len {
                return Err(Error::Constraint(format!(
                    "all realizations must share one length; found {} and {}",
                    len,
                    segment.len()
                )));
            }
        }
        Ok(Self {
            realizations: segments,
            params: None,
            phases: Vec::new(),
        })
    }

    pub fn realizations(&self) -> &[TimeSeries] {
        &self.realizations
    }

    pub fn len(&self) -> usize {
        self.realizations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.realizations.is_empty()
    }

    /// Generator parameters, absent for ingested data.
    pub fn params(&self) -> Option<&SynthParams> {
        self.params.as_ref()
    }

    /// Per-realization phase records, empty for ingested data.
    pub fn phases(&self) -> &[PhaseTriple] {
        &self.phases
    }

    /// Forward transform of every realization.
    pub fn spectra(&self) -> Result<Vec<Spectrum>> {
        self.realizations.iter().map(dft).collect()
    }
}

/// Evaluates the noiseless three-cosine closed form for one set of
/// phases. This is both the inner loop of [`generate`] and the hook for
/// constructing realizations with chosen phases in tests and examples.
pub fn realization(params: &SynthParams, phases: PhaseTriple) -> Result<TimeSeries> {
    params.validate()?;
    let n = params.n;
    let a = params.amplitude;
    let (ka, kb, kg) = (
        params.k_alpha as f64,
        params.k_beta as f64,
        params.k_gamma() as f64,
    );
    let values: Vec<f64> = (0..n)
        .map(|t| {
            let w = TAU * t as f64 / n as f64;
            a * (ka * w + phases.theta_alpha).cos()
                + a * (kb * w + phases.theta_beta).cos()
                + a * (kg * w + phases.theta_gamma).cos()
        })
        .collect();
    TimeSeries::new(values, 1.0, "synthetic")
}

/// Generates `params.m` realizations with freshly drawn phases.
///
/// Realization `j` draws from an independent stream seeded by
/// `(params.seed, j)`, so parallel and serial generation would agree and
/// the same seed always reproduces the same bytes. The draw order per
/// realization is θα, θβ, a γ candidate (consumed in both coupling modes
/// so that matched seeds share their noise stream), then the noise
/// samples.
pub fn generate(params: &SynthParams) -> Result<Ensemble> {
    params.validate()?;
    let mut realizations = Vec::with_capacity(params.m);
    let mut phases = Vec::with_capacity(params.m);
    for j in 0..params.m {
        let mut rng = SplitMix64::new(stream_seed(params.seed, j as u64));
        let theta_alpha = rng.next_angle();
        let theta_beta = rng.next_angle();
        let gamma_candidate = rng.next_angle();
        let theta_gamma = match params.coupling {
            Coupling::Independent => gamma_candidate,
            Coupling::Coupled => theta_alpha + theta_beta,
        };
        let triple = PhaseTriple {
            theta_alpha,
            theta_beta,
            theta_gamma,
        };
        let clean = realization(params, triple)?;
        let series = if params.noise_amplitude > 0.0 {
            let values: Vec<f64> = clean
                .values()
                .iter()
                .map(|&v| v + rng.next_symmetric(params.noise_amplitude))
                .collect();
            TimeSeries::new(values, 1.0, format!("synthetic r{j}"))?
        } else {
            clean.relabeled(format!("synthetic r{j}"))
        };
        realizations.push(series);
        phases.push(triple);
    }
    Ok(Ensemble {
        realizations,
        params: Some(params.clone()),
        phases,
    })
}

/// Returns a copy of the ensemble with i.i.d. uniform noise on
/// `[-noise_amplitude, +noise_amplitude)` added to every sample. The
/// input is left untouched; amplitude 0 returns identical values.
pub fn add_noise(ensemble: &Ensemble, noise_amplitude: f64, seed: u64) -> Result<Ensemble> {
    if !noise_amplitude.is_finite() || noise_amplitude < 0.0 {
        return Err(Error::Constraint(format!(
            "noise_amplitude must be >= 0 and finite, got {noise_amplitude}"
        )));
    }
    if noise_amplitude == 0.0 {
        return Ok(ensemble.clone());
    }
    let mut realizations = Vec::with_capacity(ensemble.len());
    for (j, source) in ensemble.realizations().iter().enumerate() {
        let mut rng = SplitMix64::new(stream_seed(seed, j as u64));
        let values: Vec<f64> = source
            .values()
            .iter()
            .map(|&v| v + rng.next_symmetric(noise_amplitude))
            .collect();
        realizations.push(TimeSeries::new(values, source.dt(), source.label())?);
    }
    Ok(Ensemble {
        realizations,
        params: ensemble.params.clone(),
        phases: ensemble.phases.clone(),
    })
}
