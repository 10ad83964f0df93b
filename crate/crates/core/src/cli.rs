//! Command-line surface: `synth`, `analyze`, `peaks`, `surrogate` and
//! `report` subcommands, their file formats, and the configuration
//! echo that makes every run reproducible.
//!
//! Every flag is a `--key value` pair; a `--config FILE` may supply the
//! same keys as `key=value` lines (`#` starts a comment), with explicit
//! flags winning on conflict. The effective configuration of each run
//! is echoed to `config.txt` in the output directory, and that file can
//! be fed back through `--config` to reproduce the run byte for byte.
//! The `BISPECTRAL_OUT` environment variable overrides the default
//! output directory (`out`); everything else is explicit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::bispec::{
    bicoherence, bispectrum, coupling_index, detect_peaks, surrogate_test, BicoherenceMap, Peak,
    SurrogateTest,
};
use crate::error::{Error, Result};
use crate::heatmap::write_heatmap;
use crate::ingest::{
    parse_ticks, segment, sessionize, transform, PriceColumn, TransformSpec, Window,
};
use crate::spectral::{dft, mean_power_spectrum, Spectrum, TimeSeries};
use crate::synth::{generate, Coupling, Ensemble, KGammaRule, SynthParams};

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "BISPECTRAL_OUT";

const DEFAULT_OUT: &str = "out";

/// Slack mirroring the peak detector's threshold comparison.
const THRESHOLD_SLACK: f64 = 1e-9;

pub const USAGE: &str = "\
bispectral <command> [--key value ...]

commands:
  synth      generate a synthetic ensemble (ensemble.csv, phases.csv)
  analyze    full pipeline: spectra, bispectrum, bicoherence, heatmap, peaks
  peaks      pipeline up to the peak report only (report.txt)
  surrogate  phase-randomization significance test at one cell (surrogate.txt)
  report     re-render report.txt from an existing analysis directory
  help       print this text

common flags:
  --out DIR              output directory (default: $BISPECTRAL_OUT or ./out)
  --config FILE          key=value file supplying any flag; explicit flags win

synth flags:
  --n INT                samples per realization, power of two (default 256)
  --m INT                realization count (default 64)
  --ka INT --kb INT      component frequency bins (defaults 5 and 9)
  --kgamma INT|sum       third bin: explicit, or 'sum' for ka+kb (default sum)
  --mode WORD            coupled | uncoupled (default coupled)
  --amplitude X          per-component amplitude (default 1)
  --noise-amplitude X    uniform noise half-width (default 0.05)
  --seed INT             generator seed (default 0)

analyze / peaks / surrogate flags:
  --input FILE           ensemble CSV or tick CSV (auto-detected by header)
  --column WORD          open | high | low | close (default close)
  --max-gap-minutes INT  session split threshold for tick data (default 60)
  --transform WORD       raw | demean | log-return | first-difference (default raw)
  --segment-length INT   power of two (default 256)
  --overlap X            segment overlap fraction in [0, 0.5] (default 0)
  --window WORD          rectangular | hann (default rectangular)
  --power-floor X        relative bicoherence validity floor (default 1e-12)
  --threshold X          peak detection threshold on b2 in (0, 1] (default 0.6)
  --matrix-csv BOOL      analyze only: also write the grid-layout matrix CSV

surrogate flags:
  --target-ka INT --target-kb INT   cell to test (default: strongest valid cell)
  --surrogates INT       surrogate count, at least 19 (default 99)
  --seed INT             surrogate seed (default 0)

report flags:
  --input DIR            directory holding bicoherence.csv and bispectrum.csv
  --threshold X          peak threshold to re-apply (default 0.6)
";

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Analyze,
    Peaks,
    Surrogate,
    Report,
}

impl Command {
    fn parse(word: &str) -> Result<Self> {
        match word {
            "synth" => Ok(Command::Synth),
            "analyze" => Ok(Command::Analyze),
            "peaks" => Ok(Command::Peaks),
            "surrogate" => Ok(Command::Surrogate),
            "report" => Ok(Command::Report),
            other => Err(Error::Usage(format!(
                "unknown command '{other}'; expected synth, analyze, peaks, surrogate or report \
                 (run 'bispectral help')"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Analyze => "analyze",
            Command::Peaks => "peaks",
            Command::Surrogate => "surrogate",
            Command::Report => "report",
        }
    }

    /// Flags the command accepts, in the order they are echoed to
    /// `config.txt`.
    fn keys(self) -> &'static [&'static str] {
        const SYNTH: &[&str] = &[
            "out",
            "n",
            "m",
            "ka",
            "kb",
            "kgamma",
            "mode",
            "amplitude",
            "noise-amplitude",
            "seed",
        ];
        const ANALYZE: &[&str] = &[
            "input",
            "out",
            "column",
            "max-gap-minutes",
            "transform",
            "segment-length",
            "overlap",
            "window",
            "power-floor",
            "threshold",
            "matrix-csv",
        ];
        const PEAKS: &[&str] = &[
            "input",
            "out",
            "column",
            "max-gap-minutes",
            "transform",
            "segment-length",
            "overlap",
            "window",
            "power-floor",
            "threshold",
        ];
        const SURROGATE: &[&str] = &[
            "input",
            "out",
            "column",
            "max-gap-minutes",
            "transform",
            "segment-length",
            "overlap",
            "window",
            "power-floor",
            "target-ka",
            "target-kb",
            "surrogates",
            "seed",
        ];
        const REPORT: &[&str] = &["input", "out", "threshold"];
        match self {
            Command::Synth => SYNTH,
            Command::Analyze => ANALYZE,
            Command::Peaks => PEAKS,
            Command::Surrogate => SURROGATE,
            Command::Report => REPORT,
        }
    }
}

/// The fully resolved parameters of one run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    // synth
    pub n: usize,
    pub m: usize,
    pub k_alpha: usize,
    pub k_beta: usize,
    /// `None` means the sum rule `kγ = kα + kβ`.
    pub k_gamma: Option<usize>,
    pub mode: Coupling,
    pub amplitude: f64,
    pub noise_amplitude: f64,
    pub seed: u64,
    // ingest pipeline
    pub column: PriceColumn,
    pub max_gap_minutes: u32,
    pub transform: TransformSpec,
    pub segment_length: usize,
    pub overlap: f64,
    pub window: Window,
    // detection
    pub power_floor: f64,
    pub threshold: f64,
    // surrogate
    pub surrogates: usize,
    pub target_ka: Option<usize>,
    pub target_kb: Option<usize>,
    // extras
    pub matrix_csv: bool,
}

impl RunConfig {
    fn from_map(command: Command, map: &BTreeMap<String, String>) -> Result<Self> {
        let raw = |key: &str, default: &'static str| -> &str {
            map.get(key).map(String::as_str).unwrap_or(default)
        };
        fn typed<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T> {
            raw.parse()
                .map_err(|_| Error::Usage(format!("invalid value '{raw}' for --{key}")))
        }
        macro_rules! field {
            ($key:expr, $default:expr) => {
                typed($key, raw($key, $default))?
            };
        }

        let out = map
            .get("out")
            .cloned()
            .or_else(|| std::env::var(OUT_DIR_ENV).ok())
            .unwrap_or_else(|| DEFAULT_OUT.to_string());

        let mode = match map.get("mode").map(String::as_str) {
            None | Some("coupled") => Coupling::Coupled,
            Some("uncoupled") | Some("independent") => Coupling::Independent,
            Some(other) => {
                return Err(Error::Usage(format!(
                    "invalid value '{other}' for --mode; expected coupled or uncoupled"
                )))
            }
        };
        let k_gamma = match map.get("kgamma").map(String::as_str) {
            None | Some("sum") => None,
            Some(raw) => Some(typed::<usize>("kgamma", raw)?),
        };
        let column = match map.get("column").map(String::as_str) {
            None | Some("close") => PriceColumn::Close,
            Some("open") => PriceColumn::Open,
            Some("high") => PriceColumn::High,
            Some("low") => PriceColumn::Low,
            Some(other) => {
                return Err(Error::Usage(format!(
                    "invalid value '{other}' for --column; expected open, high, low or close"
                )))
            }
        };
        let transform = match map.get("transform").map(String::as_str) {
            None | Some("raw") => TransformSpec::Raw,
            Some("demean") => TransformSpec::Demean,
            Some("log-return") | Some("log_return") => TransformSpec::LogReturn,
            Some("first-difference") | Some("first_difference") => TransformSpec::FirstDifference,
            Some(other) => {
                return Err(Error::Usage(format!(
                    "invalid value '{other}' for --transform; expected raw, demean, \
                     log-return or first-difference"
                )))
            }
        };
        let window = match map.get("window").map(String::as_str) {
            None | Some("rectangular") => Window::Rectangular,
            Some("hann") => Window::Hann,
            Some(other) => {
                return Err(Error::Usage(format!(
                    "invalid value '{other}' for --window; expected rectangular or hann"
                )))
            }
        };
        let matrix_csv = match map.get("matrix-csv").map(String::as_str) {
            None | Some("false") => false,
            Some("true") => true,
            Some(other) => {
                return Err(Error::Usage(format!(
                    "invalid value '{other}' for --matrix-csv; expected true or false"
                )))
            }
        };

        let cfg = RunConfig {
            command,
            input: map.get("input").map(PathBuf::from),
            out: PathBuf::from(out),
            n: field!("n", "256"),
            m: field!("m", "64"),
            k_alpha: field!("ka", "5"),
            k_beta: field!("kb", "9"),
            k_gamma,
            mode,
            amplitude: field!("amplitude", "1"),
            noise_amplitude: field!("noise-amplitude", "0.05"),
            seed: field!("seed", "0"),
            column,
            max_gap_minutes: field!("max-gap-minutes", "60"),
            transform,
            segment_length: field!("segment-length", "256"),
            overlap: field!("overlap", "0"),
            window,
            power_floor: field!("power-floor", "1e-12"),
            threshold: field!("threshold", "0.6"),
            surrogates: field!("surrogates", "99"),
            target_ka: map
                .get("target-ka")
                .map(|raw| typed::<usize>("target-ka", raw))
                .transpose()?,
            target_kb: map
                .get("target-kb")
                .map(|raw| typed::<usize>("target-kb", raw))
                .transpose()?,
            matrix_csv,
        };
        cfg.validate_flags()?;
        Ok(cfg)
    }

    /// Early checks for constraints that are knowable before any work.
    fn validate_flags(&self) -> Result<()> {
        if self.command == Command::Surrogate && self.surrogates < 19 {
            return Err(Error::Usage(format!(
                "--surrogates must be at least 19, got {}",
                self.surrogates
            )));
        }
        if matches!(
            self.command,
            Command::Analyze | Command::Peaks | Command::Report
        ) && !(self.threshold > 0.0 && self.threshold <= 1.0)
        {
            return Err(Error::Usage(format!(
                "--threshold must lie in (0, 1], got {}",
                self.threshold
            )));
        }
        if self.target_ka.is_some() != self.target_kb.is_some() {
            return Err(Error::Usage(
                "--target-ka and --target-kb must be given together".into(),
            ));
        }
        Ok(())
    }

    fn require_input(&self) -> Result<&Path> {
        self.input
            .as_deref()
            .ok_or_else(|| Error::Usage(format!("--input is required for {}", self.command.name())))
    }

    fn synth_params(&self) -> SynthParams {
        SynthParams {
            n: self.n,
            m: self.m,
            k_alpha: self.k_alpha,
            k_beta: self.k_beta,
            k_gamma_rule: self
                .k_gamma
                .map(KGammaRule::Explicit)
                .unwrap_or(KGammaRule::Sum),
            coupling: self.mode,
            amplitude: self.amplitude,
            noise_amplitude: self.noise_amplitude,
            seed: self.seed,
        }
    }

    /// The value echoed for a key; mirrors exactly what the flag parser
    /// accepts, so `config.txt` round-trips through `--config`.
    fn value_string(&self, key: &str) -> String {
        match key {
            "input" => self
                .input
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
            "out" => self.out.display().to_string(),
            "n" => self.n.to_string(),
            "m" => self.m.to_string(),
            "ka" => self.k_alpha.to_string(),
            "kb" => self.k_beta.to_string(),
            "kgamma" => self
                .k_gamma
                .map(|k| k.to_string())
                .unwrap_or_else(|| "sum".into()),
            "mode" => match self.mode {
                Coupling::Coupled => "coupled".into(),
                Coupling::Independent => "uncoupled".into(),
            },
            "amplitude" => self.amplitude.to_string(),
            "noise-amplitude" => self.noise_amplitude.to_string(),
            "seed" => self.seed.to_string(),
            "column" => self.column.name().into(),
            "max-gap-minutes" => self.max_gap_minutes.to_string(),
            "transform" => self.transform.name().into(),
            "segment-length" => self.segment_length.to_string(),
            "overlap" => self.overlap.to_string(),
            "window" => self.window.name().into(),
            "power-floor" => self.power_floor.to_string(),
            "threshold" => self.threshold.to_string(),
            "surrogates" => self.surrogates.to_string(),
            "target-ka" => self.target_ka.map(|k| k.to_string()).unwrap_or_default(),
            "target-kb" => self.target_kb.map(|k| k.to_string()).unwrap_or_default(),
            "matrix-csv" => self.matrix_csv.to_string(),
            other => unreachable!("unlisted config key {other}"),
        }
    }

    /// `config.txt` contents: one `key=value` per line, every effective
    /// parameter of the command included.
    pub fn echo(&self) -> String {
        let mut text = String::from("# effective configuration; reusable via --config\n");
        let _ = writeln!(text, "command={}", self.command.name());
        for key in self.command.keys() {
            let value = self.value_string(key);
            if value.is_empty() {
                continue; // unset optional (input for synth, target cell)
            }
            let _ = writeln!(text, "{key}={value}");
        }
        text
    }
}

// ---------------------------------------------------------------------------
// Argument handling
// ---------------------------------------------------------------------------

fn collect_flags(args: &[String]) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let key = arg.strip_prefix("--").ok_or_else(|| {
            Error::Usage(format!(
                "unexpected argument '{arg}'; flags look like --key value"
            ))
        })?;
        let value = iter
            .next()
            .ok_or_else(|| Error::Usage(format!("flag --{key} expects a value")))?;
        map.insert(key.to_string(), value.clone());
    }
    Ok(map)
}

fn check_known_keys(command: Command, map: &BTreeMap<String, String>, origin: &str) -> Result<()> {
    for key in map.keys() {
        if key != "config" && !command.keys().contains(&key.as_str()) {
            return Err(Error::Usage(format!(
                "unknown {origin} '{key}' for command {}",
                command.name()
            )));
        }
    }
    Ok(())
}

/// Loads `--config FILE` (if given) and merges it under the explicit
/// flags: flags win on conflict.
fn merge_config_file(
    command: Command,
    mut flags: BTreeMap<String, String>,
) -> Result<BTreeMap<String, String>> {
    let Some(path) = flags.remove("config") else {
        return Ok(flags);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut from_file = BTreeMap::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = raw_line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: index + 1,
            message: format!("{path}: expected key=value, got '{line}'"),
        })?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key == "command" {
            if value != command.name() {
                return Err(Error::Usage(format!(
                    "config file {path} records command={value}, but '{}' was invoked",
                    command.name()
                )));
            }
            continue;
        }
        from_file.insert(key, value);
    }
    check_known_keys(command, &from_file, &format!("key in config file {path}"))?;
    for (key, value) in from_file {
        flags.entry(key).or_insert(value);
    }
    Ok(flags)
}

// ---------------------------------------------------------------------------
// CSV writers and readers
// ---------------------------------------------------------------------------

/// Ensemble CSV: header `r0,r1,...`, one column per realization, one row
/// per sample.
pub fn ensemble_to_csv(ensemble: &Ensemble) -> String {
    let m = ensemble.len();
    let n = ensemble.realizations()[0].len();
    let mut text = (0..m)
        .map(|j| format!("r{j}"))
        .collect::<Vec<_>>()
        .join(",");
    text.push('\n');
    for t in 0..n {
        for (j, series) in ensemble.realizations().iter().enumerate() {
            if j > 0 {
                text.push(',');
            }
            let _ = write!(text, "{}", series.values()[t]);
        }
        text.push('\n');
    }
    text
}

/// Parses the ensemble CSV format back into equal-length series.
pub fn ensemble_from_csv(text: &str) -> Result<Vec<TimeSeries>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "ensemble CSV is empty".into(),
    })?;
    let m = header.split(',').count();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); m];
    for (index, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != m {
            return Err(Error::Parse {
                line: index + 1,
                message: format!("expected {m} fields, got {}", fields.len()),
            });
        }
        for (column, raw) in columns.iter_mut().zip(&fields) {
            let value: f64 = raw.trim().parse().map_err(|_| Error::Parse {
                line: index + 1,
                message: format!("cannot parse '{raw}' as a number"),
            })?;
            column.push(value);
        }
    }
    columns
        .into_iter()
        .enumerate()
        .map(|(j, values)| TimeSeries::new(values, 1.0, format!("r{j}")))
        .collect()
}

/// Phases CSV: one row per realization with the three drawn phases.
pub fn phases_to_csv(ensemble: &Ensemble) -> String {
    let mut text = String::from("realization,theta_alpha,theta_beta,theta_gamma\n");
    for (j, triple) in ensemble.phases().iter().enumerate() {
        let _ = writeln!(
            text,
            "{j},{},{},{}",
            triple.theta_alpha, triple.theta_beta, triple.theta_gamma
        );
    }
    text
}

/// Complex spectrum CSV: `bin,re,im`.
pub fn spectrum_to_csv(spectrum: &Spectrum) -> String {
    let mut text = String::from("bin,re,im\n");
    for (k, bin) in spectrum.bins().iter().enumerate() {
        let _ = writeln!(text, "{k},{},{}", bin.re, bin.im);
    }
    text
}

fn mean_power_csv(power: &[f64]) -> String {
    let mut text = String::from("bin,power\n");
    for (k, p) in power.iter().enumerate() {
        let _ = writeln!(text, "{k},{p}");
    }
    text
}

fn bispectrum_csv(est: &crate::bispec::BispectrumEstimate) -> String {
    let mut text = String::from("ka,kb,re,im\n");
    for (ka, kb) in est.domain().cells() {
        let mean = est.mean_at(ka, kb).unwrap();
        let _ = writeln!(text, "{ka},{kb},{},{}", mean.re, mean.im);
    }
    text
}

fn bicoherence_csv(map: &BicoherenceMap) -> String {
    let mut text = String::from("ka,kb,b2,valid\n");
    for (ka, kb) in map.domain().cells() {
        let _ = writeln!(
            text,
            "{ka},{kb},{},{}",
            map.b2_at(ka, kb).unwrap(),
            map.is_valid(ka, kb)
        );
    }
    text
}

/// Grid-layout matrix CSV: one row per `ka`, one column per `kb`,
/// outside-domain cells left empty.
pub fn bicoherence_matrix_csv(map: &BicoherenceMap) -> String {
    let domain = map.domain();
    let mut text = String::from("ka");
    for kb in 1..=domain.kb_max() {
        let _ = write!(text, ",{kb}");
    }
    text.push('\n');
    for ka in 1..=domain.ka_max() {
        let _ = write!(text, "{ka}");
        for kb in 1..=domain.kb_max() {
            text.push(',');
            if let Some(b2) = map.b2_at(ka, kb) {
                let _ = write!(text, "{b2}");
            }
        }
        text.push('\n');
    }
    text
}

/// Rectangular grid of `b²` (invalid and outside-domain cells 0.0) for
/// heatmap rendering: `ka` rows down, `kb` columns right.
fn bicoherence_grid(map: &BicoherenceMap) -> Vec<Vec<f64>> {
    let domain = map.domain();
    (1..=domain.ka_max())
        .map(|ka| {
            (1..=domain.kb_max())
                .map(|kb| {
                    if map.is_valid(ka, kb) {
                        map.b2_at(ka, kb).unwrap()
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

fn render_report(
    source: &str,
    n: usize,
    segments: Option<usize>,
    threshold: f64,
    coupling: f64,
    peaks: &[Peak],
) -> String {
    let mut text = String::from("# peak report\n");
    let _ = writeln!(text, "source: {source}");
    let _ = writeln!(text, "n: {n}");
    if let Some(m) = segments {
        let _ = writeln!(text, "segments: {m}");
    }
    let _ = writeln!(text, "threshold_b2: {threshold}");
    let _ = writeln!(text, "coupling_index: {coupling:.6}");
    let _ = writeln!(text, "peaks: {}", peaks.len());
    let _ = writeln!(text, "ka,kb,mean_magnitude,b2,biphase,p_value");
    for peak in peaks {
        let p = peak
            .p_value
            .map(|p| format!("{p:.4}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            text,
            "{},{},{:.6e},{:.6},{:.6},{p}",
            peak.ka, peak.kb, peak.mean_magnitude, peak.b2, peak.biphase
        );
    }
    text
}

fn render_surrogate(test: &SurrogateTest) -> String {
    let mut sorted = test.surrogate_b2.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    let mut text = String::from("# surrogate significance test\n");
    let _ = writeln!(text, "target_ka: {}", test.target.0);
    let _ = writeln!(text, "target_kb: {}", test.target.1);
    let _ = writeln!(text, "observed_b2: {:.6}", test.observed_b2);
    let _ = writeln!(text, "surrogates: {}", test.surrogate_b2.len());
    let _ = writeln!(text, "surrogate_b2_min: {:.6}", sorted[0]);
    let _ = writeln!(text, "surrogate_b2_median: {median:.6}");
    let _ = writeln!(text, "surrogate_b2_max: {:.6}", sorted[sorted.len() - 1]);
    let _ = writeln!(text, "p_value: {:.4}", test.p_value);
    text
}

// ---------------------------------------------------------------------------
// Input loading
// ---------------------------------------------------------------------------

/// What `analyze`/`peaks`/`surrogate` feed the estimator, plus context
/// for the report.
struct LoadedSegments {
    segments: Vec<TimeSeries>,
    source: String,
    notes: Vec<String>,
}

fn load_segments(cfg: &RunConfig) -> Result<LoadedSegments> {
    let path = cfg.require_input()?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first_line = text.lines().next().ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("{}: file is empty", path.display()),
    })?;
    let source = path.display().to_string();
    let lowered = first_line.to_ascii_lowercase();
    if lowered.contains("timestamp") {
        let parsed = parse_ticks(text.as_bytes())?;
        let mut notes = Vec::new();
        if parsed.duplicates_collapsed > 0 {
            notes.push(format!(
                "warning: {} duplicate timestamp(s) collapsed to the last occurrence",
                parsed.duplicates_collapsed
            ));
        }
        let sessions = sessionize(&parsed.records, cfg.max_gap_minutes, cfg.column)?;
        notes.push(format!(
            "{} session(s), {} missing minute(s) carried forward",
            sessions.sessions.len(),
            sessions.total_fills()
        ));
        let transformed = transform(&sessions, cfg.transform)?;
        let segmented = segment(&transformed, cfg.segment_length, cfg.overlap, cfg.window)?;
        notes.push(format!(
            "{} segment(s) of length {}, {} trailing sample(s) dropped",
            segmented.segments.len(),
            cfg.segment_length,
            segmented.dropped_samples
        ));
        Ok(LoadedSegments {
            segments: segmented.segments,
            source,
            notes,
        })
    } else if first_line.trim_start().starts_with("r0") {
        Ok(LoadedSegments {
            segments: ensemble_from_csv(&text)?,
            source,
            notes: Vec::new(),
        })
    } else {
        Err(Error::Usage(format!(
            "{}: cannot auto-detect input type; expected a tick CSV header containing \
             'timestamp' or an ensemble CSV header starting with 'r0'",
            path.display()
        )))
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn write_output(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let params = cfg.synth_params();
    params.validate()?;
    let ensemble = generate(&params)?;
    write_output(&cfg.out, "ensemble.csv", ensemble_to_csv(&ensemble))?;
    write_output(&cfg.out, "phases.csv", phases_to_csv(&ensemble))?;
    write_output(&cfg.out, "config.txt", cfg.echo())?;
    println!(
        "wrote {} realization(s) of length {} to {}",
        params.m,
        params.n,
        cfg.out.display()
    );
    Ok(())
}

struct Analysis {
    spectra_count: usize,
    n: usize,
    report_text: String,
    peak_count: usize,
    est: crate::bispec::BispectrumEstimate,
    map: BicoherenceMap,
    mean_power: Vec<f64>,
}

fn run_analysis(cfg: &RunConfig, loaded: &LoadedSegments) -> Result<Analysis> {
    for note in &loaded.notes {
        println!("{note}");
    }
    let spectra: Vec<Spectrum> = loaded.segments.iter().map(dft).collect::<Result<_>>()?;
    let mean_power = mean_power_spectrum(&spectra)?;
    let est = bispectrum(&spectra)?;
    let map = bicoherence(&est, cfg.power_floor)?;
    let peaks = detect_peaks(&map, &est, cfg.threshold)?;
    let coupling = coupling_index(&map)?;
    let report_text = render_report(
        &loaded.source,
        est.n(),
        Some(est.m()),
        cfg.threshold,
        coupling,
        &peaks.peaks,
    );
    Ok(Analysis {
        spectra_count: spectra.len(),
        n: est.n(),
        peak_count: peaks.peaks.len(),
        report_text,
        est,
        map,
        mean_power: mean_power.power().to_vec(),
    })
}

fn cmd_analyze(cfg: &RunConfig) -> Result<()> {
    let loaded = load_segments(cfg)?;
    let analysis = run_analysis(cfg, &loaded)?;
    write_output(
        &cfg.out,
        "spectrum.csv",
        mean_power_csv(&analysis.mean_power),
    )?;
    write_output(&cfg.out, "bispectrum.csv", bispectrum_csv(&analysis.est))?;
    write_output(&cfg.out, "bicoherence.csv", bicoherence_csv(&analysis.map))?;
    write_heatmap(
        &bicoherence_grid(&analysis.map),
        &cfg.out.join("bicoherence.pgm"),
    )?;
    write_output(&cfg.out, "report.txt", &analysis.report_text)?;
    if cfg.matrix_csv {
        write_output(
            &cfg.out,
            "bicoherence_matrix.csv",
            bicoherence_matrix_csv(&analysis.map),
        )?;
    }
    write_output(&cfg.out, "config.txt", cfg.echo())?;
    println!(
        "analyzed {} segment(s) of length {}: {} peak(s); outputs in {}",
        analysis.spectra_count,
        analysis.n,
        analysis.peak_count,
        cfg.out.display()
    );
    Ok(())
}

fn cmd_peaks(cfg: &RunConfig) -> Result<()> {
    let loaded = load_segments(cfg)?;
    let analysis = run_analysis(cfg, &loaded)?;
    write_output(&cfg.out, "report.txt", &analysis.report_text)?;
    write_output(&cfg.out, "config.txt", cfg.echo())?;
    println!(
        "{} peak(s) at threshold {}; report in {}",
        analysis.peak_count,
        cfg.threshold,
        cfg.out.display()
    );
    Ok(())
}

fn cmd_surrogate(cfg: &RunConfig) -> Result<()> {
    let loaded = load_segments(cfg)?;
    for note in &loaded.notes {
        println!("{note}");
    }
    let target = match (cfg.target_ka, cfg.target_kb) {
        (Some(ka), Some(kb)) => (ka, kb),
        _ => {
            let spectra: Vec<Spectrum> = loaded.segments.iter().map(dft).collect::<Result<_>>()?;
            let est = bispectrum(&spectra)?;
            let map = bicoherence(&est, cfg.power_floor)?;
            let (ka, kb, _) = map.max_valid_cell().ok_or(Error::AllCellsInvalid)?;
            (ka, kb)
        }
    };
    let test = surrogate_test(&loaded.segments, target, cfg.surrogates, cfg.seed)?;
    // Echo the resolved target so config.txt reproduces this exact test.
    let mut echoed = cfg.clone();
    echoed.target_ka = Some(target.0);
    echoed.target_kb = Some(target.1);
    write_output(&cfg.out, "surrogate.txt", render_surrogate(&test))?;
    write_output(&cfg.out, "config.txt", echoed.echo())?;
    println!(
        "surrogate test at ({}, {}): observed b2 {:.6}, p = {:.4}",
        target.0, target.1, test.observed_b2, test.p_value
    );
    Ok(())
}

fn cmd_report(cfg: &RunConfig) -> Result<()> {
    let dir = cfg.require_input()?;
    let bico_path = dir.join("bicoherence.csv");
    let bisp_path = dir.join("bispectrum.csv");
    let bico_text = fs::read_to_string(&bico_path).map_err(|e| Error::io(&bico_path, e))?;
    let bisp_text = fs::read_to_string(&bisp_path).map_err(|e| Error::io(&bisp_path, e))?;

    let mut cells: Vec<(usize, usize, f64, bool)> = Vec::new();
    for (index, line) in bico_text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |message: String| Error::Parse {
            line: index + 1,
            message: format!("{}: {message}", bico_path.display()),
        };
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", fields.len())));
        }
        let ka: usize = fields[0].parse().map_err(|_| bad("bad ka".into()))?;
        let kb: usize = fields[1].parse().map_err(|_| bad("bad kb".into()))?;
        let b2: f64 = fields[2].parse().map_err(|_| bad("bad b2".into()))?;
        let valid: bool = fields[3]
            .parse()
            .map_err(|_| bad("bad valid flag".into()))?;
        cells.push((ka, kb, b2, valid));
    }
    let mut means: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for (index, line) in bisp_text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |message: String| Error::Parse {
            line: index + 1,
            message: format!("{}: {message}", bisp_path.display()),
        };
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, got {}", fields.len())));
        }
        let ka: usize = fields[0].parse().map_err(|_| bad("bad ka".into()))?;
        let kb: usize = fields[1].parse().map_err(|_| bad("bad kb".into()))?;
        let re: f64 = fields[2].parse().map_err(|_| bad("bad re".into()))?;
        let im: f64 = fields[3].parse().map_err(|_| bad("bad im".into()))?;
        means.insert((ka, kb), Complex64::new(re, im));
    }

    let n = cells
        .iter()
        .map(|(ka, kb, _, _)| 2 * (ka + kb))
        .max()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("{}: no cells", bico_path.display()),
        })?;

    let mut coupling_sum = 0.0;
    let mut coupling_count = 0usize;
    let mut peaks = Vec::new();
    for &(ka, kb, b2, valid) in &cells {
        if !valid {
            continue;
        }
        coupling_sum += b2;
        coupling_count += 1;
        if b2 + THRESHOLD_SLACK < cfg.threshold {
            continue;
        }
        let mean = means.get(&(ka, kb)).copied().unwrap_or_default();
        peaks.push(Peak {
            ka,
            kb,
            mean_magnitude: mean.norm(),
            b2,
            biphase: mean.arg(),
            p_value: None,
        });
    }
    if coupling_count == 0 {
        return Err(Error::AllCellsInvalid);
    }
    peaks.sort_by(|a, b| {
        b.b2.partial_cmp(&a.b2)
            .expect("bicoherence values are finite")
            .then((a.ka, a.kb).cmp(&(b.ka, b.kb)))
    });
    let report = render_report(
        &dir.display().to_string(),
        n,
        None,
        cfg.threshold,
        coupling_sum / coupling_count as f64,
        &peaks,
    );
    write_output(&cfg.out, "report.txt", report)?;
    write_output(&cfg.out, "config.txt", cfg.echo())?;
    println!(
        "{} peak(s) at threshold {}; report in {}",
        peaks.len(),
        cfg.threshold,
        cfg.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

/// Runs one command; returns the process exit code. Errors print a
/// single diagnostic line to stderr.
pub fn run(args: Vec<String>) -> i32 {
    match execute(&args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn execute(args: &[String]) -> Result<()> {
    let Some(first) = args.first() else {
        return Err(Error::Usage(
            "missing command; run 'bispectral help' for usage".into(),
        ));
    };
    if matches!(first.as_str(), "help" | "--help" | "-h") {
        println!("{USAGE}");
        return Ok(());
    }
    let command = Command::parse(first)?;
    let flags = collect_flags(&args[1..])?;
    check_known_keys(command, &flags, "flag --")?;
    let merged = merge_config_file(command, flags)?;
    let cfg = RunConfig::from_map(command, &merged)?;
    match command {
        Command::Synth => cmd_synth(&cfg),
        Command::Analyze => cmd_analyze(&cfg),
        Command::Peaks => cmd_peaks(&cfg),
        Command::Surrogate => cmd_surrogate(&cfg),
        Command::Report => cmd_report(&cfg),
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::generate;

    fn map_of(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn flags_parse_in_pairs() {
        let args: Vec<String> = ["--seed", "42", "--mode", "coupled"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let map = collect_flags(&args).unwrap();
        assert_eq!(map.get("seed").unwrap(), "42");
        assert_eq!(map.get("mode").unwrap(), "coupled");
    }

    #[test]
    fn stray_arguments_are_usage_errors() {
        let args = vec!["seed".to_string()];
        assert!(matches!(collect_flags(&args), Err(Error::Usage(_))));
        let args = vec!["--seed".to_string()];
        assert!(collect_flags(&args).is_err());
    }

    #[test]
    fn unknown_flag_for_command_is_rejected() {
        let map = map_of(&[("threshold", "0.5")]);
        assert!(check_known_keys(Command::Synth, &map, "flag --").is_err());
        assert!(check_known_keys(Command::Analyze, &map, "flag --").is_ok());
    }

    #[test]
    fn defaults_resolve() {
        let cfg = RunConfig::from_map(Command::Synth, &BTreeMap::new()).unwrap();
        assert_eq!(cfg.n, 256);
        assert_eq!(cfg.m, 64);
        assert_eq!(cfg.k_alpha, 5);
        assert_eq!(cfg.k_beta, 9);
        assert_eq!(cfg.mode, Coupling::Coupled);
        assert_eq!(cfg.noise_amplitude, 0.05);
        assert_eq!(cfg.threshold, 0.6);
        assert_eq!(cfg.surrogates, 99);
    }

    #[test]
    fn uncoupled_is_an_alias_for_independent() {
        let cfg = RunConfig::from_map(Command::Synth, &map_of(&[("mode", "uncoupled")])).unwrap();
        assert_eq!(cfg.mode, Coupling::Independent);
        let cfg = RunConfig::from_map(Command::Synth, &map_of(&[("mode", "independent")])).unwrap();
        assert_eq!(cfg.mode, Coupling::Independent);
    }

    #[test]
    fn surrogate_minimum_is_a_usage_error() {
        let err =
            RunConfig::from_map(Command::Surrogate, &map_of(&[("surrogates", "5")])).unwrap_err();
        assert!(err.to_string().contains("at least 19"), "{err}");
    }

    #[test]
    fn echo_round_trips_through_the_config_loader() {
        let cfg = RunConfig::from_map(
            Command::Synth,
            &map_of(&[("seed", "42"), ("mode", "uncoupled"), ("kgamma", "20")]),
        )
        .unwrap();
        let echo = cfg.echo();
        // Re-parse the echo as a config file for the same command.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.txt");
        fs::write(&path, &echo).unwrap();
        let merged = merge_config_file(
            Command::Synth,
            map_of(&[("config", path.to_str().unwrap())]),
        )
        .unwrap();
        let reloaded = RunConfig::from_map(Command::Synth, &merged).unwrap();
        assert_eq!(reloaded.seed, cfg.seed);
        assert_eq!(reloaded.mode, cfg.mode);
        assert_eq!(reloaded.k_gamma, cfg.k_gamma);
        assert_eq!(reloaded.echo(), echo);
    }

    #[test]
    fn config_file_command_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.txt");
        fs::write(&path, "command=analyze\nthreshold=0.5\n").unwrap();
        let err = merge_config_file(
            Command::Synth,
            map_of(&[("config", path.to_str().unwrap())]),
        )
        .unwrap_err();
        assert!(err.to_string().contains("command=analyze"));
    }

    #[test]
    fn explicit_flags_beat_config_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.txt");
        fs::write(&path, "seed=1\nm=8\n").unwrap();
        let merged = merge_config_file(
            Command::Synth,
            map_of(&[("config", path.to_str().unwrap()), ("seed", "2")]),
        )
        .unwrap();
        assert_eq!(merged.get("seed").unwrap(), "2");
        assert_eq!(merged.get("m").unwrap(), "8");
    }

    #[test]
    fn ensemble_csv_round_trips_exactly() {
        let ensemble = generate(&SynthParams {
            n: 16,
            m: 3,
            k_alpha: 2,
            k_beta: 3,
            noise_amplitude: 0.05,
            seed: 5,
            ..SynthParams::default()
        })
        .unwrap();
        let csv = ensemble_to_csv(&ensemble);
        let segments = ensemble_from_csv(&csv).unwrap();
        assert_eq!(segments.len(), 3);
        for (original, parsed) in ensemble.realizations().iter().zip(&segments) {
            assert_eq!(original.values(), parsed.values());
        }
    }

    #[test]
    fn ensemble_csv_reports_bad_lines() {
        let err = ensemble_from_csv("r0,r1\n1.0\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("expected 2 fields"));
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn matrix_csv_leaves_outside_domain_empty() {
        let ones = Spectrum::new(vec![Complex64::new(1.0, 0.0); 8]).unwrap();
        let est = bispectrum(&[ones]).unwrap();
        let map = bicoherence(&est, 1e-12).unwrap();
        let text = bicoherence_matrix_csv(&map);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "ka,1,2");
        assert_eq!(lines[1], "1,1,"); // (1,2) outside: kb > ka
        assert_eq!(lines[2], "2,1,1"); // (2,1) and (2,2) inside
        assert_eq!(lines[3], "3,1,"); // (3,2) outside: 3+2 > 4
    }

    #[test]
    fn report_renders_deterministically() {
        let peaks = vec![Peak {
            ka: 9,
            kb: 5,
            mean_magnitude: 2_097_152.0,
            b2: 1.0,
            biphase: 0.0,
            p_value: None,
        }];
        let a = render_report("x.csv", 256, Some(64), 0.6, 0.015, &peaks);
        let b = render_report("x.csv", 256, Some(64), 0.6, 0.015, &peaks);
        assert_eq!(a, b);
        assert!(a.contains("peaks: 1"));
        assert!(a.contains("9,5,"));
    }
}
