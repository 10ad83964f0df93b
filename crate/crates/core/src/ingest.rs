//! Minute-bar tick data ingestion: CSV parsing, sessionization with a
//! carry-forward gap policy, detrending transforms, and segmentation
//! for the averaging bispectrum estimator.
//!
//! Input is UTF-8 CSV with a header row. Column names are configurable
//! via [`CsvColumns`]; the canonical header is
//! `timestamp,open,high,low,close,volume`. Timestamps are
//! minute-resolution, either `YYYY-MM-DD HH:MM` or ISO-8601
//! (`YYYY-MM-DDTHH:MM`, optional `:SS` which must be zero); the format
//! is detected from the first data row.

use std::io::{BufRead, BufReader, Read};

use chrono::{NaiveDate, NaiveDateTime, Timelike};

use crate::error::{Error, Result};
use crate::spectral::TimeSeries;

/// One minute bar.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub timestamp: NaiveDateTime,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
    pub volume: u64,
}

/// Which price field becomes the analyzed series.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceColumn {
    Open,
    High,
    Low,
    Close,
}

impl PriceColumn {
    pub fn name(self) -> &'static str {
        match self {
            PriceColumn::Open => "open",
            PriceColumn::High => "high",
            PriceColumn::Low => "low",
            PriceColumn::Close => "close",
        }
    }

    fn pick(self, record: &TickRecord) -> f64 {
        match self {
            PriceColumn::Open => record.open,
            PriceColumn::High => record.high,
            PriceColumn::Low => record.low,
            PriceColumn::Close => record.close,
        }
    }
}

/// Header names the parser looks for; matching is case-insensitive.
#[derive(Debug, Clone)]
pub struct CsvColumns {
    pub timestamp: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub volume: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            volume: "volume".into(),
        }
    }
}

/// Parsed, validated, timestamp-sorted records plus parse statistics.
#[derive(Debug, Clone)]
pub struct ParsedTicks {
    pub records: Vec<TickRecord>,
    /// Rows dropped because a later row carried the same timestamp.
    pub duplicates_collapsed: usize,
}

/// Gap-handling policy tag carried on sessionized output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapPolicy {
    /// Intra-session missing minutes are filled with the previous value.
    CarryForward,
}

/// One trading session: a contiguous run of minute bars.
#[derive(Debug, Clone)]
pub struct Session {
    pub date: NaiveDate,
    pub series: TimeSeries,
    /// Missing minutes filled by carry-forward inside this session.
    pub fills: usize,
}

/// Date-ordered sessions extracted from one record stream.
#[derive(Debug, Clone)]
pub struct SessionSeries {
    pub sessions: Vec<Session>,
    pub gap_policy_applied: GapPolicy,
}

impl SessionSeries {
    pub fn total_fills(&self) -> usize {
        self.sessions.iter().map(|s| s.fills).sum()
    }

    /// Length of the longest session.
    pub fn longest(&self) -> usize {
        self.sessions
            .iter()
            .map(|s| s.series.len())
            .max()
            .unwrap_or(0)
    }
}

/// Per-session detrending transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformSpec {
    /// Identity; the default.
    Raw,
    /// Subtract each session's mean.
    Demean,
    /// `ln(p_t / p_{t−1})`; requires strictly positive inputs and
    /// shortens each session by one sample.
    LogReturn,
    /// `p_t − p_{t−1}`; shortens each session by one sample.
    FirstDifference,
}

impl TransformSpec {
    pub fn name(self) -> &'static str {
        match self {
            TransformSpec::Raw => "raw",
            TransformSpec::Demean => "demean",
            TransformSpec::LogReturn => "log-return",
            TransformSpec::FirstDifference => "first-difference",
        }
    }
}

/// Window applied to each segment after demeaning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    /// Periodic Hann: `0.5 · (1 − cos(2πi/L))`.
    Hann,
}

impl Window {
    pub fn name(self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }
}

/// Segmentation output.
#[derive(Debug, Clone)]
pub struct Segmented {
    pub segments: Vec<TimeSeries>,
    /// Trailing samples per session that no segment covered.
    pub dropped_samples: usize,
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

const TIMESTAMP_FORMATS: &[&str] = &[
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M:%S",
    "%Y-%m-%dT%H:%M:%S",
];

/// Parses tick CSV with the canonical column names.
pub fn parse_ticks<R: Read>(source: R) -> Result<ParsedTicks> {
    parse_ticks_with_columns(source, &CsvColumns::default())
}

/// Parses tick CSV, locating columns by the given header names.
pub fn parse_ticks_with_columns<R: Read>(source: R, columns: &CsvColumns) -> Result<ParsedTicks> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines().enumerate();

    let header = loop {
        match lines.next() {
            Some((index, line)) => {
                let line = line.map_err(|e| Error::Parse {
                    line: index + 1,
                    message: format!("cannot read line: {e}"),
                })?;
                if !line.trim().is_empty() {
                    break (index + 1, line);
                }
            }
            None => return Err(Error::EmptyTicks),
        }
    };

    let fields: Vec<String> = header
        .1
        .split(',')
        .map(|f| f.trim().to_ascii_lowercase())
        .collect();
    let locate = |name: &str| -> Result<usize> {
        fields
            .iter()
            .position(|f| f == &name.to_ascii_lowercase())
            .ok_or_else(|| Error::Parse {
                line: header.0,
                message: format!("header is missing column '{name}'"),
            })
    };
    let col_timestamp = locate(&columns.timestamp)?;
    let col_open = locate(&columns.open)?;
    let col_high = locate(&columns.high)?;
    let col_low = locate(&columns.low)?;
    let col_close = locate(&columns.close)?;
    let col_volume = locate(&columns.volume)?;
    let needed = [
        col_timestamp,
        col_open,
        col_high,
        col_low,
        col_close,
        col_volume,
    ]
    .into_iter()
    .max()
    .unwrap()
        + 1;

    let mut rows: Vec<TickRecord> = Vec::new();
    let mut timestamp_format: Option<&str> = None;
    for (index, line) in lines {
        let line_number = index + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_number,
            message: format!("cannot read line: {e}"),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() < needed {
            return Err(Error::Parse {
                line: line_number,
                message: format!("expected at least {needed} fields, got {}", parts.len()),
            });
        }

        let raw_timestamp = parts[col_timestamp];
        let timestamp = match timestamp_format {
            Some(format) => {
                NaiveDateTime::parse_from_str(raw_timestamp, format).map_err(|_| Error::Parse {
                    line: line_number,
                    message: format!(
                        "cannot parse timestamp '{raw_timestamp}' with detected format '{format}'"
                    ),
                })?
            }
            None => {
                let (format, parsed) = TIMESTAMP_FORMATS
                    .iter()
                    .find_map(|format| {
                        NaiveDateTime::parse_from_str(raw_timestamp, format)
                            .ok()
                            .map(|ts| (*format, ts))
                    })
                    .ok_or_else(|| Error::Parse {
                        line: line_number,
                        message: format!(
                            "cannot parse timestamp '{raw_timestamp}'; expected \
                             'YYYY-MM-DD HH:MM' or ISO-8601"
                        ),
                    })?;
                timestamp_format = Some(format);
                parsed
            }
        };
        if timestamp.second() != 0 || timestamp.nanosecond() != 0 {
            return Err(Error::Parse {
                line: line_number,
                message: format!(
                    "timestamp '{raw_timestamp}' has sub-minute resolution; minute bars required"
                ),
            });
        }

        let price = |column: usize, name: &str| -> Result<f64> {
            let raw = parts[column];
            let value: f64 = raw.parse().map_err(|_| Error::Parse {
                line: line_number,
                message: format!("cannot parse {name} '{raw}' as a number"),
            })?;
            if !value.is_finite() || value <= 0.0 {
                return Err(Error::Parse {
                    line: line_number,
                    message: format!("{name} must be positive and finite, got {value}"),
                });
            }
            Ok(value)
        };
        let open = price(col_open, "open")?;
        let high = price(col_high, "high")?;
        let low = price(col_low, "low")?;
        let close = price(col_close, "close")?;
        if low > open.min(close) || high < open.max(close) {
            return Err(Error::Parse {
                line: line_number,
                message: format!(
                    "inconsistent bar: low {low} must not exceed open/close and high {high} \
                     must not fall below them"
                ),
            });
        }
        let raw_volume = parts[col_volume];
        let volume: u64 = raw_volume.parse().map_err(|_| Error::Parse {
            line: line_number,
            message: format!("cannot parse volume '{raw_volume}' as a non-negative integer"),
        })?;

        rows.push(TickRecord {
            timestamp,
            open,
            high,
            low,
            close,
            volume,
        });
    }

    if rows.is_empty() {
        return Err(Error::EmptyTicks);
    }

    // Sort by timestamp; the stable sort keeps file order inside runs of
    // equal timestamps so "keep the last occurrence" is well defined.
    rows.sort_by_key(|r| r.timestamp);
    let mut records: Vec<TickRecord> = Vec::with_capacity(rows.len());
    let mut duplicates_collapsed = 0;
    for row in rows {
        match records.last() {
            Some(last) if last.timestamp == row.timestamp => {
                duplicates_collapsed += 1;
                *records.last_mut().unwrap() = row;
            }
            _ => records.push(row),
        }
    }

    Ok(ParsedTicks {
        records,
        duplicates_collapsed,
    })
}

/// Serializes records in the normalized fixture form: canonical header,
/// `YYYY-MM-DD HH:MM` timestamps, shortest round-trip price formatting.
pub fn write_ticks_csv(records: &[TickRecord]) -> String {
    let mut out = String::from("timestamp,open,high,low,close,volume\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.timestamp.format("%Y-%m-%d %H:%M"),
            r.open,
            r.high,
            r.low,
            r.close,
            r.volume
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// Sessionization
// ---------------------------------------------------------------------------

/// Splits sorted records into sessions and extracts the chosen price
/// column.
///
/// Consecutive records whose timestamp gap is at most `max_gap_minutes`
/// share a session; larger gaps start a new one. Missing minutes inside
/// a session are filled with the previous value (the carry-forward
/// policy) and counted per session.
pub fn sessionize(
    records: &[TickRecord],
    max_gap_minutes: u32,
    column: PriceColumn,
) -> Result<SessionSeries> {
    if records.is_empty() {
        return Err(Error::EmptyTicks);
    }
    if max_gap_minutes < 1 {
        return Err(Error::Constraint(
            "max_gap_minutes must be at least 1".into(),
        ));
    }

    let mut sessions = Vec::new();
    let mut start = records[0].timestamp;
    let mut values = vec![column.pick(&records[0])];
    let mut fills = 0usize;

    let mut finish = |start: NaiveDateTime, values: &mut Vec<f64>, fills: usize| -> Result<()> {
        let date = start.date();
        if values.len() < 2 {
            return Err(Error::Session {
                session: date.to_string(),
                message: "only one sample; cannot form a series".into(),
            });
        }
        let label = format!("{date} {}", column.name());
        sessions.push(Session {
            date,
            series: TimeSeries::new(std::mem::take(values), 60.0, label)?,
            fills,
        });
        Ok(())
    };

    for pair in records.windows(2) {
        let gap = (pair[1].timestamp - pair[0].timestamp).num_minutes();
        debug_assert!(gap >= 1, "records must be strictly increasing");
        if gap as u64 <= max_gap_minutes as u64 {
            let previous = *values.last().unwrap();
            for _ in 1..gap {
                values.push(previous);
                fills += 1;
            }
            values.push(column.pick(&pair[1]));
        } else {
            finish(start, &mut values, fills)?;
            start = pair[1].timestamp;
            values = vec![column.pick(&pair[1])];
            fills = 0;
        }
    }
    finish(start, &mut values, fills)?;

    Ok(SessionSeries {
        sessions,
        gap_policy_applied: GapPolicy::CarryForward,
    })
}

// ---------------------------------------------------------------------------
// Transforms
// ---------------------------------------------------------------------------

/// Applies a detrending transform to every session.
pub fn transform(sessions: &SessionSeries, spec: TransformSpec) -> Result<SessionSeries> {
    if spec == TransformSpec::Raw {
        return Ok(sessions.clone());
    }
    let mut out = Vec::with_capacity(sessions.sessions.len());
    for session in &sessions.sessions {
        let values = session.series.values();
        let transformed: Vec<f64> = match spec {
            TransformSpec::Raw => unreachable!(),
            TransformSpec::Demean => {
                let mean = values.iter().sum::<f64>() / values.len() as f64;
                values.iter().map(|v| v - mean).collect()
            }
            TransformSpec::LogReturn => {
                for (index, &value) in values.iter().enumerate() {
                    if value <= 0.0 {
                        return Err(Error::Session {
                            session: session.date.to_string(),
                            message: format!(
                                "log_return requires positive values; found {value} at index {index}"
                            ),
                        });
                    }
                }
                values.windows(2).map(|w| (w[1] / w[0]).ln()).collect()
            }
            TransformSpec::FirstDifference => values.windows(2).map(|w| w[1] - w[0]).collect(),
        };
        if transformed.len() < 2 {
            return Err(Error::Session {
                session: session.date.to_string(),
                message: format!("session too short for {}", spec.name()),
            });
        }
        out.push(Session {
            date: session.date,
            series: TimeSeries::new(transformed, session.series.dt(), session.series.label())?,
            fills: session.fills,
        });
    }
    Ok(SessionSeries {
        sessions: out,
        gap_policy_applied: sessions.gap_policy_applied,
    })
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

/// Cuts fixed-length segments inside each session (never across session
/// boundaries), demeans each segment, applies the window, and reports
/// how many trailing samples no segment covered.
pub fn segment(
    sessions: &SessionSeries,
    segment_length: usize,
    overlap_fraction: f64,
    window: Window,
) -> Result<Segmented> {
    if !segment_length.is_power_of_two() || segment_length < 2 {
        return Err(Error::Constraint(format!(
            "segment_length must be a power of two >= 2, got {segment_length}"
        )));
    }
    if !(0.0..=0.5).contains(&overlap_fraction) {
        return Err(Error::Constraint(format!(
            "overlap_fraction must lie in [0, 0.5], got {overlap_fraction}"
        )));
    }
    let longest = sessions.longest();
    if segment_length > longest {
        return Err(Error::Constraint(format!(
            "segment_length {segment_length} exceeds every session (longest is {longest})"
        )));
    }

    let step = segment_length - (overlap_fraction * segment_length as f64).floor() as usize;
    let weights: Vec<f64> = match window {
        Window::Rectangular => vec![1.0; segment_length],
        Window::Hann => (0..segment_length)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / segment_length as f64).cos()))
            .collect(),
    };

    let mut segments = Vec::new();
    let mut dropped_samples = 0usize;
    for session in &sessions.sessions {
        let values = session.series.values();
        let mut start = 0usize;
        let mut covered_end = 0usize;
        while start + segment_length <= values.len() {
            let slice = &values[start..start + segment_length];
            let mean = slice.iter().sum::<f64>() / segment_length as f64;
            let windowed: Vec<f64> = slice
                .iter()
                .zip(&weights)
                .map(|(v, w)| (v - mean) * w)
                .collect();
            let label = format!(
                "{} [{}..{})",
                session.series.label(),
                start,
                start + segment_length
            );
            segments.push(TimeSeries::new(windowed, session.series.dt(), label)?);
            covered_end = start + segment_length;
            start += step;
        }
        dropped_samples += values.len() - covered_end;
    }

    Ok(Segmented {
        segments,
        dropped_samples,
    })
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "timestamp,open,high,low,close,volume\n";

    fn minute(day: u32, hour: u32, minute: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2015, 1, day)
            .unwrap()
            .and_hms_opt(hour, minute, 0)
            .unwrap()
    }

    fn flat_records(day: u32, minutes: usize, price: f64) -> Vec<TickRecord> {
        (0..minutes)
            .map(|i| TickRecord {
                timestamp: minute(day, 9, 15) + chrono::Duration::minutes(i as i64),
                open: price,
                high: price,
                low: price,
                close: price,
                volume: 100,
            })
            .collect()
    }

    // -- parsing ---------------------------------------------------------------

    #[test]
    fn parses_a_single_row() {
        let csv = format!("{HEADER}2015-01-01 09:15,100,101,99,100.5,1200\n");
        let parsed = parse_ticks(csv.as_bytes()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].close, 100.5);
        assert_eq!(parsed.records[0].volume, 1200);
        assert_eq!(parsed.duplicates_collapsed, 0);
    }

    #[test]
    fn parses_iso_8601_timestamps() {
        let csv = format!("{HEADER}2015-01-01T09:15,100,101,99,100.5,1200\n");
        let parsed = parse_ticks(csv.as_bytes()).unwrap();
        assert_eq!(parsed.records[0].timestamp, minute(1, 9, 15));
    }

    #[test]
    fn collapses_duplicate_timestamps_to_the_last() {
        let csv = format!(
            "{HEADER}2015-01-01 09:15,100,101,99,100.5,1200\n2015-01-01 09:15,100,102,99,101.5,900\n"
        );
        let parsed = parse_ticks(csv.as_bytes()).unwrap();
        assert_eq!(parsed.records.len(), 1);
        assert_eq!(parsed.records[0].close, 101.5);
        assert_eq!(parsed.duplicates_collapsed, 1);
    }

    #[test]
    fn malformed_close_names_the_line() {
        let csv = format!(
            "{HEADER}2015-01-01 09:15,100,101,99,100.5,1200\n2015-01-01 09:16,100,101,99,abc,1200\n"
        );
        match parse_ticks(csv.as_bytes()).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("close"), "{message}");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn rejects_empty_and_header_only_files() {
        assert!(matches!(parse_ticks("".as_bytes()), Err(Error::EmptyTicks)));
        assert!(matches!(
            parse_ticks(HEADER.as_bytes()),
            Err(Error::EmptyTicks)
        ));
    }

    #[test]
    fn rejects_non_positive_prices() {
        let csv = format!("{HEADER}2015-01-01 09:15,100,101,-1,100.5,1200\n");
        let message = parse_ticks(csv.as_bytes()).unwrap_err().to_string();
        assert!(message.contains("positive"), "{message}");
    }

    #[test]
    fn rejects_inconsistent_bars() {
        // low above close
        let csv = format!("{HEADER}2015-01-01 09:15,100,101,100.2,100.1,1200\n");
        assert!(parse_ticks(csv.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("inconsistent bar"));
    }

    #[test]
    fn rejects_sub_minute_timestamps() {
        let csv = format!("{HEADER}2015-01-01 09:15:30,100,101,99,100.5,1200\n");
        assert!(parse_ticks(csv.as_bytes())
            .unwrap_err()
            .to_string()
            .contains("sub-minute"));
    }

    #[test]
    fn rejects_missing_columns() {
        let csv = "timestamp,open,high,low,close\n2015-01-01 09:15,100,101,99,100.5\n";
        match parse_ticks(csv.as_bytes()).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("volume"));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn sorts_out_of_order_rows() {
        let csv = format!(
            "{HEADER}2015-01-01 09:16,100,101,99,100.6,1\n2015-01-01 09:15,100,101,99,100.5,1\n"
        );
        let parsed = parse_ticks(csv.as_bytes()).unwrap();
        assert!(parsed.records[0].timestamp < parsed.records[1].timestamp);
    }

    #[test]
    fn custom_column_names_resolve() {
        let csv = "time,o,h,l,c,vol\n2015-01-01 09:15,100,101,99,100.5,1200\n";
        let columns = CsvColumns {
            timestamp: "time".into(),
            open: "o".into(),
            high: "h".into(),
            low: "l".into(),
            close: "c".into(),
            volume: "vol".into(),
        };
        let parsed = parse_ticks_with_columns(csv.as_bytes(), &columns).unwrap();
        assert_eq!(parsed.records[0].close, 100.5);
    }

    #[test]
    fn serialize_parse_round_trip_is_idempotent() {
        let csv = format!(
            "{HEADER}2015-01-01 09:15,100,101.25,99.5,100.5,1200\n2015-01-01 09:16,100.5,101,99.75,100,900\n"
        );
        let first = write_ticks_csv(&parse_ticks(csv.as_bytes()).unwrap().records);
        let second = write_ticks_csv(&parse_ticks(first.as_bytes()).unwrap().records);
        assert_eq!(first, second);
    }

    // -- sessionize --------------------------------------------------------------

    #[test]
    fn one_trading_day_is_one_session() {
        let records = flat_records(1, 375, 100.0);
        let sessions = sessionize(&records, 60, PriceColumn::Close).unwrap();
        assert_eq!(sessions.sessions.len(), 1);
        assert_eq!(sessions.sessions[0].series.len(), 375);
        assert_eq!(sessions.total_fills(), 0);
        assert_eq!(sessions.gap_policy_applied, GapPolicy::CarryForward);
    }

    #[test]
    fn overnight_gap_starts_a_new_session() {
        let mut records = flat_records(1, 375, 100.0);
        records.extend(flat_records(2, 375, 101.0));
        let sessions = sessionize(&records, 60, PriceColumn::Close).unwrap();
        assert_eq!(sessions.sessions.len(), 2);
        assert_eq!(
            sessions.sessions[0].date,
            NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()
        );
        assert_eq!(
            sessions.sessions[1].date,
            NaiveDate::from_ymd_opt(2015, 1, 2).unwrap()
        );
    }

    #[test]
    fn missing_minute_is_carried_forward() {
        let mut records = flat_records(1, 375, 100.0);
        records.remove(100);
        let sessions = sessionize(&records, 60, PriceColumn::Close).unwrap();
        assert_eq!(sessions.sessions.len(), 1);
        assert_eq!(sessions.sessions[0].series.len(), 375);
        assert_eq!(sessions.sessions[0].fills, 1);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            sessionize(&[], 60, PriceColumn::Close),
            Err(Error::EmptyTicks)
        ));
    }

    #[test]
    fn single_sample_session_rejected() {
        let mut records = flat_records(1, 1, 100.0);
        records.extend(flat_records(2, 375, 100.0));
        let err = sessionize(&records, 60, PriceColumn::Close).unwrap_err();
        assert!(err.to_string().contains("only one sample"));
    }

    // -- transform -----------------------------------------------------------------

    fn toy_sessions(values: &[f64]) -> SessionSeries {
        SessionSeries {
            sessions: vec![Session {
                date: NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(),
                series: TimeSeries::new(values.to_vec(), 60.0, "toy").unwrap(),
                fills: 0,
            }],
            gap_policy_applied: GapPolicy::CarryForward,
        }
    }

    #[test]
    fn raw_is_identity() {
        let sessions = toy_sessions(&[100.0, 101.0, 99.0]);
        let out = transform(&sessions, TransformSpec::Raw).unwrap();
        assert_eq!(
            out.sessions[0].series.values(),
            sessions.sessions[0].series.values()
        );
    }

    #[test]
    fn log_return_matches_analytic_value() {
        let out = transform(
            &toy_sessions(&[100.0, 101.0, 102.0]),
            TransformSpec::LogReturn,
        )
        .unwrap();
        let values = out.sessions[0].series.values();
        assert_eq!(values.len(), 2);
        assert!((values[0] - (1.01_f64).ln()).abs() < 1e-12);
        assert!((values[0] - 0.00995033).abs() < 1e-7);
    }

    #[test]
    fn demean_centers_the_session() {
        let out = transform(&toy_sessions(&[1.0, 2.0, 3.0]), TransformSpec::Demean).unwrap();
        assert_eq!(out.sessions[0].series.values(), &[-1.0, 0.0, 1.0]);
        let sum: f64 = out.sessions[0].series.values().iter().sum();
        assert!(sum.abs() <= 1e-9 * 3.0);
    }

    #[test]
    fn first_difference_shortens_by_one() {
        let out = transform(
            &toy_sessions(&[1.0, 4.0, 9.0]),
            TransformSpec::FirstDifference,
        )
        .unwrap();
        assert_eq!(out.sessions[0].series.values(), &[3.0, 5.0]);
    }

    #[test]
    fn log_return_rejects_non_positive_values() {
        // Demeaned data contains non-positive values by construction.
        let demeaned = transform(&toy_sessions(&[1.0, 2.0, 3.0]), TransformSpec::Demean).unwrap();
        let err = transform(&demeaned, TransformSpec::LogReturn).unwrap_err();
        let message = err.to_string();
        assert!(message.contains("2015-01-01"), "{message}");
        assert!(message.contains("index 0"), "{message}");
    }

    // -- segmentation ---------------------------------------------------------------

    fn long_session(len: usize) -> SessionSeries {
        let values: Vec<f64> = (0..len).map(|i| (i as f64 * 0.1).sin() + 100.0).collect();
        toy_sessions(&values)
    }

    #[test]
    fn no_overlap_segmentation_counts_the_remainder() {
        let out = segment(&long_session(1000), 256, 0.0, Window::Rectangular).unwrap();
        assert_eq!(out.segments.len(), 3);
        assert_eq!(out.dropped_samples, 232);
    }

    #[test]
    fn half_overlap_doubles_the_segment_count() {
        let out = segment(&long_session(1000), 256, 0.5, Window::Rectangular).unwrap();
        assert_eq!(out.segments.len(), 6);
        // starts at 0, 128, ..., 640
        assert!(out.segments[1].label().contains("[128..384)"));
        assert!(out.segments[5].label().contains("[640..896)"));
    }

    #[test]
    fn rectangular_window_preserves_demeaned_samples() {
        let sessions = long_session(300);
        let out = segment(&sessions, 256, 0.0, Window::Rectangular).unwrap();
        let source = &sessions.sessions[0].series.values()[..256];
        let mean = source.iter().sum::<f64>() / 256.0;
        for (a, b) in out.segments[0].values().iter().zip(source) {
            assert_eq!(*a, b - mean);
        }
    }

    #[test]
    fn hann_window_scales_the_samples() {
        let out = segment(&long_session(300), 256, 0.0, Window::Hann).unwrap();
        // Periodic Hann starts at exactly zero.
        assert_eq!(out.segments[0].values()[0], 0.0);
    }

    #[test]
    fn segments_never_cross_sessions() {
        let mut records = flat_records(1, 375, 100.0);
        records.extend(flat_records(2, 375, 200.0));
        let sessions = sessionize(&records, 60, PriceColumn::Close).unwrap();
        let out = segment(&sessions, 256, 0.0, Window::Rectangular).unwrap();
        assert_eq!(out.segments.len(), 2);
        assert!(out.segments[0].label().starts_with("2015-01-01"));
        assert!(out.segments[1].label().starts_with("2015-01-02"));
        assert_eq!(out.dropped_samples, 2 * (375 - 256));
    }

    #[test]
    fn segment_length_must_fit_some_session() {
        let err = segment(&long_session(100), 256, 0.0, Window::Rectangular).unwrap_err();
        assert!(err.to_string().contains("exceeds every session"));
    }

    #[test]
    fn segment_rejects_bad_parameters() {
        assert!(segment(&long_session(1000), 100, 0.0, Window::Rectangular).is_err());
        assert!(segment(&long_session(1000), 256, 0.6, Window::Rectangular).is_err());
        assert!(segment(&long_session(1000), 256, -0.1, Window::Rectangular).is_err());
    }
}
