//! Reading traces as CSV.
//!
//! ```text
//! timestamp_s,distance_m,azimuth_deg,elevation_deg
//! # gesture g1 start
//! 0.01818,5.002,0.3,-1.2
//! # gesture g1 end
//! ```
//!
//! Values are kept exactly as parsed (degrees), so read/write is lossless;
//! conversion to radians happens in [`Trace::readings`].

use std::fmt::Write as _;
use std::path::Path;

use pointsel_core::UwbReading;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const TRACE_HEADER: &str = "timestamp_s,distance_m,azimuth_deg,elevation_deg";

const FIELDS: [&str; 4] = ["timestamp_s", "distance_m", "azimuth_deg", "elevation_deg"];

/// One reading in file units (degrees).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRow {
    pub timestamp_s: f64,
    pub distance_m: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

impl TraceRow {
    pub fn from_reading(r: &UwbReading<f64>) -> Self {
        TraceRow {
            timestamp_s: r.timestamp,
            distance_m: r.distance,
            azimuth_deg: r.azimuth.to_degrees(),
            elevation_deg: r.elevation.to_degrees(),
        }
    }

    pub fn to_reading(&self) -> pointsel_core::Result<UwbReading<f64>> {
        UwbReading::new(
            self.distance_m,
            self.azimuth_deg.to_radians(),
            // Clamp the degree-to-radian rounding at the poles.
            self.elevation_deg
                .to_radians()
                .clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
            self.timestamp_s,
        )
    }
}

/// Half-open row range `[start, end)` labelled by gesture markers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GestureSpan {
    pub id: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
    pub gestures: Vec<GestureSpan>,
}

fn parse_number(line: usize, field: &str, raw: &str) -> Result<f64> {
    // Accept the typographic minus some spreadsheet exports emit.
    let cleaned = raw.trim().replace('\u{2212}', "-");
    let v: f64 = cleaned
        .parse()
        .map_err(|_| HarnessError::parse(line, field, format!("not a number: {:?}", raw.trim())))?;
    if !v.is_finite() {
        return Err(HarnessError::parse(line, field, "must be finite"));
    }
    Ok(v)
}

impl Trace {
    /// A single-gesture trace.
    pub fn from_readings(id: &str, readings: &[UwbReading<f64>]) -> Self {
        let rows: Vec<TraceRow> = readings.iter().map(TraceRow::from_reading).collect();
        let gestures = vec![GestureSpan {
            id: id.to_string(),
            start: 0,
            end: rows.len(),
        }];
        Trace { rows, gestures }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        match lines.next() {
            Some((_, h)) if h.trim_start_matches('\u{feff}').trim_end() == TRACE_HEADER => {}
            Some((n, h)) => {
                return Err(HarnessError::parse(
                    n,
                    "header",
                    format!("expected {TRACE_HEADER:?}, found {h:?}"),
                ))
            }
            None => return Err(HarnessError::parse(1, "header", "empty trace")),
        }

        let mut trace = Trace::default();
        let mut open: Option<(String, usize, usize)> = None;
        for (n, raw) in lines {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let words: Vec<&str> = comment.split_whitespace().collect();
                match words.as_slice() {
                    ["gesture", id, "start"] => {
                        if let Some((prev, _, _)) = &open {
                            return Err(HarnessError::parse(
                                n,
                                "gesture",
                                format!("gesture {prev:?} still open"),
                            ));
                        }
                        if trace.gestures.iter().any(|g| g.id == *id) {
                            return Err(HarnessError::parse(
                                n,
                                "gesture",
                                format!("duplicate gesture id {id:?}"),
                            ));
                        }
                        open = Some((id.to_string(), trace.rows.len(), n));
                    }
                    ["gesture", id, "end"] => match open.take() {
                        Some((open_id, start, _)) if open_id == *id => {
                            if start == trace.rows.len() {
                                return Err(HarnessError::parse(
                                    n,
                                    "gesture",
                                    format!("gesture {id:?} has no rows"),
                                ));
                            }
                            trace.gestures.push(GestureSpan {
                                id: open_id,
                                start,
                                end: trace.rows.len(),
                            });
                        }
                        Some((open_id, _, _)) => {
                            return Err(HarnessError::parse(
                                n,
                                "gesture",
                                format!("end of {id:?} while {open_id:?} is open"),
                            ))
                        }
                        None => {
                            return Err(HarnessError::parse(
                                n,
                                "gesture",
                                format!("end of {id:?} without start"),
                            ))
                        }
                    },
                    ["gesture", ..] => {
                        return Err(HarnessError::parse(
                            n,
                            "gesture",
                            "expected `# gesture <id> start|end`",
                        ))
                    }
                    // Free-form comments are not preserved.
                    _ => {}
                }
                continue;
            }

            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != FIELDS.len() {
                return Err(HarnessError::parse(
                    n,
                    "row",
                    format!("expected 4 fields, found {}", parts.len()),
                ));
            }
            let mut v = [0.0; 4];
            for (k, (raw, field)) in parts.iter().zip(FIELDS).enumerate() {
                v[k] = parse_number(n, field, raw)?;
            }
            let row = TraceRow {
                timestamp_s: v[0],
                distance_m: v[1],
                azimuth_deg: v[2],
                elevation_deg: v[3],
            };
            let index = trace.rows.len();
            if let Some(prev) = trace.rows.last() {
                if !(row.timestamp_s > prev.timestamp_s) {
                    return Err(HarnessError::parse(
                        n,
                        "timestamp_s",
                        format!(
                            "row {index}: timestamp {} not after {}",
                            row.timestamp_s, prev.timestamp_s
                        ),
                    ));
                }
            }
            if !(row.distance_m > 0.0) {
                return Err(HarnessError::parse(n, "distance_m", "must be > 0"));
            }
            if !(row.azimuth_deg > -180.0 && row.azimuth_deg <= 180.0) {
                return Err(HarnessError::parse(
                    n,
                    "azimuth_deg",
                    "must lie in (-180, 180]",
                ));
            }
            if !(row.elevation_deg.abs() <= 90.0) {
                return Err(HarnessError::parse(
                    n,
                    "elevation_deg",
                    "must lie in [-90, 90]",
                ));
            }
            trace.rows.push(row);
        }
        if let Some((id, _, line)) = open {
            return Err(HarnessError::parse(
                line,
                "gesture",
                format!("gesture {id:?} never ends"),
            ));
        }
        Ok(trace)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.rows.len() + 1));
        out.push_str(TRACE_HEADER);
        out.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            for g in self.gestures.iter().filter(|g| g.start == i) {
                let _ = writeln!(out, "# gesture {} start", g.id);
            }
            let _ = writeln!(
                out,
                "{},{},{},{}",
                r.timestamp_s, r.distance_m, r.azimuth_deg, r.elevation_deg
            );
            for g in self.gestures.iter().filter(|g| g.end == i + 1) {
                let _ = writeln!(out, "# gesture {} end", g.id);
            }
        }
        out
    }

    pub fn read(path: &Path) -> Result<Self> {
        Trace::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// All rows as readings, radians.
    pub fn readings(&self) -> Result<Vec<UwbReading<f64>>> {
        self.readings_in(0..self.rows.len())
    }

    /// Rows of gesture `id`.
    pub fn gesture_readings(&self, id: &str) -> Result<Vec<UwbReading<f64>>> {
        let g = self
            .gestures
            .iter()
            .find(|g| g.id == id)
            .ok_or_else(|| HarnessError::Experiment(format!("no gesture {id:?} in trace")))?;
        self.readings_in(g.start..g.end)
    }

    /// Rows of the first marked gesture, or every row when there are no markers.
    pub fn primary_readings(&self) -> Result<Vec<UwbReading<f64>>> {
        match self.gestures.first() {
            Some(g) => self.readings_in(g.start..g.end),
            None => self.readings(),
        }
    }

    fn readings_in(&self, range: std::ops::Range<usize>) -> Result<Vec<UwbReading<f64>>> {
        self.rows[range]
            .iter()
            .map(|r| r.to_reading().map_err(HarnessError::from))
            .collect()
    }
}
