//! Event ingestion.
//!
//! The on-disk format is the RPG `events.txt` layout: one event per line,
//! `t x y p`, with `t` in decimal seconds and `p` as `0`/`1`. Timestamps are
//! converted to integer microseconds, rounding half up.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

/// Sign of the brightness change. `0` in the text format maps to `Off`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Off => -1,
            Polarity::On => 1,
        }
    }

    fn bit(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    /// Microseconds.
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Self { t, x, y, polarity }
    }

    /// Renders the event as one line of the text format (no newline).
    pub fn to_line(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{:06} {} {} {}",
            self.t / 1_000_000,
            self.t % 1_000_000,
            self.x,
            self.y,
            self.polarity.bit()
        )
    }
}

/// Pixel counts along each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct SensorGeometry {
    pub nx: u16,
    pub ny: u16,
}

impl Default for SensorGeometry {
    /// DAVIS240C.
    fn default() -> Self {
        Self { nx: 240, ny: 180 }
    }
}

impl SensorGeometry {
    pub fn new(nx: u16, ny: u16) -> Result<Self, EventError> {
        let g = Self { nx, ny };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), EventError> {
        if self.nx == 0 || self.ny == 0 {
            return Err(EventError::Geometry { nx: self.nx, ny: self.ny });
        }
        Ok(())
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.nx && y < self.ny
    }
}

/// Why a single line failed to parse.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LineError {
    #[error("expected 4 fields (t x y p), found {0}")]
    FieldCount(usize),
    #[error("field `{field}` is not a valid number: {value:?}")]
    NonNumeric { field: &'static str, value: String },
    #[error("{axis} = {value} is outside [0, {limit})")]
    OutOfBounds {
        axis: &'static str,
        value: i64,
        limit: u16,
    },
    #[error("negative timestamp {0:?}")]
    NegativeTimestamp(String),
    #[error("polarity must be 0 or 1, found {0:?}")]
    Polarity(String),
}

#[derive(Debug, Error)]
pub enum EventError {
    #[error("line {line}: {kind}")]
    Parse { line: usize, kind: LineError },
    #[error("line {line}: timestamp regression ({t} us after {prev} us)")]
    Regression { line: usize, t: u64, prev: u64 },
    #[error("invalid sensor geometry {nx}x{ny}")]
    Geometry { nx: u16, ny: u16 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses one `t x y p` line.
pub fn parse_event_line(line: &str, geometry: SensorGeometry) -> Result<Event, LineError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(LineError::FieldCount(fields.len()));
    }
    let t = seconds_to_micros(fields[0])?;
    let x = parse_coord(fields[1], "x", geometry.nx)?;
    let y = parse_coord(fields[2], "y", geometry.ny)?;
    let polarity = match fields[3] {
        "0" => Polarity::Off,
        "1" => Polarity::On,
        other => return Err(LineError::Polarity(other.to_string())),
    };
    Ok(Event { t, x, y, polarity })
}

fn parse_coord(s: &str, axis: &'static str, limit: u16) -> Result<u16, LineError> {
    let value: i64 = s.parse().map_err(|_| LineError::NonNumeric {
        field: axis,
        value: s.to_string(),
    })?;
    if value < 0 || value >= i64::from(limit) {
        return Err(LineError::OutOfBounds { axis, value, limit });
    }
    Ok(value as u16)
}

/// Decimal seconds to integer microseconds, rounding half up.
///
/// Plain decimals are converted digit-by-digit so there is no binary
/// floating-point error; exponent notation falls back to `f64`.
fn seconds_to_micros(s: &str) -> Result<u64, LineError> {
    let non_numeric = || LineError::NonNumeric {
        field: "t",
        value: s.to_string(),
    };
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };

    let micros = if body.contains(['e', 'E']) {
        let v: f64 = body.parse().map_err(|_| non_numeric())?;
        if !v.is_finite() || v * 1e6 > u64::MAX as f64 {
            return Err(non_numeric());
        }
        (v * 1e6).round() as u64
    } else {
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(non_numeric());
        }
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if !all_digits(int_part) || !all_digits(frac_part) {
            return Err(non_numeric());
        }
        let whole: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| non_numeric())?
        };
        let digits = frac_part.as_bytes();
        let mut frac: u64 = 0;
        for i in 0..6 {
            frac = frac * 10 + digits.get(i).map_or(0, |d| u64::from(d - b'0'));
        }
        if digits.get(6).is_some_and(|d| *d >= b'5') {
            frac += 1;
        }
        whole
            .checked_mul(1_000_000)
            .and_then(|w| w.checked_add(frac))
            .ok_or_else(non_numeric)?
    };

    if negative && micros > 0 {
        return Err(LineError::NegativeTimestamp(s.to_string()));
    }
    Ok(micros)
}

/// Streams events from a text source, enforcing non-decreasing timestamps.
///
/// Blank lines and `#` comment lines are skipped. Iteration stops after the
/// first error.
pub struct EventReader<R> {
    lines: io::Lines<R>,
    geometry: SensorGeometry,
    line_no: usize,
    last_t: Option<u64>,
    done: bool,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(reader: R, geometry: SensorGeometry) -> Self {
        Self {
            lines: reader.lines(),
            geometry,
            line_no: 0,
            last_t: None,
            done: false,
        }
    }
}

impl EventReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>, geometry: SensorGeometry) -> Result<Self, EventError> {
        let file = File::open(path)?;
        Ok(Self::new(BufReader::new(file), geometry))
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<Event, EventError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let result = parse_event_line(trimmed, self.geometry)
                .map_err(|kind| EventError::Parse {
                    line: self.line_no,
                    kind,
                })
                .and_then(|ev| check_order(&mut self.last_t, ev, self.line_no));
            if result.is_err() {
                self.done = true;
            }
            return Some(result);
        }
    }
}

fn check_order(last_t: &mut Option<u64>, ev: Event, line: usize) -> Result<Event, EventError> {
    if let Some(prev) = *last_t {
        if ev.t < prev {
            return Err(EventError::Regression { line, t: ev.t, prev });
        }
    }
    *last_t = Some(ev.t);
    Ok(ev)
}

/// Wraps an in-memory event sequence with the same ordering check as
/// [`EventReader`]. Positions are reported 1-based.
pub fn stream_events<I>(events: I) -> impl Iterator<Item = Result<Event, EventError>>
where
    I: IntoIterator<Item = Event>,
{
    let mut last_t = None;
    let mut failed = false;
    events
        .into_iter()
        .enumerate()
        .map_while(move |(i, ev)| {
            if failed {
                return None;
            }
            let r = check_order(&mut last_t, ev, i + 1);
            failed = r.is_err();
            Some(r)
        })
}

/// Reads a whole events file into memory.
pub fn read_events(path: impl AsRef<Path>, geometry: SensorGeometry) -> Result<Vec<Event>, EventError> {
    EventReader::open(path, geometry)?.collect()
}

/// Writes events in the text format, one per line.
pub fn write_events<W: io::Write>(mut out: W, events: &[Event]) -> io::Result<()> {
    for ev in events {
        writeln!(out, "{ev}")?;
    }
    Ok(())
}
