//! Minute-of-day arithmetic and the departure schedule.

use std::fmt;

use crate::error::{Error, Result};

/// Minutes in a day; the entry-time domain is `[0, MINUTES_PER_DAY)`.
pub const MINUTES_PER_DAY: f64 = 1440.0;

/// Minute of day, fractional.
pub type Minute = f64;

/// Formats a minute-of-day as `HH:MM` (truncating seconds).
pub fn format_hhmm(minute: Minute) -> String {
    let m = minute.floor() as i64;
    format!("{:02}:{:02}", m / 60, m % 60)
}

/// Compact `HHMM` form used in CSV column headers (`t0815`, `p0430`).
pub fn format_compact(minute: Minute) -> String {
    let m = minute.floor() as i64;
    format!("{:02}{:02}", m / 60, m % 60)
}

pub fn parse_hhmm(s: &str) -> Result<Minute> {
    let s = s.trim();
    let (h, m) = s
        .split_once(':')
        .ok_or_else(|| Error::invalid("time", format!("expected HH:MM, got {s:?}")))?;
    let h: u32 = h
        .parse()
        .map_err(|_| Error::invalid("time", format!("bad hour in {s:?}")))?;
    let m: u32 = m
        .parse()
        .map_err(|_| Error::invalid("time", format!("bad minute in {s:?}")))?;
    if h > 24 || m > 59 || (h == 24 && m > 0) {
        return Err(Error::invalid("time", format!("{s:?} out of range")));
    }
    Ok(f64::from(h * 60 + m))
}

/// Half-open minute window `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeWindow {
    pub start: Minute,
    pub end: Minute,
}

impl TimeWindow {
    pub fn new(start: Minute, end: Minute) -> Result<Self> {
        if !(start < end) {
            return Err(Error::invalid(
                "time window",
                format!("start {start} must precede end {end}"),
            ));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, t: Minute) -> bool {
        t >= self.start && t < self.end
    }

    /// Parses `HH:MM-HH:MM`.
    pub fn parse(s: &str) -> Result<Self> {
        let (a, b) = s.split_once('-').ok_or_else(|| {
            Error::invalid("time window", format!("expected HH:MM-HH:MM, got {s:?}"))
        })?;
        Self::new(parse_hhmm(a)?, parse_hhmm(b)?)
    }

    pub fn morning() -> Self {
        Self {
            start: 300.0,
            end: 720.0,
        }
    }

    pub fn afternoon() -> Self {
        Self {
            start: 720.0,
            end: 1320.0,
        }
    }
}

impl fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", format_hhmm(self.start), format_hhmm(self.end))
    }
}

/// Strictly increasing list of departure instants.
#[derive(Debug, Clone, PartialEq)]
pub struct DepartureSchedule {
    instants: Vec<Minute>,
}

impl DepartureSchedule {
    pub fn new(instants: Vec<Minute>) -> Result<Self> {
        if instants.is_empty() {
            return Err(Error::invalid("departure schedule", "empty"));
        }
        if instants.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid(
                "departure schedule",
                "not strictly increasing",
            ));
        }
        if instants
            .iter()
            .any(|&t| !(0.0..MINUTES_PER_DAY).contains(&t))
        {
            return Err(Error::invalid(
                "departure schedule",
                "instant outside [00:00, 24:00)",
            ));
        }
        Ok(Self { instants })
    }

    pub fn regular(start: Minute, step: Minute, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::invalid("departure schedule", "count must be >= 1"));
        }
        if !(step > 0.0) {
            return Err(Error::invalid("departure schedule", "step must be > 0"));
        }
        Self::new((0..count).map(|k| start + step * k as f64).collect())
    }

    pub fn instants(&self) -> &[Minute] {
        &self.instants
    }

    pub fn len(&self) -> usize {
        self.instants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instants.is_empty()
    }
}

impl Default for DepartureSchedule {
    /// 96 departures, one every 15 minutes from midnight.
    fn default() -> Self {
        Self::regular(0.0, 15.0, 96).expect("default schedule is valid")
    }
}
