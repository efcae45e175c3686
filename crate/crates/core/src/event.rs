//! Asynchronous events and the plain-text event file format.
//!
//! One event per line, `t x y p`, with `t` in seconds. Polarity is accepted as
//! `1`/`0` (dataset convention) or `+1`/`-1`. Blank lines and lines starting
//! with `#` are skipped.

use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Sign of the brightness change that triggered an event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    On,
    Off,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::On => 1,
            Polarity::Off => -1,
        }
    }
}

/// Sensor geometry in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SensorSize {
    pub width: u32,
    pub height: u32,
}

impl SensorSize {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn area(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64
    }

    pub fn check(&self, x: i64, y: i64) -> Result<()> {
        if self.contains(x, y) {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                x,
                y,
                width: self.width,
                height: self.height,
            })
        }
    }
}

/// DAVIS-240C resolution.
impl Default for SensorSize {
    fn default() -> Self {
        Self::new(240, 180)
    }
}

/// One camera event.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    /// Timestamp in seconds.
    pub t: f64,
    /// Pixel column.
    pub x: u32,
    /// Pixel row.
    pub y: u32,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: f64, x: u32, y: u32, p: Polarity) -> Self {
        Self { t, x, y, p }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.p {
            Polarity::On => 1,
            Polarity::Off => 0,
        };
        write!(f, "{} {} {} {}", self.t, self.x, self.y, p)
    }
}

/// Parses one `t x y p` line. `line_no` is only used for error messages.
pub fn parse_event_line(line: &str, line_no: usize, sensor: SensorSize) -> Result<Event> {
    let mut fields = line.split_whitespace();
    let mut next = |name: &str| {
        fields
            .next()
            .ok_or_else(|| Error::parse(line_no, format!("missing field `{name}`")))
    };
    let t_s = next("t")?;
    let x_s = next("x")?;
    let y_s = next("y")?;
    let p_s = next("p")?;
    if fields.next().is_some() {
        return Err(Error::parse(line_no, "expected 4 fields"));
    }

    let t: f64 = t_s
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad timestamp `{t_s}`")))?;
    if !t.is_finite() || t < 0.0 {
        return Err(Error::parse(line_no, format!("bad timestamp `{t_s}`")));
    }
    let x: i64 = x_s
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad x `{x_s}`")))?;
    let y: i64 = y_s
        .parse()
        .map_err(|_| Error::parse(line_no, format!("bad y `{y_s}`")))?;
    let p = match p_s {
        "1" | "+1" => Polarity::On,
        "0" | "-1" => Polarity::Off,
        _ => return Err(Error::parse(line_no, format!("bad polarity `{p_s}`"))),
    };
    sensor.check(x, y)?;
    Ok(Event::new(t, x as u32, y as u32, p))
}

/// Streaming reader over an event file. Enforces non-decreasing timestamps.
pub struct EventReader<R> {
    inner: R,
    sensor: SensorSize,
    line_no: usize,
    last_t: f64,
    buf: String,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(inner: R, sensor: SensorSize) -> Self {
        Self {
            inner,
            sensor,
            line_no: 0,
            last_t: f64::NEG_INFINITY,
            buf: String::new(),
        }
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<Event>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => return Some(Err(e.into())),
            }
            self.line_no += 1;
            let line = self.buf.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let ev = match parse_event_line(line, self.line_no, self.sensor) {
                Ok(ev) => ev,
                Err(e) => return Some(Err(e)),
            };
            if ev.t < self.last_t {
                return Some(Err(Error::parse(
                    self.line_no,
                    format!("timestamp {} decreases (previous {})", ev.t, self.last_t),
                )));
            }
            self.last_t = ev.t;
            return Some(Ok(ev));
        }
    }
}

pub fn read_events(reader: impl BufRead, sensor: SensorSize) -> Result<Vec<Event>> {
    EventReader::new(reader, sensor).collect()
}

/// Writes events in the text format. Timestamps use the shortest
/// representation that round-trips.
pub fn write_events<'a>(
    mut w: impl Write,
    events: impl IntoIterator<Item = &'a Event>,
) -> std::io::Result<()> {
    for ev in events {
        writeln!(w, "{ev}")?;
    }
    Ok(())
}
