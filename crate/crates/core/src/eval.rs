//! Ground-truth matching and detection metrics.
//!
//! A detection is labelled by its distance to the nearest trajectory at the
//! detection time: inside 3.5 px it is a true positive, between 3.5 and 5 px
//! a false positive, beyond that it is ignored. Events that were not emitted
//! as junctions are labelled the same way as false or true negatives.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::event::Event;
use crate::output::JunctionRecord;
use crate::synth::GroundTruthRecord;

pub const TRUE_RADIUS: f64 = 3.5;
pub const FALSE_RADIUS: f64 = 5.0;

pub const CAVEAT: &str = "labels come from trajectory proximity only; corners are not necessarily junctions";

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: u64,
    /// `(t, x, y)`, time-sorted.
    pub samples: Vec<(f64, f64, f64)>,
}

impl Track {
    /// Linearly interpolated position, `None` outside the sampled span.
    pub fn position_at(&self, t: f64) -> Option<(f64, f64)> {
        let first = self.samples.first()?;
        let last = self.samples.last()?;
        if t < first.0 || t > last.0 {
            return None;
        }
        let i = self.samples.partition_point(|s| s.0 <= t);
        let a = self.samples[i - 1];
        if a.0 == t || i == self.samples.len() {
            return Some((a.1, a.2));
        }
        let b = self.samples[i];
        let w = (t - a.0) / (b.0 - a.0);
        Some((a.1 + w * (b.1 - a.1), a.2 + w * (b.2 - a.2)))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrackFile {
    pub tracks: Vec<Track>,
}

impl TrackFile {
    /// Parses `track_id t x y` lines. Samples of one track need not be
    /// contiguous in the file but must be time-sorted.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tracks: BTreeMap<u64, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::parse(line_no, format!("expected 4 fields, found {}", f.len())));
            }
            let id: u64 = f[0]
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad track id `{}`", f[0])))?;
            let mut v = [0.0; 3];
            for (k, s) in f[1..].iter().enumerate() {
                v[k] = s
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::parse(line_no, format!("bad number `{s}`")))?;
            }
            let samples = tracks.entry(id).or_default();
            if samples.last().is_some_and(|s| s.0 > v[0]) {
                return Err(Error::parse(line_no, format!("track {id} samples are not time-sorted")));
            }
            samples.push((v[0], v[1], v[2]));
        }
        Ok(Self {
            tracks: tracks.into_iter().map(|(id, samples)| Track { id, samples }).collect(),
        })
    }

    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        for tr in &self.tracks {
            for (t, x, y) in &tr.samples {
                writeln!(w, "{} {} {} {}", tr.id, t, x, y)?;
            }
        }
        Ok(())
    }

    /// One track per synthetic junction, following its center.
    pub fn from_truth(truth: &[GroundTruthRecord]) -> Self {
        let mut tracks: BTreeMap<usize, Vec<(f64, f64, f64)>> = BTreeMap::new();
        for r in truth {
            tracks.entry(r.id).or_default().push((r.t, r.center.0, r.center.1));
        }
        Self {
            tracks: tracks
                .into_iter()
                .map(|(id, samples)| Track { id: id as u64, samples })
                .collect(),
        }
    }

    /// Distance from `(x, y)` to the closest track position at time `t`.
    pub fn nearest_distance(&self, t: f64, x: f64, y: f64) -> Option<f64> {
        self.tracks
            .iter()
            .filter_map(|tr| tr.position_at(t))
            .map(|(tx, ty)| ((tx - x).powi(2) + (ty - y).powi(2)).sqrt())
            .min_by(f64::total_cmp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DetectionLabel {
    TruePositive,
    FalsePositive,
    Ignore,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventLabel {
    FalseNegative,
    TrueNegative,
    Ignore,
}

pub fn label_distance(d: Option<f64>) -> DetectionLabel {
    match d {
        Some(d) if d <= TRUE_RADIUS => DetectionLabel::TruePositive,
        Some(d) if d <= FALSE_RADIUS => DetectionLabel::FalsePositive,
        _ => DetectionLabel::Ignore,
    }
}

pub fn label_detection(j: &JunctionRecord, tracks: &TrackFile) -> DetectionLabel {
    label_distance(tracks.nearest_distance(j.t, j.x as f64, j.y as f64))
}

pub fn label_non_detection(e: &Event, tracks: &TrackFile) -> EventLabel {
    match label_distance(tracks.nearest_distance(e.t, e.x as f64, e.y as f64)) {
        DetectionLabel::TruePositive => EventLabel::FalseNegative,
        DetectionLabel::FalsePositive => EventLabel::TrueNegative,
        DetectionLabel::Ignore => EventLabel::Ignore,
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
}

/// A ratio that is undefined when its denominator is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ratio {
    Value(f64),
    Undefined,
}

impl Ratio {
    fn of(num: u64, den: u64) -> Self {
        if den == 0 {
            Ratio::Undefined
        } else {
            Ratio::Value(num as f64 / den as f64)
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Value(v) => Some(v),
            Ratio::Undefined => None,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Value(v) => write!(f, "{v:.6}"),
            Ratio::Undefined => f.write_str("undefined"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub fpr: Ratio,
    pub accuracy: Ratio,
}

pub fn metrics(c: &ConfusionCounts) -> Metrics {
    Metrics {
        fpr: Ratio::of(c.fp, c.fp + c.tn),
        accuracy: Ratio::of(c.tp, c.tp + c.fp),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Evaluation {
    pub counts: ConfusionCounts,
    pub ignored_detections: u64,
    pub ignored_events: u64,
}

/// Labels every detection and, when the event stream is given, every event
/// that was not emitted as a junction.
pub fn evaluate(junctions: &[JunctionRecord], events: Option<&[Event]>, tracks: &TrackFile) -> Evaluation {
    let mut out = Evaluation::default();
    for j in junctions {
        match label_detection(j, tracks) {
            DetectionLabel::TruePositive => out.counts.tp += 1,
            DetectionLabel::FalsePositive => out.counts.fp += 1,
            DetectionLabel::Ignore => out.ignored_detections += 1,
        }
    }
    if let Some(events) = events {
        let emitted: HashSet<(u64, u32, u32)> = junctions.iter().map(|j| (j.t.to_bits(), j.x, j.y)).collect();
        for e in events {
            if emitted.contains(&(e.t.to_bits(), e.x, e.y)) {
                continue;
            }
            match label_non_detection(e, tracks) {
                EventLabel::FalseNegative => out.counts.fn_ += 1,
                EventLabel::TrueNegative => out.counts.tn += 1,
                EventLabel::Ignore => out.ignored_events += 1,
            }
        }
    }
    out
}

pub fn write_report(mut w: impl Write, scene: &str, ev: &Evaluation) -> std::io::Result<()> {
    let m = metrics(&ev.counts);
    writeln!(w, "[{scene}]")?;
    writeln!(w, "tp = {}", ev.counts.tp)?;
    writeln!(w, "fp = {}", ev.counts.fp)?;
    writeln!(w, "tn = {}", ev.counts.tn)?;
    writeln!(w, "fn = {}", ev.counts.fn_)?;
    writeln!(w, "ignored_detections = {}", ev.ignored_detections)?;
    writeln!(w, "ignored_events = {}", ev.ignored_events)?;
    writeln!(w, "fpr = {}", m.fpr)?;
    writeln!(w, "accuracy = {}", m.accuracy)?;
    writeln!(w, "caveat = {CAVEAT}")?;
    Ok(())
}
