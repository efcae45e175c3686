//! Synthetic event streams with analytic junction ground truth.
//!
//! Each junction template is a set of straight branches leaving a common
//! center; the whole template translates at a constant velocity. A pixel
//! fires one event when a branch sweeps across its center, with polarity
//! given by the crossing direction. Uniform background noise can be mixed in.
//!
//! Scene files are `key = value` lines:
//!
//! ```text
//! sensor = 240 180
//! velocity = 50 0
//! noise_rate = 0.1
//! duration = 0.5
//! seed = 7
//! truth_interval = 0.001
//! junction = X 120 90 0.785398:12 2.356194:12 3.926991:12 5.497787:12
//! ```
//!
//! `junction` may repeat; each branch is `theta:length` (radians, pixels).

use std::fmt::Write as _;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::event::{Event, Polarity, SensorSize};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JunctionKind {
    L,
    Y,
    X,
}

impl JunctionKind {
    pub fn branch_count(self) -> usize {
        match self {
            JunctionKind::L => 2,
            JunctionKind::Y => 3,
            JunctionKind::X => 4,
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "L" => Some(Self::L),
            "Y" | "T" => Some(Self::Y),
            "X" => Some(Self::X),
            _ => None,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            JunctionKind::L => "L",
            JunctionKind::Y => "Y",
            JunctionKind::X => "X",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct JunctionTemplate {
    pub kind: JunctionKind,
    /// Center at `t = 0`, pixels.
    pub center: (f64, f64),
    /// Branch orientations, radians, counterclockwise with y up.
    pub orientations: Vec<f64>,
    /// Branch lengths, pixels.
    pub lengths: Vec<f64>,
}

impl JunctionTemplate {
    pub fn new(kind: JunctionKind, center: (f64, f64), branches: &[(f64, f64)]) -> Self {
        Self {
            kind,
            center,
            orientations: branches.iter().map(|b| b.0).collect(),
            lengths: branches.iter().map(|b| b.1).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub sensor: SensorSize,
    pub templates: Vec<JunctionTemplate>,
    /// Translation velocity, px/s, image axes (y down).
    pub velocity: (f64, f64),
    /// Background noise, events per second per pixel.
    pub noise_rate: f64,
    pub duration: f64,
    pub seed: u64,
    pub truth_interval: f64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            sensor: SensorSize::default(),
            templates: Vec::new(),
            velocity: (0.0, 0.0),
            noise_rate: 0.0,
            duration: 1.0,
            seed: 0,
            truth_interval: 1e-3,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::Config(format!("duration {} must be positive", self.duration)));
        }
        if !(self.truth_interval > 0.0 && self.truth_interval.is_finite()) {
            return Err(Error::Config("truth interval must be positive".into()));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::Config("noise rate must be non-negative".into()));
        }
        if !(self.velocity.0.is_finite() && self.velocity.1.is_finite()) {
            return Err(Error::Config("velocity must be finite".into()));
        }
        if self.sensor.width == 0 || self.sensor.height == 0 {
            return Err(Error::Config("sensor must be non-empty".into()));
        }
        for (i, t) in self.templates.iter().enumerate() {
            let n = t.kind.branch_count();
            if t.orientations.len() != n || t.lengths.len() != n {
                return Err(Error::Config(format!(
                    "junction {i}: {} junctions have {n} branches",
                    t.kind.as_str()
                )));
            }
            if t.lengths.iter().any(|&l| !(l >= 3.0 && l.is_finite())) {
                return Err(Error::Config(format!("junction {i}: branch lengths must be at least 3")));
            }
            if t.orientations.iter().any(|o| !o.is_finite())
                || !(t.center.0.is_finite() && t.center.1.is_finite())
            {
                return Err(Error::Config(format!("junction {i}: non-finite geometry")));
            }
        }
        Ok(())
    }

    /// Parses the `key = value` scene format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = SceneSpec::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, "expected `key = value`"))?;
            let key = key.trim();
            let fields: Vec<&str> = value.split_whitespace().collect();
            let num = |s: &str| -> Result<f64> {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line_no, format!("bad number `{s}`")))
            };
            let want = |n: usize| -> Result<()> {
                if fields.len() == n {
                    Ok(())
                } else {
                    Err(Error::parse(line_no, format!("`{key}` takes {n} value(s)")))
                }
            };
            match key {
                "sensor" => {
                    want(2)?;
                    let w = fields[0].parse().map_err(|_| Error::parse(line_no, "bad width"))?;
                    let h = fields[1].parse().map_err(|_| Error::parse(line_no, "bad height"))?;
                    spec.sensor = SensorSize::new(w, h);
                }
                "velocity" => {
                    want(2)?;
                    spec.velocity = (num(fields[0])?, num(fields[1])?);
                }
                "noise_rate" => {
                    want(1)?;
                    spec.noise_rate = num(fields[0])?;
                }
                "duration" => {
                    want(1)?;
                    spec.duration = num(fields[0])?;
                }
                "seed" => {
                    want(1)?;
                    spec.seed = fields[0].parse().map_err(|_| Error::parse(line_no, "bad seed"))?;
                }
                "truth_interval" => {
                    want(1)?;
                    spec.truth_interval = num(fields[0])?;
                }
                "junction" => {
                    if fields.len() < 3 {
                        return Err(Error::parse(line_no, "junction needs kind, center and branches"));
                    }
                    let kind = JunctionKind::parse(fields[0])
                        .ok_or_else(|| Error::parse(line_no, format!("unknown junction kind `{}`", fields[0])))?;
                    let center = (num(fields[1])?, num(fields[2])?);
                    let mut branches = Vec::new();
                    for b in &fields[3..] {
                        let (th, len) = b
                            .split_once(':')
                            .ok_or_else(|| Error::parse(line_no, format!("branch `{b}` is not theta:length")))?;
                        branches.push((num(th)?, num(len)?));
                    }
                    spec.templates.push(JunctionTemplate::new(kind, center, &branches));
                }
                other => return Err(Error::parse(line_no, format!("unknown key `{other}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "sensor = {} {}", self.sensor.width, self.sensor.height);
        let _ = writeln!(s, "velocity = {} {}", self.velocity.0, self.velocity.1);
        let _ = writeln!(s, "noise_rate = {}", self.noise_rate);
        let _ = writeln!(s, "duration = {}", self.duration);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "truth_interval = {}", self.truth_interval);
        for t in &self.templates {
            let _ = write!(s, "junction = {} {} {}", t.kind.as_str(), t.center.0, t.center.1);
            for (o, l) in t.orientations.iter().zip(&t.lengths) {
                let _ = write!(s, " {o}:{l}");
            }
            s.push('\n');
        }
        s
    }
}

/// Position and shape of one junction at one sampling instant.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthRecord {
    /// Template index.
    pub id: usize,
    pub t: f64,
    pub center: (f64, f64),
    /// `(length, orientation)` per branch.
    pub branches: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Default)]
pub struct SyntheticStream {
    pub events: Vec<Event>,
    /// `true` where the event at the same index is background noise.
    pub noise: Vec<bool>,
    pub truth: Vec<GroundTruthRecord>,
}

impl SyntheticStream {
    pub fn structural_count(&self) -> usize {
        self.noise.iter().filter(|&&n| !n).count()
    }
}

/// Time at which a branch sweeps over pixel center `p`, if it does within
/// `[0, duration)`.
fn crossing(
    p: (f64, f64),
    c0: (f64, f64),
    v: (f64, f64),
    u: (f64, f64),
    len: f64,
    duration: f64,
) -> Option<(f64, Polarity)> {
    let n = (-u.1, u.0);
    let nv = n.0 * v.0 + n.1 * v.1;
    if nv.abs() < 1e-12 {
        return None;
    }
    let rel = (p.0 - c0.0, p.1 - c0.1);
    let t = (n.0 * rel.0 + n.1 * rel.1) / nv;
    if !(0.0..duration).contains(&t) {
        return None;
    }
    let s = u.0 * (rel.0 - v.0 * t) + u.1 * (rel.1 - v.1 * t);
    if !(0.0..=len).contains(&s) {
        return None;
    }
    let pol = if nv > 0.0 { Polarity::On } else { Polarity::Off };
    Some((t, pol))
}

/// Generates the stream and the truth samples for a scene.
pub fn generate(spec: &SceneSpec) -> Result<SyntheticStream> {
    spec.validate()?;
    let v = spec.velocity;
    let d = spec.duration;
    if v == (0.0, 0.0) && !spec.templates.is_empty() {
        log::warn!("scene has junctions but zero velocity: no structural events will fire");
    }

    let mut tagged: Vec<(Event, bool)> = Vec::new();
    for tpl in &spec.templates {
        for (&theta, &len) in tpl.orientations.iter().zip(&tpl.lengths) {
            // image axes: y grows downward
            let u = (theta.cos(), -theta.sin());
            let ends = [
                tpl.center,
                (tpl.center.0 + len * u.0, tpl.center.1 + len * u.1),
                (tpl.center.0 + v.0 * d, tpl.center.1 + v.1 * d),
                (tpl.center.0 + len * u.0 + v.0 * d, tpl.center.1 + len * u.1 + v.1 * d),
            ];
            let lo_x = ends.iter().map(|e| e.0).fold(f64::INFINITY, f64::min).floor() - 1.0;
            let hi_x = ends.iter().map(|e| e.0).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
            let lo_y = ends.iter().map(|e| e.1).fold(f64::INFINITY, f64::min).floor() - 1.0;
            let hi_y = ends.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max).ceil() + 1.0;
            let x0 = lo_x.max(0.0) as i64;
            let x1 = hi_x.min(spec.sensor.width as f64 - 1.0) as i64;
            let y0 = lo_y.max(0.0) as i64;
            let y1 = hi_y.min(spec.sensor.height as f64 - 1.0) as i64;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    if let Some((t, pol)) = crossing((x as f64, y as f64), tpl.center, v, u, len, d) {
                        tagged.push((Event::new(t, x as u32, y as u32, pol), false));
                    }
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    if spec.noise_rate > 0.0 {
        let mean = spec.noise_rate * spec.sensor.area() as f64 * d;
        let count = Poisson::new(mean)
            .map_err(|e| Error::Param(format!("noise rate: {e}")))?
            .sample(&mut rng) as usize;
        for e in uniform_events(&mut rng, spec.sensor, count, d) {
            tagged.push((e, true));
        }
    }

    tagged.sort_by(|a, b| {
        a.0.t
            .total_cmp(&b.0.t)
            .then(a.0.y.cmp(&b.0.y))
            .then(a.0.x.cmp(&b.0.x))
            .then(a.1.cmp(&b.1))
    });
    // branches sharing the center pixel fire it once
    tagged.dedup_by(|b, a| !a.1 && !b.1 && a.0.x == b.0.x && a.0.y == b.0.y && (b.0.t - a.0.t).abs() < 1e-12);

    let mut truth = Vec::new();
    let samples = (d / spec.truth_interval - 1e-9).ceil() as usize;
    for k in 0..=samples {
        let t = k as f64 * spec.truth_interval;
        for (id, tpl) in spec.templates.iter().enumerate() {
            truth.push(GroundTruthRecord {
                id,
                t,
                center: (tpl.center.0 + v.0 * t, tpl.center.1 + v.1 * t),
                branches: tpl.lengths.iter().copied().zip(tpl.orientations.iter().copied()).collect(),
            });
        }
    }

    let (events, noise) = tagged.into_iter().unzip();
    Ok(SyntheticStream { events, noise, truth })
}

fn uniform_events(rng: &mut impl Rng, sensor: SensorSize, count: usize, duration: f64) -> Vec<Event> {
    let mut out: Vec<Event> = (0..count)
        .map(|_| {
            let t = rng.random::<f64>() * duration;
            let x = rng.random_range(0..sensor.width);
            let y = rng.random_range(0..sensor.height);
            let p = if rng.random::<bool>() { Polarity::On } else { Polarity::Off };
            Event::new(t, x, y, p)
        })
        .collect();
    out.sort_by(|a, b| a.t.total_cmp(&b.t));
    out
}

/// Exactly `count` uniformly placed noise events over `[0, duration)`.
pub fn noise_stream(sensor: SensorSize, count: usize, duration: f64, seed: u64) -> Vec<Event> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    uniform_events(&mut rng, sensor, count, duration)
}

/// Center of junction `id` at time `t`, linearly interpolated between samples.
pub fn truth_at(truth: &[GroundTruthRecord], id: usize, t: f64) -> Result<GroundTruthRecord> {
    let track: Vec<&GroundTruthRecord> = truth.iter().filter(|r| r.id == id).collect();
    let (first, last) = match (track.first(), track.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::Param(format!("no truth for junction {id}"))),
    };
    if !(t >= first.t && t <= last.t) {
        return Err(Error::Range {
            what: "truth time",
            value: t,
            lo: first.t,
            hi: last.t,
        });
    }
    let i = track.partition_point(|r| r.t <= t);
    let a = track[i.saturating_sub(1)];
    if a.t == t || i >= track.len() {
        return Ok(a.clone());
    }
    let b = track[i];
    let w = (t - a.t) / (b.t - a.t);
    Ok(GroundTruthRecord {
        id,
        t,
        center: (
            a.center.0 + w * (b.center.0 - a.center.0),
            a.center.1 + w * (b.center.1 - a.center.1),
        ),
        branches: a.branches.clone(),
    })
}

/// Truth file: `t cx cy M len theta ...` per record.
pub fn write_truth(mut w: impl Write, truth: &[GroundTruthRecord]) -> std::io::Result<()> {
    for r in truth {
        write!(w, "{} {} {} {}", r.t, r.center.0, r.center.1, r.branches.len())?;
        for (len, theta) in &r.branches {
            write!(w, " {len} {theta}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Reads a truth file. Records sharing a timestamp are numbered in file
/// order, which is how [`write_truth`] lays them out.
pub fn parse_truth(text: &str) -> Result<Vec<GroundTruthRecord>> {
    let mut out: Vec<GroundTruthRecord> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() < 4 {
            return Err(Error::parse(line_no, "expected `t cx cy M ...`"));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(line_no, format!("bad number `{s}`")))
        };
        let t = num(f[0])?;
        let center = (num(f[1])?, num(f[2])?);
        let m: usize = f[3].parse().map_err(|_| Error::parse(line_no, "bad branch count"))?;
        if f.len() != 4 + 2 * m {
            return Err(Error::parse(line_no, format!("expected {} branch values", 2 * m)));
        }
        let branches = (0..m)
            .map(|k| Ok((num(f[4 + 2 * k])?, num(f[5 + 2 * k])?)))
            .collect::<Result<Vec<_>>>()?;
        let id = out.iter().rev().take_while(|r| r.t == t).count();
        if let Some(prev) = out.last() {
            if t < prev.t {
                return Err(Error::parse(line_no, "truth records must be time-ordered"));
            }
        }
        out.push(GroundTruthRecord { id, t, center, branches });
    }
    Ok(out)
}
