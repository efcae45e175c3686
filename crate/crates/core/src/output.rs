//! Junction stream files and raster overlays.
//!
//! Junction file: one line per junction, `t x y nfa M r1 theta1 ... rM thetaM`
//! with angles in radians to 6 decimals.

use std::io::Write;

use crate::detector::Junction;
use crate::error::{Error, Result};
use crate::event::SensorSize;

/// A junction as stored on disk.
#[derive(Clone, Debug, PartialEq)]
pub struct JunctionRecord {
    pub t: f64,
    pub x: u32,
    pub y: u32,
    pub nfa: f64,
    /// `(r, theta)` per branch.
    pub branches: Vec<(usize, f64)>,
}

impl From<&Junction> for JunctionRecord {
    fn from(j: &Junction) -> Self {
        Self {
            t: j.t,
            x: j.x,
            y: j.y,
            nfa: j.nfa,
            branches: j.branches.iter().map(|b| (b.r, b.theta)).collect(),
        }
    }
}

pub fn write_junction(mut w: impl Write, j: &JunctionRecord) -> std::io::Result<()> {
    write!(w, "{} {} {} {:e} {}", j.t, j.x, j.y, j.nfa, j.branches.len())?;
    for (r, theta) in &j.branches {
        write!(w, " {r} {theta:.6}")?;
    }
    writeln!(w)
}

pub fn parse_junction_line(line: &str, line_no: usize) -> Result<JunctionRecord> {
    let f: Vec<&str> = line.split_whitespace().collect();
    if f.len() < 5 {
        return Err(Error::parse(line_no, "expected `t x y nfa M ...`"));
    }
    let real = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| Error::parse(line_no, format!("bad number `{s}`")))
    };
    let int = |s: &str| -> Result<u32> { s.parse().map_err(|_| Error::parse(line_no, format!("bad integer `{s}`"))) };
    let t = real(f[0])?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::parse(line_no, "timestamp must be finite and non-negative"));
    }
    let m = int(f[4])? as usize;
    if f.len() != 5 + 2 * m {
        return Err(Error::parse(line_no, format!("{m} branches need {} values", 2 * m)));
    }
    let branches = (0..m)
        .map(|k| Ok((int(f[5 + 2 * k])? as usize, real(f[6 + 2 * k])?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(JunctionRecord {
        t,
        x: int(f[1])?,
        y: int(f[2])?,
        nfa: real(f[3])?,
        branches,
    })
}

pub fn parse_junctions(text: &str) -> Result<Vec<JunctionRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| parse_junction_line(l, i + 1))
        .collect()
}

/// 8-bit grayscale raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

pub const RAY_LEVEL: u8 = 160;
pub const CENTER_LEVEL: u8 = 255;

impl Raster {
    pub fn blank(size: SensorSize) -> Self {
        Self {
            width: size.width,
            height: size.height,
            pixels: vec![0; size.area() as usize],
        }
    }

    pub fn get(&self, x: i64, y: i64) -> Option<u8> {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return None;
        }
        Some(self.pixels[y as usize * self.width as usize + x as usize])
    }

    fn put(&mut self, x: i64, y: i64, v: u8) {
        if x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64 {
            let i = y as usize * self.width as usize + x as usize;
            self.pixels[i] = self.pixels[i].max(v);
        }
    }

    /// Plain-text PGM.
    pub fn write_pgm(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "P2\n{} {}\n255", self.width, self.height)?;
        for row in self.pixels.chunks(self.width.max(1) as usize) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Draws every junction with `t` in `[t_end - window, t_end]`: a bright
/// center and one ray per branch of length `r` along `theta` (y up).
pub fn render_overlay(junctions: &[JunctionRecord], t_end: f64, window: f64, size: SensorSize) -> Result<Raster> {
    if !(window > 0.0) {
        return Err(Error::Config(format!("overlay window {window} must be positive")));
    }
    let mut img = Raster::blank(size);
    for j in junctions.iter().filter(|j| j.t <= t_end && j.t >= t_end - window) {
        let (cx, cy) = (j.x as f64, j.y as f64);
        for &(r, theta) in &j.branches {
            let steps = (r as f64 * 2.0).ceil() as usize;
            for s in 1..=steps {
                let d = r as f64 * s as f64 / steps as f64;
                let x = (cx + d * theta.cos()).round() as i64;
                let y = (cy - d * theta.sin()).round() as i64;
                img.put(x, y, RAY_LEVEL);
            }
        }
        img.put(j.x as i64, j.y as i64, CENTER_LEVEL);
    }
    Ok(img)
}
