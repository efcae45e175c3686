//! Flat `section.key = value` configuration.
//!
//! ```text
//! sensor.width = 240
//! sensor.height = 180
//! acj.p = 0.21
//! filter.enabled = true
//! filter.inner_arc = 3 6
//! refine.r_d = 5
//! overlay.window = 0.05
//! ```
//!
//! Unset keys keep their defaults. Unknown keys are errors.

use std::fmt::Write as _;

use crate::detector::{DetectorConfig, RefineConfig};
use crate::error::{Error, Result};
use crate::event::SensorSize;
use crate::filter::{ArcBounds, FilterConfig};

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub sensor: SensorSize,
    pub detector: DetectorConfig,
    pub filter: FilterConfig,
    pub refine: RefineConfig,
    pub prefilter: bool,
    /// Overlay time window in seconds.
    pub overlay_window: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            sensor: SensorSize::default(),
            detector: DetectorConfig::default(),
            filter: FilterConfig::default(),
            refine: RefineConfig::default(),
            prefilter: true,
            overlay_window: 0.05,
        }
    }
}

fn value<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::parse(line, format!("invalid value `{v}` for `{key}`")))
}

fn arc(line: usize, key: &str, v: &str) -> Result<ArcBounds> {
    let parts: Vec<&str> = v
        .split(|c: char| c == ',' || c.is_whitespace() || c == '[' || c == ']')
        .filter(|s| !s.is_empty())
        .collect();
    if parts.len() != 2 {
        return Err(Error::parse(line, format!("`{key}` takes two integers `min max`")));
    }
    Ok(ArcBounds::new(value(line, key, parts[0])?, value(line, key, parts[1])?))
}

fn real(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = value(line, key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::parse(line, format!("`{key}` must be finite")))
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sensor.width == 0 || self.sensor.height == 0 {
            return Err(Error::Config("sensor size must be non-zero".into()));
        }
        self.detector.validate()?;
        self.filter.validate()?;
        if !(self.refine.r_d >= 0.0 && self.refine.t_window >= 0.0) {
            return Err(Error::Config("refinement radius and window must be non-negative".into()));
        }
        if !(self.overlay_window > 0.0) {
            return Err(Error::Config(format!("overlay window {} must be positive", self.overlay_window)));
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let n = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(n, "expected `section.key = value`"))?;
            let (key, v) = (key.trim(), v.trim());
            let d = &mut c.detector;
            let f = &mut c.filter;
            match key {
                "sensor.width" => c.sensor.width = value(n, key, v)?,
                "sensor.height" => c.sensor.height = value(n, key, v)?,
                "acj.tau" => d.tau = real(n, key, v)?,
                "acj.r_min" => d.r_min = value(n, key, v)?,
                "acj.r_max" => d.r_max = value(n, key, v)?,
                "acj.theta_bins" | "acj.orientations" => d.theta_bins = value(n, key, v)?,
                "acj.max_branches" => d.max_branches = value(n, key, v)?,
                "acj.maxima_window" => d.maxima_window = value(n, key, v)?,
                "acj.p" => d.p = real(n, key, v)?,
                "acj.epsilon" => d.epsilon = real(n, key, v)?,
                "acj.grid_step" => d.grid_step = real(n, key, v)?,
                "filter.enabled" => c.prefilter = value(n, key, v)?,
                "filter.inner_radius" => f.inner_radius = value(n, key, v)?,
                "filter.outer_radius" => f.outer_radius = value(n, key, v)?,
                "filter.inner_arc" => f.inner_arc = arc(n, key, v)?,
                "filter.outer_arc" => f.outer_arc = arc(n, key, v)?,
                "refine.r_d" => c.refine.r_d = real(n, key, v)?,
                "refine.T" => c.refine.t_window = real(n, key, v)?,
                "overlay.window" => c.overlay_window = real(n, key, v)?,
                _ => return Err(Error::parse(n, format!("unknown key `{key}`"))),
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let d = &self.detector;
        let f = &self.filter;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("sensor.width", self.sensor.width.to_string());
        kv("sensor.height", self.sensor.height.to_string());
        kv("acj.tau", d.tau.to_string());
        kv("acj.r_min", d.r_min.to_string());
        kv("acj.r_max", d.r_max.to_string());
        kv("acj.theta_bins", d.theta_bins.to_string());
        kv("acj.max_branches", d.max_branches.to_string());
        kv("acj.maxima_window", d.maxima_window.to_string());
        kv("acj.p", d.p.to_string());
        kv("acj.epsilon", d.epsilon.to_string());
        kv("acj.grid_step", d.grid_step.to_string());
        kv("filter.enabled", self.prefilter.to_string());
        kv("filter.inner_radius", f.inner_radius.to_string());
        kv("filter.outer_radius", f.outer_radius.to_string());
        kv("filter.inner_arc", format!("{} {}", f.inner_arc.min, f.inner_arc.max));
        kv("filter.outer_arc", format!("{} {}", f.outer_arc.min, f.outer_arc.max));
        kv("refine.r_d", self.refine.r_d.to_string());
        kv("refine.T", self.refine.t_window.to_string());
        kv("overlay.window", self.overlay_window.to_string());
        s
    }
}
