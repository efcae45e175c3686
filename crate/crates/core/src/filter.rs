//! Arc*-style corner prefilter on the local surface of active events.
//!
//! Two discrete circles around the event are scanned for the arc holding the
//! newest timestamps. An event is a junction candidate when, on both circles,
//! that arc (or its complement) has a length inside the configured window.

use crate::error::{Error, Result};
use crate::sae::TimestampPatch;

const CIRCLE3: [(i32, i32); 16] = [
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
];

const CIRCLE4: [(i32, i32); 20] = [
    (4, 0),
    (4, 1),
    (3, 2),
    (2, 3),
    (1, 4),
    (0, 4),
    (-1, 4),
    (-2, 3),
    (-3, 2),
    (-4, 1),
    (-4, 0),
    (-4, -1),
    (-3, -2),
    (-2, -3),
    (-1, -4),
    (0, -4),
    (1, -4),
    (2, -3),
    (3, -2),
    (4, -1),
];

/// Discrete circle of the given radius as `(dx, dy)` image offsets, clockwise
/// on screen (y grows downward) starting at `(radius, 0)`.
pub fn circle_offsets(radius: usize) -> Result<&'static [(i32, i32)]> {
    match radius {
        3 => Ok(&CIRCLE3),
        4 => Ok(&CIRCLE4),
        _ => Err(Error::Config(format!(
            "unsupported circle radius {radius} (expected 3 or 4)"
        ))),
    }
}

/// Closed interval of admissible arc lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ArcBounds {
    pub min: usize,
    pub max: usize,
}

impl ArcBounds {
    pub const fn new(min: usize, max: usize) -> Self {
        Self { min, max }
    }

    fn contains(&self, len: usize) -> bool {
        self.min <= len && len <= self.max
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FilterConfig {
    pub inner_radius: usize,
    pub outer_radius: usize,
    pub inner_arc: ArcBounds,
    pub outer_arc: ArcBounds,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            inner_radius: 3,
            outer_radius: 4,
            inner_arc: ArcBounds::new(3, 6),
            outer_arc: ArcBounds::new(4, 8),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        for (radius, bounds, name) in [
            (self.inner_radius, self.inner_arc, "inner"),
            (self.outer_radius, self.outer_arc, "outer"),
        ] {
            let n = circle_offsets(radius)?.len();
            if bounds.min == 0 || bounds.min > bounds.max || bounds.max > n {
                return Err(Error::Config(format!(
                    "{name} arc bounds [{}, {}] invalid for a {n}-pixel circle",
                    bounds.min, bounds.max
                )));
            }
        }
        Ok(())
    }

    /// Largest circle radius, i.e. the smallest patch the filter can read.
    pub fn patch_radius(&self) -> usize {
        self.inner_radius.max(self.outer_radius)
    }
}

/// Length of the arc of newest timestamps found by the greedy Arc* expansion.
///
/// Ties between the two expansion fronts go counter-clockwise; the starting
/// element is the first newest value in traversal order.
pub fn newest_arc_len(vals: &[f64], min_len: usize) -> usize {
    let n = vals.len();
    if n == 0 {
        return 0;
    }
    let mut newest = 0;
    for (i, &v) in vals.iter().enumerate() {
        if v > vals[newest] {
            newest = i;
        }
    }

    let mut cw_end = newest;
    let mut ccw_end = newest;
    let mut oldest = vals[newest];
    let mut len = 1;
    let mut e_cw = (newest + 1) % n;
    let mut e_ccw = (newest + n - 1) % n;

    while e_cw != e_ccw {
        if vals[e_cw] > vals[e_ccw] {
            if oldest <= vals[e_cw] || len < min_len {
                while cw_end != e_cw {
                    cw_end = (cw_end + 1) % n;
                    oldest = oldest.min(vals[cw_end]);
                    len += 1;
                }
            }
            e_cw = (e_cw + 1) % n;
        } else {
            if oldest <= vals[e_ccw] || len < min_len {
                while ccw_end != e_ccw {
                    ccw_end = (ccw_end + n - 1) % n;
                    oldest = oldest.min(vals[ccw_end]);
                    len += 1;
                }
            }
            e_ccw = (e_ccw + n - 1) % n;
        }
    }
    len
}

fn circle_passes(patch: &TimestampPatch, radius: usize, bounds: ArcBounds) -> Result<bool> {
    let offsets = circle_offsets(radius)?;
    let vals: Vec<f64> = offsets.iter().map(|&(dx, dy)| patch.at(dx, dy)).collect();
    let len = newest_arc_len(&vals, bounds.min);
    Ok(bounds.contains(len) || bounds.contains(vals.len() - len))
}

/// Whether the event at the patch center is a junction candidate.
pub fn is_candidate(patch: &TimestampPatch, cfg: &FilterConfig) -> Result<bool> {
    if patch.radius() < cfg.patch_radius() {
        return Err(Error::Geometry(format!(
            "patch radius {} smaller than filter circle radius {}",
            patch.radius(),
            cfg.patch_radius()
        )));
    }
    Ok(circle_passes(patch, cfg.inner_radius, cfg.inner_arc)?
        && circle_passes(patch, cfg.outer_radius, cfg.outer_arc)?)
}
