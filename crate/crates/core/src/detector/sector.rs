//! Angular sectors around a junction center and the per-pixel junction-ness.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};

use super::binary::GradientField;

/// Sector of radius `r` around direction `theta` with half-width `tau / r`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorSpec {
    pub r: usize,
    pub theta: f64,
    pub tau: f64,
}

impl SectorSpec {
    pub fn new(r: usize, theta: f64, tau: f64) -> Result<Self> {
        let s = Self { r, theta, tau };
        let hw = s.half_width();
        if r == 0 || !(hw > 0.0 && hw < PI) {
            return Err(Error::Param(format!(
                "sector half-width {hw} (tau {tau}, r {r}) must lie in (0, π)"
            )));
        }
        Ok(s)
    }

    pub fn half_width(&self) -> f64 {
        self.tau / self.r as f64
    }
}

/// Direction of the offset `(dx, dy)` in `[0, 2π)`, y pointing down in the image.
pub fn offset_angle(dx: i32, dy: i32) -> f64 {
    let a = (-(dy as f64)).atan2(dx as f64);
    if a < 0.0 {
        a + TAU
    } else {
        a
    }
}

/// Circular distance between two angles.
pub fn angle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(TAU);
    d.min(TAU - d)
}

/// Offsets `q ≠ 0` with `|q| ≤ r` and direction within the half-width of
/// `theta`, row-major.
pub fn sector_members(spec: &SectorSpec, patch_radius: usize) -> Result<Vec<(i32, i32)>> {
    if spec.r > patch_radius {
        return Err(Error::Geometry(format!(
            "sector radius {} exceeds patch radius {patch_radius}",
            spec.r
        )));
    }
    let r = spec.r as i32;
    let r2 = r * r;
    let hw = spec.half_width();
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if (dx, dy) == (0, 0) || dx * dx + dy * dy > r2 {
                continue;
            }
            if angle_dist(offset_angle(dx, dy), spec.theta) <= hw {
                out.push((dx, dy));
            }
        }
    }
    Ok(out)
}

/// `max(|cos(φ-α)| - |sin(φ-α)|, 0)`.
pub fn gamma_value(phi: f64, alpha: f64) -> f64 {
    let d = phi - alpha;
    (d.cos().abs() - d.sin().abs()).max(0.0)
}

/// Junction-ness of pixel `q` relative to the patch center.
pub fn gamma(q: (i32, i32), g: &GradientField) -> f64 {
    match g.phi(q.0, q.1) {
        Some(phi) => gamma_value(phi, offset_angle(q.0, q.1)),
        None => 0.0,
    }
}

/// Sum of `γ` over the sector and the sector size.
pub fn branch_strength(g: &GradientField, spec: &SectorSpec) -> Result<(f64, usize)> {
    let members = sector_members(spec, g.radius())?;
    let omega = members.iter().map(|&q| gamma(q, g)).sum();
    Ok((omega, members.len()))
}
