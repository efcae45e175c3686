//! Global surface of active events and local timestamp patches.

use crate::error::{Error, Result};
use crate::event::{Event, SensorSize};

/// Timestamp stored for pixels that have never fired. Older than any event.
pub const NEVER: f64 = f64::NEG_INFINITY;

/// Per-pixel latest timestamp over the whole sensor, shared by both polarities.
#[derive(Clone, Debug)]
pub struct Gsae {
    size: SensorSize,
    cells: Vec<f64>,
}

impl Gsae {
    pub fn new(size: SensorSize) -> Self {
        Self {
            size,
            cells: vec![NEVER; size.area() as usize],
        }
    }

    pub fn size(&self) -> SensorSize {
        self.size
    }

    pub fn update(&mut self, e: &Event) -> Result<()> {
        self.size.check(e.x as i64, e.y as i64)?;
        let idx = e.y as usize * self.size.width as usize + e.x as usize;
        self.cells[idx] = e.t;
        Ok(())
    }

    /// Timestamp at `(x, y)`, or [`NEVER`] outside the sensor.
    pub fn get(&self, x: i64, y: i64) -> f64 {
        if self.size.contains(x, y) {
            self.cells[y as usize * self.size.width as usize + x as usize]
        } else {
            NEVER
        }
    }

    pub fn clear(&mut self) {
        self.cells.fill(NEVER);
    }

    /// Copies the `(2r+1)x(2r+1)` window around `center`, padding with [`NEVER`].
    pub fn extract_patch(&self, center: (u32, u32), radius: usize) -> TimestampPatch {
        let side = 2 * radius + 1;
        let mut values = Vec::with_capacity(side * side);
        let (cx, cy) = (center.0 as i64, center.1 as i64);
        let r = radius as i64;
        for dy in -r..=r {
            for dx in -r..=r {
                values.push(self.get(cx + dx, cy + dy));
            }
        }
        TimestampPatch {
            radius,
            center,
            values,
        }
    }
}

/// Square window of timestamps, row-major, side `2*radius + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct TimestampPatch {
    radius: usize,
    center: (u32, u32),
    values: Vec<f64>,
}

impl TimestampPatch {
    pub fn from_values(radius: usize, center: (u32, u32), values: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if values.len() != side * side {
            return Err(Error::Geometry(format!(
                "patch of radius {radius} needs {} values, got {}",
                side * side,
                values.len()
            )));
        }
        Ok(Self {
            radius,
            center,
            values,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn center(&self) -> (u32, u32) {
        self.center
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value at offset `(dx, dy)` from the center. Panics outside the patch.
    pub fn at(&self, dx: i32, dy: i32) -> f64 {
        let r = self.radius as i32;
        assert!(dx.abs() <= r && dy.abs() <= r, "offset outside patch");
        self.values[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }

    /// Central sub-window of a smaller radius.
    pub fn crop(&self, radius: usize) -> TimestampPatch {
        assert!(radius <= self.radius, "crop radius exceeds patch radius");
        let side = 2 * radius + 1;
        let off = self.radius - radius;
        let mut values = Vec::with_capacity(side * side);
        for row in 0..side {
            let start = (row + off) * self.side() + off;
            values.extend_from_slice(&self.values[start..start + side]);
        }
        TimestampPatch {
            radius,
            center: self.center,
            values,
        }
    }
}
