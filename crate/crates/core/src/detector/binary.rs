//! Binarized patches and their Sobel gradient fields.
//!
//! Angle convention used throughout the detector: x to the right, y down in
//! the image, angles counterclockwise from +x measured on `(x, -y)`. Sobel
//! responses are therefore flipped in y before taking angles.

use std::f64::consts::{FRAC_PI_2, TAU};

use crate::sae::TimestampPatch;

/// `{0,1}` patch, row-major, side `2*radius + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryPatch {
    radius: usize,
    bits: Vec<u8>,
}

impl BinaryPatch {
    pub fn from_bits(radius: usize, bits: Vec<u8>) -> Self {
        let side = 2 * radius + 1;
        assert_eq!(bits.len(), side * side, "bit count does not match radius");
        assert!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
        Self { radius, bits }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn at(&self, dx: i32, dy: i32) -> u8 {
        let r = self.radius as i32;
        self.bits[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }
}

/// Number of cells set by [`binarize`] for a patch of radius `r`: `(r+1)²`.
pub fn newest_count(radius: usize) -> usize {
    (radius + 1) * (radius + 1)
}

/// Marks the `(r+1)²` newest live cells of the patch.
pub fn binarize(patch: &TimestampPatch) -> BinaryPatch {
    binarize_count(patch, newest_count(patch.radius()))
}

/// Marks the `count` newest live cells. Ties at the cutoff go to the earlier
/// row-major position; never-fired cells stay 0.
pub fn binarize_count(patch: &TimestampPatch, count: usize) -> BinaryPatch {
    let vals = patch.values();
    let mut live: Vec<u32> = (0..vals.len() as u32)
        .filter(|&i| vals[i as usize] != crate::sae::NEVER)
        .collect();
    let mut bits = vec![0u8; vals.len()];
    if live.len() > count {
        let newer_first = |a: &u32, b: &u32| {
            vals[*b as usize]
                .total_cmp(&vals[*a as usize])
                .then(a.cmp(b))
        };
        if count > 0 {
            live.select_nth_unstable_by(count - 1, newer_first);
        }
        live.truncate(count);
    }
    for i in live {
        bits[i as usize] = 1;
    }
    BinaryPatch {
        radius: patch.radius(),
        bits,
    }
}

/// Maps a Sobel pair to the index used by gamma lookup tables: `(gx+4)*9 + (gy+4)`.
pub const SOBEL_CODES: usize = 81;
pub const ZERO_CODE: u8 = 4 * 9 + 4;

/// Sobel responses and normal angles on a binary patch.
///
/// `gx` is the x derivative and `gy` the derivative toward +y in the angle
/// convention (upward), both in `[-4, 4]`. The outer ring is left at zero.
#[derive(Clone, Debug)]
pub struct GradientField {
    radius: usize,
    gx: Vec<i8>,
    gy: Vec<i8>,
}

impl GradientField {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    fn idx(&self, dx: i32, dy: i32) -> usize {
        let r = self.radius as i32;
        ((dy + r) as usize) * self.side() + (dx + r) as usize
    }

    /// Raw `(I_x, I_y)` at an offset, y pointing up.
    pub fn sobel(&self, dx: i32, dy: i32) -> (i8, i8) {
        let i = self.idx(dx, dy);
        (self.gx[i], self.gy[i])
    }

    pub fn norm(&self, dx: i32, dy: i32) -> bool {
        self.sobel(dx, dy) != (0, 0)
    }

    /// Normal angle in `[0, 2π)`, or `None` where the gradient vanishes.
    pub fn phi(&self, dx: i32, dy: i32) -> Option<f64> {
        let (gx, gy) = self.sobel(dx, dy);
        if (gx, gy) == (0, 0) {
            None
        } else {
            Some(normal_angle(gx, gy))
        }
    }

    /// Lookup code of each cell, row-major.
    pub fn codes(&self) -> impl Iterator<Item = u8> + '_ {
        self.gx
            .iter()
            .zip(&self.gy)
            .map(|(&x, &y)| sobel_code(x, y))
    }

    /// Number of interior pixels with a nonzero gradient.
    pub fn nonzero_count(&self) -> usize {
        self.gx
            .iter()
            .zip(&self.gy)
            .filter(|(&x, &y)| (x, y) != (0, 0))
            .count()
    }

    pub fn interior_count(&self) -> usize {
        let s = self.side().saturating_sub(2);
        s * s
    }
}

pub fn sobel_code(gx: i8, gy: i8) -> u8 {
    ((gx + 4) * 9 + (gy + 4)) as u8
}

pub fn decode_sobel(code: u8) -> (i8, i8) {
    ((code / 9) as i8 - 4, (code % 9) as i8 - 4)
}

/// `atan2(I_y, I_x) + π/2`, wrapped to `[0, 2π)`.
pub fn normal_angle(gx: i8, gy: i8) -> f64 {
    let a = (gy as f64).atan2(gx as f64) + FRAC_PI_2;
    if a < 0.0 {
        a + TAU
    } else if a >= TAU {
        a - TAU
    } else {
        a
    }
}

/// 3x3 Sobel on the interior of the patch.
pub fn gradient_field(b: &BinaryPatch) -> GradientField {
    let side = b.side();
    let mut gx = vec![0i8; side * side];
    let mut gy = vec![0i8; side * side];
    if side >= 3 {
        let bit = |x: usize, y: usize| b.bits[y * side + x] as i8;
        for y in 1..side - 1 {
            for x in 1..side - 1 {
                let right = bit(x + 1, y - 1) + 2 * bit(x + 1, y) + bit(x + 1, y + 1);
                let left = bit(x - 1, y - 1) + 2 * bit(x - 1, y) + bit(x - 1, y + 1);
                let below = bit(x - 1, y + 1) + 2 * bit(x, y + 1) + bit(x + 1, y + 1);
                let above = bit(x - 1, y - 1) + 2 * bit(x, y - 1) + bit(x + 1, y - 1);
                gx[y * side + x] = right - left;
                // image rows grow downward; flip to the upward convention
                gy[y * side + x] = above - below;
            }
        }
    }
    GradientField {
        radius: b.radius,
        gx,
        gy,
    }
}

/// Fraction of interior pixels whose gradient is nonzero.
pub fn gradient_fraction(g: &GradientField) -> f64 {
    let n = g.interior_count();
    if n == 0 {
        0.0
    } else {
        g.nonzero_count() as f64 / n as f64
    }
}
