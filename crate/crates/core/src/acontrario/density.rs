use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use crate::error::{Error, Result};

/// Null-hypothesis law of the per-pixel junction-ness `γ`.
///
/// With gradient presence ~ Bernoulli(p) and a uniform normal angle, `γ` is
/// zero with probability `1 - p/2` and otherwise has density
/// `2p / (π sqrt(2 - z²))` on `[0, 1]`. The continuous part is stored as exact
/// per-cell masses on a uniform grid.
#[derive(Clone, Debug)]
pub struct GammaDensity {
    p: f64,
    step: f64,
    atom: f64,
    cells: Vec<f64>,
}

impl GammaDensity {
    /// `step` is rounded down to the nearest `1/n` so the grid tiles `[0, 1]`.
    pub fn new(p: f64, step: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::Param(format!("p = {p} must lie in (0, 1)")));
        }
        if !(step > 0.0 && step <= 1e-2) {
            return Err(Error::Param(format!("grid step {step} must lie in (0, 0.01]")));
        }
        let n = (1.0 / step - 1e-9).ceil() as usize;
        let step = 1.0 / n as f64;
        let scale = 2.0 * p / PI;
        let cells = (0..n)
            .map(|i| {
                let lo = (i as f64 * step * FRAC_1_SQRT_2).asin();
                let hi = ((i + 1) as f64 * step * FRAC_1_SQRT_2).asin();
                scale * (hi - lo)
            })
            .collect();
        Ok(Self {
            p,
            step,
            atom: 1.0 - p / 2.0,
            cells,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Point mass at `γ = 0`.
    pub fn atom(&self) -> f64 {
        self.atom
    }

    /// Probability that `γ > 0`.
    pub fn nonzero_mass(&self) -> f64 {
        self.p / 2.0
    }

    /// Mass of the continuous part on each grid cell `[iδ, (i+1)δ)`.
    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn continuous_mass(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Density of the continuous part at `z`.
    pub fn density_at(&self, z: f64) -> f64 {
        if (0.0..=1.0).contains(&z) {
            2.0 * self.p / (PI * (2.0 - z * z).sqrt())
        } else {
            0.0
        }
    }

    /// `P(γ ≥ t)` in closed form.
    pub fn single_tail(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else if t > 1.0 {
            0.0
        } else {
            self.p * (0.5 - 2.0 / PI * (t / SQRT_2).asin())
        }
    }
}
