use crate::error::{Error, Result};

use super::table::TailTable;

/// Ingredients of the number of tests and the meaningfulness threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NfaConfig {
    pub epsilon: f64,
    /// Number of candidate centers (sensor pixels).
    pub image_area: u64,
    /// Number of branch scales searched.
    pub scale_count: usize,
    /// Number of orientation bins.
    pub orientation_count: usize,
    pub max_branches: usize,
}

impl Default for NfaConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            image_area: 240 * 180,
            scale_count: 13,
            orientation_count: 64,
            max_branches: 4,
        }
    }
}

impl NfaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::Config(format!("epsilon {} must be positive", self.epsilon)));
        }
        if self.image_area == 0 || self.scale_count == 0 || self.orientation_count == 0 || self.max_branches == 0 {
            return Err(Error::Config("test counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// Binomial coefficient as a float; exact for the magnitudes used here.
pub fn choose(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// `#J(M)`: pixels × scales × orientation subsets of size `M`.
pub fn number_of_tests(cfg: &NfaConfig, branches: usize) -> Result<f64> {
    if branches == 0 || branches > cfg.max_branches {
        return Err(Error::Param(format!(
            "branch count {branches} outside [1, {}]",
            cfg.max_branches
        )));
    }
    if branches > cfg.orientation_count {
        return Err(Error::Param(format!(
            "branch count {branches} exceeds {} orientation bins",
            cfg.orientation_count
        )));
    }
    Ok(cfg.image_area as f64 * cfg.scale_count as f64 * choose(cfg.orientation_count, branches))
}

/// `#J(M) · F(t; J)`.
pub fn nfa(strength: f64, sector_size: usize, branches: usize, table: &TailTable, cfg: &NfaConfig) -> Result<f64> {
    Ok(number_of_tests(cfg, branches)? * table.lookup(strength, sector_size)?)
}
