//! Orientation and scale search over precomputed gradient fields.

use std::f64::consts::TAU;

use crate::acontrario::TailTable;
use crate::error::Result;

use super::binary::GradientField;
use super::sector::{branch_strength, SectorSpec};
use super::{Branch, DetectorConfig};

pub fn bin_angle(bin: usize, bins: usize) -> f64 {
    TAU * bin as f64 / bins as f64
}

/// `ω(r, θ_k)` for every orientation bin.
pub fn orientation_profile(g: &GradientField, r: usize, cfg: &DetectorConfig) -> Result<Vec<f64>> {
    (0..cfg.theta_bins)
        .map(|k| {
            let spec = SectorSpec::new(r, bin_angle(k, cfg.theta_bins), cfg.tau)?;
            Ok(branch_strength(g, &spec)?.0)
        })
        .collect()
}

/// Bins that dominate every other bin within `±window` (circularly) and are
/// strictly positive. Among equal values the lowest index wins.
pub fn semi_local_maxima(profile: &[f64], window: usize) -> Vec<usize> {
    let n = profile.len();
    let window = window.max(1).min(n / 2);
    let mut out = Vec::new();
    'bins: for i in 0..n {
        let v = profile[i];
        if !(v > 0.0) {
            continue;
        }
        for d in 1..=window {
            for j in [(i + d) % n, (i + n - d) % n] {
                if j == i {
                    continue;
                }
                let w = profile[j];
                if w > v || (w == v && j < i) {
                    continue 'bins;
                }
            }
        }
        out.push(i);
    }
    out
}

/// Scale in `[r_min, r_max]` whose sector at `bin` has the smallest tail
/// probability. `fields[i]` is the gradient field for `r_min + i`.
pub fn best_scale(fields: &[GradientField], bin: usize, table: &TailTable, cfg: &DetectorConfig) -> Result<Branch> {
    let theta = bin_angle(bin, cfg.theta_bins);
    let mut best: Option<Branch> = None;
    for (i, g) in fields.iter().enumerate() {
        let r = cfg.r_min + i;
        let spec = SectorSpec::new(r, theta, cfg.tau)?;
        let (omega, j) = branch_strength(g, &spec)?;
        let tail = table.lookup(omega, j)?;
        if best.as_ref().is_none_or(|b| tail < b.tail) {
            best = Some(Branch {
                r,
                bin,
                theta,
                strength: omega,
                sector_size: j,
                tail,
                nfa: f64::NAN,
            });
        }
    }
    Ok(best.expect("at least one scale"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_profile_has_no_maxima() {
        assert!(semi_local_maxima(&[0.0; 64], 4).is_empty());
    }

    #[test]
    fn single_peak() {
        let mut p = vec![0.0; 64];
        p[10] = 3.0;
        p[11] = 1.0;
        p[9] = 2.0;
        assert_eq!(semi_local_maxima(&p, 4), vec![10]);
    }

    #[test]
    fn antipodal_equal_peaks() {
        let mut p = vec![0.1; 64];
        p[0] = 5.0;
        p[32] = 5.0;
        assert_eq!(semi_local_maxima(&p, 15), vec![0, 32]);
    }

    #[test]
    fn plateau_keeps_lowest_index() {
        let mut p = vec![0.0; 16];
        p[5] = 1.0;
        p[6] = 1.0;
        assert_eq!(semi_local_maxima(&p, 2), vec![5]);
    }

    #[test]
    fn wraps_around() {
        let mut p = vec![0.0; 16];
        p[15] = 1.0;
        p[1] = 2.0;
        assert_eq!(semi_local_maxima(&p, 2), vec![1]);
    }
}
