//! Junction detection on a single candidate event.
//!
//! For every scale `r` the `(2r+1)²` neighborhood is binarized (newest `(r+1)²`
//! cells set) and run through a Sobel filter. Each orientation bin and scale
//! gets a branch strength `ω` summed over its angular sector, scored by the
//! tail probability of `ω` under the noise model. Orientations are picked at
//! semi-local maxima of the per-bin significance, each keeps its most
//! significant scale, and the junction is the largest set of well separated
//! branches whose weakest member is still ε-meaningful.

pub mod binary;
pub mod refine;
pub mod search;
pub mod sector;

use crate::acontrario::{number_of_tests, GammaDensity, NfaConfig, TailTable};
use crate::error::{Error, Result};
use crate::event::{Event, SensorSize};
use crate::sae::{Gsae, TimestampPatch};

pub use binary::{binarize, binarize_count, gradient_field, BinaryPatch, GradientField};
pub use refine::{refine, RefineConfig, Refiner, Verdict};
pub use search::{best_scale, bin_angle, orientation_profile, semi_local_maxima};
pub use sector::{branch_strength, gamma, gamma_value, sector_members, SectorSpec};

use binary::{decode_sobel, normal_angle, SOBEL_CODES, ZERO_CODE};
use sector::{angle_dist, offset_angle};

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig {
    /// Sector width parameter; half-width is `tau / r`.
    pub tau: f64,
    pub r_min: usize,
    pub r_max: usize,
    pub theta_bins: usize,
    pub max_branches: usize,
    /// Semi-local maximum window in bins.
    pub maxima_window: usize,
    /// Bernoulli parameter of the noise model.
    pub p: f64,
    pub epsilon: f64,
    /// Grid step of both the density and the tail table.
    pub grid_step: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            tau: 1.0,
            r_min: 3,
            r_max: 15,
            theta_bins: 64,
            max_branches: 4,
            maxima_window: 4,
            p: 0.21,
            epsilon: 1.0,
            grid_step: 1.0 / 512.0,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_min < 2 || self.r_min > self.r_max {
            return Err(Error::Config(format!(
                "scale range [{}, {}] invalid",
                self.r_min, self.r_max
            )));
        }
        if self.theta_bins < 4 {
            return Err(Error::Config("need at least 4 orientation bins".into()));
        }
        if self.max_branches < 2 || self.max_branches > self.theta_bins {
            return Err(Error::Config(format!(
                "max branches {} must lie in [2, {}]",
                self.max_branches, self.theta_bins
            )));
        }
        if self.maxima_window == 0 {
            return Err(Error::Config("maxima window must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau / (self.r_min as f64) < std::f64::consts::PI) {
            return Err(Error::Config(format!("tau {} gives an invalid sector", self.tau)));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::Config(format!("p {} must lie in (0, 1)", self.p)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::Config(format!("epsilon {} must be positive", self.epsilon)));
        }
        if !(self.grid_step > 0.0 && self.grid_step <= 1e-2) {
            return Err(Error::Config(format!("grid step {} must lie in (0, 0.01]", self.grid_step)));
        }
        Ok(())
    }

    pub fn scale_count(&self) -> usize {
        self.r_max - self.r_min + 1
    }

    pub fn nfa_config(&self, sensor: SensorSize) -> NfaConfig {
        NfaConfig {
            epsilon: self.epsilon,
            image_area: sensor.area(),
            scale_count: self.scale_count(),
            orientation_count: self.theta_bins,
            max_branches: self.max_branches,
        }
    }
}

/// One junction branch.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    /// Scale in pixels.
    pub r: usize,
    pub bin: usize,
    /// Orientation in radians.
    pub theta: f64,
    /// Branch strength `ω`.
    pub strength: f64,
    /// Pixel count of the sector.
    pub sector_size: usize,
    /// `F(ω; J)` under the noise model.
    pub tail: f64,
    /// Number of tests of the owning junction times `tail`.
    pub nfa: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Junction {
    pub t: f64,
    pub x: u32,
    pub y: u32,
    pub branches: Vec<Branch>,
    /// Weakest branch strength.
    pub strength: f64,
    pub nfa: f64,
}

impl Junction {
    pub fn branch_count(&self) -> usize {
        self.branches.len()
    }
}

#[derive(Clone, Copy)]
struct Member {
    patch_idx: u16,
    lut_row: u32,
}

/// Reusable detector with cached sectors, gamma lookup and tail table.
pub struct Detector {
    cfg: DetectorConfig,
    nfa_cfg: NfaConfig,
    table: TailTable,
    /// `sectors[r - r_min][bin]`
    sectors: Vec<Vec<Vec<Member>>>,
    /// `γ` indexed by `offset * SOBEL_CODES + code`, offsets in the r_max patch.
    gamma_lut: Vec<f64>,
    tests: Vec<f64>,
}

impl Detector {
    pub fn new(cfg: DetectorConfig, sensor: SensorSize) -> Result<Self> {
        cfg.validate()?;
        let j_max = max_sector_size(&cfg)?;
        let density = GammaDensity::new(cfg.p, cfg.grid_step)?;
        let table = TailTable::build(&density, j_max, cfg.grid_step)?;
        Self::with_table(cfg, sensor, table)
    }

    /// Uses a prebuilt (e.g. cached) table; it must cover every sector size.
    pub fn with_table(cfg: DetectorConfig, sensor: SensorSize, table: TailTable) -> Result<Self> {
        cfg.validate()?;
        let nfa_cfg = cfg.nfa_config(sensor);
        nfa_cfg.validate()?;
        let j_max = max_sector_size(&cfg)?;
        let density_step = GammaDensity::new(cfg.p, cfg.grid_step)?.step();
        if !table.matches(cfg.p, density_step, cfg.grid_step, j_max) {
            return Err(Error::Config(format!(
                "tail table (p {}, steps {}/{}, J ≤ {}) does not match detector (p {}, step {}, J ≤ {j_max})",
                table.p(),
                table.density_step(),
                table.step(),
                table.j_max(),
                cfg.p,
                cfg.grid_step
            )));
        }

        let big = cfg.r_max as i32;
        let big_side = 2 * big + 1;
        let mut gamma_lut = vec![0.0; (big_side * big_side) as usize * SOBEL_CODES];
        for dy in -big..=big {
            for dx in -big..=big {
                let off = ((dy + big) * big_side + dx + big) as usize;
                if (dx, dy) == (0, 0) {
                    continue;
                }
                let alpha = offset_angle(dx, dy);
                for code in 0..SOBEL_CODES as u8 {
                    if code == ZERO_CODE {
                        continue;
                    }
                    let (gx, gy) = decode_sobel(code);
                    gamma_lut[off * SOBEL_CODES + code as usize] = gamma_value(normal_angle(gx, gy), alpha);
                }
            }
        }

        let mut sectors = Vec::new();
        for r in cfg.r_min..=cfg.r_max {
            let side = 2 * r as i32 + 1;
            let mut per_bin = Vec::with_capacity(cfg.theta_bins);
            for k in 0..cfg.theta_bins {
                let spec = SectorSpec::new(r, bin_angle(k, cfg.theta_bins), cfg.tau)?;
                let members = sector_members(&spec, r)?
                    .into_iter()
                    .map(|(dx, dy)| Member {
                        patch_idx: ((dy + r as i32) * side + dx + r as i32) as u16,
                        lut_row: (((dy + big) * big_side + dx + big) as usize * SOBEL_CODES) as u32,
                    })
                    .collect();
                per_bin.push(members);
            }
            sectors.push(per_bin);
        }

        let tests = (0..=cfg.max_branches)
            .map(|m| if m == 0 { f64::NAN } else { number_of_tests(&nfa_cfg, m).unwrap_or(f64::NAN) })
            .collect();

        Ok(Self {
            cfg,
            nfa_cfg,
            table,
            sectors,
            gamma_lut,
            tests,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    pub fn nfa_config(&self) -> &NfaConfig {
        &self.nfa_cfg
    }

    pub fn table(&self) -> &TailTable {
        &self.table
    }

    /// Per-scale gradient fields for a patch of radius at least `r_max`.
    pub fn fields(&self, patch: &TimestampPatch) -> Vec<GradientField> {
        (self.cfg.r_min..=self.cfg.r_max)
            .map(|r| gradient_field(&binarize(&patch.crop(r))))
            .collect()
    }

    /// `(ω, J)` for every bin at scale `r`, using the cached sectors.
    pub fn strengths(&self, field: &GradientField) -> Vec<(f64, usize)> {
        let codes: Vec<u8> = field.codes().collect();
        self.strengths_from_codes(field.radius(), &codes)
    }

    fn strengths_from_codes(&self, r: usize, codes: &[u8]) -> Vec<(f64, usize)> {
        self.sectors[r - self.cfg.r_min]
            .iter()
            .map(|members| {
                let omega = members
                    .iter()
                    .map(|m| self.gamma_lut[m.lut_row as usize + codes[m.patch_idx as usize] as usize])
                    .sum();
                (omega, members.len())
            })
            .collect()
    }

    /// Runs the full search on the local surface around `e`.
    pub fn detect(&self, e: &Event, gsae: &Gsae) -> Option<Junction> {
        let patch = gsae.extract_patch((e.x, e.y), self.cfg.r_max);
        self.detect_patch(&patch, e.t)
    }

    /// Detection on a patch of radius `r_max` centered on the event.
    pub fn detect_patch(&self, patch: &TimestampPatch, t: f64) -> Option<Junction> {
        let bins = self.cfg.theta_bins;
        // best (tail, scale index, omega, J) per bin
        let mut best: Vec<(f64, usize, f64, usize)> = vec![(f64::INFINITY, 0, 0.0, 0); bins];
        for (si, r) in (self.cfg.r_min..=self.cfg.r_max).enumerate() {
            let field = gradient_field(&binarize(&patch.crop(r)));
            let codes: Vec<u8> = field.codes().collect();
            for (k, (omega, j)) in self.strengths_from_codes(r, &codes).into_iter().enumerate() {
                let tail = self.table.lookup(omega, j).unwrap_or(1.0);
                if tail < best[k].0 {
                    best[k] = (tail, si, omega, j);
                }
            }
        }
        let significance: Vec<f64> = best.iter().map(|b| -b.0.max(f64::MIN_POSITIVE).ln()).collect();
        let mut candidates: Vec<Branch> = semi_local_maxima(&significance, self.cfg.maxima_window)
            .into_iter()
            .map(|k| {
                let (tail, si, omega, j) = best[k];
                Branch {
                    r: self.cfg.r_min + si,
                    bin: k,
                    theta: bin_angle(k, bins),
                    strength: omega,
                    sector_size: j,
                    tail,
                    nfa: f64::NAN,
                }
            })
            .collect();
        candidates.sort_by(|a, b| a.tail.total_cmp(&b.tail).then(a.bin.cmp(&b.bin)));

        let (x, y) = patch.center();
        assemble(&candidates, &self.tests, &self.cfg).map(|(branches, nfa)| {
            let strength = branches.iter().map(|b| b.strength).fold(f64::INFINITY, f64::min);
            Junction {
                t,
                x,
                y,
                branches,
                strength,
                nfa,
            }
        })
    }
}

fn separated(a: &Branch, b: &Branch, tau: f64) -> bool {
    let hw = (tau / a.r as f64).max(tau / b.r as f64);
    angle_dist(a.theta, b.theta) > 2.0 * hw
}

/// Picks the largest branch count whose strongest mutually separated
/// candidates are ε-meaningful. `tests[m]` is `#J(m)`.
fn assemble(candidates: &[Branch], tests: &[f64], cfg: &DetectorConfig) -> Option<(Vec<Branch>, f64)> {
    for m in (2..=cfg.max_branches).rev() {
        let mut chosen: Vec<&Branch> = Vec::with_capacity(m);
        for c in candidates {
            if chosen.iter().all(|b| separated(b, c, cfg.tau)) {
                chosen.push(c);
                if chosen.len() == m {
                    break;
                }
            }
        }
        if chosen.len() < m {
            continue;
        }
        let weakest = chosen.iter().map(|b| b.tail).fold(0.0, f64::max);
        let nfa = tests[m] * weakest;
        if nfa <= cfg.epsilon {
            let mut branches: Vec<Branch> = chosen
                .into_iter()
                .map(|b| Branch {
                    nfa: tests[m] * b.tail,
                    ..b.clone()
                })
                .collect();
            branches.sort_by_key(|b| b.bin);
            return Some((branches, nfa));
        }
    }
    None
}

/// Largest sector over all scales and bins.
pub fn max_sector_size(cfg: &DetectorConfig) -> Result<usize> {
    let mut best = 1;
    for r in cfg.r_min..=cfg.r_max {
        for k in 0..cfg.theta_bins {
            let spec = SectorSpec::new(r, bin_angle(k, cfg.theta_bins), cfg.tau)?;
            best = best.max(sector_members(&spec, r)?.len());
        }
    }
    Ok(best)
}
