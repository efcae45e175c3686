//! Spatiotemporal suppression of nearby junctions.
//!
//! Two junctions conflict when they are within `r_d` pixels AND within `T`
//! seconds of each other; of a conflicting pair only the one with the smaller
//! NFA survives. Junctions further apart in either space or time never
//! interact.

use std::collections::VecDeque;

use super::Junction;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefineConfig {
    /// Suppression radius in pixels.
    pub r_d: f64,
    /// Suppression time window in seconds.
    pub t_window: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            r_d: 5.0,
            t_window: 0.005,
        }
    }
}

pub fn conflicts(a: &Junction, b: &Junction, cfg: &RefineConfig) -> bool {
    let dx = a.x as f64 - b.x as f64;
    let dy = a.y as f64 - b.y as f64;
    (dx * dx + dy * dy).sqrt() <= cfg.r_d && (a.t - b.t).abs() <= cfg.t_window
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    /// The new junction survives; the listed buffer positions are removed.
    Accept { evict: Vec<usize> },
    Reject,
}

/// Decides the fate of `j` against the buffered junctions. A tie in NFA keeps
/// the junction already buffered.
pub fn refine(j: &Junction, recent: &VecDeque<Junction>, cfg: &RefineConfig) -> Verdict {
    let mut evict = Vec::new();
    for (i, other) in recent.iter().enumerate() {
        if conflicts(j, other, cfg) {
            if other.nfa <= j.nfa {
                return Verdict::Reject;
            }
            evict.push(i);
        }
    }
    Verdict::Accept { evict }
}

/// Streaming refinement stage. Junctions are held until no later junction can
/// conflict with them, then released in timestamp order.
#[derive(Clone, Debug)]
pub struct Refiner {
    cfg: RefineConfig,
    buffer: VecDeque<Junction>,
    suppressed: usize,
}

impl Refiner {
    pub fn new(cfg: RefineConfig) -> Self {
        Self {
            cfg,
            buffer: VecDeque::new(),
            suppressed: 0,
        }
    }

    /// Number of junctions removed so far (rejected or evicted).
    pub fn suppressed(&self) -> usize {
        self.suppressed
    }

    /// Releases every buffered junction older than `now - T`.
    pub fn advance(&mut self, now: f64, out: &mut Vec<Junction>) {
        while let Some(front) = self.buffer.front() {
            if front.t < now - self.cfg.t_window {
                out.push(self.buffer.pop_front().expect("front exists"));
            } else {
                break;
            }
        }
    }

    /// Offers a junction; junctions must arrive in non-decreasing time.
    pub fn push(&mut self, j: Junction, out: &mut Vec<Junction>) {
        self.advance(j.t, out);
        match refine(&j, &self.buffer, &self.cfg) {
            Verdict::Reject => self.suppressed += 1,
            Verdict::Accept { evict } => {
                for &i in evict.iter().rev() {
                    self.buffer.remove(i);
                }
                self.suppressed += evict.len();
                self.buffer.push_back(j);
            }
        }
    }

    pub fn finish(&mut self, out: &mut Vec<Junction>) {
        out.extend(self.buffer.drain(..));
    }
}
