//! Estimation of the gradient-presence probability `p` from real streams.

use crate::detector::binary::{binarize, gradient_field, gradient_fraction};
use crate::error::{Error, Result};
use crate::event::{Event, SensorSize};
use crate::sae::Gsae;

/// Value used when `p` is not estimated.
pub const DEFAULT_P: f64 = 0.21;

/// Patch radius used for estimation (the largest detector scale).
const RADIUS: usize = 15;

/// Replays a stream into its own surface and averages, over sampled events,
/// the fraction of interior pixels with a nonzero Sobel response on the
/// binarized neighborhood.
pub struct PEstimator {
    gsae: Gsae,
    stride: usize,
    seen: usize,
    sum: f64,
    samples: usize,
}

impl PEstimator {
    /// Samples every `stride`-th event (at least 1).
    pub fn new(sensor: SensorSize, stride: usize) -> Self {
        Self {
            gsae: Gsae::new(sensor),
            stride: stride.max(1),
            seen: 0,
            sum: 0.0,
            samples: 0,
        }
    }

    pub fn push(&mut self, e: &Event) -> Result<()> {
        self.gsae.update(e)?;
        if self.seen.is_multiple_of(self.stride) {
            let patch = self.gsae.extract_patch((e.x, e.y), RADIUS);
            self.sum += gradient_fraction(&gradient_field(&binarize(&patch)));
            self.samples += 1;
        }
        self.seen += 1;
        Ok(())
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn mean(&self) -> Result<f64> {
        if self.samples == 0 {
            return Err(Error::Param("cannot estimate p from an empty sample".into()));
        }
        Ok(self.sum / self.samples as f64)
    }
}

pub fn estimate_p(events: &[Event], sensor: SensorSize, stride: usize) -> Result<f64> {
    let mut est = PEstimator::new(sensor, stride);
    for e in events {
        est.push(e)?;
    }
    est.mean()
}

/// Per-dataset means and the selected (largest) value.
#[derive(Clone, Debug, PartialEq)]
pub struct PEstimate {
    pub per_dataset: Vec<f64>,
    pub max: f64,
}

pub fn estimate_p_datasets(datasets: &[Vec<Event>], sensor: SensorSize, stride: usize) -> Result<PEstimate> {
    if datasets.is_empty() {
        return Err(Error::Param("no datasets given".into()));
    }
    let per_dataset = datasets
        .iter()
        .map(|d| estimate_p(d, sensor, stride))
        .collect::<Result<Vec<_>>>()?;
    let max = per_dataset.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(PEstimate { per_dataset, max })
}
