//! Event-based junction detection with a-contrario validation.
//!
//! Events update a global surface of active events. Each event that passes
//! an Arc*-style prefilter is tested for a junction: branches are scored by
//! their gradient alignment and validated against a noise model through the
//! number of false alarms. Nearby detections are then thinned in space and
//! time.

pub mod acontrario;
pub mod config;
pub mod detector;
pub mod error;
pub mod eval;
pub mod event;
pub mod filter;
pub mod output;
pub mod pipeline;
pub mod sae;
pub mod synth;

pub use config::PipelineConfig;
pub use detector::{Detector, DetectorConfig, Junction};
pub use error::{Error, Result};
pub use event::{Event, Polarity, SensorSize};
pub use output::JunctionRecord;
pub use sae::{Gsae, TimestampPatch};
