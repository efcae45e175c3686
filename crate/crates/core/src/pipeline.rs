//! Stream orchestration: surface update, prefilter, detection, refinement.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use crate::acontrario::{GammaDensity, TailTable};
use crate::config::PipelineConfig;
use crate::detector::{max_sector_size, Detector, DetectorConfig, Junction, Refiner};
use crate::error::{Error, Result};
use crate::event::Event;
use crate::filter::is_candidate;
use crate::sae::Gsae;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StageTimes {
    pub surface: Duration,
    pub filter: Duration,
    pub detect: Duration,
    pub refine: Duration,
    pub total: Duration,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RunReport {
    pub events: u64,
    /// Full-detector invocations.
    pub candidates: u64,
    /// Junctions accepted by the detector before refinement.
    pub detections: u64,
    pub emitted: u64,
    pub suppressed: u64,
    pub times: StageTimes,
}

impl RunReport {
    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "events = {}", self.events)?;
        writeln!(w, "candidates = {}", self.candidates)?;
        writeln!(w, "detections = {}", self.detections)?;
        writeln!(w, "emitted = {}", self.emitted)?;
        writeln!(w, "suppressed = {}", self.suppressed)?;
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        writeln!(w, "time_surface_ms = {:.3}", ms(self.times.surface))?;
        writeln!(w, "time_filter_ms = {:.3}", ms(self.times.filter))?;
        writeln!(w, "time_detect_ms = {:.3}", ms(self.times.detect))?;
        writeln!(w, "time_refine_ms = {:.3}", ms(self.times.refine))?;
        writeln!(w, "time_total_ms = {:.3}", ms(self.times.total))
    }
}

/// Incremental pipeline. Events must arrive in non-decreasing time.
pub struct Pipeline<'a> {
    detector: &'a Detector,
    cfg: PipelineConfig,
    gsae: Gsae,
    refiner: Refiner,
    report: RunReport,
    last_t: f64,
    started: Instant,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &PipelineConfig, detector: &'a Detector) -> Result<Self> {
        cfg.validate()?;
        if detector.config() != &cfg.detector {
            return Err(Error::Config("detector was built with a different configuration".into()));
        }
        if cfg.detector.r_max < cfg.filter.patch_radius() {
            return Err(Error::Config("r_max must cover the prefilter circles".into()));
        }
        Ok(Self {
            detector,
            cfg: cfg.clone(),
            gsae: Gsae::new(cfg.sensor),
            refiner: Refiner::new(cfg.refine),
            report: RunReport::default(),
            last_t: f64::NEG_INFINITY,
            started: Instant::now(),
        })
    }

    /// Feeds one event; junctions that can no longer be suppressed are
    /// appended to `out` in timestamp order.
    pub fn push(&mut self, e: &Event, out: &mut Vec<Junction>) -> Result<()> {
        if e.t < self.last_t {
            return Err(Error::Param(format!(
                "event at t={} arrives after t={}; streams must be time-ordered",
                e.t, self.last_t
            )));
        }
        self.last_t = e.t;
        self.report.events += 1;

        let t0 = Instant::now();
        self.gsae.update(e)?;
        let patch = self.gsae.extract_patch((e.x, e.y), self.cfg.detector.r_max);
        let t1 = Instant::now();
        self.report.times.surface += t1 - t0;

        if self.cfg.prefilter {
            let pass = is_candidate(&patch.crop(self.cfg.filter.patch_radius()), &self.cfg.filter)?;
            let t2 = Instant::now();
            self.report.times.filter += t2 - t1;
            if !pass {
                return self.release(e.t, out);
            }
        }

        self.report.candidates += 1;
        let t2 = Instant::now();
        let found = self.detector.detect_patch(&patch, e.t);
        let t3 = Instant::now();
        self.report.times.detect += t3 - t2;

        let before = out.len();
        if let Some(j) = found {
            self.report.detections += 1;
            self.refiner.push(j, out);
        } else {
            self.refiner.advance(e.t, out);
        }
        self.report.emitted += (out.len() - before) as u64;
        self.report.times.refine += Instant::now() - t3;
        Ok(())
    }

    fn release(&mut self, now: f64, out: &mut Vec<Junction>) -> Result<()> {
        let t = Instant::now();
        let before = out.len();
        self.refiner.advance(now, out);
        self.report.emitted += (out.len() - before) as u64;
        self.report.times.refine += Instant::now() - t;
        Ok(())
    }

    pub fn finish(mut self, out: &mut Vec<Junction>) -> RunReport {
        let before = out.len();
        self.refiner.finish(out);
        self.report.emitted += (out.len() - before) as u64;
        self.report.suppressed = self.refiner.suppressed() as u64;
        self.report.times.total = self.started.elapsed();
        self.report
    }
}

/// Runs a whole stream, handing each released junction to `sink`.
pub fn run<I, F>(cfg: &PipelineConfig, detector: &Detector, events: I, mut sink: F) -> Result<RunReport>
where
    I: IntoIterator<Item = Result<Event>>,
    F: FnMut(&Junction) -> Result<()>,
{
    let mut p = Pipeline::new(cfg, detector)?;
    let mut buf = Vec::new();
    for e in events {
        p.push(&e?, &mut buf)?;
        for j in buf.drain(..) {
            sink(&j)?;
        }
    }
    let report = p.finish(&mut buf);
    for j in &buf {
        sink(j)?;
    }
    Ok(report)
}

pub fn run_events(cfg: &PipelineConfig, detector: &Detector, events: &[Event]) -> Result<(Vec<Junction>, RunReport)> {
    let mut out = Vec::new();
    let report = run(cfg, detector, events.iter().copied().map(Ok), |j| {
        out.push(j.clone());
        Ok(())
    })?;
    Ok((out, report))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedupReport {
    pub with_filter: RunReport,
    pub without_filter: RunReport,
    /// Detector invocations with the prefilter over those without.
    pub invocation_ratio: f64,
    /// Wall clock without the prefilter over wall clock with it.
    pub speedup: f64,
}

impl SpeedupReport {
    pub fn write(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "invocations_with_filter = {}", self.with_filter.candidates)?;
        writeln!(w, "invocations_without_filter = {}", self.without_filter.candidates)?;
        writeln!(w, "invocation_ratio = {:.4}", self.invocation_ratio)?;
        writeln!(w, "wall_with_filter_ms = {:.3}", self.with_filter.times.total.as_secs_f64() * 1e3)?;
        writeln!(w, "wall_without_filter_ms = {:.3}", self.without_filter.times.total.as_secs_f64() * 1e3)?;
        writeln!(w, "speedup = {:.2}", self.speedup)
    }
}

/// Processes the same stream with and without the prefilter.
pub fn speedup_report(cfg: &PipelineConfig, detector: &Detector, events: &[Event]) -> Result<SpeedupReport> {
    let mut on = cfg.clone();
    on.prefilter = true;
    let mut off = cfg.clone();
    off.prefilter = false;
    let (_, with_filter) = run_events(&on, detector, events)?;
    let (_, without_filter) = run_events(&off, detector, events)?;
    let invocation_ratio = if without_filter.candidates == 0 {
        1.0
    } else {
        with_filter.candidates as f64 / without_filter.candidates as f64
    };
    let speedup = without_filter.times.total.as_secs_f64() / with_filter.times.total.as_secs_f64().max(1e-12);
    Ok(SpeedupReport {
        with_filter,
        without_filter,
        invocation_ratio,
        speedup,
    })
}

/// Tail table for a detector configuration, read from `cache` when it holds
/// a matching table and (re)written there otherwise.
pub fn load_or_build_table(cfg: &DetectorConfig, cache: Option<&Path>) -> Result<TailTable> {
    cfg.validate()?;
    let j_max = max_sector_size(cfg)?;
    let density = GammaDensity::new(cfg.p, cfg.grid_step)?;
    if let Some(path) = cache {
        if path.exists() {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            match TailTable::read_from(BufReader::new(file)) {
                Ok(t) if t.matches(cfg.p, density.step(), cfg.grid_step, j_max) => return Ok(t),
                Ok(_) => log::info!("tail cache {} does not match the configuration; rebuilding", path.display()),
                Err(e) => log::warn!("ignoring unreadable tail cache {}: {e}", path.display()),
            }
        }
    }
    let table = TailTable::build(&density, j_max, cfg.grid_step)?;
    if let Some(path) = cache {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        table
            .write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Polarity, SensorSize};

    fn small_cfg() -> PipelineConfig {
        let mut c = PipelineConfig::default();
        c.sensor = SensorSize::new(64, 48);
        c
    }

    #[test]
    fn empty_input() {
        let cfg = small_cfg();
        let det = Detector::new(cfg.detector.clone(), cfg.sensor).unwrap();
        let (out, rep) = run_events(&cfg, &det, &[]).unwrap();
        assert!(out.is_empty());
        assert_eq!((rep.events, rep.candidates, rep.detections, rep.emitted), (0, 0, 0, 0));
    }

    #[test]
    fn out_of_order_is_rejected() {
        let cfg = small_cfg();
        let det = Detector::new(cfg.detector.clone(), cfg.sensor).unwrap();
        let ev = [Event::new(1.0, 5, 5, Polarity::On), Event::new(0.5, 6, 5, Polarity::On)];
        assert!(matches!(run_events(&cfg, &det, &ev), Err(Error::Param(_))));
    }

    #[test]
    fn mismatched_detector_is_rejected() {
        let cfg = small_cfg();
        let mut other = cfg.detector.clone();
        other.tau = 1.5;
        let det = Detector::new(other, cfg.sensor).unwrap();
        assert!(Pipeline::new(&cfg, &det).is_err());
    }

    #[test]
    fn prefilter_off_invokes_on_every_event() {
        let mut cfg = small_cfg();
        cfg.prefilter = false;
        let det = Detector::new(cfg.detector.clone(), cfg.sensor).unwrap();
        let ev: Vec<Event> = (0..50).map(|i| Event::new(i as f64 * 1e-3, (i % 60) as u32, 10, Polarity::On)).collect();
        let (_, rep) = run_events(&cfg, &det, &ev).unwrap();
        assert_eq!(rep.candidates, 50);
        assert!(rep.emitted <= rep.detections && rep.detections <= rep.candidates);
    }

    #[test]
    fn tail_cache_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tail.bin");
        let mut cfg = DetectorConfig::default();
        cfg.r_max = 6;
        let a = load_or_build_table(&cfg, Some(&path)).unwrap();
        assert!(path.exists());
        let b = load_or_build_table(&cfg, Some(&path)).unwrap();
        assert_eq!(a, b);
        // a different p forces a rebuild
        cfg.p = 0.3;
        let c = load_or_build_table(&cfg, Some(&path)).unwrap();
        assert_eq!(c.p(), 0.3);
    }
}
