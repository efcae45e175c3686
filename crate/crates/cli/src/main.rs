use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use eacj::acontrario::estimate_p_datasets;
use eacj::eval::{evaluate, write_report, TrackFile};
use eacj::event::{read_events, write_events, EventReader};
use eacj::output::{parse_junctions, render_overlay, write_junction, JunctionRecord};
use eacj::pipeline::{load_or_build_table, run, speedup_report};
use eacj::synth::{generate, write_truth, SceneSpec};
use eacj::{Detector, Event, PipelineConfig, SensorSize};

#[derive(Parser)]
#[command(name = "eacj", version, about = "Event-based a-contrario junction detection")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect junctions in an event stream.
    Detect(DetectArgs),
    /// Score a junction stream against reference tracks.
    Evaluate(EvaluateArgs),
    /// Estimate the gradient probability from one or more event files.
    EstimateP(EstimateArgs),
    /// Render a synthetic scene to events and ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
#[group(id = "input", required = true, multiple = false)]
struct Input {
    /// Event file, `t x y p` per line.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Scene description rendered on the fly.
    #[arg(long)]
    scene: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    input: Input,
    /// Junction output file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    no_prefilter: bool,
    /// PGM overlay of the junctions in the last window of the stream.
    #[arg(long)]
    overlay: Option<PathBuf>,
    #[arg(long)]
    tail_cache: Option<PathBuf>,
    /// Stage counts and timings.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Runs the stream with and without the prefilter and writes the comparison.
    #[arg(long)]
    speedup: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    junctions: PathBuf,
    /// `track_id t x y` per line.
    #[arg(long)]
    tracks: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Input events, needed for the negative counts.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Section name in the report (default: junction file stem).
    #[arg(long)]
    scene_name: Option<String>,
    #[arg(long, default_value_t = 240)]
    width: u32,
    #[arg(long, default_value_t = 180)]
    height: u32,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, num_args = 1.., required = true)]
    events: Vec<PathBuf>,
    #[arg(long, default_value_t = 240)]
    width: u32,
    #[arg(long, default_value_t = 180)]
    height: u32,
    /// Sample every n-th event.
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    out_events: PathBuf,
    #[arg(long)]
    out_truth: PathBuf,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_scene(path: &Path) -> Result<SceneSpec> {
    SceneSpec::parse(&read_text(path)?).with_context(|| format!("in scene {}", path.display()))
}

fn detect(a: DetectArgs) -> Result<()> {
    let mut cfg = PipelineConfig::parse(&read_text(&a.config)?).with_context(|| format!("in config {}", a.config.display()))?;
    if a.no_prefilter {
        cfg.prefilter = false;
    }
    let scene = match &a.input.scene {
        Some(p) => {
            let spec = load_scene(p)?;
            let stream = generate(&spec).with_context(|| format!("rendering {}", p.display()))?;
            Some((spec.sensor, stream))
        }
        None => None,
    };
    if let Some((size, _)) = &scene {
        let size = *size;
        if size != cfg.sensor {
            log::info!("using the scene sensor {}x{} instead of the configured one", size.width, size.height);
            cfg.sensor = size;
        }
    }
    cfg.validate()?;

    let table = load_or_build_table(&cfg.detector, a.tail_cache.as_deref()).context("preparing tail table")?;
    let detector = Detector::with_table(cfg.detector.clone(), cfg.sensor, table)?;

    let mut out = create(&a.out)?;
    let mut junctions: Vec<JunctionRecord> = Vec::new();
    let keep = a.overlay.is_some();
    let mut last_t = 0.0f64;
    let mut sink = |j: &eacj::Junction| -> eacj::Result<()> {
        let rec = JunctionRecord::from(j);
        write_junction(&mut out, &rec)?;
        if keep {
            junctions.push(rec);
        }
        Ok(())
    };

    let (report, events) = match (&scene, &a.input.events) {
        (Some((_, s)), _) => {
            last_t = s.events.last().map_or(0.0, |e| e.t);
            (run(&cfg, &detector, s.events.iter().copied().map(Ok), &mut sink)?, None)
        }
        (None, Some(path)) => {
            let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let reader = EventReader::new(BufReader::new(f), cfg.sensor);
            let mut kept = Vec::new();
            let want = a.speedup.is_some();
            let stream = reader.inspect(|r| {
                if let Ok(e) = r {
                    last_t = e.t;
                    if want {
                        kept.push(*e);
                    }
                }
            });
            let rep = run(&cfg, &detector, stream, &mut sink).with_context(|| format!("processing {}", path.display()))?;
            (rep, Some(kept))
        }
        (None, None) => unreachable!("clap requires an input"),
    };
    out.flush().with_context(|| format!("writing {}", a.out.display()))?;

    log::info!(
        "{} events, {} candidates, {} detections, {} emitted",
        report.events,
        report.candidates,
        report.detections,
        report.emitted
    );
    if let Some(path) = &a.report {
        let mut w = create(path)?;
        report.write(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &a.overlay {
        let img = render_overlay(&junctions, last_t, cfg.overlay_window, cfg.sensor)?;
        let mut w = create(path)?;
        img.write_pgm(&mut w)?;
        w.flush()?;
    }
    if let Some(path) = &a.speedup {
        let events: &[Event] = match (&scene, &events) {
            (Some((_, s)), _) => &s.events,
            (None, Some(e)) => e,
            _ => &[],
        };
        let rep = speedup_report(&cfg, &detector, events)?;
        let mut w = create(path)?;
        rep.write(&mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn evaluate_cmd(a: EvaluateArgs) -> Result<()> {
    let junctions = parse_junctions(&read_text(&a.junctions)?).with_context(|| format!("in {}", a.junctions.display()))?;
    let tracks = TrackFile::parse(&read_text(&a.tracks)?).with_context(|| format!("in {}", a.tracks.display()))?;
    let events = match &a.events {
        Some(p) => {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            Some(read_events(BufReader::new(f), SensorSize::new(a.width, a.height)).with_context(|| format!("in {}", p.display()))?)
        }
        None => None,
    };
    let name = a.scene_name.clone().unwrap_or_else(|| {
        a.junctions
            .file_stem()
            .map_or_else(|| "scene".to_string(), |s| s.to_string_lossy().into_owned())
    });
    let ev = evaluate(&junctions, events.as_deref(), &tracks);
    let mut w = create(&a.report)?;
    write_report(&mut w, &name, &ev)?;
    w.flush()?;
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<()> {
    if a.stride == 0 {
        bail!("--stride must be at least 1");
    }
    let sensor = SensorSize::new(a.width, a.height);
    let datasets = a
        .events
        .iter()
        .map(|p| {
            let f = File::open(p).with_context(|| format!("opening {}", p.display()))?;
            read_events(BufReader::new(f), sensor).with_context(|| format!("in {}", p.display()))
        })
        .collect::<Result<Vec<_>>>()?;
    let est = estimate_p_datasets(&datasets, sensor, a.stride)?;
    let stdout = io::stdout();
    let mut w = stdout.lock();
    for (p, v) in a.events.iter().zip(&est.per_dataset) {
        writeln!(w, "{} {v:.6}", p.display())?;
    }
    writeln!(w, "p = {:.6}", est.max)?;
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = load_scene(&a.scene)?;
    let stream = generate(&spec)?;
    let mut ev = create(&a.out_events)?;
    write_events(&mut ev, &stream.events)?;
    ev.flush()?;
    let mut tr = create(&a.out_truth)?;
    write_truth(&mut tr, &stream.truth)?;
    tr.flush()?;
    log::info!("{} events ({} structural)", stream.events.len(), stream.structural_count());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let res = match cli.command {
        Command::Detect(a) => detect(a),
        Command::Evaluate(a) => evaluate_cmd(a),
        Command::EstimateP(a) => estimate(a),
        Command::Synth(a) => synth(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
