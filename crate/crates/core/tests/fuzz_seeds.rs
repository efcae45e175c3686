use std::fs;
use std::path::PathBuf;

use eacj::acontrario::TailTable;
use eacj::eval::TrackFile;
use eacj::event::read_events;
use eacj::output::parse_junctions;
use eacj::synth::{parse_truth, SceneSpec};
use eacj::{PipelineConfig, SensorSize};

fn seeds(target: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = fs::read(&p).unwrap();
            (p, bytes)
        })
        .collect();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out.sort();
    out
}

fn text(b: &[u8]) -> &str {
    std::str::from_utf8(b).unwrap()
}

#[test]
fn every_seed_is_valid_input() {
    for (p, b) in seeds("event_line") {
        read_events(&b[..], SensorSize::default()).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, b) in seeds("junction_line") {
        parse_junctions(text(&b)).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, b) in seeds("track_file") {
        TrackFile::parse(text(&b)).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, b) in seeds("truth_file") {
        parse_truth(text(&b)).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, b) in seeds("scene_spec") {
        SceneSpec::parse(text(&b)).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, b) in seeds("config") {
        PipelineConfig::parse(text(&b)).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
    for (p, b) in seeds("tail_table") {
        TailTable::decode(&b).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
    }
}
