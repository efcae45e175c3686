use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use eacj::eval::TrackFile;
use eacj::synth::parse_truth;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn eacj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eacj")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = eacj(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key)?.trim_start().strip_prefix('=').map(|v| v.trim().parse().unwrap()))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
}

#[test]
fn synth_detect_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (ev, truth, junc, rep, overlay) = (d.join("x.ev"), d.join("x.truth"), d.join("x.junc"), d.join("run.txt"), d.join("x.pgm"));
    let conf = fixture("default.conf");
    let scene = fixture("x_junction.scene");
    ok(&["synth", "--scene", s(&scene), "--out-events", s(&ev), "--out-truth", s(&truth)]);
    ok(&[
        "detect", "--config", s(&conf), "--events", s(&ev), "--out", s(&junc), "--report", s(&rep), "--overlay", s(&overlay),
    ]);

    let junctions = fs::read_to_string(&junc).unwrap();
    assert!(junctions.lines().count() > 0);
    let report = fs::read_to_string(&rep).unwrap();
    let events = report_value(&report, "events");
    let candidates = report_value(&report, "candidates");
    let detections = report_value(&report, "detections");
    assert_eq!(events as usize, fs::read_to_string(&ev).unwrap().lines().count());
    assert!(candidates < events && detections <= candidates, "{report}");

    let pgm = fs::read_to_string(&overlay).unwrap();
    assert!(pgm.starts_with("P2\n240 180\n255\n"));
    assert!(pgm.split_whitespace().skip(4).any(|v| v == "255"));

    // scene input gives the same stream as the rendered file
    let junc2 = d.join("scene.junc");
    ok(&["detect", "--config", s(&conf), "--scene", s(&scene), "--out", s(&junc2)]);
    assert_eq!(fs::read_to_string(&junc2).unwrap(), junctions);

    let tracks = d.join("x.tracks");
    let mut buf = Vec::new();
    TrackFile::from_truth(&parse_truth(&fs::read_to_string(&truth).unwrap()).unwrap())
        .write(&mut buf)
        .unwrap();
    fs::write(&tracks, buf).unwrap();
    let metrics = d.join("metrics.txt");
    ok(&[
        "evaluate", "--junctions", s(&junc), "--tracks", s(&tracks), "--report", s(&metrics), "--events", s(&ev),
    ]);
    let m = fs::read_to_string(&metrics).unwrap();
    assert!(m.starts_with("[x]\n"), "{m}");
    let tp = report_value(&m, "tp");
    let fp = report_value(&m, "fp");
    assert!(tp + fp + report_value(&m, "ignored_detections") == junctions.lines().count() as f64);
    assert!(report_value(&m, "tn") > 0.0);
}

#[test]
fn detection_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let conf = fixture("default.conf");
    let scene = fixture("textured.scene");
    ok(&["detect", "--config", s(&conf), "--scene", s(&scene), "--out", s(&a)]);
    ok(&["detect", "--config", s(&conf), "--scene", s(&scene), "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn empty_stream() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("empty.ev"), "").unwrap();
    ok(&[
        "detect", "--config", s(&fixture("default.conf")), "--events", s(&d.join("empty.ev")), "--out", s(&d.join("o")),
        "--report", s(&d.join("r")),
    ]);
    assert_eq!(fs::read_to_string(d.join("o")).unwrap(), "");
    let r = fs::read_to_string(d.join("r")).unwrap();
    for k in ["events", "candidates", "detections", "emitted"] {
        assert_eq!(report_value(&r, k), 0.0);
    }
}

#[test]
fn prefilter_cuts_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let conf = fixture("default.conf");
    let scene = fixture("textured.scene");
    let cache = d.join("tail.bin");
    let o = d.join("o");
    let mut counts = Vec::new();
    for extra in [None, Some("--no-prefilter")] {
        let rep = d.join("rep");
        let mut args = vec!["detect", "--config", s(&conf), "--scene", s(&scene), "--out", s(&o), "--report", s(&rep)];
        args.extend(["--tail-cache", s(&cache)]);
        args.extend(extra);
        ok(&args);
        counts.push(report_value(&fs::read_to_string(&rep).unwrap(), "candidates"));
    }
    assert!(cache.exists());
    assert!(counts[1] >= 2.0 * counts[0], "{counts:?}");

    let sp = d.join("speedup");
    ok(&["detect", "--config", s(&conf), "--scene", s(&scene), "--out", s(&d.join("o")), "--speedup", s(&sp)]);
    let text = fs::read_to_string(&sp).unwrap();
    assert!(report_value(&text, "invocation_ratio") <= 0.3, "{text}");
}

#[test]
fn estimate_p_prints_the_largest() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ev = d.join("x.ev");
    ok(&["synth", "--scene", s(&fixture("x_junction.scene")), "--out-events", s(&ev), "--out-truth", s(&d.join("t"))]);
    fs::write(d.join("one.ev"), "0.5 100 100 1\n").unwrap();
    let out = ok(&["estimate-p", "--events", s(&ev), s(&d.join("one.ev"))]);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3, "{text}");
    let per: Vec<f64> = lines[..2].iter().map(|l| l.rsplit(' ').next().unwrap().parse().unwrap()).collect();
    let p = report_value(lines[2], "p");
    assert_eq!(p, per[0].max(per[1]));
    assert!(p > 0.0 && p <= 1.0);
}

#[test]
fn errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("bad.conf"), "acj.p = 0.2\nacj.bogus = 1\n").unwrap();
    fs::write(d.join("e.ev"), "0.1 1 1 1\n").unwrap();
    let out = eacj(&["detect", "--config", s(&d.join("bad.conf")), "--events", s(&d.join("e.ev")), "--out", s(&d.join("o"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("bad.conf"), "{err}");

    fs::write(d.join("bad.ev"), "0.2 1 1 1\n0.1 1 1 1\n").unwrap();
    let out = eacj(&["detect", "--config", s(&fixture("default.conf")), "--events", s(&d.join("bad.ev")), "--out", s(&d.join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    // exactly one input source
    let out = eacj(&["detect", "--config", s(&fixture("default.conf")), "--out", s(&d.join("o"))]);
    assert!(!out.status.success());
    let missing = eacj(&["synth", "--scene", s(&d.join("nope")), "--out-events", "a", "--out-truth", "b"]);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nope"));
}
