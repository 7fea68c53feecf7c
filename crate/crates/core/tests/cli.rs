use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use mvjoint::io::load_pgm_raw;

fn mvjoint(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvjoint")).args(args).output().expect("spawn mvjoint")
}

fn synth(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["synth", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    mvjoint(&args)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let flags = ["--kind", "textured-ramp", "--width", "40", "--height", "32", "--seed", "17"];
    assert!(synth(&a, &flags).status.success());
    assert!(synth(&b, &flags).status.success());
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.iter().any(|(n, _)| n == "view_1.png"));
    assert_eq!(fa, fb);
}

#[test]
fn zero_shift_plane_gives_identical_views() {
    let dir = tempfile::tempdir().unwrap();
    let flags = ["--kind", "translated-plane", "--width", "24", "--height", "24", "--shift", "0"];
    assert!(synth(dir.path(), &flags).status.success());
    let read = |n: &str| std::fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("view_0.png"), read("view_1.png"));
}

#[test]
fn hole_strip_is_as_wide_as_the_shift_difference() {
    let dir = tempfile::tempdir().unwrap();
    let flags = [
        "--kind",
        "two-plane-occlusion",
        "--width",
        "48",
        "--height",
        "48",
        "--shift",
        "2",
        "--foreground-shift",
        "7",
    ];
    let out = synth(dir.path(), &flags);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (w, h, holes) = load_pgm_raw(dir.path().join("holes_1.pgm")).unwrap();
    let per_row: Vec<usize> = (0..h).map(|r| holes[r * w..(r + 1) * w].iter().filter(|&&v| v > 0).count()).collect();
    let (min, max) = (*per_row.iter().min().unwrap(), *per_row.iter().max().unwrap());
    // background rows only lose the border strip; foreground rows add the uncovered strip
    assert_eq!(min, 2);
    assert_eq!(max - min, 5);
}

#[test]
fn full_run_echoes_parameters_and_finishes_quickly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("full.json");
    std::fs::write(
        &cfg,
        r#"{
            "scene": {"kind": "translated-plane", "width": 64, "height": 64, "shift": 3, "seed": 7},
            "depth": {"lambda": 190, "tau": 4},
            "solver": {"epsilon1": 3, "epsilon2": 2}
        }"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let start = Instant::now();
    let run = mvjoint(&["full", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(start.elapsed() < Duration::from_secs(300));
    let report = std::fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(report.starts_with("mvjoint report"));
    for line in ["lambda = 190", "tau = 4", "epsilon1 = 3", "epsilon2 = 2"] {
        assert!(report.lines().any(|l| l == line), "{line} missing from\n{report}");
    }
    for name in ["rd.csv", "rd.svg", "report.json", "qp_40/reconstructed_1.png", "qp_40/depth.pgm"] {
        assert!(out.join(name).is_file(), "{name}");
    }
}

#[test]
fn missing_views_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"codec": {"qp": 30}}"#).unwrap();
    let out = dir.path().join("o");
    let run = mvjoint(&["compress", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("views"));
}

#[test]
fn bad_flag_is_a_usage_error() {
    let run = mvjoint(&["synth", "--width", "many"]);
    assert_eq!(run.status.code(), Some(2));
}
