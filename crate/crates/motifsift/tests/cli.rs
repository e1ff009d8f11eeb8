use std::path::Path;
use std::process::{Command, Output};

use motifsift::suite::SuiteConfig;
use serde_json::Value;

fn motifsift(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_motifsift"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn shipped_config_is_the_default_suite() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("default_synth.json");
    assert_eq!(
        SuiteConfig::load(&path).unwrap(),
        SuiteConfig::default_synth()
    );
}

#[test]
fn synth_deform_detect_match_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&motifsift(
        &[
            "synth",
            "--family",
            "symmetric_diamond",
            "--size",
            "320x200",
            "--seed",
            "4",
            "--out",
            "t.png",
        ],
        d,
    ));
    assert_eq!(json(&d.join("t.json"))["family"], "SymmetricDiamond");

    ok(&motifsift(
        &[
            "deform",
            "t.png",
            "--kind",
            "Zoom_Rotation",
            "--level",
            "3",
            "--out",
            "q.png",
            "--gt",
            "q.json",
        ],
        d,
    ));
    let gt = json(&d.join("q.json"));
    assert_eq!(gt["level"], 3);
    let truth: Vec<f64> = gt["H"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();

    let stdout = ok(&motifsift(
        &["detect", "t.png", "--out", "t.features.json"],
        d,
    ));
    let n = json(&d.join("t.features.json"))["features"]
        .as_array()
        .unwrap()
        .len();
    assert_eq!(stdout.trim(), format!("{n} features"));
    assert!(n > 50);

    let stdout = ok(&motifsift(
        &[
            "match",
            "t.png",
            "q.png",
            "--threshold",
            "0.6",
            "--ransac",
            "--seed",
            "3",
            "--out",
            "m.json",
            "--viz",
            "m.png",
        ],
        d,
    ));
    assert!(stdout.contains("RANSAC inliers"), "{stdout}");
    let m = json(&d.join("m.json"));
    assert_eq!(m["seed"], 3);
    let h: Vec<f64> = m["H"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let apply = |h: &[f64], x: f64, y: f64| {
        let w = h[6] * x + h[7] * y + h[8];
        (
            (h[0] * x + h[1] * y + h[2]) / w,
            (h[3] * x + h[4] * y + h[5]) / w,
        )
    };
    for (x, y) in [(100.0, 60.0), (220.0, 60.0), (220.0, 140.0), (100.0, 140.0)] {
        let (a, b) = (apply(&truth, x, y), apply(&h, x, y));
        assert!((a.0 - b.0).hypot(a.1 - b.1) < 2.0, "{a:?} vs {b:?}");
    }
    assert!(image::image_dimensions(d.join("m.png")).unwrap() == (640, 200));
}

#[test]
fn bench_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = r#"{
        "classes": [{"name": "tile", "motif": {"family": "RepetitiveTile", "width": 240, "height": 160,
                     "period": 24, "contrast": 0.8, "borderRows": 2, "seed": 1}}],
        "kinds": ["Blur", "Light"],
        "levels": [1, 4],
        "thresholds": [0.4, 0.8],
        "ransac": {"enabled": false},
        "outputPaths": {"csv": "out/r.csv"}
    }"#;
    std::fs::write(d.join("suite.json"), cfg).unwrap();
    let stdout = ok(&motifsift(
        &[
            "bench",
            "--config",
            "suite.json",
            "--deformed-dir",
            "deformed",
        ],
        d,
    ));
    assert_eq!(stdout.trim(), "8 records over 4 deformed images");
    assert!(d.join("deformed/tile_Blur-4.png").exists());

    let csv = std::fs::read_to_string(d.join("out/r.csv")).unwrap();
    assert_eq!(csv.lines().count(), 9);

    let stdout = ok(&motifsift(
        &[
            "report",
            "out/r.csv",
            "--kind",
            "blur",
            "--level",
            "1",
            "--threshold",
            "0.8",
        ],
        d,
    ));
    assert_eq!(stdout.trim(), "Blur-1_sift 0.8 100.00%");
    let md = ok(&motifsift(&["report", "out/r.csv"], d));
    assert!(md.contains("| Light-4_sift 0.4 |"), "{md}");
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = motifsift(&["detect", "missing.png"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("motifsift: "));

    let out = motifsift(&["synth", "--family", "paisley", "--out", "x.png"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(!d.join("x.png").exists());
}
