use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use annulus_scan::params::SectorParamsFile;
use annulus_scan::raster::{decode_any_file, encode};
use annulus_scan::synth::{self, SectorSpec, Texture};
use annulus_scan::{GrayImage, Point, Raster};
use serde_json::Value;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annulus-scan"))
        .args(args)
        .env_remove("ANNULUS_SCAN_THREADS")
        .output()
        .expect("spawn annulus-scan")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn spec(seed: u64, theta_deg: f64) -> SectorSpec {
    let (r_inner, r_outer) = (40.0, 250.0);
    SectorSpec {
        origin: Point::new(20.0 - r_inner * (theta_deg.to_radians() / 2.0).cos(), 256.0),
        theta_deg,
        r_inner,
        r_outer,
        canvas: (512, 512),
        texture: Texture::Speckle {
            seed,
            mean: 128,
            spread: 30,
        },
        background_level: 0,
        feather: false,
    }
}

/// Writes a rendered sector and returns its image path and truth.
fn sector_png(dir: &Path, name: &str, seed: u64, theta_deg: f64) -> PathBuf {
    let (img, _) = synth::render(&spec(seed, theta_deg)).unwrap();
    let path = dir.join(format!("{name}.png"));
    encode(&img, &path).unwrap();
    path
}

fn rectangle_png(dir: &Path) -> PathBuf {
    let mut img = GrayImage::filled(240, 200, 0).unwrap();
    for r in 20..220 {
        for c in 40..160 {
            img.put(r, c, 100 + ((r * 7 + c * 13) % 100) as u8);
        }
    }
    let path = dir.join("linear_probe.png");
    encode(&img, &path).unwrap();
    path
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn clean_batch_writes_one_file_per_image() {
    let dir = tempfile::tempdir().unwrap();
    let inputs: Vec<PathBuf> = (0..3)
        .map(|k| sector_png(dir.path(), &format!("s{k}"), k, 40.0 + 10.0 * k as f64))
        .collect();
    let out = dir.path().join("out");
    let mut args = vec!["extract", "--out-dir", s(&out)];
    args.extend(inputs.iter().map(|p| s(p)));
    let res = cli(&args);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    for k in 0..3 {
        let params =
            SectorParamsFile::from_json(&std::fs::read_to_string(out.join(format!("s{k}.json"))).unwrap()).unwrap();
        let truth = spec(k, 40.0 + 10.0 * k as f64).truth();
        assert!((params.theta_deg - truth.theta.to_degrees()).abs() < 0.5);
        assert_eq!(params.keypoints.origin, params.origin);
    }
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["succeeded"], 3);
    assert_eq!(summary["failed"], 0);
    let ids: Vec<&str> = summary["images"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["image_id"].as_str().unwrap())
        .collect();
    assert_eq!(ids, ["s0", "s1", "s2"]);
}

#[test]
fn linear_probe_in_batch_is_partial_failure() {
    let dir = tempfile::tempdir().unwrap();
    let good = sector_png(dir.path(), "good", 1, 60.0);
    let bad = rectangle_png(dir.path());
    let out = dir.path().join("out");
    let res = cli(&["extract", "-o", s(&out), s(&bad), s(&good)]);
    assert_eq!(code(&res), 2);
    assert!(out.join("good.json").exists());
    assert!(!out.join("linear_probe.json").exists());
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["succeeded"], 1);
    assert_eq!(summary["failed"], 1);
    assert_eq!(summary["images"][0]["image_id"], "linear_probe");
    assert_eq!(summary["images"][0]["error"]["code"], "NotConvex");
    assert_eq!(summary["images"][1]["status"], "ok");
}

#[test]
fn missing_input_is_a_usage_error_with_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let good = sector_png(dir.path(), "good", 1, 60.0);
    let out = dir.path().join("out");
    let res = cli(&["extract", "-o", s(&out), s(&good), s(&dir.path().join("absent.png"))]);
    assert_eq!(code(&res), 1);
    assert!(!out.exists());
}

#[test]
fn duplicate_image_ids_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = sector_png(dir.path(), "same", 1, 60.0);
    std::fs::create_dir(dir.path().join("b")).unwrap();
    let b = sector_png(&dir.path().join("b"), "same", 2, 60.0);
    let res = cli(&["extract", "-o", s(&dir.path().join("out")), s(&a), s(&b)]);
    assert_eq!(code(&res), 1);
}

#[test]
fn usage_and_config_errors_exit_one() {
    assert_eq!(code(&cli(&["extract"])), 1);
    assert_eq!(code(&cli(&["no-such-command"])), 1);
    assert_eq!(code(&cli(&["extract", "--ransac-iters", "0", "x.png"])), 1);
    assert_eq!(
        code(&cli(&[
            "linearise",
            "--in",
            "x.png",
            "--out",
            "y.png",
            "--interp",
            "cubic"
        ])),
        1
    );
    assert_eq!(code(&cli(&["--help"])), 0);
    assert_eq!(code(&cli(&["--version"])), 0);
    let env = Command::new(env!("CARGO_BIN_EXE_annulus-scan"))
        .args(["extract", "x.png"])
        .env("ANNULUS_SCAN_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(code(&env), 1);
}

#[test]
fn thread_cap_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let inputs: Vec<PathBuf> = (0..2)
        .map(|k| sector_png(dir.path(), &format!("t{k}"), k, 50.0))
        .collect();
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("out{threads}"));
        let mut args = vec!["extract", "-o", s(&out)];
        args.extend(inputs.iter().map(|p| s(p)));
        let res = Command::new(env!("CARGO_BIN_EXE_annulus-scan"))
            .args(&args)
            .env("ANNULUS_SCAN_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&res), 0);
        runs.push(std::fs::read(out.join("t1.json")).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn linearise_invert_round_trip_report() {
    let dir = tempfile::tempdir().unwrap();
    let img = sector_png(dir.path(), "rt", 3, 70.0);
    let out = dir.path().join("out");
    assert_eq!(code(&cli(&["extract", "-o", s(&out), s(&img)])), 0);
    let params = out.join("rt.json");
    let lin = dir.path().join("lin.png");
    let rec = dir.path().join("rec.png");
    let report = dir.path().join("report.json");
    assert_eq!(
        code(&cli(&[
            "linearise",
            "--in",
            s(&img),
            "--params",
            s(&params),
            "--out",
            s(&lin)
        ])),
        0
    );
    let res = cli(&[
        "invert",
        "--in",
        s(&lin),
        "--params",
        s(&params),
        "--out",
        s(&rec),
        "--reference",
        s(&img),
        "--report",
        s(&report),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let mse = read_json(&report)["roundtrip_mse"].as_f64().unwrap();
    assert!(mse <= 0.01, "{mse}");
    assert_eq!(decode_any_file(&rec).unwrap().dims(), (512, 512));
}

#[test]
fn linearise_without_params_estimates_the_sector() {
    let dir = tempfile::tempdir().unwrap();
    let img = sector_png(dir.path(), "np", 4, 60.0);
    let (masked, plain) = (dir.path().join("masked.png"), dir.path().join("plain.png"));
    assert_eq!(code(&cli(&["linearise", "--in", s(&img), "--out", s(&masked)])), 0);
    assert_eq!(
        code(&cli(&[
            "linearise",
            "--in",
            s(&img),
            "--out",
            s(&plain),
            "--no-mask",
            "--interp",
            "bilinear"
        ])),
        0
    );
    let (a, b) = (decode_any_file(&masked).unwrap(), decode_any_file(&plain).unwrap());
    assert_eq!(a.dims(), b.dims());
    assert!(a.width() > 100 && a.height() > 100);
}

#[test]
fn evaluate_identical_sets_reports_zero() {
    let dir = tempfile::tempdir().unwrap();
    let img = sector_png(dir.path(), "ev", 5, 50.0);
    let out = dir.path().join("out");
    assert_eq!(code(&cli(&["extract", "-o", s(&out), s(&img)])), 0);
    let report = dir.path().join("report.json");
    let params = out.join("ev.json");
    assert_eq!(
        code(&cli(&[
            "evaluate",
            "--pred",
            s(&params),
            "--gt",
            s(&params),
            "--out",
            s(&report)
        ])),
        0
    );
    let v = read_json(&report);
    assert_eq!(v["image_count"], 1);
    assert_eq!(v["maad_deg"]["mean"], 0.0);
    let per = v["per_keypoint_mse"].as_object().unwrap();
    assert_eq!(per.len(), 7);
    for entry in per.values() {
        assert_eq!(entry["mse"]["mean"], 0.0);
        assert_eq!(entry["mean_euclidean"]["mean"], 0.0);
    }
}

#[test]
fn evaluate_directory_against_synth_truth() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&spec(6, 60.0)).unwrap()).unwrap();
    let (img, truth) = (dir.path().join("case.png"), dir.path().join("truth").join("case.json"));
    assert_eq!(
        code(&cli(&[
            "synth",
            "--spec",
            s(&spec_path),
            "--out",
            s(&img),
            "--truth",
            s(&truth)
        ])),
        0
    );
    let out = dir.path().join("pred");
    assert_eq!(code(&cli(&["extract", "-o", s(&out), s(&img)])), 0);
    let report = dir.path().join("report.json");
    // summary.json sits in the prediction directory and is skipped
    assert_eq!(
        code(&cli(&[
            "evaluate",
            "--pred",
            s(&out),
            "--gt",
            s(&truth),
            "--out",
            s(&report)
        ])),
        0
    );
    let v = read_json(&report);
    assert_eq!(v["image_count"], 1);
    assert!(v["maad_deg"]["mean"].as_f64().unwrap() < 0.5);
    assert!(
        v["per_keypoint_mse"]["origin"]["mean_euclidean"]["mean"]
            .as_f64()
            .unwrap()
            < 3.0
    );
}

#[test]
fn evaluate_polygons_and_ssim() {
    let dir = tempfile::tempdir().unwrap();
    let params = {
        let img = sector_png(dir.path(), "pg", 7, 50.0);
        let out = dir.path().join("out");
        assert_eq!(code(&cli(&["extract", "-o", s(&out), s(&img)])), 0);
        out.join("pg.json")
    };
    let square = |side: f64| {
        serde_json::to_string(&[
            Point::new(0.0, 0.0),
            Point::new(0.0, side),
            Point::new(side, side),
            Point::new(side, 0.0),
        ])
        .unwrap()
    };
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    std::fs::write(&a, square(2.0)).unwrap();
    std::fs::write(&b, square(5.0)).unwrap();
    let img = sector_png(dir.path(), "ss", 8, 60.0);
    let report = dir.path().join("report.json");
    let res = cli(&[
        "evaluate",
        "--pred",
        s(&params),
        "--gt",
        s(&params),
        "--out",
        s(&report),
        "--polygons",
        s(&a),
        s(&b),
        "--ssim",
        s(&img),
        s(&img),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let v = read_json(&report);
    let pair = v["circularity_pair"].as_array().unwrap();
    assert!((pair[0].as_f64().unwrap() - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
    assert!(v["procrustes_disparity"].as_f64().unwrap().abs() < 1e-9);
    assert!((v["ms_ssim"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn synth_single_writes_image_and_truth() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    let sp = spec(9, 45.0);
    std::fs::write(&spec_path, serde_json::to_string(&sp).unwrap()).unwrap();
    let corruption = dir.path().join("corruption.json");
    std::fs::write(&corruption, r#"{"noise_sigma": 8.0}"#).unwrap();
    let (img, truth) = (dir.path().join("one.png"), dir.path().join("one.truth.json"));
    let res = cli(&[
        "synth",
        "--spec",
        s(&spec_path),
        "--out",
        s(&img),
        "--truth",
        s(&truth),
        "--corruption",
        s(&corruption),
        "--seed",
        "3",
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let params = SectorParamsFile::from_json(&std::fs::read_to_string(&truth).unwrap()).unwrap();
    assert_eq!(params.sector(), sp.truth());
    assert_eq!(decode_any_file(&img).unwrap().dims(), (512, 512));
    assert_eq!(code(&cli(&["synth", "--spec", s(&spec_path)])), 1);
}

#[test]
fn synth_rejects_a_sector_outside_the_canvas() {
    let dir = tempfile::tempdir().unwrap();
    let mut sp = spec(1, 40.0);
    sp.r_outer = 900.0;
    let spec_path = dir.path().join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(&sp).unwrap()).unwrap();
    let res = cli(&[
        "synth",
        "--spec",
        s(&spec_path),
        "--out",
        s(&dir.path().join("x.png")),
        "--truth",
        s(&dir.path().join("x.json")),
    ]);
    assert_eq!(code(&res), 1);
    assert!(!dir.path().join("x.png").exists());
}

#[test]
fn overlay_draws_on_a_copy() {
    let dir = tempfile::tempdir().unwrap();
    let img = sector_png(dir.path(), "ov", 10, 60.0);
    let before = std::fs::read(&img).unwrap();
    let out = dir.path().join("overlay.png");
    assert_eq!(code(&cli(&["overlay", "--in", s(&img), "--out", s(&out)])), 0);
    assert_eq!(std::fs::read(&img).unwrap(), before);
    let drawn = decode_any_file(&out).unwrap();
    assert_eq!(drawn.channels(), 3);
    assert_eq!(drawn.dims(), (512, 512));
    let orange = drawn.data().chunks(3).filter(|p| p == &[255, 150, 20]).count();
    // seven crosses, partly clipped or overlapping at most
    assert!(orange > 7 * 20, "{orange}");
}

#[test]
fn extract_debug_images() {
    let dir = tempfile::tempdir().unwrap();
    let img = sector_png(dir.path(), "dbg", 11, 60.0);
    let out = dir.path().join("out");
    assert_eq!(
        code(&cli(&[
            "extract",
            "-o",
            s(&out),
            "--save-mask",
            "--save-symmetry-plot",
            s(&img)
        ])),
        0
    );
    let mask = decode_any_file(out.join("dbg.mask.png")).unwrap();
    assert_eq!(mask.dims(), (512, 512));
    assert!(mask.data().iter().all(|&v| v == 0 || v == 255));
    assert_eq!(decode_any_file(out.join("dbg.symmetry.png")).unwrap().width(), 512);
}
