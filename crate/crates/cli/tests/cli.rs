use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fpcam_cli::manifest::{content_hash, read_manifest, HASH_KEY};

fn fpcam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpcam"))
        .args(args)
        .env_remove("FPCAM_OUT")
        .output()
        .expect("spawn fpcam")
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    fs::write(&p, body).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const SMALL: &str = r#"
seed = 11
[geometry]
sensor_rows = 4
sensor_cols = 4
block_rows = 4
block_cols = 4
[patterns]
kind = "random-binary"
count = 4
[scene]
kind = "checker"
size = 4
"#;

#[test]
fn missing_required_key_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "[scene]\nkind = \"bars\"\n");
    let out = fpcam(&["simulate", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_flag_and_missing_file_codes() {
    let out = fpcam(&["simulate", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    let tmp = tempfile::tempdir().unwrap();
    let out = fpcam(&["reconstruct", "--capture", s(&tmp.path().join("nowhere")), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_writes_one_raster_and_pattern_per_measurement() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let dir = tmp.path().join("cap");
    let out = fpcam(&["simulate", "--config", s(&cfg), "--out", s(&dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for t in 0..4 {
        assert!(dir.join(format!("sensor_{t:04}.fpfr")).is_file());
        assert!(dir.join(format!("pattern_{t:04}.pbm")).is_file());
    }
    assert!(!dir.join("sensor_0004.fpfr").exists());
    let m = read_manifest(&dir).unwrap();
    assert_eq!(m["captures"], "4");
    assert_eq!(m["alpha"], "4");
    assert_eq!(m[HASH_KEY], content_hash(&dir).unwrap());
    let pbm = fs::read(dir.join("pattern_0000.pbm")).unwrap();
    assert!(pbm.starts_with(b"P1\n16 16\n"));
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[noise]\nsnr_db = 30.0\n"));
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert!(fpcam(&["simulate", "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert!(fpcam(&["simulate", "--config", s(&cfg), "--out", s(&b)]).status.success());
    let mut names: Vec<_> = fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    for n in names {
        assert_eq!(fs::read(a.join(&n)).unwrap(), fs::read(b.join(&n)).unwrap(), "{n:?}");
    }
    // rerunning into an existing output directory replaces it
    assert!(fpcam(&["simulate", "--config", s(&cfg), "--out", s(&a)]).status.success());
    assert_eq!(read_manifest(&a).unwrap()[HASH_KEY], read_manifest(&b).unwrap()[HASH_KEY]);
}

#[test]
fn refuses_foreign_non_empty_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let dir = tmp.path().join("mine");
    fs::create_dir_all(&dir).unwrap();
    fs::write(dir.join("notes.txt"), "keep").unwrap();
    let out = fpcam(&["simulate", "--config", s(&cfg), "--out", s(&dir)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(fs::read_to_string(dir.join("notes.txt")).unwrap(), "keep");
}

#[test]
fn pixel_scan_reconstruction_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
seed = 3
[geometry]
sensor_rows = 4
sensor_cols = 4
block_rows = 4
block_cols = 4
[patterns]
kind = "pixel-scan"
count = 16
[scene]
kind = "usaf"
[solver]
max_iters = 3000
tol = 0.0
"#;
    let cfg = write_config(tmp.path(), body);
    let cap = tmp.path().join("cap");
    let rec = tmp.path().join("rec");
    assert!(fpcam(&["simulate", "--config", s(&cfg), "--out", s(&cap)]).status.success());
    let out = fpcam(&["reconstruct", "--capture", s(&cap), "--out", s(&rec), "--lambda", "1e-12"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_manifest(&rec).unwrap();
    let err: f64 = m["relative_error"].parse().unwrap();
    assert!(err <= 1e-6, "relative error {err}");
    assert!(rec.join("estimate_0000.pgm").is_file());
}

#[test]
fn objective_trace_never_increases() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{SMALL}\n[noise]\nsnr_db = 20.0\n"));
    let cap = tmp.path().join("cap");
    let rec = tmp.path().join("rec");
    assert!(fpcam(&["simulate", "--config", s(&cfg), "--out", s(&cap)]).status.success());
    let out = fpcam(&["reconstruct", "--capture", s(&cap), "--out", s(&rec), "--lambda", "0.01", "--max-iters", "200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(rec.join("objective.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("iteration,objective,data_term,tv_term"));
    let obj: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(!obj.is_empty());
    for w in obj.windows(2) {
        assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
    }
}

#[test]
fn three_d_tv_on_single_frame_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let cap = tmp.path().join("cap");
    assert!(fpcam(&["simulate", "--config", s(&cfg), "--out", s(&cap)]).status.success());
    let out = fpcam(&["reconstruct", "--capture", s(&cap), "--out", s(&tmp.path().join("r")), "--tv", "3d"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn moving_scene_reconstructs_several_frames() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
seed = 5
[geometry]
sensor_rows = 4
sensor_cols = 4
block_rows = 4
block_cols = 4
[patterns]
count = 8
[scene]
kind = "moving"
height = 4
width = 4
top = 4
left = 2
velocity = [0.0, 1.0]
[solver]
max_iters = 50
"#;
    let cfg = write_config(tmp.path(), body);
    let cap = tmp.path().join("cap");
    let rec = tmp.path().join("rec");
    let out = fpcam(&["simulate", "--config", s(&cfg), "--out", s(&cap)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(cap.join("scene_0007.fpfr").is_file());
    let out = fpcam(&["reconstruct", "--capture", s(&cap), "--out", s(&rec), "--tv", "3d", "--group-size", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(rec.join("estimate_0001.fpfr").is_file());
    assert!(!rec.join("estimate_0002.fpfr").exists());
}

#[test]
fn rates_prints_exact_and_rounded_forms() {
    let out = fpcam(&["rates", "--K", "64", "--fdmd", "480", "--alpha", "16"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("M_r=1966080 (rounded 2e6)"), "{text}");
    assert!(text.contains("STR=31457280 (rounded 32e6)"), "{text}");
    assert!(text.contains("1 MP at 31.45728 fps (rounded 32)"), "{text}");
    let spc = fpcam(&["rates", "--K", "1", "--fdmd", "20000", "--alpha", "16"]);
    let text = String::from_utf8_lossy(&spc.stdout);
    assert!(text.contains("1 MP at 0.32 fps (rounded 0.32)"), "{text}");
    let bad = fpcam(&["rates", "--K", "0", "--fdmd", "480", "--alpha", "16"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn calibrate_recovers_the_ideal_map() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let dir = tmp.path().join("cal");
    let out = fpcam(&["calibrate", "--config", s(&cfg), "--out", s(&dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = read_manifest(&dir).unwrap();
    assert_eq!(m["support_recall"], "1");
    assert_eq!(m["support_precision"], "1");
    let f: f64 = m["frobenius_rel_error"].parse().unwrap();
    assert!(f < 1e-6, "{f}");
}

#[test]
fn sweep_and_mtf_write_plot_data() {
    let tmp = tempfile::tempdir().unwrap();
    let body = r#"
seed = 2
[geometry]
sensor_rows = 4
sensor_cols = 4
block_rows = 4
block_cols = 4
[scene]
kind = "bars"
frequency = 0.125
[solver]
max_iters = 40
"#;
    let cfg = write_config(tmp.path(), body);
    let sw = tmp.path().join("sw");
    let out = fpcam(&["sweep", "--config", s(&cfg), "--out", s(&sw), "--T", "2,4", "--snr", "30,10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let comp = fs::read_to_string(sw.join("plotdata/compression.csv")).unwrap();
    assert_eq!(comp.lines().count(), 3);
    assert_eq!(fs::read_to_string(sw.join("plotdata/noise.csv")).unwrap().lines().count(), 3);

    let none = fpcam(&["sweep", "--config", s(&cfg), "--out", s(&tmp.path().join("x"))]);
    assert_eq!(none.status.code(), Some(2));

    let mt = tmp.path().join("mtf");
    let out = fpcam(&["mtf", "--config", s(&cfg), "--out", s(&mt), "--T", "4,8", "--freqs", "0.0625,0.125"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for t in [4, 8] {
        let csv = fs::read_to_string(mt.join(format!("plotdata/mtf_T{t:04}.csv"))).unwrap();
        assert!(csv.starts_with("frequency,mtf,alpha,T\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
