//! One function per subcommand. Each returns the lines to print.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fpcam_core::analysis::{
    compression_sweep, make_chart, make_moving_scene, make_patterns, mtf_curve, noise_sweep,
    rate_report, rounded_display, SweepConfig, SweepResult,
};
use fpcam_core::calib::{calibration_error, default_groups, estimate_map_with_truth, run_calibration};
use fpcam_core::io::{load_map, load_patterns, load_raster, save_map, save_patterns, save_raster, write_pbm, write_pgm16};
use fpcam_core::recon::{StepRule, TvKind};
use fpcam_core::{
    build_map, pixel_scan_sequence, simulate_capture, solve, stack_video, Frame, GeometryConfig,
    PatternKind, PatternSequence, Scene, SensorFrame, SolverConfig,
};

use crate::config::{ExperimentConfig, SceneSpec};
use crate::manifest::{manifest_value, read_manifest, Manifest, MANIFEST_NAME};
use crate::UsageError;

/// Creates `dir`, clearing it first if it holds an earlier run.
pub fn prepare_output(dir: &Path) -> Result<()> {
    if dir.exists() {
        let mut entries = fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))?;
        if entries.next().is_some() {
            if !dir.join(MANIFEST_NAME).is_file() {
                bail!(UsageError(format!(
                    "refusing to write into non-empty directory {} (no {MANIFEST_NAME})",
                    dir.display()
                )));
            }
            fs::remove_dir_all(dir).with_context(|| format!("clearing {}", dir.display()))?;
        }
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn save_pbm(seq: &PatternSequence, dir: &Path) -> Result<()> {
    for (t, p) in seq.patterns().iter().enumerate() {
        let path = dir.join(format!("pattern_{t:04}.pbm"));
        let mut w = BufWriter::new(fs::File::create(&path)?);
        write_pbm(p, &mut w)?;
        w.flush()?;
    }
    Ok(())
}

fn save_pgm(frame: &Frame, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_pgm16(frame, 1.0, &mut w)?;
    w.flush()?;
    Ok(())
}

fn patterns_for(cfg: &ExperimentConfig, geometry: &GeometryConfig, count: usize) -> Result<PatternSequence> {
    let kind = cfg.pattern_kind()?;
    Ok(match (kind, cfg.patterns.groups) {
        (PatternKind::PixelScan, Some([gr, gc])) => pixel_scan_sequence(geometry, gr, gc)?.truncated(count)?,
        _ => make_patterns(kind, geometry, count, cfg.patterns.density, cfg.pattern_seed())?,
    })
}

fn chart_scene(cfg: &ExperimentConfig, geometry: &GeometryConfig) -> Result<Frame> {
    match cfg.scene_spec()? {
        SceneSpec::Chart(kind) => Ok(make_chart(geometry, kind)?),
        SceneSpec::Moving { .. } => bail!(UsageError(
            "this command needs a static chart scene, not 'moving'".into()
        )),
    }
}

fn sweep_config(cfg: &ExperimentConfig) -> Result<SweepConfig> {
    let mut s = SweepConfig::new(cfg.geometry()?, cfg.pattern_kind()?, cfg.solver(), cfg.seed);
    s.optics = cfg.optics();
    s.density = cfg.patterns.density;
    if cfg.tv_kind()? != TvKind::Tv2d {
        bail!(UsageError("sweeps reconstruct single frames; solver.tv must be 2d".into()));
    }
    Ok(s)
}

pub fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>> {
    let geometry = cfg.geometry()?;
    let map = build_map(&geometry, &cfg.optics())?;
    let count = cfg.patterns.count;
    let patterns = patterns_for(cfg, &geometry, count)?;
    prepare_output(out)?;

    let mut manifest = Manifest::new("simulate");
    manifest.extend(cfg.manifest_entries());
    let captures = match cfg.scene_spec()? {
        SceneSpec::Chart(kind) => {
            let scene = make_chart(&geometry, kind)?;
            save_raster(&scene, &out.join("scene.fpfr"))?;
            save_pgm(&scene, &out.join("scene.pgm"))?;
            simulate_capture(&map, &patterns, Scene::Static(&scene), &cfg.noise())?
        }
        SceneSpec::Moving { object, velocity, frame_rate } => {
            let video = make_moving_scene(&geometry, &object, velocity, patterns.len(), frame_rate)?;
            for (t, f) in video.frames().iter().enumerate() {
                save_raster(f, &out.join(format!("scene_{t:04}.fpfr")))?;
            }
            manifest.push("scene.frames", video.len());
            simulate_capture(&map, &patterns, Scene::Video(&video), &cfg.noise())?
        }
    };
    for y in &captures {
        let frame = Frame::new(y.rows, y.cols, y.data.clone())?;
        save_raster(&frame, &out.join(format!("sensor_{:04}.fpfr", y.index)))?;
    }
    save_patterns(&patterns, &out.join("patterns.fpat"))?;
    save_pbm(&patterns, out)?;
    save_map(&map, &out.join("map.fpcs"))?;

    let alpha = geometry.n_dmd() as f64 / (patterns.len() * geometry.n_sensor()) as f64;
    manifest.push("captures", captures.len());
    manifest.push("alpha", alpha);
    manifest.push("map.nnz", map.nnz());
    let hash = manifest.write(out)?;
    Ok(vec![
        format!("wrote {} captures to {}", captures.len(), out.display()),
        format!("alpha={alpha}"),
        format!("content_sha256={hash}"),
    ])
}

/// Flag overrides for `reconstruct`; `None` keeps the value recorded at capture time.
#[derive(Debug, Clone, Default)]
pub struct ReconstructOptions {
    pub lambda: Option<f64>,
    pub max_iters: Option<usize>,
    pub inner_prox_iters: Option<usize>,
    pub tol: Option<f64>,
    pub nonneg: Option<bool>,
    pub tv: Option<String>,
    pub group_size: Option<usize>,
}

fn parsed<T: std::str::FromStr>(m: &BTreeMap<String, String>, key: &str) -> Result<T> {
    let raw = manifest_value(m, key)?;
    raw.parse()
        .map_err(|_| UsageError(format!("manifest entry {key}={raw} is malformed")).into())
}

fn geometry_from_manifest(m: &BTreeMap<String, String>) -> Result<GeometryConfig> {
    let g = GeometryConfig {
        f_dmd: parsed(m, "geometry.f_dmd")?,
        ..GeometryConfig::tiled(
            parsed(m, "geometry.sensor_rows")?,
            parsed(m, "geometry.sensor_cols")?,
            parsed(m, "geometry.block_rows")?,
            parsed(m, "geometry.block_cols")?,
        )
    };
    g.validate()?;
    Ok(g)
}

pub fn reconstruct(capture: &Path, opts: &ReconstructOptions, out: &Path) -> Result<Vec<String>> {
    let m = read_manifest(capture)?;
    if manifest_value(&m, "command")? != "simulate" {
        bail!(UsageError(format!("{} is not a simulate output", capture.display())));
    }
    let geometry = geometry_from_manifest(&m)?;
    let solver = SolverConfig {
        lambda: opts.lambda.map_or_else(|| parsed(&m, "solver.lambda"), Ok)?,
        max_iters: opts.max_iters.map_or_else(|| parsed(&m, "solver.max_iters"), Ok)?,
        inner_prox_iters: opts.inner_prox_iters.map_or_else(|| parsed(&m, "solver.inner_prox_iters"), Ok)?,
        tol: opts.tol.map_or_else(|| parsed(&m, "solver.tol"), Ok)?,
        nonneg: opts.nonneg.map_or_else(|| parsed(&m, "solver.nonneg"), Ok)?,
        step: match m.get("solver.step") {
            Some(_) => StepRule::Explicit(parsed(&m, "solver.step")?),
            None => StepRule::Auto,
        },
        seed: fpcam_core::seed::derive_stream(parsed(&m, "seed")?, 0, 2),
    };
    solver.validate().map_err(|e| UsageError(e.to_string()))?;
    let tv_name = match &opts.tv {
        Some(t) => t.clone(),
        None => manifest_value(&m, "solver.tv")?.to_string(),
    };
    let tv: TvKind = tv_name.parse().map_err(|e| UsageError(format!("--tv: {e}")))?;
    let group_size = opts.group_size.map_or_else(|| parsed(&m, "solver.group_size"), Ok)?;

    let map = load_map(&capture.join("map.fpcs"))?;
    let patterns = load_patterns(&capture.join("patterns.fpat"))?;
    let mut captures = Vec::with_capacity(patterns.len());
    for t in 0..patterns.len() {
        let f = load_raster(&capture.join(format!("sensor_{t:04}.fpfr")))?;
        captures.push(SensorFrame::new(f.rows(), f.cols(), f.into_data(), t)?);
    }
    let system = stack_video(&geometry, map, patterns, captures, group_size)?;
    if tv == TvKind::Tv3d && system.frame_count < 2 {
        bail!(UsageError(format!(
            "--tv 3d needs at least two reconstructed frames, the capture groups into {}",
            system.frame_count
        )));
    }
    let result = solve(&system, tv, &solver)?;

    prepare_output(out)?;
    let frames = result.estimate.to_frames();
    for (k, f) in frames.iter().enumerate() {
        save_raster(f, &out.join(format!("estimate_{k:04}.fpfr")))?;
        save_pgm(f, &out.join(format!("estimate_{k:04}.pgm")))?;
    }
    let mut csv = String::from("iteration,objective,data_term,tv_term\n");
    for (i, s) in result.trace.iter().enumerate() {
        csv.push_str(&format!("{},{},{},{}\n", i + 1, s.objective, s.data_term, s.tv_term));
    }
    write_text(&out.join("objective.csv"), &csv)?;

    let mut manifest = Manifest::new("reconstruct");
    manifest.push("capture.content_sha256", manifest_value(&m, crate::manifest::HASH_KEY)?);
    manifest.push("solver.lambda", solver.lambda);
    manifest.push("solver.max_iters", solver.max_iters);
    manifest.push("solver.inner_prox_iters", solver.inner_prox_iters);
    manifest.push("solver.tol", solver.tol);
    manifest.push("solver.nonneg", solver.nonneg);
    manifest.push("solver.tv", &tv_name);
    manifest.push("solver.group_size", group_size);
    manifest.push("frames", system.frame_count);
    manifest.push("alpha", system.compression_factor());
    manifest.push("iterations", result.iterations_run);
    manifest.push("converged", result.converged);
    manifest.push("lipschitz", result.lipschitz);
    let mut lines = vec![format!(
        "{} iterations (converged: {}), {} frame(s) written to {}",
        result.iterations_run,
        result.converged,
        frames.len(),
        out.display()
    )];
    let scene_path = capture.join("scene.fpfr");
    if frames.len() == 1 && scene_path.is_file() {
        let scene = load_raster(&scene_path)?;
        let err = fpcam_core::linalg::relative_error(frames[0].data(), scene.data());
        manifest.push("relative_error", err);
        lines.push(format!("relative_error={err}"));
    }
    let hash = manifest.write(out)?;
    lines.push(format!("content_sha256={hash}"));
    Ok(lines)
}

pub fn calibrate(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>> {
    let geometry = cfg.geometry()?;
    let groups = cfg.calibration.groups.map_or_else(|| default_groups(&geometry), |[r, c]| (r, c));
    let run = run_calibration(&geometry, &cfg.optics(), groups, &cfg.noise())?;
    let est = estimate_map_with_truth(&run, cfg.calibration.support_threshold)?;
    let truth = build_map(&geometry, &cfg.optics())?;
    let err = calibration_error(&est.map_est, &truth)?;

    prepare_output(out)?;
    for (p, y) in &run.captures {
        let frame = Frame::new(y.rows, y.cols, y.data.clone())?;
        save_raster(&frame, &out.join(format!("calib_{p:04}.fpfr")))?;
    }
    save_map(&est.map_est, &out.join("map_est.fpcs"))?;
    save_map(&truth, &out.join("map_true.fpcs"))?;

    let mut manifest = Manifest::new("calibrate");
    manifest.extend(cfg.manifest_entries());
    manifest.push("calibration.groups", format!("{},{}", groups.0, groups.1));
    manifest.push("calibration.support_threshold", est.support_threshold);
    manifest.push("captures", run.captures.len());
    manifest.push("support_precision", err.support_precision);
    manifest.push("support_recall", err.support_recall);
    manifest.push("frobenius_rel_error", err.frobenius_rel_error);
    if let Some(r) = est.residual_stats {
        manifest.push("median_column_rel_error", r.median_column_rel_error);
        manifest.push("max_column_rel_error", r.max_column_rel_error);
    }
    let hash = manifest.write(out)?;
    Ok(vec![
        format!("{} impulse captures written to {}", run.captures.len(), out.display()),
        format!(
            "precision={} recall={} frobenius_rel_error={}",
            err.support_precision, err.support_recall, err.frobenius_rel_error
        ),
        format!("content_sha256={hash}"),
    ])
}

fn sweep_lines(name: &str, r: &SweepResult) -> Vec<String> {
    r.points
        .iter()
        .map(|p| {
            format!(
                "{name}: T={} alpha={:.4} snr={} psnr={:.2} ssim={:.4}",
                p.measurements,
                p.alpha,
                p.snr_db.map_or("none".into(), |v| v.to_string()),
                p.psnr_db,
                p.ssim
            )
        })
        .collect()
}

pub fn sweep(
    cfg: &ExperimentConfig,
    measurements: Option<&[usize]>,
    snr_db: Option<&[f64]>,
    out: &Path,
) -> Result<Vec<String>> {
    let ts = measurements.map_or_else(|| cfg.sweep.measurements.clone(), <[usize]>::to_vec);
    let snrs = snr_db.map_or_else(|| cfg.sweep.snr_db.clone(), <[f64]>::to_vec);
    if ts.is_empty() && snrs.is_empty() {
        bail!(UsageError("nothing to sweep: give --T and/or --snr (or sweep.measurements / sweep.snr_db)".into()));
    }
    let geometry = cfg.geometry()?;
    let scene = chart_scene(cfg, &geometry)?;
    let scfg = sweep_config(cfg)?;
    let compression = if ts.is_empty() {
        None
    } else {
        Some(compression_sweep(&scene, &scfg, &ts, cfg.noise.snr_db)?)
    };
    let noise = if snrs.is_empty() {
        None
    } else {
        let list: Vec<Option<f64>> = snrs.iter().copied().map(Some).collect();
        Some(noise_sweep(&scene, &scfg, &list, cfg.patterns.count)?)
    };

    prepare_output(out)?;
    save_raster(&scene, &out.join("scene.fpfr"))?;
    let mut manifest = Manifest::new("sweep");
    manifest.extend(cfg.manifest_entries());
    let mut lines = Vec::new();
    if let Some(r) = &compression {
        write_text(&out.join("plotdata/compression.csv"), &r.to_csv())?;
        manifest.push("sweep.measurements", join(&ts));
        lines.extend(sweep_lines("compression", r));
    }
    if let Some(r) = &noise {
        write_text(&out.join("plotdata/noise.csv"), &r.to_csv())?;
        manifest.push("sweep.snr_db", join(&snrs));
        lines.extend(sweep_lines("noise", r));
    }
    let hash = manifest.write(out)?;
    lines.push(format!("content_sha256={hash}"));
    Ok(lines)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

pub fn mtf(
    cfg: &ExperimentConfig,
    measurements: Option<&[usize]>,
    frequencies: Option<&[f64]>,
    out: &Path,
) -> Result<Vec<String>> {
    let ts = measurements.map_or_else(|| cfg.mtf.measurements.clone(), <[usize]>::to_vec);
    let freqs = frequencies.map_or_else(|| cfg.mtf.frequencies.clone(), <[f64]>::to_vec);
    if ts.is_empty() {
        bail!(UsageError("no measurement counts for the MTF".into()));
    }
    let scfg = sweep_config(cfg)?;
    let curves = ts
        .iter()
        .map(|&t| mtf_curve(&scfg, t, &freqs, cfg.noise.snr_db))
        .collect::<fpcam_core::Result<Vec<_>>>()?;

    prepare_output(out)?;
    let mut manifest = Manifest::new("mtf");
    manifest.extend(cfg.manifest_entries());
    manifest.push("mtf.frequencies", join(&freqs));
    let mut lines = Vec::new();
    for c in &curves {
        let name = format!("plotdata/mtf_T{:04}.csv", c.measurements);
        write_text(&out.join(&name), &c.to_csv())?;
        manifest.push(format!("mtf.T{}.alpha", c.measurements), c.alpha);
        lines.push(format!(
            "T={} alpha={:.4}: {}",
            c.measurements,
            c.alpha,
            c.mtf.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" ")
        ));
    }
    let hash = manifest.write(out)?;
    lines.push(format!("content_sha256={hash}"));
    Ok(lines)
}

/// Rate arithmetic, with one-significant-figure forms alongside. These
/// rounds M_r to one significant figure first and scales that by α.
pub fn rates(k: u64, f_dmd: f64, alpha: f64, out: Option<&Path>) -> Result<Vec<String>> {
    let r = rate_report(k, f_dmd, alpha).map_err(|e| UsageError(e.to_string()))?;
    let exp = r.measurement_rate.log10().floor() as i32;
    let mantissa = rounded_display(r.measurement_rate / 10f64.powi(exp));
    let rounded_str = alpha * mantissa;
    let mut lines = vec![
        format!("K={k} f_dmd={f_dmd} alpha={alpha}"),
        format!("M_r={} (rounded {mantissa}e{exp})", r.measurement_rate),
        format!("STR={} (rounded {}e{exp})", r.str_rate, rounded_str),
    ];
    let mut csv = String::from("megapixels,fps,rounded_fps\n");
    for &(mp, fps) in &r.achievable {
        let rounded_fps = rounded_str * 10f64.powi(exp) / (mp * 1e6);
        lines.push(format!("{mp} MP at {fps} fps (rounded {rounded_fps})"));
        csv.push_str(&format!("{mp},{fps},{rounded_fps}\n"));
    }
    if let Some(dir) = out {
        prepare_output(dir)?;
        write_text(&dir.join("plotdata/rates.csv"), &csv)?;
        let mut manifest = Manifest::new("rates");
        manifest.push("K", k);
        manifest.push("f_dmd", f_dmd);
        manifest.push("alpha", alpha);
        manifest.push("M_r", r.measurement_rate);
        manifest.push("STR", r.str_rate);
        manifest.write(dir)?;
    }
    Ok(lines)
}

pub fn default_output(flag: Option<&Path>, cfg: Option<&ExperimentConfig>, command: &str) -> PathBuf {
    crate::resolve_output(flag, cfg.and_then(|c| c.output_dir.as_deref()), command)
}
