//! Compression and noise sweeps: capture, reconstruct and score a scene
//! over a list of measurement counts or noise levels.
//!
//! Every point in a sweep uses the same pattern stream (drawn from the
//! base seed), so shorter sequences are prefixes of longer ones. Noise
//! seeds are derived per point with [`crate::seed::derive_stream`].

use rayon::prelude::*;

use super::metrics::{psnr, ssim};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::linalg::relative_error;
use crate::model::{build_map, simulate_capture, stack, GeometryConfig, NoiseSpec, OpticsConfig, Scene};
use crate::patterns::{
    hadamard_sequence, pixel_scan_sequence, random_binary_sequence, PatternKind, PatternSequence,
};
use crate::recon::{solve, SolverConfig, TvKind};
use crate::seed::derive_stream;

const PATTERN_STREAM: u64 = 0;
const NOISE_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub geometry: GeometryConfig,
    pub optics: OpticsConfig,
    pub pattern_kind: PatternKind,
    /// On-probability of random-binary mirrors.
    pub density: f64,
    pub solver: SolverConfig,
    pub seed: u64,
}

impl SweepConfig {
    pub fn new(geometry: GeometryConfig, pattern_kind: PatternKind, solver: SolverConfig, seed: u64) -> Self {
        Self {
            geometry,
            optics: OpticsConfig::ideal(),
            pattern_kind,
            density: 0.5,
            solver,
            seed,
        }
    }

    /// Pattern seed shared by every point of a sweep.
    pub fn pattern_seed(&self) -> u64 {
        derive_stream(self.seed, 0, PATTERN_STREAM)
    }

    pub fn noise_seed(&self, point: usize) -> u64 {
        derive_stream(self.seed, point as u64, NOISE_STREAM)
    }
}

/// `count` patterns of the requested family.
pub fn make_patterns(
    kind: PatternKind,
    geometry: &GeometryConfig,
    count: usize,
    density: f64,
    seed: u64,
) -> Result<PatternSequence> {
    match kind {
        PatternKind::RandomBinary => random_binary_sequence(geometry, count, density, seed),
        PatternKind::Hadamard => hadamard_sequence(geometry, count),
        PatternKind::PixelScan => {
            pixel_scan_sequence(geometry, geometry.sensor_rows, geometry.sensor_cols)?.truncated(count)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub measurements: usize,
    pub snr_db: Option<f64>,
    pub alpha: f64,
    pub psnr_db: f64,
    pub ssim: f64,
    pub relative_error: f64,
    pub iterations: usize,
    /// Objective trace never increased.
    pub monotone: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Measurements,
    SnrDb,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub points: Vec<SweepPoint>,
    pub config: SweepConfig,
}

impl SweepResult {
    pub fn psnr(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.psnr_db).collect()
    }

    pub fn ssim(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ssim).collect()
    }

    /// CSV with a header row; `snr_db` is empty for noiseless points.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,T,alpha,snr_db,psnr_db,ssim,relative_error,iterations\n");
        for (k, p) in self.points.iter().enumerate() {
            s.push_str(&format!(
                "{k},{},{},{},{},{},{},{}\n",
                p.measurements,
                p.alpha,
                p.snr_db.map(|v| v.to_string()).unwrap_or_default(),
                p.psnr_db,
                p.ssim,
                p.relative_error,
                p.iterations
            ));
        }
        s
    }
}

/// Captures, reconstructs (2D TV) and scores one point.
pub fn run_point(
    scene: &Frame,
    cfg: &SweepConfig,
    measurements: usize,
    snr_db: Option<f64>,
    noise_seed: u64,
) -> Result<(SweepPoint, Frame)> {
    let map = build_map(&cfg.geometry, &cfg.optics)?;
    let patterns = make_patterns(
        cfg.pattern_kind,
        &cfg.geometry,
        measurements,
        cfg.density,
        cfg.pattern_seed(),
    )?;
    let noise = NoiseSpec {
        snr_db,
        seed: noise_seed,
    };
    let captures = simulate_capture(&map, &patterns, Scene::Static(scene), &noise)?;
    let system = stack(&cfg.geometry, map, patterns, captures)?;
    let alpha = system.compression_factor();
    let result = solve(&system, TvKind::Tv2d, &cfg.solver)?;
    let monotone = result.trace.windows(2).all(|w| w[1].objective <= w[0].objective);
    let estimate = result.estimate.into_frame()?;
    let point = SweepPoint {
        measurements,
        snr_db,
        alpha,
        psnr_db: psnr(&estimate, scene, None)?,
        ssim: ssim(&estimate, scene)?,
        relative_error: relative_error(estimate.data(), scene.data()),
        iterations: result.iterations_run,
        monotone,
    };
    Ok((point, estimate))
}

fn check_scene(scene: &Frame, cfg: &SweepConfig) -> Result<()> {
    if scene.shape() != cfg.geometry.dmd_shape() {
        return Err(Error::Dimension {
            what: "scene size",
            expected: cfg.geometry.n_dmd(),
            actual: scene.len(),
        });
    }
    Ok(())
}

pub fn compression_sweep(
    scene: &Frame,
    cfg: &SweepConfig,
    measurement_counts: &[usize],
    snr_db: Option<f64>,
) -> Result<SweepResult> {
    check_scene(scene, cfg)?;
    let points = measurement_counts
        .par_iter()
        .enumerate()
        .map(|(k, &t)| run_point(scene, cfg, t, snr_db, cfg.noise_seed(k)).map(|(p, _)| p))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis: SweepAxis::Measurements,
        points,
        config: *cfg,
    })
}

/// `None` entries in `snr_list` are noiseless points.
pub fn noise_sweep(
    scene: &Frame,
    cfg: &SweepConfig,
    snr_list: &[Option<f64>],
    measurements: usize,
) -> Result<SweepResult> {
    check_scene(scene, cfg)?;
    let points = snr_list
        .par_iter()
        .enumerate()
        .map(|(k, &snr)| run_point(scene, cfg, measurements, snr, cfg.noise_seed(k)).map(|(p, _)| p))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        axis: SweepAxis::SnrDb,
        points,
        config: *cfg,
    })
}
