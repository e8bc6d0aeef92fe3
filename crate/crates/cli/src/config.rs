//! Experiment configuration, read from TOML.
//!
//! Only `seed` and `scene.kind` are required; every other key has a
//! default. Unknown keys are rejected.
//!
//! ```toml
//! seed = 7
//! output_dir = "runs/chart"        # optional
//!
//! [geometry]                       # prototype scale: 64×64 sensor, 16×16 mirrors per pixel
//! sensor_rows = 64
//! sensor_cols = 64
//! block_rows = 16
//! block_cols = 16
//! f_dmd = 480.0
//!
//! [optics]
//! objective_blur_sigma = 0.0
//! relay_blur_sigma = 0.0
//! misalignment_shift = [0, 0]
//!
//! [patterns]
//! kind = "random-binary"           # or "hadamard", "pixel-scan"
//! count = 16                       # T
//! density = 0.5
//! groups = [64, 64]                # pixel-scan grid; defaults to one group per sensor pixel
//!
//! [noise]
//! snr_db = 30.0                    # omit for noiseless captures
//!
//! [solver]
//! lambda = 1e-3
//! max_iters = 500
//! inner_prox_iters = 15
//! tol = 1e-6
//! nonneg = true
//! tv = "2d"                        # or "3d"
//! group_size = 0                   # measurements per unknown frame, 0 = all
//!
//! [scene]
//! kind = "bars"                    # "bars", "usaf", "checker", "moving"
//! frequency = 0.0625               # bars
//! size = 8                         # checker
//! # moving: height, width, top, left, intensity, background, velocity, frame_rate
//!
//! [sweep]
//! measurements = [64, 128, 256, 512]
//! snr_db = [40.0, 30.0, 20.0, 10.0]
//!
//! [mtf]
//! measurements = [16, 64]
//! frequencies = [0.03125, 0.0625, 0.125, 0.25]
//!
//! [calibration]
//! groups = [64, 64]
//! support_threshold = 0.01
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fpcam_core::analysis::{ChartKind, MovingObject};
use fpcam_core::recon::StepRule;
use fpcam_core::{GeometryConfig, NoiseSpec, OpticsConfig, PatternKind, SolverConfig, TvKind};
use serde::Deserialize;

use crate::UsageError;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub optics: OpticsSection,
    #[serde(default)]
    pub patterns: PatternSection,
    #[serde(default)]
    pub noise: NoiseSection,
    #[serde(default)]
    pub solver: SolverSection,
    pub scene: SceneSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub mtf: MtfSection,
    #[serde(default)]
    pub calibration: CalibrationSection,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub sensor_rows: usize,
    pub sensor_cols: usize,
    pub block_rows: usize,
    pub block_cols: usize,
    pub f_dmd: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let g = GeometryConfig::default();
        Self {
            sensor_rows: g.sensor_rows,
            sensor_cols: g.sensor_cols,
            block_rows: g.block_rows,
            block_cols: g.block_cols,
            f_dmd: g.f_dmd,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OpticsSection {
    pub objective_blur_sigma: f64,
    pub relay_blur_sigma: f64,
    pub misalignment_shift: [i64; 2],
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct PatternSection {
    pub kind: String,
    pub count: usize,
    pub density: f64,
    pub groups: Option<[usize; 2]>,
}

impl Default for PatternSection {
    fn default() -> Self {
        Self {
            kind: "random-binary".into(),
            count: 16,
            density: 0.5,
            groups: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSection {
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub lambda: f64,
    pub max_iters: usize,
    pub inner_prox_iters: usize,
    pub tol: f64,
    pub nonneg: bool,
    pub step: Option<f64>,
    pub tv: String,
    pub group_size: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            lambda: s.lambda,
            max_iters: s.max_iters,
            inner_prox_iters: s.inner_prox_iters,
            tol: s.tol,
            nonneg: s.nonneg,
            step: None,
            tv: "2d".into(),
            group_size: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    pub kind: String,
    #[serde(default = "default_frequency")]
    pub frequency: f64,
    #[serde(default = "default_checker")]
    pub size: usize,
    #[serde(default)]
    pub height: Option<usize>,
    #[serde(default)]
    pub width: Option<usize>,
    #[serde(default)]
    pub top: usize,
    #[serde(default)]
    pub left: usize,
    #[serde(default = "default_intensity")]
    pub intensity: f64,
    #[serde(default = "default_background")]
    pub background: f64,
    /// Mirrors per frame, (down, right).
    #[serde(default)]
    pub velocity: [f64; 2],
    #[serde(default = "default_frame_rate")]
    pub frame_rate: f64,
}

fn default_frequency() -> f64 {
    1.0 / 16.0
}
fn default_checker() -> usize {
    8
}
fn default_intensity() -> f64 {
    1.0
}
fn default_background() -> f64 {
    0.1
}
fn default_frame_rate() -> f64 {
    480.0
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub measurements: Vec<usize>,
    pub snr_db: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct MtfSection {
    pub measurements: Vec<usize>,
    pub frequencies: Vec<f64>,
}

impl Default for MtfSection {
    fn default() -> Self {
        Self {
            measurements: vec![16, 64],
            frequencies: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0, 1.0 / 4.0],
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationSection {
    pub groups: Option<[usize; 2]>,
    pub support_threshold: f64,
}

impl Default for CalibrationSection {
    fn default() -> Self {
        Self {
            groups: None,
            support_threshold: fpcam_core::calib::DEFAULT_SUPPORT_THRESHOLD,
        }
    }
}

/// What the scene section resolves to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SceneSpec {
    Chart(ChartKind),
    Moving {
        object: MovingObject,
        velocity: (f64, f64),
        frame_rate: f64,
    },
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| UsageError(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in config {}", path.display()))
    }

    fn validate(&self) -> Result<()> {
        self.geometry()?.validate().map_err(usage)?;
        self.optics().validate(&self.geometry()?).map_err(usage)?;
        self.pattern_kind()?;
        self.tv_kind()?;
        self.solver().validate().map_err(usage)?;
        self.scene_spec()?;
        if self.patterns.count == 0 {
            bail!(UsageError("patterns.count must be at least 1".into()));
        }
        if let Some(s) = self.noise.snr_db {
            if !s.is_finite() {
                bail!(UsageError("noise.snr_db must be finite; omit it for no noise".into()));
            }
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<GeometryConfig> {
        let g = &self.geometry;
        let geometry = GeometryConfig {
            f_dmd: g.f_dmd,
            ..GeometryConfig::tiled(g.sensor_rows, g.sensor_cols, g.block_rows, g.block_cols)
        };
        geometry.validate().map_err(usage)?;
        Ok(geometry)
    }

    pub fn optics(&self) -> OpticsConfig {
        OpticsConfig {
            objective_blur_sigma: self.optics.objective_blur_sigma,
            relay_blur_sigma: self.optics.relay_blur_sigma,
            misalignment_shift: (self.optics.misalignment_shift[0], self.optics.misalignment_shift[1]),
        }
    }

    pub fn pattern_kind(&self) -> Result<PatternKind> {
        self.patterns
            .kind
            .parse()
            .map_err(|e| UsageError(format!("patterns.kind: {e}")).into())
    }

    pub fn tv_kind(&self) -> Result<TvKind> {
        self.solver
            .tv
            .parse()
            .map_err(|e| UsageError(format!("solver.tv: {e}")).into())
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            snr_db: self.noise.snr_db,
            seed: fpcam_core::seed::derive_stream(self.seed, 0, 1),
        }
    }

    pub fn pattern_seed(&self) -> u64 {
        fpcam_core::seed::derive_stream(self.seed, 0, 0)
    }

    pub fn solver(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            lambda: s.lambda,
            max_iters: s.max_iters,
            inner_prox_iters: s.inner_prox_iters,
            tol: s.tol,
            step: s.step.map_or(StepRule::Auto, StepRule::Explicit),
            nonneg: s.nonneg,
            seed: fpcam_core::seed::derive_stream(self.seed, 0, 2),
        }
    }

    pub fn scene_spec(&self) -> Result<SceneSpec> {
        let s = &self.scene;
        Ok(match s.kind.to_ascii_lowercase().as_str() {
            "bars" => SceneSpec::Chart(ChartKind::Bars { frequency: s.frequency }),
            "usaf" | "usaf-like" => SceneSpec::Chart(ChartKind::UsafLike),
            "checker" => SceneSpec::Chart(ChartKind::Checker { size: s.size }),
            "moving" => {
                let (rows, cols) = self.geometry()?.dmd_shape();
                SceneSpec::Moving {
                    object: MovingObject {
                        height: s.height.unwrap_or(rows / 4),
                        width: s.width.unwrap_or(cols / 4),
                        top: s.top,
                        left: s.left,
                        intensity: s.intensity,
                        background: s.background,
                    },
                    velocity: (s.velocity[0], s.velocity[1]),
                    frame_rate: s.frame_rate,
                }
            }
            other => bail!(UsageError(format!(
                "scene.kind '{other}' is not one of bars, usaf, checker, moving"
            ))),
        })
    }

    /// Flattened `key=value` lines describing the configuration.
    pub fn manifest_entries(&self) -> Vec<(String, String)> {
        let g = &self.geometry;
        let o = &self.optics;
        let p = &self.patterns;
        let s = &self.solver;
        let sc = &self.scene;
        let mut v = vec![
            ("seed".into(), self.seed.to_string()),
            ("geometry.sensor_rows".into(), g.sensor_rows.to_string()),
            ("geometry.sensor_cols".into(), g.sensor_cols.to_string()),
            ("geometry.block_rows".into(), g.block_rows.to_string()),
            ("geometry.block_cols".into(), g.block_cols.to_string()),
            ("geometry.f_dmd".into(), g.f_dmd.to_string()),
            ("optics.objective_blur_sigma".into(), o.objective_blur_sigma.to_string()),
            ("optics.relay_blur_sigma".into(), o.relay_blur_sigma.to_string()),
            (
                "optics.misalignment_shift".into(),
                format!("{},{}", o.misalignment_shift[0], o.misalignment_shift[1]),
            ),
            ("patterns.kind".into(), p.kind.clone()),
            ("patterns.count".into(), p.count.to_string()),
            ("patterns.density".into(), p.density.to_string()),
            ("noise.snr_db".into(), self.noise.snr_db.map_or("none".into(), |v| v.to_string())),
            ("solver.lambda".into(), s.lambda.to_string()),
            ("solver.max_iters".into(), s.max_iters.to_string()),
            ("solver.inner_prox_iters".into(), s.inner_prox_iters.to_string()),
            ("solver.tol".into(), s.tol.to_string()),
            ("solver.nonneg".into(), s.nonneg.to_string()),
            ("solver.tv".into(), s.tv.clone()),
            ("solver.group_size".into(), s.group_size.to_string()),
            ("scene.kind".into(), sc.kind.clone()),
        ];
        if let Some([r, c]) = p.groups {
            v.push(("patterns.groups".into(), format!("{r},{c}")));
        }
        if let Some(step) = s.step {
            v.push(("solver.step".into(), step.to_string()));
        }
        v
    }
}

fn usage(e: fpcam_core::Error) -> anyhow::Error {
    UsageError(e.to_string()).into()
}
