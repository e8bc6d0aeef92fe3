//! Optical forward model.
//!
//! A K×K sensor looks at a DMD through relay optics so that each sensor
//! pixel integrates one block of mirrors. For capture `t` with binary mask
//! `D_t` the measurement is
//!
//! ```text
//! y_t = C · D_t · x_t (+ e_t)
//! ```
//!
//! where `C` is a sparse map built from the block tiling, optional Gaussian
//! blurs and an integer misalignment of the block grid. Sensor pixels report
//! the mean over their block (weight `1 / (block_rows · block_cols)`), so
//! scene and sensor values share one radiometric scale.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::frame::{Frame, SensorFrame, VideoCube};
use crate::patterns::{DmdPattern, PatternSequence};
use crate::sparse::SparseMap;

/// Sensor/DMD tiling. The DMD is exactly `sensor × block` mirrors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryConfig {
    pub dmd_rows: usize,
    pub dmd_cols: usize,
    pub sensor_rows: usize,
    pub sensor_cols: usize,
    pub block_rows: usize,
    pub block_cols: usize,
    /// DMD modulation rate in Hz.
    pub f_dmd: f64,
}

impl GeometryConfig {
    pub const DEFAULT_F_DMD: f64 = 480.0;

    /// Geometry whose DMD is the exact tiling of the sensor by blocks.
    pub fn tiled(sensor_rows: usize, sensor_cols: usize, block_rows: usize, block_cols: usize) -> Self {
        Self {
            dmd_rows: sensor_rows * block_rows,
            dmd_cols: sensor_cols * block_cols,
            sensor_rows,
            sensor_cols,
            block_rows,
            block_cols,
            f_dmd: Self::DEFAULT_F_DMD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("dmd_rows", self.dmd_rows),
            ("dmd_cols", self.dmd_cols),
            ("sensor_rows", self.sensor_rows),
            ("sensor_cols", self.sensor_cols),
            ("block_rows", self.block_rows),
            ("block_cols", self.block_cols),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be at least 1")));
        }
        if self.dmd_rows != self.sensor_rows * self.block_rows
            || self.dmd_cols != self.sensor_cols * self.block_cols
        {
            return Err(Error::Config(format!(
                "DMD {}x{} is not tiled by {}x{} blocks of {}x{}",
                self.dmd_rows,
                self.dmd_cols,
                self.sensor_rows,
                self.sensor_cols,
                self.block_rows,
                self.block_cols
            )));
        }
        if !(self.f_dmd > 0.0 && self.f_dmd.is_finite()) {
            return Err(Error::Config(format!("f_dmd {} must be positive", self.f_dmd)));
        }
        Ok(())
    }

    pub fn dmd_shape(&self) -> (usize, usize) {
        (self.dmd_rows, self.dmd_cols)
    }

    pub fn sensor_shape(&self) -> (usize, usize) {
        (self.sensor_rows, self.sensor_cols)
    }

    pub fn n_dmd(&self) -> usize {
        self.dmd_rows * self.dmd_cols
    }

    pub fn n_sensor(&self) -> usize {
        self.sensor_rows * self.sensor_cols
    }

    pub fn block_len(&self) -> usize {
        self.block_rows * self.block_cols
    }
}

impl Default for GeometryConfig {
    /// 64×64 sensor, 16×16 mirrors per pixel, 480 Hz.
    fn default() -> Self {
        Self::tiled(64, 64, 16, 16)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OpticsConfig {
    /// Objective-lens Gaussian σ, in mirrors.
    pub objective_blur_sigma: f64,
    /// Relay-lens Gaussian σ, in mirrors.
    pub relay_blur_sigma: f64,
    /// Offset of the block grid on the DMD, in mirrors (rows, cols).
    pub misalignment_shift: (i64, i64),
}

impl OpticsConfig {
    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn validate(&self, geometry: &GeometryConfig) -> Result<()> {
        for (name, s) in [
            ("objective_blur_sigma", self.objective_blur_sigma),
            ("relay_blur_sigma", self.relay_blur_sigma),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("{name} = {s} must be >= 0")));
            }
        }
        let (du, dv) = self.misalignment_shift;
        if du.unsigned_abs() as usize >= geometry.block_rows
            || dv.unsigned_abs() as usize >= geometry.block_cols
        {
            return Err(Error::Config(format!(
                "misalignment ({du}, {dv}) must be smaller than the block"
            )));
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.objective_blur_sigma == 0.0
            && self.relay_blur_sigma == 0.0
            && self.misalignment_shift == (0, 0)
    }
}

/// Measurement noise: Gaussian at a fixed signal-to-noise ratio, or none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: Option<f64>,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            snr_db: None,
            seed: 0,
        }
    }

    pub fn snr(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db: Some(snr_db),
            seed,
        }
    }
}

/// Gaussian kernel truncated at ±3σ (radius ⌈3σ⌉) and normalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma == 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|w| *w /= s);
    k
}

/// Half-sample symmetric reflection of `idx` into `0..n`.
#[inline]
pub fn reflect_index(idx: i64, n: usize) -> usize {
    let n = n as i64;
    let m = idx.rem_euclid(2 * n);
    (if m < n { m } else { 2 * n - 1 - m }) as usize
}

/// Spreads a unit impulse at `pos` through the blur kernels along one axis.
/// Mass leaving the axis is reflected back, so the response sums to one.
fn axis_response(pos: usize, n: usize, kernels: &[Vec<f64>]) -> Vec<f64> {
    let mut cur = vec![0.0; n];
    cur[pos] = 1.0;
    for kernel in kernels {
        if kernel.len() == 1 {
            continue;
        }
        let radius = (kernel.len() / 2) as i64;
        let mut next = vec![0.0; n];
        for (src, &v) in cur.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            for (k, &w) in kernel.iter().enumerate() {
                let dst = reflect_index(src as i64 + k as i64 - radius, n);
                next[dst] += v * w;
            }
        }
        cur = next;
    }
    cur
}

/// Per-mirror-coordinate weights on sensor coordinates along one axis:
/// entry `u` lists `(sensor coordinate, summed response)`.
fn axis_integration(
    n_mirror: usize,
    n_sensor: usize,
    block: usize,
    shift: i64,
    kernels: &[Vec<f64>],
) -> Vec<Vec<(usize, f64)>> {
    (0..n_mirror)
        .map(|u| {
            let resp = axis_response(u, n_mirror, kernels);
            let mut acc = vec![0.0; n_sensor];
            for (v, &w) in resp.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let rel = v as i64 - shift;
                if rel < 0 {
                    continue;
                }
                let a = rel as usize / block;
                if a < n_sensor {
                    acc[a] += w;
                }
            }
            acc.into_iter()
                .enumerate()
                .filter(|&(_, w)| w > 0.0)
                .collect()
        })
        .collect()
}

/// Builds the calibration matrix `C` for the given tiling and optics.
pub fn build_map(geometry: &GeometryConfig, optics: &OpticsConfig) -> Result<SparseMap> {
    geometry.validate()?;
    optics.validate(geometry)?;
    let kernels = [
        gaussian_kernel(optics.objective_blur_sigma),
        gaussian_kernel(optics.relay_blur_sigma),
    ];
    let (du, dv) = optics.misalignment_shift;
    let rows = axis_integration(
        geometry.dmd_rows,
        geometry.sensor_rows,
        geometry.block_rows,
        du,
        &kernels,
    );
    let cols = axis_integration(
        geometry.dmd_cols,
        geometry.sensor_cols,
        geometry.block_cols,
        dv,
        &kernels,
    );
    let scale = 1.0 / geometry.block_len() as f64;
    let mut triplets = Vec::with_capacity(geometry.n_dmd());
    for (u, row_w) in rows.iter().enumerate() {
        for (v, col_w) in cols.iter().enumerate() {
            let j = u * geometry.dmd_cols + v;
            for &(a, wa) in row_w {
                for &(b, wb) in col_w {
                    let w = wa * wb * scale;
                    if w > 0.0 {
                        triplets.push((a * geometry.sensor_cols + b, j, w));
                    }
                }
            }
        }
    }
    SparseMap::from_triplets(geometry.n_sensor(), geometry.n_dmd(), triplets)?
        .with_shapes(geometry.sensor_shape(), geometry.dmd_shape())
}

fn check_pattern(map: &SparseMap, pattern: &DmdPattern) -> Result<()> {
    check_dim("pattern rows", map.dmd_shape().0, pattern.rows())?;
    check_dim("pattern cols", map.dmd_shape().1, pattern.cols())
}

/// Noiseless coded measurement `C · (pattern ⊙ x)`.
pub fn forward(map: &SparseMap, pattern: &DmdPattern, x: &Frame) -> Result<SensorFrame> {
    check_pattern(map, pattern)?;
    check_dim("scene rows", map.dmd_shape().0, x.rows())?;
    check_dim("scene cols", map.dmd_shape().1, x.cols())?;
    let (rows, cols) = map.sensor_shape();
    let mut y = SensorFrame::zeros(rows, cols, 0);
    map.apply_masked(pattern.mask(), x.data(), &mut y.data);
    Ok(y)
}

/// `(C·D)ᵀ y = D · Cᵀ y`
pub fn adjoint(map: &SparseMap, pattern: &DmdPattern, y: &SensorFrame) -> Result<Frame> {
    check_pattern(map, pattern)?;
    check_dim("sensor rows", map.sensor_shape().0, y.rows)?;
    check_dim("sensor cols", map.sensor_shape().1, y.cols)?;
    let (rows, cols) = map.dmd_shape();
    let mut x = Frame::zeros(rows, cols);
    map.apply_masked_adjoint(pattern.mask(), &y.data, x.data_mut());
    Ok(x)
}

/// What the camera looks at during a capture sequence.
#[derive(Debug, Clone, Copy)]
pub enum Scene<'a> {
    /// Held still for every capture.
    Static(&'a Frame),
    /// Capture `t` sees frame `t`.
    Video(&'a VideoCube),
}

impl<'a> From<&'a Frame> for Scene<'a> {
    fn from(f: &'a Frame) -> Self {
        Scene::Static(f)
    }
}

impl<'a> From<&'a VideoCube> for Scene<'a> {
    fn from(v: &'a VideoCube) -> Self {
        Scene::Video(v)
    }
}

/// Simulates a capture sequence, one sensor frame per pattern.
///
/// Noise is i.i.d. Gaussian with σ = rms(clean) / 10^(snr/20), where the rms
/// is taken over the whole sequence.
pub fn simulate_capture(
    map: &SparseMap,
    patterns: &PatternSequence,
    scene: Scene<'_>,
    noise: &NoiseSpec,
) -> Result<Vec<SensorFrame>> {
    if let Scene::Video(v) = scene {
        check_dim("video length vs pattern count", patterns.len(), v.len())?;
    }
    let mut frames = Vec::with_capacity(patterns.len());
    for (t, pattern) in patterns.patterns().iter().enumerate() {
        let x = match scene {
            Scene::Static(f) => f,
            Scene::Video(v) => &v.frames()[t],
        };
        let mut y = forward(map, pattern, x)?;
        y.index = t;
        frames.push(y);
    }

    if let Some(snr_db) = noise.snr_db {
        if !snr_db.is_finite() {
            return Err(Error::Config(format!("snr_db {snr_db} must be finite")));
        }
        let (sum_sq, count) = frames.iter().fold((0.0, 0usize), |(s, n), f| {
            (s + crate::linalg::dot(&f.data, &f.data), n + f.data.len())
        });
        let rms = (sum_sq / count as f64).sqrt();
        if rms == 0.0 {
            return Err(Error::Invalid(
                "cannot set a signal-to-noise ratio on a zero-energy capture".into(),
            ));
        }
        let sigma = rms / 10f64.powf(snr_db / 20.0);
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        for f in &mut frames {
            for v in &mut f.data {
                let e: f64 = StandardNormal.sample(&mut rng);
                *v += sigma * e;
            }
        }
    }
    Ok(frames)
}

/// Measurement/pattern pairs grouped over one or more unknown frames.
///
/// Measurements are split into `frame_count` consecutive groups of equal
/// size; group `k` observes unknown frame `k`.
#[derive(Debug, Clone)]
pub struct StackedSystem {
    pub geometry: GeometryConfig,
    pub map: SparseMap,
    pub patterns: PatternSequence,
    pub measurements: Vec<SensorFrame>,
    pub frame_count: usize,
}

/// Groups every measurement under a single unknown frame.
pub fn stack(
    geometry: &GeometryConfig,
    map: SparseMap,
    patterns: PatternSequence,
    measurements: Vec<SensorFrame>,
) -> Result<StackedSystem> {
    stack_video(geometry, map, patterns, measurements, 0)
}

/// Groups measurements in runs of `group_size` (0 means all of them), one
/// unknown frame per run.
pub fn stack_video(
    geometry: &GeometryConfig,
    map: SparseMap,
    patterns: PatternSequence,
    measurements: Vec<SensorFrame>,
    group_size: usize,
) -> Result<StackedSystem> {
    geometry.validate()?;
    if measurements.is_empty() {
        return Err(Error::Invalid("no measurements to stack".into()));
    }
    check_dim("pattern count", measurements.len(), patterns.len())?;
    check_dim("map mirrors", geometry.n_dmd(), map.n_dmd())?;
    check_dim("map sensor pixels", geometry.n_sensor(), map.n_sensor())?;
    check_dim("pattern rows", geometry.dmd_rows, patterns.shape().0)?;
    check_dim("pattern cols", geometry.dmd_cols, patterns.shape().1)?;
    for m in &measurements {
        check_dim("measurement rows", geometry.sensor_rows, m.rows)?;
        check_dim("measurement cols", geometry.sensor_cols, m.cols)?;
    }
    let t = measurements.len();
    let group = if group_size == 0 { t } else { group_size };
    if t % group != 0 {
        return Err(Error::Config(format!(
            "{t} measurements do not split into groups of {group}"
        )));
    }
    let map = map.with_shapes(geometry.sensor_shape(), geometry.dmd_shape())?;
    Ok(StackedSystem {
        geometry: *geometry,
        map,
        patterns,
        measurements,
        frame_count: t / group,
    })
}

impl StackedSystem {
    pub fn measurement_count(&self) -> usize {
        self.measurements.len()
    }

    pub fn group_size(&self) -> usize {
        self.measurements.len() / self.frame_count
    }

    /// Rows of the stacked operator.
    pub fn n_rows(&self) -> usize {
        self.measurements.len() * self.geometry.n_sensor()
    }

    /// Columns of the stacked operator (all unknown frames).
    pub fn n_unknowns(&self) -> usize {
        self.frame_count * self.geometry.n_dmd()
    }

    /// Recovered pixels per measured sample.
    pub fn compression_factor(&self) -> f64 {
        self.n_unknowns() as f64 / self.n_rows() as f64
    }

    /// All measurements concatenated in capture order.
    pub fn measurement_vector(&self) -> Vec<f64> {
        self.measurements
            .iter()
            .flat_map(|m| m.data.iter().copied())
            .collect()
    }

    /// y = A x for the stacked operator.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.geometry.n_dmd();
        let m = self.geometry.n_sensor();
        let group = self.group_size();
        debug_assert_eq!(x.len(), self.n_unknowns());
        debug_assert_eq!(y.len(), self.n_rows());
        for (t, pattern) in self.patterns.patterns().iter().enumerate() {
            let k = t / group;
            self.map
                .apply_masked(pattern.mask(), &x[k * n..(k + 1) * n], &mut y[t * m..(t + 1) * m]);
        }
    }

    /// x = Aᵀ y for the stacked operator.
    pub fn apply_adjoint(&self, y: &[f64], x: &mut [f64]) {
        let n = self.geometry.n_dmd();
        let m = self.geometry.n_sensor();
        let group = self.group_size();
        debug_assert_eq!(x.len(), self.n_unknowns());
        debug_assert_eq!(y.len(), self.n_rows());
        x.iter_mut().for_each(|v| *v = 0.0);
        for (t, pattern) in self.patterns.patterns().iter().enumerate() {
            let k = t / group;
            self.map.accumulate_masked_adjoint(
                pattern.mask(),
                &y[t * m..(t + 1) * m],
                &mut x[k * n..(k + 1) * n],
            );
        }
    }
}
