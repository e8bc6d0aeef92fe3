//! Raster containers shared by every stage of the pipeline.

use crate::error::{check_dim, Error, Result};

/// A real-valued row-major image.
///
/// Used for scenes and reconstructions at DMD resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

/// The unknown scene at DMD resolution.
pub type HiResFrame = Frame;

impl Frame {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Invalid(format!("empty frame {rows}x{cols}")));
        }
        check_dim("frame data length", rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty frame");
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty frame");
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        self.data[r * self.cols + c] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(&self.data)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// One low-resolution coded measurement read from the sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    /// Capture index `t` within its sequence.
    pub index: usize,
}

impl SensorFrame {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>, index: usize) -> Result<Self> {
        check_dim("sensor frame data length", rows * cols, data.len())?;
        Ok(Self {
            rows,
            cols,
            data,
            index,
        })
    }

    pub fn zeros(rows: usize, cols: usize, index: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
            index,
        }
    }
}

/// An ordered stack of equally sized frames.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoCube {
    frames: Vec<Frame>,
    frame_rate: f64,
}

impl VideoCube {
    pub fn new(frames: Vec<Frame>, frame_rate: f64) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Invalid("video cube needs at least one frame".into()))?;
        let shape = first.shape();
        if let Some(bad) = frames.iter().find(|f| f.shape() != shape) {
            return Err(Error::Invalid(format!(
                "non-uniform frame size {:?} vs {:?}",
                bad.shape(),
                shape
            )));
        }
        if !(frame_rate > 0.0 && frame_rate.is_finite()) {
            return Err(Error::Invalid(format!("frame rate {frame_rate}")));
        }
        Ok(Self { frames, frame_rate })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    /// (rows, cols) of each frame.
    pub fn frame_shape(&self) -> (usize, usize) {
        self.frames[0].shape()
    }
}

/// Dimensions of a stack of frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VolumeShape {
    pub frames: usize,
    pub rows: usize,
    pub cols: usize,
}

impl VolumeShape {
    pub fn new(frames: usize, rows: usize, cols: usize) -> Self {
        Self { frames, rows, cols }
    }

    pub fn len(&self) -> usize {
        self.frames * self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame_len(&self) -> usize {
        self.rows * self.cols
    }
}

/// A frame or a frame stack flattened frame-major, then row-major.
///
/// This is the working representation of the solvers; convert from and to
/// [`Frame`] / [`VideoCube`] at the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    shape: VolumeShape,
    data: Vec<f64>,
}

impl Volume {
    pub fn new(shape: VolumeShape, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Invalid(format!("empty volume {shape:?}")));
        }
        check_dim("volume data length", shape.len(), data.len())?;
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: VolumeShape) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn shape(&self) -> VolumeShape {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn frame(&self, k: usize) -> Frame {
        let n = self.shape.frame_len();
        Frame {
            rows: self.shape.rows,
            cols: self.shape.cols,
            data: self.data[k * n..(k + 1) * n].to_vec(),
        }
    }

    pub fn to_frames(&self) -> Vec<Frame> {
        (0..self.shape.frames).map(|k| self.frame(k)).collect()
    }

    /// The single frame of a one-frame volume.
    pub fn into_frame(self) -> Result<Frame> {
        if self.shape.frames != 1 {
            return Err(Error::Invalid(format!(
                "volume holds {} frames, not one",
                self.shape.frames
            )));
        }
        Ok(Frame {
            rows: self.shape.rows,
            cols: self.shape.cols,
            data: self.data,
        })
    }

    pub fn into_video(self, frame_rate: f64) -> Result<VideoCube> {
        VideoCube::new(self.to_frames(), frame_rate)
    }
}

impl From<&Frame> for Volume {
    fn from(f: &Frame) -> Self {
        Self {
            shape: VolumeShape::new(1, f.rows, f.cols),
            data: f.data.clone(),
        }
    }
}

impl From<Frame> for Volume {
    fn from(f: Frame) -> Self {
        Self {
            shape: VolumeShape::new(1, f.rows, f.cols),
            data: f.data,
        }
    }
}

impl From<&VideoCube> for Volume {
    fn from(v: &VideoCube) -> Self {
        let (rows, cols) = v.frame_shape();
        Self {
            shape: VolumeShape::new(v.len(), rows, cols),
            data: v.frames.iter().flat_map(|f| f.data.iter().copied()).collect(),
        }
    }
}
