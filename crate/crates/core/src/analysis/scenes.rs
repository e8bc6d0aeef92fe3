//! Synthetic test scenes with values in [0, 1].

use crate::error::{Error, Result};
use crate::frame::{Frame, VideoCube};
use crate::model::GeometryConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartKind {
    /// Vertical square wave with `frequency` cycles per mirror, starting bright.
    Bars { frequency: f64 },
    /// Bar triplets of shrinking width on a dark background, alternating
    /// vertical and horizontal orientation, in a 2×3 grid of cells.
    UsafLike,
    /// Checkerboard of `size`×`size` squares.
    Checker { size: usize },
}

pub fn make_chart(geometry: &GeometryConfig, kind: ChartKind) -> Result<Frame> {
    geometry.validate()?;
    let (rows, cols) = geometry.dmd_shape();
    match kind {
        ChartKind::Bars { frequency } => {
            if !(frequency > 0.0 && frequency <= 0.5) {
                return Err(Error::Config(format!(
                    "bar frequency {frequency} must lie in (0, 0.5] cycles per mirror"
                )));
            }
            Ok(Frame::from_fn(rows, cols, |_, c| {
                let phase = (c as f64 * frequency).fract();
                // guard against 0.4999… from accumulated rounding
                if phase < 0.5 - 1e-9 {
                    1.0
                } else {
                    0.0
                }
            }))
        }
        ChartKind::Checker { size } => {
            if size == 0 {
                return Err(Error::Config("checker size must be at least 1".into()));
            }
            Ok(Frame::from_fn(rows, cols, |r, c| ((r / size + c / size) % 2) as f64))
        }
        ChartKind::UsafLike => Ok(usaf_like(rows, cols)),
    }
}

fn usaf_like(rows: usize, cols: usize) -> Frame {
    let mut f = Frame::zeros(rows, cols);
    let cell_h = rows / 2;
    let cell_w = cols / 3;
    let base = (cell_h.min(cell_w) / 5).max(1);
    for k in 0..6 {
        let (ci, cj) = (k / 3, k % 3);
        let width = (base >> (k / 2)).max(1);
        let extent = 5 * width;
        if extent > cell_h || extent > cell_w {
            continue;
        }
        let r0 = ci * cell_h + (cell_h - extent) / 2;
        let c0 = cj * cell_w + (cell_w - extent) / 2;
        for dr in 0..extent {
            for dc in 0..extent {
                let across = if k % 2 == 0 { dc } else { dr };
                if (across / width) % 2 == 0 {
                    f.set(r0 + dr, c0 + dc, 1.0);
                }
            }
        }
    }
    f
}

/// A bright rectangle moving over a uniform background.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MovingObject {
    pub height: usize,
    pub width: usize,
    /// Top-left corner in frame 0.
    pub top: usize,
    pub left: usize,
    pub intensity: f64,
    pub background: f64,
}

/// Frame `t` shows the object shifted by `round(velocity · t)` mirrors.
pub fn make_moving_scene(
    geometry: &GeometryConfig,
    object: &MovingObject,
    velocity: (f64, f64),
    n_frames: usize,
    frame_rate: f64,
) -> Result<VideoCube> {
    geometry.validate()?;
    if n_frames == 0 {
        return Err(Error::Config("moving scene needs at least one frame".into()));
    }
    for v in [object.intensity, object.background] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("scene level {v} outside [0, 1]")));
        }
    }
    let (rows, cols) = geometry.dmd_shape();
    let mut frames = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let dy = (velocity.0 * t as f64).round() as i64;
        let dx = (velocity.1 * t as f64).round() as i64;
        let top = object.top as i64 + dy;
        let left = object.left as i64 + dx;
        if top < 0
            || left < 0
            || top as usize + object.height > rows
            || left as usize + object.width > cols
            || object.height == 0
            || object.width == 0
        {
            return Err(Error::Invalid(format!("object leaves the frame at t = {t}")));
        }
        let (top, left) = (top as usize, left as usize);
        frames.push(Frame::from_fn(rows, cols, |r, c| {
            if (top..top + object.height).contains(&r) && (left..left + object.width).contains(&c) {
                object.intensity
            } else {
                object.background
            }
        }));
    }
    VideoCube::new(frames, frame_rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bars_are_exact_square_wave() {
        let g = GeometryConfig::tiled(2, 2, 8, 8);
        let f = make_chart(&g, ChartKind::Bars { frequency: 0.125 }).unwrap();
        for r in 0..16 {
            for c in 0..16 {
                let expected = if (c % 8) < 4 { 1.0 } else { 0.0 };
                assert_eq!(f.get(r, c), expected);
            }
        }
        let contrast = (f.max() - f.min()) / (f.max() + f.min());
        assert_eq!(contrast, 1.0);
        assert!(make_chart(&g, ChartKind::Bars { frequency: 0.6 }).is_err());
    }

    #[test]
    fn usaf_like_is_binary_with_dark_background() {
        let g = GeometryConfig::tiled(8, 8, 8, 8);
        let f = make_chart(&g, ChartKind::UsafLike).unwrap();
        assert!(f.data().iter().all(|&v| v == 0.0 || v == 1.0));
        let bright = f.mean();
        assert!(bright > 0.1 && bright < 0.5, "{bright}");
        let g = GeometryConfig::tiled(8, 8, 2, 2);
        let f = make_chart(&g, ChartKind::UsafLike).unwrap();
        assert!(f.max() == 1.0);
    }

    #[test]
    fn still_object_repeats() {
        let g = GeometryConfig::tiled(4, 4, 4, 4);
        let obj = MovingObject {
            height: 3,
            width: 4,
            top: 2,
            left: 1,
            intensity: 1.0,
            background: 0.2,
        };
        let v = make_moving_scene(&g, &obj, (0.0, 0.0), 5, 30.0).unwrap();
        assert!(v.frames().windows(2).all(|w| w[0] == w[1]));
        assert!(make_moving_scene(&g, &obj, (0.0, 4.0), 5, 30.0).is_err());
    }
}
