use crate::error::{Error, Result};
use crate::frame::{Frame, VideoCube};

/// Median over the `(2r_y+1)×(2r_x+1)×(2r_t+1)` neighborhood of every
/// voxel, with replicate boundary.
pub fn median_filter_3d(cube: &VideoCube, radius: (usize, usize, usize)) -> Result<VideoCube> {
    let (ry, rx, rt) = radius;
    let (rows, cols) = cube.frame_shape();
    let frames = cube.frames();
    let n = frames.len();
    let window = (2 * ry + 1) * (2 * rx + 1) * (2 * rt + 1);
    if window > 1 << 20 {
        return Err(Error::Config(format!("median window of {window} voxels is too large")));
    }
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;
    let mut buf = Vec::with_capacity(window);
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let mut f = Frame::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                buf.clear();
                for dt in -(rt as isize)..=rt as isize {
                    let src = &frames[clamp(t as isize + dt, n)];
                    for dr in -(ry as isize)..=ry as isize {
                        let rr = clamp(r as isize + dr, rows);
                        for dc in -(rx as isize)..=rx as isize {
                            buf.push(src.get(rr, clamp(c as isize + dc, cols)));
                        }
                    }
                }
                let mid = buf.len() / 2;
                let (_, m, _) = buf.select_nth_unstable_by(mid, f64::total_cmp);
                f.set(r, c, *m);
            }
        }
        out.push(f);
    }
    VideoCube::new(out, cube.frame_rate())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_cube_unchanged() {
        let cube = VideoCube::new(vec![Frame::filled(4, 3, 0.3); 3], 10.0).unwrap();
        assert_eq!(median_filter_3d(&cube, (1, 1, 1)).unwrap(), cube);
    }
}
