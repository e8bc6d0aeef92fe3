//! Impulse-scan calibration of the sensor-from-DMD map.
//!
//! The DMD is divided into a grid of groups and one mirror per group is
//! turned on per capture, so every mirror is pulsed exactly once over the
//! run. Each sensor pixel's response in a capture is attributed to the
//! pulsed mirror nearest to the pixel's nominal block center. As long as
//! the groups are wider than an impulse footprint this recovers every
//! column of the map exactly; with one group per sensor block (the default)
//! that holds for unblurred optics.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::frame::{Frame, SensorFrame};
use crate::model::{build_map, simulate_capture, GeometryConfig, NoiseSpec, OpticsConfig, Scene};
use crate::patterns::{group_bounds, pixel_scan_sequence, scan_position};
use crate::sparse::SparseMap;

#[derive(Debug, Clone)]
pub struct CalibrationRun {
    pub geometry: GeometryConfig,
    pub true_optics: OpticsConfig,
    pub group_rows: usize,
    pub group_cols: usize,
    /// `(pattern index, sensor response)` in capture order.
    pub captures: Vec<(usize, SensorFrame)>,
    pub noise: NoiseSpec,
}

/// One group per sensor block.
pub fn default_groups(geometry: &GeometryConfig) -> (usize, usize) {
    (geometry.sensor_rows, geometry.sensor_cols)
}

pub fn run_calibration(
    geometry: &GeometryConfig,
    optics: &OpticsConfig,
    groups: (usize, usize),
    noise: &NoiseSpec,
) -> Result<CalibrationRun> {
    let map = build_map(geometry, optics)?;
    let seq = pixel_scan_sequence(geometry, groups.0, groups.1)?;
    let white = Frame::filled(geometry.dmd_rows, geometry.dmd_cols, 1.0);
    let frames = simulate_capture(&map, &seq, Scene::Static(&white), noise)?;
    Ok(CalibrationRun {
        geometry: *geometry,
        true_optics: *optics,
        group_rows: groups.0,
        group_cols: groups.1,
        captures: frames.into_iter().enumerate().collect(),
        noise: *noise,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualStats {
    /// Median over columns of ‖ĉ_j − c_j‖ / ‖c_j‖ (columns with empty truth skipped).
    pub median_column_rel_error: f64,
    pub max_column_rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct CalibrationEstimate {
    pub map_est: SparseMap,
    pub support_threshold: f64,
    pub residual_stats: Option<ResidualStats>,
}

pub const DEFAULT_SUPPORT_THRESHOLD: f64 = 0.01;

/// Nearest pulsed mirror to each sensor pixel's nominal block center for capture `p`.
fn attribution(
    geometry: &GeometryConfig,
    row_groups: &[(usize, usize)],
    col_groups: &[(usize, usize)],
    p: usize,
) -> Vec<Option<usize>> {
    let (br, bc) = (geometry.block_rows as i64, geometry.block_cols as i64);
    let group_of = |groups: &[(usize, usize)], pos: usize| {
        groups
            .iter()
            .position(|&(s, e)| pos >= s && pos < e)
            .unwrap_or(groups.len() - 1)
    };
    let mut out = Vec::with_capacity(geometry.n_sensor());
    for a in 0..geometry.sensor_rows {
        // doubled coordinates keep the block center integral
        let cy2 = (2 * a as i64 + 1) * br - 1;
        let gi = group_of(row_groups, (cy2 / 2) as usize);
        for b in 0..geometry.sensor_cols {
            let cx2 = (2 * b as i64 + 1) * bc - 1;
            let gj = group_of(col_groups, (cx2 / 2) as usize);
            let mut best: Option<(i64, usize)> = None;
            for ri in gi.saturating_sub(2)..(gi + 3).min(row_groups.len()) {
                for ci in gj.saturating_sub(2)..(gj + 3).min(col_groups.len()) {
                    if let Some((r, c)) = scan_position(row_groups[ri], col_groups[ci], p) {
                        let dy = 2 * r as i64 - cy2;
                        let dx = 2 * c as i64 - cx2;
                        let d = dy * dy + dx * dx;
                        let j = r * geometry.dmd_cols + c;
                        if best.is_none_or(|(bd, bj)| (d, j) < (bd, bj)) {
                            best = Some((d, j));
                        }
                    }
                }
            }
            out.push(best.map(|(_, j)| j));
        }
    }
    out
}

/// Column `j` of the estimate is mirror `j`'s impulse response with entries
/// below `τ · max(column)` dropped and negative values clamped to zero.
pub fn estimate_map(run: &CalibrationRun, support_threshold: f64) -> Result<CalibrationEstimate> {
    if !(support_threshold > 0.0 && support_threshold < 1.0) {
        return Err(Error::Config(format!(
            "support threshold {support_threshold} must lie in (0, 1)"
        )));
    }
    let g = &run.geometry;
    let row_groups = group_bounds(g.dmd_rows, run.group_rows)?;
    let col_groups = group_bounds(g.dmd_cols, run.group_cols)?;
    let max_h = row_groups.iter().map(|(s, e)| e - s).max().unwrap_or(0);
    let max_w = col_groups.iter().map(|(s, e)| e - s).max().unwrap_or(0);
    let expected = max_h * max_w;

    let seen: BTreeSet<usize> = run.captures.iter().map(|(p, _)| *p).collect();
    if seen.len() != expected || run.captures.len() != expected || seen.iter().any(|&p| p >= expected) {
        return Err(Error::Invalid(format!(
            "incomplete calibration run: {} of {expected} impulse captures",
            seen.len()
        )));
    }

    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); g.n_dmd()];
    for (p, frame) in &run.captures {
        if frame.data.len() != g.n_sensor() {
            return Err(Error::Dimension {
                what: "calibration capture",
                expected: g.n_sensor(),
                actual: frame.data.len(),
            });
        }
        let owner = attribution(g, &row_groups, &col_groups, *p);
        for (i, j) in owner.into_iter().enumerate() {
            if let Some(j) = j {
                columns[j].push((i, frame.data[i]));
            }
        }
    }

    let mut triplets = Vec::new();
    for (j, col) in columns.iter().enumerate() {
        let max = col.iter().map(|&(_, v)| v).fold(0.0, f64::max);
        if max <= 0.0 {
            continue;
        }
        let cut = support_threshold * max;
        triplets.extend(
            col.iter()
                .filter(|&&(_, v)| v >= cut && v > 0.0)
                .map(|&(i, v)| (i, j, v)),
        );
    }
    let map_est = SparseMap::from_triplets(g.n_sensor(), g.n_dmd(), triplets)?
        .with_shapes(g.sensor_shape(), g.dmd_shape())?;
    Ok(CalibrationEstimate {
        map_est,
        support_threshold,
        residual_stats: None,
    })
}

/// [`estimate_map`] plus per-column errors against the simulated camera's true map.
pub fn estimate_map_with_truth(run: &CalibrationRun, support_threshold: f64) -> Result<CalibrationEstimate> {
    let mut est = estimate_map(run, support_threshold)?;
    let truth = build_map(&run.geometry, &run.true_optics)?;
    est.residual_stats = column_residuals(&est.map_est, &truth)?;
    Ok(est)
}

fn column_residuals(est: &SparseMap, truth: &SparseMap) -> Result<Option<ResidualStats>> {
    same_dims(est, truth)?;
    let mut errs = Vec::new();
    for j in 0..truth.n_dmd() {
        let t: Vec<(usize, f64)> = truth.column(j).collect();
        let tn = t.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        if tn == 0.0 {
            continue;
        }
        let e: Vec<(usize, f64)> = est.column(j).collect();
        let diff = merge_diff_sq(&e, &t);
        errs.push(diff.sqrt() / tn);
    }
    if errs.is_empty() {
        return Ok(None);
    }
    errs.sort_by(f64::total_cmp);
    Ok(Some(ResidualStats {
        median_column_rel_error: median_sorted(&errs),
        max_column_rel_error: *errs.last().unwrap(),
    }))
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Σ (a_k − b_k)² over the union of two index-sorted sparse vectors.
fn merge_diff_sq(a: &[(usize, f64)], b: &[(usize, f64)]) -> f64 {
    let (mut i, mut k, mut s) = (0, 0, 0.0);
    while i < a.len() || k < b.len() {
        match (a.get(i), b.get(k)) {
            (Some(&(ia, va)), Some(&(ib, vb))) if ia == ib => {
                s += (va - vb).powi(2);
                i += 1;
                k += 1;
            }
            (Some(&(ia, va)), Some(&(ib, _))) if ia < ib => {
                s += va * va;
                i += 1;
            }
            (Some(_), Some(&(_, vb))) => {
                s += vb * vb;
                k += 1;
            }
            (Some(&(_, va)), None) => {
                s += va * va;
                i += 1;
            }
            (None, Some(&(_, vb))) => {
                s += vb * vb;
                k += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    s
}

fn same_dims(a: &SparseMap, b: &SparseMap) -> Result<()> {
    if a.n_sensor() != b.n_sensor() || a.n_dmd() != b.n_dmd() {
        return Err(Error::Dimension {
            what: "map size",
            expected: b.n_sensor() * b.n_dmd(),
            actual: a.n_sensor() * a.n_dmd(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationError {
    /// Fraction of estimated entries that are true entries; 1 when nothing was predicted.
    pub support_precision: f64,
    pub support_recall: f64,
    /// ‖Ĉ − C‖_F / ‖C‖_F
    pub frobenius_rel_error: f64,
    /// Set when the estimate has no entries at all.
    pub no_predictions: bool,
}

pub fn calibration_error(est: &SparseMap, truth: &SparseMap) -> Result<CalibrationError> {
    same_dims(est, truth)?;
    let e: BTreeSet<(usize, usize)> = est.entries().map(|(i, j, _)| (i, j)).collect();
    let t: BTreeSet<(usize, usize)> = truth.entries().map(|(i, j, _)| (i, j)).collect();
    let hits = e.intersection(&t).count();
    let no_predictions = e.is_empty();
    let support_precision = if no_predictions { 1.0 } else { hits as f64 / e.len() as f64 };
    let support_recall = if t.is_empty() { 1.0 } else { hits as f64 / t.len() as f64 };

    let mut diff_sq = 0.0;
    for j in 0..truth.n_dmd() {
        let a: Vec<_> = est.column(j).collect();
        let b: Vec<_> = truth.column(j).collect();
        diff_sq += merge_diff_sq(&a, &b);
    }
    let tn = truth.frobenius_norm();
    let frobenius_rel_error = if tn == 0.0 { diff_sq.sqrt() } else { diff_sq.sqrt() / tn };
    Ok(CalibrationError {
        support_precision,
        support_recall,
        frobenius_rel_error,
        no_predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_block_impulses_are_columns() {
        let g = GeometryConfig::tiled(1, 1, 2, 2);
        let run = run_calibration(&g, &OpticsConfig::ideal(), (1, 1), &NoiseSpec::none()).unwrap();
        assert_eq!(run.captures.len(), 4);
        for (p, f) in &run.captures {
            assert_eq!(f.index, *p);
            assert_eq!(f.data, vec![0.25]);
        }
    }

    #[test]
    fn ideal_noiseless_recovers_every_column() {
        let g = GeometryConfig::tiled(3, 4, 4, 2);
        let run = run_calibration(&g, &OpticsConfig::ideal(), default_groups(&g), &NoiseSpec::none()).unwrap();
        let est = estimate_map(&run, DEFAULT_SUPPORT_THRESHOLD).unwrap();
        assert_eq!(est.map_est.nnz(), g.n_dmd());
        assert_eq!(est.map_est, build_map(&g, &OpticsConfig::ideal()).unwrap());
    }

    #[test]
    fn incomplete_run_is_rejected() {
        let g = GeometryConfig::tiled(2, 2, 2, 2);
        let mut run = run_calibration(&g, &OpticsConfig::ideal(), (2, 2), &NoiseSpec::none()).unwrap();
        run.captures.pop();
        assert!(estimate_map(&run, 0.01).is_err());
    }

    #[test]
    fn error_conventions() {
        let g = GeometryConfig::tiled(2, 2, 2, 2);
        let truth = build_map(&g, &OpticsConfig::ideal()).unwrap();
        let same = calibration_error(&truth, &truth).unwrap();
        assert_eq!(
            (same.support_precision, same.support_recall, same.frobenius_rel_error),
            (1.0, 1.0, 0.0)
        );
        let empty = SparseMap::from_triplets(4, 16, vec![]).unwrap();
        let e = calibration_error(&empty, &truth).unwrap();
        assert!(e.no_predictions);
        assert_eq!((e.support_precision, e.support_recall, e.frobenius_rel_error), (1.0, 0.0, 1.0));

        let n = truth.n_dmd();
        let missing: Vec<_> = truth.entries().filter(|&(_, j, _)| j != 5).collect();
        let est = SparseMap::from_triplets(4, 16, missing).unwrap();
        let e = calibration_error(&est, &truth).unwrap();
        assert_eq!(e.support_recall, (n - 1) as f64 / n as f64);
        assert_eq!(e.support_precision, 1.0);

        let wrong = SparseMap::from_triplets(4, 15, vec![]).unwrap();
        assert!(calibration_error(&wrong, &truth).is_err());
    }
}
