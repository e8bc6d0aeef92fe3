//! The sensor-from-DMD calibration matrix.

use crate::error::{check_dim, Error, Result};

/// Sparse nonnegative map from DMD mirrors to sensor pixels.
///
/// Stored twice, row-compressed for the forward product and
/// column-compressed for the adjoint, so both products have a fixed
/// summation order per output element. Entries are kept in canonical
/// order: sorted by sensor index, then by mirror index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMap {
    sensor_shape: (usize, usize),
    dmd_shape: (usize, usize),
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    weights: Vec<f64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    col_weights: Vec<f64>,
}

impl SparseMap {
    /// Builds a map from `(sensor, mirror, weight)` triplets in any order.
    ///
    /// Shapes default to a single row; use [`SparseMap::with_shapes`] to
    /// attach raster dimensions.
    pub fn from_triplets(
        n_sensor: usize,
        n_dmd: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        for w in entries.windows(2) {
            if (w[0].0, w[0].1) == (w[1].0, w[1].1) {
                return Err(Error::Invalid(format!(
                    "duplicate map entry ({}, {})",
                    w[0].0, w[0].1
                )));
            }
        }
        for &(i, j, w) in &entries {
            if i >= n_sensor || j >= n_dmd {
                return Err(Error::Invalid(format!(
                    "map entry ({i}, {j}) outside {n_sensor}x{n_dmd}"
                )));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Invalid(format!(
                    "map weight {w} at ({i}, {j}) must be positive"
                )));
            }
        }

        let nnz = entries.len();
        let mut row_ptr = vec![0usize; n_sensor + 1];
        let mut col_idx = Vec::with_capacity(nnz);
        let mut weights = Vec::with_capacity(nnz);
        for &(i, j, w) in &entries {
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            weights.push(w);
        }
        for i in 0..n_sensor {
            row_ptr[i + 1] += row_ptr[i];
        }

        // transpose; iterating rows in order keeps row indices sorted per column
        let mut col_ptr = vec![0usize; n_dmd + 1];
        for &j in &col_idx {
            col_ptr[j + 1] += 1;
        }
        for j in 0..n_dmd {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut fill = col_ptr.clone();
        let mut row_idx = vec![0usize; nnz];
        let mut col_weights = vec![0.0; nnz];
        for i in 0..n_sensor {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let j = col_idx[k];
                row_idx[fill[j]] = i;
                col_weights[fill[j]] = weights[k];
                fill[j] += 1;
            }
        }

        Ok(Self {
            sensor_shape: (1, n_sensor),
            dmd_shape: (1, n_dmd),
            row_ptr,
            col_idx,
            weights,
            col_ptr,
            row_idx,
            col_weights,
        })
    }

    pub fn with_shapes(mut self, sensor: (usize, usize), dmd: (usize, usize)) -> Result<Self> {
        check_dim("sensor pixel count", self.n_sensor(), sensor.0 * sensor.1)?;
        check_dim("mirror count", self.n_dmd(), dmd.0 * dmd.1)?;
        self.sensor_shape = sensor;
        self.dmd_shape = dmd;
        Ok(self)
    }

    pub fn n_sensor(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_dmd(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn sensor_shape(&self) -> (usize, usize) {
        self.sensor_shape
    }

    pub fn dmd_shape(&self) -> (usize, usize) {
        self.dmd_shape
    }

    pub fn nnz(&self) -> usize {
        self.weights.len()
    }

    /// Entries in canonical order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n_sensor()).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.weights[k]))
        })
    }

    /// `(sensor index, weight)` pairs of column `j`, sorted by sensor index.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], self.col_weights[k]))
    }

    pub fn column_sum(&self, j: usize) -> f64 {
        self.column(j).map(|(_, w)| w).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.weights[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        crate::linalg::norm(&self.weights)
    }

    /// Every weight multiplied by `factor` (which must be positive).
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::Invalid(format!("scale factor {factor}")));
        }
        let mut out = self.clone();
        out.weights.iter_mut().for_each(|w| *w *= factor);
        out.col_weights.iter_mut().for_each(|w| *w *= factor);
        Ok(out)
    }

    /// y = C · (mask ⊙ x)
    pub fn apply_masked(&self, mask: &[bool], x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(mask.len(), self.n_dmd());
        debug_assert_eq!(x.len(), self.n_dmd());
        debug_assert_eq!(y.len(), self.n_sensor());
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                // multiply instead of branching: masks are close to coin flips
                acc += self.weights[k] * x[j] * f64::from(u8::from(mask[j]));
            }
            *yi = acc;
        }
    }

    /// x = mask ⊙ (Cᵀ y)
    pub fn apply_masked_adjoint(&self, mask: &[bool], y: &[f64], x: &mut [f64]) {
        x.iter_mut().for_each(|v| *v = 0.0);
        self.accumulate_masked_adjoint(mask, y, x);
    }

    /// x += mask ⊙ (Cᵀ y)
    pub fn accumulate_masked_adjoint(&self, mask: &[bool], y: &[f64], x: &mut [f64]) {
        debug_assert_eq!(mask.len(), self.n_dmd());
        debug_assert_eq!(y.len(), self.n_sensor());
        debug_assert_eq!(x.len(), self.n_dmd());
        for (j, xj) in x.iter_mut().enumerate() {
            let s: f64 = (self.col_ptr[j]..self.col_ptr[j + 1])
                .map(|k| self.col_weights[k] * y[self.row_idx[k]])
                .sum();
            *xj += s * f64::from(u8::from(mask[j]));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_order_and_transpose() {
        let m = SparseMap::from_triplets(
            2,
            3,
            vec![(1, 2, 0.5), (0, 1, 0.25), (1, 0, 1.0), (0, 0, 2.0)],
        )
        .unwrap();
        let e: Vec<_> = m.entries().collect();
        assert_eq!(e, vec![(0, 0, 2.0), (0, 1, 0.25), (1, 0, 1.0), (1, 2, 0.5)]);
        assert_eq!(m.column(0).collect::<Vec<_>>(), vec![(0, 2.0), (1, 1.0)]);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.get(1, 2), 0.5);
        assert_eq!(m.column_sum(0), 3.0);
    }

    #[test]
    fn rejects_bad_entries() {
        assert!(SparseMap::from_triplets(1, 1, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(SparseMap::from_triplets(1, 1, vec![(0, 0, 0.0)]).is_err());
        assert!(SparseMap::from_triplets(1, 1, vec![(1, 0, 1.0)]).is_err());
        assert!(SparseMap::from_triplets(1, 1, vec![(0, 0, f64::NAN)]).is_err());
    }

    #[test]
    fn shapes_must_match_counts() {
        let m = SparseMap::from_triplets(4, 16, vec![]).unwrap();
        assert!(m.clone().with_shapes((2, 2), (4, 4)).is_ok());
        assert!(m.with_shapes((2, 2), (4, 5)).is_err());
    }
}
