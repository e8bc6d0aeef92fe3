#![allow(dead_code)]

use fpcam_core::{Frame, StackedSystem};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense stacked operator assembled straight from map entries and masks.
pub fn dense_operator(system: &StackedSystem) -> DMatrix<f64> {
    let n = system.geometry.n_dmd();
    let m = system.geometry.n_sensor();
    let group = system.group_size();
    let mut a = DMatrix::zeros(system.n_rows(), system.n_unknowns());
    for (t, p) in system.patterns.patterns().iter().enumerate() {
        let k = t / group;
        for (i, j, w) in system.map.entries() {
            if p.mask()[j] {
                a[(t * m + i, k * n + j)] = w;
            }
        }
    }
    a
}

/// Least-squares solution by SVD (minimum norm when rank deficient).
pub fn dense_least_squares(system: &StackedSystem) -> Vec<f64> {
    let a = dense_operator(system);
    let y = DVector::from_vec(system.measurement_vector());
    let svd = a.svd(true, true);
    svd.solve(&y, 1e-12).unwrap().iter().copied().collect()
}

pub fn random_frame(rows: usize, cols: usize, seed: u64) -> Frame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Frame::from_fn(rows, cols, |_, _| rng.random::<f64>())
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    d / n
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
