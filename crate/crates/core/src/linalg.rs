//! Small dense vector helpers. Summation order is always left to right.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// ‖a − b‖ / ‖b‖, or ‖a‖ when `b` is zero.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let nb = norm(b);
    let d = dist(a, b);
    if nb == 0.0 {
        d
    } else {
        d / nb
    }
}

/// y ← y + alpha·x
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
