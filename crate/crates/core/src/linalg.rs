//! Small dense kernels shared by the sensing and solver code.

/// Dot product with eight independent accumulators so the loop vectorizes.
/// The summation order is fixed, so results are reproducible.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `y += a * x` and `z += b * x` in one pass over `x`.
#[inline]
pub fn axpy2(a: f64, b: f64, x: &[f64], y: &mut [f64], z: &mut [f64]) {
    debug_assert!(x.len() == y.len() && x.len() == z.len());
    for ((yi, zi), xi) in y.iter_mut().zip(z.iter_mut()).zip(x) {
        *yi += a * xi;
        *zi += b * xi;
    }
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}
