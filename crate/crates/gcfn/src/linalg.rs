//! Small dense kernels for the fixed MLP family.
//!
//! Everything is row-major `f64`. Accumulating kernels add contributions in
//! a fixed index order (the reduction dimension runs in order per output
//! element), which keeps training bit-reproducible for a fixed seed and
//! binary while still letting the compiler vectorize the inner loops.

/// Dot product with four accumulators so the FMA chains overlap.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..chunks {
        let j = i * 4;
        s0 += a[j] * b[j];
        s1 += a[j + 1] * b[j + 1];
        s2 += a[j + 2] * b[j + 2];
        s3 += a[j + 3] * b[j + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for j in chunks * 4..a.len() {
        s += a[j] * b[j];
    }
    s
}

/// y += alpha * x
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// out = W x + b, with W row-major [rows x cols].
#[inline]
pub fn matvec_bias(w: &[f64], b: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for (r, o) in out.iter_mut().enumerate() {
        *o = b[r] + dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// out += Wᵀ u, with W row-major [rows x cols]; u has length rows.
#[inline]
pub fn matvec_t_acc(w: &[f64], rows: usize, cols: usize, u: &[f64], out: &mut [f64]) {
    debug_assert_eq!(u.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for r in 0..rows {
        axpy(u[r], &w[r * cols..(r + 1) * cols], out);
    }
}

/// C = W X + b 1ᵀ where W is [m x k], X is [k x n], C is [m x n]; every
/// column of C gets the bias. Overwrites C. The k reduction runs in order.
pub fn mat_mat_bias(w: &[f64], b: &[f64], m: usize, k: usize, x: &[f64], n: usize, c: &mut [f64]) {
    debug_assert_eq!(w.len(), m * k);
    debug_assert_eq!(x.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        crow.fill(b[i]);
        let wrow = &w[i * k..(i + 1) * k];
        for (kk, &wik) in wrow.iter().enumerate() {
            axpy(wik, &x[kk * n..(kk + 1) * n], crow);
        }
    }
}

/// C += A Bᵀ where A is [m x k], B is [n x k], C is [m x n]. The k reduction
/// is an in-order dot per element.
pub fn acc_abt(a: &[f64], b: &[f64], m: usize, n: usize, k: usize, c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        for (j, cij) in crow.iter_mut().enumerate() {
            *cij += dot(arow, &b[j * k..(j + 1) * k]);
        }
    }
}

/// C += Wᵀ Y where W is [m x p] (row-major), Y is [m x n], C is [p x n].
pub fn acc_wt_y(w: &[f64], y: &[f64], m: usize, p: usize, n: usize, c: &mut [f64]) {
    debug_assert_eq!(w.len(), m * p);
    debug_assert_eq!(y.len(), m * n);
    debug_assert_eq!(c.len(), p * n);
    for r in 0..m {
        let yrow = &y[r * n..(r + 1) * n];
        let wrow = &w[r * p..(r + 1) * p];
        for (i, &wri) in wrow.iter().enumerate() {
            axpy(wri, yrow, &mut c[i * n..(i + 1) * n]);
        }
    }
}
