//! Small dense solvers used in the inner loops of path tracking.

use num_complex::Complex64;

/// Gaussian elimination with partial pivoting on a row-major `n×n` matrix,
/// solving `a·x = b` in place (`b` becomes `x`). Returns the ratio of the
/// largest to the smallest pivot magnitude as a cheap condition estimate, or
/// `None` when a pivot vanishes.
pub fn solve_complex_in_place(a: &mut [Complex64], n: usize, b: &mut [Complex64]) -> Option<f64> {
    debug_assert_eq!(a.len(), n * n);
    let mut pmax = 0.0f64;
    let mut pmin = f64::INFINITY;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].norm_sqr();
        for row in col + 1..n {
            let v = a[row * n + col].norm_sqr();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        let p = a[col * n + col];
        let mag = best.sqrt();
        pmax = pmax.max(mag);
        pmin = pmin.min(mag);
        let inv = p.inv();
        for row in col + 1..n {
            let f = a[row * n + col] * inv;
            if f == Complex64::new(0.0, 0.0) {
                continue;
            }
            let (top, bottom) = a.split_at_mut(row * n);
            let src = &top[col * n + col + 1..col * n + n];
            let dst = &mut bottom[col + 1..n];
            for (d, s) in dst.iter_mut().zip(src) {
                *d -= f * s;
            }
            let bc = b[col];
            b[row] -= f * bc;
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    Some(pmax / pmin)
}

/// Real counterpart of [`solve_complex_in_place`].
pub fn solve_real_in_place(a: &mut [f64], n: usize, b: &mut [f64]) -> Option<f64> {
    let mut pmax = 0.0f64;
    let mut pmin = f64::INFINITY;
    for col in 0..n {
        let mut piv = col;
        let mut best = a[col * n + col].abs();
        for row in col + 1..n {
            let v = a[row * n + col].abs();
            if v > best {
                best = v;
                piv = row;
            }
        }
        if best == 0.0 || !best.is_finite() {
            return None;
        }
        if piv != col {
            for k in 0..n {
                a.swap(col * n + k, piv * n + k);
            }
            b.swap(col, piv);
        }
        pmax = pmax.max(best);
        pmin = pmin.min(best);
        let p = a[col * n + col];
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            if f == 0.0 {
                continue;
            }
            for k in col + 1..n {
                a[row * n + k] -= f * a[col * n + k];
            }
            b[row] -= f * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut s = b[col];
        for k in col + 1..n {
            s -= a[col * n + k] * b[k];
        }
        b[col] = s / a[col * n + col];
    }
    Some(pmax / pmin)
}

pub fn norm_c(x: &[Complex64]) -> f64 {
    x.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
