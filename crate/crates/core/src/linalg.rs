//! Tiny dense linear algebra for symmetric matrices of size m <= 3.
//!
//! Everything the crate needs from a Hessian: determinant, SPD solve, and
//! the inverse diagonal. Matrices are stored row-major in a flat slice.

pub(crate) fn det(m: usize, a: &[f64]) -> f64 {
    match m {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => unreachable!("dimension capped at 3"),
    }
}

/// Solve `A x = b` by Gaussian elimination with partial pivoting.
pub(crate) fn solve(m: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let mut w = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..m {
        let piv = (col..m).max_by(|&r, &s| {
            w[r * m + col]
                .abs()
                .total_cmp(&w[s * m + col].abs())
        })?;
        if w[piv * m + col] == 0.0 {
            return None;
        }
        if piv != col {
            for c in 0..m {
                w.swap(col * m + c, piv * m + c);
            }
            x.swap(col, piv);
        }
        for r in col + 1..m {
            let factor = w[r * m + col] / w[col * m + col];
            if factor != 0.0 {
                for c in col..m {
                    w[r * m + c] -= factor * w[col * m + c];
                }
                x[r] -= factor * x[col];
            }
        }
    }
    for col in (0..m).rev() {
        let mut s = x[col];
        for c in col + 1..m {
            s -= w[col * m + c] * x[c];
        }
        let d = w[col * m + col];
        if d == 0.0 {
            return None;
        }
        x[col] = s / d;
    }
    Some(x)
}

/// Diagonal of the inverse of a symmetric positive definite matrix.
pub(crate) fn inv_diag(m: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(m);
    for j in 0..m {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        let col = solve(m, a, &e)?;
        if !(col[j].is_finite() && col[j] > 0.0) {
            return None;
        }
        out.push(col[j]);
    }
    Some(out)
}
