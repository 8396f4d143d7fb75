//! Small dense solvers with a fixed, fully specified operation order.

use nalgebra::DMatrix;

use crate::scalar::Scalar;

/// Solves `A X = B` by Gaussian elimination with partial pivoting.
///
/// Returns `None` when a pivot falls below `tol * max|A|`. For a 1x1
/// system the result is exactly `b / a`.
pub fn gauss_solve<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>, tol: T) -> Option<DMatrix<T>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "square system expected");
    assert_eq!(b.nrows(), n, "right-hand side rows must match");
    let k = b.ncols();
    let mut a = a.clone();
    let mut x = b.clone();
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if !(scale > T::zero()) || !scale.is_finite() {
        return None;
    }
    let limit = tol * scale;

    for col in 0..n {
        let (piv, pval) = (col..n)
            .map(|r| (r, a[(r, col)].abs()))
            .fold((col, -T::one()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pval > limit) {
            return None;
        }
        if piv != col {
            a.swap_rows(piv, col);
            x.swap_rows(piv, col);
        }
        let d = a[(col, col)];
        for r in col + 1..n {
            let f = a[(r, col)] / d;
            if f == T::zero() {
                continue;
            }
            for c in col..n {
                let v = a[(col, c)];
                a[(r, c)] -= f * v;
            }
            for c in 0..k {
                let v = x[(col, c)];
                x[(r, c)] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let d = a[(col, col)];
        for c in 0..k {
            let mut acc = x[(col, c)];
            for j in col + 1..n {
                acc -= a[(col, j)] * x[(j, c)];
            }
            x[(col, c)] = acc / d;
        }
    }
    Some(x)
}

/// Default relative pivot tolerance for systems of size `n`.
pub fn default_tol<T: Scalar>(n: usize) -> T {
    T::eps() * T::lit(64.0) * T::from_count(n.max(1))
}
