//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const SVD_MAX_ITERATIONS: usize = 10_000;

/// Left singular vectors and singular values of `m`, singular values in
/// descending order. Returns `min(rows, cols)` columns.
pub(crate) fn left_singular(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let svd =
        nalgebra::linalg::SVD::try_new(m.clone(), true, false, f64::EPSILON, SVD_MAX_ITERATIONS)
            .ok_or_else(|| Error::Decomposition(format!("{}x{} matrix", m.nrows(), m.ncols())))?;
    let u = svd.u.expect("left singular vectors requested");
    Ok((u, svd.singular_values.iter().copied().collect()))
}

/// Right singular vectors (as columns) and singular values, descending.
pub(crate) fn right_singular(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let svd =
        nalgebra::linalg::SVD::try_new(m.clone(), false, true, f64::EPSILON, SVD_MAX_ITERATIONS)
            .ok_or_else(|| Error::Decomposition(format!("{}x{} matrix", m.nrows(), m.ncols())))?;
    let v_t = svd.v_t.expect("right singular vectors requested");
    Ok((
        v_t.transpose(),
        svd.singular_values.iter().copied().collect(),
    ))
}

/// Extends the orthonormal columns of `basis` (`n x r`) to `total` orthonormal
/// columns. The first `r` columns are returned unchanged; the extra columns
/// come from the Householder factorisation of `basis`, so the result is
/// deterministic.
pub(crate) fn complete_basis(basis: &DMatrix<f64>, total: usize) -> DMatrix<f64> {
    let (n, r) = basis.shape();
    assert!(
        r <= total && total <= n,
        "cannot complete {n}x{r} basis to {total} columns"
    );
    if r == total {
        return basis.clone();
    }

    // Householder vectors reducing `basis` to upper-triangular form.
    let mut work = basis.clone();
    let mut reflectors: Vec<DVector<f64>> = Vec::with_capacity(r);
    for c in 0..r {
        let x = work.view((c, c), (n - c, 1)).clone_owned();
        let alpha = x.norm();
        let mut v = DVector::zeros(n);
        v.rows_mut(c, n - c).copy_from(&x.column(0));
        let sign = if x[0] >= 0.0 { 1.0 } else { -1.0 };
        v[c] += sign * alpha;
        let vnorm2 = v.norm_squared();
        if vnorm2 > 0.0 {
            // Apply H = I - 2 v v^T / (v^T v) to the remaining columns.
            for col in c..r {
                let dot = v.dot(&work.column(col));
                let scale = 2.0 * dot / vnorm2;
                work.column_mut(col).axpy(-scale, &v, 1.0);
            }
        }
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{r-1}; its columns r.. are orthogonal to span(basis).
    let mut out = DMatrix::zeros(n, total);
    out.columns_mut(0, r).copy_from(basis);
    for col in r..total {
        let mut e = DVector::zeros(n);
        e[col] = 1.0;
        for v in reflectors.iter().rev() {
            let vnorm2 = v.norm_squared();
            if vnorm2 > 0.0 {
                let scale = 2.0 * v.dot(&e) / vnorm2;
                e.axpy(-scale, v, 1.0);
            }
        }
        out.column_mut(col).copy_from(&e);
    }
    out
}
