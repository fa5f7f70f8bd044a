//! Small dense helpers over `nalgebra`.

use nalgebra::{DMatrix, DVector};

/// Minimum-norm least-squares solution of `A x = b` with singular values
/// below `rcond * sigma_max` treated as zero. Returns the solution and the
/// numerical rank.
pub fn lstsq_min_norm(a: &DMatrix<f64>, b: &DVector<f64>, rcond: f64) -> (DVector<f64>, usize) {
    let svd = a.clone().svd(true, true);
    let x = pinv_apply(&svd, b, rcond);
    (x, numerical_rank(&svd.singular_values, rcond))
}

pub(crate) fn pinv_apply(
    svd: &nalgebra::SVD<f64, nalgebra::Dyn, nalgebra::Dyn>,
    b: &DVector<f64>,
    rcond: f64,
) -> DVector<f64> {
    let u = svd.u.as_ref().expect("svd computed with U");
    let vt = svd.v_t.as_ref().expect("svd computed with V^T");
    let smax = svd.singular_values.max();
    let cut = rcond * smax;
    let utb = u.transpose() * b;
    let mut scaled = DVector::zeros(svd.singular_values.len());
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > cut && *s > 0.0 {
            scaled[i] = utb[i] / s;
        }
    }
    vt.transpose() * scaled
}

pub fn numerical_rank(singular_values: &DVector<f64>, rcond: f64) -> usize {
    let smax = singular_values.max();
    if smax <= 0.0 {
        return 0;
    }
    singular_values
        .iter()
        .filter(|s| **s > rcond * smax)
        .count()
}

/// Solves the square Newton system by LU, falling back to a truncated
/// pseudo-inverse when LU breaks down or produces non-finite output.
pub fn newton_step(j: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    if j.is_square() {
        if let Some(x) = j.clone().lu().solve(rhs) {
            if x.iter().all(|v| v.is_finite()) {
                return x;
            }
        }
    }
    lstsq_min_norm(j, rhs, 1e-14).0
}

/// `sigma_min / sigma_max`, 0 for the zero matrix.
pub fn inverse_condition(a: &DMatrix<f64>) -> f64 {
    let s = a.singular_values();
    let smax = s.max();
    if smax <= 0.0 || !smax.is_finite() {
        return 0.0;
    }
    s.min() / smax
}

/// Right singular vector of the smallest singular value.
pub fn null_vector(a: &DMatrix<f64>) -> DVector<f64> {
    let ncols = a.ncols();
    // pad to at least square so V has a full basis
    let padded = if a.nrows() < ncols {
        let mut m = DMatrix::zeros(ncols, ncols);
        m.view_mut((0, 0), (a.nrows(), ncols)).copy_from(a);
        m
    } else {
        a.clone()
    };
    let svd = padded.svd(false, true);
    let vt = svd.v_t.expect("svd computed with V^T");
    let (imin, _) =
        svd.singular_values
            .iter()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |acc, (i, s)| if *s < acc.1 { (i, *s) } else { acc },
            );
    vt.row(imin).transpose()
}

/// `|det A| / prod_i ||row_i||`, in `[0, 1]` by Hadamard's inequality.
pub fn relative_determinant(a: &DMatrix<f64>) -> f64 {
    let scale: f64 = a.row_iter().map(|r| r.norm()).product();
    if scale == 0.0 {
        return 0.0;
    }
    a.determinant().abs() / scale
}
