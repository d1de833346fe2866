//! Dense floating-point helpers: numerical rank, null spaces and
//! least-squares solves built on the SVD.

use faer::Mat;
use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default relative rank tolerance, `max(rows, cols) * eps`.
pub fn default_tolerance(rows: usize, cols: usize) -> f64 {
    rows.max(cols).max(1) as f64 * f64::EPSILON
}

/// Outcome of a numerical rank decision.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    /// Singular values in non-increasing order.
    pub singular_values: Vec<f64>,
    /// Relative tolerance used.
    pub tol: f64,
    /// Absolute cut-off, `tol * sigma_max`.
    pub threshold: f64,
}

impl RankInfo {
    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Separation between the retained and discarded singular values.
    ///
    /// `sigma_r / sigma_{r+1}` when a discarded value exists and is nonzero,
    /// otherwise `sigma_r / threshold`. Infinite when the threshold is zero.
    pub fn gap_ratio(&self) -> f64 {
        if self.rank == 0 {
            return 0.0;
        }
        let kept = self.singular_values[self.rank - 1];
        let below = self
            .singular_values
            .get(self.rank)
            .copied()
            .filter(|s| *s > 0.0)
            .unwrap_or(self.threshold);
        if below > 0.0 {
            kept / below
        } else {
            f64::INFINITY
        }
    }
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteEntry)
    }
}

/// SVD `m = u diag(s) v_t`, singular values non-increasing.
struct Svd {
    u: DMatrix<f64>,
    s: Vec<f64>,
    v_t: DMatrix<f64>,
}

fn to_faer(m: &DMatrix<f64>) -> Mat<f64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Thin factors, or a square `v_t` spanning the whole domain with `full_v`.
///
/// nalgebra's bidiagonal SVD returns inaccurate factors for some exactly
/// rank-deficient matrices, which are the normal case here.
fn svd(m: &DMatrix<f64>, full_v: bool) -> Result<Svd> {
    let a = to_faer(m);
    let (u, s, v) = if full_v {
        let d = a.svd().map_err(|_| Error::SvdFailed)?;
        (from_faer(d.U()), d.S().column_vector().iter().copied().collect(), from_faer(d.V()))
    } else {
        let d = a.thin_svd().map_err(|_| Error::SvdFailed)?;
        (from_faer(d.U()), d.S().column_vector().iter().copied().collect(), from_faer(d.V()))
    };
    Ok(Svd { u, s, v_t: v.transpose() })
}

fn sorted_singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(Vec::new());
    }
    let mut sv = svd(m, false)?.s;
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Number of singular values above `tol * sigma_max`.
///
/// `tol = None` selects [`default_tolerance`].
pub fn numerical_rank(m: &DMatrix<f64>, tol: Option<f64>) -> Result<RankInfo> {
    check_finite(m)?;
    let tol = tol.unwrap_or_else(|| default_tolerance(m.nrows(), m.ncols()));
    let singular_values = sorted_singular_values(m)?;
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    let threshold = tol * sigma_max;
    let rank = if sigma_max == 0.0 {
        0
    } else {
        singular_values.iter().filter(|s| **s > threshold).count()
    };
    Ok(RankInfo {
        rank,
        singular_values,
        tol,
        threshold,
    })
}

/// Orthonormal basis (as columns) of the right null space of `m`.
pub fn null_space(m: &DMatrix<f64>, tol: Option<f64>) -> Result<DMatrix<f64>> {
    check_finite(m)?;
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if rows == 0 {
        return Ok(DMatrix::identity(cols, cols));
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(rows, cols));
    let Svd { s, v_t, .. } = svd(m, true)?;
    let sigma_max = s.first().copied().unwrap_or(0.0);
    let threshold = tol * sigma_max;
    // Directions beyond min(rows, cols) have singular value zero.
    let rank = if sigma_max == 0.0 {
        0
    } else {
        s.iter().filter(|v| **v > threshold).count()
    };
    Ok(v_t.rows(rank, cols - rank).transpose())
}

/// Orthonormal basis (as rows) of the left null space of `m`.
pub fn left_null_space(m: &DMatrix<f64>, tol: Option<f64>) -> Result<DMatrix<f64>> {
    Ok(null_space(&m.transpose(), tol)?.transpose())
}

/// Orthonormal basis of `{ g : 1^T g = 0 }` as the columns of an
/// `n x (n-1)` matrix, from the Householder reflector sending `1/sqrt(n)`
/// to the first unit vector.
pub fn ones_complement(n: usize) -> DMatrix<f64> {
    if n <= 1 {
        return DMatrix::zeros(n, 0);
    }
    let s = 1.0 / (n as f64).sqrt();
    let mut v = DVector::from_element(n, s);
    v[0] -= 1.0;
    let vv = v.dot(&v);
    let reflector = DMatrix::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
    reflector.columns(1, n - 1).into_owned()
}

/// Minimum-norm least-squares solution of `a x = b`, discarding singular
/// values below `tol * sigma_max`.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, tol: Option<f64>) -> Result<DVector<f64>> {
    check_finite(a)?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEntry);
    }
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "least squares with {} rows and right-hand side of length {}",
            a.nrows(),
            b.len()
        )));
    }
    if a.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    if a.nrows() == 0 {
        return Ok(DVector::zeros(a.ncols()));
    }
    let tol = tol.unwrap_or_else(|| default_tolerance(a.nrows(), a.ncols()));
    let Svd { u, s, v_t } = svd(a, false)?;
    let sigma_max = s.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Ok(DVector::zeros(a.ncols()));
    }
    let threshold = tol * sigma_max;
    let mut coeffs = u.transpose() * b;
    for (c, sigma) in coeffs.iter_mut().zip(s.iter()) {
        *c = if *sigma > threshold { *c / sigma } else { 0.0 };
    }
    Ok(v_t.transpose() * coeffs)
}

/// Stack a row of ones below `m`.
pub fn append_ones_row(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::from_element(r + 1, c, 1.0);
    out.view_mut((0, 0), (r, c)).copy_from(m);
    out
}

/// Vertically stack blocks with equal column counts.
pub fn vstack(blocks: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    if blocks.iter().any(|b| b.ncols() != cols) {
        return Err(Error::DimensionMismatch(
            "stacked blocks have different column counts".into(),
        ));
    }
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, 0), (b.nrows(), cols)).copy_from(*b);
        at += b.nrows();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_has_full_rank() {
        let info = numerical_rank(&DMatrix::identity(3, 3), Some(1e-10)).unwrap();
        assert_eq!(info.rank, 3);
        assert_eq!(info.singular_values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn repeated_rows_have_rank_one() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(numerical_rank(&m, Some(1e-10)).unwrap().rank, 1);
    }

    #[test]
    fn tiny_singular_value_is_discarded() {
        // Exact rational rank of diag(1, 1e-14) is 2; relative to 1e-10 it is 1.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-14]);
        assert_eq!(numerical_rank(&m, Some(1e-10)).unwrap().rank, 1);
        assert_eq!(numerical_rank(&m, Some(1e-16)).unwrap().rank, 2);
    }

    #[test]
    fn non_finite_is_rejected() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, f64::NAN]);
        assert!(matches!(numerical_rank(&m, None), Err(Error::NonFiniteEntry)));
    }

    #[test]
    fn zero_matrix_rank_zero() {
        let info = numerical_rank(&DMatrix::zeros(3, 4), None).unwrap();
        assert_eq!(info.rank, 0);
    }

    #[test]
    fn null_spaces_annihilate() {
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 2.0, 3.0, 4.0, 2.0, 4.0, 6.0, 8.0]);
        let n = null_space(&m, None).unwrap();
        assert_eq!(n.ncols(), 3);
        assert!((&m * &n).norm() < 1e-12);
        let l = left_null_space(&m, None).unwrap();
        assert_eq!(l.nrows(), 1);
        assert!((&l * &m).norm() < 1e-12);
    }

    #[test]
    fn ones_complement_is_orthonormal() {
        for n in 1..7 {
            let b = ones_complement(n);
            assert_eq!(b.ncols(), n.saturating_sub(1));
            let ones = DVector::from_element(n, 1.0);
            assert!((b.transpose() * ones).norm() < 1e-13);
            let gram = b.transpose() * &b;
            assert!((gram - DMatrix::identity(n - 1, n - 1)).norm() < 1e-13);
        }
    }

    #[test]
    fn gap_ratio_uses_next_singular_value() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-12]);
        let info = numerical_rank(&m, Some(1e-8)).unwrap();
        assert_eq!(info.rank, 1);
        assert!((info.gap_ratio() - 1e12).abs() < 1.0);
    }

    /// Wide, rank-deficient window matrix of a first-order system.
    fn window_matrix(pole: f64, inputs: &[f64], depth: usize) -> DMatrix<f64> {
        let mut x = 0.3;
        let mut w = Vec::new();
        for u in inputs {
            w.push([*u, x]);
            x = pole * x + u + 0.5;
        }
        let cols = w.len() - depth + 1;
        let h = DMatrix::from_fn(2 * depth, cols, |i, j| w[j + i / 2][i % 2]);
        &h * ones_complement(cols)
    }

    proptest::proptest! {
        #[test]
        fn lstsq_solves_consistent_rank_deficient_systems(
            pole in -0.95f64..0.95,
            inputs in proptest::collection::vec(-1.0f64..1.0, 22),
            depth in 3usize..7,
            tall in proptest::bool::ANY,
        ) {
            let wide = window_matrix(pole, &inputs, depth);
            let a = if tall { wide.transpose() } else { wide };
            let x = DVector::from_fn(a.ncols(), |i, _| ((i * 7 % 5) as f64 - 2.0) / 3.0);
            let b = &a * &x;
            let sol = lstsq(&a, &b, None).unwrap();
            proptest::prop_assert!((&a * &sol - &b).norm() <= 1e-12 * (1.0 + b.norm()));
            let n = null_space(&a, None).unwrap();
            proptest::prop_assert!((&a * &n).norm() <= 1e-12 * (1.0 + a.norm()));
        }
    }
}
