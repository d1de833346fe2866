use std::fmt;

use nalgebra::DMatrix;
use num_traits::One;

use super::poly::Poly;
use super::qmat::QMatrix;
use super::rational::{q_to_f64, Q};

/// Rectangular matrix of polynomials, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolyMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Poly::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Poly::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Poly>>) -> Self {
        let cols = rows.first().map(Vec::len).unwrap_or(0);
        Self::from_rows_with_cols(rows, cols)
    }

    /// Like [`from_rows`](Self::from_rows) but keeps `cols` when there are no rows.
    pub fn from_rows_with_cols(rows: Vec<Vec<Poly>>, cols: usize) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self {
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        }
    }

    /// Integer-coefficient shorthand: `rows[i][j]` lists ascending coefficients.
    pub fn from_int_rows(rows: &[Vec<Vec<i64>>]) -> Self {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|c| Poly::from_ints(c)).collect())
                .collect(),
        )
    }

    /// `R(xi) = sum_i coefficients[i] xi^i`; all blocks share a shape.
    pub fn from_coefficients(coefficients: &[QMatrix], rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |i, j| {
            Poly::from_coeffs(coefficients.iter().map(|c| c[(i, j)].clone()).collect())
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Poly) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self { rows, cols, entries }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Poly] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows_iter(&self) -> impl Iterator<Item = &[Poly]> {
        (0..self.rows).map(|i| self.row(i))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Poly::is_zero)
    }

    /// Maximum entry degree; `None` for the zero matrix.
    pub fn degree(&self) -> Option<usize> {
        self.entries.iter().filter_map(Poly::degree).max()
    }

    pub fn row_degree(&self, i: usize) -> Option<usize> {
        self.row(i).iter().filter_map(Poly::degree).max()
    }

    /// Constant matrix multiplying `xi^k`.
    pub fn coefficient(&self, k: usize) -> QMatrix {
        QMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].coeff(k))
    }

    /// `[R_0, ..., R_d]` as float blocks.
    pub fn coefficients_f64(&self) -> Vec<DMatrix<f64>> {
        let d = self.degree().unwrap_or(0);
        (0..=d)
            .map(|k| {
                DMatrix::from_fn(self.rows, self.cols, |i, j| q_to_f64(&self[(i, j)].coeff(k)))
            })
            .collect()
    }

    pub fn eval(&self, x: &Q) -> QMatrix {
        QMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)].eval(x))
    }

    pub fn eval_at_one(&self) -> QMatrix {
        self.eval(&Q::one())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn mul(&self, rhs: &PolyMatrix) -> PolyMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let prod = a * &rhs[(k, j)];
                    out[(i, j)] = &out[(i, j)] + &prod;
                }
            }
        }
        out
    }

    /// Rows `start..end`.
    pub fn select_rows(&self, start: usize, end: usize) -> Self {
        Self::from_fn(end - start, self.cols, |i, j| self[(start + i, j)].clone())
    }

    /// Columns `start..end`.
    pub fn select_cols(&self, start: usize, end: usize) -> Self {
        Self::from_fn(self.rows, end - start, |i, j| self[(i, start + j)].clone())
    }

    /// Stack `other` below `self`.
    pub fn vstack(&self, other: &PolyMatrix) -> Self {
        assert_eq!(self.cols, other.cols, "column counts differ");
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            entries,
        }
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// `row[target] += factor * row[source]`.
    pub fn add_row_multiple(&mut self, target: usize, source: usize, factor: &Poly) {
        if factor.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let delta = factor * &self[(source, j)];
            self[(target, j)] = &self[(target, j)] + &delta;
        }
    }

    /// `col[target] += factor * col[source]`.
    pub fn add_col_multiple(&mut self, target: usize, source: usize, factor: &Poly) {
        if factor.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let delta = &self[(i, source)] * factor;
            self[(i, target)] = &self[(i, target)] + &delta;
        }
    }

    pub fn scale_row(&mut self, i: usize, s: &Q) {
        for j in 0..self.cols {
            self[(i, j)] = self[(i, j)].scale(s);
        }
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Poly {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        if n == 0 {
            return Poly::one();
        }
        let mut m = self.clone();
        let mut negate = false;
        let mut prev = Poly::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m[(i, k)].is_zero()) else {
                    return Poly::zero();
                };
                m.swap_rows(k, p);
                negate = !negate;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &(&m[(i, j)] * &m[(k, k)]) - &(&m[(i, k)] * &m[(k, j)]);
                    m[(i, j)] = num.exact_div(&prev).expect("Bareiss division is exact");
                }
                m[(i, k)] = Poly::zero();
            }
            prev = m[(k, k)].clone();
        }
        let det = m[(n - 1, n - 1)].clone();
        if negate {
            -det
        } else {
            det
        }
    }

    /// Square with a nonzero constant determinant.
    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.determinant().is_unit()
    }

    pub fn constant(m: &QMatrix) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| Poly::constant(m[(i, j)].clone()))
    }

    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.rows)
            .filter(|&i| self.row(i).iter().all(Poly::is_zero))
            .collect()
    }

    /// Entries off the leading diagonal are zero.
    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)].is_zero()))
    }
}

impl std::ops::Index<(usize, usize)> for PolyMatrix {
    type Output = Poly;
    fn index(&self, (i, j): (usize, usize)) -> &Poly {
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for PolyMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Poly {
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(ToString::to_string).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}
