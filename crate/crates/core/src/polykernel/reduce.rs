//! Unimodular row and column reductions over `Q[xi]`.
//!
//! Every reduction pivots on a minimum-degree nonzero entry and records the
//! elementary operations it applies in an accumulated transform.

use num_traits::{One, Zero};

use super::matrix::PolyMatrix;
use super::poly::Poly;
use super::qmat::QMatrix;
use super::rational::Q;

/// `transform * input = reduced`, `transform` unimodular.
#[derive(Clone, Debug)]
pub struct RowReduction {
    pub transform: PolyMatrix,
    pub reduced: PolyMatrix,
    /// Number of nonzero leading rows; the remaining rows are zero.
    pub rank: usize,
}

fn min_degree_in<I: Iterator<Item = usize>>(indices: I, entry: impl Fn(usize) -> Poly) -> Option<usize> {
    indices
        .filter_map(|i| entry(i).degree().map(|d| (d, i)))
        .min()
        .map(|(_, i)| i)
}

/// Row echelon form by Euclidean row operations: the first `rank` rows are
/// nonzero with strictly increasing pivot columns, the rest are zero.
pub fn row_echelon(r: &PolyMatrix) -> RowReduction {
    let (g, q) = (r.nrows(), r.ncols());
    let mut a = r.clone();
    let mut u = PolyMatrix::identity(g);
    let mut row = 0;
    for col in 0..q {
        if row == g {
            break;
        }
        loop {
            let Some(p) = min_degree_in(row..g, |i| a[(i, col)].clone()) else {
                break;
            };
            a.swap_rows(row, p);
            u.swap_rows(row, p);
            let mut clean = true;
            for i in row + 1..g {
                if a[(i, col)].is_zero() {
                    continue;
                }
                let (quot, rem) = a[(i, col)].div_rem(&a[(row, col)]);
                let neg = -&quot;
                a.add_row_multiple(i, row, &neg);
                u.add_row_multiple(i, row, &neg);
                if !rem.is_zero() {
                    clean = false;
                }
            }
            if clean {
                row += 1;
                break;
            }
        }
    }
    RowReduction {
        transform: u,
        reduced: a,
        rank: row,
    }
}

/// Leading row coefficient matrix: row `i` holds the coefficients of
/// `xi^{d_i}` where `d_i` is the degree of row `i`.
pub fn leading_row_coefficients(r: &PolyMatrix) -> QMatrix {
    QMatrix::from_fn(r.nrows(), r.ncols(), |i, j| match r.row_degree(i) {
        Some(d) => r[(i, j)].coeff(d),
        None => Q::zero(),
    })
}

/// Row-proper (row-reduced) form of a matrix without zero rows and with
/// full row rank: the leading row coefficient matrix ends up with full row
/// rank, so the row degrees are minimal over all unimodular multiples.
pub fn row_proper(r: &PolyMatrix) -> RowReduction {
    let g = r.nrows();
    let mut a = r.clone();
    let mut u = PolyMatrix::identity(g);
    loop {
        let lead = leading_row_coefficients(&a);
        let dependencies = lead.left_null_space();
        let Some(alpha) = dependencies.first() else {
            break;
        };
        let degrees: Vec<usize> = (0..g)
            .map(|i| a.row_degree(i).expect("full row rank input has no zero rows"))
            .collect();
        let k = (0..g)
            .filter(|&i| !alpha[i].is_zero())
            .max_by_key(|&i| (degrees[i], i))
            .expect("nonzero dependency");
        for i in 0..g {
            if i == k || alpha[i].is_zero() {
                continue;
            }
            let factor = Poly::monomial(&alpha[i] / &alpha[k], degrees[k] - degrees[i]);
            a.add_row_multiple(k, i, &factor);
            u.add_row_multiple(k, i, &factor);
        }
        assert!(
            a.row_degree(k).map_or(false, |d| d < degrees[k]),
            "row reduction must lower the degree of the dependent row"
        );
    }
    RowReduction {
        transform: u,
        reduced: a,
        rank: g,
    }
}

/// `input * transform = [H, 0]` with `H` square lower triangular.
#[derive(Clone, Debug)]
pub struct ColumnReduction {
    pub transform: PolyMatrix,
    pub lower: PolyMatrix,
}

/// Column reduction of a full-row-rank `g x q` matrix to `[H, 0]` with
/// `H` lower triangular and nonsingular.
pub fn column_lower_form(r: &PolyMatrix) -> ColumnReduction {
    let (g, q) = (r.nrows(), r.ncols());
    let mut a = r.clone();
    let mut v = PolyMatrix::identity(q);
    for row in 0..g {
        loop {
            let p = min_degree_in(row..q, |j| a[(row, j)].clone())
                .expect("full row rank leaves a nonzero entry right of the diagonal");
            a.swap_cols(row, p);
            v.swap_cols(row, p);
            let mut clean = true;
            for j in row + 1..q {
                if a[(row, j)].is_zero() {
                    continue;
                }
                let (quot, rem) = a[(row, j)].div_rem(&a[(row, row)]);
                let neg = -&quot;
                a.add_col_multiple(j, row, &neg);
                v.add_col_multiple(j, row, &neg);
                if !rem.is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
    }
    ColumnReduction {
        transform: v,
        lower: a,
    }
}

/// Rank over the rational function field, by fraction-free elimination.
/// Rows are made primitive after each step to keep degrees down.
pub fn poly_rank(r: &PolyMatrix) -> usize {
    let (g, q) = (r.nrows(), r.ncols());
    let mut rows: Vec<Vec<Poly>> = r.rows_iter().map(<[Poly]>::to_vec).collect();
    let mut rank = 0;
    for col in 0..q {
        let Some(p) = (rank..g).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            if row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            let pivot = &pivot_row[col];
            for (entry, pe) in row.iter_mut().zip(&pivot_row) {
                *entry = &(&*entry * pivot) - &(&factor * pe);
            }
            make_primitive(row);
        }
        rank += 1;
        if rank == g {
            break;
        }
    }
    rank
}

fn make_primitive(row: &mut [Poly]) {
    let content = row
        .iter()
        .fold(Poly::zero(), |acc, p| if p.is_zero() { acc } else { Poly::gcd(&acc, p) });
    if content.is_zero() || content == Poly::one() {
        return;
    }
    for p in row.iter_mut() {
        *p = p.exact_div(&content).expect("content divides every entry");
    }
}

/// Clear denominators and divide out the integer content so that each row
/// has coprime integer coefficients; the first nonzero coefficient is made
/// positive.
pub fn integer_normalize_row(row: &[Poly]) -> Vec<Poly> {
    use num_integer::Integer;
    use num_traits::Signed;
    let mut lcm = num_bigint::BigInt::one();
    let mut gcd = num_bigint::BigInt::zero();
    for c in row.iter().flat_map(Poly::coeffs) {
        lcm = lcm.lcm(c.denom());
    }
    for c in row.iter().flat_map(Poly::coeffs) {
        let scaled = (c * Q::from_integer(lcm.clone())).to_integer();
        gcd = gcd.gcd(&scaled);
    }
    if gcd.is_zero() {
        return row.to_vec();
    }
    let first_negative = row
        .iter()
        .flat_map(Poly::coeffs)
        .next()
        .is_some_and(Signed::is_negative);
    let mut factor = Q::new(lcm, gcd);
    if first_negative {
        factor = -factor;
    }
    row.iter().map(|p| p.scale(&factor)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(rows: &[Vec<Vec<i64>>]) -> PolyMatrix {
        PolyMatrix::from_int_rows(rows)
    }

    fn second_example() -> PolyMatrix {
        pm(&[
            vec![vec![1, 1], vec![0, 1], vec![2, 1]],
            vec![vec![-1, 0, 1], vec![0, -1, 1], vec![-2, 1, 1]],
        ])
    }

    #[test]
    fn ranks_of_reference_matrices() {
        let full = pm(&[
            vec![vec![1], vec![], vec![]],
            vec![vec![], vec![1, -1], vec![]],
        ]);
        assert_eq!(poly_rank(&full), 2);
        assert_eq!(poly_rank(&second_example()), 1);
        assert_eq!(poly_rank(&PolyMatrix::zeros(2, 3)), 0);
    }

    #[test]
    fn echelon_reproduces_input() {
        let r = second_example();
        let red = row_echelon(&r);
        assert_eq!(red.rank, 1);
        assert_eq!(red.transform.mul(&r), red.reduced);
        assert!(red.reduced.select_rows(1, 2).is_zero());
        assert!(red.transform.is_unimodular());
    }

    #[test]
    fn row_proper_lowers_degrees() {
        // [[1, xi], [xi, xi^2 + xi]] has determinant xi; minimal row degrees (0, 1).
        let r = pm(&[vec![vec![1], vec![0, 1]], vec![vec![0, 1], vec![0, 1, 1]]]);
        let red = row_proper(&r);
        assert_eq!(red.transform.mul(&r), red.reduced);
        let mut degrees: Vec<usize> = (0..2).map(|i| red.reduced.row_degree(i).unwrap()).collect();
        degrees.sort();
        assert_eq!(degrees, vec![0, 1]);
        assert_eq!(leading_row_coefficients(&red.reduced).rank(), 2);
    }

    #[test]
    fn column_form_is_lower_triangular() {
        let r = pm(&[vec![vec![1, 1], vec![0, 1], vec![2, 1]]]);
        let red = column_lower_form(&r);
        assert_eq!(r.mul(&red.transform), red.lower);
        assert!(red.lower[(0, 1)].is_zero() && red.lower[(0, 2)].is_zero());
        assert!(red.transform.is_unimodular());
    }

    #[test]
    fn determinant_of_unimodular_product() {
        // [[1, xi], [0, 1]] * [[1, 0], [xi^2, 1]] has determinant 1.
        let a = pm(&[vec![vec![1], vec![0, 1]], vec![vec![], vec![1]]]);
        let b = pm(&[vec![vec![1], vec![]], vec![vec![0, 0, 1], vec![1]]]);
        assert_eq!(a.mul(&b).determinant(), Poly::one());
        let d = pm(&[vec![vec![0, 1], vec![]], vec![vec![], vec![0, 0, 1]]]);
        assert_eq!(d.determinant(), Poly::from_ints(&[0, 0, 0, 1]));
    }

    #[test]
    fn integer_normalization() {
        use crate::polykernel::rational::q_frac;
        let row = vec![
            Poly::from_coeffs(vec![q_frac(-1, 2), q_frac(1, 2)]),
            Poly::from_coeffs(vec![q_frac(-1, 2)]),
        ];
        let out = integer_normalize_row(&row);
        assert_eq!(out, vec![Poly::from_ints(&[1, -1]), Poly::from_ints(&[1])]);
    }
}
