use super::matrix::PolyMatrix;
use super::poly::Poly;
use crate::error::{Error, Result};

/// `u * r * v = diag(invariant_factors)` padded with zeros.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub u: PolyMatrix,
    pub v: PolyMatrix,
    /// Monic, each dividing the next.
    pub invariant_factors: Vec<Poly>,
}

impl SmithDecomposition {
    pub fn rank(&self) -> usize {
        self.invariant_factors.len()
    }

    /// The padded diagonal matrix `u * r * v`.
    pub fn diagonal(&self) -> PolyMatrix {
        let mut d = PolyMatrix::zeros(self.u.nrows(), self.v.nrows());
        for (i, f) in self.invariant_factors.iter().enumerate() {
            d[(i, i)] = f.clone();
        }
        d
    }
}

fn min_degree_entry(a: &PolyMatrix, k: usize) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize, usize)> = None;
    for i in k..a.nrows() {
        for j in k..a.ncols() {
            if let Some(d) = a[(i, j)].degree() {
                if best.map_or(true, |(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}

/// Smith form by elementary row and column operations, always pivoting on
/// a minimum-degree entry.
pub fn smith_form(r: &PolyMatrix) -> Result<SmithDecomposition> {
    if r.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let (g, q) = (r.nrows(), r.ncols());
    let mut a = r.clone();
    let mut u = PolyMatrix::identity(g);
    let mut v = PolyMatrix::identity(q);
    let mut k = 0;
    while k < g.min(q) {
        let Some((pi, pj)) = min_degree_entry(&a, k) else {
            break;
        };
        a.swap_rows(k, pi);
        u.swap_rows(k, pi);
        a.swap_cols(k, pj);
        v.swap_cols(k, pj);
        loop {
            for i in k + 1..g {
                if !a[(i, k)].is_zero() {
                    let quot = -&a[(i, k)].div_rem(&a[(k, k)]).0;
                    a.add_row_multiple(i, k, &quot);
                    u.add_row_multiple(i, k, &quot);
                }
            }
            if let Some(i) = (k + 1..g)
                .filter(|&i| !a[(i, k)].is_zero())
                .min_by_key(|&i| a[(i, k)].degree())
            {
                a.swap_rows(k, i);
                u.swap_rows(k, i);
                continue;
            }
            for j in k + 1..q {
                if !a[(k, j)].is_zero() {
                    let quot = -&a[(k, j)].div_rem(&a[(k, k)]).0;
                    a.add_col_multiple(j, k, &quot);
                    v.add_col_multiple(j, k, &quot);
                }
            }
            if let Some(j) = (k + 1..q)
                .filter(|&j| !a[(k, j)].is_zero())
                .min_by_key(|&j| a[(k, j)].degree())
            {
                a.swap_cols(k, j);
                v.swap_cols(k, j);
                continue;
            }
            // Row and column k are clear; enforce divisibility of the rest.
            let offender = (k + 1..g).find(|&i| {
                (k + 1..q).any(|j| !a[(k, k)].divides(&a[(i, j)]))
            });
            match offender {
                Some(i) => {
                    a.add_row_multiple(k, i, &Poly::one());
                    u.add_row_multiple(k, i, &Poly::one());
                }
                None => break,
            }
        }
        let lc = a[(k, k)].leading().expect("pivot is nonzero").clone();
        let inv = num_traits::Inv::inv(lc);
        a.scale_row(k, &inv);
        u.scale_row(k, &inv);
        k += 1;
    }
    let invariant_factors = (0..k).map(|i| a[(i, i)].clone()).collect();
    Ok(SmithDecomposition {
        u,
        v,
        invariant_factors,
    })
}
