//! Affine kernel representations `R(sigma) w = c` and their exact decision
//! procedures: consistency, minimality, equivalence, controllability and lag.

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::Serialize;

use super::matrix::PolyMatrix;
use super::poly::Poly;
use super::qmat::QMatrix;
use super::rational::{q_from_f64, q_to_f64, Q};
use super::reduce::{column_lower_form, integer_normalize_row, row_echelon, row_proper};
use super::smith::smith_form;
use crate::error::{Error, Result};
use crate::linalg;

/// Right-hand side of `R(sigma) w = c`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Offset {
    /// The same vector at every time step.
    Constant(Vec<Q>),
    /// Samples `c(1), ..., c(T)` of a time-varying offset over a finite window.
    Sequence(Vec<Vec<Q>>),
}

impl Offset {
    /// Samples over `[1, len]`; a constant offset is repeated.
    pub fn window(&self, len: usize) -> Vec<Vec<Q>> {
        match self {
            Offset::Constant(c) => vec![c.clone(); len],
            Offset::Sequence(s) => s.iter().take(len).cloned().collect(),
        }
    }

    fn block_len(&self) -> Option<usize> {
        match self {
            Offset::Constant(c) => Some(c.len()),
            Offset::Sequence(s) => s.first().map(Vec::len),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineKernelRep {
    r: PolyMatrix,
    offset: Offset,
}

impl AffineKernelRep {
    pub fn new(r: PolyMatrix, offset: Offset) -> Result<Self> {
        let g = r.nrows();
        let ok = match &offset {
            Offset::Constant(c) => c.len() == g,
            Offset::Sequence(s) => !s.is_empty() && s.iter().all(|c| c.len() == g),
        };
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "offset blocks of length {:?} for {} rows",
                offset.block_len(),
                g
            )));
        }
        Ok(Self { r, offset })
    }

    pub fn constant(r: PolyMatrix, c: Vec<Q>) -> Result<Self> {
        Self::new(r, Offset::Constant(c))
    }

    pub fn r(&self) -> &PolyMatrix {
        &self.r
    }

    pub fn offset(&self) -> &Offset {
        &self.offset
    }

    pub fn rows(&self) -> usize {
        self.r.nrows()
    }

    pub fn variables(&self) -> usize {
        self.r.ncols()
    }

    fn constant_offset(&self) -> Result<&[Q]> {
        match &self.offset {
            Offset::Constant(c) => Ok(c),
            Offset::Sequence(_) => Err(Error::DimensionMismatch(
                "operation requires a constant offset".into(),
            )),
        }
    }

    /// `(U R, U(1) c)`.
    pub fn premultiply(&self, u: &PolyMatrix) -> Result<Self> {
        let c = self.constant_offset()?;
        if u.ncols() != self.rows() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} transform for {} rows",
                u.nrows(),
                u.ncols(),
                self.rows()
            )));
        }
        Self::constant(u.mul(&self.r), u.eval_at_one().mul_vec(c))
    }

    /// Append a zero row to `R` and a zero entry to `c`.
    pub fn with_zero_row(&self) -> Result<Self> {
        let c = self.constant_offset()?;
        let r = self.r.vstack(&PolyMatrix::zeros(1, self.variables()));
        let mut c = c.to_vec();
        c.push(Q::zero());
        Self::constant(r, c)
    }
}

/// Rank of `R` over the rational functions.
pub fn poly_rank(r: &PolyMatrix) -> usize {
    super::reduce::poly_rank(r)
}

/// Generators of the left syzygy module `{ lambda : lambda R = 0 }`.
///
/// Taken from the bottom rows of the Smith left transform, then row-reduced
/// to minimal degrees and scaled to coprime integer coefficients. Empty when
/// `R` has full row rank.
pub fn syzygy_basis(r: &PolyMatrix) -> Vec<Vec<Poly>> {
    let g = r.nrows();
    let basis = if r.is_zero() {
        PolyMatrix::identity(g)
    } else {
        let smith = smith_form(r).expect("nonzero matrix");
        smith.u.select_rows(smith.rank(), g)
    };
    if basis.nrows() == 0 {
        return Vec::new();
    }
    let reduced = row_proper(&basis).reduced;
    reduced.rows_iter().map(integer_normalize_row).collect()
}

/// Largest degree among the syzygy generators (0 when there are none).
pub fn syzygy_degree_bound(syzygies: &[Vec<Poly>]) -> usize {
    syzygies
        .iter()
        .flatten()
        .filter_map(Poly::degree)
        .max()
        .unwrap_or(0)
}

fn dot_at_one(lambda: &[Poly], c: &[Q]) -> Q {
    lambda
        .iter()
        .zip(c)
        .fold(Q::zero(), |acc, (l, ci)| acc + l.eval(&Q::one()) * ci)
}

/// Consistency of a constant offset: `lambda(1) c = 0` for every syzygy
/// generator `lambda`.
pub fn consistent_constant(rep: &AffineKernelRep) -> Result<bool> {
    let c = rep.constant_offset()?;
    let by_syzygies = syzygy_basis(&rep.r)
        .iter()
        .all(|lambda| dot_at_one(lambda, c).is_zero());
    let echelon = row_echelon(&rep.r);
    let transformed = echelon.transform.eval_at_one().mul_vec(c);
    let by_echelon = transformed[echelon.rank..].iter().all(Zero::is_zero);
    debug_assert_eq!(by_syzygies, by_echelon, "syzygy and echelon consistency tests disagree");
    Ok(by_syzygies)
}

/// Block-Toeplitz truncation of `R(sigma)` acting on `w` over `[1, T + d]`,
/// a `gT x q(T + d)` matrix with `R_0, ..., R_d` along each block row.
pub fn block_toeplitz(r: &PolyMatrix, window: usize) -> QMatrix {
    let (g, q) = (r.nrows(), r.ncols());
    let d = r.degree().unwrap_or(0);
    let coeffs: Vec<QMatrix> = (0..=d).map(|k| r.coefficient(k)).collect();
    let mut out = QMatrix::zeros(g * window, q * (window + d));
    for t in 0..window {
        for (k, ck) in coeffs.iter().enumerate() {
            for i in 0..g {
                for j in 0..q {
                    out[(t * g + i, (t + k) * q + j)] = ck[(i, j)].clone();
                }
            }
        }
    }
    out
}

/// Finite-window consistency report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WindowConsistency {
    pub consistent: bool,
    pub window: usize,
    pub rank: usize,
    pub augmented_rank: usize,
    /// Maximal degree of the syzygy generators.
    pub syzygy_degree: usize,
    /// The window is long enough for every generator to act on it, so the
    /// verdict on this window is definitive for the supplied samples.
    pub certified: bool,
}

/// Rouche-Capelli test `rank R_T = rank [R_T, c]` on the supplied window
/// `c(1), ..., c(T)` in exact arithmetic.
pub fn consistent_sequence(r: &PolyMatrix, c: &[Vec<Q>]) -> Result<WindowConsistency> {
    let window = c.len();
    let required = r.degree().unwrap_or(0) + 1;
    if window < required {
        return Err(Error::WindowTooShort { window, required });
    }
    if c.iter().any(|ct| ct.len() != r.nrows()) {
        return Err(Error::DimensionMismatch("offset samples have the wrong length".into()));
    }
    let toeplitz = block_toeplitz(r, window);
    let rhs = QMatrix::from_fn(toeplitz.nrows(), 1, |i, _| c[i / r.nrows()][i % r.nrows()].clone());
    let rank = toeplitz.rank();
    let augmented_rank = toeplitz.hstack(&rhs).rank();
    let syzygy_degree = syzygy_degree_bound(&syzygy_basis(r));
    Ok(WindowConsistency {
        consistent: rank == augmented_rank,
        window,
        rank,
        augmented_rank,
        syzygy_degree,
        certified: window >= syzygy_degree + 1,
    })
}

/// The same test in floating point for measured offsets.
pub fn consistent_sequence_f64(
    r: &PolyMatrix,
    c: &[Vec<f64>],
    tol: Option<f64>,
) -> Result<WindowConsistency> {
    let window = c.len();
    let required = r.degree().unwrap_or(0) + 1;
    if window < required {
        return Err(Error::WindowTooShort { window, required });
    }
    let g = r.nrows();
    if c.iter().any(|ct| ct.len() != g) {
        return Err(Error::DimensionMismatch("offset samples have the wrong length".into()));
    }
    let toeplitz = block_toeplitz(r, window).to_f64();
    let mut augmented = DMatrix::zeros(toeplitz.nrows(), toeplitz.ncols() + 1);
    augmented.view_mut((0, 0), toeplitz.shape()).copy_from(&toeplitz);
    for i in 0..toeplitz.nrows() {
        augmented[(i, toeplitz.ncols())] = c[i / g][i % g];
    }
    let rank = linalg::numerical_rank(&toeplitz, tol)?.rank;
    let augmented_rank = linalg::numerical_rank(&augmented, tol)?.rank;
    let syzygy_degree = syzygy_degree_bound(&syzygy_basis(r));
    Ok(WindowConsistency {
        consistent: rank == augmented_rank,
        window,
        rank,
        augmented_rank,
        syzygy_degree,
        certified: window >= syzygy_degree + 1,
    })
}

/// Consistency of either offset kind.
pub fn is_consistent(rep: &AffineKernelRep) -> Result<bool> {
    match rep.offset() {
        Offset::Constant(_) => consistent_constant(rep),
        Offset::Sequence(c) => Ok(consistent_sequence(rep.r(), c)?.consistent),
    }
}

/// Equivalent representation with full row rank `R`, row-reduced to
/// minimal row degrees. Fails when the dropped rows carry a nonzero offset.
pub fn minimize(rep: &AffineKernelRep) -> Result<AffineKernelRep> {
    let c = rep.constant_offset()?;
    let echelon = row_echelon(&rep.r);
    let transformed = echelon.transform.eval_at_one().mul_vec(c);
    if transformed[echelon.rank..].iter().any(|v| !v.is_zero()) {
        return Err(Error::InconsistentRepresentation);
    }
    let r1 = echelon.reduced.select_rows(0, echelon.rank);
    let c1 = transformed[..echelon.rank].to_vec();
    if echelon.rank == 0 {
        return AffineKernelRep::constant(r1, c1);
    }
    let proper = row_proper(&r1);
    let c1 = proper.transform.eval_at_one().mul_vec(&c1);
    AffineKernelRep::constant(proper.reduced, c1)
}

fn require_consistent(rep: &AffineKernelRep) -> Result<()> {
    if is_consistent(rep)? {
        Ok(())
    } else {
        Err(Error::InconsistentRepresentation)
    }
}

/// Whether two consistent representations define the same behavior.
///
/// After minimizing both to `(R1, c1)` and `(R2, c2)`, the behaviors agree
/// iff `R2 = X R1` for a unimodular `X` and `c2 = X(1) c1`. `X` is found by
/// exact division against the column-reduced form `R1 V = [H, 0]`.
pub fn equivalent(rep1: &AffineKernelRep, rep2: &AffineKernelRep) -> Result<bool> {
    require_consistent(rep1)?;
    require_consistent(rep2)?;
    if rep1.variables() != rep2.variables() {
        return Ok(false);
    }
    let m1 = minimize(rep1)?;
    let m2 = minimize(rep2)?;
    if m1.rows() != m2.rows() {
        return Ok(false);
    }
    let g = m1.rows();
    if g == 0 {
        return Ok(true);
    }
    let Some(x) = left_quotient(m2.r(), m1.r()) else {
        return Ok(false);
    };
    if !x.is_unimodular() {
        return Ok(false);
    }
    let mapped = x.eval_at_one().mul_vec(m1.constant_offset()?);
    Ok(mapped.as_slice() == m2.constant_offset()?)
}

/// The unique polynomial `X` with `X * divisor = dividend`, if any;
/// `divisor` must have full row rank.
pub fn left_quotient(dividend: &PolyMatrix, divisor: &PolyMatrix) -> Option<PolyMatrix> {
    let g = divisor.nrows();
    let cols = column_lower_form(divisor);
    let k = dividend.mul(&cols.transform);
    if !k.select_cols(g, k.ncols()).is_zero() {
        return None;
    }
    let h = cols.lower;
    let rows = dividend.nrows();
    let mut x = PolyMatrix::zeros(rows, g);
    // X H = K with H lower triangular: solve columns from the last.
    for j in (0..g).rev() {
        for i in 0..rows {
            let mut acc = k[(i, j)].clone();
            for l in j + 1..g {
                acc = &acc - &(&x[(i, l)] * &h[(l, j)]);
            }
            x[(i, j)] = acc.exact_div(&h[(j, j)])?;
        }
    }
    debug_assert_eq!(&x.mul(divisor), dividend);
    Some(x)
}

/// Residual `sum_i R_i w(t + i) - c(t)` for `t = 1, ..., L - deg R` on a
/// window `w` given as `L x q` samples. Row `t - 1` of the result is the
/// residual at time `t`.
pub fn behavior_apply(rep: &AffineKernelRep, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (len, q) = w.shape();
    if q != rep.variables() {
        return Err(Error::DimensionMismatch(format!(
            "window has {q} variables, representation {}",
            rep.variables()
        )));
    }
    let d = rep.r.degree().unwrap_or(0);
    if len < d + 1 {
        return Err(Error::WindowTooShort {
            window: len,
            required: d + 1,
        });
    }
    let steps = len - d;
    let offsets = rep.offset.window(steps);
    if offsets.len() < steps {
        return Err(Error::WindowTooShort {
            window: offsets.len(),
            required: steps,
        });
    }
    let coeffs = rep.r.coefficients_f64();
    let g = rep.rows();
    let mut out = DMatrix::zeros(steps, g);
    for t in 0..steps {
        for (k, ck) in coeffs.iter().enumerate() {
            let sample = w.row(t + k).transpose();
            let contrib = ck * sample;
            for i in 0..g {
                out[(t, i)] += contrib[i];
            }
        }
        for i in 0..g {
            out[(t, i)] -= q_to_f64(&offsets[t][i]);
        }
    }
    Ok(out)
}

/// Controllability: the minimal `R` has only unit invariant factors, i.e.
/// `rank R(lambda)` is the same for every complex `lambda`.
pub fn controllable_kernel(rep: &AffineKernelRep) -> Result<bool> {
    require_consistent(rep)?;
    let echelon = row_echelon(&rep.r);
    if echelon.rank == 0 {
        return Ok(true);
    }
    let r1 = echelon.reduced.select_rows(0, echelon.rank);
    let smith = smith_form(&r1)?;
    Ok(smith.invariant_factors.iter().all(Poly::is_unit))
}

/// Lag: the largest row degree of a minimal row-reduced representation.
pub fn lag_of(rep: &AffineKernelRep) -> Result<usize> {
    let minimal = minimize(rep)?;
    Ok((0..minimal.rows())
        .filter_map(|i| minimal.r().row_degree(i))
        .max()
        .unwrap_or(0))
}

/// Exact image of float coefficient blocks `[R_0, ..., R_d]` and offset.
pub fn from_f64_blocks(blocks: &[DMatrix<f64>], c: &[f64]) -> Result<AffineKernelRep> {
    let (g, q) = blocks.first().map(|b| b.shape()).unwrap_or((c.len(), 0));
    let exact = blocks
        .iter()
        .map(QMatrix::from_f64)
        .collect::<Result<Vec<_>>>()?;
    let r = PolyMatrix::from_coefficients(&exact, g, q);
    let c = c.iter().map(|v| q_from_f64(*v)).collect::<Result<Vec<_>>>()?;
    AffineKernelRep::constant(r, c)
}

/// `diag(1, ..., 1)`-style helper used by the unit tests and examples.
pub fn unit_offset(g: usize) -> Vec<Q> {
    vec![Q::one(); g]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polykernel::rational::q;

    fn pm(rows: &[Vec<Vec<i64>>]) -> PolyMatrix {
        PolyMatrix::from_int_rows(rows)
    }

    fn qs(v: &[i64]) -> Vec<Q> {
        v.iter().map(|x| q(*x)).collect()
    }

    fn full_row_rank_example() -> PolyMatrix {
        pm(&[vec![vec![1], vec![], vec![]], vec![vec![], vec![1, -1], vec![]]])
    }

    fn rank_one_example() -> PolyMatrix {
        pm(&[
            vec![vec![1, 1], vec![0, 1], vec![2, 1]],
            vec![vec![-1, 0, 1], vec![0, -1, 1], vec![-2, 1, 1]],
        ])
    }

    fn alternating(t: i64) -> i64 {
        if t % 2 == 0 {
            1
        } else {
            -1
        }
    }

    #[test]
    fn syzygy_of_rank_one_example() {
        let syz = syzygy_basis(&rank_one_example());
        assert_eq!(syz.len(), 1);
        // Generated by [1 - xi, 1]: the normalized generator is a unit multiple.
        let expected = [Poly::from_ints(&[1, -1]), Poly::from_ints(&[1])];
        let ratio = syz[0][1].exact_div(&expected[1]).unwrap();
        assert!(ratio.is_unit());
        assert_eq!(syz[0][0], &expected[0] * &ratio);
        assert!(syzygy_basis(&full_row_rank_example()).is_empty());
    }

    #[test]
    fn duplicate_rows_syzygy() {
        let row = vec![vec![1, 1], vec![0, 2]];
        let syz = syzygy_basis(&pm(&[row.clone(), row]));
        assert_eq!(syz, vec![vec![Poly::one(), Poly::from_ints(&[-1])]]);
    }

    #[test]
    fn constant_consistency() {
        let r = rank_one_example();
        assert!(!consistent_constant(&AffineKernelRep::constant(r.clone(), qs(&[0, 1])).unwrap()).unwrap());
        // lambda(1) = [0, 1], so c = (a, 0) is consistent.
        assert!(consistent_constant(&AffineKernelRep::constant(r.clone(), qs(&[5, 0])).unwrap()).unwrap());
        assert!(consistent_constant(&AffineKernelRep::constant(r, qs(&[0, 0])).unwrap()).unwrap());
        let full = AffineKernelRep::constant(full_row_rank_example(), qs(&[3, -7])).unwrap();
        assert!(consistent_constant(&full).unwrap());
    }

    #[test]
    fn sequence_consistency() {
        let r = rank_one_example();
        let c: Vec<Vec<Q>> = (1..=6)
            .map(|t| qs(&[alternating(t), -2 * alternating(t)]))
            .collect();
        let report = consistent_sequence(&r, &c).unwrap();
        assert!(report.consistent);
        assert!(report.certified);
        assert_eq!(report.syzygy_degree, 1);
        let bad = vec![qs(&[0, 1]); 6];
        assert!(!consistent_sequence(&r, &bad).unwrap().consistent);
        assert!(matches!(
            consistent_sequence(&r, &bad[..1]),
            Err(Error::WindowTooShort { window: 1, required: 3 })
        ));
        let measured: Vec<Vec<f64>> = c
            .iter()
            .map(|ct| ct.iter().map(q_to_f64).collect())
            .collect();
        assert!(consistent_sequence_f64(&r, &measured, Some(1e-9)).unwrap().consistent);
    }

    #[test]
    fn minimize_examples() {
        let rep = AffineKernelRep::constant(rank_one_example(), qs(&[4, 0])).unwrap();
        let min = minimize(&rep).unwrap();
        assert_eq!(min.rows(), 1);
        assert_eq!(min.variables(), 3);
        assert!(equivalent(&rep, &min).unwrap());

        let zero_row = AffineKernelRep::constant(full_row_rank_example(), qs(&[1, 2]))
            .unwrap()
            .with_zero_row()
            .unwrap();
        assert_eq!(minimize(&zero_row).unwrap().rows(), 2);

        let bad = AffineKernelRep::constant(rank_one_example(), qs(&[0, 1])).unwrap();
        assert!(matches!(minimize(&bad), Err(Error::InconsistentRepresentation)));
    }

    #[test]
    fn equivalence_examples() {
        let r = full_row_rank_example();
        let rep = AffineKernelRep::constant(r.clone(), qs(&[1, 2])).unwrap();
        let u = pm(&[vec![vec![1], vec![0, 0, 1]], vec![vec![], vec![2]]]);
        assert!(equivalent(&rep, &rep.premultiply(&u).unwrap()).unwrap());
        let other = AffineKernelRep::constant(r, qs(&[1, 3])).unwrap();
        assert!(!equivalent(&rep, &other).unwrap());
        assert!(equivalent(&rep, &rep.with_zero_row().unwrap()).unwrap());
        let bad = AffineKernelRep::constant(rank_one_example(), qs(&[0, 1])).unwrap();
        assert!(matches!(equivalent(&rep, &bad), Err(Error::InconsistentRepresentation)));
    }

    #[test]
    fn non_unimodular_multiple_is_not_equivalent() {
        // xi - 1 times the row shrinks nothing but is not invertible.
        let rep = AffineKernelRep::constant(pm(&[vec![vec![1], vec![0, 1]]]), qs(&[0])).unwrap();
        let scaled = rep.premultiply(&pm(&[vec![vec![-1, 1]]])).unwrap();
        assert!(!equivalent(&rep, &scaled).unwrap());
    }

    #[test]
    fn behavior_apply_offset_example() {
        let rep = AffineKernelRep::constant(pm(&[vec![vec![-1, 1]]]), qs(&[1])).unwrap();
        let ok = DMatrix::from_column_slice(3, 1, &[3.0, 4.0, 5.0]);
        assert_eq!(behavior_apply(&rep, &ok).unwrap(), DMatrix::zeros(2, 1));
        let off = DMatrix::from_column_slice(3, 1, &[3.0, 4.0, 6.0]);
        assert_eq!(
            behavior_apply(&rep, &off).unwrap(),
            DMatrix::from_column_slice(2, 1, &[0.0, 1.0])
        );
        assert!(matches!(
            behavior_apply(&rep, &DMatrix::zeros(1, 1)),
            Err(Error::WindowTooShort { .. })
        ));
    }

    #[test]
    fn controllability_examples() {
        let shift = AffineKernelRep::constant(pm(&[vec![vec![-1, 1]]]), qs(&[1])).unwrap();
        assert!(!controllable_kernel(&shift).unwrap());
        let row = AffineKernelRep::constant(pm(&[vec![vec![1], vec![0, 1]]]), qs(&[0])).unwrap();
        assert!(controllable_kernel(&row).unwrap());
        let diag = AffineKernelRep::constant(
            pm(&[vec![vec![0, 1], vec![]], vec![vec![], vec![0, 1]]]),
            qs(&[0, 0]),
        )
        .unwrap();
        assert!(!controllable_kernel(&diag).unwrap());
    }

    #[test]
    fn lag_examples() {
        let shift = AffineKernelRep::constant(pm(&[vec![vec![-1, 1]]]), qs(&[1])).unwrap();
        assert_eq!(lag_of(&shift).unwrap(), 1);
        // [[1, xi], [xi, xi^2]] needs c = (a, a); it minimizes to one row [1, xi].
        let r = pm(&[vec![vec![1], vec![0, 1]], vec![vec![0, 1], vec![0, 0, 1]]]);
        let rep = AffineKernelRep::constant(r, qs(&[2, 2])).unwrap();
        assert!(consistent_constant(&rep).unwrap());
        assert_eq!(minimize(&rep).unwrap().rows(), 1);
        assert_eq!(lag_of(&rep).unwrap(), 1);
    }
}
