//! Non-parametric models from a single measured trajectory: rank
//! conditions, affine-span membership, completion, kernel recovery and
//! integer invariants.

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::excitation::RankTest;
use crate::linalg;
use crate::polykernel::kernel::{AffineKernelRep, Offset};
use crate::polykernel::matrix::PolyMatrix;
use crate::polykernel::poly::Poly;
use crate::polykernel::qmat::QMatrix;
use crate::polykernel::rational::{q_from_f64, Q};
use crate::trajectories::{hankel, hankel_of, HankelMatrix, Trajectory};

/// Default residual tolerance for membership and completion.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;

/// The affine span `{ H g : 1^T g = 1 }` of the depth-`L` windows of `w_d`.
#[derive(Clone, Debug)]
pub struct DataDrivenRep {
    h: HankelMatrix,
    inputs: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Membership {
    pub is_member: bool,
    pub g: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Completion {
    /// `T_f x p` future outputs.
    #[serde(serialize_with = "serialize_rows")]
    pub outputs: DMatrix<f64>,
    pub g: Vec<f64>,
    pub residual: f64,
    /// Largest relative variation of the outputs over the solution set.
    pub spread: f64,
}

fn serialize_rows<S: serde::Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = m.row(i).iter().copied().collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// `g0 + N z` with `g0 = 1/N` and `N` spanning `{ g : 1^T g = 0 }`.
struct AffineLstsq {
    g: DVector<f64>,
    residual: f64,
    n: DMatrix<f64>,
}

fn affine_lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<AffineLstsq> {
    let cols = a.ncols();
    let g0 = DVector::from_element(cols, 1.0 / cols as f64);
    let n = linalg::ones_complement(cols);
    let an = a * &n;
    let z = linalg::lstsq(&an, &(b - a * &g0), None)?;
    let g = g0 + &n * z;
    let residual = (a * &g - b).norm();
    Ok(AffineLstsq { g, residual, n })
}

impl DataDrivenRep {
    pub fn new(w_d: &Trajectory, depth: usize) -> Result<Self> {
        let h = hankel(w_d, depth)?;
        Ok(Self {
            h,
            inputs: w_d.inputs(),
        })
    }

    pub fn hankel(&self) -> &HankelMatrix {
        &self.h
    }

    pub fn depth(&self) -> usize {
        self.h.depth()
    }

    pub fn width(&self) -> usize {
        self.h.block_rows()
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn columns(&self) -> usize {
        self.h.columns()
    }

    fn require_columns(&self) -> Result<()> {
        if self.columns() == 0 {
            Err(Error::EmptyRepresentation)
        } else {
            Ok(())
        }
    }

    /// Closest affine combination of the data windows to `w` (stacked
    /// `qL` vector, time-major).
    pub fn membership(&self, w: &DVector<f64>, tol: f64) -> Result<Membership> {
        self.require_columns()?;
        let rows = self.h.entries().nrows();
        if w.len() != rows {
            return Err(Error::DimensionMismatch(format!(
                "window has {} entries, expected {rows}",
                w.len()
            )));
        }
        let sol = affine_lstsq(self.h.entries(), w)?;
        Ok(Membership {
            is_member: sol.residual <= tol * (1.0 + w.norm()),
            g: sol.g.iter().copied().collect(),
            residual: sol.residual,
        })
    }

    /// Future outputs consistent with a `T_ini x q` prefix and `T_f x m`
    /// future inputs, `T_ini + T_f = L`.
    pub fn complete(&self, prefix: &DMatrix<f64>, future_inputs: &DMatrix<f64>, tol: f64) -> Result<Completion> {
        self.require_columns()?;
        let (q, m, depth) = (self.width(), self.inputs, self.depth());
        let t_ini = prefix.nrows();
        let t_f = future_inputs.nrows();
        if t_ini + t_f != depth {
            return Err(Error::DimensionMismatch(format!(
                "prefix length {t_ini} plus future length {t_f} differs from depth {depth}"
            )));
        }
        if (t_ini > 0 && prefix.ncols() != q) || (t_f > 0 && future_inputs.ncols() != m) {
            return Err(Error::DimensionMismatch(
                "prefix must have q columns and future inputs m columns".into(),
            ));
        }
        let h = self.h.entries();
        let mut constrained = Vec::new();
        let mut values = Vec::new();
        let mut free = Vec::new();
        for t in 0..depth {
            for i in 0..q {
                let row = t * q + i;
                if t < t_ini {
                    constrained.push(row);
                    values.push(prefix[(t, i)]);
                } else if i < m {
                    constrained.push(row);
                    values.push(future_inputs[(t - t_ini, i)]);
                } else {
                    free.push(row);
                }
            }
        }
        let hc = h.select_rows(&constrained);
        let ho = h.select_rows(&free);
        let b = DVector::from_vec(values);
        let sol = affine_lstsq(&hc, &b)?;
        let bound = tol * (1.0 + b.norm());
        if sol.residual > bound {
            return Err(Error::Infeasible {
                residual: sol.residual,
                bound,
            });
        }
        // Output directions left undetermined by the constraints.
        let an = &hc * &sol.n;
        let on = &ho * &sol.n;
        let directions = linalg::null_space(&an, None)?;
        let scale = linalg::numerical_rank(&linalg::vstack(&[&an, &on])?, None)?.sigma_max();
        let spread = if directions.ncols() == 0 || scale == 0.0 {
            0.0
        } else {
            linalg::numerical_rank(&(&on * &directions), None)?.sigma_max() / scale
        };
        if spread > tol {
            return Err(Error::AmbiguousContinuation { spread });
        }
        let y = &ho * &sol.g;
        let p = q - m;
        let outputs = DMatrix::from_row_slice(t_f, p, y.as_slice());
        Ok(Completion {
            outputs,
            g: sol.g.iter().copied().collect(),
            residual: sol.residual,
            spread,
        })
    }

    /// Kernel rows annihilating every affine combination of the data
    /// windows. With `order = Some(n)` the excitation is checked first.
    pub fn recover_kernel(&self, order: Option<usize>, tol: Option<f64>) -> Result<RealKernelRep> {
        self.require_columns()?;
        let augmented = self.h.with_ones_row();
        let info = linalg::numerical_rank(&augmented, tol)?;
        if let Some(n) = order {
            let target = self.inputs * self.depth() + n + 1;
            if info.rank != target {
                return Err(Error::ExcitationDeficient {
                    rank: info.rank,
                    target,
                });
            }
        }
        let left = linalg::left_null_space(&augmented, tol)?;
        let (q, depth) = (self.width(), self.depth());
        let qd = q * depth;
        let g = left.nrows();
        let mut blocks = vec![DMatrix::zeros(g, q); depth];
        let mut offset = DVector::zeros(g);
        for i in 0..g {
            let row: Vec<f64> = left.row(i).iter().copied().collect();
            let scale = normalizing_scale(&row[..qd]);
            for (k, block) in blocks.iter_mut().enumerate() {
                for j in 0..q {
                    block[(i, j)] = row[k * q + j] * scale;
                }
            }
            offset[i] = -row[qd] * scale;
        }
        Ok(RealKernelRep {
            blocks,
            offset,
            rank: info.rank,
        })
    }
}

/// Factor making the largest-magnitude entry equal to `+1`.
fn normalizing_scale(r: &[f64]) -> f64 {
    r.iter()
        .copied()
        .max_by(|a, b| a.abs().total_cmp(&b.abs()))
        .filter(|v| *v != 0.0)
        .map_or(1.0, |v| 1.0 / v)
}

/// `sum_k R_k w(t + k) = c` with floating-point coefficient blocks.
#[derive(Clone, Debug, Serialize)]
pub struct RealKernelRep {
    #[serde(serialize_with = "serialize_blocks")]
    pub blocks: Vec<DMatrix<f64>>,
    #[serde(serialize_with = "serialize_vector")]
    pub offset: DVector<f64>,
    /// Rank of the data matrix with the ones row.
    pub rank: usize,
}

fn serialize_blocks<S: serde::Serializer>(b: &[DMatrix<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<Vec<f64>>> = b
        .iter()
        .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
        .collect();
    serde::Serialize::serialize(&rows, s)
}

fn serialize_vector<S: serde::Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&v.iter().copied().collect::<Vec<_>>(), s)
}

impl RealKernelRep {
    pub fn rows(&self) -> usize {
        self.offset.len()
    }

    /// `[R_0, ..., R_{L-1}]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let g = self.rows();
        let q = self.blocks.first().map_or(0, |b| b.ncols());
        let mut out = DMatrix::zeros(g, q * self.blocks.len());
        for (k, b) in self.blocks.iter().enumerate() {
            out.view_mut((0, k * q), (g, q)).copy_from(b);
        }
        out
    }

    /// Residual `[R_0 ... R_{L-1}] w - c` of a stacked depth-`L` window.
    pub fn residual(&self, w: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.stacked();
        if s.ncols() != w.len() {
            return Err(Error::DimensionMismatch(format!(
                "window has {} entries, kernel acts on {}",
                w.len(),
                s.ncols()
            )));
        }
        Ok(s * w - &self.offset)
    }

    /// Exact image of the coefficients.
    pub fn to_exact(&self) -> Result<AffineKernelRep> {
        crate::polykernel::kernel::from_f64_blocks(&self.blocks, self.offset.as_slice())
    }
}

/// Exact kernel of the depth-`L` windows of rational data (`T x q` rows).
pub fn recover_kernel_exact(data: &[Vec<Q>], depth: usize) -> Result<AffineKernelRep> {
    let t_len = data.len();
    if t_len == 0 {
        return Err(Error::EmptyTrajectory);
    }
    if depth == 0 || depth > t_len {
        return Err(Error::DepthExceedsLength {
            depth,
            length: t_len,
        });
    }
    let q = data[0].len();
    if data.iter().any(|r| r.len() != q) {
        return Err(Error::InvalidTrajectory("ragged rows".into()));
    }
    let cols = t_len - depth + 1;
    let augmented = QMatrix::from_fn(q * depth + 1, cols, |i, j| {
        if i == q * depth {
            Q::one()
        } else {
            data[j + i / q][i % q].clone()
        }
    });
    let rows = augmented.left_null_space();
    let g = rows.len();
    let r = PolyMatrix::from_fn(g, q, |i, j| {
        Poly::from_coeffs((0..depth).map(|k| rows[i][k * q + j].clone()).collect())
    });
    let c = rows.iter().map(|row| -row[q * depth].clone()).collect();
    AffineKernelRep::constant(r, c)
}

/// Exact rational image of a float trajectory.
pub fn exact_rows(w: &Trajectory) -> Result<Vec<Vec<Q>>> {
    (0..w.len())
        .map(|t| w.data().row(t).iter().map(|v| q_from_f64(*v)).collect())
        .collect()
}

/// `rank [H_1(x_d|[1, T-L+1]); H_L(u_d); 1^T] = m L + n + 1`.
pub fn rank_condition_affine(
    x_d: &DMatrix<f64>,
    u_d: &DMatrix<f64>,
    depth: usize,
    tol: Option<f64>,
) -> Result<RankTest> {
    let t_len = u_d.nrows();
    if x_d.nrows() != t_len {
        return Err(Error::DimensionMismatch(format!(
            "state data has {} samples, input data {t_len}",
            x_d.nrows()
        )));
    }
    let hu = hankel_of(u_d, depth)?;
    let cols = hu.columns();
    let (n, m) = (x_d.ncols(), u_d.ncols());
    let hx = x_d.rows(0, cols).transpose();
    let stacked = linalg::append_ones_row(&linalg::vstack(&[&hx, hu.entries()])?);
    let info = linalg::numerical_rank(&stacked, tol)?;
    let target = m * depth + n + 1;
    Ok(RankTest {
        depth,
        rank: info.rank,
        target,
        holds: info.rank == target,
        singular_values: info.singular_values,
        tol: info.tol,
        threshold: info.threshold,
    })
}

/// Order and lag read off the rank increments the way the dimension
/// formula is stated literally: `gamma_t = rho_{t-1} - rho_t` with
/// `rho_0 = q`, `n = sum t gamma_t`, `ell = min { t : rho_t = m }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LiteralDiagnostic {
    pub gamma: Vec<i64>,
    pub n: i64,
    pub ell: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegerInvariants {
    pub m: usize,
    pub n: usize,
    pub ell: usize,
    /// `d_1, ..., d_tMax`.
    pub d: Vec<usize>,
    /// `rho_1, ..., rho_tMax`.
    pub rho: Vec<usize>,
    pub literal: LiteralDiagnostic,
}

/// Integer invariants from the affine dimensions `d_t = rank [H_t; 1^T] - 1`.
pub fn invariants_from_data(w_d: &Trajectory, t_max: usize, tol: Option<f64>) -> Result<IntegerInvariants> {
    if t_max < 2 {
        return Err(Error::NotConverged {
            depth: t_max,
            reason: "at least two depths are needed".into(),
        });
    }
    let mut d = Vec::with_capacity(t_max);
    let mut saturated = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let h = hankel(w_d, t)?;
        let rank = linalg::numerical_rank(&h.with_ones_row(), tol)?.rank;
        saturated.push(rank == h.columns());
        d.push(rank.saturating_sub(1));
    }
    if let Some(t) = (1..t_max).find(|&i| d[i] < d[i - 1]) {
        return Err(Error::NotConverged {
            depth: t_max,
            reason: format!("affine dimension drops at depth {}; the data are too short", t + 1),
        });
    }
    let rho: Vec<usize> = d
        .iter()
        .enumerate()
        .map(|(i, dt)| dt - if i == 0 { 0 } else { d[i - 1] })
        .collect();
    let m = rho[t_max - 1];
    if rho[t_max - 2] != m {
        return Err(Error::NotConverged {
            depth: t_max,
            reason: format!("increments {:?} have not settled", rho),
        });
    }
    if saturated[t_max - 2] {
        return Err(Error::NotConverged {
            depth: t_max,
            reason: format!("every data window is affinely independent at depth {}", t_max - 1),
        });
    }
    let first = rho.iter().position(|r| *r == m).expect("rho_tMax equals m") + 1;
    let ell = first - 1;
    let at = ell.max(1);
    let n = d[at - 1] - m * at;

    let q = w_d.width() as i64;
    let gamma: Vec<i64> = (0..t_max)
        .map(|i| {
            let prev = if i == 0 { q } else { rho[i - 1] as i64 };
            prev - rho[i] as i64
        })
        .collect();
    let literal = LiteralDiagnostic {
        n: gamma.iter().enumerate().map(|(i, g)| (i as i64 + 1) * g).sum(),
        ell: first,
        gamma,
    };
    Ok(IntegerInvariants {
        m,
        n,
        ell,
        d,
        rho,
        literal,
    })
}

/// Whether the exact representation annihilates every sample window.
pub fn annihilates_exact(rep: &AffineKernelRep, data: &[Vec<Q>]) -> bool {
    let d = rep.r().degree().unwrap_or(0);
    let c = match rep.offset() {
        Offset::Constant(c) => c.clone(),
        Offset::Sequence(_) => return false,
    };
    (0..data.len().saturating_sub(d)).all(|t| {
        (0..rep.rows()).all(|i| {
            let mut acc = -c[i].clone();
            for j in 0..rep.variables() {
                for (k, coeff) in rep.r()[(i, j)].coeffs().iter().enumerate() {
                    acc += coeff * &data[t + k][j];
                }
            }
            acc.is_zero()
        })
    })
}
