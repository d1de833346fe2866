//! Finite vector-valued time series and their block-Hankel matrices.
//!
//! Time is 1-based throughout: a trajectory of length `T` lives on
//! `{1, ..., T}` and `hankel(w, L)` has the window starting at time `j`
//! as its `j`-th column.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, RankInfo};

/// Samples `w(1), ..., w(T)` of a `q`-variate signal, stored one row per
/// time step. The first `m` variables are inputs, the remaining `p = q - m`
/// outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    data: DMatrix<f64>,
    inputs: usize,
    labels: Option<Vec<String>>,
}

impl Trajectory {
    pub fn new(data: DMatrix<f64>, inputs: usize) -> Result<Self> {
        if data.nrows() == 0 {
            return Err(Error::EmptyTrajectory);
        }
        if data.ncols() == 0 {
            return Err(Error::InvalidTrajectory("no variables".into()));
        }
        if inputs > data.ncols() {
            return Err(Error::InvalidTrajectory(format!(
                "{inputs} inputs declared for {} variables",
                data.ncols()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteEntry);
        }
        Ok(Self {
            data,
            inputs,
            labels: None,
        })
    }

    /// Build from per-time-step rows.
    pub fn from_rows(rows: &[Vec<f64>], inputs: usize) -> Result<Self> {
        let width = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::InvalidTrajectory("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), width, &flat), inputs)
    }

    /// A scalar input sequence (`q = m = 1`).
    pub fn scalar_input(values: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(values.len(), 1, values), 1)
    }

    /// An input sequence: every variable is an input.
    pub fn input_sequence(data: DMatrix<f64>) -> Result<Self> {
        let m = data.ncols();
        Self::new(data, m)
    }

    /// Concatenate inputs and outputs column-wise into `w = (u, y)`.
    pub fn from_io(inputs: &DMatrix<f64>, outputs: &DMatrix<f64>) -> Result<Self> {
        if inputs.nrows() != outputs.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "{} input samples vs {} output samples",
                inputs.nrows(),
                outputs.nrows()
            )));
        }
        let t = inputs.nrows();
        let (m, p) = (inputs.ncols(), outputs.ncols());
        let mut data = DMatrix::zeros(t, m + p);
        data.view_mut((0, 0), (t, m)).copy_from(inputs);
        data.view_mut((0, m), (t, p)).copy_from(outputs);
        Self::new(data, m)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.width() {
            return Err(Error::InvalidTrajectory(format!(
                "{} labels for {} variables",
                labels.len(),
                self.width()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    /// Number of samples `T`.
    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }

    /// Number of variables `q`.
    pub fn width(&self) -> usize {
        self.data.ncols()
    }

    /// Input cardinality `m`.
    pub fn inputs(&self) -> usize {
        self.inputs
    }

    /// Output cardinality `p = q - m`.
    pub fn outputs(&self) -> usize {
        self.width() - self.inputs
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    /// `T x q` sample matrix.
    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// `w(t)` for `1 <= t <= T`.
    pub fn sample(&self, t: usize) -> DVector<f64> {
        assert!(t >= 1 && t <= self.len(), "time {t} outside [1, {}]", self.len());
        self.data.row(t - 1).transpose()
    }

    /// `T x m` block of input columns.
    pub fn input_part(&self) -> DMatrix<f64> {
        self.data.columns(0, self.inputs).into_owned()
    }

    /// `T x p` block of output columns.
    pub fn output_part(&self) -> DMatrix<f64> {
        self.data.columns(self.inputs, self.outputs()).into_owned()
    }

    /// Samples `t0..=t1` as a new trajectory.
    pub fn restrict(&self, t0: usize, t1: usize) -> Result<Self> {
        if t0 < 1 || t0 > t1 || t1 > self.len() {
            return Err(Error::OutOfRange {
                t0,
                t1,
                length: self.len(),
            });
        }
        Ok(Self {
            data: self.data.rows(t0 - 1, t1 - t0 + 1).into_owned(),
            inputs: self.inputs,
            labels: self.labels.clone(),
        })
    }

    /// `(sigma^k w)(t) = w(t + k)` on the shortened horizon `T - k`.
    pub fn shift(&self, k: usize) -> Result<Self> {
        if k >= self.len() {
            return Err(Error::ShiftTooLarge {
                shift: k,
                length: self.len(),
            });
        }
        self.restrict(k + 1, self.len())
    }

    /// Stacked samples `(w(1), ..., w(T))` as one column vector.
    pub fn stacked(&self) -> DVector<f64> {
        DVector::from_iterator(self.len() * self.width(), self.data.transpose().iter().copied())
    }
}

/// Block-Hankel matrix of depth `L` built from a trajectory.
#[derive(Clone, Debug, PartialEq)]
pub struct HankelMatrix {
    entries: DMatrix<f64>,
    depth: usize,
    block_rows: usize,
}

impl HankelMatrix {
    /// `(q L) x (T - L + 1)` entries.
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Rows per block, i.e. `q`.
    pub fn block_rows(&self) -> usize {
        self.block_rows
    }

    pub fn columns(&self) -> usize {
        self.entries.ncols()
    }

    /// Column holding the window that starts at time `j` (1-based).
    pub fn window(&self, j: usize) -> DVector<f64> {
        assert!(j >= 1 && j <= self.columns(), "window {j} outside [1, {}]", self.columns());
        self.entries.column(j - 1).into_owned()
    }

    /// `[H; 1^T]`, the ones row appended below the Hankel block.
    pub fn with_ones_row(&self) -> DMatrix<f64> {
        linalg::append_ones_row(&self.entries)
    }

    pub fn rank(&self, tol: Option<f64>) -> Result<RankInfo> {
        linalg::numerical_rank(&self.entries, tol)
    }
}

/// Depth-`L` block-Hankel matrix of `w`.
pub fn hankel(w: &Trajectory, depth: usize) -> Result<HankelMatrix> {
    hankel_of(w.data(), depth)
}

/// Depth-`L` block-Hankel matrix of a raw `T x q` sample matrix.
pub fn hankel_of(data: &DMatrix<f64>, depth: usize) -> Result<HankelMatrix> {
    let (t, q) = data.shape();
    if t == 0 {
        return Err(Error::EmptyTrajectory);
    }
    if depth == 0 || depth > t {
        return Err(Error::DepthExceedsLength { depth, length: t });
    }
    let cols = t - depth + 1;
    let mut entries = DMatrix::zeros(q * depth, cols);
    for j in 0..cols {
        for i in 0..depth {
            for k in 0..q {
                entries[(i * q + k, j)] = data[(i + j, k)];
            }
        }
    }
    Ok(HankelMatrix {
        entries,
        depth,
        block_rows: q,
    })
}
