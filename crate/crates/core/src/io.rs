//! File formats: trajectory CSV with an optional JSON sidecar, and JSON
//! encodings of state-space systems, plants, polynomial matrices and
//! kernel representations.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::affine_ss::{AffineStateSpace, NonlinearPlant};
use crate::error::{Error, Result};
use crate::polykernel::kernel::{AffineKernelRep, Offset};
use crate::polykernel::matrix::PolyMatrix;
use crate::polykernel::poly::Poly;
use crate::polykernel::rational::{format_q, parse_q, Q};
use crate::trajectories::Trajectory;

/// Input cardinality and variable names stored next to a trajectory CSV.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sidecar {
    pub m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

/// `data.csv` -> `data.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// Column names after `t` and the raw fields of each row, with the time
/// stamps checked to run `1, 2, ..., T`.
pub fn read_records<R: Read>(reader: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.get(0) != Some("t") {
        return Err(Error::Parse("first CSV column must be named \"t\"".into()));
    }
    let labels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let q = labels.len();
    let mut rows = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if record.len() != q + 1 {
            return Err(Error::Parse(format!(
                "row {} has {} fields, expected {}",
                i + 1,
                record.len(),
                q + 1
            )));
        }
        let t: usize = record[0]
            .parse()
            .map_err(|_| Error::Parse(format!("time stamp {:?} is not an integer", &record[0])))?;
        if t != i + 1 {
            return Err(Error::Parse(format!(
                "time stamps must run 1, 2, 3, ...; row {} has t = {t}",
                i + 1
            )));
        }
        rows.push(record.iter().skip(1).map(str::to_owned).collect());
    }
    if rows.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    Ok((labels, rows))
}

/// A `T x q` sample matrix and the column names after `t`.
pub fn read_samples<R: Read>(reader: R) -> Result<(DMatrix<f64>, Vec<String>)> {
    let (labels, rows) = read_records(reader)?;
    let mut values = Vec::with_capacity(rows.len() * labels.len());
    for field in rows.iter().flatten() {
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Parse(format!("{field:?} is not a number")))?;
        values.push(v);
    }
    Ok((DMatrix::from_row_slice(rows.len(), labels.len(), &values), labels))
}

/// Samples read as exact rationals; decimal literals keep their exact value.
pub fn read_samples_exact<R: Read>(reader: R) -> Result<Vec<Vec<Q>>> {
    let (_, rows) = read_records(reader)?;
    rows.iter()
        .map(|r| r.iter().map(|f| parse_q(f)).collect())
        .collect()
}

pub fn write_samples<W: Write>(writer: W, data: &DMatrix<f64>, labels: &[String]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["t".to_owned()];
    header.extend(labels.iter().cloned());
    wtr.write_record(&header)?;
    for i in 0..data.nrows() {
        let mut record = vec![(i + 1).to_string()];
        record.extend(data.row(i).iter().map(|v| v.to_string()));
        wtr.write_record(&record)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn default_labels(q: usize) -> Vec<String> {
    (1..=q).map(|i| format!("w{i}")).collect()
}

/// Load a trajectory. The input count comes from `m` if given, else from
/// the sidecar, else `default_m`.
pub fn load_trajectory(path: &Path, m: Option<usize>, default_m: usize) -> Result<Trajectory> {
    let (data, header) = read_samples(fs::File::open(path)?)?;
    let sidecar = sidecar_path(path);
    let side: Option<Sidecar> = if sidecar.is_file() {
        Some(serde_json::from_str(&fs::read_to_string(&sidecar)?)?)
    } else {
        None
    };
    let inputs = m.or(side.as_ref().map(|s| s.m)).unwrap_or(default_m);
    let labels = side.and_then(|s| s.labels).unwrap_or(header);
    Trajectory::new(data, inputs)?.with_labels(labels)
}

pub fn save_trajectory(path: &Path, w: &Trajectory) -> Result<()> {
    let labels = w
        .labels()
        .map(<[String]>::to_vec)
        .unwrap_or_else(|| default_labels(w.width()));
    write_samples(fs::File::create(path)?, w.data(), &labels)?;
    let side = Sidecar {
        m: w.inputs(),
        labels: Some(labels),
    };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)? + "\n")?;
    Ok(())
}

/// Plain sample matrix from a CSV (e.g. state data), `T x k`.
pub fn load_samples(path: &Path) -> Result<DMatrix<f64>> {
    Ok(read_samples(fs::File::open(path)?)?.0)
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be {nrows}x{ncols}"
        )));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(nrows, ncols, &flat))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemJson {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
}

impl SystemJson {
    pub fn from_system(sys: &AffineStateSpace) -> Self {
        Self {
            a: rows_of(sys.a()),
            b: rows_of(sys.b()),
            c: rows_of(sys.c()),
            d: rows_of(sys.d()),
            e: sys.e().iter().copied().collect(),
            f: sys.f().iter().copied().collect(),
        }
    }

    /// Dimensions come from `E` (n), `F` (p) and the rows of `D` or `B` (m).
    pub fn to_system(&self) -> Result<AffineStateSpace> {
        let (n, p) = (self.e.len(), self.f.len());
        let m = self
            .d
            .first()
            .or(self.b.first())
            .map_or(0, Vec::len);
        AffineStateSpace::new(
            matrix_from_rows("A", &self.a, n, n)?,
            matrix_from_rows("B", &self.b, n, m)?,
            matrix_from_rows("C", &self.c, p, n)?,
            matrix_from_rows("D", &self.d, p, m)?,
            DVector::from_vec(self.e.clone()),
            DVector::from_vec(self.f.clone()),
        )
    }
}

pub fn load_system(path: &Path) -> Result<AffineStateSpace> {
    let json: SystemJson = serde_json::from_str(&fs::read_to_string(path)?)?;
    json.to_system()
}

pub fn load_plant(path: &Path) -> Result<NonlinearPlant> {
    let plant: NonlinearPlant = serde_json::from_str(&fs::read_to_string(path)?)?;
    plant.validate()?;
    Ok(plant)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyMatrixJson {
    pub rows: usize,
    pub cols: usize,
    /// `entries[i][j]` lists ascending coefficients as `"num/den"` strings.
    pub entries: Vec<Vec<Vec<String>>>,
}

impl PolyMatrixJson {
    pub fn from_matrix(r: &PolyMatrix) -> Self {
        Self {
            rows: r.nrows(),
            cols: r.ncols(),
            entries: r
                .rows_iter()
                .map(|row| row.iter().map(poly_strings).collect())
                .collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<PolyMatrix> {
        if self.entries.len() != self.rows || self.entries.iter().any(|r| r.len() != self.cols) {
            return Err(Error::DimensionMismatch(format!(
                "entries do not form a {}x{} grid",
                self.rows, self.cols
            )));
        }
        let rows = self
            .entries
            .iter()
            .map(|row| row.iter().map(|c| parse_poly(c)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(PolyMatrix::from_rows_with_cols(rows, self.cols))
    }
}

pub fn poly_strings(p: &Poly) -> Vec<String> {
    p.coeffs().iter().map(format_q).collect()
}

fn parse_poly(coeffs: &[String]) -> Result<Poly> {
    Ok(Poly::from_coeffs(
        coeffs.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?,
    ))
}

fn parse_vec(v: &[String]) -> Result<Vec<Q>> {
    v.iter().map(|s| parse_q(s)).collect()
}

/// Constant offsets are a flat list; sampled offsets a list of per-time lists.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OffsetJson {
    Constant(Vec<String>),
    Sequence(Vec<Vec<String>>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<Vec<String>>>,
    pub c: OffsetJson,
}

impl KernelJson {
    pub fn from_rep(rep: &AffineKernelRep) -> Self {
        let m = PolyMatrixJson::from_matrix(rep.r());
        let c = match rep.offset() {
            Offset::Constant(c) => OffsetJson::Constant(c.iter().map(format_q).collect()),
            Offset::Sequence(s) => {
                OffsetJson::Sequence(s.iter().map(|ct| ct.iter().map(format_q).collect()).collect())
            }
        };
        Self {
            rows: m.rows,
            cols: m.cols,
            entries: m.entries,
            c,
        }
    }

    pub fn to_rep(&self) -> Result<AffineKernelRep> {
        let r = PolyMatrixJson {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.clone(),
        }
        .to_matrix()?;
        let offset = match &self.c {
            OffsetJson::Constant(c) => Offset::Constant(parse_vec(c)?),
            OffsetJson::Sequence(s) => {
                Offset::Sequence(s.iter().map(|ct| parse_vec(ct)).collect::<Result<Vec<_>>>()?)
            }
        };
        AffineKernelRep::new(r, offset)
    }
}

pub fn load_polymatrix(path: &Path) -> Result<PolyMatrix> {
    let json: PolyMatrixJson = serde_json::from_str(&fs::read_to_string(path)?)?;
    json.to_matrix()
}

pub fn load_kernel(path: &Path) -> Result<AffineKernelRep> {
    let json: KernelJson = serde_json::from_str(&fs::read_to_string(path)?)?;
    json.to_rep()
}
