//! One function per subcommand, each producing a [`Report`].

use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use ati_core::affine_ss::{linearize, LinearizationMode, LiftedStateSpace};
use ati_core::datadriven::{invariants_from_data, rank_condition_affine, recover_kernel_exact, DataDrivenRep};
use ati_core::excitation::{gape_test, pe_test, ModelClass, RankTest};
use ati_core::io::{self, KernelJson, PolyMatrixJson, SystemJson};
use ati_core::polykernel::kernel::{
    consistent_constant, consistent_sequence, equivalent, minimize, syzygy_basis, syzygy_degree_bound, AffineKernelRep,
    Offset,
};
use ati_core::polykernel::matrix::PolyMatrix;
use ati_core::polykernel::poly::Poly;
use ati_core::polykernel::rational::format_q;
use ati_core::polykernel::smith_form;
use ati_core::reference;
use ati_core::trajectories::{hankel, Trajectory};

use crate::format::{matrix_text, num, nums, rationalize, table};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Holds,
    Fails,
}

/// Files written next to the report when `--out` is given.
pub enum Artifact {
    Csv { data: DMatrix<f64>, labels: Vec<String> },
    Json(Value),
}

pub struct Report {
    pub value: Value,
    pub text: String,
    pub status: Status,
    pub artifacts: Vec<(String, Artifact)>,
}

impl Report {
    fn new(value: Value, text: String) -> Self {
        Self {
            value,
            text,
            status: Status::Holds,
            artifacts: Vec::new(),
        }
    }

    fn with_status(mut self, holds: bool) -> Self {
        self.status = if holds { Status::Holds } else { Status::Fails };
        self
    }

    fn with_artifact(mut self, name: &str, artifact: Artifact) -> Self {
        self.artifacts.push((name.to_owned(), artifact));
        self
    }
}

fn verdict(holds: bool) -> &'static str {
    if holds {
        "PASS"
    } else {
        "FAIL"
    }
}

fn load_with_inputs(path: &Path, m: Option<usize>) -> Result<Trajectory> {
    if m.is_none() && !io::sidecar_path(path).is_file() {
        bail!(
            "input count unknown for {}: pass --m or provide {}",
            path.display(),
            io::sidecar_path(path).display()
        );
    }
    Ok(io::load_trajectory(path, m, 0)?)
}

fn rank_json(command: &str, test: &RankTest) -> Value {
    json!({
        "command": command,
        "depth": test.depth,
        "rank": test.rank,
        "target": test.target,
        "holds": test.holds,
        "tol": test.tol,
        "threshold": test.threshold,
        "gap_ratio": test.gap_ratio(),
        "singular_values": test.singular_values,
    })
}

fn rank_text(title: &str, test: &RankTest) -> String {
    let deficit = if test.holds {
        String::new()
    } else {
        format!(" (rank {} where {} is required)", test.rank, test.target)
    };
    let rows = vec![vec![
        title.to_owned(),
        test.depth.to_string(),
        test.rank.to_string(),
        test.target.to_string(),
        num(test.tol),
        num(test.gap_ratio()),
        format!("{}{}", verdict(test.holds), deficit),
    ]];
    let mut out = table(&["condition", "depth", "rank", "target", "tol", "gap_ratio", "result"], &rows);
    out.push_str(&format!("singular values: {}\n", nums(&test.singular_values)));
    out
}

pub fn hankel_cmd(path: &Path, depth: usize, tol: Option<f64>) -> Result<Report> {
    let w = io::load_trajectory(path, None, 0)?;
    let h = hankel(&w, depth)?;
    let info = h.rank(tol)?;
    let aug = ati_core::linalg::numerical_rank(&h.with_ones_row(), tol)?;
    let e = h.entries();
    let value = json!({
        "command": "hankel",
        "depth": depth,
        "rows": e.nrows(),
        "cols": e.ncols(),
        "rank": info.rank,
        "rank_with_ones": aug.rank,
        "tol": info.tol,
        "singular_values": info.singular_values,
        "entries": (0..e.nrows()).map(|i| e.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
    });
    let mut text = matrix_text(&format!("H_{depth}"), e);
    text.push_str(&format!(
        "rank: {}\nrank with ones row: {}\ntol: {}\nsingular values: {}\n",
        info.rank,
        aug.rank,
        num(info.tol),
        nums(&info.singular_values)
    ));
    Ok(Report::new(value, text))
}

pub fn pe_cmd(path: &Path, class: ModelClass, order: usize, tol: Option<f64>) -> Result<Report> {
    let (data, _) = io::read_samples(fs::File::open(path)?)?;
    let u = Trajectory::input_sequence(data)?;
    let test = pe_test(&u, order, class, tol)?;
    let mut value = rank_json("pe", &test);
    value["class"] = json!(class);
    let title = match class {
        ModelClass::Linear => "linear excitation",
        ModelClass::Affine => "affine excitation",
    };
    Ok(Report::new(value, rank_text(title, &test)).with_status(test.holds))
}

pub fn gape_cmd(path: &Path, m: Option<usize>, depth: usize, order: usize, tol: Option<f64>) -> Result<Report> {
    let w = load_with_inputs(path, m)?;
    let test = gape_test(&w, depth, order, tol)?;
    let mut value = rank_json("gape", &test);
    value["order"] = json!(order);
    value["inputs"] = json!(w.inputs());
    Ok(Report::new(value, rank_text("generalized affine excitation", &test)).with_status(test.holds))
}

pub fn rank_check_cmd(inputs: &Path, states: &Path, depth: usize, order: usize, tol: Option<f64>) -> Result<Report> {
    let (u, _) = io::read_samples(fs::File::open(inputs)?)?;
    let x = io::load_samples(states)?;
    if x.ncols() != order {
        bail!("--n {order} but {} has {} state columns", states.display(), x.ncols());
    }
    let test = rank_condition_affine(&x, &u, depth, tol)?;
    let mut value = rank_json("rank-check", &test);
    value["order"] = json!(order);
    Ok(Report::new(value, rank_text("state-input rank condition", &test)).with_status(test.holds))
}

pub fn complete_cmd(
    data: &Path,
    prefix: &Path,
    future: &Path,
    m: Option<usize>,
    t_ini: usize,
    depth: usize,
    residual_tol: f64,
) -> Result<Report> {
    let w = load_with_inputs(data, m)?;
    let rep = DataDrivenRep::new(&w, depth)?;
    let prefix = if t_ini == 0 {
        DMatrix::zeros(0, w.width())
    } else {
        io::load_samples(prefix)?
    };
    if prefix.nrows() != t_ini {
        bail!("--tini {t_ini} but the prefix file has {} samples", prefix.nrows());
    }
    let u_f = io::load_samples(future)?;
    let done = rep.complete(&prefix, &u_f, residual_tol)?;
    let labels: Vec<String> = w
        .labels()
        .map(|l| l[w.inputs()..].to_vec())
        .unwrap_or_else(|| (1..=w.outputs()).map(|i| format!("y{i}")).collect());
    let outputs = &done.outputs;
    let value = json!({
        "command": "complete",
        "t_ini": t_ini,
        "t_f": u_f.nrows(),
        "outputs": (0..outputs.nrows()).map(|i| outputs.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
        "g": done.g,
        "residual": done.residual,
        "spread": done.spread,
    });
    let mut headers = vec!["t"];
    headers.extend(labels.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..outputs.nrows())
        .map(|i| {
            let mut r = vec![(t_ini + i + 1).to_string()];
            r.extend(outputs.row(i).iter().map(|v| num(*v)));
            r
        })
        .collect();
    let mut text = table(&headers, &rows);
    text.push_str(&format!("residual: {}\nspread: {}\n", num(done.residual), num(done.spread)));
    Ok(Report::new(value, text).with_artifact(
        "completion.csv",
        Artifact::Csv {
            data: outputs.clone(),
            labels,
        },
    ))
}

fn poly_rows_json(rows: &[Vec<Poly>]) -> Value {
    json!(rows
        .iter()
        .map(|r| r.iter().map(io::poly_strings).collect::<Vec<_>>())
        .collect::<Vec<_>>())
}

fn poly_rows_text(rows: &[Vec<Poly>]) -> String {
    rows.iter()
        .map(|r| {
            let cells: Vec<String> = r.iter().map(ToString::to_string).collect();
            format!("  [{}]\n", cells.join(", "))
        })
        .collect()
}

pub fn ident_kernel_cmd(
    path: &Path,
    m: Option<usize>,
    depth: usize,
    order: Option<usize>,
    exact: bool,
    tol: Option<f64>,
) -> Result<Report> {
    let (rep, rank, max_error) = if exact {
        if order.is_some() {
            load_with_inputs(path, m)?;
        }
        let rows = io::read_samples_exact(fs::File::open(path)?)?;
        let rep = recover_kernel_exact(&rows, depth)?;
        (rep, None, 0.0)
    } else {
        let w = if order.is_some() {
            load_with_inputs(path, m)?
        } else {
            io::load_trajectory(path, m, 0)?
        };
        let real = DataDrivenRep::new(&w, depth)?.recover_kernel(order, tol)?;
        let mut max_error = 0.0f64;
        let mut snap = |x: f64| {
            let r = rationalize(x, 1_000_000, 1e-9);
            max_error = max_error.max((ati_core::polykernel::rational::q_to_f64(&r) - x).abs());
            r
        };
        let q = w.width();
        let r = PolyMatrix::from_fn(real.rows(), q, |i, j| {
            Poly::from_coeffs(real.blocks.iter().map(|b| snap(b[(i, j)])).collect())
        });
        let c = real.offset.iter().map(|v| snap(*v)).collect();
        (AffineKernelRep::constant(r, c)?, Some(real.rank), max_error)
    };
    let kernel = KernelJson::from_rep(&rep);
    let value = json!({
        "command": "ident-kernel",
        "depth": depth,
        "exact": exact,
        "data_rank": rank,
        "rows": rep.rows(),
        "max_rounding": max_error,
        "kernel": kernel,
    });
    let mut text = format!("kernel rows: {} (depth {depth})\n", rep.rows());
    text.push_str(&format!("R(xi) =\n{}", poly_rows_text(&rep.r().rows_iter().map(<[Poly]>::to_vec).collect::<Vec<_>>())));
    if let Offset::Constant(c) = rep.offset() {
        let cs: Vec<String> = c.iter().map(format_q).collect();
        text.push_str(&format!("c = [{}]\n", cs.join(", ")));
    }
    if exact && rep.rows() == 0 {
        text.push_str("no exact annihilator at this depth; decimal data may carry rounding\n");
    }
    if !exact {
        text.push_str(&format!("largest rounding of a coefficient: {}\n", num(max_error)));
    }
    Ok(Report::new(value, text).with_artifact("kernel.json", Artifact::Json(serde_json::to_value(&kernel)?)))
}

pub fn invariants_cmd(path: &Path, t_max: usize, tol: Option<f64>) -> Result<Report> {
    let w = io::load_trajectory(path, None, 0)?;
    let inv = invariants_from_data(&w, t_max, tol)?;
    let mut value = serde_json::to_value(&inv)?;
    value["command"] = json!("invariants");
    let rows: Vec<Vec<String>> = (0..inv.d.len())
        .map(|i| {
            vec![
                (i + 1).to_string(),
                inv.d[i].to_string(),
                inv.rho[i].to_string(),
                inv.literal.gamma[i].to_string(),
            ]
        })
        .collect();
    let mut text = table(&["t", "d_t", "rho_t", "gamma_t"], &rows);
    text.push_str(&format!(
        "m = {}\nn = {}\nlag = {}\nliteral gamma-sum reading: n = {}, lag = {}\n",
        inv.m, inv.n, inv.ell, inv.literal.n, inv.literal.ell
    ));
    Ok(Report::new(value, text))
}

fn parse_vector(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse::<f64>().with_context(|| format!("{p:?} is not a number")))
        .collect()
}

fn rows_json(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

pub fn simulate_cmd(system: &Path, inputs: &Path, x0: Option<&str>) -> Result<Report> {
    let sys = io::load_system(system)?;
    let (u, _) = io::read_samples(fs::File::open(inputs)?)?;
    let x0 = match x0 {
        Some(s) => DVector::from_vec(parse_vector(s)?),
        None => DVector::zeros(sys.order()),
    };
    let sim = sys.simulate(&x0, &u)?;
    let value = json!({
        "command": "simulate",
        "states": rows_json(&sim.states),
        "outputs": rows_json(&sim.outputs),
        "next_state": sim.next_state.iter().copied().collect::<Vec<_>>(),
    });
    let (n, m, p) = (sys.order(), sys.inputs(), sys.outputs());
    let x_labels: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    let y_labels: Vec<String> = (1..=p).map(|i| format!("y{i}")).collect();
    let mut headers: Vec<String> = vec!["t".into()];
    headers.extend((1..=m).map(|i| format!("u{i}")));
    headers.extend(x_labels.iter().cloned());
    headers.extend(y_labels.iter().cloned());
    let rows: Vec<Vec<String>> = (0..u.nrows())
        .map(|t| {
            let mut r = vec![(t + 1).to_string()];
            r.extend(u.row(t).iter().map(|v| num(*v)));
            r.extend(sim.states.row(t).iter().map(|v| num(*v)));
            r.extend(sim.outputs.row(t).iter().map(|v| num(*v)));
            r
        })
        .collect();
    let hdr: Vec<&str> = headers.iter().map(String::as_str).collect();
    let mut text = table(&hdr, &rows);
    text.push_str(&format!(
        "x(T+1) = {}\n",
        nums(&sim.next_state.iter().copied().collect::<Vec<_>>())
    ));
    Ok(Report::new(value, text)
        .with_artifact("states.csv", Artifact::Csv { data: sim.states, labels: x_labels })
        .with_artifact("outputs.csv", Artifact::Csv { data: sim.outputs, labels: y_labels }))
}

pub fn lift_cmd(system: &Path) -> Result<Report> {
    let sys = io::load_system(system)?;
    let lifted: LiftedStateSpace = sys.lift();
    let at_one = lifted.char_poly_at_one()?;
    let value = json!({
        "command": "lift",
        "A": rows_json(&lifted.a),
        "B": rows_json(&lifted.b),
        "C": rows_json(&lifted.c),
        "D": rows_json(&lifted.d),
        "char_poly_at_one": format_q(&at_one),
    });
    let mut text = String::new();
    for (name, m) in [("A~", &lifted.a), ("B~", &lifted.b), ("C~", &lifted.c), ("D", &lifted.d)] {
        text.push_str(&matrix_text(name, m));
    }
    text.push_str(&format!("det(I - A~) = {}\n", format_q(&at_one)));
    Ok(Report::new(value, text))
}

pub fn parse_mode(s: &str) -> Result<LinearizationMode> {
    if s == "analytic" {
        return Ok(LinearizationMode::Analytic);
    }
    if let Some(h) = s.strip_prefix("fd:") {
        let step: f64 = h.parse().with_context(|| format!("step {h:?} is not a number"))?;
        return Ok(LinearizationMode::FiniteDifference { step });
    }
    Err(anyhow!("mode must be \"analytic\" or \"fd:<step>\", got {s:?}"))
}

pub fn linearize_cmd(plant: &Path, at: &str, mode: &str) -> Result<Report> {
    let plant = io::load_plant(plant)?;
    let parts: Vec<&str> = at.split(';').collect();
    let [x, u, y] = parts.as_slice() else {
        bail!("--at expects three ';'-separated groups \"x;u;y\", got {at:?}");
    };
    let mode = parse_mode(mode)?;
    let sys = linearize(&plant, &parse_vector(x)?, &parse_vector(u)?, &parse_vector(y)?, mode)?;
    let json_sys = SystemJson::from_system(&sys);
    let value = json!({ "command": "linearize", "system": json_sys });
    let mut text = String::new();
    for (name, m) in [("A", sys.a()), ("B", sys.b()), ("C", sys.c()), ("D", sys.d())] {
        text.push_str(&matrix_text(name, m));
    }
    text.push_str(&format!("E = {}\n", nums(sys.e().as_slice())));
    text.push_str(&format!("F = {}\n", nums(sys.f().as_slice())));
    Ok(Report::new(value, text).with_artifact("system.json", Artifact::Json(serde_json::to_value(&json_sys)?)))
}

pub fn consistency_cmd(path: &Path) -> Result<Report> {
    let rep = io::load_kernel(path)?;
    let syz = syzygy_basis(rep.r());
    let delta = syzygy_degree_bound(&syz);
    let (value, text, holds) = match rep.offset() {
        Offset::Constant(_) => {
            let ok = consistent_constant(&rep)?;
            let value = json!({
                "command": "consistency",
                "offset": "constant",
                "consistent": ok,
                "syzygy_degree": delta,
                "syzygies": poly_rows_json(&syz),
            });
            let text = format!(
                "offset: constant\nsyzygy generators ({}):\n{}consistent: {}\n",
                syz.len(),
                poly_rows_text(&syz),
                verdict(ok)
            );
            (value, text, ok)
        }
        Offset::Sequence(c) => {
            let report = consistent_sequence(rep.r(), c)?;
            let value = json!({
                "command": "consistency",
                "offset": "sequence",
                "consistent": report.consistent,
                "syzygy_degree": delta,
                "syzygies": poly_rows_json(&syz),
                "window": report.window,
                "rank": report.rank,
                "augmented_rank": report.augmented_rank,
                "certified": report.certified,
            });
            let text = format!(
                "offset: sequence over [1, {}]\nsyzygy generators ({}):\n{}Toeplitz rank: {}, augmented: {}\ncertified window (T >= {}): {}\nconsistent: {}\n",
                report.window,
                syz.len(),
                poly_rows_text(&syz),
                report.rank,
                report.augmented_rank,
                delta + 1,
                report.certified,
                verdict(report.consistent)
            );
            (value, text, report.consistent)
        }
    };
    Ok(Report::new(value, text).with_status(holds))
}

pub fn equiv_cmd(a: &Path, b: &Path) -> Result<Report> {
    let rep1 = io::load_kernel(a)?;
    let rep2 = io::load_kernel(b)?;
    let same = equivalent(&rep1, &rep2)?;
    let rows = [minimize(&rep1)?.rows(), minimize(&rep2)?.rows()];
    let value = json!({ "command": "equiv", "equivalent": same, "minimal_rows": rows });
    let text = format!(
        "minimal row counts: {} and {}\nequivalent: {}\n",
        rows[0],
        rows[1],
        if same { "yes" } else { "no" }
    );
    Ok(Report::new(value, text).with_status(same))
}

pub fn syzygy_cmd(path: &Path) -> Result<Report> {
    let r = io::load_polymatrix(path)?;
    let syz = syzygy_basis(&r);
    let rank = ati_core::polykernel::kernel::poly_rank(&r);
    let value = json!({
        "command": "syzygy",
        "rank": rank,
        "max_degree": syzygy_degree_bound(&syz),
        "syzygies": poly_rows_json(&syz),
    });
    let text = format!(
        "rank: {rank}\nsyzygy generators ({}):\n{}",
        syz.len(),
        poly_rows_text(&syz)
    );
    Ok(Report::new(value, text))
}

pub fn smith_cmd(path: &Path) -> Result<Report> {
    let r = io::load_polymatrix(path)?;
    let s = smith_form(&r)?;
    let value = json!({
        "command": "smith",
        "rank": s.rank(),
        "invariant_factors": s.invariant_factors.iter().map(io::poly_strings).collect::<Vec<_>>(),
        "U": PolyMatrixJson::from_matrix(&s.u),
        "V": PolyMatrixJson::from_matrix(&s.v),
    });
    let factors: Vec<String> = s.invariant_factors.iter().map(ToString::to_string).collect();
    let text = format!(
        "rank: {}\ninvariant factors: [{}]\nU =\n{}V =\n{}",
        s.rank(),
        factors.join(", "),
        s.u,
        s.v
    );
    Ok(Report::new(value, text))
}

pub fn example_cmd(tol: Option<f64>) -> Result<Report> {
    let rows = reference::run(tol)?;
    let all = rows.iter().all(|r| r.test.holds);
    let value = json!({
        "command": "example-sec7",
        "depth": reference::DEPTH,
        "order": 2,
        "inputs": 1,
        "rows": rows,
        "all_hold": all,
    });
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.experiment.to_string(),
                r.samples.to_string(),
                r.test.depth.to_string(),
                r.test.rank.to_string(),
                r.test.target.to_string(),
                num(r.test.tol),
                num(r.test.threshold),
                num(*r.test.singular_values.last().unwrap_or(&0.0)),
                num(r.gap_ratio),
                verdict(r.test.holds).to_owned(),
            ]
        })
        .collect();
    let text = table(
        &["experiment", "T", "L", "rank", "target", "tol", "threshold", "sigma_min", "gap_ratio", "result"],
        &cells,
    );
    Ok(Report::new(value, text).with_status(all))
}
