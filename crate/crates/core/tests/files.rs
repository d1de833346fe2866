use std::fs;
use std::path::PathBuf;

use ati_core::affine_ss::AffineStateSpace;
use ati_core::io::{self, KernelJson, SystemJson};
use ati_core::polykernel::kernel::{equivalent, AffineKernelRep, Offset};
use ati_core::polykernel::matrix::PolyMatrix;
use ati_core::polykernel::rational::{q, q_frac};
use ati_core::trajectories::Trajectory;
use nalgebra::{dmatrix, dvector, DMatrix};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ati-core-files-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn trajectory_survives_csv_and_sidecar() {
    let data = DMatrix::from_fn(9, 3, |t, j| ((t * 7 + j * 3) as f64).sin() / 3.0 + 1e-17 * t as f64);
    let w = Trajectory::new(data, 2)
        .unwrap()
        .with_labels(vec!["u1".into(), "u2".into(), "y".into()])
        .unwrap();
    let path = scratch("w.csv");
    io::save_trajectory(&path, &w).unwrap();
    let back = io::load_trajectory(&path, None, 0).unwrap();
    assert_eq!(back.data(), w.data());
    assert_eq!(back.inputs(), 2);
    assert_eq!(back.labels(), w.labels());

    let overridden = io::load_trajectory(&path, Some(1), 0).unwrap();
    assert_eq!(overridden.inputs(), 1);
}

#[test]
fn system_json_reproduces_simulation() {
    let sys = AffineStateSpace::new(
        dmatrix![0.5, 0.25; 0.0, -0.5],
        dmatrix![1.0; 1.0],
        dmatrix![1.0, 0.0],
        dmatrix![0.0],
        dvector![0.5, -0.25],
        dvector![1.0],
    )
    .unwrap();
    let text = serde_json::to_string(&SystemJson::from_system(&sys)).unwrap();
    let back = serde_json::from_str::<SystemJson>(&text).unwrap().to_system().unwrap();
    let u = DMatrix::from_fn(12, 1, |t, _| (t as f64 * 0.7).cos());
    let x0 = dvector![0.3, -0.1];
    let a = sys.simulate(&x0, &u).unwrap();
    let b = back.simulate(&x0, &u).unwrap();
    assert_eq!(a.outputs, b.outputs);
    assert_eq!(a.states, b.states);
}

#[test]
fn kernel_json_round_trip_is_equivalent() {
    let r = PolyMatrix::from_int_rows(&[vec![vec![-1, 1], vec![1]], vec![vec![2], vec![0, 3, 1]]]);
    let rep = AffineKernelRep::new(r, Offset::Constant(vec![q_frac(1, 3), q(-2)])).unwrap();
    let text = serde_json::to_string(&KernelJson::from_rep(&rep)).unwrap();
    let back = serde_json::from_str::<KernelJson>(&text).unwrap().to_rep().unwrap();
    assert_eq!(KernelJson::from_rep(&back), KernelJson::from_rep(&rep));
    assert!(equivalent(&rep, &back).unwrap());
}

#[test]
fn malformed_kernel_grid_is_rejected() {
    let json = r#"{"rows":2,"cols":1,"entries":[[["1"]]],"c":["0","0"]}"#;
    let parsed: KernelJson = serde_json::from_str(json).unwrap();
    assert!(parsed.to_rep().is_err());
}
