//! A two-state affine system with three recorded input experiments, used
//! as a reproducible end-to-end scenario.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::affine_ss::AffineStateSpace;
use crate::datadriven::rank_condition_affine;
use crate::error::Result;
use crate::excitation::RankTest;

/// Trajectory depth used by the scenario.
pub const DEPTH: usize = 2;

pub struct Experiment {
    pub name: &'static str,
    pub inputs: &'static [f64],
}

/// Three input records. The second has eight samples; all are used.
pub const EXPERIMENTS: [Experiment; 3] = [
    Experiment {
        name: "offset plus two sinusoids",
        inputs: &[0.91, 0.41, -0.53, -0.99, -0.65, 0.20, 0.87, 0.97, 0.32],
    },
    Experiment {
        name: "two sinusoids",
        inputs: &[0.640, -0.323, -1.0, 0.248, -0.640, 0.323, 1.0, -0.248],
    },
    Experiment {
        name: "single sinusoid",
        inputs: &[1.0, -0.12, -1.0, 0.12, 1.0, -0.12],
    },
];

/// `A = diag(1, 2)`, `B = E = (1, 1)`, full state output.
pub fn system() -> AffineStateSpace {
    AffineStateSpace::new(
        DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
        DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        DMatrix::identity(2, 2),
        DMatrix::zeros(2, 1),
        DVector::from_column_slice(&[1.0, 1.0]),
        DVector::zeros(2),
    )
    .expect("consistent dimensions")
}

pub fn input_matrix(e: &Experiment) -> DMatrix<f64> {
    DMatrix::from_column_slice(e.inputs.len(), 1, e.inputs)
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioRow {
    pub experiment: usize,
    pub name: String,
    pub samples: usize,
    pub gap_ratio: f64,
    #[serde(flatten)]
    pub test: RankTest,
}

/// Simulate each experiment from rest and evaluate the affine rank condition.
pub fn run(tol: Option<f64>) -> Result<Vec<ScenarioRow>> {
    let sys = system();
    EXPERIMENTS
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let u = input_matrix(e);
            let sim = sys.simulate(&DVector::zeros(2), &u)?;
            let test = rank_condition_affine(&sim.states, &u, DEPTH, tol)?;
            Ok(ScenarioRow {
                experiment: i + 1,
                name: e.name.to_owned(),
                samples: e.inputs.len(),
                gap_ratio: test.gap_ratio(),
                test,
            })
        })
        .collect()
}
