pub mod affine_ss;
pub mod datadriven;
pub mod error;
pub mod excitation;
pub mod io;
pub mod linalg;
pub mod polykernel;
pub mod reference;
pub mod trajectories;

pub use error::{Error, Result};
