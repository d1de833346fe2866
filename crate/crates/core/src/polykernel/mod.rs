//! Exact polynomial matrices over the rationals and affine kernel
//! representations built on them.

pub mod kernel;
pub mod matrix;
pub mod poly;
pub mod qmat;
pub mod rational;
pub mod reduce;
pub mod smith;

pub use kernel::{
    behavior_apply, consistent_constant, consistent_sequence, consistent_sequence_f64,
    controllable_kernel, equivalent, is_consistent, lag_of, minimize, syzygy_basis,
    AffineKernelRep, Offset, WindowConsistency,
};
pub use matrix::PolyMatrix;
pub use poly::Poly;
pub use qmat::QMatrix;
pub use rational::Q;
pub use smith::{smith_form, SmithDecomposition};
