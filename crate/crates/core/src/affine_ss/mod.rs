//! Affine state-space models `x(t+1) = A x + B u + E`, `y = C x + D u + F`.

mod plant;

pub use plant::{linearize, Expr, LinearizationMode, NonlinearPlant};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::polykernel::qmat::QMatrix;
use crate::polykernel::rational::Q;
use crate::trajectories::Trajectory;

#[derive(Clone, Debug, PartialEq)]
pub struct AffineStateSpace {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
    e: DVector<f64>,
    f: DVector<f64>,
}

/// States and outputs over `1..T`; `x(T+1)` is kept separately.
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    /// `T x n`, row `t - 1` is `x(t)`.
    pub states: DMatrix<f64>,
    /// `T x p`.
    pub outputs: DMatrix<f64>,
    pub next_state: DVector<f64>,
}

fn shape_error(what: &str, got: (usize, usize), want: (usize, usize)) -> Error {
    Error::DimensionMismatch(format!(
        "{what} is {}x{}, expected {}x{}",
        got.0, got.1, want.0, want.1
    ))
}

fn check_shape(what: &str, m: &DMatrix<f64>, want: (usize, usize)) -> Result<()> {
    if m.shape() == want {
        Ok(())
    } else {
        Err(shape_error(what, m.shape(), want))
    }
}

fn check_vec(what: &str, v: &DVector<f64>, want: usize) -> Result<()> {
    if v.len() == want {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{what} has length {}, expected {want}",
            v.len()
        )))
    }
}

/// Run `x(t+1) = a x + b u + e`, `y = c x + d u + f` from `x0`.
fn run(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    e: &DVector<f64>,
    f: &DVector<f64>,
    x0: &DVector<f64>,
    u: &DMatrix<f64>,
) -> Simulation {
    let (t_len, n, p) = (u.nrows(), a.nrows(), c.nrows());
    let mut states = DMatrix::zeros(t_len, n);
    let mut outputs = DMatrix::zeros(t_len, p);
    let mut x = x0.clone();
    for t in 0..t_len {
        let ut = u.row(t).transpose();
        states.set_row(t, &x.transpose());
        let y = c * &x + d * &ut + f;
        outputs.set_row(t, &y.transpose());
        x = a * &x + b * &ut + e;
    }
    Simulation {
        states,
        outputs,
        next_state: x,
    }
}

impl AffineStateSpace {
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        e: DVector<f64>,
        f: DVector<f64>,
    ) -> Result<Self> {
        let n = e.len();
        let p = f.len();
        let m = if p > 0 { d.ncols() } else { b.ncols() };
        check_shape("A", &a, (n, n))?;
        check_shape("B", &b, (n, m))?;
        check_shape("C", &c, (p, n))?;
        check_shape("D", &d, (p, m))?;
        if m + p == 0 {
            return Err(Error::DimensionMismatch("system has no variables".into()));
        }
        let sys = Self { a, b, c, d, e, f };
        if [&sys.a, &sys.b, &sys.c, &sys.d]
            .iter()
            .any(|m| m.iter().any(|v| !v.is_finite()))
            || sys.e.iter().chain(sys.f.iter()).any(|v| !v.is_finite())
        {
            return Err(Error::NonFiniteEntry);
        }
        Ok(sys)
    }

    /// Linear system `(A, B, C, D)` with zero offsets.
    pub fn linear(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let (n, p) = (a.nrows(), c.nrows());
        Self::new(a, b, c, d, DVector::zeros(n), DVector::zeros(p))
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }
    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }
    pub fn e(&self) -> &DVector<f64> {
        &self.e
    }
    pub fn f(&self) -> &DVector<f64> {
        &self.f
    }

    /// State dimension.
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.d.ncols().max(self.b.ncols())
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    pub fn simulate(&self, x0: &DVector<f64>, u: &DMatrix<f64>) -> Result<Simulation> {
        check_vec("initial state", x0, self.order())?;
        if u.nrows() == 0 {
            return Err(Error::EmptyTrajectory);
        }
        if u.ncols() != self.inputs() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} columns, system has {} inputs",
                u.ncols(),
                self.inputs()
            )));
        }
        Ok(run(&self.a, &self.b, &self.c, &self.d, &self.e, &self.f, x0, u))
    }

    /// Input/output trajectory `w = (u, y)` produced from `x0`.
    pub fn io_trajectory(&self, x0: &DVector<f64>, u: &DMatrix<f64>) -> Result<Trajectory> {
        let sim = self.simulate(x0, u)?;
        Trajectory::from_io(u, &sim.outputs)
    }

    /// `[B, AB, ..., A^{n-1} B]`.
    pub fn kalman_matrix(&self) -> DMatrix<f64> {
        let (n, m) = (self.order(), self.inputs());
        let mut k = DMatrix::zeros(n, n * m);
        let mut block = self.b.clone();
        for i in 0..n {
            k.view_mut((0, i * m), (n, m)).copy_from(&block);
            block = &self.a * block;
        }
        k
    }

    /// Kalman rank test; an empty state is controllable.
    pub fn controllable(&self, tol: Option<f64>) -> Result<bool> {
        let n = self.order();
        if n == 0 {
            return Ok(true);
        }
        Ok(linalg::numerical_rank(&self.kalman_matrix(), tol)?.rank == n)
    }

    /// `(A, B, C, D, 0, 0)`.
    pub fn difference_system(&self) -> Self {
        Self {
            e: DVector::zeros(self.order()),
            f: DVector::zeros(self.outputs()),
            ..self.clone()
        }
    }

    /// Linear system on the state `(x, 1)`.
    pub fn lift(&self) -> LiftedStateSpace {
        let (n, m, p) = (self.order(), self.inputs(), self.outputs());
        let mut a = DMatrix::zeros(n + 1, n + 1);
        a.view_mut((0, 0), (n, n)).copy_from(&self.a);
        a.view_mut((0, n), (n, 1)).copy_from(&self.e);
        a[(n, n)] = 1.0;
        let mut b = DMatrix::zeros(n + 1, m);
        b.view_mut((0, 0), (n, m)).copy_from(&self.b);
        let mut c = DMatrix::zeros(p, n + 1);
        c.view_mut((0, 0), (p, n)).copy_from(&self.c);
        c.view_mut((0, n), (p, 1)).copy_from(&self.f);
        LiftedStateSpace {
            a,
            b,
            c,
            d: self.d.clone(),
        }
    }
}

/// Homogeneous linear system with an extra state held at one.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedStateSpace {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl LiftedStateSpace {
    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Initial state `(x0, 1)`.
    pub fn lifted_state(x0: &DVector<f64>) -> DVector<f64> {
        let mut chi = DVector::from_element(x0.len() + 1, 1.0);
        chi.rows_mut(0, x0.len()).copy_from(x0);
        chi
    }

    pub fn simulate(&self, chi0: &DVector<f64>, u: &DMatrix<f64>) -> Result<Simulation> {
        check_vec("initial state", chi0, self.order())?;
        if u.nrows() == 0 {
            return Err(Error::EmptyTrajectory);
        }
        if u.ncols() != self.b.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "input has {} columns, system has {} inputs",
                u.ncols(),
                self.b.ncols()
            )));
        }
        let e = DVector::zeros(self.order());
        let f = DVector::zeros(self.c.nrows());
        Ok(run(&self.a, &self.b, &self.c, &self.d, &e, &f, chi0, u))
    }

    /// `det(I - A~)` evaluated exactly on the rational image of the entries.
    pub fn char_poly_at_one(&self) -> Result<Q> {
        let a = QMatrix::from_f64(&self.a)?;
        let k = a.nrows();
        let shifted = QMatrix::from_fn(k, k, |i, j| {
            let id = if i == j { Q::from_integer(1.into()) } else { Q::from_integer(0.into()) };
            id - &a[(i, j)]
        });
        Ok(shifted.determinant())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_traits::Zero;
    use proptest::prelude::*;

    pub(crate) fn example_system() -> AffineStateSpace {
        AffineStateSpace::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
            DVector::from_column_slice(&[1.0, 1.0]),
            DVector::zeros(2),
        )
        .unwrap()
    }

    #[test]
    fn first_step_of_example() {
        let u = DMatrix::from_column_slice(3, 1, &[0.91, 0.5, -0.2]);
        let sim = example_system().simulate(&DVector::zeros(2), &u).unwrap();
        assert_relative_eq!(sim.states[(0, 0)], 0.0);
        assert_relative_eq!(sim.states[(1, 0)], 1.91);
        assert_relative_eq!(sim.states[(1, 1)], 1.91);
        assert_relative_eq!(sim.states[(2, 1)], 2.0 * 1.91 + 0.5 + 1.0);
    }

    #[test]
    fn zero_system_stays_at_rest() {
        let sys = example_system().difference_system();
        let sim = sys.simulate(&DVector::zeros(2), &DMatrix::zeros(5, 1)).unwrap();
        assert!(sim.states.iter().all(|v| *v == 0.0));
        assert!(sim.outputs.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn static_map() {
        let sys = AffineStateSpace::new(
            DMatrix::zeros(0, 0),
            DMatrix::zeros(0, 1),
            DMatrix::zeros(1, 0),
            DMatrix::from_element(1, 1, 2.0),
            DVector::zeros(0),
            DVector::from_element(1, 1.0),
        )
        .unwrap();
        assert_eq!(sys.order(), 0);
        let sim = sys.simulate(&DVector::zeros(0), &DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 2.0])).unwrap();
        assert_eq!(sim.outputs.as_slice(), &[1.0, 3.0, 5.0]);
        assert!(sys.controllable(None).unwrap());
        assert_eq!(sys.lift().a, DMatrix::from_element(1, 1, 1.0));
    }

    #[test]
    fn rejects_bad_shapes() {
        let err = AffineStateSpace::new(
            DMatrix::zeros(2, 2),
            DMatrix::zeros(3, 1),
            DMatrix::zeros(1, 2),
            DMatrix::zeros(1, 1),
            DVector::zeros(2),
            DVector::zeros(1),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        let sys = example_system();
        assert!(matches!(
            sys.simulate(&DVector::zeros(3), &DMatrix::zeros(2, 1)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn controllability_examples() {
        assert!(example_system().controllable(None).unwrap());
        let unreachable = AffineStateSpace::linear(
            DMatrix::identity(2, 2),
            DMatrix::from_column_slice(2, 1, &[1.0, 0.0]),
            DMatrix::identity(2, 2),
            DMatrix::zeros(2, 1),
        )
        .unwrap();
        assert!(!unreachable.controllable(None).unwrap());
        let scalar = AffineStateSpace::linear(
            DMatrix::zeros(1, 1),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::zeros(1, 1),
        )
        .unwrap();
        assert!(scalar.controllable(None).unwrap());
    }

    #[test]
    fn lift_of_example() {
        let lifted = example_system().lift();
        assert_eq!(
            lifted.a,
            DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 2.0, 1.0, 0.0, 0.0, 1.0])
        );
        assert_eq!(lifted.b, DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]));
        assert!(lifted.char_poly_at_one().unwrap().is_zero());
    }

    #[test]
    fn difference_of_linear_system_is_identity() {
        let sys = example_system().difference_system();
        assert_eq!(sys.difference_system(), sys);
    }

    fn random_system() -> impl Strategy<Value = (AffineStateSpace, DVector<f64>, DMatrix<f64>)> {
        (0usize..=3, 1usize..=2, 1usize..=2).prop_flat_map(|(n, m, p)| {
            let len = n * n + n * m + p * n + p * m + n + p + n + 12 * m;
            proptest::collection::vec(-1.0f64..1.0, len).prop_map(move |v| {
                let mut it = v.into_iter();
                let mut take = |k: usize| -> Vec<f64> { it.by_ref().take(k).collect() };
                let a = DMatrix::from_row_slice(n, n, &take(n * n)) * 0.9;
                let b = DMatrix::from_row_slice(n, m, &take(n * m));
                let c = DMatrix::from_row_slice(p, n, &take(p * n));
                let d = DMatrix::from_row_slice(p, m, &take(p * m));
                let e = DVector::from_vec(take(n));
                let f = DVector::from_vec(take(p));
                let x0 = DVector::from_vec(take(n));
                let u = DMatrix::from_row_slice(12, m, &take(12 * m));
                (AffineStateSpace::new(a, b, c, d, e, f).unwrap(), x0, u)
            })
        })
    }

    proptest! {
        #[test]
        fn lifted_simulation_matches((sys, x0, u) in random_system()) {
            let direct = sys.simulate(&x0, &u).unwrap();
            let lifted = sys.lift();
            let sim = lifted.simulate(&LiftedStateSpace::lifted_state(&x0), &u).unwrap();
            let n = sys.order();
            prop_assert!(sim.states.column(n).iter().all(|v| *v == 1.0));
            let scale = 1.0 + direct.outputs.amax();
            prop_assert!((&sim.outputs - &direct.outputs).amax() <= 1e-12 * scale);
        }

        #[test]
        fn differences_solve_the_difference_system(
            (sys, x0, u) in random_system(),
            shift in -1.0f64..1.0,
        ) {
            let x1 = x0.add_scalar(shift);
            let u1 = u.map(|v| v * 0.5 - shift);
            let a = sys.simulate(&x0, &u).unwrap();
            let b = sys.simulate(&x1, &u1).unwrap();
            let dif = sys.difference_system().simulate(&(&x0 - &x1), &(&u - &u1)).unwrap();
            let scale = 1.0 + a.outputs.amax() + b.outputs.amax();
            prop_assert!((&a.outputs - &b.outputs - &dif.outputs).amax() <= 1e-12 * scale);
        }

        #[test]
        fn difference_system_has_same_controllability((sys, _x0, _u) in random_system()) {
            prop_assert_eq!(
                sys.controllable(None).unwrap(),
                sys.difference_system().controllable(None).unwrap()
            );
        }

        #[test]
        fn affine_combinations_stay_in_the_behavior(
            (sys, x0, u) in random_system(),
            alpha in -2.0f64..2.0,
        ) {
            let x1 = x0.map(|v| 1.0 - v);
            let u1 = u.map(|v| v * v);
            let a = sys.simulate(&x0, &u).unwrap();
            let b = sys.simulate(&x1, &u1).unwrap();
            let mix = |p: &DMatrix<f64>, q: &DMatrix<f64>| p * alpha + q * (1.0 - alpha);
            let xs = mix(&a.states, &b.states);
            let us = mix(&u, &u1);
            let ys = mix(&a.outputs, &b.outputs);
            let scale = 1.0 + xs.amax() + ys.amax();
            for t in 0..u.nrows() {
                let x = xs.row(t).transpose();
                let ut = us.row(t).transpose();
                let y = sys.c() * &x + sys.d() * &ut + sys.f();
                prop_assert!((y - ys.row(t).transpose()).amax() <= 1e-10 * scale);
                if t + 1 < u.nrows() {
                    let next = sys.a() * &x + sys.b() * &ut + sys.e();
                    prop_assert!((next - xs.row(t + 1).transpose()).amax() <= 1e-10 * scale);
                }
            }
        }
    }
}
