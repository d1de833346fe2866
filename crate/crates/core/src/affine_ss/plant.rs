//! Nonlinear plants written in a small arithmetic expression language and
//! their affine linearization about an operating point.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::AffineStateSpace;
use crate::error::{Error, Result};

/// Expression over the state `x` and input `u` (0-based indices).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expr {
    Const(f64),
    X(usize),
    U(usize),
    Add(Vec<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Var {
    X(usize),
    U(usize),
}

impl Expr {
    pub fn eval(&self, x: &[f64], u: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::X(i) => x[*i],
            Expr::U(i) => u[*i],
            Expr::Add(terms) => terms.iter().map(|t| t.eval(x, u)).sum(),
            Expr::Sub(a, b) => a.eval(x, u) - b.eval(x, u),
            Expr::Mul(factors) => factors.iter().map(|t| t.eval(x, u)).product(),
            Expr::Neg(a) => -a.eval(x, u),
            Expr::Pow(a, k) => a.eval(x, u).powi(*k),
        }
    }

    /// Partial derivative as a new expression tree.
    fn derivative(&self, var: Var) -> Expr {
        match self {
            Expr::Const(_) => Expr::Const(0.0),
            Expr::X(i) => Expr::Const(if var == Var::X(*i) { 1.0 } else { 0.0 }),
            Expr::U(i) => Expr::Const(if var == Var::U(*i) { 1.0 } else { 0.0 }),
            Expr::Add(terms) => Expr::Add(terms.iter().map(|t| t.derivative(var)).collect()),
            Expr::Sub(a, b) => Expr::Sub(Box::new(a.derivative(var)), Box::new(b.derivative(var))),
            Expr::Mul(factors) => Expr::Add(
                (0..factors.len())
                    .map(|k| {
                        Expr::Mul(
                            factors
                                .iter()
                                .enumerate()
                                .map(|(i, f)| if i == k { f.derivative(var) } else { f.clone() })
                                .collect(),
                        )
                    })
                    .collect(),
            ),
            Expr::Neg(a) => Expr::Neg(Box::new(a.derivative(var))),
            Expr::Pow(a, k) => match k {
                0 => Expr::Const(0.0),
                _ => Expr::Mul(vec![
                    Expr::Const(*k as f64),
                    Expr::Pow(a.clone(), k - 1),
                    a.derivative(var),
                ]),
            },
        }
    }

    fn max_index(&self) -> (Option<usize>, Option<usize>) {
        let join = |a: Option<usize>, b: Option<usize>| a.max(b);
        match self {
            Expr::Const(_) => (None, None),
            Expr::X(i) => (Some(*i), None),
            Expr::U(i) => (None, Some(*i)),
            Expr::Add(v) | Expr::Mul(v) => v.iter().fold((None, None), |acc, e| {
                let (x, u) = e.max_index();
                (join(acc.0, x), join(acc.1, u))
            }),
            Expr::Sub(a, b) => {
                let (ax, au) = a.max_index();
                let (bx, bu) = b.max_index();
                (join(ax, bx), join(au, bu))
            }
            Expr::Neg(a) | Expr::Pow(a, _) => a.max_index(),
        }
    }
}

/// `x(t+1) = f(x, u)`, `y = h(x, u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearPlant {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub f: Vec<Expr>,
    pub h: Vec<Expr>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LinearizationMode {
    Analytic,
    /// Central differences with the given step.
    FiniteDifference { step: f64 },
}

impl NonlinearPlant {
    pub fn new(n: usize, m: usize, f: Vec<Expr>, h: Vec<Expr>) -> Result<Self> {
        let plant = Self {
            n,
            m,
            p: h.len(),
            f,
            h,
        };
        plant.validate()?;
        Ok(plant)
    }

    pub fn validate(&self) -> Result<()> {
        if self.f.len() != self.n || self.h.len() != self.p {
            return Err(Error::DimensionMismatch(format!(
                "plant declares n={}, p={} but has {} state and {} output maps",
                self.n,
                self.p,
                self.f.len(),
                self.h.len()
            )));
        }
        for e in self.f.iter().chain(&self.h) {
            let (x, u) = e.max_index();
            if x.is_some_and(|i| i >= self.n) || u.is_some_and(|i| i >= self.m) {
                return Err(Error::DimensionMismatch(
                    "expression refers to a variable outside the declared dimensions".into(),
                ));
            }
        }
        Ok(())
    }

    fn eval_all(maps: &[Expr], x: &[f64], u: &[f64]) -> Result<DVector<f64>> {
        let v = DVector::from_iterator(maps.len(), maps.iter().map(|e| e.eval(x, u)));
        if v.iter().all(|s| s.is_finite()) {
            Ok(v)
        } else {
            Err(Error::NonFiniteEvaluation)
        }
    }

    pub fn eval_f(&self, x: &[f64], u: &[f64]) -> Result<DVector<f64>> {
        Self::eval_all(&self.f, x, u)
    }

    pub fn eval_h(&self, x: &[f64], u: &[f64]) -> Result<DVector<f64>> {
        Self::eval_all(&self.h, x, u)
    }

    /// Simulate the plant itself.
    pub fn simulate(&self, x0: &DVector<f64>, u: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let t_len = u.nrows();
        let mut states = DMatrix::zeros(t_len, self.n);
        let mut outputs = DMatrix::zeros(t_len, self.p);
        let mut x: Vec<f64> = x0.iter().copied().collect();
        for t in 0..t_len {
            let ut: Vec<f64> = u.row(t).iter().copied().collect();
            states.set_row(t, &DVector::from_column_slice(&x).transpose());
            outputs.set_row(t, &self.eval_h(&x, &ut)?.transpose());
            x = self.eval_f(&x, &ut)?.iter().copied().collect();
        }
        Ok((states, outputs))
    }
}

fn analytic_jacobian(maps: &[Expr], var: impl Fn(usize) -> Var, cols: usize, x: &[f64], u: &[f64]) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(maps.len(), cols);
    for (i, e) in maps.iter().enumerate() {
        for j in 0..cols {
            let v = e.derivative(var(j)).eval(x, u);
            if !v.is_finite() {
                return Err(Error::NonFiniteEvaluation);
            }
            jac[(i, j)] = v;
        }
    }
    Ok(jac)
}

fn central_jacobian(
    maps: &[Expr],
    wrt_state: bool,
    cols: usize,
    x: &[f64],
    u: &[f64],
    step: f64,
) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(maps.len(), cols);
    for j in 0..cols {
        let (mut xp, mut up) = (x.to_vec(), u.to_vec());
        let (mut xm, mut um) = (x.to_vec(), u.to_vec());
        if wrt_state {
            xp[j] += step;
            xm[j] -= step;
        } else {
            up[j] += step;
            um[j] -= step;
        }
        let plus = NonlinearPlant::eval_all(maps, &xp, &up)?;
        let minus = NonlinearPlant::eval_all(maps, &xm, &um)?;
        jac.set_column(j, &((plus - minus) / (2.0 * step)));
    }
    Ok(jac)
}

/// Affine model of the deviations `x - xbar`, `u - ubar`, `y - ybar`:
/// Jacobians at the operating point with `E = f(xbar, ubar) - xbar` and
/// `F = h(xbar, ubar) - ybar`.
pub fn linearize(
    plant: &NonlinearPlant,
    xbar: &[f64],
    ubar: &[f64],
    ybar: &[f64],
    mode: LinearizationMode,
) -> Result<AffineStateSpace> {
    plant.validate()?;
    if xbar.len() != plant.n || ubar.len() != plant.m || ybar.len() != plant.p {
        return Err(Error::DimensionMismatch(format!(
            "operating point has sizes ({}, {}, {}), plant ({}, {}, {})",
            xbar.len(),
            ubar.len(),
            ybar.len(),
            plant.n,
            plant.m,
            plant.p
        )));
    }
    if xbar.iter().chain(ubar).chain(ybar).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteEntry);
    }
    let fx = plant.eval_f(xbar, ubar)?;
    let hx = plant.eval_h(xbar, ubar)?;
    let (a, b, c, d) = match mode {
        LinearizationMode::Analytic => (
            analytic_jacobian(&plant.f, Var::X, plant.n, xbar, ubar)?,
            analytic_jacobian(&plant.f, Var::U, plant.m, xbar, ubar)?,
            analytic_jacobian(&plant.h, Var::X, plant.n, xbar, ubar)?,
            analytic_jacobian(&plant.h, Var::U, plant.m, xbar, ubar)?,
        ),
        LinearizationMode::FiniteDifference { step } => {
            let scale = xbar.iter().chain(ubar).fold(1.0f64, |s, v| s.max(v.abs()));
            let min = 64.0 * f64::EPSILON * scale;
            if !(step >= min) || !step.is_finite() {
                return Err(Error::StepTooSmall { step, min });
            }
            (
                central_jacobian(&plant.f, true, plant.n, xbar, ubar, step)?,
                central_jacobian(&plant.f, false, plant.m, xbar, ubar, step)?,
                central_jacobian(&plant.h, true, plant.n, xbar, ubar, step)?,
                central_jacobian(&plant.h, false, plant.m, xbar, ubar, step)?,
            )
        }
    };
    let e = fx - DVector::from_column_slice(xbar);
    let f = hx - DVector::from_column_slice(ybar);
    AffineStateSpace::new(a, b, c, d, e, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x(i: usize) -> Expr {
        Expr::X(i)
    }

    fn square_plant() -> NonlinearPlant {
        NonlinearPlant::new(1, 1, vec![Expr::Pow(Box::new(x(0)), 2)], vec![x(0)]).unwrap()
    }

    #[test]
    fn scalar_square() {
        let sys = linearize(&square_plant(), &[2.0], &[0.0], &[2.0], LinearizationMode::Analytic).unwrap();
        assert_eq!(sys.a()[(0, 0)], 4.0);
        assert_eq!(sys.b()[(0, 0)], 0.0);
        assert_eq!(sys.e()[0], 2.0);
        assert_eq!(sys.c()[(0, 0)], 1.0);
        assert_eq!(sys.f()[0], 0.0);
    }

    #[test]
    fn equilibrium_has_no_offsets() {
        let sys = linearize(&square_plant(), &[1.0], &[0.0], &[1.0], LinearizationMode::Analytic).unwrap();
        assert_eq!(sys.e()[0], 0.0);
        assert_eq!(sys.f()[0], 0.0);
    }

    #[test]
    fn affine_plant_returns_its_own_matrices() {
        // f = (0.5 x0 - x1 + 2 u0 + 3, x0), h = (x1 - u0 + 1)
        let f = vec![
            Expr::Add(vec![
                Expr::Mul(vec![Expr::Const(0.5), x(0)]),
                Expr::Neg(Box::new(x(1))),
                Expr::Mul(vec![Expr::Const(2.0), Expr::U(0)]),
                Expr::Const(3.0),
            ]),
            x(0),
        ];
        let h = vec![Expr::Add(vec![
            Expr::Sub(Box::new(x(1)), Box::new(Expr::U(0))),
            Expr::Const(1.0),
        ])];
        let plant = NonlinearPlant::new(2, 1, f, h).unwrap();
        let sys = linearize(&plant, &[0.3, -1.7], &[0.2], &[0.0], LinearizationMode::Analytic).unwrap();
        assert_eq!(sys.a(), &DMatrix::from_row_slice(2, 2, &[0.5, -1.0, 1.0, 0.0]));
        assert_eq!(sys.b(), &DMatrix::from_column_slice(2, 1, &[2.0, 0.0]));
        assert_eq!(sys.c(), &DMatrix::from_row_slice(1, 2, &[0.0, 1.0]));
        assert_eq!(sys.d(), &DMatrix::from_element(1, 1, -1.0));
    }

    #[test]
    fn step_and_evaluation_errors() {
        let plant = square_plant();
        let fd = LinearizationMode::FiniteDifference { step: 1e-17 };
        assert!(matches!(
            linearize(&plant, &[2.0], &[0.0], &[2.0], fd),
            Err(Error::StepTooSmall { .. })
        ));
        let inv = NonlinearPlant::new(1, 1, vec![Expr::Pow(Box::new(x(0)), -1)], vec![x(0)]).unwrap();
        assert!(matches!(
            linearize(&inv, &[0.0], &[0.0], &[0.0], LinearizationMode::Analytic),
            Err(Error::NonFiniteEvaluation)
        ));
        assert!(NonlinearPlant::new(1, 1, vec![x(3)], vec![x(0)]).is_err());
    }

    #[test]
    fn expression_json_shape() {
        let e: Expr = serde_json::from_str(r#"{"add":[{"mul":[{"const":2.0},{"x":0}]},{"pow":[{"u":0},3]}]}"#).unwrap();
        assert_eq!(e.eval(&[1.5], &[2.0]), 11.0);
    }

    fn random_poly_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (-2.0f64..2.0).prop_map(Expr::Const),
            (0usize..2).prop_map(Expr::X),
            Just(Expr::U(0)),
        ];
        leaf.prop_recursive(3, 12, 3, |inner| {
            prop_oneof![
                proptest::collection::vec(inner.clone(), 1..3).prop_map(Expr::Add),
                proptest::collection::vec(inner.clone(), 1..3).prop_map(Expr::Mul),
                (inner.clone(), 0i32..3).prop_map(|(e, k)| Expr::Pow(Box::new(e), k)),
                inner.prop_map(|e| Expr::Neg(Box::new(e))),
            ]
        })
    }

    proptest! {
        #[test]
        fn finite_differences_converge_quadratically(
            f0 in random_poly_expr(),
            f1 in random_poly_expr(),
            h0 in random_poly_expr(),
            point in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let plant = NonlinearPlant::new(2, 1, vec![f0, f1], vec![h0]).unwrap();
            let (xb, ub) = (&point[..2], &point[2..]);
            let yb = [0.0];
            let exact = linearize(&plant, xb, ub, &yb, LinearizationMode::Analytic).unwrap();
            let mut errors = Vec::new();
            for step in [1e-2, 1e-3] {
                let approx = linearize(&plant, xb, ub, &yb, LinearizationMode::FiniteDifference { step }).unwrap();
                let err = (approx.a() - exact.a()).amax()
                    .max((approx.b() - exact.b()).amax())
                    .max((approx.c() - exact.c()).amax())
                    .max((approx.d() - exact.d()).amax());
                errors.push(err);
            }
            let scale = 1.0 + exact.a().amax() + exact.b().amax() + exact.c().amax() + exact.d().amax();
            // Third derivatives of these small polynomials are bounded, so the
            // O(h^2) error shrinks by about 100 per decade of step.
            prop_assert!(errors[0] <= 1e-2 * scale * 50.0);
            prop_assert!(errors[1] <= errors[0] / 50.0 + 1e-9 * scale);
        }
    }
}
