//! Linear fields `c ↦ M c` with matrix-exponential sub-flows.

use std::sync::Arc;

use crate::error::Result;
use crate::flow::{FlowKind, SplitSystem, StateVec, SubFlow, VectorField};
use crate::linalg::DenseMatrix;

#[derive(Debug, Clone)]
pub struct LinearField(pub DenseMatrix);

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.0.rows()
    }
    fn eval_into(&self, _t: f64, c: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.0.matvec(c));
    }
}

/// Exact flow `c ↦ e^{h M} c`.
#[derive(Debug, Clone)]
pub struct MatrixExpFlow(pub DenseMatrix);

impl SubFlow for MatrixExpFlow {
    fn kind(&self) -> FlowKind {
        FlowKind::ExactClosedForm
    }
    fn advance(&self, _t0: f64, h: f64, c: &StateVec) -> Result<StateVec> {
        c.check_dim(self.0.rows())?;
        StateVec::new(self.0.scaled(h).expm().matvec(c.as_slice()))
    }
}

/// Split system for `u' = (A + B) u` with exact sub-flows.
pub fn linear_split(a: DenseMatrix, b: DenseMatrix) -> Result<SplitSystem> {
    let full = LinearField(a.add(&b));
    SplitSystem::new(
        Arc::new(LinearField(a.clone())),
        Arc::new(LinearField(b.clone())),
        Arc::new(MatrixExpFlow(a)),
        Arc::new(MatrixExpFlow(b)),
    )?
    .with_full_field(Arc::new(full))
}

/// The fixed non-commuting 2×2 pair used by the order studies.
pub fn default_pair() -> (DenseMatrix, DenseMatrix) {
    let a = DenseMatrix::from_rows(&[vec![-1.0, 0.5], vec![0.2, -0.4]]).expect("2x2");
    let b = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, -0.1]]).expect("2x2");
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::splitting::{ab_step, strang_step, symmetric_sum_step, Ordering};

    #[test]
    fn pair_does_not_commute() {
        let (a, b) = default_pair();
        assert!(a.commutator(&b).max_abs() > 0.1);
    }

    #[test]
    fn commuting_diagonal_pair_is_exact() {
        let a = DenseMatrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, 0.3]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![0.5, 0.0], vec![0.0, -2.0]]).unwrap();
        let sys = linear_split(a.clone(), b.clone()).unwrap();
        let c = StateVec::new(vec![1.0, -0.5]).unwrap();
        let h = 0.7;
        let exact = a.add(&b).scaled(h).expm().matvec(c.as_slice());
        for out in [
            ab_step(&sys, 0.0, h, &c).unwrap(),
            strang_step(&sys, Ordering::AFirst, 0.0, h, &c).unwrap(),
            symmetric_sum_step(&sys, 0.0, h, &c).unwrap(),
        ] {
            for (x, e) in out.as_slice().iter().zip(&exact) {
                assert!((x - e).abs() <= 1e-12 * e.abs().max(1.0));
            }
        }
    }

    #[test]
    fn flow_composition() {
        let (a, _) = default_pair();
        let f = MatrixExpFlow(a);
        let c = StateVec::new(vec![0.3, 2.0]).unwrap();
        let two = f.advance(0.0, 0.4, &f.advance(0.0, 0.35, &c).unwrap()).unwrap();
        let one = f.advance(0.0, 0.75, &c).unwrap();
        for (x, y) in two.as_slice().iter().zip(one.as_slice()) {
            assert!((x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
}
