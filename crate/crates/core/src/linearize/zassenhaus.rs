//! Sequential splitting with a corrected initial state.
//!
//! With the bracket convention of [`commutator`](super::commutator), a single
//! bracket of linear fields is minus the matrix commutator and a doubly nested
//! bracket equals the nested matrix commutator. Matching the
//! Baker-Campbell-Hausdorff expansion of `e^{hB} e^{hA}` against `e^{h(A+B)}`
//! then gives the correction exponent
//!
//! ```text
//! W = (h²/2) [B,A] + h³ ( (1/6)[B,[B,A]] − (1/3)[A,[A,B]] ) + O(h⁴)
//! ```
//!
//! in terms of nonlinear brackets. The corrections are flows of these
//! bracket fields applied to `c` before the `A` then `B` product.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::flow::{apply_flow, dopri5, StateVec, SplitSystem, VectorField};

use super::probe::{commutator_raw, CommutatorField, JacobianProbe};

/// Order and integration tolerance of the initial-state correction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZassenhausCorrection {
    order: u8,
    pub tol: f64,
}

impl ZassenhausCorrection {
    /// `order` must be 2 or 3.
    pub fn new(order: u8, tol: f64) -> Result<Self> {
        if !(2..=3).contains(&order) {
            return Err(Error::InvalidArgument(format!(
                "Zassenhaus correction order must be 2 or 3 (got {order})"
            )));
        }
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("correction tolerance must be positive".into()));
        }
        Ok(Self { order, tol })
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    /// Number of correction flows applied before the product.
    pub fn factors(&self) -> usize {
        self.order as usize - 1
    }
}

/// Field with every component field evaluated at a fixed time.
struct Frozen<F> {
    inner: F,
    t: f64,
}

impl<F: VectorField> VectorField for Frozen<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval_into(&self, _t: f64, c: &[f64], out: &mut [f64]) {
        self.inner.eval_into(self.t, c, out)
    }
}

/// `(1/6)[B,[B,A]] − (1/3)[A,[A,B]]`.
struct ThirdOrderField {
    a: Arc<dyn VectorField>,
    b: Arc<dyn VectorField>,
    probe: JacobianProbe,
}

impl VectorField for ThirdOrderField {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn eval_into(&self, t: f64, c: &[f64], out: &mut [f64]) {
        let ba = CommutatorField::new(self.b.clone(), self.a.clone(), self.probe);
        let ab = CommutatorField::new(self.a.clone(), self.b.clone(), self.probe);
        let bba = commutator_raw(self.b.as_ref(), &ba, t, c, &self.probe);
        let aab = commutator_raw(self.a.as_ref(), &ab, t, c, &self.probe);
        for ((o, x), y) in out.iter_mut().zip(&bba).zip(&aab) {
            *o = x / 6.0 - y / 3.0;
        }
    }
}

/// One step of sequential `A` then `B` splitting from a corrected initial
/// state. Correction flows are integrated by the reference integrator with
/// the fields frozen at `t`.
pub fn zassenhaus_ab_step(
    sys: &SplitSystem,
    t: f64,
    h: f64,
    c: &StateVec,
    corr: &ZassenhausCorrection,
    probe: &JacobianProbe,
) -> Result<StateVec> {
    c.check_dim(sys.dim())?;
    let mut u = c.clone();
    let second = Frozen {
        inner: CommutatorField::new(sys.b_field.clone(), sys.a_field.clone(), *probe),
        t,
    };
    if h != 0.0 {
        u = dopri5(&second, t, 0.5 * h * h, &u, corr.tol)
            .map_err(|e| e.in_stage("zassenhaus", 0))?;
        if corr.order == 3 {
            let third = Frozen {
                inner: ThirdOrderField {
                    a: sys.a_field.clone(),
                    b: sys.b_field.clone(),
                    probe: *probe,
                },
                t,
            };
            u = dopri5(&third, t, h * h * h, &u, corr.tol)
                .map_err(|e| e.in_stage("zassenhaus", 1))?;
        }
    }
    let u = apply_flow(sys.a_flow.as_ref(), t, h, &u).map_err(|e| e.in_stage("zassenhaus", 2))?;
    apply_flow(sys.b_flow.as_ref(), t, h, &u).map_err(|e| e.in_stage("zassenhaus", 3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::problems::linear::{default_pair, linear_split};
    use crate::splitting::ab_step;

    #[test]
    fn commuting_pair_is_plain_ab() {
        let a = DenseMatrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, -0.3]]).unwrap();
        let sys = linear_split(a, b).unwrap();
        let c = StateVec::new(vec![1.0, -2.0]).unwrap();
        for p in [2, 3] {
            let corr = ZassenhausCorrection::new(p, 1e-12).unwrap();
            let z = zassenhaus_ab_step(&sys, 0.0, 0.1, &c, &corr, &JacobianProbe::default()).unwrap();
            let plain = ab_step(&sys, 0.0, 0.1, &c).unwrap();
            let diff = z.sub(&plain).norm_inf();
            assert!(diff < 1e-10, "{diff:e}");
        }
    }

    #[test]
    fn local_error_improves() {
        let (a, b) = default_pair();
        let sys = linear_split(a.clone(), b.clone()).unwrap();
        let c = StateVec::new(vec![1.0, 0.5]).unwrap();
        let h = 0.05;
        let exact = a.add(&b).scaled(h).expm().matvec(c.as_slice());
        let err = |u: &StateVec| {
            u.as_slice()
                .iter()
                .zip(&exact)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        };
        let plain = err(&ab_step(&sys, 0.0, h, &c).unwrap());
        let probe = JacobianProbe::default();
        let z2 = err(&zassenhaus_ab_step(
            &sys,
            0.0,
            h,
            &c,
            &ZassenhausCorrection::new(2, 1e-13).unwrap(),
            &probe,
        )
        .unwrap());
        let z3 = err(&zassenhaus_ab_step(
            &sys,
            0.0,
            h,
            &c,
            &ZassenhausCorrection::new(3, 1e-13).unwrap(),
            &probe,
        )
        .unwrap());
        assert!(z2 < 0.2 * plain, "{z2} vs {plain}");
        assert!(z3 < 0.2 * z2, "{z3} vs {z2}");
    }

    #[test]
    fn rejects_unsupported_order() {
        assert!(ZassenhausCorrection::new(1, 1e-10).is_err());
        assert!(ZassenhausCorrection::new(4, 1e-10).is_err());
        assert_eq!(ZassenhausCorrection::new(3, 1e-10).unwrap().factors(), 2);
    }
}
