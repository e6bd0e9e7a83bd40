//! Logistic growth `u' = u − u²` split into linear growth and quadratic decay,
//! both with closed-form flows.

use std::sync::Arc;

use crate::error::Error;
use crate::flow::{ExactFlow, FnField, SplitSystem};

/// `A(u) = u` with flow `e^h u`, `B(u) = −u²` with flow `u / (1 + h u)`.
pub fn logistic_split() -> SplitSystem {
    let a = Arc::new(FnField::new(1, |_, c, o| o[0] = c[0]));
    let b = Arc::new(FnField::new(1, |_, c, o| o[0] = -c[0] * c[0]));
    let a_flow = Arc::new(ExactFlow::new(|_, h, c| Ok(vec![c[0] * h.exp()])));
    let b_flow = Arc::new(ExactFlow::new(|_, h, c| {
        let d = 1.0 + h * c[0];
        if d <= 0.0 {
            return Err(Error::NonFinite("quadratic decay flow blows up".into()));
        }
        Ok(vec![c[0] / d])
    }));
    let full = Arc::new(FnField::new(1, |_, c, o| o[0] = c[0] - c[0] * c[0]));
    SplitSystem::new(a, b, a_flow, b_flow)
        .and_then(|s| s.with_full_field(full))
        .expect("scalar system is well formed")
}

/// Closed-form logistic solution `u0 e^t / (1 + u0 (e^t − 1))`.
pub fn logistic_exact(u0: f64, t: f64) -> f64 {
    let e = t.exp();
    u0 * e / (1.0 + u0 * (e - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{apply_flow, reference_flow, StateVec};

    #[test]
    fn equilibria() {
        let sys = logistic_split();
        let zero = StateVec::scalar(0.0);
        assert_eq!(apply_flow(sys.a_flow.as_ref(), 0.0, 0.7, &zero).unwrap(), zero);
        assert_eq!(apply_flow(sys.b_flow.as_ref(), 0.0, 0.7, &zero).unwrap(), zero);
        let one = StateVec::scalar(1.0);
        let r = reference_flow(&sys, 0.0, 3.0, &one, 1e-12).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-14);
        assert_eq!(logistic_exact(1.0, 5.0), 1.0);
    }

    #[test]
    fn closed_form_value() {
        let e = std::f64::consts::E;
        let expect = 0.1 * e / (1.0 + 0.1 * (e - 1.0));
        assert!((logistic_exact(0.1, 1.0) - expect).abs() < 1e-16);
        assert!((expect - 0.231_969_316_684).abs() < 1e-11);
    }

    #[test]
    fn sub_flows_compose() {
        let sys = logistic_split();
        let c = StateVec::scalar(0.4);
        for flow in [sys.a_flow.as_ref(), sys.b_flow.as_ref()] {
            let two = flow.advance(0.0, 0.3, &flow.advance(0.0, 0.2, &c).unwrap()).unwrap();
            let one = flow.advance(0.0, 0.5, &c).unwrap();
            assert!((two[0] - one[0]).abs() <= 1e-12 * one[0].abs());
        }
    }
}
