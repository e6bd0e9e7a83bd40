use serde::{Deserialize, Serialize};

use super::StateVec;
use crate::error::Result;

/// Discrete error norms between a numerical and a reference state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    /// Grid-averaged L1 error, `(1/n) Σ |e_i|`.
    pub l1: f64,
    /// Maximum pointwise error.
    pub max: f64,
}

pub fn error_norms(u_num: &StateVec, u_ana: &StateVec) -> Result<ErrorNorms> {
    u_num.check_dim(u_ana.dim())?;
    let mut sum = 0.0;
    let mut max = 0.0_f64;
    for (a, b) in u_num.as_slice().iter().zip(u_ana.as_slice()) {
        let e = (a - b).abs();
        sum += e;
        max = max.max(e);
    }
    Ok(ErrorNorms {
        l1: sum / u_num.dim() as f64,
        max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let u = StateVec::new(vec![1.0, 2.0]).unwrap();
        let z = StateVec::zeros(2);
        assert_eq!(error_norms(&u, &u).unwrap(), ErrorNorms { l1: 0.0, max: 0.0 });
        let n = error_norms(&u, &z).unwrap();
        assert_eq!(n.max, 2.0);
        assert_eq!(n.l1, 1.5);
        assert!(error_norms(&u, &StateVec::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn symmetric_nonnegative(a in prop::collection::vec(-1e3..1e3f64, 1..20), shift in -10.0..10.0f64) {
            let u = StateVec::new(a.clone()).unwrap();
            let v = StateVec::new(a.iter().enumerate().map(|(i, x)| x + shift * i as f64).collect()).unwrap();
            let uv = error_norms(&u, &v).unwrap();
            let vu = error_norms(&v, &u).unwrap();
            prop_assert_eq!(uv, vu);
            prop_assert!(uv.l1 >= 0.0 && uv.max >= uv.l1);
            prop_assert_eq!(error_norms(&u, &u).unwrap(), ErrorNorms { l1: 0.0, max: 0.0 });
        }
    }
}
