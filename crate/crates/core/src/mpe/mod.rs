//! Multi-product expansion: extrapolation of a symmetric second-order kernel.
//!
//! A left-right symmetric product `T₂` (Strang in either ordering) is
//! time-symmetric, `T₂(−h) T₂(h) = 1`, so its error expansion contains only odd
//! powers of `h`. The `k`-fold power at step `h/k` scales the leading error
//! terms by `k^{-2}, k^{-4}, …`, and the combination
//!
//! ```text
//! Σ_i c_i T₂^{k_i}(h / k_i)
//! ```
//!
//! with weights solving `Σ_i c_i k_i^{−2m} = δ_{m0}` (`m = 0..n−1`) is of order
//! `2n`. The weights alternate in sign, so intermediate combinations are not
//! guaranteed to stay in physically admissible sets (for example, they can
//! produce negative concentrations); no clipping is applied.

mod weights;

pub use weights::{
    mpe_weights, mpe_weights_f64, KSequence, MpeWeights, WeightMode, EXACT_K_LIMIT,
};

use crate::error::{Error, Result};
use crate::flow::{SplitSystem, StateVec};
use crate::splitting::{strang_step, Ordering};

/// Applies the Strang kernel `k` times with step `h/k`, advancing time after
/// each substep.
pub fn t2_power(
    kernel: Ordering,
    sys: &SplitSystem,
    k: u32,
    t: f64,
    h: f64,
    c: &StateVec,
) -> Result<StateVec> {
    if k == 0 {
        return Err(Error::InvalidArgument("kernel power k must be >= 1".into()));
    }
    let dt = h / k as f64;
    let mut u = c.clone();
    for j in 0..k {
        u = strang_step(sys, kernel, t + j as f64 * dt, dt, &u)
            .map_err(|e| e.in_stage(format!("T2^{k}"), j as usize))?;
    }
    Ok(u)
}

/// Extrapolated integrator of order `2n` for a `k` sequence of length `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct MpeScheme {
    weights: MpeWeights,
    kernel: Ordering,
}

impl MpeScheme {
    pub fn new(weights: MpeWeights, kernel: Ordering) -> Self {
        Self { weights, kernel }
    }

    /// Scheme for an arbitrary `k` sequence with the A-B-A kernel.
    pub fn from_k(k: &KSequence) -> Result<Self> {
        Ok(Self::new(mpe_weights(k, WeightMode::ClosedForm)?, Ordering::AFirst))
    }

    /// The order-`2n` scheme on the natural sequence `{1..n}`.
    pub fn natural(n: u32) -> Result<Self> {
        Self::from_k(&KSequence::natural(n)?)
    }

    pub fn with_kernel(mut self, kernel: Ordering) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn weights(&self) -> &MpeWeights {
        &self.weights
    }

    pub fn kernel(&self) -> Ordering {
        self.kernel
    }

    pub fn order(&self) -> usize {
        self.weights.k().order()
    }

    /// Kernel applications per step.
    pub fn kernel_evaluations(&self) -> usize {
        self.weights.k().kernel_evaluations()
    }

    pub fn step(&self, sys: &SplitSystem, t: f64, h: f64, c: &StateVec) -> Result<StateVec> {
        mpe_step(self, sys, t, h, c)
    }
}

/// `Σ_i c_i T₂^{k_i}(h / k_i) c`, combined in `k` order.
pub fn mpe_step(
    scheme: &MpeScheme,
    sys: &SplitSystem,
    t: f64,
    h: f64,
    c: &StateVec,
) -> Result<StateVec> {
    c.check_dim(sys.dim())?;
    let ks = scheme.weights.k().as_slice();
    if ks.len() == 1 && ks[0] == 1 {
        return t2_power(scheme.kernel, sys, 1, t, h, c);
    }
    let powers = ks
        .iter()
        .map(|&k| t2_power(scheme.kernel, sys, k, t, h, c))
        .collect::<Result<Vec<_>>>()?;
    let terms: Vec<(f64, &StateVec)> = scheme
        .weights
        .values()
        .iter()
        .copied()
        .zip(powers.iter())
        .collect();
    StateVec::combine(&terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{ExactFlow, SubFlow, ZeroField};
    use crate::problems::logistic::{logistic_exact, logistic_split};
    use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
    use std::sync::Arc;

    #[test]
    fn t4_matches_explicit_combination() {
        let sys = logistic_split();
        let c = StateVec::scalar(0.3);
        let h = 0.25;
        let t1 = t2_power(Ordering::AFirst, &sys, 1, 0.0, h, &c).unwrap();
        let t2 = t2_power(Ordering::AFirst, &sys, 2, 0.0, h, &c).unwrap();
        let expect = -t1[0] / 3.0 + 4.0 * t2[0] / 3.0;
        let got = MpeScheme::natural(2).unwrap().step(&sys, 0.0, h, &c).unwrap();
        assert!((got[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn k_one_is_single_kernel_step() {
        let sys = logistic_split();
        let c = StateVec::scalar(0.6);
        assert_eq!(
            t2_power(Ordering::AFirst, &sys, 1, 0.0, 0.1, &c).unwrap(),
            strang_step(&sys, Ordering::AFirst, 0.0, 0.1, &c).unwrap()
        );
    }

    #[test]
    fn zero_field_is_preserved() {
        let sys = SplitSystem::new(
            Arc::new(ZeroField(2)),
            Arc::new(ZeroField(2)),
            Arc::new(ExactFlow::identity()),
            Arc::new(ExactFlow::identity()),
        )
        .unwrap();
        let c = StateVec::new(vec![0.7, -1.1]).unwrap();
        for n in 1..=5 {
            let out = MpeScheme::natural(n).unwrap().step(&sys, 0.0, 0.3, &c).unwrap();
            for (a, b) in out.as_slice().iter().zip(c.as_slice()) {
                assert!((a - b).abs() < 1e-14);
            }
            for k in 1..5 {
                assert_eq!(t2_power(Ordering::BFirst, &sys, k, 0.0, 0.3, &c).unwrap(), c);
            }
        }
    }

    #[test]
    fn substep_error_ratio_is_four() {
        let sys = logistic_split();
        let c = StateVec::scalar(0.1);
        let h = 0.02;
        let exact = logistic_exact(0.1, h);
        let e1 = (t2_power(Ordering::AFirst, &sys, 1, 0.0, h, &c).unwrap()[0] - exact).abs();
        let e2 = (t2_power(Ordering::AFirst, &sys, 2, 0.0, h, &c).unwrap()[0] - exact).abs();
        assert!((e1 / e2 - 4.0).abs() < 0.05, "ratio {}", e1 / e2);
    }

    struct Counting {
        inner: ExactFlow,
        calls: Arc<AtomicUsize>,
    }

    impl SubFlow for Counting {
        fn kind(&self) -> crate::flow::FlowKind {
            self.inner.kind()
        }
        fn advance(&self, t0: f64, h: f64, c: &StateVec) -> Result<StateVec> {
            self.calls.fetch_add(1, AtomicOrdering::SeqCst);
            self.inner.advance(t0, h, c)
        }
    }

    #[test]
    fn natural_sequence_uses_triangular_number_of_kernels() {
        let base = logistic_split();
        let calls = Arc::new(AtomicUsize::new(0));
        let sys = SplitSystem {
            b_flow: Arc::new(Counting {
                inner: ExactFlow::new(|_, h, c| Ok(vec![c[0] / (1.0 + h * c[0])])),
                calls: calls.clone(),
            }),
            ..base
        };
        for n in 1..=5u32 {
            calls.store(0, AtomicOrdering::SeqCst);
            let scheme = MpeScheme::natural(n).unwrap();
            scheme.step(&sys, 0.0, 0.1, &StateVec::scalar(0.2)).unwrap();
            // A-B-A kernel applies B exactly once per kernel evaluation
            assert_eq!(calls.load(AtomicOrdering::SeqCst), (n * (n + 1) / 2) as usize);
            assert_eq!(scheme.kernel_evaluations(), (n * (n + 1) / 2) as usize);
        }
    }

    #[test]
    fn kernel_failure_reports_substep() {
        let base = logistic_split();
        let sys = SplitSystem {
            b_flow: Arc::new(ExactFlow::new(|_, _, _| Err(Error::NonFinite("x".into())))),
            ..base
        };
        let err = t2_power(Ordering::AFirst, &sys, 3, 0.0, 0.1, &StateVec::scalar(0.2)).unwrap_err();
        assert!(matches!(err, Error::Stage { stage: 0, .. }));
    }
}
