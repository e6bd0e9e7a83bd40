//! Exponential operator splitting and multi-product extrapolation for
//! nonlinear evolution equations `u' = A(u) + B(u)`.
//!
//! The crate is organized bottom-up:
//!
//! * [`flow`]: states, vector fields, sub-flows and the adaptive reference
//!   integrator.
//! * [`splitting`]: sequential, Strang, symmetrized-sum, Dunn and
//!   Burstein-Mirin product schemes plus the two iterative splitting schemes.
//! * [`mpe`]: multi-product expansion weights and the extrapolated
//!   integrators of order 4 to 10 built from a symmetric Strang kernel.
//! * [`linearize`]: finite-difference Jacobian probes, nonlinear commutators,
//!   leading-error estimators, Zassenhaus-corrected sequential splitting and the
//!   fixed-point / Newton solvers.
//! * [`problems`]: benchmark problems (2D Burgers, harmonic oscillator,
//!   logistic growth, linear pairs).
//! * [`harness`]: scheme registry, convergence studies and report emission.
//!
//! ```
//! use mpesplit::flow::StateVec;
//! use mpesplit::mpe::{KSequence, MpeScheme};
//! use mpesplit::problems::logistic;
//!
//! let sys = logistic::logistic_split();
//! let t4 = MpeScheme::natural(2).unwrap();
//! let mut u = StateVec::scalar(0.1);
//! for n in 0..10 {
//!     u = t4.step(&sys, 0.1 * n as f64, 0.1, &u).unwrap();
//! }
//! let exact = logistic::logistic_exact(0.1, 1.0);
//! assert!((u[0] - exact).abs() < 1e-6);
//! # let _ = KSequence::natural(2);
//! ```

pub mod error;
pub mod flow;
pub mod harness;
pub mod linalg;
pub mod linearize;
pub mod mpe;
pub mod problems;
pub mod splitting;

pub use error::{Error, Result};

// Compile and run the guide's code listings as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/flows.md")]
    mod flows {}
    #[doc = include_str!("../../../book/src/splitting.md")]
    mod splitting {}
    #[doc = include_str!("../../../book/src/mpe.md")]
    mod mpe {}
    #[doc = include_str!("../../../book/src/commutators.md")]
    mod commutators {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
}
