//! Linearization toolkit for nonlinear vector fields.
//!
//! Derivatives are never formed symbolically. Every `F'(c) v` is a finite
//! difference along `v` ([`jvp`]), and the nonlinear commutator
//! `[F1, F2](c) = F2'(c) F1(c) − F1'(c) F2(c)` is built from two of them.
//! Nested commutators nest the differences, which amplifies roundoff by one
//! more factor of `1/ε`; [`strang_leading_error`] checks for that.
//!
//! The printed leading-error expressions are kept as stated: the sequential
//! estimate is `τ [F1, F2]` and the Strang estimate carries `τ²/24`, even
//! though a Taylor expansion of one step gives `τ²/2` and `τ³/24`. Use them
//! for direction and relative size, not for absolute local errors.

mod probe;
mod solvers;
mod zassenhaus;

pub use probe::{
    ab_leading_error, commutator, jvp, strang_leading_error, CommutatorField, JacobianProbe,
    ProbeMode,
};
pub use solvers::{
    fixed_point_solve, hamiltonian_fixed_point_step, jacobian, newton_solve, Hamiltonian,
    HamiltonianStep, SolveOutcome, SolverConfig,
};
pub use zassenhaus::{zassenhaus_ab_step, ZassenhausCorrection};
