//! Benchmark problems.

pub mod burgers;
pub mod hamiltonian;
pub mod linear;
pub mod logistic;

pub use burgers::{burgers_analytic, burgers_build, BurgersConfig, BurgersProblem, Grid2D};
pub use hamiltonian::{harmonic_exact, verlet_step, HamiltonianSystem};
pub use linear::{default_pair, linear_split, LinearField, MatrixExpFlow};
pub use logistic::{logistic_exact, logistic_split};
