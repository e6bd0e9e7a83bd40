//! Classical single-step splitting schemes.
//!
//! Product schemes ([`ProductScheme`]) cover sequential A-B splitting, Strang
//! splitting in both orderings, the symmetrized sum of the two sequential
//! orderings, and the third-order multi-product combinations of Dunn and of
//! Burstein-Mirin. Weights of the third-order schemes are negative, so the
//! stability of a combination does not follow from the stability of its
//! products.
//!
//! The iterative schemes in [`iterative`] linearize the coupling instead of
//! composing exact sub-flows.

pub mod iterative;
mod product;

pub use iterative::{
    iterative_split_alternating, iterative_split_one, InitialIterate, IterativeConfig,
};
pub use product::{
    ab_step, burstein_mirin_step, dunn_step, sequential_step, strang_step, symmetric_sum_step,
    Factor, Operator, Ordering, ProductScheme, ProductTerm,
};
