//! Convergence studies: scheme registry, JSON experiment configs, the
//! concurrent ladder runner and CSV/JSON reports.

mod config;
mod rate;
mod report;
mod scheme;
pub mod table1;

pub use config::{
    instantiate, ExperimentConfig, Format, ImplicitOperator, Instance, Ladder, LadderEntry,
    NormKind, OutputSpec, ProblemSpec,
};
pub use rate::{convergence_rate, fit_order, rate_between, OrderFit, FLOOR_RATIO};
pub use report::{
    emit, run_convergence, run_convergence_with_threads, thread_count, ConvergenceReport,
    ReportMeta, ReportRow,
};
pub use scheme::{Scheme, SchemeSpec, SCHEME_IDS};
