//! The 3×3 Burgers study: `Δx ∈ {1/10, 1/20, 1/40}` inside each group,
//! one group per `Δt ∈ {1/10, 1/20, 1/40}`, iterative splitting with two
//! iterations per step.

use std::fmt::Write as _;

use super::config::{ExperimentConfig, ImplicitOperator, Ladder, LadderEntry, ProblemSpec};
use super::report::ConvergenceReport;
use super::scheme::SchemeSpec;

/// Published rows `(Δx, Δt, err_L1, err_max, ρ_L1, ρ_max)` for `μ = 0.05`.
pub const PUBLISHED: [(f64, f64, f64, f64, Option<f64>, Option<f64>); 9] = [
    (0.1, 0.1, 0.0549, 0.1867, None, None),
    (0.05, 0.1, 0.0468, 0.1599, Some(0.2303), Some(0.2234)),
    (0.025, 0.1, 0.0418, 0.1431, Some(0.1630), Some(0.1608)),
    (0.1, 0.05, 0.0447, 0.1626, None, None),
    (0.05, 0.05, 0.0331, 0.1215, Some(0.4353), Some(0.4210)),
    (0.025, 0.05, 0.0262, 0.0943, Some(0.3352), Some(0.3645)),
    (0.1, 0.025, 0.0405, 0.1551, None, None),
    (0.05, 0.025, 0.0265, 0.1040, Some(0.6108), Some(0.5768)),
    (0.025, 0.025, 0.0181, 0.0695, Some(0.5517), Some(0.5804)),
];

pub const DT: [f64; 3] = [0.1, 0.05, 0.025];
pub const DX: [f64; 3] = [0.1, 0.05, 0.025];

pub fn table1_config(mu: f64, implicit: ImplicitOperator) -> ExperimentConfig {
    let groups = DT
        .iter()
        .map(|&dt| DX.iter().map(|&dx| LadderEntry { dx: Some(dx), dt }).collect())
        .collect();
    let mut scheme = SchemeSpec::new("iter-one");
    scheme.iterations = Some(2);
    ExperimentConfig::new(
        ProblemSpec::Burgers2d {
            mu,
            nx: None,
            implicit,
        },
        scheme,
        Ladder::Groups { groups },
    )
}

fn frac(x: f64) -> String {
    let n = (1.0 / x).round();
    if (n * x - 1.0).abs() < 1e-9 {
        format!("1/{n}")
    } else {
        format!("{x}")
    }
}

/// Renders a report in the published table layout.
pub fn format_table1(report: &ConvergenceReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "methodology reproduction, not bit reproduction");
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>10} {:>10} {:>8} {:>8}",
        "dx", "dt", "err_L1", "err_max", "rho_L1", "rho_max"
    );
    let num = |v: Option<f64>, w: usize| v.map_or_else(|| format!("{:>w$}", ""), |x| format!("{x:>w$.4}"));
    let mut group = None;
    for r in &report.rows {
        if group.is_some() && group != Some(r.group) {
            let _ = writeln!(out, "{}", "-".repeat(53));
        }
        group = Some(r.group);
        let _ = write!(
            out,
            "{:>6} {:>6} {} {} {} {}",
            r.dx.map(frac).unwrap_or_default(),
            frac(r.dt),
            num(r.err_l1, 10),
            num(r.err_max, 10),
            num(r.rho_l1, 8),
            num(r.rho_max, 8)
        );
        if let Some(e) = &r.error {
            let _ = write!(out, "  error: {e}");
        }
        out.push('\n');
    }
    out
}
