use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::error_norms;

use super::config::{instantiate, ExperimentConfig, Format, LadderEntry, NormKind};
use super::rate::{fit_order, rate_between, OrderFit};
use super::scheme::Scheme;

/// One ladder row of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub group: usize,
    pub dx: Option<f64>,
    pub dt: f64,
    pub err_l1: Option<f64>,
    pub err_max: Option<f64>,
    pub rho_l1: Option<f64>,
    pub rho_max: Option<f64>,
    pub wall_ms: f64,
    /// Failure message when the row could not be computed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub scheme: String,
    pub problem: String,
    pub version: String,
    pub t_end: f64,
    pub seed: u64,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
    /// Least-squares order of each group in the max norm, when defined.
    pub fitted_order: Vec<Option<OrderFit>>,
}

impl ConvergenceReport {
    /// True when some row failed.
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// CSV with columns `dx,dt,err_l1,err_max,rho_l1,rho_max,wall_ms`. Undefined
    /// values are empty cells.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dx,dt,err_l1,err_max,rho_l1,rho_max,wall_ms\n");
        let cell = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.3}",
                cell(r.dx),
                format_args!("{:e}", r.dt),
                cell(r.err_l1),
                cell(r.err_max),
                cell(r.rho_l1),
                cell(r.rho_max),
                r.wall_ms
            );
        }
        out
    }
}

/// Number of worker threads: `MPE_THREADS` if set to a positive integer,
/// otherwise the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("MPE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

struct RowResult {
    l1: f64,
    max: f64,
}

fn run_row(cfg: &ExperimentConfig, scheme: &Scheme, row: &LadderEntry) -> Result<RowResult> {
    let t_end = cfg.end_time();
    let inst = instantiate(&cfg.problem, scheme, row, t_end, cfg.seed)?;
    let u = scheme.integrate(&inst.system, 0.0, t_end, row.dt, &inst.initial)?;
    let norms = error_norms(&u, &inst.exact)?;
    Ok(RowResult {
        l1: norms.l1,
        max: norms.max,
    })
}

/// Runs every ladder row (concurrently, capped by [`thread_count`]) and
/// assembles the report in ladder order. A failing row is recorded and the
/// remaining rows still run.
pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport> {
    run_convergence_with_threads(cfg, thread_count())
}

type Slot = Mutex<Option<(Result<RowResult>, f64)>>;

pub fn run_convergence_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<ConvergenceReport> {
    cfg.validate()?;
    let scheme = Scheme::from_spec(&cfg.scheme)?;
    let rows: Vec<(usize, LadderEntry)> = cfg
        .ladder
        .groups()
        .into_iter()
        .enumerate()
        .flat_map(|(g, rows)| rows.into_iter().map(move |r| (g, r)))
        .collect();
    let slots: Vec<Slot> = rows.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = threads.clamp(1, rows.len().max(1));
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, AtomicOrdering::SeqCst);
                if i >= rows.len() {
                    break;
                }
                let start = Instant::now();
                let res = run_row(cfg, &scheme, &rows[i].1);
                let ms = start.elapsed().as_secs_f64() * 1e3;
                *slots[i].lock().expect("row slot") = Some((res, ms));
            });
        }
    });
    let want_l1 = cfg.norms.contains(&NormKind::L1);
    let want_max = cfg.norms.contains(&NormKind::Max);
    let mut out: Vec<ReportRow> = Vec::with_capacity(rows.len());
    for (slot, (group, entry)) in slots.into_iter().zip(&rows) {
        let (res, ms) = slot.into_inner().expect("row slot").expect("row computed");
        let (err_l1, err_max, error) = match res {
            Ok(r) => (want_l1.then_some(r.l1), want_max.then_some(r.max), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
        out.push(ReportRow {
            group: *group,
            dx: entry.dx,
            dt: entry.dt,
            err_l1,
            err_max,
            rho_l1: None,
            rho_max: None,
            wall_ms: ms,
            error,
        });
    }
    if cfg.rates {
        for i in 1..out.len() {
            if out[i].group != out[i - 1].group {
                continue;
            }
            let (prev, cur) = (&out[i - 1], &out[i]);
            let (hc, hf) = if cur.dt != prev.dt {
                (prev.dt, cur.dt)
            } else {
                (prev.dx.unwrap_or(f64::NAN), cur.dx.unwrap_or(f64::NAN))
            };
            let rate = |a: Option<f64>, b: Option<f64>| match (a, b) {
                (Some(a), Some(b)) => rate_between(a, b, hc, hf).ok(),
                _ => None,
            };
            let (r1, rm) = (rate(prev.err_l1, cur.err_l1), rate(prev.err_max, cur.err_max));
            out[i].rho_l1 = r1;
            out[i].rho_max = rm;
        }
    }
    let groups = out.iter().map(|r| r.group).max().map_or(0, |g| g + 1);
    let fitted_order = (0..groups)
        .map(|g| {
            let rs: Vec<&ReportRow> = out.iter().filter(|r| r.group == g).collect();
            let varying_dt = rs.windows(2).all(|w| w[1].dt < w[0].dt);
            let h: Vec<f64> = rs
                .iter()
                .map(|r| if varying_dt { r.dt } else { r.dx.unwrap_or(f64::NAN) })
                .collect();
            let e: Option<Vec<f64>> = rs.iter().map(|r| r.err_max.or(r.err_l1)).collect();
            e.and_then(|e| fit_order(&h, &e, None).ok())
        })
        .collect();
    Ok(ConvergenceReport {
        meta: ReportMeta {
            scheme: cfg.scheme.id.clone(),
            problem: cfg.problem.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            t_end: cfg.end_time(),
            seed: cfg.seed,
            config: cfg.clone(),
        },
        rows: out,
        fitted_order,
    })
}

/// Writes `report` to `path` in the given format.
pub fn emit(report: &ConvergenceReport, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json()?,
    };
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{Ladder, ProblemSpec};
    use crate::harness::scheme::SchemeSpec;

    fn logistic(scheme: &str, halvings: usize) -> ExperimentConfig {
        ExperimentConfig::new(
            ProblemSpec::Logistic { u0: 0.1 },
            SchemeSpec::new(scheme),
            Ladder::Halvings {
                dt0: 0.25,
                halvings,
                dx: None,
            },
        )
    }

    #[test]
    fn t4_logistic_study() {
        let report = run_convergence(&logistic("t4", 4)).unwrap();
        assert_eq!(report.rows.len(), 5);
        assert!(report.rows[0].rho_max.is_none());
        let fit = report.fitted_order[0].unwrap();
        assert!((fit.order - 4.0).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn zero_problem_has_undefined_rates() {
        let cfg = ExperimentConfig::new(
            ProblemSpec::Zero { dim: 3 },
            SchemeSpec::new("strang-aba"),
            Ladder::Halvings {
                dt0: 0.5,
                halvings: 2,
                dx: None,
            },
        );
        let report = run_convergence(&cfg).unwrap();
        for r in &report.rows {
            assert_eq!((r.err_l1, r.err_max), (Some(0.0), Some(0.0)));
            assert!(r.rho_l1.is_none() && r.rho_max.is_none());
        }
        let csv = report.to_csv();
        assert!(csv.lines().nth(2).unwrap().contains(",0e0,0e0,,,"));
    }

    #[test]
    fn csv_shapes() {
        let mut report = run_convergence(&logistic("ab", 1)).unwrap();
        report.rows.truncate(1);
        let csv = report.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "dx,dt,err_l1,err_max,rho_l1,rho_max,wall_ms");
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[1].split(',').nth(4), Some(""));
        report.rows.clear();
        assert_eq!(report.to_csv(), "dx,dt,err_l1,err_max,rho_l1,rho_max,wall_ms\n");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let report = run_convergence(&logistic("t6", 3)).unwrap();
        let back = ConvergenceReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn failing_rows_are_recorded() {
        let cfg = ExperimentConfig::new(
            ProblemSpec::Logistic { u0: -2.0 },
            SchemeSpec::new("ab"),
            Ladder::Halvings {
                dt0: 0.5,
                halvings: 1,
                dx: None,
            },
        );
        let report = run_convergence(&cfg).unwrap();
        assert!(report.has_failures());
        assert_eq!(report.rows.len(), 2);
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let cfg = logistic("dunn", 3);
        let a = run_convergence_with_threads(&cfg, 1).unwrap();
        let b = run_convergence_with_threads(&cfg, 4).unwrap();
        let strip = |r: &ConvergenceReport| {
            r.rows
                .iter()
                .map(|x| (x.err_l1, x.err_max, x.rho_l1, x.rho_max))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
    }
}
