use std::path::Path;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{ExactFlow, SplitSystem, StateVec, ZeroField};
use crate::linalg::DenseMatrix;
use crate::problems::{
    default_pair, harmonic_exact, linear_split, logistic_exact, logistic_split, BurgersConfig,
    BurgersProblem, HamiltonianSystem,
};

use super::scheme::{Scheme, SchemeSpec};

fn default_u0() -> f64 {
    0.1
}
fn default_one() -> f64 {
    1.0
}
fn default_zero_dim() -> usize {
    1
}

/// Which Burgers operator the iterative schemes solve at the new iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImplicitOperator {
    /// Diffusion at the new iterate (implicit Euler), convection lagged.
    #[default]
    Diffusion,
    /// Convection at the new iterate (RK4), diffusion lagged.
    Convection,
}

/// Problem identifier and parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProblemSpec {
    /// `u' = u − u²` split as `A = u`, `B = −u²`.
    Logistic {
        #[serde(default = "default_u0")]
        u0: f64,
    },
    /// 2D viscous Burgers front; `nx = ny = 1/dx` comes from the ladder.
    Burgers2d {
        mu: f64,
        /// Grid count used when a ladder row has no `dx`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        nx: Option<usize>,
        #[serde(default)]
        implicit: ImplicitOperator,
    },
    /// Harmonic oscillator split into drift and kick, state `[q; v]`.
    Harmonic {
        #[serde(default = "default_one")]
        mass: f64,
        #[serde(default = "default_one")]
        spring: f64,
        #[serde(default = "default_one")]
        q0: f64,
        #[serde(default)]
        v0: f64,
    },
    /// `A = B = 0`.
    Zero {
        #[serde(default = "default_zero_dim")]
        dim: usize,
    },
    /// `u' = (A + B) u` with exact matrix-exponential sub-flows. Without
    /// matrices the fixed 2×2 pair is used; `random_dim` draws a pair from
    /// the experiment seed.
    Linear {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        random_dim: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c0: Option<Vec<f64>>,
    },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Logistic { .. } => "logistic",
            ProblemSpec::Burgers2d { .. } => "burgers2d",
            ProblemSpec::Harmonic { .. } => "harmonic",
            ProblemSpec::Zero { .. } => "zero",
            ProblemSpec::Linear { .. } => "linear",
        }
    }

    pub fn default_t_end(&self) -> f64 {
        match self {
            ProblemSpec::Burgers2d { .. } => 1.25,
            _ => 1.0,
        }
    }
}

/// One resolution of a study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    pub dt: f64,
}

/// Step ladder: explicit rows, groups of rows with rates computed inside each
/// group, or repeated halvings of a base step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ladder {
    Halvings {
        dt0: f64,
        halvings: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dx: Option<f64>,
    },
    Steps {
        steps: Vec<LadderEntry>,
    },
    Groups {
        groups: Vec<Vec<LadderEntry>>,
    },
}

impl Ladder {
    /// Rows grouped for rate computation.
    pub fn groups(&self) -> Vec<Vec<LadderEntry>> {
        match self {
            Ladder::Halvings { dt0, halvings, dx } => vec![(0..=*halvings)
                .map(|i| LadderEntry {
                    dx: *dx,
                    dt: dt0 / (1u64 << i) as f64,
                })
                .collect()],
            Ladder::Steps { steps } => vec![steps.clone()],
            Ladder::Groups { groups } => groups.clone(),
        }
    }
}

/// Error norms a study reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub path: String,
    #[serde(default)]
    pub format: Format,
}

fn default_norms() -> Vec<NormKind> {
    vec![NormKind::L1, NormKind::Max]
}

fn default_true() -> bool {
    true
}

/// A complete convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub scheme: SchemeSpec,
    pub ladder: Ladder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default = "default_norms")]
    pub norms: Vec<NormKind>,
    /// Whether per-row rates are requested; needs at least two rows per group.
    #[serde(default = "default_true")]
    pub rates: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(problem: ProblemSpec, scheme: SchemeSpec, ladder: Ladder) -> Self {
        Self {
            problem,
            scheme,
            ladder,
            t_end: None,
            norms: default_norms(),
            rates: true,
            output: None,
            seed: 0,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn end_time(&self) -> f64 {
        self.t_end.unwrap_or_else(|| self.problem.default_t_end())
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        Scheme::from_spec(&self.scheme).map_err(|e| Error::Config(e.to_string()))?;
        if !(self.end_time() > 0.0) {
            return cfg_err(format!("t_end must be positive (got {})", self.end_time()));
        }
        if self.norms.is_empty() {
            return cfg_err("at least one norm must be requested".into());
        }
        let groups = self.ladder.groups();
        if groups.iter().all(|g| g.is_empty()) {
            return cfg_err("step ladder is empty".into());
        }
        for g in &groups {
            if self.rates && g.len() < 2 {
                return cfg_err("rates need at least two ladder entries per group".into());
            }
            for e in g {
                if !(e.dt > 0.0) || e.dx.is_some_and(|dx| !(dx > 0.0)) {
                    return cfg_err(format!("ladder steps must be positive (got {e:?})"));
                }
            }
            for w in g.windows(2) {
                let dt_ok = w[1].dt <= w[0].dt;
                let dx_ok = match (w[0].dx, w[1].dx) {
                    (Some(a), Some(b)) => b <= a,
                    (None, None) => true,
                    _ => false,
                };
                let strict = w[1].dt < w[0].dt || matches!((w[0].dx, w[1].dx), (Some(a), Some(b)) if b < a);
                if !(dt_ok && dx_ok && strict) {
                    return cfg_err(format!(
                        "step ladder must be strictly decreasing ({:?} then {:?})",
                        w[0], w[1]
                    ));
                }
            }
        }
        if let ProblemSpec::Burgers2d { nx, .. } = &self.problem {
            for e in groups.iter().flatten() {
                burgers_grid(e.dx, *nx)?;
            }
        }
        Ok(())
    }
}

fn burgers_grid(dx: Option<f64>, nx: Option<usize>) -> Result<usize> {
    match (dx, nx) {
        (Some(dx), _) => {
            let n = (1.0 / dx).round();
            if n < 2.0 || (n * dx - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("Burgers dx = {dx} is not 1/n for an integer n >= 2")));
            }
            Ok(n as usize)
        }
        (None, Some(n)) => Ok(n),
        (None, None) => Err(Error::Config("Burgers rows need dx or a problem-level nx".into())),
    }
}

/// A problem instantiated at one resolution: the split system, the initial
/// state and the exact solution at the end time.
pub struct Instance {
    pub system: SplitSystem,
    pub initial: StateVec,
    pub exact: StateVec,
}

fn matrix(rows: &[Vec<f64>]) -> Result<DenseMatrix> {
    let m = DenseMatrix::from_rows(rows).map_err(|e| Error::Config(e.to_string()))?;
    if !m.is_square() {
        return Err(Error::Config("linear problem matrices must be square".into()));
    }
    Ok(m)
}

fn random_matrix(rng: &mut StdRng, n: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = rng.gen_range(-1.0..1.0);
        }
    }
    m
}

/// Builds `problem` for one ladder row. `scheme` decides the Burgers
/// operator roles for iterative schemes.
pub fn instantiate(
    problem: &ProblemSpec,
    scheme: &Scheme,
    row: &LadderEntry,
    t_end: f64,
    seed: u64,
) -> Result<Instance> {
    match problem {
        ProblemSpec::Logistic { u0 } => Ok(Instance {
            system: logistic_split(),
            initial: StateVec::new(vec![*u0])?,
            exact: StateVec::new(vec![logistic_exact(*u0, t_end)])?,
        }),
        ProblemSpec::Burgers2d { mu, nx, implicit } => {
            let n = burgers_grid(row.dx, *nx)?;
            let mut cfg = BurgersConfig::new(*mu, n, row.dt);
            cfg.t_end = t_end;
            let p = BurgersProblem::new(cfg)?;
            let sys = p.system();
            let system = if scheme.is_iterative() && *implicit == ImplicitOperator::Diffusion {
                sys.swapped()
            } else {
                sys
            };
            Ok(Instance {
                system,
                initial: p.initial(),
                exact: p.exact(t_end),
            })
        }
        ProblemSpec::Harmonic { mass, spring, q0, v0 } => {
            let ham = HamiltonianSystem::harmonic(*mass, *spring, 1)?;
            let omega = (spring / mass).sqrt();
            let (q, v) = harmonic_exact(*q0, *v0, omega, t_end);
            Ok(Instance {
                system: ham.drift_kick_split(),
                initial: StateVec::new(vec![*q0, *v0])?,
                exact: StateVec::new(vec![q, v])?,
            })
        }
        ProblemSpec::Zero { dim } => {
            let c = StateVec::new((0..*dim).map(|i| 1.0 + i as f64).collect())?;
            Ok(Instance {
                system: SplitSystem::new(
                    Arc::new(ZeroField(*dim)),
                    Arc::new(ZeroField(*dim)),
                    Arc::new(ExactFlow::identity()),
                    Arc::new(ExactFlow::identity()),
                )?,
                initial: c.clone(),
                exact: c,
            })
        }
        ProblemSpec::Linear { a, b, random_dim, c0 } => {
            let (a, b) = match (a, b, random_dim) {
                (Some(a), Some(b), None) => (matrix(a)?, matrix(b)?),
                (None, None, Some(n)) => {
                    let mut rng = StdRng::seed_from_u64(seed);
                    (random_matrix(&mut rng, *n), random_matrix(&mut rng, *n))
                }
                (None, None, None) => default_pair(),
                _ => {
                    return Err(Error::Config(
                        "linear problem takes both matrices, random_dim, or neither".into(),
                    ))
                }
            };
            if a.rows() != b.rows() {
                return Err(Error::Config("linear problem matrices differ in size".into()));
            }
            let n = a.rows();
            let c = match c0 {
                Some(c) => StateVec::new(c.clone())?,
                None => StateVec::new((0..n).map(|i| 1.0 / (1.0 + i as f64)).collect())?,
            };
            c.check_dim(n)?;
            let exact = StateVec::new(a.add(&b).scaled(t_end).expm().matvec(c.as_slice()))?;
            Ok(Instance {
                system: linear_split(a, b)?,
                initial: c,
                exact,
            })
        }
    }
}
