use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{SplitSystem, StateVec};
use crate::linearize::{zassenhaus_ab_step, JacobianProbe, ZassenhausCorrection};
use crate::mpe::{mpe_weights, KSequence, MpeScheme, WeightMode};
use crate::splitting::{
    iterative_split_alternating, iterative_split_one, InitialIterate, IterativeConfig, Ordering,
    ProductScheme,
};

/// Scheme selection as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    /// Registry identifier, e.g. `strang-aba`, `t6`, `mpe:k=1,2,4`, `iter-one`.
    pub id: String,
    /// Iteration count `m` of the iterative schemes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Switch index `j` of `iter-alt`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialIterate>,
    /// Substep counts for `mpe`; overrides the list embedded in the id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<KSequence>,
    /// Kernel of the extrapolated schemes: `strang-aba` (default) or `strang-bab`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    /// Order of the `zassenhaus` correction (2 or 3).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<u8>,
    /// Integration tolerance of the Zassenhaus correction flows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

impl SchemeSpec {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            iterations: None,
            switch: None,
            inner_tol: None,
            initial: None,
            k: None,
            kernel: None,
            order: None,
            tol: None,
        }
    }
}

/// A ready-to-step scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum Scheme {
    Product(ProductScheme),
    Mpe(MpeScheme),
    IterOne(IterativeConfig),
    IterAlt(IterativeConfig),
    Zassenhaus(ZassenhausCorrection),
}

/// Identifiers accepted by [`Scheme::from_spec`]; `mpe:k=...` takes any list.
pub const SCHEME_IDS: &[&str] = &[
    "ab",
    "ba",
    "strang-aba",
    "strang-bab",
    "symmetric-sum",
    "dunn",
    "burstein-mirin",
    "iter-one",
    "iter-alt",
    "t2",
    "t4",
    "t6",
    "t8",
    "t10",
    "mpe:k=<list>",
    "zassenhaus",
];

fn kernel_of(spec: &SchemeSpec) -> Result<Ordering> {
    match spec.kernel.as_deref() {
        None | Some("strang-aba") => Ok(Ordering::AFirst),
        Some("strang-bab") => Ok(Ordering::BFirst),
        Some(other) => Err(Error::UnknownId {
            kind: "kernel",
            id: other.to_string(),
        }),
    }
}

fn iterative_config(spec: &SchemeSpec, default_m: usize) -> IterativeConfig {
    let m = spec.iterations.unwrap_or(default_m);
    let mut cfg = IterativeConfig::new(m);
    if let Some(j) = spec.switch {
        cfg = cfg.with_switch(j);
    }
    if let Some(tol) = spec.inner_tol {
        cfg = cfg.with_inner_tol(tol);
    }
    if let Some(init) = spec.initial {
        cfg = cfg.with_initial(init);
    }
    cfg
}

impl Scheme {
    pub fn from_id(id: &str) -> Result<Self> {
        Self::from_spec(&SchemeSpec::new(id))
    }

    pub fn from_spec(spec: &SchemeSpec) -> Result<Self> {
        let id = spec.id.as_str();
        let scheme = match id {
            "ab" => Scheme::Product(ProductScheme::ab()),
            "ba" => Scheme::Product(ProductScheme::ba()),
            "strang-aba" => Scheme::Product(ProductScheme::strang_aba()),
            "strang-bab" => Scheme::Product(ProductScheme::strang_bab()),
            "symmetric-sum" => Scheme::Product(ProductScheme::symmetric_sum()),
            "dunn" => Scheme::Product(ProductScheme::dunn()),
            "burstein-mirin" => Scheme::Product(ProductScheme::burstein_mirin()),
            "iter-one" => Scheme::IterOne(iterative_config(spec, 2)),
            "iter-alt" => {
                let mut cfg = iterative_config(spec, 2);
                if spec.switch.is_none() {
                    cfg = cfg.with_switch(1);
                }
                Scheme::IterAlt(cfg)
            }
            "zassenhaus" => Scheme::Zassenhaus(ZassenhausCorrection::new(
                spec.order.unwrap_or(2),
                spec.tol.unwrap_or(1e-12),
            )?),
            _ => {
                let k = if let Some(n) = id.strip_prefix('t').and_then(|n| n.parse::<u32>().ok()) {
                    if n == 0 || n % 2 == 1 || n > 10 {
                        return Err(Error::UnknownId {
                            kind: "scheme",
                            id: id.to_string(),
                        });
                    }
                    KSequence::natural(n / 2)?
                } else if let Some(list) = id.strip_prefix("mpe:k=") {
                    list.parse::<KSequence>()?
                } else if id == "mpe" && spec.k.is_some() {
                    spec.k.clone().expect("checked")
                } else {
                    return Err(Error::UnknownId {
                        kind: "scheme",
                        id: id.to_string(),
                    });
                };
                let k = spec.k.clone().unwrap_or(k);
                let weights = mpe_weights(&k, WeightMode::ClosedForm)?;
                Scheme::Mpe(MpeScheme::new(weights, kernel_of(spec)?))
            }
        };
        Ok(scheme)
    }

    /// True for the iterative splitting schemes.
    pub fn is_iterative(&self) -> bool {
        matches!(self, Scheme::IterOne(_) | Scheme::IterAlt(_))
    }

    pub fn step(&self, sys: &SplitSystem, t: f64, h: f64, c: &StateVec) -> Result<StateVec> {
        match self {
            Scheme::Product(p) => p.step(sys, t, h, c),
            Scheme::Mpe(m) => m.step(sys, t, h, c),
            Scheme::IterOne(cfg) => iterative_split_one(sys, t, h, c, cfg),
            Scheme::IterAlt(cfg) => iterative_split_alternating(sys, t, h, c, cfg),
            Scheme::Zassenhaus(z) => zassenhaus_ab_step(sys, t, h, c, z, &JacobianProbe::default()),
        }
    }

    /// Advances `c` from `t0` to `t_end` with steps of `dt`; the last step is
    /// shortened when `dt` does not divide the interval.
    pub fn integrate(
        &self,
        sys: &SplitSystem,
        t0: f64,
        t_end: f64,
        dt: f64,
        c: &StateVec,
    ) -> Result<StateVec> {
        if !(dt > 0.0) || !(t_end >= t0) {
            return Err(Error::InvalidArgument(format!(
                "integration needs dt > 0 and t_end >= t0 (got dt = {dt}, [{t0}, {t_end}])"
            )));
        }
        let span = t_end - t0;
        let full = (span / dt * (1.0 + 1e-12)).floor() as usize;
        let mut u = c.clone();
        let mut t = t0;
        for n in 0..full {
            u = self.step(sys, t, dt, &u).map_err(|e| e.in_stage("time step", n))?;
            t = t0 + (n + 1) as f64 * dt;
        }
        let rest = t_end - t;
        if rest > 1e-12 * span.max(1.0) {
            u = self.step(sys, t, rest, &u).map_err(|e| e.in_stage("time step", full))?;
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::logistic::{logistic_exact, logistic_split};

    #[test]
    fn every_listed_id_parses() {
        for id in SCHEME_IDS {
            let id = id.replace("<list>", "1,2,4");
            Scheme::from_id(&id).unwrap_or_else(|e| panic!("{id}: {e}"));
        }
        assert!(matches!(Scheme::from_id("t3"), Err(Error::UnknownId { .. })));
        assert!(matches!(Scheme::from_id("t12"), Err(Error::UnknownId { .. })));
        assert!(matches!(Scheme::from_id("nope"), Err(Error::UnknownId { .. })));
        assert!(Scheme::from_id("mpe:k=2,2").is_err());
    }

    #[test]
    fn natural_ids_map_to_orders() {
        for (id, order) in [("t2", 2), ("t4", 4), ("t6", 6), ("t8", 8), ("t10", 10)] {
            match Scheme::from_id(id).unwrap() {
                Scheme::Mpe(m) => assert_eq!(m.order(), order),
                other => panic!("{other:?}"),
            }
        }
    }

    #[test]
    fn integrate_shortens_final_step() {
        let sys = logistic_split();
        let s = Scheme::from_id("t6").unwrap();
        let u = s.integrate(&sys, 0.0, 1.25, 0.1, &StateVec::scalar(0.1)).unwrap();
        assert!((u[0] - logistic_exact(0.1, 1.25)).abs() < 1e-9);
        let u = s.integrate(&sys, 0.0, 1.0, 0.1, &StateVec::scalar(0.1)).unwrap();
        assert!((u[0] - logistic_exact(0.1, 1.0)).abs() < 1e-9);
    }

    #[test]
    fn iterative_defaults() {
        match Scheme::from_id("iter-alt").unwrap() {
            Scheme::IterAlt(cfg) => assert_eq!((cfg.iterations, cfg.switch), (2, 1)),
            other => panic!("{other:?}"),
        }
        let mut spec = SchemeSpec::new("iter-one");
        spec.iterations = Some(3);
        match Scheme::from_spec(&spec).unwrap() {
            Scheme::IterOne(cfg) => assert_eq!(cfg.iterations, 3),
            other => panic!("{other:?}"),
        }
    }
}
