use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::flow::{apply_flow, SplitSystem, StateVec};

/// Which split operator a factor advances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    A,
    B,
}

/// One sub-flow application `e^{fraction·h·X}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Factor {
    pub op: Operator,
    pub fraction: f64,
}

impl Factor {
    pub const fn a(fraction: f64) -> Self {
        Self { op: Operator::A, fraction }
    }
    pub const fn b(fraction: f64) -> Self {
        Self { op: Operator::B, fraction }
    }
}

/// A weighted product of sub-flows. Factors are stored in application order:
/// `factors[0]` acts on the input state first.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub weight: f64,
    pub factors: Vec<Factor>,
}

impl ProductTerm {
    pub fn new(weight: f64, factors: Vec<Factor>) -> Self {
        Self { weight, factors }
    }
}

/// Linear combination of sub-flow products, `Σ_k c_k Π_i e^{a_ki h A} e^{b_ki h B}`.
///
/// Construction enforces consistency: the weights sum to one and, inside every
/// term, the `A` fractions and the `B` fractions each sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductScheme {
    name: String,
    terms: Vec<ProductTerm>,
}

const SUM_TOL: f64 = 1e-12;

impl ProductScheme {
    pub fn new(name: impl Into<String>, terms: Vec<ProductTerm>) -> Result<Self> {
        let name = name.into();
        if terms.is_empty() {
            return Err(Error::InvalidArgument(format!("{name}: no terms")));
        }
        let total: f64 = terms.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "{name}: weights sum to {total}, expected 1"
            )));
        }
        for (k, term) in terms.iter().enumerate() {
            for op in [Operator::A, Operator::B] {
                let s: f64 = term
                    .factors
                    .iter()
                    .filter(|f| f.op == op)
                    .map(|f| f.fraction)
                    .sum();
                if (s - 1.0).abs() > SUM_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "{name}: term {k} has {op:?} fractions summing to {s}"
                    )));
                }
            }
        }
        Ok(Self { name, terms })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    /// Applies one term. Each operator keeps its own clock: an `A` factor with
    /// fraction `a` acts over `[t_A, t_A + a h]` and then advances `t_A`.
    fn apply_term(
        &self,
        sys: &SplitSystem,
        term_index: usize,
        t: f64,
        h: f64,
        c: &StateVec,
    ) -> Result<StateVec> {
        let term = &self.terms[term_index];
        let (mut ta, mut tb) = (t, t);
        let mut u = c.clone();
        for (i, f) in term.factors.iter().enumerate() {
            let dt = f.fraction * h;
            let stage = term_index * 100 + i;
            u = match f.op {
                Operator::A => {
                    let out = apply_flow(sys.a_flow.as_ref(), ta, dt, &u);
                    ta += dt;
                    out
                }
                Operator::B => {
                    let out = apply_flow(sys.b_flow.as_ref(), tb, dt, &u);
                    tb += dt;
                    out
                }
            }
            .map_err(|e| e.in_stage(self.name.clone(), stage))?;
        }
        Ok(u)
    }

    /// One step of size `h` from `(t, c)`. Every product starts from the same
    /// input state; the results are combined with the scheme weights.
    pub fn step(&self, sys: &SplitSystem, t: f64, h: f64, c: &StateVec) -> Result<StateVec> {
        c.check_dim(sys.dim())?;
        if self.terms.len() == 1 {
            return self.apply_term(sys, 0, t, h, c);
        }
        let products = (0..self.terms.len())
            .map(|k| self.apply_term(sys, k, t, h, c))
            .collect::<Result<Vec<_>>>()?;
        let pairs: Vec<(f64, &StateVec)> = self
            .terms
            .iter()
            .zip(&products)
            .map(|(t, p)| (t.weight, p))
            .collect();
        StateVec::combine(&pairs)
    }

    /// Sequential splitting, `A` over `h` then `B` over `h`.
    pub fn ab() -> Self {
        Self::new("ab", vec![ProductTerm::new(1.0, vec![Factor::a(1.0), Factor::b(1.0)])])
            .expect("valid")
    }

    /// Sequential splitting, `B` first.
    pub fn ba() -> Self {
        Self::new("ba", vec![ProductTerm::new(1.0, vec![Factor::b(1.0), Factor::a(1.0)])])
            .expect("valid")
    }

    /// Strang-Marchuk A-B-A: `A` for `h/2`, `B` for `h`, `A` for `h/2`.
    pub fn strang_aba() -> Self {
        Self::new(
            "strang-aba",
            vec![ProductTerm::new(
                1.0,
                vec![Factor::a(0.5), Factor::b(1.0), Factor::a(0.5)],
            )],
        )
        .expect("valid")
    }

    /// Strang B-A-B, `S_AB(h) = e^{h/2 B} e^{h A} e^{h/2 B}`.
    pub fn strang_bab() -> Self {
        Self::new(
            "strang-bab",
            vec![ProductTerm::new(
                1.0,
                vec![Factor::b(0.5), Factor::a(1.0), Factor::b(0.5)],
            )],
        )
        .expect("valid")
    }

    /// `½ (e^{hA} e^{hB} + e^{hB} e^{hA})`.
    pub fn symmetric_sum() -> Self {
        Self::new(
            "symmetric-sum",
            vec![
                ProductTerm::new(0.5, vec![Factor::b(1.0), Factor::a(1.0)]),
                ProductTerm::new(0.5, vec![Factor::a(1.0), Factor::b(1.0)]),
            ],
        )
        .expect("valid")
    }

    /// Dunn's third-order combination `(4/3)(S_AB + S_BA)/2 − (1/3) S`,
    /// expanded to `(2/3) S_AB + (2/3) S_BA − (1/6) AB − (1/6) BA`.
    pub fn dunn() -> Self {
        Self::new(
            "dunn",
            vec![
                ProductTerm::new(
                    2.0 / 3.0,
                    vec![Factor::b(0.5), Factor::a(1.0), Factor::b(0.5)],
                ),
                ProductTerm::new(
                    2.0 / 3.0,
                    vec![Factor::a(0.5), Factor::b(1.0), Factor::a(0.5)],
                ),
                ProductTerm::new(-1.0 / 6.0, vec![Factor::b(1.0), Factor::a(1.0)]),
                ProductTerm::new(-1.0 / 6.0, vec![Factor::a(1.0), Factor::b(1.0)]),
            ],
        )
        .expect("valid")
    }

    /// Burstein-Mirin third-order combination
    /// `(9/8) e^{(h/3)A} e^{(2h/3)B} e^{(2h/3)A} e^{(h/3)B} − (1/8) e^{hA} e^{hB}`,
    /// operator products read right to left.
    pub fn burstein_mirin() -> Self {
        Self::new(
            "burstein-mirin",
            vec![
                ProductTerm::new(
                    9.0 / 8.0,
                    vec![
                        Factor::b(1.0 / 3.0),
                        Factor::a(2.0 / 3.0),
                        Factor::b(2.0 / 3.0),
                        Factor::a(1.0 / 3.0),
                    ],
                ),
                ProductTerm::new(-1.0 / 8.0, vec![Factor::b(1.0), Factor::a(1.0)]),
            ],
        )
        .expect("valid")
    }
}

macro_rules! cached {
    ($name:ident, $ctor:expr) => {
        fn $name() -> &'static ProductScheme {
            static CELL: OnceLock<ProductScheme> = OnceLock::new();
            CELL.get_or_init(|| $ctor)
        }
    };
}

cached!(ab_scheme, ProductScheme::ab());
cached!(ba_scheme, ProductScheme::ba());
cached!(aba_scheme, ProductScheme::strang_aba());
cached!(bab_scheme, ProductScheme::strang_bab());
cached!(sym_scheme, ProductScheme::symmetric_sum());
cached!(dunn_scheme, ProductScheme::dunn());
cached!(bm_scheme, ProductScheme::burstein_mirin());

/// Ordering of the two sub-flows in a sequential or Strang step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    /// `A` first (sequential) or `A` on the outside (Strang).
    #[default]
    AFirst,
    BFirst,
}

/// Sequential A-B splitting: `b_flow(h) ∘ a_flow(h)`.
pub fn ab_step(sys: &SplitSystem, t: f64, h: f64, c: &StateVec) -> Result<StateVec> {
    ab_scheme().step(sys, t, h, c)
}

pub fn sequential_step(
    sys: &SplitSystem,
    order: Ordering,
    t: f64,
    h: f64,
    c: &StateVec,
) -> Result<StateVec> {
    match order {
        Ordering::AFirst => ab_scheme().step(sys, t, h, c),
        Ordering::BFirst => ba_scheme().step(sys, t, h, c),
    }
}

/// Strang splitting; `AFirst` is A-B-A, `BFirst` is B-A-B.
pub fn strang_step(
    sys: &SplitSystem,
    order: Ordering,
    t: f64,
    h: f64,
    c: &StateVec,
) -> Result<StateVec> {
    match order {
        Ordering::AFirst => aba_scheme().step(sys, t, h, c),
        Ordering::BFirst => bab_scheme().step(sys, t, h, c),
    }
}

pub fn symmetric_sum_step(sys: &SplitSystem, t: f64, h: f64, c: &StateVec) -> Result<StateVec> {
    sym_scheme().step(sys, t, h, c)
}

pub fn dunn_step(sys: &SplitSystem, t: f64, h: f64, c: &StateVec) -> Result<StateVec> {
    dunn_scheme().step(sys, t, h, c)
}

pub fn burstein_mirin_step(sys: &SplitSystem, t: f64, h: f64, c: &StateVec) -> Result<StateVec> {
    bm_scheme().step(sys, t, h, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{ExactFlow, FnField, ZeroField};
    use std::sync::Arc;

    fn exp_flow(rate: f64) -> ExactFlow {
        ExactFlow::new(move |_, h, c| Ok(c.iter().map(|x| x * (rate * h).exp()).collect()))
    }

    fn scalar_sys(a_rate: f64, b_flow: ExactFlow) -> SplitSystem {
        SplitSystem::new(
            Arc::new(FnField::new(1, move |_, c, o| o[0] = a_rate * c[0])),
            Arc::new(ZeroField(1)),
            Arc::new(exp_flow(a_rate)),
            Arc::new(b_flow),
        )
        .unwrap()
    }

    #[test]
    fn library_schemes_are_consistent() {
        for s in [
            ProductScheme::ab(),
            ProductScheme::ba(),
            ProductScheme::strang_aba(),
            ProductScheme::strang_bab(),
            ProductScheme::symmetric_sum(),
            ProductScheme::dunn(),
            ProductScheme::burstein_mirin(),
        ] {
            let w: f64 = s.terms().iter().map(|t| t.weight).sum();
            assert!((w - 1.0).abs() < 1e-15, "{}", s.name());
        }
    }

    #[test]
    fn burstein_mirin_weights_and_fractions() {
        let s = ProductScheme::burstein_mirin();
        assert_eq!(s.terms()[0].weight, 9.0 / 8.0);
        assert_eq!(s.terms()[1].weight, -1.0 / 8.0);
        let a: f64 = s.terms()[0]
            .factors
            .iter()
            .filter(|f| f.op == Operator::A)
            .map(|f| f.fraction)
            .sum();
        assert!((a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_inconsistent_schemes() {
        let bad_weight = ProductScheme::new(
            "w",
            vec![ProductTerm::new(0.9, vec![Factor::a(1.0), Factor::b(1.0)])],
        );
        assert!(bad_weight.is_err());
        let bad_fraction = ProductScheme::new(
            "f",
            vec![ProductTerm::new(1.0, vec![Factor::a(0.5), Factor::b(1.0)])],
        );
        assert!(bad_fraction.is_err());
    }

    #[test]
    fn vacuous_operator_reduces_to_other_flow() {
        // B = 0: every scheme reduces to a_flow(h)
        let sys = scalar_sys(-0.7, ExactFlow::identity());
        let c = StateVec::scalar(1.3);
        let h = 0.4;
        let expected = 1.3 * (-0.7f64 * h).exp();
        for out in [
            strang_step(&sys, Ordering::AFirst, 0.0, h, &c).unwrap(),
            burstein_mirin_step(&sys, 0.0, h, &c).unwrap(),
            dunn_step(&sys, 0.0, h, &c).unwrap(),
        ] {
            assert!((out[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn a_zero_gives_b_flow() {
        let sys = SplitSystem::new(
            Arc::new(ZeroField(1)),
            Arc::new(FnField::new(1, |_, c, o| o[0] = -c[0] * c[0])),
            Arc::new(ExactFlow::identity()),
            Arc::new(ExactFlow::new(|_, h, c| Ok(vec![c[0] / (1.0 + h * c[0])]))),
        )
        .unwrap();
        let c = StateVec::scalar(0.8);
        let expected = 0.8 / (1.0 + 0.3 * 0.8);
        assert_eq!(ab_step(&sys, 0.0, 0.3, &c).unwrap()[0], expected);
        assert!((dunn_step(&sys, 0.0, 0.3, &c).unwrap()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn stage_errors_carry_context() {
        let failing = ExactFlow::new(|_, _, _| Err(Error::NonFinite("boom".into())));
        let sys = scalar_sys(1.0, failing);
        let err = dunn_step(&sys, 0.0, 0.1, &StateVec::scalar(1.0)).unwrap_err();
        match err {
            Error::Stage { scheme, .. } => assert_eq!(scheme, "dunn"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn clocks_track_non_autonomous_flows() {
        // B flow records the start time of each application.
        let times = Arc::new(std::sync::Mutex::new(Vec::new()));
        let log = times.clone();
        let b = ExactFlow::new(move |t0, _, c| {
            log.lock().unwrap().push(t0);
            Ok(c.to_vec())
        });
        let sys = scalar_sys(0.0, b);
        strang_step(&sys, Ordering::BFirst, 1.0, 0.5, &StateVec::scalar(1.0)).unwrap();
        assert_eq!(*times.lock().unwrap(), vec![1.0, 1.25]);
    }
}
