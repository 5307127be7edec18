//! Generating functions of the marked-event counters.
//!
//! At a fixed horizon the law from a general start `i` is the product
//! `prod_k g_k(t, 1, v)^{i_k}` over independent lines of descent. At
//! extinction it is `prod_k q_k(v)^{i_k}`, divided through by the extinction
//! probabilities when the process is supercritical and the law is taken
//! conditionally on extinction. The extension from a single ancestor to a
//! general start relies on that same independence.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::extinction::{self, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::flow::{self, FlowResult};
use crate::model::{MarkAssignment, MarkKey, MarkedSets, ProcessSpec, DEFAULT_CRITICALITY_TOL};

/// Initial population per type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StartState(Vec<u64>);

impl StartState {
    pub fn new(counts: Vec<u64>) -> Self {
        Self(counts)
    }

    /// A single ancestor of type `k`.
    pub fn single(d: usize, k: usize) -> Self {
        let mut v = vec![0; d];
        v[k] = 1;
        Self(v)
    }

    pub fn counts(&self) -> &[u64] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub(crate) fn check(&self, spec: &ProcessSpec) -> Result<()> {
        if self.dim() != spec.dim() {
            return Err(Error::PointDimension {
                found: self.dim(),
                expected: spec.dim(),
            });
        }
        Ok(())
    }

    /// `prod_k g_k^{i_k}`.
    pub fn product(&self, g: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(g)
            .map(|(&i, &gk)| match i32::try_from(i) {
                Ok(i) => gk.powi(i),
                Err(_) => gk.powf(i as f64),
            })
            .product()
    }
}

impl From<Vec<u64>> for StartState {
    fn from(v: Vec<u64>) -> Self {
        Self(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorizonPgf {
    pub value: f64,
    /// Per-ancestor flow `G(t, 1, v)`.
    pub flow: FlowResult,
}

/// `E[v^{counters(t)} | X(0) = start]`.
pub fn horizon_pgf(
    spec: &ProcessSpec,
    marks: &MarkedSets,
    vals: &MarkAssignment,
    start: &StartState,
    t: f64,
) -> Result<HorizonPgf> {
    start.check(spec)?;
    let flow = flow::integrate(spec, marks, vals, &vec![1.0; spec.dim()], t, None)?;
    Ok(HorizonPgf {
        value: start.product(&flow.g),
        flow,
    })
}

/// Horizon generating function with every unassigned mark set to 1, i.e.
/// the joint law of the assigned counters only.
pub fn marginal_pgf(
    spec: &ProcessSpec,
    marks: &MarkedSets,
    assigned: &BTreeMap<MarkKey, f64>,
    start: &StartState,
    t: f64,
) -> Result<HorizonPgf> {
    let vals = MarkAssignment::from_map(marks, assigned, Some(1.0))?;
    horizon_pgf(spec, marks, &vals, start, t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionPgfResult {
    pub value: f64,
    /// Whether the value is conditioned on extinction (supercritical case).
    pub conditioned: bool,
    /// Extinction probabilities used as divisors; all ones when unconditioned.
    pub q_used: Vec<f64>,
    /// Marked root `q(v)`.
    pub q_marked: Vec<f64>,
}

/// `E[v^{counters(tau)} | X(0) = start]`, conditioned on `tau < inf` when
/// the process is supercritical. Mark values must lie in `[0, 1)`; to leave
/// a vector uncounted remove it from `marks` instead.
pub fn extinction_pgf(
    spec: &ProcessSpec,
    marks: &MarkedSets,
    vals: &MarkAssignment,
    start: &StartState,
) -> Result<ExtinctionPgfResult> {
    start.check(spec)?;
    vals.require_below_one(marks)?;
    let q_marked = extinction::marked_root(spec, marks, vals, DEFAULT_TOL, DEFAULT_MAX_ITER)?
        .ensure_converged()?
        .q_marked;
    let conditioned = spec.classify(DEFAULT_CRITICALITY_TOL).is_supercritical();
    let q_used = if conditioned {
        extinction::extinction_prob(spec, DEFAULT_TOL, DEFAULT_MAX_ITER)?
            .ensure_converged()?
            .q
    } else {
        vec![1.0; spec.dim()]
    };
    let ratios: Vec<f64> = q_marked.iter().zip(&q_used).map(|(a, b)| a / b).collect();
    Ok(ExtinctionPgfResult {
        value: start.product(&ratios).clamp(0.0, 1.0),
        conditioned,
        q_used,
        q_marked,
    })
}

/// `R_k = {0}` wherever childless death is possible.
pub fn pure_death_marks(spec: &ProcessSpec) -> MarkedSets {
    MarkedSets::pure_death(spec)
}

/// `R_k = {2 e_k}` wherever that split is possible.
pub fn twins_marks(spec: &ProcessSpec) -> MarkedSets {
    MarkedSets::twins(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OffspringVector;
    use crate::oracle::{example_spec, ExampleParams};
    use approx::assert_abs_diff_eq;

    fn fixture(p: f64) -> (ProcessSpec, MarkedSets) {
        let spec = example_spec(ExampleParams::new(p, p).unwrap());
        let marks = pure_death_marks(&spec);
        (spec, marks)
    }

    #[test]
    fn horizon_pgf_trivial_cases() {
        let (spec, marks) = fixture(0.5);
        let half = MarkAssignment::uniform(&marks, 0.5);
        let start = StartState::new(vec![2, 1]);
        assert_eq!(
            horizon_pgf(&spec, &marks, &half, &start, 0.0)
                .unwrap()
                .value,
            1.0
        );
        let ones = MarkAssignment::ones(&marks);
        assert_eq!(
            horizon_pgf(&spec, &marks, &ones, &start, 3.0)
                .unwrap()
                .value,
            1.0
        );
        let empty = StartState::new(vec![0, 0]);
        assert_eq!(
            horizon_pgf(&spec, &marks, &half, &empty, 3.0)
                .unwrap()
                .value,
            1.0
        );
    }

    #[test]
    fn product_law_from_single_ancestors() {
        let (spec, marks) = fixture(0.5);
        let half = MarkAssignment::uniform(&marks, 0.5);
        let g1 = horizon_pgf(&spec, &marks, &half, &StartState::single(2, 0), 2.0)
            .unwrap()
            .value;
        let g2 = horizon_pgf(&spec, &marks, &half, &StartState::single(2, 1), 2.0)
            .unwrap()
            .value;
        let both = horizon_pgf(&spec, &marks, &half, &StartState::new(vec![2, 1]), 2.0)
            .unwrap()
            .value;
        assert_abs_diff_eq!(both, g1 * g1 * g2, epsilon = 1e-15);
    }

    #[test]
    fn marginal_matches_full_assignment() {
        let (spec, marks) = fixture(0.5);
        let mut map = BTreeMap::new();
        map.insert(MarkKey::new(0, OffspringVector::zero(2)), 0.3);
        map.insert(MarkKey::new(1, OffspringVector::zero(2)), 0.6);
        let full = MarkAssignment::from_map(&marks, &map, None).unwrap();
        let start = StartState::single(2, 0);
        let a = marginal_pgf(&spec, &marks, &map, &start, 1.5).unwrap();
        let b = horizon_pgf(&spec, &marks, &full, &start, 1.5).unwrap();
        assert_eq!(a, b);

        map.remove(&MarkKey::new(1, OffspringVector::zero(2)));
        let only_y = marginal_pgf(&spec, &marks, &map, &start, 1.5)
            .unwrap()
            .value;
        let y_vals = MarkAssignment::new(&marks, vec![vec![0.3], vec![1.0]]).unwrap();
        let expected = horizon_pgf(&spec, &marks, &y_vals, &start, 1.5)
            .unwrap()
            .value;
        assert_eq!(only_y, expected);
        assert!(only_y > b.value);
    }

    #[test]
    fn extinction_pgf_examples() {
        let (spec, marks) = fixture(0.5);
        let half = MarkAssignment::uniform(&marks, 0.5);
        let r = extinction_pgf(&spec, &marks, &half, &StartState::single(2, 1)).unwrap();
        assert!(!r.conditioned);
        assert_abs_diff_eq!(r.value, 0.4188612, epsilon = 1e-7);

        let (spec, marks) = fixture(0.2);
        let r = extinction_pgf(&spec, &marks, &half, &StartState::single(2, 1)).unwrap();
        assert!(r.conditioned);
        let v = (1.0 - (1.0f64 - 2.56 * 0.18).sqrt()) / 1.28;
        assert_abs_diff_eq!(r.value, v / 0.5625, epsilon = 1e-10);
        assert_abs_diff_eq!(r.value, 0.369024, epsilon = 1e-6);

        let r = extinction_pgf(&spec, &marks, &half, &StartState::new(vec![0, 0])).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn extinction_pgf_rejects_unit_marks() {
        let (spec, marks) = fixture(0.5);
        let ones = MarkAssignment::ones(&marks);
        assert!(extinction_pgf(&spec, &marks, &ones, &StartState::single(2, 0)).is_err());
    }

    #[test]
    fn start_dimension_is_checked() {
        let (spec, marks) = fixture(0.5);
        let half = MarkAssignment::uniform(&marks, 0.5);
        assert!(horizon_pgf(&spec, &marks, &half, &StartState::new(vec![1]), 1.0).is_err());
    }
}
