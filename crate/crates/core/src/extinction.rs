//! Minimal roots of the (marked) generating-function system.
//!
//! Both solvers run the monotone iteration `x <- f(x)` from the origin, where
//! `f` is the (marked) offspring generating function. The iterates increase
//! componentwise and stay in the unit box, so they converge to the smallest
//! root in the box.

use crate::error::{Error, Result};
use crate::model::{MarkAssignment, MarkedSets, ProcessSpec, WeightedLaws};

pub const DEFAULT_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: u64 = 1_000_000;

/// Extinction probabilities `q_k` from a single ancestor of type `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionResult {
    pub q: Vec<f64>,
    /// `max_k |B_k(q)|`.
    pub residual: f64,
    pub iterations: u64,
    pub converged: bool,
}

/// Root `q(v)` of the marked system; equals the generating function of the
/// marked-event counts at extinction.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedRootResult {
    pub q_marked: Vec<f64>,
    pub residual: f64,
    pub iterations: u64,
    pub converged: bool,
}

impl ExtinctionResult {
    pub fn ensure_converged(self) -> Result<Self> {
        ensure(self.converged, self.iterations, self.residual)?;
        Ok(self)
    }
}

impl MarkedRootResult {
    pub fn ensure_converged(self) -> Result<Self> {
        ensure(self.converged, self.iterations, self.residual)?;
        Ok(self)
    }
}

fn ensure(converged: bool, iterations: u64, last_step: f64) -> Result<()> {
    if converged {
        Ok(())
    } else {
        Err(Error::NotConverged {
            iterations,
            last_step,
        })
    }
}

/// Successive iterates of `x <- f(x)` starting at the origin.
pub struct FixedPointIter<'a> {
    laws: &'a WeightedLaws<'a>,
    x: Vec<f64>,
}

impl<'a> FixedPointIter<'a> {
    pub fn new(laws: &'a WeightedLaws<'a>) -> Self {
        Self {
            x: vec![0.0; laws.dim()],
            laws,
        }
    }
}

impl Iterator for FixedPointIter<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let next: Vec<f64> = (0..self.x.len())
            .map(|k| self.laws.offspring_pgf(k, &self.x).min(1.0))
            .collect();
        self.x.clone_from(&next);
        Some(next)
    }
}

struct Root {
    x: Vec<f64>,
    residual: f64,
    iterations: u64,
    converged: bool,
}

fn minimal_root(laws: &WeightedLaws<'_>, tol: f64, max_iter: u64) -> Result<Root> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive, got {tol}"),
        });
    }
    let d = laws.dim();
    let mut x = vec![0.0; d];
    let mut next = vec![0.0; d];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        for (k, n) in next.iter_mut().enumerate() {
            // mathematically f(x) >= x along the iteration; keep it so under rounding
            *n = laws.offspring_pgf(k, &x).clamp(x[k], 1.0);
        }
        iterations += 1;
        let step: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if step <= tol {
            converged = true;
            break;
        }
    }
    let residual = (0..d).map(|k| laws.drift(k, &x).abs()).fold(0.0, f64::max);
    Ok(Root {
        x,
        residual,
        iterations,
        converged,
    })
}

/// Smallest nonnegative root `q` of `B(x) = 0`.
pub fn extinction_prob(spec: &ProcessSpec, tol: f64, max_iter: u64) -> Result<ExtinctionResult> {
    let root = minimal_root(&WeightedLaws::unmarked(spec), tol, max_iter)?;
    Ok(ExtinctionResult {
        q: root.x,
        residual: root.residual,
        iterations: root.iterations,
        converged: root.converged,
    })
}

/// Root of the marked system `B_k(x, v) + B̄_k(x) = 0`, selected as the limit
/// of the iteration from the origin. Mark values of exactly 1 are accepted.
pub fn marked_root(
    spec: &ProcessSpec,
    marks: &MarkedSets,
    vals: &MarkAssignment,
    tol: f64,
    max_iter: u64,
) -> Result<MarkedRootResult> {
    let laws = WeightedLaws::new(spec, marks, vals)?;
    let root = minimal_root(&laws, tol, max_iter)?;
    Ok(MarkedRootResult {
        q_marked: root.x,
        residual: root.residual,
        iterations: root.iterations,
        converged: root.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{OffspringVector, TypeLaw};
    use crate::oracle::{example_spec, ExampleParams};
    use approx::assert_abs_diff_eq;

    #[test]
    fn subcritical_example_goes_extinct() {
        let spec = example_spec(ExampleParams::new(0.5, 0.5).unwrap());
        let r = extinction_prob(&spec, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.q[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(r.q[1], 1.0, epsilon = 1e-10);
        assert!(r.residual <= spec.theta_max() * DEFAULT_TOL);
    }

    #[test]
    fn supercritical_example() {
        let spec = example_spec(ExampleParams::new(0.2, 0.2).unwrap());
        let r = extinction_prob(&spec, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_abs_diff_eq!(r.q[0], 0.453125, epsilon = 1e-10);
        assert_abs_diff_eq!(r.q[1], 0.5625, epsilon = 1e-10);
    }

    #[test]
    fn pure_death_single_type() {
        let spec = ProcessSpec::new(
            1,
            vec![TypeLaw::new(
                1.0,
                vec![(OffspringVector::new(vec![0]), 1.0)],
            )],
        )
        .unwrap();
        let r = extinction_prob(&spec, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(r.q, vec![1.0]);
    }

    #[test]
    fn critical_process_flags_slow_convergence() {
        let spec = ProcessSpec::new(
            1,
            vec![TypeLaw::new(
                1.0,
                vec![
                    (OffspringVector::new(vec![0]), 0.5),
                    (OffspringVector::new(vec![2]), 0.5),
                ],
            )],
        )
        .unwrap();
        let r = extinction_prob(&spec, 1e-12, 1000).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 1000);
        assert!(r.q[0] < 1.0 && r.q[0] > 0.99);
        assert!(matches!(
            r.ensure_converged(),
            Err(Error::NotConverged { .. })
        ));
    }

    #[test]
    fn marked_root_examples() {
        let spec = example_spec(ExampleParams::new(0.5, 0.5).unwrap());
        let marks = MarkedSets::pure_death(&spec);
        let zero = marked_root(
            &spec,
            &marks,
            &MarkAssignment::uniform(&marks, 0.0),
            1e-12,
            1000,
        )
        .unwrap();
        assert_eq!(zero.q_marked, vec![0.0, 0.0]);

        let half = marked_root(
            &spec,
            &marks,
            &MarkAssignment::uniform(&marks, 0.5),
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )
        .unwrap();
        let v = (1.0 - 0.625f64.sqrt()) / 0.5;
        let u = (v - 0.25) / 0.5;
        assert_abs_diff_eq!(half.q_marked[1], v, epsilon = 1e-10);
        assert_abs_diff_eq!(half.q_marked[0], u, epsilon = 1e-10);
        assert_abs_diff_eq!(half.q_marked[1], 0.4188612, epsilon = 1e-7);
        assert_abs_diff_eq!(half.q_marked[0], 0.3377223, epsilon = 1e-7);
    }

    #[test]
    fn unit_marks_reduce_to_extinction() {
        let spec = example_spec(ExampleParams::new(0.2, 0.2).unwrap());
        let marks = MarkedSets::pure_death(&spec);
        let a = marked_root(
            &spec,
            &marks,
            &MarkAssignment::ones(&marks),
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )
        .unwrap();
        let b = extinction_prob(&spec, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(a.q_marked, b.q);
    }

    #[test]
    fn iterates_are_monotone() {
        let spec = example_spec(ExampleParams::new(0.3, 0.4).unwrap());
        let laws = WeightedLaws::unmarked(&spec);
        let mut prev = vec![0.0; 2];
        for x in FixedPointIter::new(&laws).take(500) {
            for (a, b) in x.iter().zip(&prev) {
                assert!(*a >= *b - 1e-15 && *a <= 1.0);
            }
            prev = x;
        }
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        let spec = example_spec(ExampleParams::new(0.5, 0.5).unwrap());
        assert!(extinction_prob(&spec, 0.0, 10).is_err());
    }
}
