//! Multi-type branching specifications.
//!
//! A process with `d` types is given by a split rate `theta_k` and a finitely
//! supported offspring distribution for every type `k`. An individual of type
//! `k` lives an exponential time with rate `theta_k` and is then replaced by a
//! random offspring vector `j`. The transition rates are derived, never
//! entered: `b_j = theta_k * p_j` for `j != e_k` and `b_{e_k} = -theta_k`.
//!
//! The infinitesimal generating function of type `k` is
//!
//! ```text
//! B_k(x) = sum_j b_j x^j = theta_k * (f_k(x) - x_k)
//! ```
//!
//! where `f_k` is the offspring probability generating function. Marking a
//! subset `R_k` of the support and attaching a value `v_j` to each marked
//! vector gives the marked generating function used throughout the crate.

mod marks;
mod matrix;

pub use marks::{MarkAssignment, MarkKey, MarkedSets, WeightedLaws};
pub use matrix::{perron_root, Criticality, CriticalityClass, MeanMatrix};

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Sum-to-one tolerance for offspring distributions.
pub const PROBABILITY_SUM_TOL: f64 = 1e-12;

/// Default band around zero inside which `rho(1)` counts as critical.
pub const DEFAULT_CRITICALITY_TOL: f64 = 1e-10;

/// Offspring counts per type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OffspringVector(Vec<u32>);

impl OffspringVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    /// The unit vector `e_k`.
    pub fn unit(d: usize, k: usize) -> Self {
        let mut v = vec![0; d];
        v[k] = 1;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| u64::from(c)).sum()
    }

    /// `x^j`, the product of `x_i^{j_i}`.
    #[inline]
    pub fn monomial(&self, x: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(x)
            .map(|(&c, &xi)| xi.powi(c as i32))
            .product()
    }

    /// Partial derivative of `x^j` with respect to `x_i`.
    pub fn monomial_partial(&self, x: &[f64], i: usize) -> f64 {
        let ci = self.0[i];
        if ci == 0 {
            return 0.0;
        }
        self.0
            .iter()
            .zip(x)
            .enumerate()
            .map(|(l, (&c, &xl))| {
                if l == i {
                    f64::from(c) * xl.powi(c as i32 - 1)
                } else {
                    xl.powi(c as i32)
                }
            })
            .product()
    }
}

impl From<Vec<u32>> for OffspringVector {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

impl fmt::Display for OffspringVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Split rate and offspring distribution of one type.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeLaw {
    pub theta: f64,
    pub offspring: Vec<(OffspringVector, f64)>,
}

impl TypeLaw {
    pub fn new(theta: f64, offspring: Vec<(OffspringVector, f64)>) -> Self {
        Self { theta, offspring }
    }

    /// Probability of producing `j`, zero outside the support.
    pub fn probability(&self, j: &OffspringVector) -> f64 {
        self.offspring
            .iter()
            .find(|(v, _)| v == j)
            .map_or(0.0, |&(_, p)| p)
    }

    pub(crate) fn position(&self, j: &OffspringVector) -> Option<usize> {
        self.offspring.iter().position(|(v, _)| v == j)
    }
}

/// A validated `d`-type branching specification.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessSpec {
    laws: Vec<TypeLaw>,
}

impl ProcessSpec {
    /// Validates `laws` as a `d`-type specification.
    ///
    /// Entries with probability exactly zero are dropped.
    pub fn new(d: usize, laws: Vec<TypeLaw>) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptySpec);
        }
        if laws.len() != d {
            return Err(Error::LawCount {
                expected: d,
                found: laws.len(),
            });
        }
        let mut validated = Vec::with_capacity(d);
        for (k, law) in laws.into_iter().enumerate() {
            if !(law.theta.is_finite() && law.theta > 0.0) {
                return Err(Error::InvalidRate {
                    ty: k,
                    theta: law.theta,
                });
            }
            let unit = OffspringVector::unit(d, k);
            let mut seen = BTreeSet::new();
            let mut sum = 0.0;
            let mut offspring = Vec::with_capacity(law.offspring.len());
            for (j, p) in law.offspring {
                if j.dim() != d {
                    return Err(Error::DimensionMismatch {
                        ty: k,
                        j: j.to_string(),
                        found: j.dim(),
                        expected: d,
                    });
                }
                if !(p.is_finite() && (0.0..=1.0).contains(&p)) {
                    return Err(Error::InvalidProbability {
                        ty: k,
                        j: j.to_string(),
                        p,
                    });
                }
                if !seen.insert(j.clone()) {
                    return Err(Error::DuplicateOffspring {
                        ty: k,
                        j: j.to_string(),
                    });
                }
                if p == 0.0 {
                    continue;
                }
                if j == unit {
                    return Err(Error::NoChangeSplit {
                        ty: k,
                        j: j.to_string(),
                    });
                }
                sum += p;
                offspring.push((j, p));
            }
            if (sum - 1.0).abs() > PROBABILITY_SUM_TOL {
                return Err(Error::ProbabilitySum { ty: k, sum });
            }
            validated.push(TypeLaw {
                theta: law.theta,
                offspring,
            });
        }
        Ok(Self { laws: validated })
    }

    pub fn dim(&self) -> usize {
        self.laws.len()
    }

    pub fn laws(&self) -> &[TypeLaw] {
        &self.laws
    }

    pub fn law(&self, k: usize) -> Result<&TypeLaw> {
        self.laws.get(k).ok_or(Error::TypeOutOfRange {
            ty: k,
            d: self.dim(),
        })
    }

    pub fn theta_max(&self) -> f64 {
        self.laws.iter().map(|l| l.theta).fold(0.0, f64::max)
    }

    pub fn theta_sum(&self) -> f64 {
        self.laws.iter().map(|l| l.theta).sum()
    }

    /// Transition rate `b^{(k)}_j`: `theta_k p_j` off the diagonal,
    /// `-theta_k` for `j = e_k`, zero outside the support.
    pub fn rate(&self, k: usize, j: &OffspringVector) -> Result<f64> {
        let law = self.law(k)?;
        if *j == OffspringVector::unit(self.dim(), k) {
            return Ok(-law.theta);
        }
        Ok(law.theta * law.probability(j))
    }

    /// Checks the argument of a generating function.
    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::PointDimension {
                found: x.len(),
                expected: self.dim(),
            });
        }
        if let Some((index, &value)) = x
            .iter()
            .enumerate()
            .find(|(_, &v)| !(0.0..=1.0).contains(&v))
        {
            return Err(Error::PointOutOfBox { index, value });
        }
        Ok(())
    }

    /// `B_k(x)` for `x` in the unit box.
    pub fn gf_b(&self, k: usize, x: &[f64]) -> Result<f64> {
        self.law(k)?;
        self.check_point(x)?;
        Ok(WeightedLaws::unmarked(self).drift(k, x))
    }

    /// The marked generating function `B_k(x, v) + B̄_k(x)`: marked vectors
    /// carry their mark value as an extra factor.
    pub fn gf_b_marked(
        &self,
        marks: &MarkedSets,
        vals: &MarkAssignment,
        k: usize,
        x: &[f64],
    ) -> Result<f64> {
        self.law(k)?;
        self.check_point(x)?;
        Ok(WeightedLaws::new(self, marks, vals)?.drift(k, x))
    }

    /// Jacobian `M_ij = dB_i/dx_j` at `x`, together with its Perron root.
    pub fn jacobian(&self, x: &[f64]) -> Result<MeanMatrix> {
        self.check_point(x)?;
        Ok(self.jacobian_unchecked(x))
    }

    pub(crate) fn jacobian_unchecked(&self, x: &[f64]) -> MeanMatrix {
        let d = self.dim();
        let mut entries = vec![0.0; d * d];
        for (i, law) in self.laws.iter().enumerate() {
            for j in 0..d {
                let mut s: f64 = law
                    .offspring
                    .iter()
                    .map(|(v, p)| p * v.monomial_partial(x, j))
                    .sum();
                if i == j {
                    s -= 1.0;
                }
                entries[i * d + j] = law.theta * s;
            }
        }
        MeanMatrix::new(d, entries)
    }

    /// Classifies the process by the sign of `rho(1)` against `tol`.
    pub fn classify(&self, tol: f64) -> Criticality {
        let rho_one = self.jacobian_unchecked(&vec![1.0; self.dim()]).rho();
        Criticality::from_rho(rho_one, tol)
    }

    /// Whether some power `(N + cI)^m`, `m <= d`, of the shifted mean matrix
    /// at 1 is entrywise positive.
    pub fn is_positively_regular(&self) -> bool {
        self.jacobian_unchecked(&vec![1.0; self.dim()])
            .shifted_is_primitive()
    }
}

/// Free-function form of [`ProcessSpec::new`].
pub fn validate_spec(d: usize, laws: Vec<TypeLaw>) -> Result<ProcessSpec> {
    ProcessSpec::new(d, laws)
}
