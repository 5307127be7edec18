use std::collections::{BTreeMap, BTreeSet};

use super::{OffspringVector, ProcessSpec};
use crate::error::{Error, Result};

/// Per-type sets `R_k` of offspring vectors whose occurrences are counted.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MarkedSets {
    sets: Vec<Vec<OffspringVector>>,
}

impl MarkedSets {
    /// Validates `sets` against the support of `spec`. Sets may be empty.
    pub fn new(spec: &ProcessSpec, sets: Vec<Vec<OffspringVector>>) -> Result<Self> {
        if sets.len() != spec.dim() {
            return Err(Error::MarkSetCount {
                expected: spec.dim(),
                found: sets.len(),
            });
        }
        for (k, set) in sets.iter().enumerate() {
            let law = &spec.laws()[k];
            let mut seen = BTreeSet::new();
            for j in set {
                if law.position(j).is_none() {
                    return Err(Error::MarkNotInSupport {
                        ty: k,
                        j: j.to_string(),
                    });
                }
                if !seen.insert(j) {
                    return Err(Error::DuplicateMark {
                        ty: k,
                        j: j.to_string(),
                    });
                }
            }
        }
        Ok(Self { sets })
    }

    /// No marked vectors at all.
    pub fn empty(d: usize) -> Self {
        Self {
            sets: vec![Vec::new(); d],
        }
    }

    /// `R_k = {0}` for every type that can die childless.
    pub fn pure_death(spec: &ProcessSpec) -> Self {
        let zero = OffspringVector::zero(spec.dim());
        Self::filtered(spec, |_| zero.clone())
    }

    /// `R_k = {2 e_k}` for every type that can produce two copies of itself.
    pub fn twins(spec: &ProcessSpec) -> Self {
        let d = spec.dim();
        Self::filtered(spec, |k| {
            let mut v = vec![0; d];
            v[k] = 2;
            OffspringVector::new(v)
        })
    }

    fn filtered(spec: &ProcessSpec, target: impl Fn(usize) -> OffspringVector) -> Self {
        let sets = spec
            .laws()
            .iter()
            .enumerate()
            .map(|(k, law)| {
                let j = target(k);
                if law.position(&j).is_some() {
                    vec![j]
                } else {
                    Vec::new()
                }
            })
            .collect();
        Self { sets }
    }

    pub fn dim(&self) -> usize {
        self.sets.len()
    }

    pub fn sets(&self) -> &[Vec<OffspringVector>] {
        &self.sets
    }

    pub fn set(&self, k: usize) -> &[OffspringVector] {
        &self.sets[k]
    }

    /// Total number of counters `r_1 + ... + r_d`.
    pub fn total(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Position of `j` within `R_k`.
    pub fn index_of(&self, k: usize, j: &OffspringVector) -> Option<usize> {
        self.sets.get(k)?.iter().position(|v| v == j)
    }

    pub fn keys(&self) -> impl Iterator<Item = MarkKey> + '_ {
        self.sets
            .iter()
            .enumerate()
            .flat_map(|(ty, set)| set.iter().map(move |j| MarkKey { ty, j: j.clone() }))
    }
}

/// Identifies one marked vector: type index and offspring vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MarkKey {
    pub ty: usize,
    pub j: OffspringVector,
}

impl MarkKey {
    pub fn new(ty: usize, j: OffspringVector) -> Self {
        Self { ty, j }
    }
}

/// One value in `[0, 1]` per marked vector, aligned with a [`MarkedSets`].
#[derive(Debug, Clone, PartialEq)]
pub struct MarkAssignment {
    values: Vec<Vec<f64>>,
}

impl MarkAssignment {
    pub fn new(marks: &MarkedSets, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != marks.dim() {
            return Err(Error::MarkSetCount {
                expected: marks.dim(),
                found: values.len(),
            });
        }
        for (k, (vals, set)) in values.iter().zip(marks.sets()).enumerate() {
            if vals.len() != set.len() {
                let j = set
                    .get(vals.len())
                    .map_or_else(|| "<extra>".to_string(), ToString::to_string);
                return Err(Error::MissingMarkValue { ty: k, j });
            }
            for (&v, j) in vals.iter().zip(set) {
                check_value(k, j, v, false)?;
            }
        }
        Ok(Self { values })
    }

    pub fn ones(marks: &MarkedSets) -> Self {
        Self::uniform(marks, 1.0)
    }

    /// Every marked vector gets the same value.
    ///
    /// # Panics
    ///
    /// If `v` is outside `[0, 1]`.
    pub fn uniform(marks: &MarkedSets, v: f64) -> Self {
        assert!((0.0..=1.0).contains(&v), "mark value {v} outside [0, 1]");
        Self {
            values: marks.sets().iter().map(|s| vec![v; s.len()]).collect(),
        }
    }

    /// Builds an assignment from keyed values. Marked vectors missing from
    /// `map` take `default`, or produce an error when `default` is `None`.
    pub fn from_map(
        marks: &MarkedSets,
        map: &BTreeMap<MarkKey, f64>,
        default: Option<f64>,
    ) -> Result<Self> {
        for key in map.keys() {
            if marks.index_of(key.ty, &key.j).is_none() {
                return Err(Error::UnknownMark {
                    ty: key.ty,
                    j: key.j.to_string(),
                });
            }
        }
        let mut values = Vec::with_capacity(marks.dim());
        for (k, set) in marks.sets().iter().enumerate() {
            let mut row = Vec::with_capacity(set.len());
            for j in set {
                let v = match map.get(&MarkKey::new(k, j.clone())) {
                    Some(&v) => v,
                    None => default.ok_or_else(|| Error::MissingMarkValue {
                        ty: k,
                        j: j.to_string(),
                    })?,
                };
                check_value(k, j, v, false)?;
                row.push(v);
            }
            values.push(row);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, k: usize, r: usize) -> f64 {
        self.values[k][r]
    }

    pub fn is_all_ones(&self) -> bool {
        self.values.iter().flatten().all(|&v| v == 1.0)
    }

    /// Errors unless every value lies in `[0, 1)`.
    pub fn require_below_one(&self, marks: &MarkedSets) -> Result<()> {
        for (k, (vals, set)) in self.values.iter().zip(marks.sets()).enumerate() {
            for (&v, j) in vals.iter().zip(set) {
                check_value(k, j, v, true)?;
            }
        }
        Ok(())
    }

    /// `prod v^{counter}` over all marked vectors.
    pub fn weight(&self, counters: &[Vec<u64>]) -> f64 {
        self.values
            .iter()
            .zip(counters)
            .flat_map(|(v, c)| v.iter().zip(c))
            .map(|(&v, &c)| pow_count(v, c))
            .product()
    }
}

#[inline]
fn pow_count(v: f64, c: u64) -> f64 {
    match i32::try_from(c) {
        Ok(c) => v.powi(c),
        Err(_) => v.powf(c as f64),
    }
}

fn check_value(k: usize, j: &OffspringVector, v: f64, strict: bool) -> Result<()> {
    let ok = if strict {
        (0.0..1.0).contains(&v)
    } else {
        (0.0..=1.0).contains(&v)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::MarkValueOutOfRange {
            ty: k,
            j: j.to_string(),
            value: v,
            range: if strict { "[0, 1)" } else { "[0, 1]" },
        })
    }
}

/// Offspring laws with each marked entry scaled by its mark value.
///
/// `offspring_pgf(k, x)` is `sum_j p_j m_j x^j` with `m_j = 1` for unmarked
/// vectors, and `drift(k, x) = theta_k (offspring_pgf(k, x) - x_k)` is the
/// marked generating function.
#[derive(Debug, Clone)]
pub struct WeightedLaws<'a> {
    spec: &'a ProcessSpec,
    weights: Vec<Vec<f64>>,
}

impl<'a> WeightedLaws<'a> {
    pub fn new(spec: &'a ProcessSpec, marks: &MarkedSets, vals: &MarkAssignment) -> Result<Self> {
        if marks.dim() != spec.dim() {
            return Err(Error::MarkSetCount {
                expected: spec.dim(),
                found: marks.dim(),
            });
        }
        if vals.values().len() != marks.dim() {
            return Err(Error::MarkSetCount {
                expected: marks.dim(),
                found: vals.values().len(),
            });
        }
        let mut weights: Vec<Vec<f64>> = spec
            .laws()
            .iter()
            .map(|l| l.offspring.iter().map(|&(_, p)| p).collect())
            .collect();
        for (k, set) in marks.sets().iter().enumerate() {
            if vals.values()[k].len() != set.len() {
                return Err(Error::MissingMarkValue {
                    ty: k,
                    j: set
                        .get(vals.values()[k].len())
                        .map_or_else(String::new, ToString::to_string),
                });
            }
            for (r, j) in set.iter().enumerate() {
                let idx = spec.laws()[k]
                    .position(j)
                    .ok_or_else(|| Error::MarkNotInSupport {
                        ty: k,
                        j: j.to_string(),
                    })?;
                weights[k][idx] *= vals.get(k, r);
            }
        }
        Ok(Self { spec, weights })
    }

    pub fn unmarked(spec: &'a ProcessSpec) -> Self {
        let weights = spec
            .laws()
            .iter()
            .map(|l| l.offspring.iter().map(|&(_, p)| p).collect())
            .collect();
        Self { spec, weights }
    }

    pub fn spec(&self) -> &'a ProcessSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    #[inline]
    pub fn offspring_pgf(&self, k: usize, x: &[f64]) -> f64 {
        self.spec.laws()[k]
            .offspring
            .iter()
            .zip(&self.weights[k])
            .map(|((j, _), &w)| w * j.monomial(x))
            .sum()
    }

    #[inline]
    pub fn drift(&self, k: usize, x: &[f64]) -> f64 {
        self.spec.laws()[k].theta * (self.offspring_pgf(k, x) - x[k])
    }

    pub fn drift_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.drift(k, x);
        }
    }

    /// The nonlinear part `theta_k * offspring_pgf(k, x)`, i.e. the drift
    /// with the linear `-theta_k x_k` term removed.
    pub fn reaction(&self, k: usize, x: &[f64]) -> f64 {
        self.spec.laws()[k].theta * self.offspring_pgf(k, x)
    }

    /// Lipschitz constant of [`Self::reaction`] in the l1 norm over the unit
    /// box: `max_k sum_i d reaction_k / d x_i` evaluated at 1, where every
    /// coefficient is nonnegative.
    pub fn reaction_lipschitz(&self) -> f64 {
        let d = self.dim();
        let ones = vec![1.0; d];
        (0..d)
            .map(|k| {
                let law = &self.spec.laws()[k];
                (0..d)
                    .map(|i| {
                        law.offspring
                            .iter()
                            .zip(&self.weights[k])
                            .map(|((j, _), &w)| w * j.monomial_partial(&ones, i))
                            .sum::<f64>()
                    })
                    .sum::<f64>()
                    * law.theta
            })
            .fold(0.0, f64::max)
    }
}
