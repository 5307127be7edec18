//! Exact simulation of the population together with its event counters.
//!
//! The augmented chain pairs the population vector `x` with one counter per
//! marked offspring vector. From state `x` the next split happens after an
//! exponential time with rate `sum_k x_k theta_k`; the splitting type is `k`
//! with probability proportional to `x_k theta_k`; its offspring `j` is drawn
//! from law `k`; the population becomes `x - e_k + j` and the counter of
//! `(k, j)` is incremented when `j` is in `R_k`.
//!
//! Every replica owns a ChaCha stream selected by its index under a master
//! seed, so estimates do not depend on how replicas are spread over threads.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{MarkAssignment, MarkedSets, OffspringVector, ProcessSpec};
use crate::pgf::StartState;

pub const DEFAULT_MAX_POP: u64 = 1_000_000;

/// Estimates with more truncated replicas than this fraction are unreliable.
pub const TRUNCATION_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub x: Vec<u64>,
    /// `counters[k][r]` counts splits of type `k` into the `r`-th vector of `R_k`.
    pub counters: Vec<Vec<u64>>,
    pub clock: f64,
}

impl ChainState {
    pub fn new(start: &StartState, marks: &MarkedSets) -> Self {
        Self {
            x: start.counts().to_vec(),
            counters: marks.sets().iter().map(|s| vec![0; s.len()]).collect(),
            clock: 0.0,
        }
    }

    pub fn population(&self) -> u64 {
        self.x.iter().sum()
    }

    pub fn is_absorbed(&self) -> bool {
        self.population() == 0
    }

    /// Counters in [`MarkedSets::keys`] order.
    pub fn flat_counters(&self) -> Vec<u64> {
        self.counters.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutcome {
    pub state: ChainState,
    pub absorbed: bool,
    pub tau: Option<f64>,
    pub truncated: bool,
}

/// One split event as applied by [`Simulator::step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitEvent {
    pub ty: usize,
    /// Index into the offspring list of law `ty`.
    pub offspring: usize,
    /// Position in `R_ty` when the offspring vector is marked.
    pub mark: Option<usize>,
    pub holding_time: f64,
}

/// A transition out of a chain state with its rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub ty: usize,
    pub offspring: OffspringVector,
    pub x: Vec<u64>,
    pub counters: Vec<Vec<u64>>,
    pub rate: f64,
}

/// Precomputed sampling tables for one specification and marking.
#[derive(Debug, Clone)]
pub struct Simulator<'a> {
    spec: &'a ProcessSpec,
    marks: MarkedSets,
    alias: Vec<WeightedAliasIndex<f64>>,
    mark_of: Vec<Vec<Option<usize>>>,
    // offspring increments as u64, per type and entry
    children: Vec<Vec<Vec<u64>>>,
}

impl<'a> Simulator<'a> {
    pub fn new(spec: &'a ProcessSpec, marks: &MarkedSets) -> Result<Self> {
        let marks = MarkedSets::new(spec, marks.sets().to_vec())?;
        let alias =
            spec.laws()
                .iter()
                .enumerate()
                .map(|(k, law)| {
                    WeightedAliasIndex::new(law.offspring.iter().map(|&(_, p)| p).collect())
                        .map_err(|e| Error::InvalidParameter {
                            name: "offspring",
                            reason: format!("type {k}: {e}"),
                        })
                })
                .collect::<Result<Vec<_>>>()?;
        let mark_of = spec
            .laws()
            .iter()
            .enumerate()
            .map(|(k, law)| {
                law.offspring
                    .iter()
                    .map(|(j, _)| marks.index_of(k, j))
                    .collect()
            })
            .collect();
        let children = spec
            .laws()
            .iter()
            .map(|law| {
                law.offspring
                    .iter()
                    .map(|(j, _)| j.counts().iter().map(|&c| u64::from(c)).collect())
                    .collect()
            })
            .collect();
        Ok(Self {
            spec,
            marks,
            alias,
            mark_of,
            children,
        })
    }

    pub fn spec(&self) -> &ProcessSpec {
        self.spec
    }

    pub fn marks(&self) -> &MarkedSets {
        &self.marks
    }

    /// `sum_k x_k theta_k`.
    pub fn total_rate(&self, x: &[u64]) -> f64 {
        x.iter()
            .zip(self.spec.laws())
            .map(|(&n, law)| n as f64 * law.theta)
            .sum()
    }

    /// All transitions out of `state` with their rates `x_k theta_k p_j`.
    pub fn event_rates(&self, state: &ChainState) -> Vec<Transition> {
        let mut out = Vec::new();
        for (k, law) in self.spec.laws().iter().enumerate() {
            if state.x[k] == 0 {
                continue;
            }
            for (e, (j, p)) in law.offspring.iter().enumerate() {
                let mut x = state.x.clone();
                x[k] -= 1;
                for (xi, &c) in x.iter_mut().zip(&self.children[k][e]) {
                    *xi += c;
                }
                let mut counters = state.counters.clone();
                if let Some(r) = self.mark_of[k][e] {
                    counters[k][r] += 1;
                }
                out.push(Transition {
                    ty: k,
                    offspring: j.clone(),
                    x,
                    counters,
                    rate: state.x[k] as f64 * (law.theta * p),
                });
            }
        }
        out
    }

    /// Fires one split event in place.
    pub fn step<R: Rng + ?Sized>(&self, state: &mut ChainState, rng: &mut R) -> Result<SplitEvent> {
        let lambda = self.total_rate(&state.x);
        if lambda <= 0.0 {
            return Err(Error::Absorbed);
        }
        let holding_time: f64 = Exp1.sample(rng);
        let holding_time = holding_time / lambda;
        let ty = self.pick_type(&state.x, lambda, rng);
        let offspring = self.alias[ty].sample(rng);
        state.clock += holding_time;
        let mark = self.apply(state, ty, offspring);
        Ok(SplitEvent {
            ty,
            offspring,
            mark,
            holding_time,
        })
    }

    fn pick_type<R: Rng + ?Sized>(&self, x: &[u64], lambda: f64, rng: &mut R) -> usize {
        let target = rng.random::<f64>() * lambda;
        let mut acc = 0.0;
        let mut last = 0;
        for (k, (&n, law)) in x.iter().zip(self.spec.laws()).enumerate() {
            if n == 0 {
                continue;
            }
            acc += n as f64 * law.theta;
            last = k;
            if target < acc {
                return k;
            }
        }
        last
    }

    fn apply(&self, state: &mut ChainState, ty: usize, entry: usize) -> Option<usize> {
        state.x[ty] -= 1;
        for (xi, &c) in state.x.iter_mut().zip(&self.children[ty][entry]) {
            *xi += c;
        }
        let mark = self.mark_of[ty][entry];
        if let Some(r) = mark {
            state.counters[ty][r] += 1;
        }
        mark
    }

    /// Runs from `start` until the clock passes `horizon` (state frozen at
    /// the horizon), the population dies out, or it exceeds `max_pop`.
    pub fn run<R: Rng + ?Sized>(
        &self,
        start: &StartState,
        horizon: f64,
        max_pop: u64,
        rng: &mut R,
    ) -> SimOutcome {
        let mut state = ChainState::new(start, &self.marks);
        loop {
            if state.is_absorbed() {
                let tau = Some(state.clock);
                return SimOutcome {
                    state,
                    absorbed: true,
                    tau,
                    truncated: false,
                };
            }
            if state.population() > max_pop {
                return SimOutcome {
                    state,
                    absorbed: false,
                    tau: None,
                    truncated: true,
                };
            }
            let lambda = self.total_rate(&state.x);
            let dt: f64 = Exp1.sample(rng);
            let dt = dt / lambda;
            if state.clock + dt > horizon {
                state.clock = horizon;
                return SimOutcome {
                    state,
                    absorbed: false,
                    tau: None,
                    truncated: false,
                };
            }
            let ty = self.pick_type(&state.x, lambda, rng);
            let entry = self.alias[ty].sample(rng);
            state.clock += dt;
            self.apply(&mut state, ty, entry);
        }
    }
}

/// Stream `replica` of the master `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub replicas: u64,
    pub seed: u64,
    pub max_pop: u64,
    /// `None` uses every available core; `Some(1)` runs serially.
    pub threads: Option<usize>,
}

impl McConfig {
    pub fn new(replicas: u64, seed: u64) -> Self {
        Self {
            replicas,
            seed,
            max_pop: DEFAULT_MAX_POP,
            threads: None,
        }
    }

    pub fn with_max_pop(mut self, max_pop: u64) -> Self {
        self.max_pop = max_pop;
        self
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    fn check(&self, start: &StartState) -> Result<()> {
        if self.replicas == 0 {
            return Err(Error::InvalidParameter {
                name: "replicas",
                reason: "must be at least 1".into(),
            });
        }
        if self.max_pop < start.total() {
            return Err(Error::InvalidParameter {
                name: "max_pop",
                reason: format!(
                    "cap {} is below the initial population {}",
                    self.max_pop,
                    start.total()
                ),
            });
        }
        Ok(())
    }
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(replicas)`.
    pub std_error: f64,
    pub replicas: u64,
    pub seed: u64,
    pub truncated: u64,
}

impl McEstimate {
    fn from_samples(samples: impl Iterator<Item = f64>, seed: u64, truncated: u64) -> Self {
        let mut n = 0u64;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for s in samples {
            n += 1;
            sum += s;
            sum_sq += s * s;
        }
        Self::from_moments(n, sum, sum_sq, seed, truncated)
    }

    fn from_moments(n: u64, sum: f64, sum_sq: f64, seed: u64, truncated: u64) -> Self {
        let nf = n as f64;
        let mean = if n > 0 { sum / nf } else { f64::NAN };
        let std_error = if n > 1 {
            let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
            (var / nf).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            replicas: n,
            seed,
            truncated,
        }
    }

    pub fn truncated_fraction(&self) -> f64 {
        self.truncated as f64 / self.replicas.max(1) as f64
    }

    /// False when more than [`TRUNCATION_THRESHOLD`] of the replicas hit the
    /// population cap.
    pub fn is_reliable(&self) -> bool {
        self.truncated_fraction() <= TRUNCATION_THRESHOLD
    }

    /// `|mean - reference| <= k * std_error`.
    pub fn agrees_with(&self, reference: f64, k: f64) -> bool {
        (self.mean - reference).abs() <= k * self.std_error
    }
}

/// Monte Carlo estimate of `E[v^{counters(t)} | X(0) = start]`.
pub fn mc_pgf(
    sim: &Simulator<'_>,
    vals: &MarkAssignment,
    start: &StartState,
    t: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    start.check(sim.spec())?;
    cfg.check(start)?;
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be nonnegative, got {t}"),
        });
    }
    // validates the assignment shape against the marks
    MarkAssignment::new(sim.marks(), vals.values().to_vec())?;
    let samples = exec::map_indexed(cfg.replicas, cfg.threads, |i| {
        let mut rng = replica_rng(cfg.seed, i);
        let out = sim.run(start, t, cfg.max_pop, &mut rng);
        (vals.weight(&out.state.counters), out.truncated)
    });
    let truncated = samples.iter().filter(|s| s.1).count() as u64;
    Ok(McEstimate::from_samples(
        samples.iter().map(|s| s.0),
        cfg.seed,
        truncated,
    ))
}

/// Counter vectors at extinction over many replicas.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtinctionCounts {
    pub replicas: u64,
    pub seed: u64,
    pub absorbed: u64,
    /// Replicas that exceeded the population cap before dying out.
    pub truncated: u64,
    /// Flattened counter vector (in [`MarkedSets::keys`] order) to number of
    /// absorbed replicas ending with it.
    pub histogram: BTreeMap<Vec<u64>, u64>,
}

impl ExtinctionCounts {
    /// Empirical law of the counters among absorbed replicas.
    pub fn pmf(&self) -> BTreeMap<Vec<u64>, f64> {
        let n = self.absorbed.max(1) as f64;
        self.histogram
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / n))
            .collect()
    }

    pub fn absorbed_fraction(&self) -> McEstimate {
        let a = self.absorbed as f64;
        McEstimate::from_moments(self.replicas, a, a, self.seed, self.truncated)
    }

    fn weighted_moments(&self, vals: &MarkAssignment) -> (f64, f64) {
        let flat: Vec<f64> = vals.values().iter().flatten().copied().collect();
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for (l, &c) in &self.histogram {
            let w: f64 = flat
                .iter()
                .zip(l)
                .map(|(&v, &n)| v.powi(i32::try_from(n).unwrap_or(i32::MAX)))
                .product();
            sum += c as f64 * w;
            sum_sq += c as f64 * w * w;
        }
        (sum, sum_sq)
    }

    /// Estimate of `E[v^{counters(tau)}; tau < inf]`, averaging over every
    /// replica with escaped ones contributing zero.
    pub fn pgf(&self, vals: &MarkAssignment) -> McEstimate {
        let (sum, sum_sq) = self.weighted_moments(vals);
        McEstimate::from_moments(self.replicas, sum, sum_sq, self.seed, self.truncated)
    }

    /// Estimate of `E[v^{counters(tau)} | tau < inf]` over absorbed replicas.
    pub fn conditional_pgf(&self, vals: &MarkAssignment) -> McEstimate {
        let (sum, sum_sq) = self.weighted_moments(vals);
        McEstimate::from_moments(self.absorbed, sum, sum_sq, self.seed, self.truncated)
    }
}

/// Runs replicas from `start` until extinction or the population cap.
pub fn mc_extinction_counts(
    sim: &Simulator<'_>,
    start: &StartState,
    cfg: &McConfig,
) -> Result<ExtinctionCounts> {
    start.check(sim.spec())?;
    cfg.check(start)?;
    let outcomes = exec::map_indexed(cfg.replicas, cfg.threads, |i| {
        let mut rng = replica_rng(cfg.seed, i);
        let out = sim.run(start, f64::INFINITY, cfg.max_pop, &mut rng);
        out.absorbed.then(|| out.state.flat_counters())
    });
    let mut histogram = BTreeMap::new();
    let mut absorbed = 0;
    for counters in outcomes.into_iter().flatten() {
        absorbed += 1;
        *histogram.entry(counters).or_insert(0) += 1;
    }
    Ok(ExtinctionCounts {
        replicas: cfg.replicas,
        seed: cfg.seed,
        absorbed,
        truncated: cfg.replicas - absorbed,
        histogram,
    })
}
