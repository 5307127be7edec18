#![allow(dead_code)]

use branching_marks::oracle::{example_spec, ExampleParams};
use branching_marks::{MarkAssignment, MarkedSets, OffspringVector, ProcessSpec, TypeLaw};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(p: f64) -> (ProcessSpec, MarkedSets) {
    let spec = example_spec(ExampleParams::new(p, p).unwrap());
    let marks = MarkedSets::pure_death(&spec);
    (spec, marks)
}

/// A random spec with 1 to 3 types, offspring counts in 0..=2 per type.
pub fn random_spec(seed: u64) -> ProcessSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = rng.random_range(1..=3usize);
    let mut candidates: Vec<Vec<u32>> = vec![vec![]];
    for _ in 0..d {
        candidates = candidates
            .into_iter()
            .flat_map(|v| {
                (0..=2u32).map(move |c| {
                    let mut w = v.clone();
                    w.push(c);
                    w
                })
            })
            .collect();
    }
    let laws = (0..d)
        .map(|k| {
            let unit = OffspringVector::unit(d, k);
            let mut pool: Vec<OffspringVector> = candidates
                .iter()
                .cloned()
                .map(OffspringVector::new)
                .filter(|v| *v != unit)
                .collect();
            pool.shuffle(&mut rng);
            let size = rng.random_range(1..=pool.len().min(4));
            let support = &pool[..size];
            let weights: Vec<f64> = support
                .iter()
                .map(|_| rng.random_range(0.05..1.0))
                .collect();
            let total: f64 = weights.iter().sum();
            let offspring = support
                .iter()
                .cloned()
                .zip(weights.iter().map(|w| w / total))
                .collect();
            TypeLaw::new(rng.random_range(0.2..3.0), offspring)
        })
        .collect();
    ProcessSpec::new(d, laws).expect("generated spec is valid")
}

/// A random subset of each support.
pub fn random_marks(spec: &ProcessSpec, seed: u64) -> MarkedSets {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let sets = spec
        .laws()
        .iter()
        .map(|law| {
            law.offspring
                .iter()
                .filter(|_| rng.random_bool(0.5))
                .map(|(j, _)| j.clone())
                .collect()
        })
        .collect();
    MarkedSets::new(spec, sets).unwrap()
}

/// Random values in `[0, hi)`.
pub fn random_vals(marks: &MarkedSets, seed: u64, hi: f64) -> MarkAssignment {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x51ed_270b);
    let values = marks
        .sets()
        .iter()
        .map(|s| s.iter().map(|_| rng.random_range(0.0..hi)).collect())
        .collect();
    MarkAssignment::new(marks, values).unwrap()
}
