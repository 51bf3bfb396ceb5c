//! Random irreducible rate graphs and test sources.
//!
//! Graphs are a random Hamiltonian cycle (which makes them strongly
//! connected) plus independent extra arcs; rates are log-uniform.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{RateGraph, ScalarField, StateSet};
use crate::trajectory::sample_rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomGraphConfig {
    pub min_states: usize,
    pub max_states: usize,
    /// Probability of each arc not on the cycle.
    pub extra_arc_probability: f64,
    pub min_rate: f64,
    pub max_rate: f64,
}

impl Default for RandomGraphConfig {
    fn default() -> Self {
        Self {
            min_states: 3,
            max_states: 8,
            extra_arc_probability: 0.4,
            min_rate: 0.1,
            max_rate: 10.0,
        }
    }
}

impl RandomGraphConfig {
    /// Same family with a fixed number of states.
    pub fn with_states(n: usize) -> Self {
        Self {
            min_states: n,
            max_states: n,
            ..Self::default()
        }
    }
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

pub fn random_graph(rng: &mut impl Rng, cfg: &RandomGraphConfig) -> RateGraph {
    let n = rng.random_range(cfg.min_states..=cfg.max_states);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut on_cycle = vec![false; n * n];
    for i in 0..n {
        let (a, b) = (order[i], order[(i + 1) % n]);
        on_cycle[a * n + b] = true;
    }
    let mut arcs = Vec::new();
    for x in 0..n {
        for y in (0..n).filter(|&y| y != x) {
            if on_cycle[x * n + y] || rng.random_bool(cfg.extra_arc_probability) {
                arcs.push((x, y, log_uniform(rng, cfg.min_rate, cfg.max_rate)));
            }
        }
    }
    RateGraph::with_numbered_states(n, arcs).expect("a Hamiltonian cycle is strongly connected")
}

/// Uniform on `[−1, 1]` per state, not centered.
pub fn random_field(rng: &mut impl Rng, n: usize) -> ScalarField {
    ScalarField::new((0..n).map(|_| rng.random_range(-1.0..=1.0)).collect())
}

/// Random subset of `size` states.
pub fn random_subset(rng: &mut impl Rng, n: usize, size: usize) -> StateSet {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    StateSet::from_indices(n, &idx[..size]).expect("indices are in range")
}

/// One generator per instance: instance `i` of `seed` always draws from
/// the same stream.
pub fn instance_rng(seed: u64, i: usize) -> ChaCha8Rng {
    // keep instance streams away from the Monte-Carlo sample streams
    sample_rng(seed ^ 0x9e37_79b9_7f4a_7c15, i as u64)
}

/// `count` graphs from the family, with the generator each was drawn from
/// (for follow-up draws of sources and subsets).
pub fn random_family(seed: u64, count: usize, cfg: &RandomGraphConfig) -> Vec<(RateGraph, ChaCha8Rng)> {
    (0..count)
        .map(|i| {
            let mut rng = instance_rng(seed, i);
            let g = random_graph(&mut rng, cfg);
            (g, rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_is_reproducible_and_in_range() {
        let cfg = RandomGraphConfig::default();
        let a = random_family(5, 20, &cfg);
        let b = random_family(5, 20, &cfg);
        for ((g, _), (h, _)) in a.iter().zip(&b) {
            assert_eq!(g.arcs(), h.arcs());
            assert!((3..=8).contains(&g.n()));
            assert!(g.arcs().iter().all(|a| (0.1..=10.0).contains(&a.rate)));
        }
    }
}
