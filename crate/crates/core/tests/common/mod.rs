#![allow(dead_code)]

use kneser::kneser::enumerate_k_subsets;
use kneser::{Coloring, Direction, KneserInstance};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// The canonical coloring after relabeling the ground set by a seeded
/// permutation: `S` gets `min(pi(S)) - 1`, capped at `d`. Still proper, and
/// any two subsets of one class share an element.
pub fn permuted_canonical(instance: &KneserInstance, seed: u64) -> Coloring {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pi: Vec<usize> = (1..=instance.n()).collect();
    pi.shuffle(&mut rng);
    let d = instance.d();
    let raw = enumerate_k_subsets(instance)
        .unwrap()
        .iter()
        .map(|s| {
            let least = s.members().iter().map(|&m| pi[m - 1]).min().unwrap();
            (least - 1).min(d) as u32
        })
        .collect();
    Coloring::densified(*instance, raw).unwrap()
}

pub fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Direction {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if let Ok(x) = Direction::new(v) {
            return x;
        }
    }
}
