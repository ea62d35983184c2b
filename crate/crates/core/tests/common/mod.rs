#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ransomgame_core::{GameInstance, Reputation};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Instance with decreasing losses and every value in (0, 1000].
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> GameInstance {
    let mut losses: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..=1000.0)).collect();
    losses.sort_by(|a, b| b.total_cmp(a));
    let sales = losses.iter().map(|l| l * rng.random_range(0.05..=1.0)).collect();
    let ransoms = (0..n).map(|_| rng.random_range(1.0..=1000.0)).collect();
    GameInstance::new(
        ransoms,
        rng.random_range(1.0..=1000.0),
        rng.random_range(0.0..=50.0),
        losses,
        sales,
    )
    .unwrap()
}

/// Instance whose ransoms are small enough that payment is often rational.
pub fn payable_instance(rng: &mut ChaCha8Rng, n: usize) -> GameInstance {
    let v = rng.random_range(100.0..=1000.0);
    let mut losses: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=v)).collect();
    losses.sort_by(|a, b| b.total_cmp(a));
    let sales = losses.iter().map(|l| l * rng.random_range(0.0..=1.0)).collect();
    let mut ransoms = vec![rng.random_range(1.0..=v)];
    for _ in 1..n {
        ransoms.push(rng.random_range(1.0..=v / n as f64));
    }
    GameInstance::new(ransoms, v, rng.random_range(0.0..=20.0), losses, sales).unwrap()
}

/// Reputation with every probability strictly inside (0, 1).
pub fn interior_reputation(rng: &mut ChaCha8Rng, n: usize) -> Reputation {
    Reputation::new(
        rng.random_range(0.01..0.99),
        (0..n).map(|_| rng.random_range(0.01..0.99)).collect(),
    )
    .unwrap()
}
