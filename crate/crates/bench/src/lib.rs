//! Fixtures shared by the criterion benches.

use hvnet_core::dataset::{generate_solution_set, GenConfig};
use hvnet_core::{rng, SolutionSet};

/// A reproducible non-dominated set of exactly `n` points in `[0, 1)^m`.
pub fn fixture(m: usize, n: usize, seed: u64) -> SolutionSet {
    let cfg = GenConfig { max_size: n, ..GenConfig::new(m, 1, seed) };
    let mut rng = rng::seeded(seed);
    loop {
        let set = generate_solution_set(&cfg, &mut rng).expect("generator config is valid");
        if set.len() == n {
            return set;
        }
    }
}
