#![allow(dead_code)]

use migration_core::model::{DistanceMatrix, EconomicProfile, Region};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    if a == b {
        return true;
    }
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

pub fn random_regions(rng: &mut ChaCha8Rng, n: usize) -> Vec<Region> {
    (0..n)
        .map(|i| {
            Region::new(
                format!("r{i:02}"),
                EconomicProfile {
                    population: rng.random_range(1e3..1e6),
                    gdp: rng.random_range(1.0..1e4),
                    wage_rate: rng.random_range(5.0..50.0),
                    unemployment_rate: rng.random_range(0.01..0.3),
                },
            )
            .with_position(rng.random_range(-60.0..60.0), rng.random_range(-170.0..170.0))
        })
        .collect()
}

pub fn random_distances(rng: &mut ChaCha8Rng, regions: &[Region]) -> DistanceMatrix {
    let ids = regions.iter().map(|r| r.id.clone()).collect();
    DistanceMatrix::from_fn(ids, |_, _| rng.random_range(10.0..2000.0))
}
