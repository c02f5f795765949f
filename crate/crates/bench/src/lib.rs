//! Fixture models shared by the criterion benchmarks.

use chemostat_core::{monod_species, ChemostatModel, ScalarFn};

/// Two linear-yield Monod species; `c2` is the competitor's yield slope.
pub fn two_species(c2: f64) -> ChemostatModel {
    let s1 = monod_species(1.0, 0.1, 0.6, ScalarFn::Polynomial(vec![1.0, 4.0])).unwrap();
    let s2 = monod_species(1.0, 0.15, 0.55, ScalarFn::Polynomial(vec![1.0, c2])).unwrap();
    ChemostatModel::normalized(vec![s1, s2]).unwrap()
}

/// One species with yield `1 + 46·S²`, which has two nested limit cycles.
pub fn oscillator() -> ChemostatModel {
    let y = ScalarFn::Polynomial(vec![1.0, 0.0, 46.0]);
    ChemostatModel::normalized(vec![monod_species(2.0, 0.58, 1.0, y).unwrap()]).unwrap()
}

/// `n` constant-yield Monod species with increasing break-even levels.
pub fn many_species(n: usize) -> ChemostatModel {
    let species = (0..n)
        .map(|k| {
            let lambda = 0.1 + 0.8 * k as f64 / n as f64;
            let (a, d) = (2.0, 0.5);
            monod_species(a, lambda * (a - d) / d, d, ScalarFn::constant(1.0 + 0.1 * k as f64)).unwrap()
        })
        .collect();
    ChemostatModel::normalized(species).unwrap()
}
