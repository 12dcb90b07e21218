//! Two-point concentration of the maximum degree Δₙ in the sparse regime
//! r_n = n^{−0.64}: almost all of the mass sits on two consecutive values.
//!
//! Run with: cargo run --example max_degree_concentration

use std::collections::BTreeMap;

use rgg_extremes::rgg::degree_profile;
use rgg_extremes::sampling::{sample_binomial, Density, RngStream};
use rgg_extremes::NormSpec;

fn main() {
    let (n, d, replicates, seed) = (30_000usize, 2, 300, 7u64);
    let r = (n as f64).powf(-0.64);
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for i in 0..replicates {
        let cloud = sample_binomial(n, d, Density::UniformCube, RngStream::new(seed, i as u64));
        let profile = degree_profile(&cloud, r, NormSpec::Euclidean).unwrap();
        *hist.entry(profile.max_degree).or_default() += 1;
    }
    println!("n = {n}, r = n^-0.64 = {r:.5}, {replicates} replicates");
    for (v, c) in &hist {
        let frac = *c as f64 / replicates as f64;
        println!("  Δₙ = {v}: {frac:>6.3} {}", "#".repeat((60.0 * frac) as usize));
    }
    let (mut best_pair, mut best_mass) = (0usize, 0.0);
    let mass = |v: usize| hist.get(&v).copied().unwrap_or(0) as f64 / replicates as f64;
    for v in 0..=hist.keys().copied().max().unwrap_or(0) {
        if mass(v) + mass(v + 1) > best_mass {
            best_mass = mass(v) + mass(v + 1);
            best_pair = v;
        }
    }
    println!("best consecutive pair {{{best_pair}, {}}} carries mass {best_mass:.3}", best_pair + 1);
}
