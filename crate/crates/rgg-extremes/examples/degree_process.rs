//! Fixed-k degree counts: the number of degree-k vertices W_{k,n} at the
//! fixed-k radius schedule converges to a compound Poisson law whose atoms
//! come from the graph atlas. Prints the two pmfs side by side.
//!
//! Run with: cargo run --example degree_process

use rgg_extremes::graph_atlas::Atlas;
use rgg_extremes::limit_laws::radius_fixed_k;
use rgg_extremes::rgg::degree_profile;
use rgg_extremes::sampling::{sample_binomial, Density, RngStream};
use rgg_extremes::stats::{pmf_from_samples, tv_distance, CompoundPoissonLaw};
use rgg_extremes::NormSpec;

fn main() {
    let (n, d, k, beta, replicates, seed) = (10_000, 1, 2, 1.0, 1000, 7u64);
    let atlas = Atlas::build(
        k,
        d,
        NormSpec::Euclidean,
        Density::UniformCube,
        2_000_000,
        RngStream::new(seed, 1 << 40),
    )
    .unwrap();
    let law = CompoundPoissonLaw::new(
        atlas.classes.iter().filter(|c| c.mu > 0.0).map(|c| (c.q, beta * c.mu)).collect(),
    )
    .unwrap();
    println!("atoms (multiplicity, rate): {:?}", law.atoms);

    let r = radius_fixed_k(n, k, d, beta).unwrap();
    let counts: Vec<u64> = (0..replicates)
        .map(|i| {
            let cloud = sample_binomial(n, d, Density::UniformCube, RngStream::new(seed, i));
            degree_profile(&cloud, r, NormSpec::Euclidean).unwrap().count(k) as u64
        })
        .collect();
    let empirical = pmf_from_samples(&counts);
    let reference = law.pmf();
    println!("n = {n}, r = {r:.6}, {replicates} replicates");
    println!("{:>5} {:>10} {:>10}", "count", "empirical", "limit");
    for i in 0..empirical.len().max(reference.len()).min(12) {
        println!(
            "{:>5} {:>10.4} {:>10.4}",
            i,
            empirical.get(i).copied().unwrap_or(0.0),
            reference.get(i).copied().unwrap_or(0.0)
        );
    }
    println!("total variation distance = {:.4}", tv_distance(&empirical, &reference));
}
