//! Weibull limit of the threshold radius S_k (smallest k-nearest-neighbor
//! link): simulate −n^{(k+1)/(dk)}·S_k over many clouds and compare its
//! empirical law to exp(−μ_{d,k}(−x)^{dk}).
//!
//! Run with: cargo run --example threshold_weibull

use rgg_extremes::graph_atlas::Atlas;
use rgg_extremes::limit_laws::{weibull_statistic, WeibullLaw};
use rgg_extremes::rgg::threshold_radius;
use rgg_extremes::sampling::{sample_binomial, Density, RngStream};
use rgg_extremes::stats::EmpiricalSample;
use rgg_extremes::NormSpec;

fn main() {
    let (n, d, k, replicates, seed) = (10_000, 2, 1, 400, 7u64);

    // μ_{2,1} from the graph atlas (for k = 1 the Monte Carlo is exact: π/2)
    let atlas = Atlas::build(
        k,
        d,
        NormSpec::Euclidean,
        Density::UniformCube,
        1_000_000,
        RngStream::new(seed, 1 << 40),
    )
    .unwrap();
    let law = WeibullLaw::new(atlas.mu_dk(), (d * k) as u32).unwrap();
    println!("μ_{{{d},{k}}} = {:.6}, limit CDF exp(−μ(−x)^{})", atlas.mu_dk(), d * k);

    let stats: Vec<f64> = (0..replicates)
        .map(|i| {
            let cloud = sample_binomial(n, d, Density::UniformCube, RngStream::new(seed, i));
            let s_k = threshold_radius(&cloud, k, NormSpec::Euclidean).unwrap();
            weibull_statistic(s_k, n, d, k)
        })
        .collect();
    let sample = EmpiricalSample::new(stats).unwrap();
    println!(
        "n = {n}, {replicates} replicates: KS distance to the limit = {:.4}",
        sample.ks_distance(|x| law.cdf(x))
    );
    for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
        println!("  q{:>2.0}: statistic {:+.4}", 100.0 * q, sample.quantile(q));
    }
}
