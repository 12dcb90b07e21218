//! Box-count verification of a compound Poisson point process: disjoint
//! slabs must show the right marginal count law and no cross-box
//! correlation. This is the finite-box operationalization of vague
//! convergence used throughout the acceptance experiments.
//!
//! Run with: cargo run --example spatial_boxes

use rgg_extremes::sampling::{sample_compound_poisson_pp, Density, RngStream, WeightLaw};
use rgg_extremes::stats::{box_count_test, BoxReference, CompoundPoissonLaw};

fn main() {
    let d = 1;
    let intensity = 6.0;
    let zeta = WeightLaw { atoms: vec![(1, 0.5), (3, 0.5)] };
    let replicates: Vec<_> = (0..3000)
        .map(|i| {
            sample_compound_poisson_pp(intensity, d, Density::UniformCube, &zeta, RngStream::new(3, i))
                .unwrap()
        })
        .collect();

    // four quarter-intervals of [-1/2, 1/2]
    let boxes: Vec<(Vec<f64>, Vec<f64>)> =
        (0..4).map(|b| (vec![-0.5 + b as f64 * 0.25], vec![-0.25 + b as f64 * 0.25])).collect();
    let laws: Vec<CompoundPoissonLaw> = (0..4)
        .map(|_| {
            CompoundPoissonLaw::new(
                zeta.atoms.iter().map(|&(q, p)| (q, p * intensity / 4.0)).collect(),
            )
            .unwrap()
        })
        .collect();
    let report = box_count_test(
        &replicates,
        &boxes,
        |marked, lo, hi| marked.mass_in_box(lo, hi),
        &BoxReference::Compound(laws),
    )
    .unwrap();

    println!("compound Poisson PP, intensity {intensity}, multiplicities {:?}", zeta.atoms);
    for (b, tv) in report.per_box_tv.iter().enumerate() {
        println!("  box {b}: TV(empirical, reference) = {tv:.4}");
    }
    for (a, b, rho) in &report.correlations {
        println!("  corr(box {a}, box {b}) = {rho:+.4}");
    }
    println!(
        "max TV = {:.4}, max |corr| = {:.4} over {} replicates",
        report.max_tv(),
        report.max_abs_correlation(),
        report.replicates
    );
}
