//! The Palm formula for Poisson processes: the expected sum of a
//! functional over j-subsets of the process equals (λ^j/j!) times its
//! expectation over j fresh independent points joined to the process.
//! Both sides estimated by Monte Carlo.
//!
//! Run with: cargo run --example palm_identity

use rgg_extremes::limit_laws::palm_lhs_rhs;
use rgg_extremes::sampling::{Density, RngStream};
use rgg_extremes::NormSpec;

fn main() {
    let (lambda, d, r, samples, seed) = (200.0, 2, 0.08, 4000, 7u64);

    // j = 1, h ≡ 1: both sides must equal E[#points] = λ
    let counting = palm_lhs_rhs(
        |_, _| 1.0,
        1,
        lambda,
        d,
        Density::UniformCube,
        samples,
        RngStream::new(seed, 0),
    )
    .unwrap();
    println!("j = 1 counting functional (both sides → λ = {lambda}):");
    println!("  sum side:  {:.3} ± {:.3}", counting.lhs, counting.lhs_se);
    println!("  palm side: {:.3} ± {:.3}", counting.rhs, counting.rhs_se);
    println!("  discrepancy = {:.2} combined se", counting.discrepancy_in_se());

    // j = 2, edge indicator: expected number of edges of G(P_λ; r)
    let edge = palm_lhs_rhs(
        move |sub, cloud| {
            (NormSpec::Euclidean.dist(cloud.point(sub[0]), cloud.point(sub[1])) <= r) as u64 as f64
        },
        2,
        lambda,
        d,
        Density::UniformCube,
        samples,
        RngStream::new(seed, 1 << 32),
    )
    .unwrap();
    println!("\nj = 2 edge functional (expected edge count of G(P_λ; {r})):");
    println!("  sum side:  {:.3} ± {:.3}", edge.lhs, edge.lhs_se);
    println!("  palm side: {:.3} ± {:.3}", edge.rhs, edge.rhs_se);
    println!("  discrepancy = {:.2} combined se", edge.discrepancy_in_se());
}
