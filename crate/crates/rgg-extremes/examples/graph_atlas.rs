//! Enumerate the candidate graph classes on k+1 vertices with a degree-k
//! vertex and estimate each configuration-integral constant μ_Γ by Monte
//! Carlo; the feasible-class table is the input to every compound-Poisson
//! limit in the fixed-k regime.
//!
//! Run with: cargo run --example graph_atlas

use rgg_extremes::graph_atlas::Atlas;
use rgg_extremes::sampling::{Density, RngStream};
use rgg_extremes::NormSpec;

fn main() {
    for (k, d) in [(1usize, 1usize), (2, 1), (2, 2), (3, 1)] {
        let atlas = Atlas::build(
            k,
            d,
            NormSpec::Euclidean,
            Density::UniformCube,
            2_000_000,
            RngStream::new(11, (k * 10 + d) as u64),
        )
        .unwrap();
        println!("k = {k}, d = {d}: {} classes, μ_{{{d},{k}}} = {:.4}", atlas.classes.len(), atlas.mu_dk());
        println!("{:>10} {:>6} {:>3} {:>10} {:>9} {:>12}", "graph", "edges", "q", "mu", "se", "feasible");
        for c in &atlas.classes {
            println!(
                "{:>10} {:>6} {:>3} {:>10.5} {:>9.1e} {:>12}",
                c.canonical.bitstring(),
                c.canonical.edge_count(),
                c.q,
                c.mu,
                c.se,
                format!("{:?}", c.feasible)
            );
        }
        if let Ok(w) = atlas.weight_law() {
            println!("multiplicity law ζ: {:?}, mean = {:.4}", w.atoms, w.mean());
        }
        println!();
    }
}
