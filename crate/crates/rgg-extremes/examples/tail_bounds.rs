//! Chernoff H-bounds against exact Binomial/Poisson tails, plus the
//! λ^{3/4} deviation bound of Lemma A.3.
//!
//! Run with: cargo run --example tail_bounds

use statrs::distribution::DiscreteCDF;

use rgg_extremes::limit_laws::{h_function, tail_bound, TailBound};

fn main() {
    println!("P[Poisson(λ) ≥ k] vs exp(−λ·H(k/λ)), H(t) = 1 − t + t·log t");
    println!("{:>6} {:>4} {:>12} {:>12}", "λ", "k", "exact", "bound");
    for &(lambda, k) in &[(5.0f64, 8u64), (5.0, 12), (20.0, 30), (20.0, 45), (50.0, 70)] {
        let exact = 1.0 - statrs::distribution::Poisson::new(lambda).unwrap().cdf(k - 1);
        let bound = tail_bound(TailBound::PoissonUpper { lambda, k: k as f64 }).unwrap();
        println!("{lambda:>6} {k:>4} {exact:>12.3e} {bound:>12.3e}");
    }

    println!("\nP[Bin(n,p) ≤ k] vs exp(−np·H(k/np))");
    println!("{:>4} {:>5} {:>4} {:>12} {:>12}", "n", "p", "k", "exact", "bound");
    for &(n, p, k) in &[(40u64, 0.5f64, 10u64), (40, 0.5, 15), (100, 0.2, 8), (100, 0.2, 12)] {
        let exact = statrs::distribution::Binomial::new(p, n).unwrap().cdf(k);
        let bound = tail_bound(TailBound::BinomialLower { n, p, k: k as f64 }).unwrap();
        println!("{n:>4} {p:>5} {k:>4} {exact:>12.3e} {bound:>12.3e}");
    }

    println!("\nLemma A.3: P[|Poisson(λ) − λ| ≥ λ^(3/4)/2] ≤ exp(−√λ/9)");
    for &lambda in &[1e2, 1e3, 1e4] {
        let po = statrs::distribution::Poisson::new(lambda).unwrap();
        let half_band = lambda.powf(0.75) / 2.0;
        let upper = 1.0 - po.cdf((lambda + half_band).ceil() as u64 - 1);
        let lower = po.cdf((lambda - half_band).floor() as u64);
        let bound = tail_bound(TailBound::Poisson34 { lambda }).unwrap();
        println!(
            "  λ = {lambda:>7}: upper tail {upper:.3e}, lower tail {lower:.3e}, bound {bound:.3e}"
        );
    }

    println!("\nH itself: H(0) = {}, H(1) = {}, H(2) = {:.4}", h_function(0.0), h_function(1.0), h_function(2.0));
}
