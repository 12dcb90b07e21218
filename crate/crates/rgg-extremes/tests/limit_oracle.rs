//! Numerical oracles for the limit-law layer: Lambert-W inversion over its
//! whole domain, the radius schedules against independent root finding,
//! the exact-measure chain `radius → ball measure → expected counts`, and
//! spot checks of the tail bounds against direct formulas.

use rand::Rng;

use rgg_extremes::limit_laws::{
    ball_measure, expected_degree_count, gumbel_statistic, lambert_w0, radius_growing,
    tail_bound, CountMode, GumbelVariant, KnRule, RadiusSchedule, ScheduleRegime, TailBound,
    WeibullLaw,
};
use rgg_extremes::sampling::{Density, RngStream};
use rgg_extremes::{unit_ball_volume, NormSpec};

#[test]
fn lambert_w0_inverts_w_exp_w() {
    // forward sweep: w·e^w is exactly representable to f64 roundoff, so
    // W(w·e^w) must return w to a few ulps everywhere on [-1, 700]
    let mut worst = 0.0f64;
    for i in 0..=70_000 {
        let w = -1.0 + i as f64 * 0.01;
        let t = w * w.exp();
        let back = lambert_w0(t).unwrap();
        let err = (back - w).abs() / w.abs().max(1.0);
        worst = worst.max(err);
    }
    assert!(worst < 1e-8, "worst forward inversion error {worst:e}");

    // random residual sweep across the full argument range
    let mut rng = RngStream::new(0x1A3B, 0).rng();
    for _ in 0..100_000 {
        let t = if rng.gen_bool(0.5) {
            // near the branch point
            -std::f64::consts::E.recip() + rng.gen::<f64>().powi(3)
        } else {
            rng.gen::<f64>().powi(2) * 1e6
        };
        let w = lambert_w0(t).unwrap();
        assert!(
            (w * w.exp() - t).abs() <= 1e-12 * t.abs().max(1.0),
            "residual too large at t = {t}"
        );
    }
    // domain edge and error path
    assert!((lambert_w0(-std::f64::consts::E.recip()).unwrap() + 1.0).abs() < 1e-6);
    assert!(lambert_w0(-0.5).is_err());
}

#[test]
fn growing_schedule_matches_bisection_oracle() {
    // Independent oracle: bisect t·e^{-t} = A^{-1/k}/e on t ∈ (0, 1)
    // instead of using Lambert W, then compare radii.
    let d = 2;
    let theta = unit_ball_volume(d, NormSpec::Euclidean).unwrap();
    let mut sched = RadiusSchedule::new(
        ScheduleRegime::GrowingK { rule: KnRule::LogRatio, beta: 1.0 },
        d,
        theta,
        Density::UniformCube,
    );
    for &n in &[10_000usize, 100_000, 1_000_000, 10_000_000] {
        let entry = sched.entry(n).unwrap();
        let k = entry.k_n as f64;
        let ln_a = (n as f64).ln() - 1.0f64.ln() - 0.5 * (2.0 * std::f64::consts::PI * k).ln();
        let c = (-1.0 - ln_a / k).exp(); // (1/e)·A^{-1/k}
        // t·e^{-t} is increasing on (0, 1), so plain bisection works
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * (-mid).exp() >= c {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        let r_oracle = (t * k / (n as f64 * theta)).powf(1.0 / d as f64);
        assert!(
            (entry.r - r_oracle).abs() <= 1e-10 * r_oracle,
            "n = {n}: schedule r = {}, bisection r = {r_oracle}",
            entry.r
        );
        assert!(entry.residual < 1e-12, "n = {n}: residual {}", entry.residual);
        assert!((entry.ntheta_r_d - n as f64 * theta * entry.r.powi(2)).abs() < 1e-12);
    }
}

#[test]
fn schedule_radius_reproduces_target_degree_count() {
    // The whole point of the schedule: at r_n the expected number of
    // degree-k_n vertices in the Poissonized graph is ≈ β. The Stirling
    // error at k_n ∈ {5, 6} is below 2%, so 3% is a safe assertion band.
    let d = 2;
    let theta = unit_ball_volume(d, NormSpec::Euclidean).unwrap();
    for &(n, beta) in &[(100_000usize, 1.0), (1_000_000, 1.0), (100_000, 0.5)] {
        let mut sched = RadiusSchedule::new(
            ScheduleRegime::GrowingK { rule: KnRule::LogRatio, beta },
            d,
            theta,
            Density::UniformCube,
        );
        let entry = sched.entry(n).unwrap();
        let expected = expected_degree_count(
            n,
            entry.r,
            entry.k_n,
            d,
            NormSpec::Euclidean,
            Density::UniformCube,
            CountMode::Poisson,
        )
        .unwrap();
        let rel = (expected - beta).abs() / beta;
        assert!(
            rel < 0.03,
            "n = {n}, β = {beta}: E[W_k] = {expected} ({:.1}% off)",
            100.0 * rel
        );
    }
}

#[test]
fn radius_growing_agrees_with_schedule_entry() {
    let k_n = KnRule::LogRatio.k_n(200_000);
    let r1 = radius_growing(
        200_000,
        k_n,
        2,
        unit_ball_volume(2, NormSpec::Euclidean).unwrap(),
        1.0,
        Density::UniformCube,
    )
    .unwrap();
    let mut sched = RadiusSchedule::new(
        ScheduleRegime::GrowingK { rule: KnRule::LogRatio, beta: 1.0 },
        2,
        unit_ball_volume(2, NormSpec::Euclidean).unwrap(),
        Density::UniformCube,
    );
    assert_eq!(r1.to_bits(), sched.radius(200_000).unwrap().to_bits());
    // the cache must not change answers
    assert_eq!(r1.to_bits(), sched.radius(200_000).unwrap().to_bits());
}

#[test]
fn ball_measure_interior_and_boundary() {
    let mut rng = RngStream::new(0x1A3B, 1).rng();
    let theta = std::f64::consts::PI;

    // interior of the uniform cube: exactly θ·r²
    let m = ball_measure(&[0.1, -0.2], 0.05, NormSpec::Euclidean, Density::UniformCube, &mut rng);
    assert!((m - theta * 0.05f64.powi(2)).abs() < 1e-15);

    // d=1 closed forms vs quadrature for the radial density
    let density = Density::RadialPeak { s: 2.0 };
    for &(x, r) in &[(0.2f64, 0.1f64), (0.45, 0.2), (-0.5, 0.3), (0.0, 0.6)] {
        let m = ball_measure(&[x], r, NormSpec::Euclidean, density, &mut rng);
        let cells = 200_000;
        let (lo, hi) = ((x - r).max(-0.5), (x + r).min(0.5));
        let w = (hi - lo) / cells as f64;
        let mut quad = 0.0;
        for i in 0..cells {
            quad += density.eval(&[lo + (i as f64 + 0.5) * w]) * w;
        }
        assert!((m - quad).abs() < 1e-6, "x = {x}, r = {r}: closed {m}, quadrature {quad}");
    }

    // max-norm box clipped at the cube boundary, uniform: product of side
    // overlaps
    let m = ball_measure(&[0.45, 0.0], 0.1, NormSpec::MaxCoordinate, Density::UniformCube, &mut rng);
    assert!((m - 0.15 * 0.2).abs() < 1e-15);
}

#[test]
fn weibull_and_gumbel_shapes() {
    let law = WeibullLaw::new(std::f64::consts::FRAC_PI_2, 2).unwrap();
    assert_eq!(law.cdf(0.0), 1.0);
    assert_eq!(law.cdf(5.0), 1.0);
    assert!((law.cdf(-1.0) - (-std::f64::consts::FRAC_PI_2).exp()).abs() < 1e-15);
    assert!(law.cdf(-3.0) < law.cdf(-2.0));

    // the full and simplified Gumbel statistics converge to each other as
    // S → 0 at fixed n, and the full variant is the larger of the two for
    // any positive S (the dropped factor is < 1)
    let theta = std::f64::consts::PI;
    for &s in &[1e-4, 1e-3, 5e-3] {
        let full = gumbel_statistic(s, 1_000_000, 6, 2, theta, Density::UniformCube, GumbelVariant::Full);
        let simp =
            gumbel_statistic(s, 1_000_000, 6, 2, theta, Density::UniformCube, GumbelVariant::Simplified);
        assert!(full >= simp, "damped magnitude is smaller, so the statistic is larger");
    }
}

#[test]
fn tail_bounds_match_direct_formulas() {
    // H-bound spot values computed by hand: P[Bin(n,p) ≥ k] ≤ e^{-np·H(k/np)}
    let h = |t: f64| 1.0 - t + t * t.ln();
    let b = tail_bound(TailBound::BinomialUpper { n: 30, p: 0.2, k: 12.0 }).unwrap();
    assert!((b - (-6.0 * h(2.0)).exp()).abs() < 1e-15);
    let b = tail_bound(TailBound::PoissonLower { lambda: 9.0, k: 3.0 }).unwrap();
    assert!((b - (-9.0 * h(1.0 / 3.0)).exp()).abs() < 1e-15);
    let b = tail_bound(TailBound::Poisson34 { lambda: 1e4 }).unwrap();
    assert!((b - (-(1e4f64).sqrt() / 9.0).exp()).abs() < 1e-15);
    // degenerate k = 0 lower tail: bound is e^{-mean}
    let b = tail_bound(TailBound::PoissonLower { lambda: 4.0, k: 0.0 }).unwrap();
    assert!((b - (-4.0f64).exp()).abs() < 1e-15);
}
