//! Radius schedules for both regimes: the fixed-k scaling and the
//! growing-k_n Lambert-W schedule, printed as the same audit CSV that
//! `rgg-extremes schedule-dump` emits.
//!
//! Run with: cargo run --example radius_schedule

use rgg_extremes::limit_laws::{radius_fixed_k, KnRule, RadiusSchedule, ScheduleRegime};
use rgg_extremes::sampling::Density;
use rgg_extremes::{unit_ball_volume, NormSpec};

fn main() {
    let d = 2;
    let theta = unit_ball_volume(d, NormSpec::Euclidean).unwrap();
    let grid = [10_000usize, 31_623, 100_000, 316_228, 1_000_000, 10_000_000];

    println!("fixed k = 2, β = 1: r_n = (βk!/(μ-normalization))·n^{{-(k+1)/(dk)}} scaling");
    for &n in &grid {
        println!("  n = {n:>8}: r = {:.8}", radius_fixed_k(n, 2, d, 1.0).unwrap());
    }

    println!("\ngrowing k_n = ⌈log n/log log n⌉, β = 1 (audit CSV):");
    let mut sched = RadiusSchedule::new(
        ScheduleRegime::GrowingK { rule: KnRule::LogRatio, beta: 1.0 },
        d,
        theta,
        Density::UniformCube,
    );
    let mut buf = Vec::new();
    sched.dump_csv(&grid, &mut buf).unwrap();
    print!("{}", String::from_utf8(buf).unwrap());

    println!("\nsame schedule under the radial-peak density f ∝ (interior peak, s = 2):");
    let mut radial = RadiusSchedule::new(
        ScheduleRegime::GrowingK { rule: KnRule::LogRatio, beta: 1.0 },
        d,
        theta,
        Density::RadialPeak { s: 2.0 },
    );
    let mut buf = Vec::new();
    radial.dump_csv(&grid, &mut buf).unwrap();
    print!("{}", String::from_utf8(buf).unwrap());
}
