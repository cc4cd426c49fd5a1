//! Simulate a long single-car trajectory and compare empirical leg
//! statistics against their closed forms, then convert the mean leg into
//! seconds for a concrete building.
//!
//! Run with: `cargo run --example leg_statistics`

use dumbwaiter::spatial::{
    analytic_leg_moments, seconds_per_call, seconds_per_call_rounded, BuildingSpec, CallSequence,
};

fn main() {
    let legs = CallSequence::generate(1_000_000, 42)
        .expect("positive leg count")
        .leg_series()
        .expect("long enough sequence");
    let empirical = legs.empirical_moments().expect("at least three legs");
    let exact = analytic_leg_moments();

    println!("{:<24} {:>12} {:>12}", "statistic", "empirical", "analytic");
    for (name, e, a) in [
        ("mean", empirical.mean, exact.mean),
        ("variance", empirical.variance, exact.variance),
        (
            "lag-1 product moment",
            empirical.lag1_product_moment,
            exact.lag1_product_moment,
        ),
        (
            "lag-1 autocorrelation",
            empirical.lag1_autocorrelation,
            exact.lag1_autocorrelation,
        ),
        (
            "lag-2 autocorrelation",
            empirical.lag2_autocorrelation,
            exact.lag2_autocorrelation,
        ),
    ] {
        println!("{name:<24} {e:>12.6} {a:>12.6}");
    }
    println!(
        "\ntotal distance over {} legs: {:.1} building heights",
        legs.len(),
        legs.total_distance()
    );

    // A 10-floor building with 4.2 m floors and a 45 m/min car.
    let building = BuildingSpec::new(10, 4.2, 45.0).expect("positive parameters");
    let exact_seconds = seconds_per_call(&building, exact.mean).unwrap();
    let rounded_seconds = seconds_per_call_rounded(&building, exact.mean).unwrap();
    println!(
        "mean service time: {exact_seconds:.2} s exact, {rounded_seconds:.0} s with the minute \
         figure rounded to one decimal"
    );
}
