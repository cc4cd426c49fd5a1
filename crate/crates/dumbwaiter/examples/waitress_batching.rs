//! Three-call batching versus in-order service.
//!
//! Holding three calls and sweeping their range once is never longer than
//! visiting them in arrival order; this prints a few concrete batches and
//! the average improvement over a million random ones.
//!
//! Run with: `cargo run --example waitress_batching`

use dumbwaiter::spatial::{waitress_route, waitress_summary};

fn main() {
    for batch in [[0.1, 0.9, 0.2], [0.1, 0.2, 0.9], [0.5, 0.5, 0.5]] {
        let route = waitress_route(batch).expect("positions in [0, 1]");
        println!(
            "batch {batch:?}: batched {:.3}, in-order {:.3}",
            route.waitress_length, route.dumbwaiter_length
        );
    }

    let summary = waitress_summary(1_000_000, 7).expect("positive batch count");
    println!(
        "\nover {} random batches: mean batched/in-order ratio {:.4}",
        summary.batches, summary.mean_improvement_ratio
    );
    println!(
        "strictly shorter in {} batches, longer in {}",
        summary.strict_improvements, summary.violations
    );
}
