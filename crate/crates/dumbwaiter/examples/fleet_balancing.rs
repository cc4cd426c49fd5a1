//! Balance passengers over a fleet and pool per-car trajectory statistics.
//!
//! Run with: `cargo run --example fleet_balancing`

use dumbwaiter::fleet::{distribute, fleet_simulation, FleetSpec};

fn main() {
    let spec = FleetSpec {
        elevators: 3,
        capacity: 10,
        passengers: 10,
    };
    let assignment = distribute(&spec).expect("at least one car");
    println!(
        "{} passengers over {} cars (capacity {}): counts {:?}, feasible: {}",
        spec.passengers, spec.elevators, spec.capacity, assignment.counts, assignment.feasible
    );

    let overloaded = FleetSpec {
        elevators: 2,
        capacity: 3,
        passengers: 10,
    };
    let assignment = distribute(&overloaded).expect("at least one car");
    println!(
        "{} passengers over {} cars (capacity {}): counts {:?}, feasible: {}",
        overloaded.passengers,
        overloaded.elevators,
        overloaded.capacity,
        assignment.counts,
        assignment.feasible
    );

    let metrics = fleet_simulation(&spec, 200_000, 9).expect("feasible fleet");
    println!("\nper-car runs of 200000 legs:");
    for (i, car) in metrics.per_elevator.iter().enumerate() {
        println!(
            "  car {i}: mean leg {:.5}, total distance {:.0}",
            car.moments.mean, car.total_distance
        );
    }
    println!(
        "pooled: mean leg {:.5} (closed form 1/3), variance {:.5} (closed form 1/18)",
        metrics.pooled_moments.mean, metrics.pooled_moments.variance
    );
}
