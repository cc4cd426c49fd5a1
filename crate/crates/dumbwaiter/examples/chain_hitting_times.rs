//! Build the composite-state chain for a three-floor building, solve the
//! expected first-hitting times exactly, and cross-check the solver with
//! the seeded simulator.
//!
//! Run with: `cargo run --example chain_hitting_times`

use dumbwaiter::chain::{
    monte_carlo_objective_estimates, objective_from_matrix, ChainSpec, MovementPolicy,
    TransitionMatrix,
};

fn main() {
    let spec = ChainSpec {
        floors: 3,
        call_probabilities: vec![0.1, 0.1, 0.1],
        policy: MovementPolicy::Uniform,
    };
    let matrix = TransitionMatrix::build(&spec).expect("valid spec");
    let validation = matrix.validate();
    println!(
        "{} floors -> {} composite states, irreducible: {}",
        spec.floors,
        matrix.dimension(),
        validation.irreducible
    );

    let report = objective_from_matrix(&matrix).expect("reachable targets");
    let mc = monte_carlo_objective_estimates(&matrix, 50_000, 1, None).expect("valid chain");
    println!("\n{:<8} {:>10} {:>12} {:>10}", "target", "exact", "simulated", "std err");
    for (&floor, &exact) in &report.per_target {
        let (_, estimate) = mc.iter().find(|(f, _)| *f == floor).unwrap();
        println!(
            "floor {floor:<2} {exact:>10.4} {:>12.4} {:>10.4}",
            estimate.mean, estimate.std_error
        );
    }
    println!("\nsummed objective: {:.4}", report.objective);
}
