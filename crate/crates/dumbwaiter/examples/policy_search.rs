//! Genetic search for a movement policy that beats the uniform baseline
//! on the summed hitting-time objective.
//!
//! Run with: `cargo run --example policy_search`

use dumbwaiter::chain::{objective, ChainSpec, MovementPolicy};
use dumbwaiter::optimize::{optimize_policy, GaConfig};

fn main() {
    let spec = ChainSpec {
        floors: 3,
        call_probabilities: vec![0.1, 0.1, 0.1],
        policy: MovementPolicy::Uniform,
    };
    let baseline = objective(&spec).expect("valid spec").objective;
    println!("uniform baseline objective: {baseline:.4}");

    let ga = GaConfig::default();
    let result = optimize_policy(&spec, &ga).expect("valid configuration");
    println!(
        "best after {} generations:   {:.4} ({:.1}% lower)",
        ga.generations,
        result.best_objective,
        (baseline - result.best_objective) / baseline * 100.0
    );

    println!("\nbest-of-generation trace (every 25th):");
    for (generation, value) in result.history.iter().enumerate().step_by(25) {
        println!("  generation {generation:>3}: {value:.4}");
    }

    if let MovementPolicy::Explicit(table) = &result.best_policy {
        println!("\nwinning policy, empty-building states:");
        let states = dumbwaiter::chain::enumerate_states(spec.floors).unwrap();
        for (idx, state) in states.iter().enumerate() {
            if state.waiting() == 0 {
                let d = table[idx];
                println!(
                    "  floor {}: up {:.3}, down {:.3}, stay {:.3}",
                    state.floor(),
                    d.up,
                    d.down,
                    d.stay
                );
            }
        }
    }
}
