//! Parse and canonically re-emit the JSON spec documents shared by the
//! CLI and the library.
//!
//! Run with: `cargo run --example spec_documents`

use dumbwaiter::chain::ChainSpec;
use dumbwaiter::config::{emit_payload, parse_payload, ConfigError};

fn main() {
    let document = br#"{
        "schema_version": 1,
        "policy": {"type": "uniform"},
        "floors": 3,
        "call_probabilities": [0.1, 0.1, 0.1]
    }"#;
    let spec: ChainSpec = parse_payload(document).expect("valid document");
    println!("parsed a {}-floor chain spec; canonical form:\n", spec.floors);
    print!("{}", String::from_utf8(emit_payload(&spec)).unwrap());

    // Strict parsing: typos and out-of-range values are rejected with the
    // offending path.
    let typo = br#"{
        "schema_version": 1,
        "floors": 3,
        "call_probabilities": [0.1, 0.1, 0.1],
        "policy": {"type": "uniform"},
        "speed": 45
    }"#;
    match parse_payload::<ChainSpec>(typo) {
        Err(ConfigError::UnknownField { path }) => {
            println!("\ntypo detected: unknown field \"{path}\"")
        }
        other => println!("\nunexpected: {other:?}"),
    }

    let out_of_range = br#"{
        "schema_version": 1,
        "floors": 3,
        "call_probabilities": [0.1, 1.0, 0.1],
        "policy": {"type": "uniform"}
    }"#;
    match parse_payload::<ChainSpec>(out_of_range) {
        Err(ConfigError::Invariant { path, reason }) => {
            println!("invariant violation at \"{path}\": {reason}")
        }
        other => println!("unexpected: {other:?}"),
    }
}
