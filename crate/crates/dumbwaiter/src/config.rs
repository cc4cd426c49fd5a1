//! Canonical JSON documents for the shared spec types.
//!
//! Every document carries `"schema_version": 1` next to the payload
//! fields. Parsing is strict: unknown fields are rejected (a typo in a
//! probability field must not silently change an experiment), every type
//! invariant is enforced, and errors name the offending field path.
//! Emission is canonical (sorted keys, floats as 17-significant-digit
//! decimal strings), so `parse(emit(d)) == d` and re-emitting a parsed
//! document reproduces it byte for byte. Parsing accepts plain JSON
//! numbers wherever emission writes decimal strings, which keeps
//! hand-written spec files pleasant.

use serde_json::{Map, Value};
use thiserror::Error;

use crate::chain::{ChainError, ChainSpec, MoveDistribution, MovementPolicy};
use crate::fleet::FleetSpec;
use crate::optimize::GaConfig;
use crate::report::format_stat;
use crate::spatial::BuildingSpec;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("document is not a JSON object")]
    NotAnObject,
    #[error("unknown field \"{path}\"")]
    UnknownField { path: String },
    #[error("missing field \"{path}\"")]
    MissingField { path: String },
    #[error("field \"{path}\": {reason}")]
    Malformed { path: String, reason: String },
    #[error("unsupported schema_version {found}, expected {SCHEMA_VERSION}")]
    SchemaVersion { found: String },
    #[error("invariant violation at \"{path}\": {reason}")]
    Invariant { path: String, reason: String },
}

/// A parsed, validated document: version header plus one payload.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDocument<T> {
    pub schema_version: u64,
    pub payload: T,
}

/// Types that live inside a [`CanonicalDocument`].
pub trait SpecPayload: Sized {
    /// Top-level payload fields, in addition to `schema_version`.
    fn allowed_fields() -> &'static [&'static str];
    fn from_fields(fields: &Map<String, Value>) -> Result<Self, ConfigError>;
    fn to_fields(&self) -> Map<String, Value>;
}

/// Parses and validates a document. No invalid payload survives this
/// call: every invariant of the inner type is checked here.
pub fn parse<T: SpecPayload>(bytes: &[u8]) -> Result<CanonicalDocument<T>, ConfigError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    let fields = value.as_object().ok_or(ConfigError::NotAnObject)?;
    // serde_json maps iterate in key order, so the first offending field
    // reported is deterministic.
    for key in fields.keys() {
        if key != "schema_version" && !T::allowed_fields().contains(&key.as_str()) {
            return Err(ConfigError::UnknownField { path: key.clone() });
        }
    }
    let schema_version = match fields.get("schema_version") {
        None => {
            return Err(ConfigError::MissingField {
                path: "schema_version".into(),
            })
        }
        Some(v) => match v.as_u64() {
            Some(n) if n == SCHEMA_VERSION => n,
            _ => {
                return Err(ConfigError::SchemaVersion {
                    found: v.to_string(),
                })
            }
        },
    };
    Ok(CanonicalDocument {
        schema_version,
        payload: T::from_fields(fields)?,
    })
}

/// Convenience wrapper returning just the payload.
pub fn parse_payload<T: SpecPayload>(bytes: &[u8]) -> Result<T, ConfigError> {
    Ok(parse(bytes)?.payload)
}

/// Canonical serialization of a document.
pub fn emit<T: SpecPayload>(doc: &CanonicalDocument<T>) -> Vec<u8> {
    let mut fields = doc.payload.to_fields();
    fields.insert("schema_version".into(), Value::from(doc.schema_version));
    let mut text = serde_json::to_string_pretty(&Value::Object(fields))
        .expect("canonical documents serialize");
    text.push('\n');
    text.into_bytes()
}

/// Canonical serialization of a bare payload under the current schema.
pub fn emit_payload<T: SpecPayload>(payload: &T) -> Vec<u8> {
    let mut fields = payload.to_fields();
    fields.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    let mut text = serde_json::to_string_pretty(&Value::Object(fields))
        .expect("canonical documents serialize");
    text.push('\n');
    text.into_bytes()
}

fn missing(path: &str) -> ConfigError {
    ConfigError::MissingField { path: path.into() }
}

fn malformed(path: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Malformed {
        path: path.into(),
        reason: reason.into(),
    }
}

fn get<'a>(fields: &'a Map<String, Value>, path: &str) -> Result<&'a Value, ConfigError> {
    fields.get(path).ok_or_else(|| missing(path))
}

fn as_u64(value: &Value, path: &str) -> Result<u64, ConfigError> {
    value
        .as_u64()
        .ok_or_else(|| malformed(path, "expected a non-negative integer"))
}

/// Floats may be JSON numbers or decimal strings (the canonical form).
fn as_f64(value: &Value, path: &str) -> Result<f64, ConfigError> {
    match value {
        Value::Number(n) => n
            .as_f64()
            .ok_or_else(|| malformed(path, "number out of f64 range")),
        Value::String(s) => s
            .parse()
            .map_err(|_| malformed(path, "string is not a decimal number")),
        _ => Err(malformed(path, "expected a number or decimal string")),
    }
}

fn check_keys(
    fields: &Map<String, Value>,
    allowed: &[&str],
    prefix: &str,
) -> Result<(), ConfigError> {
    for key in fields.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(ConfigError::UnknownField {
                path: format!("{prefix}{key}"),
            });
        }
    }
    Ok(())
}

fn chain_error_to_invariant(err: ChainError) -> ConfigError {
    let path = match &err {
        ChainError::ZeroFloors | ChainError::StateCountLimit { .. } => "floors".to_string(),
        ChainError::CallProbabilityCount { .. } => "call_probabilities".to_string(),
        ChainError::CallProbabilityOutOfRange { index, .. } => {
            format!("call_probabilities[{index}]")
        }
        ChainError::InvalidPolicy { .. } => "policy".to_string(),
        _ => "(document)".to_string(),
    };
    ConfigError::Invariant {
        path,
        reason: err.to_string(),
    }
}

/// Reads a movement policy object: `{"type": "uniform"}` or
/// `{"type": "explicit", "moves": [{"up", "down", "stay"}, ...]}` with
/// moves in canonical state order.
pub fn policy_from_value(value: &Value, path: &str) -> Result<MovementPolicy, ConfigError> {
    let object = value
        .as_object()
        .ok_or_else(|| malformed(path, "expected an object"))?;
    let type_path = format!("{path}.type");
    let kind = object
        .get("type")
        .ok_or_else(|| missing(&type_path))?
        .as_str()
        .ok_or_else(|| malformed(&type_path, "expected a string"))?;
    match kind {
        "uniform" => {
            check_keys(object, &["type"], &format!("{path}."))?;
            Ok(MovementPolicy::Uniform)
        }
        "explicit" => {
            check_keys(object, &["type", "moves"], &format!("{path}."))?;
            let moves_path = format!("{path}.moves");
            let moves = object
                .get("moves")
                .ok_or_else(|| missing(&moves_path))?
                .as_array()
                .ok_or_else(|| malformed(&moves_path, "expected an array"))?;
            let mut table = Vec::with_capacity(moves.len());
            for (i, entry) in moves.iter().enumerate() {
                let entry_path = format!("{moves_path}[{i}]");
                let entry = entry
                    .as_object()
                    .ok_or_else(|| malformed(&entry_path, "expected an object"))?;
                check_keys(entry, &["up", "down", "stay"], &format!("{entry_path}."))?;
                let read = |field: &str| -> Result<f64, ConfigError> {
                    let field_path = format!("{entry_path}.{field}");
                    as_f64(get(entry, field).map_err(|_| missing(&field_path))?, &field_path)
                };
                table.push(MoveDistribution {
                    up: read("up")?,
                    down: read("down")?,
                    stay: read("stay")?,
                });
            }
            Ok(MovementPolicy::Explicit(table))
        }
        other => Err(malformed(
            &type_path,
            format!("expected \"uniform\" or \"explicit\", got \"{other}\""),
        )),
    }
}

pub fn policy_to_value(policy: &MovementPolicy) -> Value {
    match policy {
        MovementPolicy::Uniform => {
            let mut object = Map::new();
            object.insert("type".into(), Value::from("uniform"));
            Value::Object(object)
        }
        MovementPolicy::Explicit(table) => {
            let moves: Vec<Value> = table
                .iter()
                .map(|d| {
                    let mut entry = Map::new();
                    entry.insert("up".into(), Value::from(format_stat(d.up)));
                    entry.insert("down".into(), Value::from(format_stat(d.down)));
                    entry.insert("stay".into(), Value::from(format_stat(d.stay)));
                    Value::Object(entry)
                })
                .collect();
            let mut object = Map::new();
            object.insert("type".into(), Value::from("explicit"));
            object.insert("moves".into(), Value::Array(moves));
            Value::Object(object)
        }
    }
}

impl SpecPayload for ChainSpec {
    fn allowed_fields() -> &'static [&'static str] {
        &["floors", "call_probabilities", "policy"]
    }

    fn from_fields(fields: &Map<String, Value>) -> Result<Self, ConfigError> {
        let floors = as_u64(get(fields, "floors")?, "floors")? as usize;
        let probs_value = get(fields, "call_probabilities")?
            .as_array()
            .ok_or_else(|| malformed("call_probabilities", "expected an array"))?;
        let mut call_probabilities = Vec::with_capacity(probs_value.len());
        for (i, entry) in probs_value.iter().enumerate() {
            call_probabilities.push(as_f64(entry, &format!("call_probabilities[{i}]"))?);
        }
        let policy = policy_from_value(get(fields, "policy")?, "policy")?;
        let spec = ChainSpec {
            floors,
            call_probabilities,
            policy,
        };
        spec.validate().map_err(chain_error_to_invariant)?;
        Ok(spec)
    }

    fn to_fields(&self) -> Map<String, Value> {
        let mut fields = Map::new();
        fields.insert("floors".into(), Value::from(self.floors as u64));
        fields.insert(
            "call_probabilities".into(),
            Value::Array(
                self.call_probabilities
                    .iter()
                    .map(|&p| Value::from(format_stat(p)))
                    .collect(),
            ),
        );
        fields.insert("policy".into(), policy_to_value(&self.policy));
        fields
    }
}

impl SpecPayload for GaConfig {
    fn allowed_fields() -> &'static [&'static str] {
        &[
            "population_size",
            "generations",
            "mutation_stddev",
            "crossover_rate",
            "elite_count",
            "seed",
        ]
    }

    fn from_fields(fields: &Map<String, Value>) -> Result<Self, ConfigError> {
        let config = GaConfig {
            population_size: as_u64(get(fields, "population_size")?, "population_size")? as usize,
            generations: as_u64(get(fields, "generations")?, "generations")? as usize,
            mutation_stddev: as_f64(get(fields, "mutation_stddev")?, "mutation_stddev")?,
            crossover_rate: as_f64(get(fields, "crossover_rate")?, "crossover_rate")?,
            elite_count: as_u64(get(fields, "elite_count")?, "elite_count")? as usize,
            seed: as_u64(get(fields, "seed")?, "seed")?,
        };
        config.validate().map_err(|e| ConfigError::Invariant {
            path: "(config)".into(),
            reason: e.to_string(),
        })?;
        Ok(config)
    }

    fn to_fields(&self) -> Map<String, Value> {
        let mut fields = Map::new();
        fields.insert("population_size".into(), Value::from(self.population_size as u64));
        fields.insert("generations".into(), Value::from(self.generations as u64));
        fields.insert(
            "mutation_stddev".into(),
            Value::from(format_stat(self.mutation_stddev)),
        );
        fields.insert(
            "crossover_rate".into(),
            Value::from(format_stat(self.crossover_rate)),
        );
        fields.insert("elite_count".into(), Value::from(self.elite_count as u64));
        fields.insert("seed".into(), Value::from(self.seed));
        fields
    }
}

impl SpecPayload for FleetSpec {
    fn allowed_fields() -> &'static [&'static str] {
        &["elevators", "capacity", "passengers"]
    }

    fn from_fields(fields: &Map<String, Value>) -> Result<Self, ConfigError> {
        let read_u32 = |field: &str| -> Result<u32, ConfigError> {
            u32::try_from(as_u64(get(fields, field)?, field)?)
                .map_err(|_| malformed(field, "value exceeds u32 range"))
        };
        let spec = FleetSpec {
            elevators: read_u32("elevators")?,
            capacity: read_u32("capacity")?,
            passengers: read_u32("passengers")?,
        };
        spec.validate().map_err(|e| ConfigError::Invariant {
            path: match e {
                crate::fleet::FleetError::ZeroParameter { name } => name.to_string(),
                _ => "(document)".to_string(),
            },
            reason: e.to_string(),
        })?;
        Ok(spec)
    }

    fn to_fields(&self) -> Map<String, Value> {
        let mut fields = Map::new();
        fields.insert("elevators".into(), Value::from(self.elevators));
        fields.insert("capacity".into(), Value::from(self.capacity));
        fields.insert("passengers".into(), Value::from(self.passengers));
        fields
    }
}

impl SpecPayload for BuildingSpec {
    fn allowed_fields() -> &'static [&'static str] {
        &["floors", "floor_height_m", "elevator_speed_m_per_min"]
    }

    fn from_fields(fields: &Map<String, Value>) -> Result<Self, ConfigError> {
        let floors = as_u64(get(fields, "floors")?, "floors")?;
        let floors =
            u32::try_from(floors).map_err(|_| malformed("floors", "value exceeds u32 range"))?;
        let height = as_f64(get(fields, "floor_height_m")?, "floor_height_m")?;
        let speed = as_f64(
            get(fields, "elevator_speed_m_per_min")?,
            "elevator_speed_m_per_min",
        )?;
        BuildingSpec::new(floors, height, speed).map_err(|e| {
            let path = match &e {
                crate::spatial::SpatialError::NonPositiveParameter { name, .. } => name.to_string(),
                _ => "(document)".to_string(),
            };
            ConfigError::Invariant {
                path,
                reason: e.to_string(),
            }
        })
    }

    fn to_fields(&self) -> Map<String, Value> {
        let mut fields = Map::new();
        fields.insert("floors".into(), Value::from(self.floors()));
        fields.insert(
            "floor_height_m".into(),
            Value::from(format_stat(self.floor_height_m())),
        );
        fields.insert(
            "elevator_speed_m_per_min".into(),
            Value::from(format_stat(self.elevator_speed_m_per_min())),
        );
        fields
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn chain_doc(body: &str) -> Result<ChainSpec, ConfigError> {
        parse_payload::<ChainSpec>(body.as_bytes())
    }

    #[test]
    fn valid_chain_spec_parses() {
        let spec = chain_doc(
            r#"{
                "schema_version": 1,
                "floors": 3,
                "call_probabilities": [0.1, 0.1, 0.1],
                "policy": {"type": "uniform"}
            }"#,
        )
        .unwrap();
        assert_eq!(spec.floors, 3);
        assert_eq!(spec.policy, MovementPolicy::Uniform);
    }

    #[test]
    fn probability_of_one_names_the_element() {
        let err = chain_doc(
            r#"{
                "schema_version": 1,
                "floors": 3,
                "call_probabilities": [0.1, 1.0, 0.1],
                "policy": {"type": "uniform"}
            }"#,
        )
        .unwrap_err();
        match err {
            ConfigError::Invariant { path, .. } => assert_eq!(path, "call_probabilities[1]"),
            other => panic!("expected invariant violation, got {other:?}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let err = chain_doc(
            r#"{
                "schema_version": 1,
                "floors": 3,
                "call_probabilities": [0.1, 0.1, 0.1],
                "policy": {"type": "uniform"},
                "speed": 45
            }"#,
        )
        .unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownField {
                path: "speed".into()
            }
        );
    }

    #[test]
    fn syntax_schema_and_structure_errors_are_distinguished() {
        assert!(matches!(
            chain_doc("{not json"),
            Err(ConfigError::Syntax(_))
        ));
        assert!(matches!(
            chain_doc(r#"{"schema_version": 2, "floors": 1, "call_probabilities": [0.0], "policy": {"type": "uniform"}}"#),
            Err(ConfigError::SchemaVersion { .. })
        ));
        assert!(matches!(
            chain_doc(r#"{"schema_version": 1, "call_probabilities": [0.0], "policy": {"type": "uniform"}}"#),
            Err(ConfigError::MissingField { .. })
        ));
        assert!(matches!(chain_doc("[1, 2]"), Err(ConfigError::NotAnObject)));
    }

    #[test]
    fn explicit_policy_round_trips() {
        let body = r#"{
            "schema_version": 1,
            "floors": 2,
            "call_probabilities": [0.0, 0.0],
            "policy": {"type": "explicit", "moves": [
                {"up": 1.0, "down": 0.0, "stay": 0.0},
                {"up": 1.0, "down": 0.0, "stay": 0.0},
                {"up": 0.0, "down": 1.0, "stay": 0.0},
                {"up": 0.0, "down": 1.0, "stay": 0.0}
            ]}
        }"#;
        let spec = chain_doc(body).unwrap();
        let emitted = emit_payload(&spec);
        let reparsed = parse_payload::<ChainSpec>(&emitted).unwrap();
        assert_eq!(spec, reparsed);
        assert_eq!(emit_payload(&reparsed), emitted);
    }

    #[test]
    fn policy_with_unknown_key_rejected() {
        let err = chain_doc(
            r#"{
                "schema_version": 1,
                "floors": 1,
                "call_probabilities": [0.0],
                "policy": {"type": "uniform", "junk": true}
            }"#,
        )
        .unwrap_err();
        assert_eq!(
            err,
            ConfigError::UnknownField {
                path: "policy.junk".into()
            }
        );
    }

    #[test]
    fn document_wrapper_round_trips() {
        let body = br#"{"schema_version": 1, "elevators": 2, "capacity": 4, "passengers": 7}"#;
        let doc: CanonicalDocument<FleetSpec> = parse(body).unwrap();
        assert_eq!(doc.schema_version, SCHEMA_VERSION);
        let emitted = emit(&doc);
        assert_eq!(parse::<FleetSpec>(&emitted).unwrap(), doc);
        assert_eq!(emit(&parse::<FleetSpec>(&emitted).unwrap()), emitted);
    }

    #[test]
    fn ga_and_fleet_and_building_documents_round_trip() {
        let ga = GaConfig::default();
        assert_eq!(
            parse_payload::<GaConfig>(&emit_payload(&ga)).unwrap(),
            ga
        );
        let fleet = FleetSpec {
            elevators: 3,
            capacity: 10,
            passengers: 10,
        };
        assert_eq!(
            parse_payload::<FleetSpec>(&emit_payload(&fleet)).unwrap(),
            fleet
        );
        let building = BuildingSpec::new(10, 4.2, 45.0).unwrap();
        assert_eq!(
            parse_payload::<BuildingSpec>(&emit_payload(&building)).unwrap(),
            building
        );
    }

    #[test]
    fn invalid_ga_config_is_an_invariant_violation() {
        let body = br#"{
            "schema_version": 1,
            "population_size": 4,
            "generations": 10,
            "mutation_stddev": 0.1,
            "crossover_rate": 0.7,
            "elite_count": 9,
            "seed": 0
        }"#;
        assert!(matches!(
            parse_payload::<GaConfig>(body),
            Err(ConfigError::Invariant { .. })
        ));
    }

    fn arbitrary_valid_chain_spec() -> impl Strategy<Value = ChainSpec> {
        (1usize..=4)
            .prop_flat_map(|floors| {
                let probs = prop::collection::vec(0.0..0.9f64, floors);
                let explicit = prop::collection::vec(
                    (0.01f64..0.45, 0.01f64..0.45),
                    floors << (floors - 1),
                );
                (Just(floors), probs, prop::option::of(explicit))
            })
            .prop_map(|(floors, call_probabilities, explicit)| {
                let policy = match explicit {
                    None => MovementPolicy::Uniform,
                    Some(pairs) => {
                        let states = crate::chain::enumerate_states(floors).unwrap();
                        MovementPolicy::Explicit(
                            states
                                .iter()
                                .zip(pairs)
                                .map(|(state, (a, b))| {
                                    let up_ok = state.floor() < floors;
                                    let down_ok = state.floor() > 1;
                                    let up = if up_ok { a } else { 0.0 };
                                    let down = if down_ok { b } else { 0.0 };
                                    MoveDistribution {
                                        up,
                                        down,
                                        stay: 1.0 - up - down,
                                    }
                                })
                                .collect(),
                        )
                    }
                };
                ChainSpec {
                    floors,
                    call_probabilities,
                    policy,
                }
            })
    }

    proptest! {
        #[test]
        fn chain_documents_round_trip(spec in arbitrary_valid_chain_spec()) {
            prop_assume!(spec.validate().is_ok());
            let emitted = emit_payload(&spec);
            let reparsed = parse_payload::<ChainSpec>(&emitted).unwrap();
            prop_assert_eq!(&spec, &reparsed);
            prop_assert_eq!(emit_payload(&reparsed), emitted);
        }
    }
}
