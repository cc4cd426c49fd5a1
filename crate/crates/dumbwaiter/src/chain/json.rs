//! JSON wire format for transition kernels:
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "n_floors": 2,
//!   "states": [{"floor": 1, "waiting": "00"}, ...],
//!   "rows": [[[2, "5.0000000000000000e-1"], ...], ...]
//! }
//! ```
//!
//! States appear in canonical enumeration order. Probabilities are decimal
//! strings with 17 significant digits, so parsing an emitted document
//! reproduces every `f64` bit-for-bit.

use serde_json::{json, Value};

use crate::report::format_stat;

use super::{enumerate_states, waiting_mask_from_bits, ChainError, CompositeState, TransitionMatrix};

impl TransitionMatrix {
    pub fn to_json_value(&self) -> Value {
        let states: Vec<Value> = self
            .states()
            .iter()
            .map(|s| {
                json!({
                    "floor": s.floor(),
                    "waiting": s.waiting_bits(self.n_floors()),
                })
            })
            .collect();
        let rows: Vec<Value> = (0..self.dimension())
            .map(|i| {
                Value::Array(
                    self.row(i)
                        .iter()
                        .map(|&(col, p)| json!([col, format_stat(p)]))
                        .collect(),
                )
            })
            .collect();
        json!({
            "schema_version": 1,
            "n_floors": self.n_floors(),
            "states": states,
            "rows": rows,
        })
    }

    pub fn from_json_value(value: &Value) -> Result<Self, ChainError> {
        let bad = |reason: String| ChainError::MalformedMatrixJson { reason };
        let object = value.as_object().ok_or_else(|| bad("not an object".into()))?;
        match object.get("schema_version").and_then(Value::as_u64) {
            Some(1) => {}
            other => return Err(bad(format!("unsupported schema_version {other:?}"))),
        }
        let n_floors = object
            .get("n_floors")
            .and_then(Value::as_u64)
            .ok_or_else(|| bad("missing n_floors".into()))? as usize;
        let expected = enumerate_states(n_floors).map_err(|e| bad(e.to_string()))?;

        let states = object
            .get("states")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing states array".into()))?;
        if states.len() != expected.len() {
            return Err(bad(format!(
                "expected {} states, found {}",
                expected.len(),
                states.len()
            )));
        }
        for (i, entry) in states.iter().enumerate() {
            let floor = entry
                .get("floor")
                .and_then(Value::as_u64)
                .ok_or_else(|| bad(format!("state {i}: missing floor")))?
                as usize;
            let bits = entry
                .get("waiting")
                .and_then(Value::as_str)
                .ok_or_else(|| bad(format!("state {i}: missing waiting mask")))?;
            if bits.len() != n_floors {
                return Err(bad(format!("state {i}: waiting mask has wrong width")));
            }
            let waiting = waiting_mask_from_bits(bits)?;
            let state = CompositeState::new(floor, waiting).map_err(|e| bad(e.to_string()))?;
            if state != expected[i] {
                return Err(bad(format!(
                    "state {i} is {state}, canonical order expects {}",
                    expected[i]
                )));
            }
        }

        let rows_value = object
            .get("rows")
            .and_then(Value::as_array)
            .ok_or_else(|| bad("missing rows array".into()))?;
        if rows_value.len() != expected.len() {
            return Err(bad(format!(
                "expected {} rows, found {}",
                expected.len(),
                rows_value.len()
            )));
        }
        let mut rows = Vec::with_capacity(rows_value.len());
        for (i, row_value) in rows_value.iter().enumerate() {
            let entries = row_value
                .as_array()
                .ok_or_else(|| bad(format!("row {i} is not an array")))?;
            let mut row = Vec::with_capacity(entries.len());
            let mut last_col = None;
            for entry in entries {
                let pair = entry
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| bad(format!("row {i}: entry is not a [column, prob] pair")))?;
                let col = pair[0]
                    .as_u64()
                    .ok_or_else(|| bad(format!("row {i}: column is not an integer")))?
                    as usize;
                if col >= expected.len() {
                    return Err(bad(format!("row {i}: column {col} out of range")));
                }
                if last_col.is_some_and(|prev| prev >= col) {
                    return Err(bad(format!("row {i}: columns not strictly increasing")));
                }
                last_col = Some(col);
                let prob: f64 = pair[1]
                    .as_str()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad(format!("row {i}: probability is not a decimal string")))?;
                if !prob.is_finite() {
                    return Err(bad(format!("row {i}: probability {prob} is not finite")));
                }
                row.push((col, prob));
            }
            rows.push(row);
        }
        Ok(Self {
            n_floors,
            states: expected,
            rows,
        })
    }
}
