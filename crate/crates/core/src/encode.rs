//! Canonical JSON encoding of values.
//!
//! * integers are JSON numbers, booleans are JSON booleans
//! * atoms (including sentinels) are JSON strings
//! * sets are arrays sorted by the canonical value order
//! * functions are `{"fcn": [[arg, result], ...]}` sorted by argument
//!
//! The tag on functions keeps a set of two-element sets distinguishable from
//! a function graph. Because sets and functions are stored sorted, encoding
//! the same value always yields the same bytes.

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::value::{Fcn, SetV, Value};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot decode value from {json}: {reason}")]
pub struct DecodeError {
    pub json: String,
    pub reason: &'static str,
}

fn bad(json: &Json, reason: &'static str) -> DecodeError {
    DecodeError {
        json: json.to_string(),
        reason,
    }
}

pub fn encode(v: &Value) -> Json {
    match v {
        Value::Int(i) => json!(i),
        Value::Bool(b) => json!(b),
        Value::Atom(a) => Json::String(a.to_string()),
        Value::Set(s) => Json::Array(s.iter().map(encode).collect()),
        Value::Fcn(f) => {
            let pairs = f
                .pairs()
                .iter()
                .map(|(k, x)| Json::Array(vec![encode(k), encode(x)]))
                .collect();
            let mut m = Map::new();
            m.insert("fcn".to_string(), Json::Array(pairs));
            Json::Object(m)
        }
    }
}

pub fn decode(j: &Json) -> Result<Value, DecodeError> {
    match j {
        Json::Number(n) => n
            .as_i64()
            .map(Value::Int)
            .ok_or_else(|| bad(j, "only 64-bit integers are values")),
        Json::Bool(b) => Ok(Value::Bool(*b)),
        Json::String(s) => Ok(Value::atom(s)),
        Json::Array(items) => Ok(Value::Set(
            items.iter().map(decode).collect::<Result<SetV, _>>()?,
        )),
        Json::Object(m) => {
            let pairs = match (m.len(), m.get("fcn")) {
                (1, Some(Json::Array(pairs))) => pairs,
                _ => return Err(bad(j, "objects must have the form {\"fcn\": [[k, v], ...]}")),
            };
            let mut graph = Vec::with_capacity(pairs.len());
            for p in pairs {
                match p {
                    Json::Array(kv) if kv.len() == 2 => {
                        graph.push((decode(&kv[0])?, decode(&kv[1])?));
                    }
                    _ => return Err(bad(p, "function entries are [argument, result] pairs")),
                }
            }
            let f = Fcn::from_pairs(graph);
            if f.len() != pairs.len() {
                return Err(bad(j, "duplicate function argument"));
            }
            Ok(Value::Fcn(f))
        }
        Json::Null => Err(bad(j, "null is not a value")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_value() -> impl Strategy<Value = Value> {
        let leaf = prop_oneof![
            (-50i64..50).prop_map(Value::Int),
            any::<bool>().prop_map(Value::Bool),
            "[a-z]{1,4}".prop_map(|s| Value::atom(&s)),
        ];
        leaf.prop_recursive(3, 24, 4, |inner| {
            prop_oneof![
                prop::collection::vec(inner.clone(), 0..4).prop_map(Value::set),
                prop::collection::vec((inner.clone(), inner), 0..4).prop_map(Value::fcn),
            ]
        })
    }

    proptest! {
        #[test]
        fn encode_decode_is_identity(v in arb_value()) {
            let j = encode(&v);
            prop_assert_eq!(decode(&j).unwrap(), v.clone());
            // canonical: re-encoding gives identical text
            prop_assert_eq!(encode(&decode(&j).unwrap()).to_string(), j.to_string());
        }
    }

    #[test]
    fn layout() {
        let v = Value::set([Value::Int(2), Value::atom("a"), Value::Int(-1)]);
        assert_eq!(encode(&v).to_string(), r#"[-1,2,"a"]"#);
        let f = Value::seq([Value::Bool(true)]);
        assert_eq!(encode(&f).to_string(), r#"{"fcn":[[1,true]]}"#);
    }

    #[test]
    fn rejects_malformed() {
        assert!(decode(&json!(null)).is_err());
        assert!(decode(&json!({"x": 1})).is_err());
        assert!(decode(&json!({"fcn": [[1, 2], [1, 3]]})).is_err());
        assert!(decode(&json!(1.5)).is_err());
    }
}
