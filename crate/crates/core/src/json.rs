//! Serialization helpers writing floats with 17 significant digits.

use serde::ser::{SerializeSeq, Serializer};
use serde::Serialize;
use serde_json::value::RawValue;

fn raw(v: f64) -> Box<RawValue> {
    let text = if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".to_string()
    };
    RawValue::from_string(text).expect("formatted float is valid JSON")
}

pub(crate) fn f17<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    raw(*v).serialize(s)
}

pub(crate) fn f17_pair<S: Serializer>(v: &(f64, f64), s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(2))?;
    seq.serialize_element(&raw(v.0))?;
    seq.serialize_element(&raw(v.1))?;
    seq.end()
}

pub(crate) fn f17_opt_pair<S: Serializer>(v: &Option<(f64, f64)>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(p) => f17_pair(p, s),
        None => s.serialize_none(),
    }
}
